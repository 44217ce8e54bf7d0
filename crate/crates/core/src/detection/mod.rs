//! Single superfluid microdetector.
//!
//! A photon passing a detector ends in one of three pointer outcomes: it
//! passes untouched, it is absorbed and heats the Bose gas above `T_c`, or it
//! scatters and deposits part of its energy. This module assigns the Born
//! weights of those outcomes, samples one, computes the post-absorption
//! temperature and builds the block-diagonal measurement mixture.

pub mod bose;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::rng_from_seed;
use crate::units::Units;
use crate::wavepacket::GaussianPulseSpec;
use crate::Vec3;

/// Tolerance on `p0 + pT + p_sc = 1`.
pub const SIMPLEX_TOLERANCE: f64 = 1e-12;

/// Required separation between decoherence and transit times.
pub const TIMESCALE_MARGIN: f64 = 0.1;

/// Relative tolerance of the post-absorption temperature root solve.
pub const TEMPERATURE_RTOL: f64 = 1e-13;

pub type DetectorId = String;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DetectionError {
    #[error("invalid detector `{id}`: {reason}")]
    InvalidDetector { id: DetectorId, reason: String },
    #[error("detector `{0}` is not superfluid (requires T < T_c)")]
    NotSuperfluid(DetectorId),
    #[error("outcome probabilities out of range: p0 = {p0}, pT = {p_t}, p_sc = {p_sc}")]
    InvalidProbabilities { p0: f64, p_t: f64, p_sc: f64 },
    #[error("photon energy must be positive, got {0}")]
    NonPositiveEnergy(f64),
    #[error(
        "absorption leaves detector `{id}` at T' = {temperature} <= T_c = {critical}; photon energy too small to drive the transition"
    )]
    InsufficientHeating {
        id: DetectorId,
        temperature: f64,
        critical: f64,
    },
    #[error("temperature root solve did not converge; last bracket [{lo}, {hi}]")]
    NonConvergent { lo: f64, hi: f64 },
}

pub type Result<T> = std::result::Result<T, DetectionError>;

/// Phenomenological absorption amplitude model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AbsorptionModel {
    /// Probabilities given directly; `p0` defaults to `1 - pT - p_sc`.
    Fixed {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        p0: Option<f64>,
        #[serde(rename = "pT")]
        p_t: f64,
        p_sc: f64,
    },
    /// Probabilities scaling with the overlap parameter `Δ₀³ V_B`.
    Geometric { eta: f64, f_sc: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorSpec {
    pub id: DetectorId,
    pub position: Vec3,
    #[serde(rename = "V_B")]
    pub volume: f64,
    #[serde(rename = "N_B")]
    pub n_bosons: u64,
    #[serde(rename = "T")]
    pub temperature: f64,
    #[serde(rename = "T_c")]
    pub critical_temperature: f64,
    pub absorption: AbsorptionModel,
}

impl DetectorSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| {
            Err(DetectionError::InvalidDetector {
                id: self.id.clone(),
                reason,
            })
        };
        if !(self.volume > 0.0 && self.volume.is_finite()) {
            return fail(format!("V_B must be positive, got {}", self.volume));
        }
        if self.n_bosons < 1 {
            return fail("N_B must be at least 1".into());
        }
        if !self.position.iter().all(|x| x.is_finite()) {
            return fail("position must be finite".into());
        }
        if !(self.temperature > 0.0 && self.temperature < self.critical_temperature) {
            return Err(DetectionError::NotSuperfluid(self.id.clone()));
        }
        match self.absorption {
            AbsorptionModel::Geometric { eta, f_sc } => {
                if !(0.0..=1.0).contains(&eta) {
                    return fail(format!("eta must lie in [0, 1], got {eta}"));
                }
                if !(0.0..1.0).contains(&f_sc) {
                    return fail(format!("f_sc must lie in [0, 1), got {f_sc}"));
                }
            }
            AbsorptionModel::Fixed { .. } => {}
        }
        Ok(())
    }

    /// Boson density `ρ_B = N_B / V_B`.
    pub fn density(&self) -> f64 {
        self.n_bosons as f64 / self.volume
    }

    pub fn internal_energy(&self, temperature: f64) -> f64 {
        bose::internal_energy(temperature, self.critical_temperature, self.n_bosons as f64)
    }
}

/// Born weights `(p0, pT, p_sc)` of the pass, absorb and scatter outcomes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeProbabilities {
    pub p0: f64,
    #[serde(rename = "pT")]
    pub p_t: f64,
    pub p_sc: f64,
}

impl OutcomeProbabilities {
    pub fn new(p0: f64, p_t: f64, p_sc: f64) -> Result<Self> {
        let probs = Self { p0, p_t, p_sc };
        probs.validate()?;
        Ok(probs)
    }

    pub fn validate(&self) -> Result<()> {
        let in_range = |p: f64| (0.0..=1.0).contains(&p);
        let sum = self.p0 + self.p_t + self.p_sc;
        if in_range(self.p0)
            && in_range(self.p_t)
            && in_range(self.p_sc)
            && (sum - 1.0).abs() <= SIMPLEX_TOLERANCE
        {
            Ok(())
        } else {
            Err(DetectionError::InvalidProbabilities {
                p0: self.p0,
                p_t: self.p_t,
                p_sc: self.p_sc,
            })
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.p0, self.p_t, self.p_sc]
    }

    pub fn get(&self, kind: OutcomeKind) -> f64 {
        match kind {
            OutcomeKind::Pass => self.p0,
            OutcomeKind::Absorb => self.p_t,
            OutcomeKind::Scatter => self.p_sc,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeKind {
    Pass,
    Absorb,
    Scatter,
}

impl OutcomeKind {
    pub const ALL: [OutcomeKind; 3] = [OutcomeKind::Pass, OutcomeKind::Absorb, OutcomeKind::Scatter];

    pub fn as_str(self) -> &'static str {
        match self {
            OutcomeKind::Pass => "pass",
            OutcomeKind::Absorb => "absorb",
            OutcomeKind::Scatter => "scatter",
        }
    }

    pub fn index(self) -> usize {
        match self {
            OutcomeKind::Pass => 0,
            OutcomeKind::Absorb => 1,
            OutcomeKind::Scatter => 2,
        }
    }
}

impl std::fmt::Display for OutcomeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Sampled pointer outcome of one detector pass.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionOutcome {
    pub kind: OutcomeKind,
    pub post_temperature: f64,
}

impl DetectionOutcome {
    /// The untouched superfluid outcome.
    pub fn pass(det: &DetectorSpec) -> Self {
        Self {
            kind: OutcomeKind::Pass,
            post_temperature: det.temperature,
        }
    }
}

/// Overlap parameter `min(1, Δ₀³ V_B)`.
pub fn coupling_parameter(pulse: &GaussianPulseSpec, det: &DetectorSpec) -> f64 {
    (pulse.delta0.powi(3) * det.volume).min(1.0)
}

pub fn outcome_probabilities(
    pulse: &GaussianPulseSpec,
    det: &DetectorSpec,
) -> Result<OutcomeProbabilities> {
    det.validate()?;
    match det.absorption {
        AbsorptionModel::Fixed { p0, p_t, p_sc } => {
            let p0 = p0.unwrap_or(1.0 - p_t - p_sc);
            OutcomeProbabilities::new(p0, p_t, p_sc)
        }
        AbsorptionModel::Geometric { eta, f_sc } => {
            let x = coupling_parameter(pulse, det);
            let p_t = eta * x;
            let p_sc = f_sc * (1.0 - p_t) * x;
            OutcomeProbabilities::new(1.0 - p_t - p_sc, p_t, p_sc)
        }
    }
}

/// Inverse-CDF draw of an outcome kind from a uniform variate `u ∈ [0, 1)`.
pub fn select_outcome(probs: &OutcomeProbabilities, u: f64) -> OutcomeKind {
    if u < probs.p0 {
        OutcomeKind::Pass
    } else if u < probs.p0 + probs.p_t {
        OutcomeKind::Absorb
    } else {
        OutcomeKind::Scatter
    }
}

/// Samples one pointer outcome. A pure function of its arguments.
///
/// Absorption must drive the detector normal; an absorbed photon that
/// cannot heat the gas above `T_c` is reported as an error. A scatter
/// deposits a uniformly drawn fraction of the photon energy.
pub fn collapse_single(
    probs: &OutcomeProbabilities,
    det: &DetectorSpec,
    photon_energy: f64,
    seed: u64,
) -> Result<DetectionOutcome> {
    probs.validate()?;
    if !(photon_energy > 0.0) {
        return Err(DetectionError::NonPositiveEnergy(photon_energy));
    }
    let mut rng = rng_from_seed(seed);
    let kind = select_outcome(probs, rng.random::<f64>());
    outcome_for_kind(kind, det, photon_energy, || rng.random::<f64>())
}

/// Repeated single-detector sampling with the absorption temperature
/// solved once. `sample(seed)` equals `collapse_single(.., seed)`.
#[derive(Clone, Debug)]
pub struct OutcomeSampler {
    probs: OutcomeProbabilities,
    det: DetectorSpec,
    photon_energy: f64,
    absorbed: Option<f64>,
}

impl OutcomeSampler {
    pub fn new(probs: OutcomeProbabilities, det: DetectorSpec, photon_energy: f64) -> Result<Self> {
        probs.validate()?;
        if !(photon_energy > 0.0) {
            return Err(DetectionError::NonPositiveEnergy(photon_energy));
        }
        let absorbed = if probs.p_t > 0.0 {
            Some(outcome_for_kind(OutcomeKind::Absorb, &det, photon_energy, || 0.0)?.post_temperature)
        } else {
            None
        };
        Ok(Self {
            probs,
            det,
            photon_energy,
            absorbed,
        })
    }

    pub fn probabilities(&self) -> &OutcomeProbabilities {
        &self.probs
    }

    pub fn sample(&self, seed: u64) -> Result<DetectionOutcome> {
        let mut rng = rng_from_seed(seed);
        let kind = select_outcome(&self.probs, rng.random::<f64>());
        match (kind, self.absorbed) {
            (OutcomeKind::Absorb, Some(post_temperature)) => Ok(DetectionOutcome {
                kind,
                post_temperature,
            }),
            _ => outcome_for_kind(kind, &self.det, self.photon_energy, || rng.random::<f64>()),
        }
    }
}

pub(crate) fn outcome_for_kind(
    kind: OutcomeKind,
    det: &DetectorSpec,
    photon_energy: f64,
    mut deposit_fraction: impl FnMut() -> f64,
) -> Result<DetectionOutcome> {
    let post_temperature = match kind {
        OutcomeKind::Pass => det.temperature,
        OutcomeKind::Absorb => {
            let heated = post_absorption_temperature(det, photon_energy)?;
            if !heated.exceeds_critical {
                return Err(DetectionError::InsufficientHeating {
                    id: det.id.clone(),
                    temperature: heated.temperature,
                    critical: det.critical_temperature,
                });
            }
            heated.temperature
        }
        OutcomeKind::Scatter => {
            post_absorption_temperature(det, deposit_fraction() * photon_energy)?.temperature
        }
    };
    Ok(DetectionOutcome {
        kind,
        post_temperature,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PostAbsorption {
    pub temperature: f64,
    /// False when the deposited energy leaves the gas at or below `T_c`.
    pub exceeds_critical: bool,
}

/// Equilibrium temperature after depositing `energy` into the detector gas:
/// solves `U(T') = U(T) + energy` by bracketed root finding.
pub fn post_absorption_temperature(det: &DetectorSpec, energy: f64) -> Result<PostAbsorption> {
    if !(energy >= 0.0 && energy.is_finite()) {
        return Err(DetectionError::NonPositiveEnergy(energy));
    }
    let t0 = det.temperature;
    let tc = det.critical_temperature;
    let finish = |temperature: f64| {
        Ok(PostAbsorption {
            temperature,
            exceeds_critical: temperature > tc,
        })
    };
    if energy == 0.0 {
        return finish(t0);
    }
    let target = det.internal_energy(t0) + energy;
    let mut lo = t0;
    let mut hi = t0.max(tc);
    let mut doublings = 0;
    while det.internal_energy(hi) < target {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 1100 || !hi.is_finite() {
            return Err(DetectionError::NonConvergent { lo, hi });
        }
    }
    match bose::illinois(|t| det.internal_energy(t) - target, lo, hi, TEMPERATURE_RTOL) {
        Some(t) => finish(t),
        None => Err(DetectionError::NonConvergent { lo, hi }),
    }
}

/// One weighted, labelled block of a block-diagonal density matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixedComponent<L> {
    pub weight: f64,
    pub label: L,
}

/// Incoherent mixture of macroscopically distinct branches; cross terms are
/// absent by construction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixedState<L> {
    pub components: Vec<MixedComponent<L>>,
}

impl<L> MixedState<L> {
    /// Builds a mixture from `(weight, label)` pairs, dropping zero weights.
    pub fn from_weights(pairs: impl IntoIterator<Item = (f64, L)>) -> Self {
        Self {
            components: pairs
                .into_iter()
                .filter(|(w, _)| *w > 0.0)
                .map(|(weight, label)| MixedComponent { weight, label })
                .collect(),
        }
    }

    pub fn trace(&self) -> f64 {
        self.components.iter().map(|c| c.weight).sum()
    }

    pub fn purity(&self) -> f64 {
        self.components.iter().map(|c| c.weight * c.weight).sum()
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

/// Measurement mixture with weights `(p0, pT, p_sc)` attached to the given
/// pass / absorb / scatter labels.
pub fn measurement_density_matrix<L>(
    probs: &OutcomeProbabilities,
    labels: [L; 3],
) -> Result<MixedState<L>> {
    probs.validate()?;
    let [pass, absorb, scatter] = labels;
    Ok(MixedState::from_weights([
        (probs.p0, pass),
        (probs.p_t, absorb),
        (probs.p_sc, scatter),
    ]))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TimescaleCheck {
    pub decoherence_time_s: f64,
    pub transit_time_s: f64,
    pub pass: bool,
}

impl TimescaleCheck {
    pub fn evaluate(decoherence_time_s: f64, transit_time_s: f64) -> Self {
        Self {
            decoherence_time_s,
            transit_time_s,
            pass: decoherence_time_s < TIMESCALE_MARGIN * transit_time_s,
        }
    }
}

/// Photon transit time `V_B^{1/3} / c`, in seconds.
pub fn transit_time_seconds(det: &DetectorSpec, units: &Units) -> f64 {
    units.internal_time_to_seconds(det.volume.cbrt())
}

/// Checks that decoherence completes well inside the photon transit time.
pub fn validate_timescales(
    det: &DetectorSpec,
    decoherence_time_s: f64,
    units: &Units,
) -> TimescaleCheck {
    TimescaleCheck::evaluate(decoherence_time_s, transit_time_seconds(det, units))
}
