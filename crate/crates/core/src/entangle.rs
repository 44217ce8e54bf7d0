//! Two-photon states, cat-state branch bookkeeping and EPR statistics.
//!
//! A two-photon state `Σ D[α₁][α₂] |k_{1,α₁}, k_{2,α₂}⟩` is routed so that
//! each of the four `(slot, polarization)` channels points at its own
//! detector. By linearity each nonzero term of `D` evolves independently and
//! lands in one macroscopic pointer configuration; the resulting
//! superposition of configurations is the [`CatState`].

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::causal::{self, CausalError, CausalStatus, SpacetimeEvent};
use crate::detection::{
    self, outcome_for_kind, outcome_probabilities, DetectionError, DetectionOutcome,
    DetectorId, DetectorSpec, MixedState, OutcomeKind, OutcomeProbabilities,
};
use crate::rng::{derive_seed, rng_from_seed};
use crate::wavepacket::{GaussianPulseSpec, Polarization, WaveVector, WavepacketError};

/// Tolerance on `Σ|D|² = 1` and on branch normalization.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// Minimum separation of any two channel wavevectors, in units of `delta0`.
pub const DISTINCTNESS_WIDTHS: f64 = 6.0;

/// `D[α₁ - 1][α₂ - 1]`.
pub type CoefficientMatrix = [[Complex64; 2]; 2];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EntangleError {
    #[error("coefficient matrix is not normalized: sum |D|^2 = {0}")]
    UnnormalizedCoefficients(f64),
    #[error("wavevectors of channels {a} and {b} are only {separation} apart (need >= {required})")]
    IndistinctPulses {
        a: String,
        b: String,
        separation: f64,
        required: f64,
    },
    #[error("detector `{0}` is targeted by more than one photon channel")]
    DuplicateDetector(DetectorId),
    #[error("no detector spec for id `{0}`")]
    UnknownDetector(DetectorId),
    #[error("photon channel {0} is missing")]
    MissingChannel(String),
    #[error("absorption events at `{a}` and `{b}` are {status:?}; collapse must go through the causal scheduler")]
    CausallyConnected {
        a: DetectorId,
        b: DetectorId,
        status: CausalStatus,
    },
    #[error("no branch with nonzero amplitude was realized")]
    EmptyBranchSet,
    #[error("cat state has already collapsed")]
    AlreadyCollapsed,
    #[error("branch index {index} out of range for {count} branches")]
    NoSuchBranch { index: usize, count: usize },
    #[error(transparent)]
    Detection(#[from] DetectionError),
    #[error(transparent)]
    Wavepacket(#[from] WavepacketError),
    #[error(transparent)]
    Causal(#[from] CausalError),
}

pub type Result<T> = std::result::Result<T, EntangleError>;

/// Photon slot of a two-photon state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum PhotonSlot {
    First,
    Second,
}

impl PhotonSlot {
    pub const BOTH: [PhotonSlot; 2] = [PhotonSlot::First, PhotonSlot::Second];

    pub fn index(self) -> u8 {
        match self {
            PhotonSlot::First => 1,
            PhotonSlot::Second => 2,
        }
    }

    fn slot(self) -> usize {
        usize::from(self.index() - 1)
    }
}

impl TryFrom<u8> for PhotonSlot {
    type Error = String;

    fn try_from(value: u8) -> std::result::Result<Self, Self::Error> {
        match value {
            1 => Ok(PhotonSlot::First),
            2 => Ok(PhotonSlot::Second),
            other => Err(format!("photon slot must be 1 or 2, got {other}")),
        }
    }
}

impl From<PhotonSlot> for u8 {
    fn from(s: PhotonSlot) -> u8 {
        s.index()
    }
}

/// Where the `(slot, polarization)` channel points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhotonRoute {
    pub k: WaveVector,
    pub detector_id: DetectorId,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwoPhotonSpec {
    pub d: CoefficientMatrix,
    /// Indexed `[slot][polarization]`.
    pub routes: [[PhotonRoute; 2]; 2],
    pub delta0: f64,
}

fn channel_name(slot: PhotonSlot, alpha: Polarization) -> String {
    format!("(photon {}, polarization {})", slot.index(), alpha.index())
}

impl TwoPhotonSpec {
    pub fn new(d: CoefficientMatrix, routes: [[PhotonRoute; 2]; 2], delta0: f64) -> Result<Self> {
        let spec = Self { d, routes, delta0 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn coefficient(&self, a1: Polarization, a2: Polarization) -> Complex64 {
        self.d[a1.slot()][a2.slot()]
    }

    pub fn route(&self, slot: PhotonSlot, alpha: Polarization) -> &PhotonRoute {
        &self.routes[slot.slot()][alpha.slot()]
    }

    pub fn pulse(&self, slot: PhotonSlot, alpha: Polarization) -> GaussianPulseSpec {
        GaussianPulseSpec {
            k0: self.route(slot, alpha).k,
            delta0: self.delta0,
            alpha0: alpha,
        }
    }

    pub fn channels(&self) -> impl Iterator<Item = (PhotonSlot, Polarization, &PhotonRoute)> {
        PhotonSlot::BOTH.into_iter().flat_map(move |slot| {
            Polarization::BOTH
                .into_iter()
                .map(move |alpha| (slot, alpha, self.route(slot, alpha)))
        })
    }

    /// Channel routed to `id`, if any.
    pub fn channel_for_detector(&self, id: &str) -> Option<(PhotonSlot, Polarization)> {
        self.channels()
            .find(|(_, _, r)| r.detector_id == id)
            .map(|(s, a, _)| (s, a))
    }

    pub fn validate(&self) -> Result<()> {
        let norm: f64 = self.d.iter().flatten().map(|c| c.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(EntangleError::UnnormalizedCoefficients(norm));
        }
        for (slot, alpha, _) in self.channels() {
            self.pulse(slot, alpha).validate()?;
        }
        let channels: Vec<_> = self.channels().collect();
        let required = DISTINCTNESS_WIDTHS * self.delta0;
        for (i, (sa, aa, ra)) in channels.iter().enumerate() {
            for (sb, ab, rb) in &channels[i + 1..] {
                let separation = ra.k.distance(&rb.k);
                if separation < required {
                    return Err(EntangleError::IndistinctPulses {
                        a: channel_name(*sa, *aa),
                        b: channel_name(*sb, *ab),
                        separation,
                        required,
                    });
                }
                if ra.detector_id == rb.detector_id {
                    return Err(EntangleError::DuplicateDetector(ra.detector_id.clone()));
                }
            }
        }
        Ok(())
    }
}

/// `D^A[α₁][α₂] = (1/√2) (-1)^{α₂} δ_{α₁, ᾱ₂}`.
pub fn antisymmetric_coefficients() -> CoefficientMatrix {
    let mut d = [[Complex64::new(0.0, 0.0); 2]; 2];
    for a1 in Polarization::BOTH {
        for a2 in Polarization::BOTH {
            if a1 == a2.bar() {
                let sign = if a2.index() % 2 == 0 { 1.0 } else { -1.0 };
                d[a1.slot()][a2.slot()] = Complex64::new(sign * std::f64::consts::FRAC_1_SQRT_2, 0.0);
            }
        }
    }
    d
}

/// Joint outcome distribution of two independent detector passes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct JointDistribution {
    /// `cells[i][j]`: first detector outcome `i`, second `j`, in
    /// pass / absorb / scatter order.
    pub cells: [[f64; 3]; 3],
}

impl JointDistribution {
    pub fn get(&self, first: OutcomeKind, second: OutcomeKind) -> f64 {
        self.cells[first.index()][second.index()]
    }

    pub fn first_marginal(&self) -> [f64; 3] {
        std::array::from_fn(|i| self.cells[i].iter().sum())
    }

    pub fn second_marginal(&self) -> [f64; 3] {
        std::array::from_fn(|j| self.cells.iter().map(|row| row[j]).sum())
    }
}

/// Outer product of two outcome triples.
pub fn product_joint_probabilities(
    p1: &OutcomeProbabilities,
    p2: &OutcomeProbabilities,
) -> Result<JointDistribution> {
    p1.validate()?;
    p2.validate()?;
    let (a, b) = (p1.as_array(), p2.as_array());
    Ok(JointDistribution {
        cells: std::array::from_fn(|i| std::array::from_fn(|j| a[i] * b[j])),
    })
}

/// How per-term pointer outcomes are chosen when forming a cat state.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conditioning {
    /// Sample every detector independently from its Born weights.
    #[default]
    None,
    /// Post-select on both photons being absorbed.
    TwoDetections,
    /// Post-select on both photons passing untouched.
    AllPass,
}

/// One `(α₁, α₂)` term contributing to a branch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TermContribution {
    pub alpha1: Polarization,
    pub alpha2: Polarization,
    pub amplitude: Complex64,
}

/// A macroscopic pointer configuration of all detectors.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchRecord {
    pub amplitude: Complex64,
    pub outcomes: BTreeMap<DetectorId, DetectionOutcome>,
    /// Polarization of the photon that interacted with each non-passing detector.
    pub polarizations: BTreeMap<DetectorId, Polarization>,
    /// Photons still present in the field (passed or scattered).
    pub escaped_photons: usize,
    pub terms: Vec<TermContribution>,
}

impl BranchRecord {
    pub fn fired(&self) -> Vec<DetectorId> {
        self.outcomes
            .iter()
            .filter(|(_, o)| o.kind == OutcomeKind::Absorb)
            .map(|(id, _)| id.clone())
            .collect()
    }

    fn macroscopic_key(&self) -> (Vec<(DetectorId, OutcomeKind)>, usize) {
        (
            self.outcomes
                .iter()
                .map(|(id, o)| (id.clone(), o.kind))
                .collect(),
            self.escaped_photons,
        )
    }

    pub fn label(&self, branch: usize) -> BranchLabel {
        BranchLabel {
            branch,
            fired: self.fired(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BranchLabel {
    pub branch: usize,
    pub fired: Vec<DetectorId>,
}

/// Superposition of macroscopic detector configurations.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CatState {
    pub branches: Vec<BranchRecord>,
    pub collapsed: bool,
}

impl CatState {
    pub fn norm_sqr(&self) -> f64 {
        self.branches.iter().map(|b| b.amplitude.norm_sqr()).sum()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.branches.iter().map(|b| b.amplitude.norm_sqr()).collect()
    }

    pub fn amplitudes(&self) -> Vec<Complex64> {
        self.branches.iter().map(|b| b.amplitude).collect()
    }

    pub fn is_cat(&self) -> bool {
        !self.collapsed && self.branches.len() > 1
    }
}

/// Pointer outcomes of the two detectors hit by term `(α₁, α₂)`, sampled as
/// for a product state. Channels not hit by the term are not included.
pub fn sample_term_outcomes(
    spec: &TwoPhotonSpec,
    detectors: &BTreeMap<DetectorId, DetectorSpec>,
    term: (Polarization, Polarization),
    conditioning: Conditioning,
    seed: u64,
) -> Result<[(DetectorId, DetectionOutcome); 2]> {
    let (a1, a2) = term;
    let mut out = Vec::with_capacity(2);
    for (slot, alpha) in [(PhotonSlot::First, a1), (PhotonSlot::Second, a2)] {
        let route = spec.route(slot, alpha);
        let det = detectors
            .get(&route.detector_id)
            .ok_or_else(|| EntangleError::UnknownDetector(route.detector_id.clone()))?;
        let pulse = spec.pulse(slot, alpha);
        let energy = pulse.k0.norm();
        let sub_seed = channel_seed(seed, term, slot);
        let outcome = match conditioning {
            Conditioning::None => {
                let probs = outcome_probabilities(&pulse, det)?;
                detection::collapse_single(&probs, det, energy, sub_seed)?
            }
            Conditioning::TwoDetections => {
                outcome_for_kind(OutcomeKind::Absorb, det, energy, || 0.0)?
            }
            Conditioning::AllPass => DetectionOutcome::pass(det),
        };
        out.push((route.detector_id.clone(), outcome));
    }
    let second = out.pop().expect("two outcomes");
    let first = out.pop().expect("two outcomes");
    Ok([first, second])
}

/// Seed used for the detector hit by `slot` in term `(α₁, α₂)`.
pub fn channel_seed(seed: u64, term: (Polarization, Polarization), slot: PhotonSlot) -> u64 {
    let (a1, a2) = term;
    let tag = (a1.slot() * 2 + a2.slot()) * 2 + slot.slot();
    derive_seed(seed, tag as u64)
}

/// Forms the cat state: every nonzero term of `D` samples its own pointer
/// outcome and contributes a branch with amplitude `D[α₁][α₂]`.
///
/// Terms whose macroscopic labels coincide carry orthogonal photon-field
/// states, so they merge into one record whose weight is the sum of the
/// contributing weights.
pub fn evolve_entangled(
    spec: &TwoPhotonSpec,
    detectors: &[DetectorSpec],
    conditioning: Conditioning,
    seed: u64,
) -> Result<CatState> {
    spec.validate()?;
    let by_id = index_detectors(spec, detectors)?;
    ensure_spacelike(spec, &by_id)?;

    let mut branches: Vec<BranchRecord> = Vec::new();
    for a1 in Polarization::BOTH {
        for a2 in Polarization::BOTH {
            let amplitude = spec.coefficient(a1, a2);
            if amplitude.norm_sqr() == 0.0 {
                continue;
            }
            let hits = sample_term_outcomes(spec, &by_id, (a1, a2), conditioning, seed)?;
            let mut outcomes: BTreeMap<DetectorId, DetectionOutcome> = spec
                .channels()
                .map(|(_, _, r)| (r.detector_id.clone(), DetectionOutcome::pass(&by_id[&r.detector_id])))
                .collect();
            let mut polarizations = BTreeMap::new();
            let mut escaped = 0;
            for ((id, outcome), alpha) in hits.into_iter().zip([a1, a2]) {
                if outcome.kind != OutcomeKind::Pass {
                    polarizations.insert(id.clone(), alpha);
                }
                if outcome.kind != OutcomeKind::Absorb {
                    escaped += 1;
                }
                outcomes.insert(id, outcome);
            }
            let record = BranchRecord {
                amplitude,
                outcomes,
                polarizations,
                escaped_photons: escaped,
                terms: vec![TermContribution {
                    alpha1: a1,
                    alpha2: a2,
                    amplitude,
                }],
            };
            merge_branch(&mut branches, record);
        }
    }

    let total: f64 = branches.iter().map(|b| b.amplitude.norm_sqr()).sum();
    if branches.is_empty() || total == 0.0 {
        return Err(EntangleError::EmptyBranchSet);
    }
    let scale = total.sqrt().recip();
    for b in &mut branches {
        b.amplitude *= scale;
    }
    Ok(CatState {
        branches,
        collapsed: false,
    })
}

fn merge_branch(branches: &mut Vec<BranchRecord>, record: BranchRecord) {
    let key = record.macroscopic_key();
    if let Some(existing) = branches.iter_mut().find(|b| b.macroscopic_key() == key) {
        let weight = existing.amplitude.norm_sqr() + record.amplitude.norm_sqr();
        let phase = if existing.amplitude.norm() > 0.0 {
            existing.amplitude / existing.amplitude.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        existing.amplitude = phase * weight.sqrt();
        existing.terms.extend(record.terms);
    } else {
        branches.push(record);
    }
}

fn index_detectors(
    spec: &TwoPhotonSpec,
    detectors: &[DetectorSpec],
) -> Result<BTreeMap<DetectorId, DetectorSpec>> {
    let by_id: BTreeMap<DetectorId, DetectorSpec> = detectors
        .iter()
        .map(|d| (d.id.clone(), d.clone()))
        .collect();
    for (_, _, route) in spec.channels() {
        let det = by_id
            .get(&route.detector_id)
            .ok_or_else(|| EntangleError::UnknownDetector(route.detector_id.clone()))?;
        det.validate()?;
    }
    Ok(by_id)
}

/// Absorption events of every channel at its detector, in channel order.
pub fn absorption_events(
    spec: &TwoPhotonSpec,
    detectors: &BTreeMap<DetectorId, DetectorSpec>,
) -> Result<Vec<(DetectorId, SpacetimeEvent)>> {
    spec.channels()
        .map(|(slot, alpha, route)| {
            let det = detectors
                .get(&route.detector_id)
                .ok_or_else(|| EntangleError::UnknownDetector(route.detector_id.clone()))?;
            let event = causal::absorption_event(&spec.pulse(slot, alpha), det)?;
            Ok((route.detector_id.clone(), event))
        })
        .collect()
}

fn ensure_spacelike(
    spec: &TwoPhotonSpec,
    detectors: &BTreeMap<DetectorId, DetectorSpec>,
) -> Result<()> {
    let events = absorption_events(spec, detectors)?;
    if let Some((a, b, status)) = causal::first_non_spacelike(&events) {
        return Err(EntangleError::CausallyConnected { a, b, status });
    }
    Ok(())
}

/// Definite outcome of a collapsed cat state.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JointOutcome {
    pub branch: usize,
    pub outcomes: BTreeMap<DetectorId, DetectionOutcome>,
    pub polarizations: BTreeMap<DetectorId, Polarization>,
}

impl JointOutcome {
    pub fn fired(&self) -> Vec<DetectorId> {
        self.outcomes
            .iter()
            .filter(|(_, o)| o.kind == OutcomeKind::Absorb)
            .map(|(id, _)| id.clone())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CatCollapse {
    pub joint: JointOutcome,
    /// Diagonal mixture with weights `|amplitude|²`.
    pub mixture: MixedState<BranchLabel>,
    /// The cat after collapse: one branch with unit amplitude.
    pub collapsed: CatState,
}

/// Decoheres the cat to its diagonal mixture and samples one branch by
/// its weight.
pub fn collapse_cat(cat: &CatState, seed: u64) -> Result<CatCollapse> {
    if cat.collapsed {
        return Err(EntangleError::AlreadyCollapsed);
    }
    let u: f64 = rng_from_seed(seed).random();
    let weights = cat.weights();
    let total: f64 = weights.iter().sum();
    let mut acc = 0.0;
    let mut chosen = weights.len() - 1;
    for (i, w) in weights.iter().enumerate() {
        acc += w / total;
        if u < acc {
            chosen = i;
            break;
        }
    }
    collapse_cat_to(cat, chosen)
}

/// Collapses the cat onto a branch chosen externally (e.g. by the
/// spin–boson verdict).
pub fn collapse_cat_to(cat: &CatState, branch: usize) -> Result<CatCollapse> {
    if cat.collapsed {
        return Err(EntangleError::AlreadyCollapsed);
    }
    let record = cat.branches.get(branch).ok_or(EntangleError::NoSuchBranch {
        index: branch,
        count: cat.branches.len(),
    })?;
    let mixture = MixedState::from_weights(
        cat.branches
            .iter()
            .enumerate()
            .map(|(i, b)| (b.amplitude.norm_sqr(), b.label(i))),
    );
    let joint = JointOutcome {
        branch,
        outcomes: record.outcomes.clone(),
        polarizations: record.polarizations.clone(),
    };
    let mut kept = record.clone();
    kept.amplitude = Complex64::new(1.0, 0.0);
    Ok(CatCollapse {
        joint,
        mixture,
        collapsed: CatState {
            branches: vec![kept],
            collapsed: true,
        },
    })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CorrelationSummary {
    pub runs: usize,
    /// Runs in which exactly two detectors absorbed a photon.
    pub two_detection_runs: usize,
    pub anticorrelated: usize,
    pub same_polarization: usize,
    /// `anticorrelated / two_detection_runs`; absent when no such runs exist.
    pub anticorrelation_fraction: Option<f64>,
    pub same_polarization_rate: Option<f64>,
}

/// Per-run polarization check of the two fired detectors.
pub fn is_anticorrelated(outcome: &JointOutcome) -> Option<bool> {
    let fired = outcome.fired();
    if fired.len() != 2 {
        return None;
    }
    let p1 = outcome.polarizations.get(&fired[0])?;
    let p2 = outcome.polarizations.get(&fired[1])?;
    Some(*p1 == p2.bar())
}

pub fn correlation_statistics(outcomes: &[JointOutcome]) -> CorrelationSummary {
    let mut summary = CorrelationSummary {
        runs: outcomes.len(),
        ..Default::default()
    };
    for outcome in outcomes {
        match is_anticorrelated(outcome) {
            Some(true) => {
                summary.two_detection_runs += 1;
                summary.anticorrelated += 1;
            }
            Some(false) => {
                summary.two_detection_runs += 1;
                summary.same_polarization += 1;
            }
            None => {}
        }
    }
    if summary.two_detection_runs > 0 {
        let n = summary.two_detection_runs as f64;
        summary.anticorrelation_fraction = Some(summary.anticorrelated as f64 / n);
        summary.same_polarization_rate = Some(summary.same_polarization as f64 / n);
    }
    summary
}
