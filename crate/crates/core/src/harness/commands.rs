//! The four `catcollapse` subcommands.
//!
//! Each command reads a config, writes CSV and JSON files below the output
//! directory and returns the list of files written. Data files depend only on
//! the config bytes and the seed.

use std::collections::BTreeMap;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ConfigSource, DetectConfig, EprConfig, SpinBosonConfig, WavepacketConfig};
use super::output::{binomial_half_width, chi_square_test, num, ChiSquareTest, Csv, OutputDir};
use super::HarnessError;
use crate::causal::{run_epr_scenario, timescale_report, CollapseDecision, EprRun, TimescaleReport};
use crate::detection::{outcome_probabilities, OutcomeKind, OutcomeProbabilities, OutcomeSampler};
use crate::entangle::PhotonSlot;
use crate::spinboson::{
    collapse_trajectory, discretize_bath, evolve_adaptive, scan_localization, uniform_grid,
    BathDiscretization, CollapseVerdict, InitialState, ScanProtocol, SpectralFunction,
    SpinBosonError, SpinBosonParams, TrajectoryResult,
};
use crate::wavepacket::{
    build_gaussian_with_normalization, continuum_mean_energy, continuum_normalization, envelope_scan,
    fit_gaussian_profile, mean_energy, MomentumGrid,
};

pub const DEFAULT_DETECT_RUNS: usize = 10_000;
pub const DEFAULT_COLLAPSE_RUNS: usize = 100;

#[derive(Clone, Debug, Default)]
pub struct RunFlags {
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub mode: Option<String>,
}

/// What a command did, for the metadata file.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub seed: u64,
    pub n: Option<usize>,
    pub mode: Option<String>,
    pub files: Vec<String>,
}

fn config_error(src: &ConfigSource, message: impl std::fmt::Display) -> HarnessError {
    HarnessError::Config(src.invalid(message))
}

/// Dimension overruns are budget failures; anything else is a bad config.
fn params_error(src: &ConfigSource, e: SpinBosonError) -> HarnessError {
    match e {
        SpinBosonError::DimensionTooLarge { .. } => e.into(),
        other => config_error(src, other),
    }
}

fn spinboson_params(
    src: &ConfigSource,
    cfg: &SpinBosonConfig,
    hx: f64,
    hz: f64,
    alpha: f64,
) -> Result<SpinBosonParams, HarnessError> {
    let bath = bath_for(cfg, alpha).map_err(|e| config_error(src, e))?;
    let params = SpinBosonParams {
        h: [hx, 0.0, hz],
        bath,
        n_max: cfg.n_max,
    };
    params
        .validate(cfg.cutoff().max_dimension)
        .map_err(|e| params_error(src, e))?;
    Ok(params)
}

fn require_runs(n: usize) -> Result<usize, HarnessError> {
    if n == 0 {
        return Err(HarnessError::Invalid("--n must be at least 1".into()));
    }
    Ok(n)
}

#[derive(Clone, Debug, Serialize)]
struct EnvelopeFitRow {
    t: f64,
    expected_center: f64,
    fitted_center: f64,
    relative_center_error: f64,
    inverse_width: f64,
    r_squared: f64,
}

#[derive(Clone, Debug, Serialize)]
struct WavepacketReport {
    name: Option<String>,
    dk: f64,
    nodes: usize,
    norm: f64,
    normalization_discrete: f64,
    normalization_continuum: f64,
    normalization_relative_error: f64,
    mean_energy: f64,
    mean_energy_continuum: f64,
    energy_correction: f64,
    energy_correction_continuum: f64,
    energy_correction_relative_error: f64,
    envelope_fits: Vec<EnvelopeFitRow>,
}

pub fn cmd_wavepacket(src: &ConfigSource, flags: &RunFlags) -> Result<RunReport, HarnessError> {
    let cfg: WavepacketConfig = src.parse()?;
    cfg.units.to_units().map_err(|e| config_error(src, e))?;
    let spec = cfg.pulse.to_spec().map_err(|e| config_error(src, e))?;
    let seed = flags.seed.unwrap_or(0);
    let dk = cfg.grid.dk.unwrap_or(0.25 * spec.delta0);
    let grid = MomentumGrid::for_pulse(&spec, dk)?;
    let (state, normalization) = build_gaussian_with_normalization(&spec, &grid)?;
    let continuum = continuum_normalization(spec.delta0, &grid);
    let energy = mean_energy(&state)?;
    let energy_oracle = continuum_mean_energy(&spec);
    let k0 = spec.k0.norm();

    let axis = spec.k0.unit();
    let half = cfg.scan.half_widths / spec.delta0;
    let points = cfg.scan.points.max(3);
    let mut csv = Csv::new(&src.sha256, seed, "x,y,z,t,re,im,abs");
    let mut fits = Vec::new();
    for &t in &cfg.scan.times {
        let offsets: Vec<f64> = (0..points)
            .map(|i| t - half + 2.0 * half * i as f64 / (points - 1) as f64)
            .collect();
        let rs: Vec<[f64; 3]> = offsets.iter().map(|s| axis.map(|a| a * s)).collect();
        let samples = envelope_scan(&state, &rs, t);
        let mut abs = Vec::with_capacity(samples.len());
        for sample in &samples {
            let [x, y, z] = sample.r;
            abs.push(sample.value.norm());
            csv.row(&[
                num(x),
                num(y),
                num(z),
                num(t),
                num(sample.value.re),
                num(sample.value.im),
                num(sample.value.norm()),
            ]);
        }
        if let Some(fit) = fit_gaussian_profile(&offsets, &abs) {
            fits.push(EnvelopeFitRow {
                t,
                expected_center: t,
                fitted_center: fit.center,
                relative_center_error: if t != 0.0 { (fit.center - t).abs() / t.abs() } else { fit.center.abs() },
                inverse_width: fit.inverse_width,
                r_squared: fit.r_squared,
            });
        }
    }

    let report = WavepacketReport {
        name: cfg.name.clone(),
        dk,
        nodes: grid.len(),
        norm: state.norm_sqr().sqrt(),
        normalization_discrete: normalization,
        normalization_continuum: continuum,
        normalization_relative_error: (normalization - continuum).abs() / continuum,
        mean_energy: energy,
        mean_energy_continuum: energy_oracle,
        energy_correction: energy - k0,
        energy_correction_continuum: energy_oracle - k0,
        energy_correction_relative_error: ((energy - k0) - (energy_oracle - k0)).abs() / (energy_oracle - k0).abs(),
        envelope_fits: fits,
    };
    let mut out = OutputDir::create(&flags.out)?;
    out.csv("envelope.csv", csv)?;
    out.json("wavepacket_report.json", &report)?;
    Ok(RunReport {
        seed,
        n: None,
        mode: None,
        files: out.files,
    })
}

/// Per-outcome statistics of a single-detector ensemble.
#[derive(Clone, Debug, Serialize)]
pub struct EnsembleSummary {
    pub runs: usize,
    pub base_seed: u64,
    pub counts: BTreeMap<String, usize>,
    pub frequencies: BTreeMap<String, f64>,
    pub expected: BTreeMap<String, f64>,
    /// Three-sigma binomial half-widths around the configured probabilities.
    pub half_widths: BTreeMap<String, f64>,
    pub within_three_sigma: bool,
    pub chi_square: ChiSquareTest,
    pub mean_post_temperature_absorb: Option<f64>,
}

impl EnsembleSummary {
    pub fn from_counts(counts: [usize; 3], probs: &OutcomeProbabilities, base_seed: u64) -> Self {
        let runs: usize = counts.iter().sum();
        let expected = probs.as_array();
        let mut summary = EnsembleSummary {
            runs,
            base_seed,
            counts: BTreeMap::new(),
            frequencies: BTreeMap::new(),
            expected: BTreeMap::new(),
            half_widths: BTreeMap::new(),
            within_three_sigma: true,
            chi_square: chi_square_test(&counts, &expected),
            mean_post_temperature_absorb: None,
        };
        for kind in OutcomeKind::ALL {
            let i = kind.index();
            let key = kind.as_str().to_string();
            let freq = counts[i] as f64 / runs as f64;
            let hw = binomial_half_width(expected[i], runs);
            summary.within_three_sigma &= (freq - expected[i]).abs() <= hw;
            summary.counts.insert(key.clone(), counts[i]);
            summary.frequencies.insert(key.clone(), freq);
            summary.expected.insert(key.clone(), expected[i]);
            summary.half_widths.insert(key, hw);
        }
        summary
    }
}

pub fn cmd_detect(src: &ConfigSource, flags: &RunFlags) -> Result<RunReport, HarnessError> {
    let cfg: DetectConfig = src.parse()?;
    cfg.units.to_units().map_err(|e| config_error(src, e))?;
    let pulse = cfg.pulse.to_spec().map_err(|e| config_error(src, e))?;
    cfg.detector.validate().map_err(|e| config_error(src, e))?;
    let n = require_runs(flags.n.or(cfg.n).unwrap_or(DEFAULT_DETECT_RUNS))?;
    let base = flags.seed.or(cfg.seed).unwrap_or(0);
    let probs = outcome_probabilities(&pulse, &cfg.detector)?;
    let sampler = OutcomeSampler::new(probs, cfg.detector.clone(), pulse.k0.norm())?;

    let outcomes = (0..n)
        .into_par_iter()
        .map(|i| sampler.sample(base.wrapping_add(i as u64)))
        .collect::<Result<Vec<_>, _>>()?;

    let mut csv = Csv::new(&src.sha256, base, "run,detector,outcome,post_T");
    let mut counts = [0usize; 3];
    let mut absorbed_t = Vec::new();
    for (i, o) in outcomes.iter().enumerate() {
        counts[o.kind.index()] += 1;
        if o.kind == OutcomeKind::Absorb {
            absorbed_t.push(o.post_temperature);
        }
        csv.row(&[
            i.to_string(),
            cfg.detector.id.clone(),
            o.kind.as_str().to_string(),
            num(o.post_temperature),
        ]);
    }
    let mut summary = EnsembleSummary::from_counts(counts, &probs, base);
    if !absorbed_t.is_empty() {
        summary.mean_post_temperature_absorb = Some(absorbed_t.iter().sum::<f64>() / absorbed_t.len() as f64);
    }
    let mut out = OutputDir::create(&flags.out)?;
    out.csv("detect_outcomes.csv", csv)?;
    out.json("detect_summary.json", &summary)?;
    Ok(RunReport {
        seed: base,
        n: Some(n),
        mode: None,
        files: out.files,
    })
}

#[derive(Clone, Debug, Serialize)]
struct EprSummary {
    name: Option<String>,
    runs: usize,
    base_seed: u64,
    /// Collapsed runs per branch index.
    branch_counts: BTreeMap<usize, usize>,
    branch_frequencies: BTreeMap<usize, f64>,
    /// Three-sigma half-width of an equal split over the collapsed runs.
    branch_half_width: Option<f64>,
    decisions: BTreeMap<String, usize>,
    two_detection_runs: usize,
    anticorrelated: usize,
    same_polarization: usize,
    anticorrelation_fraction: Option<f64>,
    undecided: usize,
    undecided_fraction: f64,
    absorb_absorb: usize,
    absorb_absorb_fraction: f64,
    /// `pT1 pT2` when the pair state has a single nonzero term.
    absorb_absorb_expected: Option<f64>,
    absorb_absorb_half_width: Option<f64>,
    timescales: TimescaleReport,
}

fn decision_kind(d: &CollapseDecision) -> &'static str {
    match d {
        CollapseDecision::Trivial => "trivial",
        CollapseDecision::SpinBoson { .. } => "spin_boson",
        CollapseDecision::Born => "born",
        CollapseDecision::Undecided { .. } => "undecided",
        CollapseDecision::NoContact => "no_contact",
    }
}

fn absorb_count(run: &EprRun) -> usize {
    match &run.collapse {
        Some(c) => c.joint.outcomes.values().filter(|o| o.kind == OutcomeKind::Absorb).count(),
        None => 0,
    }
}

fn opt_bool(x: Option<bool>) -> String {
    x.map(|b| b.to_string()).unwrap_or_default()
}

pub fn cmd_epr(src: &ConfigSource, flags: &RunFlags) -> Result<RunReport, HarnessError> {
    let cfg: EprConfig = src.parse()?;
    let scenario = cfg.scenario().map_err(|e| config_error(src, e))?;
    let n = require_runs(flags.n.unwrap_or(cfg.ensemble.n))?;
    let base = flags.seed.unwrap_or(cfg.ensemble.base_seed);

    let runs = (0..n)
        .into_par_iter()
        .map(|i| run_epr_scenario(&scenario, base.wrapping_add(i as u64)))
        .collect::<Result<Vec<_>, _>>()?;
    let timescales = timescale_report(&scenario)?;

    let mut ensemble = Csv::new(&src.sha256, base, "seed,branch,anticorrelated,undecided");
    let mut results = Csv::new(&src.sha256, base, "run,branch,detector,outcome,polarization");
    let mut branch_counts = BTreeMap::new();
    let mut decisions: BTreeMap<String, usize> = BTreeMap::new();
    let (mut two, mut anti, mut same, mut undecided, mut aa) = (0, 0, 0, 0, 0);
    for (i, run) in runs.iter().enumerate() {
        let branch = run.branch();
        if let Some(b) = branch {
            *branch_counts.entry(b).or_insert(0) += 1;
        }
        *decisions.entry(decision_kind(&run.decision).to_string()).or_insert(0) += 1;
        match run.anticorrelated() {
            Some(true) => {
                two += 1;
                anti += 1;
            }
            Some(false) => {
                two += 1;
                same += 1;
            }
            None => {}
        }
        if run.is_undecided() {
            undecided += 1;
        }
        if absorb_count(run) == 2 {
            aa += 1;
        }
        ensemble.row(&[
            run.seed.to_string(),
            branch.map(|b| b.to_string()).unwrap_or_default(),
            opt_bool(run.anticorrelated()),
            run.is_undecided().to_string(),
        ]);
        if let Some(c) = &run.collapse {
            for (id, o) in &c.joint.outcomes {
                results.row(&[
                    i.to_string(),
                    c.joint.branch.to_string(),
                    id.clone(),
                    o.kind.as_str().to_string(),
                    c.joint.polarizations.get(id).map(|p| p.to_string()).unwrap_or_default(),
                ]);
            }
        }
    }

    let mut timeline = Csv::new(&src.sha256, base, "t,phase,detail");
    for e in &runs[0].timeline {
        timeline.row(&[num(e.t), e.phase.as_str().to_string(), csv_text(&e.detail)]);
    }

    let collapsed: usize = branch_counts.values().sum();
    let absorb_absorb_expected = single_term_absorb_product(&scenario)?;
    let summary = EprSummary {
        name: cfg.name.clone(),
        runs: n,
        base_seed: base,
        branch_frequencies: branch_counts
            .iter()
            .map(|(&b, &c)| (b, c as f64 / collapsed as f64))
            .collect(),
        branch_half_width: (collapsed > 0 && branch_counts.len() == 2).then(|| binomial_half_width(0.5, collapsed)),
        branch_counts,
        decisions,
        two_detection_runs: two,
        anticorrelated: anti,
        same_polarization: same,
        anticorrelation_fraction: (two > 0).then(|| anti as f64 / two as f64),
        undecided,
        undecided_fraction: undecided as f64 / n as f64,
        absorb_absorb: aa,
        absorb_absorb_fraction: aa as f64 / n as f64,
        absorb_absorb_half_width: absorb_absorb_expected.map(|p| binomial_half_width(p, n)),
        absorb_absorb_expected,
        timescales,
    };
    let mut out = OutputDir::create(&flags.out)?;
    out.csv("epr_ensemble.csv", ensemble)?;
    out.csv("epr_results.csv", results)?;
    out.csv("epr_timeline.csv", timeline)?;
    out.json("epr_summary.json", &summary)?;
    Ok(RunReport {
        seed: base,
        n: Some(n),
        mode: None,
        files: out.files,
    })
}

fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn single_term_absorb_product(scenario: &crate::causal::EprScenario) -> Result<Option<f64>, HarnessError> {
    let spec = &scenario.photons;
    let terms: Vec<(usize, usize)> = (0..2)
        .flat_map(|a| (0..2).map(move |b| (a, b)))
        .filter(|&(a, b)| spec.d[a][b].norm_sqr() > 0.0)
        .collect();
    let [(a1, a2)] = terms[..] else {
        return Ok(None);
    };
    let alphas = [crate::wavepacket::Polarization::BOTH[a1], crate::wavepacket::Polarization::BOTH[a2]];
    let mut product = 1.0;
    for (slot, alpha) in PhotonSlot::BOTH.into_iter().zip(alphas) {
        let route = spec.route(slot, alpha);
        let det = scenario
            .detectors
            .iter()
            .find(|d| d.id == route.detector_id)
            .ok_or_else(|| HarnessError::Invalid(format!("unknown detector `{}`", route.detector_id)))?;
        product *= outcome_probabilities(&spec.pulse(slot, alpha), det)?.p_t;
    }
    Ok(Some(product))
}

/// `|⟨+|ρ|-⟩|` of the independent-boson model started from the cat state
/// with the bath in its vacuum.
pub fn pure_dephasing_coherence(bath: &BathDiscretization, t: f64) -> f64 {
    let gamma: f64 = bath
        .modes
        .iter()
        .map(|m| 4.0 * (m.lambda / m.omega).powi(2) * (1.0 - (m.omega * t).cos()))
        .sum();
    0.5 * (-gamma).exp()
}

#[derive(Clone, Debug, Serialize)]
struct TrajectorySummary {
    mode: String,
    dimension: usize,
    n_max: usize,
    substeps: usize,
    max_norm_drift: f64,
    max_relative_energy_drift: f64,
    max_top_occupation: f64,
    min_spin_eigenvalue: f64,
    tail_average: f64,
    verdict: CollapseVerdict,
    /// Largest deviation from the closed-form limit, where one exists.
    oracle_max_deviation: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
struct ScanSummary {
    rows: usize,
    alpha_grid: Vec<f64>,
    mz_tail_avg: Vec<f64>,
    n_max: Vec<usize>,
    max_norm_drift: f64,
    max_relative_energy_drift: f64,
    /// Largest drop of the tail average between successive couplings.
    max_decrease: f64,
}

#[derive(Clone, Debug, Serialize)]
struct CollapseSummary {
    runs: usize,
    base_seed: u64,
    plus: usize,
    minus: usize,
    undecided: usize,
    plus_fraction_decided: Option<f64>,
    half_width: Option<f64>,
    undecided_fraction: f64,
    max_norm_drift: f64,
    max_relative_energy_drift: f64,
}

fn bath_for(cfg: &SpinBosonConfig, alpha: f64) -> Result<BathDiscretization, String> {
    let j = SpectralFunction::new(alpha, cfg.s, cfg.omega_c).map_err(|e| e.to_string())?;
    discretize_bath(&j, cfg.modes, cfg.omega_min).map_err(|e| e.to_string())
}

fn trajectory_csv(src: &ConfigSource, seed: u64, tr: &TrajectoryResult) -> Csv {
    let mut csv = Csv::new(&src.sha256, seed, "t,Mz,coherence,norm,energy");
    for i in 0..tr.t.len() {
        csv.row(&[num(tr.t[i]), num(tr.mz[i]), num(tr.coherence[i]), num(tr.norm[i]), num(tr.energy[i])]);
    }
    csv
}

pub fn cmd_spinboson(src: &ConfigSource, flags: &RunFlags) -> Result<RunReport, HarnessError> {
    let cfg: SpinBosonConfig = src.parse()?;
    cfg.validate_times().map_err(|e| config_error(src, e))?;
    let mode = flags.mode.clone().unwrap_or_else(|| "trajectory".into());
    let seed = flags.seed.or(cfg.seed).unwrap_or(0);
    let grid = uniform_grid(cfg.t_final, cfg.steps);
    let cutoff = cfg.cutoff();
    let mut out = OutputDir::create(&flags.out)?;
    let mut n_runs = None;

    match mode.as_str() {
        "trajectory" | "evolve" | "rabi" | "dephasing" => {
            let (hx, alpha) = match mode.as_str() {
                "rabi" => (cfg.hx, 0.0),
                "dephasing" => (0.0, cfg.alpha),
                _ => (cfg.hx, cfg.alpha),
            };
            let hz = if mode == "trajectory" || mode == "evolve" { cfg.hz } else { 0.0 };
            let params = spinboson_params(src, &cfg, hx, hz, alpha)?;
            let initial = match (mode.as_str(), cfg.initial.as_deref()) {
                ("dephasing", _) | (_, Some("cat")) => InitialState::cat(&params.bath),
                (_, None | Some("plus")) => InitialState::plus(&params.bath),
                (_, Some(other)) => {
                    return Err(config_error(src, format!("initial must be `plus` or `cat`, got `{other}`")))
                }
            };
            let tr = evolve_adaptive(&params, &initial, &grid, cfg.tol, &cutoff)?;
            let oracle_max_deviation = match mode.as_str() {
                "rabi" => Some(
                    tr.t.iter()
                        .zip(&tr.mz)
                        .map(|(t, mz)| (mz - (2.0 * hx * t).cos()).abs())
                        .fold(0.0, f64::max),
                ),
                "dephasing" => Some(
                    tr.t.iter()
                        .zip(&tr.coherence)
                        .map(|(&t, c)| (c - pure_dephasing_coherence(&params.bath, t)).abs())
                        .fold(0.0, f64::max),
                ),
                _ => None,
            };
            let summary = TrajectorySummary {
                mode: mode.clone(),
                dimension: tr.final_state.dimension(),
                n_max: tr.n_max,
                substeps: tr.substeps,
                max_norm_drift: tr.max_norm_drift(),
                max_relative_energy_drift: tr.max_relative_energy_drift(),
                max_top_occupation: tr.max_top_occupation(),
                min_spin_eigenvalue: tr.min_spin_eigenvalue(),
                tail_average: tr.tail_average(),
                verdict: CollapseVerdict::from_tail_average(tr.tail_average()),
                oracle_max_deviation,
            };
            out.csv("spinboson_trajectory.csv", trajectory_csv(src, seed, &tr))?;
            out.json("spinboson_summary.json", &summary)?;
        }
        "scan" => {
            let alpha_grid = cfg
                .alpha_grid
                .clone()
                .ok_or_else(|| config_error(src, "`--mode scan` needs `alpha_grid`"))?;
            let protocol = ScanProtocol {
                hx: cfg.hx,
                omega_c: cfg.omega_c,
                s: cfg.s,
                modes: cfg.modes,
                omega_min: cfg.omega_min,
                n_max: cfg.n_max,
                t_final: cfg.t_final,
                steps: cfg.steps,
                tol: cfg.tol,
                cutoff,
            };
            let rows = scan_localization(&protocol, &alpha_grid)?;
            let mut csv = Csv::new(&src.sha256, seed, "alpha,Mz_tail_avg,undecided_fraction");
            for r in &rows {
                csv.row(&[num(r.alpha), num(r.mz_tail_avg), num(r.undecided_fraction)]);
            }
            let summary = ScanSummary {
                rows: rows.len(),
                alpha_grid: rows.iter().map(|r| r.alpha).collect(),
                mz_tail_avg: rows.iter().map(|r| r.mz_tail_avg).collect(),
                n_max: rows.iter().map(|r| r.n_max).collect(),
                max_norm_drift: rows.iter().map(|r| r.max_norm_drift).fold(0.0, f64::max),
                max_relative_energy_drift: rows.iter().map(|r| r.max_relative_energy_drift).fold(0.0, f64::max),
                max_decrease: rows
                    .windows(2)
                    .map(|w| w[0].mz_tail_avg - w[1].mz_tail_avg)
                    .fold(0.0, f64::max),
            };
            out.csv("spinboson_scan.csv", csv)?;
            out.json("spinboson_scan_summary.json", &summary)?;
        }
        "collapse" => {
            let params = spinboson_params(src, &cfg, cfg.hx, cfg.hz, cfg.alpha)?;
            let protocol = cfg.protocol();
            let n = require_runs(flags.n.or(cfg.n).unwrap_or(DEFAULT_COLLAPSE_RUNS))?;
            n_runs = Some(n);
            let results = (0..n)
                .into_par_iter()
                .map(|i| collapse_trajectory(&params, cfg.bath_temperature, &protocol, seed.wrapping_add(i as u64)))
                .collect::<Result<Vec<_>, _>>()?;
            let mut csv = Csv::new(&src.sha256, seed, "seed,verdict,Mz_tail_avg,n_max");
            let (mut plus, mut minus, mut undecided) = (0, 0, 0);
            let (mut norm_drift, mut energy_drift) = (0.0f64, 0.0f64);
            for (i, r) in results.iter().enumerate() {
                match r.verdict {
                    CollapseVerdict::Plus => plus += 1,
                    CollapseVerdict::Minus => minus += 1,
                    CollapseVerdict::Undecided => undecided += 1,
                }
                norm_drift = norm_drift.max(r.trajectory.max_norm_drift());
                energy_drift = energy_drift.max(r.trajectory.max_relative_energy_drift());
                csv.row(&[
                    seed.wrapping_add(i as u64).to_string(),
                    verdict_str(r.verdict).to_string(),
                    num(r.tail_average),
                    r.trajectory.n_max.to_string(),
                ]);
            }
            let decided = plus + minus;
            let summary = CollapseSummary {
                runs: n,
                base_seed: seed,
                plus,
                minus,
                undecided,
                plus_fraction_decided: (decided > 0).then(|| plus as f64 / decided as f64),
                half_width: (decided > 0).then(|| binomial_half_width(0.5, decided)),
                undecided_fraction: undecided as f64 / n as f64,
                max_norm_drift: norm_drift,
                max_relative_energy_drift: energy_drift,
            };
            out.csv("spinboson_collapse.csv", csv)?;
            out.json("spinboson_collapse_summary.json", &summary)?;
        }
        other => {
            return Err(HarnessError::Invalid(format!(
                "unknown mode `{other}`; expected trajectory, rabi, dephasing, scan or collapse"
            )))
        }
    }
    Ok(RunReport {
        seed,
        n: n_runs,
        mode: Some(mode),
        files: out.files,
    })
}

fn verdict_str(v: CollapseVerdict) -> &'static str {
    match v {
        CollapseVerdict::Plus => "plus",
        CollapseVerdict::Minus => "minus",
        CollapseVerdict::Undecided => "undecided",
    }
}
