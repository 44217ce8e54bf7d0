//! One check per acceptance criterion. Each prints a single PASS/FAIL line;
//! the test fails if any criterion fails.

mod common;

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use catcollapse::causal::{run_epr_scenario, timescale_report, Phase};
use catcollapse::harness::config::EprConfig;
use catcollapse::harness::ConfigSource;
use catcollapse::spinboson::*;
use catcollapse::units::Units;
use catcollapse::wavepacket::*;
use serde_json::Value;

struct Report {
    failures: Vec<usize>,
}

impl Report {
    fn record(&mut self, n: usize, name: &str, pass: bool, detail: String) {
        println!("criterion {n:>2} {} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failures.push(n);
        }
    }
}

/// Largest drifts over every spin-boson trajectory checked here.
#[derive(Default)]
struct Drift {
    norm: f64,
    energy: f64,
    trajectories: usize,
}

impl Drift {
    fn add(&mut self, norm: f64, energy: f64, count: usize) {
        self.norm = self.norm.max(norm);
        self.energy = self.energy.max(energy);
        self.trajectories += count;
    }

    fn trajectory(&mut self, tr: &TrajectoryResult) {
        self.add(tr.max_norm_drift(), tr.max_relative_energy_drift(), 1);
    }
}

fn cli(args: &[&str], out: &Path) -> (i32, f64) {
    let start = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_catcollapse"))
        .args(args)
        .arg("--out")
        .arg(out)
        .status()
        .unwrap();
    (status.code().unwrap_or(-1), start.elapsed().as_secs_f64())
}

fn config(name: &str) -> String {
    common::configs_dir().join(name).display().to_string()
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or(f64::NAN)
}

fn c1_normalization(r: &mut Report) {
    let start = Instant::now();
    let spec = GaussianPulseSpec::new(WaveVector::new(0.0, 0.0, 1000.0), 50.0, Polarization::One).unwrap();
    let grid = MomentumGrid::for_pulse(&spec, 12.5).unwrap();
    let (_, n) = build_gaussian_with_normalization(&spec, &grid).unwrap();
    let exact = continuum_normalization(50.0, &grid);
    let rel = ((n - exact) / exact).abs();
    let errs: Vec<f64> = [12.5, 6.25, 3.125]
        .iter()
        .map(|&dk| {
            let grid = MomentumGrid::for_pulse(&spec, dk).unwrap();
            let (_, n) = build_gaussian_with_normalization(&spec, &grid).unwrap();
            let oracle = common::truncated_gaussian_sum(50.0, 250.0, dk);
            ((n - oracle) / oracle).abs()
        })
        .collect();
    let order = errs.windows(2).map(|w| (w[0] / w[1]).log2()).fold(f64::INFINITY, f64::min);
    let secs = start.elapsed().as_secs_f64();
    r.record(
        1,
        "wavepacket normalization",
        rel < 5e-3 && order >= 2.0 - 0.05 && secs < 5.0,
        format!("rel err {rel:.2e} at dk = delta0/4, observed order {order:.3}, {secs:.2} s"),
    );
}

fn c2_energy(r: &mut Report) {
    let start = Instant::now();
    let spec = GaussianPulseSpec::new(WaveVector::new(0.0, 0.0, 1000.0), 50.0, Polarization::One).unwrap();
    let grid = MomentumGrid::for_pulse(&spec, 12.5).unwrap();
    let e = mean_energy(&build_gaussian(&spec, &grid).unwrap()).unwrap();
    let oracle = common::mean_energy_quadrature(1000.0, 50.0) - 1000.0;
    let rel = ((e - 1000.0) - oracle).abs() / oracle;
    let secs = start.elapsed().as_secs_f64();
    r.record(
        2,
        "mean-energy correction",
        rel < 0.02 && secs < 5.0,
        format!("E - |k0| = {:.5}, oracle {oracle:.5}, rel err {rel:.2e}, {secs:.2} s", e - 1000.0),
    );
}

fn c3_envelope(r: &mut Report, root: &Path) {
    let out = root.join("c3");
    let (code, _) = cli(&["wavepacket", "--config", &config("wavepacket.json")], &out);
    let report = json(out.join("wavepacket_report.json"));
    let fits: Vec<&Value> = report["envelope_fits"]
        .as_array()
        .map(|a| a.iter().filter(|row| f(&row["t"]) > 0.0).collect())
        .unwrap_or_default();
    let worst_center = fits.iter().map(|row| f(&row["relative_center_error"])).fold(0.0, f64::max);
    let worst_r2 = fits.iter().map(|row| f(&row["r_squared"])).fold(1.0, f64::min);
    r.record(
        3,
        "envelope propagation",
        code == 0 && !fits.is_empty() && worst_center < 0.01 && worst_r2 > 0.99,
        format!("{} times, max center error {worst_center:.2e}, min R^2 {worst_r2:.6}", fits.len()),
    );
}

fn c4_born(r: &mut Report, root: &Path) {
    let out = root.join("c4");
    let (code, secs) = cli(&["detect", "--config", &config("detect.json"), "--n", "100000"], &out);
    let s = json(out.join("detect_summary.json"));
    let p = f(&s["chi_square"]["p_value"]);
    let within = s["within_three_sigma"].as_bool() == Some(true);
    r.record(
        4,
        "Born-rule sampling",
        code == 0 && within && p > 1e-3 && secs < 10.0,
        format!("n = {}, within 3 sigma: {within}, chi-square p = {p:.3}, {secs:.2} s", s["runs"]),
    );
}

fn c5_product(r: &mut Report, root: &Path) {
    let out = root.join("c5");
    let (code, _) = cli(&["epr", "--config", &config("epr_product.json"), "--n", "100000"], &out);
    let s = json(out.join("epr_summary.json"));
    let freq = f(&s["absorb_absorb_fraction"]);
    let expected = f(&s["absorb_absorb_expected"]);
    let half = common::three_sigma(expected, 100_000);
    r.record(
        5,
        "product two-photon absorb-absorb",
        code == 0 && (freq - expected).abs() <= half,
        format!("frequency {freq:.5}, pT1 pT2 = {expected:.5} +/- {half:.5}"),
    );
}

fn c6_antisymmetric(r: &mut Report, root: &Path) {
    let out = root.join("c6");
    let (code, secs) = cli(&["epr", "--config", &config("epr_antisymmetric.json"), "--n", "10000"], &out);
    let s = json(out.join("epr_summary.json"));
    let same = s["same_polarization"].as_u64();
    let anti = f(&s["anticorrelation_fraction"]);
    let f0 = f(&s["branch_frequencies"]["0"]);
    let f1 = f(&s["branch_frequencies"]["1"]);
    r.record(
        6,
        "antisymmetric EPR",
        code == 0 && same == Some(0) && anti == 1.0 && (f0 - 0.5).abs() <= 0.015 && (f1 - 0.5).abs() <= 0.015,
        format!(
            "n = {}, same-polarization {same:?}, anticorrelation {anti}, branches {f0:.4}/{f1:.4}, {secs:.1} s",
            s["runs"]
        ),
    );
}

fn bath(alpha: f64, modes: usize, omega_min: f64) -> BathDiscretization {
    discretize_bath(&SpectralFunction::new(alpha, 1.0, 1.0).unwrap(), modes, omega_min).unwrap()
}

fn c7_rabi(r: &mut Report, drift: &mut Drift) {
    let start = Instant::now();
    let hx = 0.1;
    let params = SpinBosonParams::new(hx, 0.0, bath(0.0, 1, 0.2), 1).unwrap();
    let h = Hamiltonian::new(&params).unwrap();
    let psi = InitialState::plus(&params.bath).build(&params).unwrap();
    // One Rabi period of M_z = cos(2 hx t) is π/hx.
    let tr = evolve(&h, &psi, &uniform_grid(10.0 * std::f64::consts::PI / hx, 2000), 1e-10).unwrap();
    let dev = tr
        .t
        .iter()
        .zip(&tr.mz)
        .map(|(t, m)| (m - (2.0 * hx * t).cos()).abs())
        .fold(0.0, f64::max);
    drift.trajectory(&tr);
    let secs = start.elapsed().as_secs_f64();
    r.record(
        7,
        "spin-boson Rabi limit",
        dev < 1e-8 && secs < 10.0,
        format!("max |Mz - cos(2 hx t)| = {dev:.2e} over 10 periods, {secs:.2} s"),
    );
}

fn c8_dephasing(r: &mut Report, drift: &mut Drift) {
    let start = Instant::now();
    let b = bath(0.05, 3, 0.2);
    let max_ratio = b.modes.iter().map(|m| m.lambda / m.omega).fold(0.0, f64::max);
    let params = SpinBosonParams::new(0.0, 0.0, b.clone(), 8).unwrap();
    let h = Hamiltonian::new(&params).unwrap();
    let psi = InitialState::cat(&b).build(&params).unwrap();
    let tr = evolve(&h, &psi, &uniform_grid(20.0, 400), 1e-10).unwrap();
    let dev = tr
        .t
        .iter()
        .zip(&tr.coherence)
        .map(|(t, c)| {
            let gamma: f64 = b
                .modes
                .iter()
                .map(|m| 4.0 * (m.lambda / m.omega).powi(2) * (1.0 - (m.omega * t).cos()))
                .sum();
            (c - 0.5 * (-gamma).exp()).abs()
        })
        .fold(0.0, f64::max);
    drift.trajectory(&tr);
    let secs = start.elapsed().as_secs_f64();
    r.record(
        8,
        "pure-dephasing limit",
        dev < 1e-6 && max_ratio <= 0.3 && secs < 60.0,
        format!("L = 3, n_max = 8, max lambda/omega {max_ratio:.3}, max deviation {dev:.2e}, {secs:.2} s"),
    );
}

fn c9_dense(r: &mut Report, drift: &mut Drift) {
    let tol = 1e-9;
    let instances = [
        (1usize, 80usize, 0.2, 0.3, 0.1, 7.5),
        (1, 10, 1.0, 0.1, 0.0, 20.0),
        (2, 8, 0.5, 0.2, -0.1, 12.0),
        (3, 3, 0.3, 0.4, 0.2, 5.0),
        (4, 2, 0.8, 0.05, 0.0, 30.0),
    ];
    let mut worst = 0.0f64;
    let mut max_dim = 0;
    for (modes, n_max, alpha, hx, hz, t) in instances {
        let b = bath(alpha, modes, 0.2);
        let params = SpinBosonParams::new(hx, hz, b.clone(), n_max).unwrap();
        let h = Hamiltonian::new(&params).unwrap();
        max_dim = max_dim.max(h.dimension());
        let psi = InitialState::cat(&b).build(&params).unwrap();
        let tr = evolve(&h, &psi, &uniform_grid(t, 10), tol).unwrap();
        let exact = common::dense_propagate(&h.to_dense(), psi.amplitudes(), t);
        let err = tr
            .final_state
            .amplitudes()
            .iter()
            .zip(&exact)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        worst = worst.max(err);
        drift.trajectory(&tr);
    }
    r.record(
        9,
        "propagator oracle equivalence",
        worst < tol && max_dim <= 162,
        format!("{} instances up to dimension {max_dim}, max error {worst:.2e} (tol {tol:.0e})", instances.len()),
    );
}

fn c11_crossover(r: &mut Report, root: &Path, drift: &mut Drift) {
    let out = root.join("c11");
    let (code, secs) = cli(&["spinboson", "--config", &config("spinboson_scan.json"), "--mode", "scan"], &out);
    let s = json(out.join("spinboson_scan_summary.json"));
    let alphas: Vec<f64> = s["alpha_grid"].as_array().map(|a| a.iter().map(f).collect()).unwrap_or_default();
    let mz: Vec<f64> = s["mz_tail_avg"].as_array().map(|a| a.iter().map(f).collect()).unwrap_or_default();
    let drop = f(&s["max_decrease"]);
    drift.add(f(&s["max_norm_drift"]), f(&s["max_relative_energy_drift"]), mz.len());
    let first = mz.first().copied().unwrap_or(f64::NAN);
    let last = mz.last().copied().unwrap_or(f64::NAN);
    let pass = code == 0 && alphas.first() == Some(&0.0) && first.abs() <= 0.1 && last >= 0.8 && drop <= 0.05;
    let series: Vec<String> = alphas.iter().zip(&mz).map(|(a, m)| format!("{a}:{m:.3}")).collect();
    r.record(
        11,
        "localization crossover",
        pass,
        format!("tail Mz [{}], max decrease {drop:.3}, {secs:.1} s", series.join(" ")),
    );
}

fn c12_gating(r: &mut Report, root: &Path, drift: &mut Drift) {
    let src = ConfigSource::read(Path::new(&config("epr_antisymmetric.json"))).unwrap();
    let scenario = src.parse::<EprConfig>().unwrap().scenario().unwrap();
    let mut frozen = true;
    let mut probes_before = 0;
    for seed in 0..50 {
        let run = run_epr_scenario(&scenario, seed).unwrap();
        let formed = run.cat.amplitudes();
        for p in run.probes.iter().filter(|p| p.t < run.contact.t_contact) {
            probes_before += 1;
            frozen &= p.phase == Phase::Superposed
                && p.amplitudes.len() == formed.len()
                && p.amplitudes.iter().zip(&formed).all(|(a, b)| {
                    a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits()
                });
        }
    }

    let out = root.join("c12");
    let (code, _) = cli(
        &["spinboson", "--config", &config("spinboson_collapse.json"), "--mode", "collapse", "--n", "1000"],
        &out,
    );
    let s = json(out.join("spinboson_collapse_summary.json"));
    let plus = s["plus"].as_u64().unwrap_or(0) as usize;
    let minus = s["minus"].as_u64().unwrap_or(0) as usize;
    let decided = plus + minus;
    let frac = plus as f64 / decided as f64;
    let half = common::three_sigma(0.5, decided);
    drift.add(f(&s["max_norm_drift"]), f(&s["max_relative_energy_drift"]), 1000);

    let delay = timescale_report(&scenario).unwrap().contact_delay;
    let anchor = Units::default().render_internal_time(3.0);

    r.record(
        12,
        "causal gating",
        frozen && probes_before > 0 && code == 0 && (frac - 0.5).abs() <= half && delay == "10.0 ps" && anchor == "10.0 ps",
        format!(
            "{probes_before} pre-contact probes frozen: {frozen}; collapse signs {plus}/{minus} ({frac:.3} +/- {half:.3}, {} undecided); contact delay {delay}, 3 mm -> {anchor}",
            s["undecided"]
        ),
    );
}

fn data_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "metadata.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn c13_determinism(r: &mut Report, root: &Path) {
    let small_scan = root.join("scan_small.json");
    let mut scan: Value = json(common::configs_dir().join("spinboson_scan.json"));
    scan["alpha_grid"] = serde_json::json!([0.0, 0.1]);
    std::fs::write(&small_scan, serde_json::to_string_pretty(&scan).unwrap()).unwrap();
    let small_scan = small_scan.display().to_string();

    let runs: Vec<(&str, Vec<String>)> = vec![
        ("wavepacket", vec!["wavepacket".into(), "--config".into(), config("wavepacket.json")]),
        ("detect", vec!["detect".into(), "--config".into(), config("detect.json"), "--n".into(), "5000".into()]),
        ("epr", vec!["epr".into(), "--config".into(), config("epr_antisymmetric.json"), "--n".into(), "40".into()]),
        ("epr product", vec!["epr".into(), "--config".into(), config("epr_product.json"), "--n".into(), "2000".into()]),
        ("spinboson rabi", vec!["spinboson".into(), "--config".into(), config("spinboson_rabi.json"), "--mode".into(), "rabi".into()]),
        ("spinboson dephasing", vec!["spinboson".into(), "--config".into(), config("spinboson_dephasing.json"), "--mode".into(), "dephasing".into()]),
        ("spinboson scan", vec!["spinboson".into(), "--config".into(), small_scan, "--mode".into(), "scan".into()]),
        ("spinboson collapse", vec!["spinboson".into(), "--config".into(), config("spinboson_collapse.json"), "--mode".into(), "collapse".into(), "--n".into(), "20".into()]),
    ];
    let mut mismatched = Vec::new();
    let mut compared = 0;
    for (i, (name, args)) in runs.iter().enumerate() {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let a = root.join(format!("c13_{i}_a"));
        let b = root.join(format!("c13_{i}_b"));
        let (ca, _) = cli(&args, &a);
        let (cb, _) = cli(&args, &b);
        let (fa, fb) = (data_files(&a), data_files(&b));
        compared += fa.len();
        if ca != 0 || cb != 0 || fa.is_empty() || fa != fb {
            mismatched.push(*name);
        }
    }
    r.record(
        13,
        "determinism",
        mismatched.is_empty(),
        format!("{} commands, {compared} data files compared, mismatches {mismatched:?}", runs.len()),
    );
}

#[test]
fn acceptance_criteria() {
    let root = tempfile::tempdir().unwrap();
    let mut r = Report { failures: Vec::new() };
    let mut drift = Drift::default();

    c1_normalization(&mut r);
    c2_energy(&mut r);
    c3_envelope(&mut r, root.path());
    c4_born(&mut r, root.path());
    c5_product(&mut r, root.path());
    c6_antisymmetric(&mut r, root.path());
    c7_rabi(&mut r, &mut drift);
    c8_dephasing(&mut r, &mut drift);
    c9_dense(&mut r, &mut drift);
    c11_crossover(&mut r, root.path(), &mut drift);
    c12_gating(&mut r, root.path(), &mut drift);
    r.record(
        10,
        "conservation",
        drift.norm < 1e-10 && drift.energy < 1e-8,
        format!(
            "{} trajectories, max norm drift {:.2e}, max relative energy drift {:.2e}",
            drift.trajectories, drift.norm, drift.energy
        ),
    );
    c13_determinism(&mut r, root.path());

    assert!(r.failures.is_empty(), "failed criteria: {:?}", r.failures);
}
