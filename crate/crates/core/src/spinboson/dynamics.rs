use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    discretize_bath, sample_bath_displacements, Hamiltonian, InitialState, KrylovPropagator,
    QuantumState, Result, SpectralFunction, SpinBosonError, SpinBosonParams, CAT_SPIN,
    DEFAULT_MAX_DIMENSION,
};

/// Fraction of the time window averaged for the collapse verdict.
pub const TAIL_FRACTION: f64 = 0.2;

/// `|⟨M_z⟩_tail|` below which no collapse direction is declared.
pub const UNDECIDED_THRESHOLD: f64 = 0.05;

#[derive(Clone, Debug, Serialize)]
pub struct TrajectoryResult {
    pub t: Vec<f64>,
    pub mz: Vec<f64>,
    pub coherence: Vec<f64>,
    pub norm: Vec<f64>,
    pub energy: Vec<f64>,
    pub top_occupation: Vec<f64>,
    pub min_spin_eigenvalue: Vec<f64>,
    /// Fock cutoff the trajectory was computed with.
    pub n_max: usize,
    /// Lower and upper spectral estimates of the Hamiltonian.
    pub spectral_bounds: (f64, f64),
    pub substeps: usize,
    #[serde(skip)]
    pub final_state: QuantumState,
}

impl TrajectoryResult {
    pub fn max_norm_drift(&self) -> f64 {
        self.norm.iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max)
    }

    /// `max_t |E(t) - E(0)|` relative to the spectral span.
    pub fn max_relative_energy_drift(&self) -> f64 {
        let span = self.spectral_bounds.1 - self.spectral_bounds.0;
        let e0 = self.energy[0];
        let drift = self.energy.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max);
        if span > 0.0 {
            drift / span
        } else {
            drift
        }
    }

    pub fn max_top_occupation(&self) -> f64 {
        self.top_occupation.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_spin_eigenvalue(&self) -> f64 {
        self.min_spin_eigenvalue.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn tail_average(&self) -> f64 {
        tail_average(&self.t, &self.mz)
    }
}

/// Mean of `values` over the final [`TAIL_FRACTION`] of the time window.
pub fn tail_average(t: &[f64], values: &[f64]) -> f64 {
    let (Some(first), Some(last)) = (t.first(), t.last()) else {
        return f64::NAN;
    };
    let start = last - TAIL_FRACTION * (last - first);
    let (sum, count) = t
        .iter()
        .zip(values)
        .filter(|(ti, _)| **ti >= start)
        .fold((0.0, 0usize), |(s, c), (_, v)| (s + v, c + 1));
    sum / count as f64
}

/// `steps + 1` equally spaced times on `[0, t_final]`.
pub fn uniform_grid(t_final: f64, steps: usize) -> Vec<f64> {
    let steps = steps.max(1);
    (0..=steps).map(|i| t_final * i as f64 / steps as f64).collect()
}

pub fn evolve(h: &Hamiltonian, state0: &QuantumState, t_grid: &[f64], tol: f64) -> Result<TrajectoryResult> {
    evolve_with(h, state0, t_grid, tol, |_, _, _| {})
}

/// Propagates `state0` (given at `t_grid[0]`) and records observables at
/// every grid time, calling `observe(index, t, state)` for each.
///
/// The tolerance is the admissible state error over the whole window; it is
/// distributed over substeps in proportion to their length.
pub fn evolve_with<F>(
    h: &Hamiltonian,
    state0: &QuantumState,
    t_grid: &[f64],
    tol: f64,
    mut observe: F,
) -> Result<TrajectoryResult>
where
    F: FnMut(usize, f64, &QuantumState),
{
    if state0.dimension() != h.dimension() {
        return Err(SpinBosonError::dimension_mismatch(h.dimension(), state0.dimension()));
    }
    if !state0.is_normalized() {
        return Err(SpinBosonError::Unnormalized(state0.norm()));
    }
    if t_grid.is_empty()
        || t_grid.iter().any(|t| !t.is_finite())
        || t_grid.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(SpinBosonError::InvalidTimeGrid);
    }
    if !(tol > 0.0) {
        return Err(SpinBosonError::InvalidParams(format!("tolerance must be > 0, got {tol}")));
    }
    let span = t_grid[t_grid.len() - 1] - t_grid[0];
    let rate = if span > 0.0 { tol / span } else { tol };

    let n = t_grid.len();
    let mut result = TrajectoryResult {
        t: Vec::with_capacity(n),
        mz: Vec::with_capacity(n),
        coherence: Vec::with_capacity(n),
        norm: Vec::with_capacity(n),
        energy: Vec::with_capacity(n),
        top_occupation: Vec::with_capacity(n),
        min_spin_eigenvalue: Vec::with_capacity(n),
        n_max: state0.n_max(),
        spectral_bounds: h.spectral_bounds(),
        substeps: 0,
        final_state: state0.clone(),
    };
    let mut propagator = KrylovPropagator::new(h);
    let mut state = state0.clone();
    for (i, &t) in t_grid.iter().enumerate() {
        if i > 0 {
            let t_prev = t_grid[i - 1];
            propagator.advance(state.amplitudes_mut(), t_prev, t - t_prev, rate)?;
        }
        let obs = state.spin_observables();
        result.t.push(t);
        result.mz.push(obs.mz);
        result.coherence.push(obs.coherence);
        result.norm.push(state.norm());
        result.energy.push(h.expectation(state.amplitudes()));
        result.top_occupation.push(state.top_occupation());
        result.min_spin_eigenvalue.push(obs.min_eigenvalue);
        observe(i, t, &state);
    }
    result.substeps = propagator.substeps();
    result.final_state = state;
    Ok(result)
}

/// Fock cutoff adaptivity: accept a run only when the top-level occupation
/// stays below `threshold`, otherwise retry with `n_max + increment`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveCutoff {
    pub threshold: f64,
    pub increment: usize,
    pub max_dimension: usize,
}

impl Default for AdaptiveCutoff {
    fn default() -> Self {
        Self {
            threshold: 1e-6,
            increment: 2,
            max_dimension: DEFAULT_MAX_DIMENSION,
        }
    }
}

pub fn evolve_adaptive(
    params: &SpinBosonParams,
    initial: &InitialState,
    t_grid: &[f64],
    tol: f64,
    cutoff: &AdaptiveCutoff,
) -> Result<TrajectoryResult> {
    let mut n_max = params.n_max.max(initial.required_n_max());
    let mut last_top = f64::NAN;
    loop {
        let trial = params.with_n_max(n_max);
        match trial.dimension() {
            Some(d) if d <= cutoff.max_dimension => {}
            _ => {
                return Err(SpinBosonError::CutoffBudgetExhausted {
                    n_max: n_max - cutoff.increment.min(n_max),
                    top_occupation: last_top,
                    max_dimension: cutoff.max_dimension,
                })
            }
        }
        let h = Hamiltonian::with_budget(&trial, cutoff.max_dimension)?;
        let psi = initial.build(&trial)?;
        let trajectory = evolve(&h, &psi, t_grid, tol)?;
        last_top = trajectory.max_top_occupation();
        if last_top < cutoff.threshold {
            return Ok(trajectory);
        }
        log::debug!("n_max = {n_max}: top-level occupation {last_top:e}, raising cutoff");
        if cutoff.increment == 0 {
            return Err(SpinBosonError::CutoffBudgetExhausted {
                n_max,
                top_occupation: last_top,
                max_dimension: cutoff.max_dimension,
            });
        }
        n_max += cutoff.increment;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CollapseVerdict {
    Plus,
    Minus,
    Undecided,
}

impl CollapseVerdict {
    pub fn from_tail_average(mz: f64) -> Self {
        if !(mz.abs() >= UNDECIDED_THRESHOLD) {
            CollapseVerdict::Undecided
        } else if mz > 0.0 {
            CollapseVerdict::Plus
        } else {
            CollapseVerdict::Minus
        }
    }

    pub fn sign(self) -> Option<i8> {
        match self {
            CollapseVerdict::Plus => Some(1),
            CollapseVerdict::Minus => Some(-1),
            CollapseVerdict::Undecided => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollapseProtocol {
    pub t_final: f64,
    pub steps: usize,
    pub tol: f64,
    #[serde(default)]
    pub cutoff: AdaptiveCutoff,
}

#[derive(Clone, Debug, Serialize)]
pub struct CollapseResult {
    pub verdict: CollapseVerdict,
    pub tail_average: f64,
    pub displacements: Vec<Complex64>,
    pub trajectory: TrajectoryResult,
}

/// Cat initial spin, thermal coherent bath, verdict from the tail of `M_z`.
pub fn collapse_trajectory(
    params: &SpinBosonParams,
    bath_temperature: f64,
    protocol: &CollapseProtocol,
    seed: u64,
) -> Result<CollapseResult> {
    collapse_trajectory_from(params, CAT_SPIN, bath_temperature, protocol, seed)
}

pub fn collapse_trajectory_from(
    params: &SpinBosonParams,
    spin: [Complex64; 2],
    bath_temperature: f64,
    protocol: &CollapseProtocol,
    seed: u64,
) -> Result<CollapseResult> {
    if !(bath_temperature >= 0.0) {
        return Err(SpinBosonError::InvalidParams(format!(
            "bath temperature must be >= 0, got {bath_temperature}"
        )));
    }
    let initial = InitialState {
        spin,
        displacements: sample_bath_displacements(&params.bath, bath_temperature, seed),
    };
    let grid = uniform_grid(protocol.t_final, protocol.steps);
    let trajectory = evolve_adaptive(params, &initial, &grid, protocol.tol, &protocol.cutoff)?;
    let tail = trajectory.tail_average();
    Ok(CollapseResult {
        verdict: CollapseVerdict::from_tail_average(tail),
        tail_average: tail,
        displacements: initial.displacements,
        trajectory,
    })
}

/// Fixed protocol for the localization scan: `|+⟩ ⊗ |vac⟩`, `h_z = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanProtocol {
    pub hx: f64,
    pub omega_c: f64,
    pub s: f64,
    pub modes: usize,
    pub omega_min: f64,
    pub n_max: usize,
    pub t_final: f64,
    pub steps: usize,
    pub tol: f64,
    #[serde(default)]
    pub cutoff: AdaptiveCutoff,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    pub alpha: f64,
    pub mz_tail_avg: f64,
    pub undecided_fraction: f64,
    pub n_max: usize,
    pub max_norm_drift: f64,
    pub max_relative_energy_drift: f64,
}

pub fn scan_localization(protocol: &ScanProtocol, alpha_grid: &[f64]) -> Result<Vec<ScanRow>> {
    if alpha_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SpinBosonError::InvalidParams("alpha grid must be increasing".into()));
    }
    let grid = uniform_grid(protocol.t_final, protocol.steps);
    alpha_grid
        .par_iter()
        .map(|&alpha| {
            let j = SpectralFunction::new(alpha, protocol.s, protocol.omega_c)?;
            let bath = discretize_bath(&j, protocol.modes, protocol.omega_min)?;
            let params = SpinBosonParams::new(protocol.hx, 0.0, bath, protocol.n_max)?;
            let initial = InitialState::plus(&params.bath);
            let trajectory = evolve_adaptive(&params, &initial, &grid, protocol.tol, &protocol.cutoff)?;
            let tail = trajectory.tail_average();
            let undecided = CollapseVerdict::from_tail_average(tail) == CollapseVerdict::Undecided;
            Ok(ScanRow {
                alpha,
                mz_tail_avg: tail,
                undecided_fraction: if undecided { 1.0 } else { 0.0 },
                n_max: trajectory.n_max,
                max_norm_drift: trajectory.max_norm_drift(),
                max_relative_energy_drift: trajectory.max_relative_energy_drift(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spinboson::{BathDiscretization, BathMode};

    #[test]
    fn tail_window() {
        let t = uniform_grid(10.0, 10);
        let v: Vec<f64> = t.clone();
        // Points 8, 9, 10.
        assert_eq!(tail_average(&t, &v), 9.0);
    }

    #[test]
    fn rabi_limit() {
        let hx = 0.3;
        let bath = BathDiscretization::from_modes(vec![BathMode { omega: 1.0, lambda: 0.0 }]).unwrap();
        let params = SpinBosonParams::new(hx, 0.0, bath, 2).unwrap();
        let h = Hamiltonian::new(&params).unwrap();
        let psi = InitialState::plus(&params.bath).build(&params).unwrap();
        let grid = uniform_grid(20.0, 50);
        let traj = evolve(&h, &psi, &grid, 1e-10).unwrap();
        for (t, mz) in traj.t.iter().zip(&traj.mz) {
            assert!((mz - (2.0 * hx * t).cos()).abs() < 1e-9, "t = {t}");
        }
    }

    #[test]
    fn single_time_grid_is_identity() {
        let bath = BathDiscretization::from_modes(vec![BathMode { omega: 1.0, lambda: 0.2 }]).unwrap();
        let params = SpinBosonParams::new(0.2, 0.0, bath, 4).unwrap();
        let h = Hamiltonian::new(&params).unwrap();
        let psi = InitialState::cat(&params.bath).build(&params).unwrap();
        let traj = evolve(&h, &psi, &[0.0], 1e-10).unwrap();
        assert_eq!(traj.final_state, psi);
        assert_eq!(traj.mz, vec![psi.spin_observables().mz]);
    }

    #[test]
    fn rejects_bad_grids() {
        let bath = BathDiscretization::from_modes(vec![BathMode { omega: 1.0, lambda: 0.2 }]).unwrap();
        let params = SpinBosonParams::new(0.2, 0.0, bath, 4).unwrap();
        let h = Hamiltonian::new(&params).unwrap();
        let psi = InitialState::cat(&params.bath).build(&params).unwrap();
        assert_eq!(evolve(&h, &psi, &[], 1e-8).unwrap_err(), SpinBosonError::InvalidTimeGrid);
        assert_eq!(
            evolve(&h, &psi, &[0.0, 1.0, 1.0], 1e-8).unwrap_err(),
            SpinBosonError::InvalidTimeGrid
        );
    }
}
