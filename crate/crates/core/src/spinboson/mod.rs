//! Superspin-boson collapse engine on a truncated Fock space.
//!
//! `H = Σ_l ω_l a_l† a_l - h·Σ - Σ_z Σ_l λ_l (a_l + a_l†)` with `h_y = 0`,
//! so the matrix is real symmetric in the product basis
//! `|σ⟩ ⊗ |n_1 … n_L⟩`, `σ ∈ {+, -}`, `n_l ∈ 0..=n_max`.
//!
//! The spin index is the most significant digit: basis index
//! `s·B + Σ_l n_l (n_max+1)^(L-1-l)` with `s = 0` for `|+⟩` and
//! `B = (n_max+1)^L`.
//!
//! At desk scale (a handful of modes) the localization scan shows a
//! crossover from free Rabi oscillation to trapping, not the true quantum
//! phase transition of the infinite bath.

mod bath;
mod dynamics;
mod hamiltonian;
mod krylov;
mod state;

pub use bath::{discretize_bath, BathDiscretization, BathMode, SpectralFunction, BATH_UPPER_CUTOFFS};
pub use dynamics::{
    collapse_trajectory, collapse_trajectory_from, evolve, evolve_adaptive, evolve_with,
    scan_localization, tail_average, uniform_grid, AdaptiveCutoff, CollapseProtocol,
    CollapseResult, CollapseVerdict, ScanProtocol, ScanRow, TrajectoryResult,
    TAIL_FRACTION, UNDECIDED_THRESHOLD,
};
pub use hamiltonian::Hamiltonian;
pub use krylov::{KrylovPropagator, DEFAULT_KRYLOV_DIMENSION, DEFAULT_MAX_SUBSTEPS};
pub use state::{
    bose_occupation, coherent_amplitudes, sample_bath_displacements, sample_initial_bath,
    InitialState, QuantumState, SpinObservables, CAT_SPIN,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest Hilbert-space dimension accepted by default.
pub const DEFAULT_MAX_DIMENSION: usize = 1 << 20;

/// Tolerance on `‖ψ‖ = 1` for inputs.
pub const STATE_NORM_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpinBosonError {
    #[error("invalid spectral function: {0}")]
    InvalidSpectralFunction(String),
    #[error("invalid bath discretization: {0}")]
    InvalidBath(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("Hilbert dimension {dimension} exceeds budget {max}")]
    DimensionTooLarge { dimension: usize, max: usize },
    #[error("state is not normalized: norm = {0}")]
    Unnormalized(f64),
    #[error("state dimension {got} does not match Hamiltonian dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("time grid must be non-empty and strictly increasing")]
    InvalidTimeGrid,
    #[error("propagator tolerance not achievable at t = {t} after {substeps} substeps")]
    ToleranceNotAchievable { t: f64, substeps: usize },
    #[error("mode {mode}: |z|^2 = {z2} too large for n_max = {n_max} (need |z|^2 <= n_max/4)")]
    DisplacementTooLarge { mode: usize, z2: f64, n_max: usize },
    #[error(
        "Fock cutoff budget exhausted: n_max = {n_max} leaves top-level occupation {top_occupation:e} \
         and the next cutoff exceeds dimension {max_dimension}"
    )]
    CutoffBudgetExhausted {
        n_max: usize,
        top_occupation: f64,
        max_dimension: usize,
    },
}

pub type Result<T> = std::result::Result<T, SpinBosonError>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinBosonParams {
    /// `(h_x, h_y, h_z)`; `h_y` must vanish.
    pub h: [f64; 3],
    pub bath: BathDiscretization,
    /// Per-mode Fock cutoff.
    pub n_max: usize,
}

impl SpinBosonParams {
    pub fn new(hx: f64, hz: f64, bath: BathDiscretization, n_max: usize) -> Result<Self> {
        let params = Self {
            h: [hx, 0.0, hz],
            bath,
            n_max,
        };
        params.validate(DEFAULT_MAX_DIMENSION)?;
        Ok(params)
    }

    pub fn hx(&self) -> f64 {
        self.h[0]
    }

    pub fn hz(&self) -> f64 {
        self.h[2]
    }

    pub fn n_modes(&self) -> usize {
        self.bath.modes.len()
    }

    /// `(n_max + 1)^L`, or `None` on overflow.
    pub fn bath_dimension(&self) -> Option<usize> {
        let levels = self.n_max.checked_add(1)?;
        let mut dim: usize = 1;
        for _ in 0..self.n_modes() {
            dim = dim.checked_mul(levels)?;
        }
        Some(dim)
    }

    pub fn dimension(&self) -> Option<usize> {
        self.bath_dimension()?.checked_mul(2)
    }

    pub fn with_n_max(&self, n_max: usize) -> Self {
        Self {
            n_max,
            ..self.clone()
        }
    }

    pub fn validate(&self, max_dimension: usize) -> Result<()> {
        if self.h.iter().any(|c| !c.is_finite()) {
            return Err(SpinBosonError::InvalidParams("field must be finite".into()));
        }
        if self.h[1] != 0.0 {
            return Err(SpinBosonError::InvalidParams(
                "h_y must be zero (spin axes are chosen so that it vanishes)".into(),
            ));
        }
        if self.n_max < 1 {
            return Err(SpinBosonError::InvalidParams("n_max must be at least 1".into()));
        }
        self.bath.validate()?;
        match self.dimension() {
            Some(dimension) if dimension <= max_dimension => Ok(()),
            Some(dimension) => Err(SpinBosonError::DimensionTooLarge {
                dimension,
                max: max_dimension,
            }),
            None => Err(SpinBosonError::DimensionTooLarge {
                dimension: usize::MAX,
                max: max_dimension,
            }),
        }
    }
}
