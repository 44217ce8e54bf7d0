//! Lanczos approximation of `e^{-iHτ}ψ` with a residual-based error bound.
//!
//! With the orthonormal Krylov basis `V_m` and tridiagonal `T_m`, the
//! approximation `u(τ) = β₀ V_m e^{-iτT_m} e₁` has defect
//! `u' + iHu = -i β₀ β_m v_{m+1} e_mᵀ e^{-iτT_m} e₁`, so
//! `‖u(τ) - e^{-iHτ}ψ‖ ≤ β₀ β_m ∫₀^τ |e_mᵀ e^{-isT_m} e₁| ds`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::{Hamiltonian, Result, SpinBosonError};

pub const DEFAULT_KRYLOV_DIMENSION: usize = 30;
pub const DEFAULT_MAX_SUBSTEPS: usize = 2_000_000;

/// Sample points used to bound the defect integral.
const DEFECT_SAMPLES: usize = 24;

#[derive(Clone, Debug)]
pub struct KrylovPropagator<'a> {
    h: &'a Hamiltonian,
    pub krylov_dimension: usize,
    pub max_substeps: usize,
    tau: f64,
    substeps: usize,
}

/// Spectral data of `T_m`; the Krylov basis itself is kept separately.
struct Subspace {
    beta0: f64,
    /// `β_m`; zero when the subspace is invariant.
    beta_last: f64,
    eigenvalues: Vec<f64>,
    /// First and last rows of the eigenvector matrix of `T_m`.
    first: Vec<f64>,
    last: Vec<f64>,
    /// Eigenvector matrix of `T_m`, row-major.
    rows: Vec<Vec<f64>>,
}

impl Subspace {
    /// Upper estimate of `β₀ β_m ∫₀^τ |e_mᵀ e^{-isT} e₁| ds`.
    fn error_bound(&self, tau: f64) -> f64 {
        if self.beta_last == 0.0 {
            return 0.0;
        }
        let ds = tau / DEFECT_SAMPLES as f64;
        // Phases at the sample points by repeated rotation.
        let rotation: Vec<Complex64> = self
            .eigenvalues
            .iter()
            .map(|e| Complex64::from_polar(1.0, -ds * e))
            .collect();
        let mut terms: Vec<Complex64> = self
            .first
            .iter()
            .zip(&self.last)
            .map(|(f, l)| Complex64::new(f * l, 0.0))
            .collect();
        let mut peak = 0.0f64;
        for _ in 0..DEFECT_SAMPLES {
            let mut acc = Complex64::new(0.0, 0.0);
            for (t, r) in terms.iter_mut().zip(&rotation) {
                *t *= r;
                acc += *t;
            }
            peak = peak.max(acc.norm());
        }
        self.beta0 * self.beta_last * tau * peak
    }

    fn advance(&self, basis: &[Vec<Complex64>], tau: f64, out: &mut [Complex64]) {
        let m = self.eigenvalues.len();
        let phased: Vec<Complex64> = (0..m)
            .map(|k| Complex64::from_polar(self.first[k], -tau * self.eigenvalues[k]))
            .collect();
        let coeffs: Vec<Complex64> = self
            .rows
            .iter()
            .map(|row| phased.iter().zip(row).map(|(p, q)| p * q).sum::<Complex64>() * self.beta0)
            .collect();
        out.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
        for (v, c) in basis.iter().zip(&coeffs) {
            for (o, x) in out.iter_mut().zip(v) {
                *o += x * c;
            }
        }
    }
}

impl<'a> KrylovPropagator<'a> {
    pub fn new(h: &'a Hamiltonian) -> Self {
        Self {
            h,
            krylov_dimension: DEFAULT_KRYLOV_DIMENSION,
            max_substeps: DEFAULT_MAX_SUBSTEPS,
            tau: f64::INFINITY,
            substeps: 0,
        }
    }

    pub fn substeps(&self) -> usize {
        self.substeps
    }

    /// Advances `psi` by `dt`, allowing an error of `rate` per unit time.
    pub fn advance(&mut self, psi: &mut Vec<Complex64>, t0: f64, dt: f64, rate: f64) -> Result<()> {
        let mut remaining = dt;
        let mut next = vec![Complex64::new(0.0, 0.0); psi.len()];
        while remaining > 0.0 {
            let mut tau = self.tau.min(remaining);
            let (basis, space) = self.build(psi, tau, rate);
            loop {
                if space.error_bound(tau) <= rate * tau {
                    break;
                }
                tau *= 0.5;
                if tau <= f64::EPSILON * dt.max(1.0) {
                    return Err(SpinBosonError::ToleranceNotAchievable {
                        t: t0 + dt - remaining,
                        substeps: self.substeps,
                    });
                }
            }
            space.advance(&basis, tau, &mut next);
            std::mem::swap(psi, &mut next);
            self.substeps += 1;
            if self.substeps > self.max_substeps {
                return Err(SpinBosonError::ToleranceNotAchievable {
                    t: t0 + dt - remaining,
                    substeps: self.substeps,
                });
            }
            // Stepping exactly to the end of the interval must not shrink
            // the next guess.
            if tau < remaining {
                self.tau = 2.0 * tau;
                remaining -= tau;
            } else {
                self.tau = self.tau.max(tau);
                remaining = 0.0;
            }
        }
        Ok(())
    }

    /// Lanczos with full reorthogonalization, stopped as soon as the
    /// subspace resolves a step of length `target` within `rate * target`.
    fn build(&self, psi: &[Complex64], target: f64, rate: f64) -> (Vec<Vec<Complex64>>, Subspace) {
        let n = psi.len();
        let m_max = self.krylov_dimension.min(n).max(1);
        let beta0 = norm(psi);
        let mut basis: Vec<Vec<Complex64>> = vec![psi.iter().map(|x| x / beta0).collect()];
        let mut alphas: Vec<f64> = Vec::with_capacity(m_max);
        let mut betas: Vec<f64> = Vec::with_capacity(m_max);
        let mut w = vec![Complex64::new(0.0, 0.0); n];
        loop {
            let j = alphas.len();
            self.h.apply(&basis[j], &mut w);
            let a = dot(&basis[j], &w).re;
            alphas.push(a);
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(q, &w);
                    w.iter_mut().zip(q).for_each(|(x, y)| *x -= y * c);
                }
            }
            let b = norm(&w);
            let prev = betas.last().copied().unwrap_or(0.0);
            if b <= 1e-13 * (a.abs() + prev).max(f64::MIN_POSITIVE) {
                let space = Subspace::new(beta0, &alphas, &betas, 0.0);
                return (basis, space);
            }
            let m = alphas.len();
            if m == m_max || (m >= 4 && m % 2 == 0) {
                let space = Subspace::new(beta0, &alphas, &betas, b);
                if m == m_max || space.error_bound(target) <= rate * target {
                    return (basis, space);
                }
            }
            betas.push(b);
            basis.push(w.iter().map(|x| x / b).collect());
        }
    }
}

impl Subspace {
    fn new(beta0: f64, alphas: &[f64], betas: &[f64], beta_last: f64) -> Self {
        let m = alphas.len();
        let t = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                alphas[i]
            } else if i + 1 == j {
                betas[i]
            } else if j + 1 == i {
                betas[j]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let q = &eig.eigenvectors;
        Subspace {
            beta0,
            beta_last,
            eigenvalues: eig.eigenvalues.iter().copied().collect(),
            first: (0..m).map(|k| q[(0, k)]).collect(),
            last: (0..m).map(|k| q[(m - 1, k)]).collect(),
            rows: (0..m).map(|j| (0..m).map(|k| q[(j, k)]).collect()).collect(),
        }
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}
