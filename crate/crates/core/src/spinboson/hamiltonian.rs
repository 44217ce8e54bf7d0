use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::{Result, SpinBosonError, SpinBosonParams, DEFAULT_MAX_DIMENSION};

/// Dimension up to which spectral bounds come from dense diagonalization.
const DENSE_BOUNDS_DIMENSION: usize = 600;
const LANCZOS_BOUNDS_STEPS: usize = 120;

/// Real-symmetric sparse Hamiltonian (CSR) in the spin ⊗ Fock product basis.
#[derive(Clone, Debug)]
pub struct Hamiltonian {
    params: SpinBosonParams,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Hamiltonian {
    pub fn new(params: &SpinBosonParams) -> Result<Self> {
        Self::with_budget(params, DEFAULT_MAX_DIMENSION)
    }

    pub fn with_budget(params: &SpinBosonParams, max_dimension: usize) -> Result<Self> {
        params.validate(max_dimension)?;
        let n_modes = params.n_modes();
        let levels = params.n_max + 1;
        let bath_dim = params.bath_dimension().expect("validated");
        let dim = 2 * bath_dim;
        let strides: Vec<usize> = (0..n_modes)
            .map(|l| levels.pow((n_modes - 1 - l) as u32))
            .collect();
        let [hx, _, hz] = params.h;

        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::with_capacity(dim * (2 + 2 * n_modes));
        let mut vals = Vec::with_capacity(dim * (2 + 2 * n_modes));
        let mut entries: Vec<(usize, f64)> = Vec::with_capacity(2 + 2 * n_modes);
        row_ptr.push(0);
        for i in 0..dim {
            let s = i / bath_dim;
            let b = i % bath_dim;
            let sigma = if s == 0 { 1.0 } else { -1.0 };
            entries.clear();
            let mut diag = -hz * sigma;
            for (l, mode) in params.bath.modes.iter().enumerate() {
                let n = (b / strides[l]) % levels;
                diag += mode.omega * n as f64;
                if mode.lambda != 0.0 {
                    if n > 0 {
                        entries.push((i - strides[l], -sigma * mode.lambda * (n as f64).sqrt()));
                    }
                    if n < params.n_max {
                        entries.push((i + strides[l], -sigma * mode.lambda * ((n + 1) as f64).sqrt()));
                    }
                }
            }
            if diag != 0.0 {
                entries.push((i, diag));
            }
            if hx != 0.0 {
                entries.push(((1 - s) * bath_dim + b, -hx));
            }
            entries.sort_by_key(|e| e.0);
            for &(c, v) in &entries {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Ok(Self {
            params: params.clone(),
            row_ptr,
            cols,
            vals,
        })
    }

    pub fn params(&self) -> &SpinBosonParams {
        &self.params
    }

    pub fn dimension(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nonzeros(&self) -> usize {
        self.vals.len()
    }

    /// `y = H x`.
    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.dimension());
        debug_assert_eq!(y.len(), self.dimension());
        for (i, out) in y.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += x[self.cols[k]] * self.vals[k];
            }
            *out = acc;
        }
    }

    fn apply_real(&self, x: &[f64], y: &mut [f64]) {
        for (i, out) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += x[self.cols[k]] * self.vals[k];
            }
            *out = acc;
        }
    }

    /// `⟨ψ|H|ψ⟩` (real because `H` is symmetric).
    pub fn expectation(&self, psi: &[Complex64]) -> f64 {
        let mut acc = 0.0;
        for (i, p) in psi.iter().enumerate() {
            let mut row = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                row += psi[self.cols[k]] * self.vals[k];
            }
            acc += (p.conj() * row).re;
        }
        acc
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dimension();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.cols[k])] = self.vals[k];
            }
        }
        m
    }

    /// Estimates of the lowest and highest eigenvalue.
    ///
    /// Exact for small dimensions, Lanczos (Ritz values, which lie inside
    /// the true range) otherwise.
    pub fn spectral_bounds(&self) -> (f64, f64) {
        let n = self.dimension();
        if n <= DENSE_BOUNDS_DIMENSION {
            let eig = SymmetricEigen::new(self.to_dense());
            let lo = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            return (lo, hi);
        }
        let steps = LANCZOS_BOUNDS_STEPS.min(n);
        // Deterministic start vector with weight on every basis state.
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919) % 101) as f64 / 101.0).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        let mut basis: Vec<Vec<f64>> = vec![v];
        let mut alphas = Vec::with_capacity(steps);
        let mut betas = Vec::with_capacity(steps);
        let mut w = vec![0.0; n];
        for j in 0..steps {
            self.apply_real(&basis[j], &mut w);
            let a: f64 = w.iter().zip(&basis[j]).map(|(x, y)| x * y).sum();
            alphas.push(a);
            for _ in 0..2 {
                for q in &basis {
                    let c: f64 = w.iter().zip(q).map(|(x, y)| x * y).sum();
                    w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
                }
            }
            let b = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if j + 1 == steps || b < 1e-12 * a.abs().max(1.0) {
                break;
            }
            betas.push(b);
            basis.push(w.iter().map(|x| x / b).collect());
        }
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
        let lo = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }
}

impl SpinBosonError {
    pub(crate) fn dimension_mismatch(expected: usize, got: usize) -> Self {
        SpinBosonError::DimensionMismatch { expected, got }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spinboson::{BathDiscretization, BathMode};

    fn params(hx: f64, hz: f64, modes: &[(f64, f64)], n_max: usize) -> SpinBosonParams {
        let bath = BathDiscretization::from_modes(
            modes.iter().map(|&(omega, lambda)| BathMode { omega, lambda }).collect(),
        )
        .unwrap();
        SpinBosonParams::new(hx, hz, bath, n_max).unwrap()
    }

    #[test]
    fn dense_matrix_is_symmetric() {
        let h = Hamiltonian::new(&params(0.3, 0.1, &[(0.7, 0.2), (1.3, 0.4)], 3)).unwrap();
        let m = h.to_dense();
        assert_eq!(m.nrows(), 2 * 16);
        assert!((&m - m.transpose()).amax() == 0.0);
    }

    #[test]
    fn displaced_oscillator_ground_energy() {
        let (omega, lambda) = (1.0, 0.4);
        let h = Hamiltonian::new(&params(0.0, 0.0, &[(omega, lambda)], 30)).unwrap();
        let (lo, _) = h.spectral_bounds();
        assert!((lo + lambda * lambda / omega).abs() < 1e-10, "ground {lo}");
    }

    #[test]
    fn field_sign_convention() {
        // -hz Σz: |+⟩ lowered by hz.
        let h = Hamiltonian::new(&params(0.0, 0.25, &[(1.0, 0.0)], 1)).unwrap();
        let mut psi = vec![Complex64::new(0.0, 0.0); h.dimension()];
        psi[0] = Complex64::new(1.0, 0.0);
        assert_eq!(h.expectation(&psi), -0.25);
    }
}
