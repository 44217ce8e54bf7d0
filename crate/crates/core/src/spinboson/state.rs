use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{BathDiscretization, Result, SpinBosonError, SpinBosonParams, STATE_NORM_TOLERANCE};
use crate::rng::rng_from_seed;

/// `(|+⟩ + |-⟩)/√2`.
pub const CAT_SPIN: [Complex64; 2] = [
    Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
    Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
];

#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    amplitudes: Vec<Complex64>,
    n_modes: usize,
    n_max: usize,
}

/// Reduced spin density matrix summaries.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinObservables {
    pub mz: f64,
    /// `|⟨+|ρ_spin|-⟩|`.
    pub coherence: f64,
    pub min_eigenvalue: f64,
}

impl QuantumState {
    pub fn new(params: &SpinBosonParams, amplitudes: Vec<Complex64>) -> Result<Self> {
        let expected = params.dimension().unwrap_or(usize::MAX);
        if amplitudes.len() != expected {
            return Err(SpinBosonError::dimension_mismatch(expected, amplitudes.len()));
        }
        Ok(Self {
            amplitudes,
            n_modes: params.n_modes(),
            n_max: params.n_max,
        })
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut Vec<Complex64> {
        &mut self.amplitudes
    }

    pub fn dimension(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= STATE_NORM_TOLERANCE
    }

    fn bath_dimension(&self) -> usize {
        self.amplitudes.len() / 2
    }

    pub fn spin_observables(&self) -> SpinObservables {
        let b = self.bath_dimension();
        let (plus, minus) = self.amplitudes.split_at(b);
        let p_plus: f64 = plus.iter().map(|a| a.norm_sqr()).sum();
        let p_minus: f64 = minus.iter().map(|a| a.norm_sqr()).sum();
        let off: Complex64 = plus.iter().zip(minus).map(|(p, m)| p * m.conj()).sum();
        let trace = p_plus + p_minus;
        let gap = ((p_plus - p_minus).powi(2) + 4.0 * off.norm_sqr()).sqrt();
        SpinObservables {
            mz: p_plus - p_minus,
            coherence: off.norm(),
            min_eigenvalue: 0.5 * (trace - gap),
        }
    }

    /// Probability that at least one mode sits at its top Fock level.
    pub fn top_occupation(&self) -> f64 {
        let levels = self.n_max + 1;
        let b = self.bath_dimension();
        let mut total = 0.0;
        for (i, a) in self.amplitudes.iter().enumerate() {
            let mut rest = i % b;
            let mut top = false;
            for _ in 0..self.n_modes {
                if rest % levels == self.n_max {
                    top = true;
                    break;
                }
                rest /= levels;
            }
            if top {
                total += a.norm_sqr();
            }
        }
        total
    }

    /// `⟨a_l† a_l⟩`.
    pub fn mode_occupation(&self, mode: usize) -> f64 {
        let levels = self.n_max + 1;
        let stride = levels.pow((self.n_modes - 1 - mode) as u32);
        let b = self.bath_dimension();
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| (((i % b) / stride) % levels) as f64 * a.norm_sqr())
            .sum()
    }
}

/// Product state `spin ⊗ |z_1⟩ ⊗ … ⊗ |z_L⟩` before truncation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    /// Amplitudes of `|+⟩` and `|-⟩`.
    pub spin: [Complex64; 2],
    /// Coherent-state displacement per bath mode; zero is the vacuum.
    pub displacements: Vec<Complex64>,
}

impl InitialState {
    pub fn vacuum(spin: [Complex64; 2], bath: &BathDiscretization) -> Self {
        Self {
            spin,
            displacements: vec![Complex64::new(0.0, 0.0); bath.modes.len()],
        }
    }

    pub fn plus(bath: &BathDiscretization) -> Self {
        Self::vacuum([Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)], bath)
    }

    pub fn cat(bath: &BathDiscretization) -> Self {
        Self::vacuum(CAT_SPIN, bath)
    }

    /// Smallest cutoff satisfying `|z|² ≤ n_max/4` for every mode.
    pub fn required_n_max(&self) -> usize {
        self.displacements
            .iter()
            .map(|z| (4.0 * z.norm_sqr()).ceil() as usize)
            .max()
            .unwrap_or(0)
            .max(1)
    }

    /// Truncates each coherent state to `0..=n_max` and renormalizes.
    pub fn build(&self, params: &SpinBosonParams) -> Result<QuantumState> {
        let n_modes = params.n_modes();
        if self.displacements.len() != n_modes {
            return Err(SpinBosonError::dimension_mismatch(n_modes, self.displacements.len()));
        }
        let spin_norm = (self.spin[0].norm_sqr() + self.spin[1].norm_sqr()).sqrt();
        if (spin_norm - 1.0).abs() > STATE_NORM_TOLERANCE {
            return Err(SpinBosonError::Unnormalized(spin_norm));
        }
        for (mode, z) in self.displacements.iter().enumerate() {
            if z.norm_sqr() > params.n_max as f64 / 4.0 {
                return Err(SpinBosonError::DisplacementTooLarge {
                    mode,
                    z2: z.norm_sqr(),
                    n_max: params.n_max,
                });
            }
        }
        let factors: Vec<Vec<Complex64>> = self
            .displacements
            .iter()
            .map(|&z| coherent_amplitudes(z, params.n_max))
            .collect();
        let levels = params.n_max + 1;
        let bath_dim = params.bath_dimension().expect("validated");
        let mut bath = vec![Complex64::new(0.0, 0.0); bath_dim];
        for (b, out) in bath.iter_mut().enumerate() {
            let mut rest = b;
            let mut amp = Complex64::new(1.0, 0.0);
            for l in (0..n_modes).rev() {
                amp *= factors[l][rest % levels];
                rest /= levels;
            }
            *out = amp;
        }
        let mut amplitudes = Vec::with_capacity(2 * bath_dim);
        for s in 0..2 {
            amplitudes.extend(bath.iter().map(|b| b * self.spin[s] / spin_norm));
        }
        QuantumState::new(params, amplitudes)
    }
}

/// Fock amplitudes `e^{-|z|²/2} zⁿ/√n!` for `n ≤ n_max`, renormalized.
pub fn coherent_amplitudes(z: Complex64, n_max: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(n_max + 1);
    let mut c = Complex64::new((-0.5 * z.norm_sqr()).exp(), 0.0);
    out.push(c);
    for n in 1..=n_max {
        c = c * z / (n as f64).sqrt();
        out.push(c);
    }
    let norm = out.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    out.iter_mut().for_each(|a| *a /= norm);
    out
}

/// Bose-Einstein occupation `1/(e^{ω/T} - 1)`; zero at `T = 0`.
pub fn bose_occupation(omega: f64, temperature: f64) -> f64 {
    if temperature <= 0.0 {
        return 0.0;
    }
    1.0 / (omega / temperature).exp_m1()
}

/// Thermal coherent displacements, `z_l` complex Gaussian with
/// `E|z_l|² = n̄(ω_l, T)`.
pub fn sample_bath_displacements(bath: &BathDiscretization, temperature: f64, seed: u64) -> Vec<Complex64> {
    if temperature <= 0.0 {
        return vec![Complex64::new(0.0, 0.0); bath.modes.len()];
    }
    let mut rng = rng_from_seed(seed);
    bath.modes
        .iter()
        .map(|m| {
            let sigma = (0.5 * bose_occupation(m.omega, temperature)).sqrt();
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(sigma * re, sigma * im)
        })
        .collect()
}

/// Cat spin state times a thermally sampled coherent bath.
pub fn sample_initial_bath(params: &SpinBosonParams, temperature: f64, seed: u64) -> Result<QuantumState> {
    if !(temperature >= 0.0) {
        return Err(SpinBosonError::InvalidParams(format!(
            "bath temperature must be >= 0, got {temperature}"
        )));
    }
    InitialState {
        spin: CAT_SPIN,
        displacements: sample_bath_displacements(&params.bath, temperature, seed),
    }
    .build(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spinboson::BathMode;

    fn params(n_max: usize) -> SpinBosonParams {
        let bath = BathDiscretization::from_modes(vec![
            BathMode { omega: 0.5, lambda: 0.1 },
            BathMode { omega: 1.5, lambda: 0.2 },
        ])
        .unwrap();
        SpinBosonParams::new(0.1, 0.0, bath, n_max).unwrap()
    }

    #[test]
    fn cat_vacuum_observables() {
        let p = params(3);
        let psi = InitialState::cat(&p.bath).build(&p).unwrap();
        let obs = psi.spin_observables();
        assert!(obs.mz.abs() < 1e-15);
        assert!((obs.coherence - 0.5).abs() < 1e-15);
        assert!(obs.min_eigenvalue.abs() < 1e-15);
        assert_eq!(psi.top_occupation(), 0.0);
    }

    #[test]
    fn zero_temperature_is_vacuum_for_any_seed() {
        let p = params(4);
        let a = sample_initial_bath(&p, 0.0, 1).unwrap();
        let b = sample_initial_bath(&p, 0.0, 2).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, InitialState::cat(&p.bath).build(&p).unwrap());
    }

    #[test]
    fn displacement_limit() {
        let p = params(4);
        let init = InitialState {
            spin: CAT_SPIN,
            displacements: vec![Complex64::new(1.1, 0.0), Complex64::new(0.0, 0.0)],
        };
        assert!(matches!(init.build(&p), Err(SpinBosonError::DisplacementTooLarge { mode: 0, .. })));
        assert_eq!(init.required_n_max(), 5);
        assert!(init.build(&p.with_n_max(5)).is_ok());
    }

    #[test]
    fn coherent_occupation() {
        let p = params(20);
        let z = Complex64::new(0.6, -0.8);
        let init = InitialState {
            spin: CAT_SPIN,
            displacements: vec![Complex64::new(0.0, 0.0), z],
        };
        let psi = init.build(&p).unwrap();
        assert!((psi.mode_occupation(1) - 1.0).abs() < 1e-12);
        assert!(psi.mode_occupation(0).abs() < 1e-15);
    }
}
