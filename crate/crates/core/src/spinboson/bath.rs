use log::warn;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, gamma_lr, gamma_ur};

use super::{Result, SpinBosonError};

/// Upper edge of the discretized band, in units of `ω_c`.
pub const BATH_UPPER_CUTOFFS: f64 = 5.0;

/// `J(ω) = 2π α ω^s e^{-ω/ω_c}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralFunction {
    pub alpha: f64,
    pub s: f64,
    pub omega_c: f64,
}

impl SpectralFunction {
    pub fn new(alpha: f64, s: f64, omega_c: f64) -> Result<Self> {
        let j = Self { alpha, s, omega_c };
        j.validate()?;
        Ok(j)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(SpinBosonError::InvalidSpectralFunction(format!(
                "alpha must be finite and >= 0, got {}",
                self.alpha
            )));
        }
        if !(self.s > 0.0 && self.s.is_finite()) {
            return Err(SpinBosonError::InvalidSpectralFunction(format!(
                "s must be > 0, got {}",
                self.s
            )));
        }
        if !(self.omega_c > 0.0 && self.omega_c.is_finite()) {
            return Err(SpinBosonError::InvalidSpectralFunction(format!(
                "omega_c must be > 0, got {}",
                self.omega_c
            )));
        }
        Ok(())
    }

    pub fn eval(&self, omega: f64) -> f64 {
        if omega <= 0.0 {
            return 0.0;
        }
        2.0 * std::f64::consts::PI * self.alpha * omega.powf(self.s) * (-omega / self.omega_c).exp()
    }

    /// `∫_a^b J(ω) dω` in closed form.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        2.0 * std::f64::consts::PI * self.alpha * self.moment(0, a, b)
    }

    /// `∫_a^b ω^{s+p} e^{-ω/ω_c} dω` through regularized incomplete gammas.
    fn moment(&self, p: u32, a: f64, b: f64) -> f64 {
        let order = self.s + 1.0 + p as f64;
        let (xa, xb) = (a.max(0.0) / self.omega_c, b.max(0.0) / self.omega_c);
        // Subtract in whichever tail keeps the difference well conditioned.
        let fraction = if xa > order {
            gamma_ur(order, xa) - gamma_ur(order, xb)
        } else {
            gamma_lr(order, xb) - gamma_lr(order, xa)
        };
        self.omega_c.powf(order) * gamma(order) * fraction
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BathMode {
    pub omega: f64,
    pub lambda: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BathDiscretization {
    pub modes: Vec<BathMode>,
    /// Frequency bin `[lo, hi)` each mode represents.
    pub bins: Vec<(f64, f64)>,
    pub scheme: String,
}

impl BathDiscretization {
    /// Bath with explicitly chosen modes (no binning).
    pub fn from_modes(modes: Vec<BathMode>) -> Result<Self> {
        let bins = modes.iter().map(|m| (m.omega, m.omega)).collect();
        let bath = Self {
            modes,
            bins,
            scheme: "explicit".into(),
        };
        bath.validate()?;
        Ok(bath)
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes.is_empty() {
            return Err(SpinBosonError::InvalidBath("at least one mode is required".into()));
        }
        for (l, m) in self.modes.iter().enumerate() {
            if !(m.omega > 0.0 && m.omega.is_finite()) {
                return Err(SpinBosonError::InvalidBath(format!(
                    "mode {l}: omega must be > 0, got {}",
                    m.omega
                )));
            }
            if !(m.lambda >= 0.0 && m.lambda.is_finite()) {
                return Err(SpinBosonError::InvalidBath(format!(
                    "mode {l}: lambda must be >= 0, got {}",
                    m.lambda
                )));
            }
        }
        Ok(())
    }

    /// `Σ_l λ_l² / ω_l²`, the squared polaron displacement summed over modes.
    pub fn reorganization(&self) -> f64 {
        self.modes.iter().map(|m| (m.lambda / m.omega).powi(2)).sum()
    }
}

/// Logarithmic bins on `[omega_min, 5 ω_c]`; per bin `λ² = (1/π)∫J` and `ω`
/// is the `J`-weighted mean frequency.
pub fn discretize_bath(j: &SpectralFunction, modes: usize, omega_min: f64) -> Result<BathDiscretization> {
    j.validate()?;
    if modes < 1 {
        return Err(SpinBosonError::InvalidBath("need at least one mode".into()));
    }
    if !(omega_min > 0.0 && omega_min < j.omega_c) {
        return Err(SpinBosonError::InvalidBath(format!(
            "omega_min must lie in (0, omega_c), got {omega_min}"
        )));
    }
    let omega_max = BATH_UPPER_CUTOFFS * j.omega_c;
    let ratio = (omega_max / omega_min).powf(1.0 / modes as f64);
    let mut out = Vec::with_capacity(modes);
    let mut bins = Vec::with_capacity(modes);
    for l in 0..modes {
        let lo = omega_min * ratio.powi(l as i32);
        let hi = if l + 1 == modes {
            omega_max
        } else {
            omega_min * ratio.powi(l as i32 + 1)
        };
        let m0 = j.moment(0, lo, hi);
        let m1 = j.moment(1, lo, hi);
        if !(m0 > f64::MIN_POSITIVE && m1.is_finite()) {
            warn!("bath bin [{lo}, {hi}) carries no spectral weight; mode dropped");
            continue;
        }
        out.push(BathMode {
            omega: m1 / m0,
            lambda: (2.0 * j.alpha * m0).sqrt(),
        });
        bins.push((lo, hi));
    }
    if out.is_empty() {
        return Err(SpinBosonError::InvalidBath("every bin was empty".into()));
    }
    Ok(BathDiscretization {
        modes: out,
        bins,
        scheme: "logarithmic".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_coupling_gives_zero_lambdas() {
        let j = SpectralFunction::new(0.0, 1.0, 1.0).unwrap();
        let bath = discretize_bath(&j, 4, 0.05).unwrap();
        assert_eq!(bath.modes.len(), 4);
        assert!(bath.modes.iter().all(|m| m.lambda == 0.0 && m.omega > 0.0));
    }

    #[test]
    fn representative_frequencies_lie_in_their_bins() {
        let j = SpectralFunction::new(0.2, 0.7, 2.0).unwrap();
        let bath = discretize_bath(&j, 6, 0.01).unwrap();
        for (m, (lo, hi)) in bath.modes.iter().zip(&bath.bins) {
            assert!(*lo < m.omega && m.omega < *hi);
        }
        assert!((bath.bins[0].0 - 0.01).abs() < 1e-15);
        assert!((bath.bins[5].1 - 10.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_window() {
        let j = SpectralFunction::new(0.1, 1.0, 1.0).unwrap();
        assert!(discretize_bath(&j, 3, 1.5).is_err());
        assert!(discretize_bath(&j, 0, 0.1).is_err());
        assert!(SpectralFunction::new(-0.1, 1.0, 1.0).is_err());
    }
}
