//! Single-photon Gaussian wavepackets in momentum space.
//!
//! A photon state is a set of complex coefficients `C[k, α]` on a uniform
//! cell-centred Cartesian momentum grid. The grid spacing fixes the
//! quantization volume through `Σ_k ↔ V ∫ d³k / (2π)³`, i.e.
//! `V = (2π / dk)³`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{dot3, norm3, sub3, Vec3};

/// Ratio `delta0 / |k0|` above which a pulse is no longer considered narrow.
pub const NARROW_PULSE_RATIO: f64 = 0.1;

/// Half-width of the default pulse box, in units of `delta0`.
pub const PULSE_BOX_HALF_WIDTHS: f64 = 5.0;

/// Tolerance on `Σ|C|² - 1` used when an operation requires a normalized state.
pub const NORM_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WavepacketError {
    #[error("grid too coarse: delta0 = {delta0} needs dk <= {max_dk}, got dk = {dk}")]
    GridTooCoarse { delta0: f64, dk: f64, max_dk: f64 },
    #[error("center wavevector {k0:?} lies outside the grid extent")]
    OutsideGrid { k0: Vec3 },
    #[error("invalid pulse: {0}")]
    InvalidPulse(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("state is not normalized: sum |C|^2 = {0}")]
    Unnormalized(f64),
    #[error("wavepackets are defined on different grids")]
    GridMismatch,
    #[error("{got} coefficients supplied for a grid of {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, WavepacketError>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WaveVector(pub Vec3);

impl WaveVector {
    pub fn new(kx: f64, ky: f64, kz: f64) -> Self {
        Self([kx, ky, kz])
    }

    pub fn norm(&self) -> f64 {
        norm3(self.0)
    }

    /// Unit vector along `k`; the zero vector maps to itself.
    pub fn unit(&self) -> Vec3 {
        let n = self.norm();
        if n == 0.0 {
            [0.0; 3]
        } else {
            [self.0[0] / n, self.0[1] / n, self.0[2] / n]
        }
    }

    pub fn distance(&self, other: &WaveVector) -> f64 {
        norm3(sub3(self.0, other.0))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

/// Photon polarization index, 1 or 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Polarization {
    One,
    Two,
}

impl Polarization {
    pub const BOTH: [Polarization; 2] = [Polarization::One, Polarization::Two];

    /// The orthogonal polarization, `ᾱ = 3 - α`.
    pub fn bar(self) -> Self {
        match self {
            Polarization::One => Polarization::Two,
            Polarization::Two => Polarization::One,
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Polarization::One => 1,
            Polarization::Two => 2,
        }
    }

    pub(crate) fn slot(self) -> usize {
        usize::from(self.index() - 1)
    }
}

impl TryFrom<u8> for Polarization {
    type Error = String;

    fn try_from(value: u8) -> std::result::Result<Self, Self::Error> {
        match value {
            1 => Ok(Polarization::One),
            2 => Ok(Polarization::Two),
            other => Err(format!("polarization must be 1 or 2, got {other}")),
        }
    }
}

impl From<Polarization> for u8 {
    fn from(p: Polarization) -> u8 {
        p.index()
    }
}

impl std::fmt::Display for Polarization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// Gaussian pulse parameters: center wavevector, width and polarization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianPulseSpec {
    pub k0: WaveVector,
    pub delta0: f64,
    pub alpha0: Polarization,
}

impl GaussianPulseSpec {
    pub fn new(k0: WaveVector, delta0: f64, alpha0: Polarization) -> Result<Self> {
        let spec = Self { k0, delta0, alpha0 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta0 > 0.0 && self.delta0.is_finite()) {
            return Err(WavepacketError::InvalidPulse(format!(
                "delta0 must be positive and finite, got {}",
                self.delta0
            )));
        }
        if !self.k0.is_finite() {
            return Err(WavepacketError::InvalidPulse(format!(
                "k0 must be finite, got {:?}",
                self.k0.0
            )));
        }
        if !self.is_narrow() {
            log::warn!(
                "pulse is not narrow: delta0 / |k0| = {:.3} exceeds {NARROW_PULSE_RATIO}",
                self.delta0 / self.k0.norm()
            );
        }
        Ok(())
    }

    pub fn is_narrow(&self) -> bool {
        self.delta0 <= NARROW_PULSE_RATIO * self.k0.norm()
    }

    /// Group velocity `∇_k ω = k̂` (with `c = 1`).
    pub fn group_velocity(&self) -> Vec3 {
        self.k0.unit()
    }

    /// Pulse centre `k̂₀ t` for a pulse launched from the origin at `t = 0`.
    pub fn center_at(&self, t: f64) -> Vec3 {
        let v = self.group_velocity();
        [v[0] * t, v[1] * t, v[2] * t]
    }
}

/// Uniform, cell-centred cubic-cell momentum grid.
///
/// Node `(i, j, l)` sits at `lo + (index + 1/2) dk` on each axis.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentumGrid {
    lo: Vec3,
    dk: f64,
    counts: [usize; 3],
}

impl MomentumGrid {
    /// Grid symmetric about `center` covering at least `half_width` on each axis.
    pub fn new(center: WaveVector, half_width: Vec3, dk: f64) -> Result<Self> {
        if !(dk > 0.0 && dk.is_finite()) {
            return Err(WavepacketError::InvalidGrid(format!(
                "dk must be positive, got {dk}"
            )));
        }
        if !center.is_finite() || half_width.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
            return Err(WavepacketError::InvalidGrid(
                "center must be finite and half-widths positive".into(),
            ));
        }
        let mut counts = [0usize; 3];
        let mut lo = [0.0; 3];
        for axis in 0..3 {
            // Tolerate rounding so that e.g. 5Δ / (Δ/4) gives exactly 20 cells.
            let half_cells = (half_width[axis] / dk - 1e-9).ceil().max(1.0) as usize;
            counts[axis] = 2 * half_cells;
            lo[axis] = center.0[axis] - half_cells as f64 * dk;
        }
        Ok(Self { lo, dk, counts })
    }

    /// The default box of half-width `5 delta0` around the pulse centre.
    pub fn for_pulse(spec: &GaussianPulseSpec, dk: f64) -> Result<Self> {
        let hw = PULSE_BOX_HALF_WIDTHS * spec.delta0;
        Self::new(spec.k0, [hw; 3], dk)
    }

    /// Smallest grid containing the default boxes of every pulse.
    pub fn bounding(specs: &[GaussianPulseSpec], dk: f64) -> Result<Self> {
        if specs.is_empty() {
            return Err(WavepacketError::InvalidGrid("no pulses supplied".into()));
        }
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for spec in specs {
            let hw = PULSE_BOX_HALF_WIDTHS * spec.delta0;
            for axis in 0..3 {
                lo[axis] = lo[axis].min(spec.k0.0[axis] - hw);
                hi[axis] = hi[axis].max(spec.k0.0[axis] + hw);
            }
        }
        let center = WaveVector([
            0.5 * (lo[0] + hi[0]),
            0.5 * (lo[1] + hi[1]),
            0.5 * (lo[2] + hi[2]),
        ]);
        let half = [
            0.5 * (hi[0] - lo[0]),
            0.5 * (hi[1] - lo[1]),
            0.5 * (hi[2] - lo[2]),
        ];
        Self::new(center, half, dk)
    }

    pub fn dk(&self) -> f64 {
        self.dk
    }

    pub fn counts(&self) -> [usize; 3] {
        self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Quantization volume `V = (2π / dk)³`.
    pub fn volume(&self) -> f64 {
        (2.0 * PI / self.dk).powi(3)
    }

    pub fn contains(&self, k: &WaveVector) -> bool {
        (0..3).all(|axis| {
            let hi = self.lo[axis] + self.counts[axis] as f64 * self.dk;
            k.0[axis] >= self.lo[axis] && k.0[axis] <= hi
        })
    }

    pub fn node(&self, index: usize) -> WaveVector {
        let [_, ny, nz] = self.counts;
        let i = index / (ny * nz);
        let j = (index / nz) % ny;
        let l = index % nz;
        WaveVector([
            self.lo[0] + (i as f64 + 0.5) * self.dk,
            self.lo[1] + (j as f64 + 0.5) * self.dk,
            self.lo[2] + (l as f64 + 0.5) * self.dk,
        ])
    }

    pub fn nodes(&self) -> impl Iterator<Item = WaveVector> + '_ {
        (0..self.len()).map(move |idx| self.node(idx))
    }
}

/// Photon state: coefficients per grid node and polarization, plus the
/// elapsed free-propagation time.
#[derive(Clone, Debug, PartialEq)]
pub struct WavepacketState {
    grid: MomentumGrid,
    coeffs: Vec<[Complex64; 2]>,
    t: f64,
}

impl WavepacketState {
    pub fn from_coefficients(
        grid: MomentumGrid,
        coeffs: Vec<[Complex64; 2]>,
        t: f64,
    ) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(WavepacketError::LengthMismatch {
                expected: grid.len(),
                got: coeffs.len(),
            });
        }
        Ok(Self { grid, coeffs, t })
    }

    pub fn grid(&self) -> &MomentumGrid {
        &self.grid
    }

    pub fn coefficients(&self) -> &[[Complex64; 2]] {
        &self.coeffs
    }

    pub fn coefficient(&self, index: usize, alpha: Polarization) -> Complex64 {
        self.coeffs[index][alpha.slot()]
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn norm_sqr(&self) -> f64 {
        compensated_sum(
            self.coeffs
                .iter()
                .map(|c| c[0].norm_sqr() + c[1].norm_sqr()),
        )
    }

    fn ensure_normalized(&self) -> Result<()> {
        let n = self.norm_sqr();
        if (n - 1.0).abs() > NORM_TOLERANCE {
            Err(WavepacketError::Unnormalized(n))
        } else {
            Ok(())
        }
    }
}

/// Builds the discretely renormalized Gaussian
/// `C ∝ exp(-|k - k0|² / 4Δ₀²) δ_{α,α₀}` on `grid`.
pub fn build_gaussian(spec: &GaussianPulseSpec, grid: &MomentumGrid) -> Result<WavepacketState> {
    build_gaussian_with_normalization(spec, grid).map(|(state, _)| state)
}

/// Like [`build_gaussian`], also returning the pre-normalization sum
/// `N = Σ_k exp(-|k - k0|² / 2Δ₀²)`.
pub fn build_gaussian_with_normalization(
    spec: &GaussianPulseSpec,
    grid: &MomentumGrid,
) -> Result<(WavepacketState, f64)> {
    spec.validate()?;
    let max_dk = 0.5 * spec.delta0;
    if grid.dk() > max_dk {
        return Err(WavepacketError::GridTooCoarse {
            delta0: spec.delta0,
            dk: grid.dk(),
            max_dk,
        });
    }
    if !grid.contains(&spec.k0) {
        return Err(WavepacketError::OutsideGrid { k0: spec.k0.0 });
    }

    let inv_four_delta_sq = 1.0 / (4.0 * spec.delta0 * spec.delta0);
    let amplitudes: Vec<f64> = grid
        .nodes()
        .map(|k| {
            let d = sub3(k.0, spec.k0.0);
            (-dot3(d, d) * inv_four_delta_sq).exp()
        })
        .collect();
    let normalization = compensated_sum(amplitudes.iter().map(|a| a * a));
    let scale = 1.0 / normalization.sqrt();
    let slot = spec.alpha0.slot();
    let coeffs = amplitudes
        .into_iter()
        .map(|a| {
            let mut c = [Complex64::new(0.0, 0.0); 2];
            c[slot] = Complex64::new(a * scale, 0.0);
            c
        })
        .collect();
    let state = WavepacketState {
        grid: grid.clone(),
        coeffs,
        t: 0.0,
    };
    Ok((state, normalization))
}

/// Continuum value of the Gaussian normalization sum, `Δ₀³ V / (2π)^{3/2}`.
pub fn continuum_normalization(delta0: f64, grid: &MomentumGrid) -> f64 {
    delta0.powi(3) * grid.volume() / (2.0 * PI).powf(1.5)
}

/// Mean photon energy `Σ |k| |C|²`.
pub fn mean_energy(state: &WavepacketState) -> Result<f64> {
    state.ensure_normalized()?;
    Ok(compensated_sum(
        state
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, c)| state.grid.node(idx).norm() * (c[0].norm_sqr() + c[1].norm_sqr())),
    ))
}

/// Closed-form continuum mean energy of the Gaussian pulse: the mean of a
/// non-central chi distribution with three degrees of freedom and scale `Δ₀`.
pub fn continuum_mean_energy(spec: &GaussianPulseSpec) -> f64 {
    let sigma = spec.delta0;
    let k = spec.k0.norm();
    if k == 0.0 {
        return sigma * 2.0 * (2.0 / PI).sqrt();
    }
    let a = k / sigma;
    sigma
        * ((2.0 / PI).sqrt() * (-0.5 * a * a).exp()
            + (a + 1.0 / a) * statrs::function::erf::erf(a / 2f64.sqrt()))
}

/// Free evolution by `dt`: every coefficient picks up `exp(i ω(k) dt)`, `ω = |k|`.
pub fn propagate(state: &WavepacketState, dt: f64) -> WavepacketState {
    let coeffs = state
        .coeffs
        .iter()
        .enumerate()
        .map(|(idx, c)| {
            let phase = Complex64::from_polar(1.0, state.grid.node(idx).norm() * dt);
            [c[0] * phase, c[1] * phase]
        })
        .collect();
    WavepacketState {
        grid: state.grid.clone(),
        coeffs,
        t: state.t + dt,
    }
}

/// Vector-potential matrix element `⟨Ω| A(r) |ψ(t)⟩` projected on the pulse
/// polarization.
///
/// Each coefficient is weighted by the mode factor `sqrt(2π/ω) / sqrt(V)` and
/// carries the phase `exp(i(ω (t - t_state) - k·r))`, so a pulse moves along
/// `+k̂₀`. Polarization vectors are treated as constant over the narrow pulse,
/// and both polarization channels are summed.
pub fn envelope_amplitude(state: &WavepacketState, r: Vec3, t: f64) -> Complex64 {
    let dt = t - state.t;
    let inv_sqrt_volume = state.grid.volume().sqrt().recip();
    let mut acc = Complex64::new(0.0, 0.0);
    for (idx, c) in state.coeffs.iter().enumerate() {
        let amp = c[0] + c[1];
        if amp.norm_sqr() == 0.0 {
            continue;
        }
        let k = state.grid.node(idx);
        let omega = k.norm();
        if omega == 0.0 {
            continue;
        }
        let weight = (2.0 * PI / omega).sqrt();
        let phase = omega * dt - dot3(k.0, r);
        acc += amp * Complex64::from_polar(weight, phase);
    }
    acc * inv_sqrt_volume
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnvelopeSample {
    pub r: Vec3,
    pub t: f64,
    pub value: Complex64,
}

/// Evaluates the envelope at each probe point (in parallel).
pub fn envelope_scan(state: &WavepacketState, points: &[Vec3], t: f64) -> Vec<EnvelopeSample> {
    use rayon::prelude::*;
    points
        .par_iter()
        .map(|&r| EnvelopeSample {
            r,
            t,
            value: envelope_amplitude(state, r, t),
        })
        .collect()
}

/// Inner product `Σ conj(C^a) C^b` over nodes and polarizations.
pub fn pulse_overlap(a: &WavepacketState, b: &WavepacketState) -> Result<Complex64> {
    if a.grid != b.grid {
        return Err(WavepacketError::GridMismatch);
    }
    let mut re = Neumaier::default();
    let mut im = Neumaier::default();
    for (ca, cb) in a.coeffs.iter().zip(&b.coeffs) {
        let v = ca[0].conj() * cb[0] + ca[1].conj() * cb[1];
        re.add(v.re);
        im.add(v.im);
    }
    Ok(Complex64::new(re.total(), im.total()))
}

/// Least-squares Gaussian fit `A exp(-w² (x - x0)²)` to a sampled profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GaussianFit {
    pub center: f64,
    /// Inverse width `w`; for a pulse envelope this estimates `Δ₀`.
    pub inverse_width: f64,
    pub amplitude: f64,
    /// Coefficient of determination of the fitted curve against the data.
    pub r_squared: f64,
}

/// Fits a Gaussian to `(x, y)` samples by a quadratic fit of `ln y`
/// weighted by `y²`, so the noise floor in the tails carries no weight, then
/// scores the fitted curve against `y` in linear space. Returns `None` if
/// fewer than three positive samples exist or the profile is not peaked.
pub fn fit_gaussian_profile(xs: &[f64], ys: &[f64]) -> Option<GaussianFit> {
    let pts: Vec<(f64, f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(_, y)| **y > 0.0)
        .map(|(x, y)| (*x, y.ln(), y * y))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    // Centre x for conditioning.
    let xm = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    let mut m = nalgebra::Matrix3::<f64>::zeros();
    let mut rhs = nalgebra::Vector3::<f64>::zeros();
    for &(x, ly, w) in &pts {
        let u = x - xm;
        let basis = nalgebra::Vector3::new(1.0, u, u * u);
        m += basis * basis.transpose() * w;
        rhs += basis * (ly * w);
    }
    let coef = m.lu().solve(&rhs)?;
    let (c0, c1, c2) = (coef[0], coef[1], coef[2]);
    if c2 >= 0.0 {
        return None;
    }
    let u0 = -c1 / (2.0 * c2);
    let center = xm + u0;
    let amplitude = (c0 - c1 * c1 / (4.0 * c2)).exp();
    let inverse_width = (-c2).sqrt();
    let mean_y = ys.iter().sum::<f64>() / ys.len() as f64;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let fit = amplitude * (c2 * (x - center) * (x - center)).exp();
        ss_res += (y - fit) * (y - fit);
        ss_tot += (y - mean_y) * (y - mean_y);
    }
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Some(GaussianFit {
        center,
        inverse_width,
        amplitude,
        r_squared,
    })
}

#[derive(Default, Clone, Copy)]
pub(crate) struct Neumaier {
    sum: f64,
    carry: f64,
}

impl Neumaier {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn total(&self) -> f64 {
        self.sum + self.carry
    }
}

pub(crate) fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut acc = Neumaier::default();
    for v in values {
        acc.add(v);
    }
    acc.total()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(k0: Vec3, delta0: f64, alpha0: Polarization) -> GaussianPulseSpec {
        GaussianPulseSpec::new(WaveVector(k0), delta0, alpha0).unwrap()
    }

    #[test]
    fn polarization_bar_is_involution() {
        for p in Polarization::BOTH {
            assert_ne!(p.bar(), p);
            assert_eq!(p.bar().bar(), p);
            assert_eq!(p.bar().index(), 3 - p.index());
        }
        assert!(Polarization::try_from(3u8).is_err());
    }

    #[test]
    fn grid_is_symmetric_about_center() {
        let grid = MomentumGrid::new(WaveVector([0.0, 0.0, 10.0]), [5.0; 3], 0.25).unwrap();
        assert_eq!(grid.counts(), [40, 40, 40]);
        let first = grid.node(0);
        let last = grid.node(grid.len() - 1);
        for axis in 0..3 {
            let c = if axis == 2 { 10.0 } else { 0.0 };
            assert!((first.0[axis] - c + (last.0[axis] - c)).abs() < 1e-12);
        }
    }

    #[test]
    fn coarse_grid_rejected() {
        let s = spec([0.0, 0.0, 20.0], 1.0, Polarization::One);
        let grid = MomentumGrid::for_pulse(&s, 0.6).unwrap();
        assert!(matches!(
            build_gaussian(&s, &grid),
            Err(WavepacketError::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn center_outside_grid_rejected() {
        let s = spec([0.0, 0.0, 20.0], 1.0, Polarization::One);
        let grid = MomentumGrid::new(WaveVector([0.0, 0.0, 40.0]), [5.0; 3], 0.25).unwrap();
        assert!(matches!(
            build_gaussian(&s, &grid),
            Err(WavepacketError::OutsideGrid { .. })
        ));
    }

    #[test]
    fn built_state_is_normalized_and_polarized() {
        let s = spec([0.0, 0.0, 20.0], 1.0, Polarization::Two);
        let grid = MomentumGrid::for_pulse(&s, 0.5).unwrap();
        let state = build_gaussian(&s, &grid).unwrap();
        assert!((state.norm_sqr() - 1.0).abs() < 1e-12);
        assert!(state.coefficients().iter().all(|c| c[0] == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn single_node_energy_is_exact() {
        let grid = MomentumGrid::new(WaveVector([3.0, 4.0, 0.0]), [0.05; 3], 0.1).unwrap();
        // Two cells per axis; put all weight on one node.
        let mut coeffs = vec![[Complex64::new(0.0, 0.0); 2]; grid.len()];
        coeffs[0][0] = Complex64::new(1.0, 0.0);
        let state = WavepacketState::from_coefficients(grid.clone(), coeffs, 0.0).unwrap();
        assert_eq!(mean_energy(&state).unwrap(), grid.node(0).norm());
    }

    #[test]
    fn unnormalized_state_rejected() {
        let grid = MomentumGrid::new(WaveVector([0.0, 0.0, 1.0]), [0.05; 3], 0.1).unwrap();
        let mut coeffs = vec![[Complex64::new(0.0, 0.0); 2]; grid.len()];
        coeffs[0][0] = Complex64::new(2.0, 0.0);
        let state = WavepacketState::from_coefficients(grid, coeffs, 0.0).unwrap();
        assert!(matches!(mean_energy(&state), Err(WavepacketError::Unnormalized(_))));
    }

    #[test]
    fn zero_step_is_identity() {
        let s = spec([0.0, 0.0, 20.0], 1.0, Polarization::One);
        let grid = MomentumGrid::for_pulse(&s, 0.5).unwrap();
        let state = build_gaussian(&s, &grid).unwrap();
        assert_eq!(propagate(&state, 0.0), state);
    }

    #[test]
    fn orthogonal_polarizations_do_not_overlap() {
        let a = spec([0.0, 0.0, 20.0], 1.0, Polarization::One);
        let b = spec([0.0, 0.0, 20.0], 1.0, Polarization::Two);
        let grid = MomentumGrid::for_pulse(&a, 0.5).unwrap();
        let sa = build_gaussian(&a, &grid).unwrap();
        let sb = build_gaussian(&b, &grid).unwrap();
        assert_eq!(pulse_overlap(&sa, &sb).unwrap(), Complex64::new(0.0, 0.0));
        assert!((pulse_overlap(&sa, &sa).unwrap() - 1.0).norm() < 1e-12);
    }

    #[test]
    fn overlap_requires_same_grid() {
        let a = spec([0.0, 0.0, 20.0], 1.0, Polarization::One);
        let sa = build_gaussian(&a, &MomentumGrid::for_pulse(&a, 0.5).unwrap()).unwrap();
        let sb = build_gaussian(&a, &MomentumGrid::for_pulse(&a, 0.25).unwrap()).unwrap();
        assert_eq!(pulse_overlap(&sa, &sb), Err(WavepacketError::GridMismatch));
    }

    #[test]
    fn gaussian_fit_recovers_parameters() {
        let xs: Vec<f64> = (0..41).map(|i| -2.0 + 0.1 * i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * (-(1.5f64).powi(2) * (x - 0.3).powi(2)).exp()).collect();
        let fit = fit_gaussian_profile(&xs, &ys).unwrap();
        assert!((fit.center - 0.3).abs() < 1e-10);
        assert!((fit.inverse_width - 1.5).abs() < 1e-10);
        assert!((fit.amplitude - 3.0).abs() < 1e-9);
        assert!(fit.r_squared > 1.0 - 1e-12);
    }

    #[test]
    fn continuum_energy_limits() {
        let s = spec([0.0, 0.0, 20.0], 1.0, Polarization::One);
        let e = continuum_mean_energy(&s);
        // Large |k0|/Δ₀: E = |k0| + Δ₀²/|k0| up to exponentially small terms.
        assert!((e - (20.0 + 1.0 / 20.0)).abs() < 1e-12);
    }
}
