//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::PathBuf;

use catcollapse::Complex64;
use nalgebra::{DMatrix, SymmetricEigen};

pub fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// `∫_a^b f` with a composite Gauss–Legendre rule of `panels × order` points.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    let rule = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for &(x, w) in &rule {
            total += w * 0.5 * h * f(mid + 0.5 * h * x);
        }
    }
    total
}

/// Mean `|k|` under the density `exp(-|k - k0|²/2Δ²)` by cylindrical
/// quadrature about the `k0` axis.
pub fn mean_energy_quadrature(k0: f64, delta0: f64) -> f64 {
    let reach = 9.0 * delta0;
    let inner = |z: f64| {
        let weight_z = (-z * z / (2.0 * delta0 * delta0)).exp();
        let radial = |rho: f64| {
            let w = rho * (-rho * rho / (2.0 * delta0 * delta0)).exp();
            (w * (rho * rho + (k0 + z) * (k0 + z)).sqrt(), w)
        };
        let num = integrate(|r| radial(r).0, 0.0, reach, 12, 16);
        let den = integrate(|r| radial(r).1, 0.0, reach, 12, 16);
        (weight_z * num, weight_z * den)
    };
    let num = integrate(|z| inner(z).0, -reach, reach, 24, 16);
    let den = integrate(|z| inner(z).1, -reach, reach, 24, 16);
    num / den
}

/// `Σ_k exp(-(k - k0)²/2Δ²)` over a box `[k0 - w, k0 + w]` in the continuum
/// limit, per unit `dk`: the erf-truncated Gaussian integral.
pub fn truncated_gaussian_sum(delta0: f64, half_width: f64, dk: f64) -> f64 {
    let per_axis = delta0 * (2.0 * PI).sqrt() * statrs::function::erf::erf(half_width / (delta0 * 2f64.sqrt())) / dk;
    per_axis.powi(3)
}

/// `e^{-iHt}ψ` through a full eigendecomposition of the dense matrix.
pub fn dense_propagate(h: &DMatrix<f64>, psi: &[Complex64], t: f64) -> Vec<Complex64> {
    let eig = SymmetricEigen::new(h.clone());
    let q = &eig.eigenvectors;
    let n = psi.len();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n {
        let c: Complex64 = (0..n).map(|i| psi[i] * q[(i, k)]).sum();
        coeffs[k] = c * Complex64::from_polar(1.0, -eig.eigenvalues[k] * t);
    }
    (0..n)
        .map(|i| (0..n).map(|k| coeffs[k] * q[(i, k)]).sum())
        .collect()
}

/// Direct series `g_s(z) = Σ zⁿ / nˢ`, for `z` well below one.
pub fn polylog_series(s: f64, z: f64) -> f64 {
    let mut total = 0.0;
    let mut power = 1.0;
    for n in 1..20_000 {
        power *= z;
        let term = power / (n as f64).powf(s);
        total += term;
        if term < 1e-18 * total {
            break;
        }
    }
    total
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Three binomial standard errors.
pub fn three_sigma(p: f64, n: usize) -> f64 {
    3.0 * (p * (1.0 - p) / n as f64).sqrt()
}
