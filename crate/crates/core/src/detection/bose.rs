//! Ideal Bose gas thermodynamics at fixed particle number and volume.
//!
//! Temperatures are measured in units of the condensation temperature
//! `T_c`, energies in units of `N T_c`. Below `T_c` the chemical potential
//! is pinned at zero and `U = (3/2) N T (T/T_c)^{3/2} ζ(5/2)/ζ(3/2)`; above,
//! the fugacity solves `g_{3/2}(z) = ζ(3/2) (T_c/T)^{3/2}` and
//! `U = (3/2) N T g_{5/2}(z) / g_{3/2}(z)`. Both branches meet at `T_c`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use statrs::function::gamma::gamma;

pub const ZETA_3_2: f64 = 2.612_375_348_685_488_3;
pub const ZETA_5_2: f64 = 1.341_487_257_250_917_2;

const BERNOULLI_2K: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

/// Riemann zeta for real `s ≠ 1`.
///
/// Euler–Maclaurin summation for `s > 0`, the functional equation for `s < 0`.
pub fn zeta(s: f64) -> f64 {
    if s == 1.0 {
        return f64::INFINITY;
    }
    if s == 0.0 {
        return -0.5;
    }
    if s < 0.0 {
        let t = 1.0 - s;
        return 2f64.powf(s) * PI.powf(s - 1.0) * (0.5 * PI * s).sin() * gamma(t) * zeta(t);
    }
    const N: usize = 10;
    let n = N as f64;
    let mut sum: f64 = (1..N).map(|k| (k as f64).powf(-s)).sum();
    sum += n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s);
    // Rising factorial s (s+1) ... (s+2k-2) / (2k)!, updated incrementally.
    let mut factor = s / 2.0;
    let mut power = n.powf(-s - 1.0);
    for (k, b) in BERNOULLI_2K.iter().enumerate() {
        if k > 0 {
            let j = 2.0 * k as f64;
            factor *= (s + j - 1.0) * (s + j) / ((j + 1.0) * (j + 2.0));
            power /= n * n;
        }
        sum += b * factor * power;
    }
    sum
}

/// Bose–Einstein function `g_s(z) = Σ_{k≥1} z^k / k^s` for `0 ≤ z ≤ 1`, `s > 1`
/// non-integer.
pub fn bose_function(s: f64, z: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&z), "fugacity out of range: {z}");
    if z <= 0.0 {
        return 0.0;
    }
    if z <= 0.5 {
        let mut sum = 0.0;
        let mut zk = z;
        for k in 1..200 {
            let term = zk / (k as f64).powf(s);
            sum += term;
            if term < 1e-18 * sum {
                break;
            }
            zk *= z;
        }
        return sum;
    }
    // Expansion about z = 1 in μ = ln z, valid for |μ| < 2π.
    let mu = z.ln();
    let table = shifted_zeta(s);
    let mut sum = if mu < 0.0 {
        let g = match table {
            Some(t) => t.gamma,
            None => gamma(1.0 - s),
        };
        g * (-mu).powf(s - 1.0)
    } else {
        0.0
    };
    let mut mu_k_over_fact = 1.0;
    for k in 0..SERIES_TERMS {
        if k > 0 {
            mu_k_over_fact *= mu / k as f64;
        }
        let z = match table {
            Some(t) => t.zeta[k],
            None => zeta(s - k as f64),
        };
        let term = z * mu_k_over_fact;
        sum += term;
        if k > 4 && term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

const SERIES_TERMS: usize = 60;

/// `Γ(1 - s)` and `ζ(s - k)` for `k < SERIES_TERMS`.
struct SeriesTable {
    gamma: f64,
    zeta: [f64; SERIES_TERMS],
}

/// Series coefficients, cached for the two orders the gas thermodynamics
/// needs.
fn shifted_zeta(s: f64) -> Option<&'static SeriesTable> {
    static HALF_3: OnceLock<SeriesTable> = OnceLock::new();
    static HALF_5: OnceLock<SeriesTable> = OnceLock::new();
    let cell = if s == 1.5 {
        &HALF_3
    } else if s == 2.5 {
        &HALF_5
    } else {
        return None;
    };
    Some(cell.get_or_init(|| SeriesTable {
        gamma: gamma(1.0 - s),
        zeta: std::array::from_fn(|k| zeta(s - k as f64)),
    }))
}

/// Fugacity `z` at reduced temperature `t = T/T_c`; unity at and below `T_c`.
pub fn fugacity(t: f64) -> f64 {
    if t <= 1.0 {
        return 1.0;
    }
    let target = ZETA_3_2 * t.powf(-1.5);
    // g_{3/2}(z) lies between z and ζ(3/2) z on [0, 1].
    let lo = target / ZETA_3_2;
    let hi = target.min(1.0);
    illinois(|z| bose_function(1.5, z) - target, lo, hi, 1e-15).unwrap_or(0.5 * (lo + hi))
}

/// Root of a continuous `f` bracketed by `[lo, hi]` via the Illinois variant
/// of regula falsi. `None` if the bracket is invalid or 200 steps do not
/// reach `|b - a| <= rtol |b|`.
pub(crate) fn illinois(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, rtol: f64) -> Option<f64> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    for _ in 0..200 {
        let mut c = (a * fb - b * fa) / (fb - fa);
        if !(c > a.min(b) && c < a.max(b)) {
            c = 0.5 * (a + b);
        }
        let fc = f(c);
        if fc == 0.0 {
            return Some(c);
        }
        if fc.signum() != fb.signum() {
            a = b;
            fa = fb;
        } else {
            fa *= 0.5;
        }
        b = c;
        fb = fc;
        if (b - a).abs() <= rtol * b.abs() {
            return Some(b);
        }
    }
    None
}

/// Internal energy per particle in units of `T_c`, at reduced temperature `t`.
pub fn reduced_energy(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t <= 1.0 {
        1.5 * t.powf(2.5) * ZETA_5_2 / ZETA_3_2
    } else {
        let z = fugacity(t);
        1.5 * t * bose_function(2.5, z) / bose_function(1.5, z)
    }
}

/// Internal energy of `n` ideal bosons at temperature `temperature`, given
/// the condensation temperature `critical`.
pub fn internal_energy(temperature: f64, critical: f64, n: f64) -> f64 {
    n * critical * reduced_energy(temperature / critical)
}
