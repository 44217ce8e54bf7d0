use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::HarnessError;

/// CSV body assembled in memory, written once.
pub(crate) struct Csv {
    text: String,
}

impl Csv {
    pub fn new(config_sha256: &str, seed: u64, header: &str) -> Self {
        let mut text = String::new();
        let _ = writeln!(text, "# config_sha256={config_sha256} seed={seed}");
        let _ = writeln!(text, "{header}");
        Self { text }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }
}

/// Collects every file a command writes below the output directory.
pub(crate) struct OutputDir {
    dir: PathBuf,
    pub files: Vec<String>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self, HarnessError> {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), HarnessError> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|e| HarnessError::io(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn csv(&mut self, name: &str, csv: Csv) -> Result<(), HarnessError> {
        self.write(name, &csv.text)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), HarnessError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| HarnessError::Invalid(e.to_string()))?;
        text.push('\n');
        self.write(name, &text)
    }
}

/// Three-sigma binomial half-width `3 sqrt(p(1-p)/n)`.
pub fn binomial_half_width(p: f64, n: usize) -> f64 {
    3.0 * (p * (1.0 - p) / n as f64).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
}

/// Pearson goodness of fit of `counts` against `probabilities`.
///
/// Categories with zero expected probability are dropped; observing one of
/// them gives `p = 0`.
pub fn chi_square_test(counts: &[usize], probabilities: &[f64]) -> ChiSquareTest {
    let n: usize = counts.iter().sum();
    let mut statistic = 0.0;
    let mut categories = 0usize;
    let mut impossible = false;
    for (&c, &p) in counts.iter().zip(probabilities) {
        if p > 0.0 {
            let expected = n as f64 * p;
            statistic += (c as f64 - expected).powi(2) / expected;
            categories += 1;
        } else if c > 0 {
            impossible = true;
        }
    }
    let degrees_of_freedom = categories.saturating_sub(1);
    let p_value = if impossible {
        0.0
    } else if degrees_of_freedom == 0 {
        1.0
    } else {
        let dist = ChiSquared::new(degrees_of_freedom as f64).expect("positive degrees of freedom");
        dist.sf(statistic)
    };
    ChiSquareTest {
        statistic,
        degrees_of_freedom,
        p_value,
    }
}

/// Shortest round-trip formatting, shared by every CSV column.
pub(crate) fn num(x: f64) -> String {
    format!("{x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_fit_has_unit_p_value() {
        let t = chi_square_test(&[70, 25, 5], &[0.7, 0.25, 0.05]);
        assert_eq!(t.statistic, 0.0);
        assert_eq!(t.degrees_of_freedom, 2);
        assert!((t.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_dof_survival_is_exponential() {
        // For two degrees of freedom the survival function is exp(-x/2).
        let t = chi_square_test(&[60, 30, 10], &[0.7, 0.25, 0.05]);
        let x = 100.0 / 70.0 + 25.0 / 25.0 + 25.0 / 5.0;
        assert!((t.statistic - x).abs() < 1e-12);
        assert!((t.p_value - (-x / 2.0).exp()).abs() < 1e-12);
    }

    #[test]
    fn impossible_category() {
        let t = chi_square_test(&[9, 1], &[1.0, 0.0]);
        assert_eq!(t.p_value, 0.0);
        let t = chi_square_test(&[10, 0], &[1.0, 0.0]);
        assert_eq!(t.p_value, 1.0);
    }
}
