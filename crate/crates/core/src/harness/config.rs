//! JSON configuration files.
//!
//! Every config is parsed strictly (unknown keys are errors) and reported
//! with the line and column serde points at.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::causal::{CollapseEngine, ContactMode, EprScenario, UndecidedPolicy};
use crate::detection::DetectorSpec;
use crate::entangle::{
    antisymmetric_coefficients, CoefficientMatrix, Conditioning, PhotonRoute, PhotonSlot,
    TwoPhotonSpec,
};
use crate::spinboson::{
    discretize_bath, AdaptiveCutoff, CollapseProtocol, SpectralFunction, SpinBosonParams,
    DEFAULT_MAX_DIMENSION,
};
use crate::units::Units;
use crate::wavepacket::{GaussianPulseSpec, Polarization, WaveVector};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
}

/// Raw config text plus its SHA-256 digest.
#[derive(Clone, Debug)]
pub struct ConfigSource {
    pub path: PathBuf,
    pub text: String,
    pub sha256: String,
}

impl ConfigSource {
    pub fn read(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Self::from_text(path, text))
    }

    pub fn from_text(path: &Path, text: String) -> Self {
        let digest = Sha256::digest(text.as_bytes());
        let sha256 = digest.iter().map(|b| format!("{b:02x}")).collect();
        Self {
            path: path.to_path_buf(),
            text,
            sha256,
        }
    }

    pub fn parse<T: DeserializeOwned>(&self) -> Result<T, ConfigError> {
        serde_json::from_str(&self.text).map_err(|e| {
            // serde_json appends " at line L column C"; keep the bare message.
            let full = e.to_string();
            let message = match full.rfind(" at line ") {
                Some(i) => full[..i].to_string(),
                None => full,
            };
            ConfigError::Parse {
                path: self.path.clone(),
                line: e.line(),
                column: e.column(),
                message,
            }
        })
    }

    pub fn invalid(&self, message: impl std::fmt::Display) -> ConfigError {
        ConfigError::Invalid {
            path: self.path.clone(),
            message: message.to_string(),
        }
    }
}

/// Display units, e.g. `{"length": "mm", "time": "ps"}`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitsConfig {
    pub length: String,
    pub time: String,
}

impl Default for UnitsConfig {
    fn default() -> Self {
        Self {
            length: "mm".into(),
            time: "ps".into(),
        }
    }
}

fn si_prefix(symbol: &str, base: &str) -> Option<f64> {
    let prefix = symbol.strip_suffix(base)?;
    Some(match prefix {
        "" => 1.0,
        "k" => 1e3,
        "c" => 1e-2,
        "m" => 1e-3,
        "u" | "µ" => 1e-6,
        "n" => 1e-9,
        "p" => 1e-12,
        "f" => 1e-15,
        "a" => 1e-18,
        _ => return None,
    })
}

impl UnitsConfig {
    pub fn to_units(&self) -> Result<Units, String> {
        let length_m = si_prefix(&self.length, "m")
            .ok_or_else(|| format!("unknown length unit `{}`", self.length))?;
        let time_s = si_prefix(&self.time, "s")
            .ok_or_else(|| format!("unknown time unit `{}`", self.time))?;
        Ok(Units { length_m, time_s })
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseConfig {
    pub k0: [f64; 3],
    pub delta0: f64,
    #[serde(default = "default_polarization")]
    pub alpha0: Polarization,
}

fn default_polarization() -> Polarization {
    Polarization::One
}

impl PulseConfig {
    pub fn to_spec(&self) -> Result<GaussianPulseSpec, String> {
        GaussianPulseSpec::new(WaveVector(self.k0), self.delta0, self.alpha0).map_err(|e| e.to_string())
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Grid spacing; defaults to `delta0 / 4`.
    pub dk: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeScanConfig {
    /// Times at which the envelope is sampled along the propagation axis.
    pub times: Vec<f64>,
    #[serde(default = "default_scan_points")]
    pub points: usize,
    /// Half length of the sampled segment in units of `1/delta0`.
    #[serde(default = "default_scan_half_widths")]
    pub half_widths: f64,
}

fn default_scan_points() -> usize {
    81
}

fn default_scan_half_widths() -> f64 {
    4.0
}

impl Default for EnvelopeScanConfig {
    fn default() -> Self {
        Self {
            times: vec![0.0],
            points: default_scan_points(),
            half_widths: default_scan_half_widths(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WavepacketConfig {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub units: UnitsConfig,
    pub pulse: PulseConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub scan: EnvelopeScanConfig,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectConfig {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub units: UnitsConfig,
    pub pulse: PulseConfig,
    pub detector: DetectorSpec,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Flat spin-boson parameter block.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinBosonConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub alpha: f64,
    #[serde(default = "one")]
    pub s: f64,
    #[serde(default = "one")]
    pub omega_c: f64,
    pub hx: f64,
    #[serde(default)]
    pub hz: f64,
    #[serde(rename = "L")]
    pub modes: usize,
    pub n_max: usize,
    pub omega_min: f64,
    #[serde(default)]
    #[serde(rename = "bath_T")]
    pub bath_temperature: f64,
    pub t_final: f64,
    pub steps: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub max_dim: Option<usize>,
    /// Couplings for `--mode scan`.
    #[serde(default)]
    pub alpha_grid: Option<Vec<f64>>,
    /// Ensemble size for `--mode collapse`.
    #[serde(default)]
    pub n: Option<usize>,
    /// Initial spin for `--mode trajectory`: `plus` or `cat`.
    #[serde(default)]
    pub initial: Option<String>,
}

fn one() -> f64 {
    1.0
}

fn default_tol() -> f64 {
    1e-8
}

impl SpinBosonConfig {
    pub fn spectral_function(&self) -> Result<SpectralFunction, String> {
        SpectralFunction::new(self.alpha, self.s, self.omega_c).map_err(|e| e.to_string())
    }

    pub fn params(&self) -> Result<SpinBosonParams, String> {
        let bath = discretize_bath(&self.spectral_function()?, self.modes, self.omega_min)
            .map_err(|e| e.to_string())?;
        let params = SpinBosonParams {
            h: [self.hx, 0.0, self.hz],
            bath,
            n_max: self.n_max,
        };
        params.validate(self.cutoff().max_dimension).map_err(|e| e.to_string())?;
        Ok(params)
    }

    pub fn cutoff(&self) -> AdaptiveCutoff {
        AdaptiveCutoff {
            max_dimension: self.max_dim.unwrap_or(DEFAULT_MAX_DIMENSION),
            ..AdaptiveCutoff::default()
        }
    }

    pub fn protocol(&self) -> CollapseProtocol {
        CollapseProtocol {
            t_final: self.t_final,
            steps: self.steps,
            tol: self.tol,
            cutoff: self.cutoff(),
        }
    }

    pub fn validate_times(&self) -> Result<(), String> {
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(format!("t_final must be > 0, got {}", self.t_final));
        }
        if self.steps < 1 {
            return Err("steps must be at least 1".into());
        }
        if !(self.tol > 0.0) {
            return Err(format!("tol must be > 0, got {}", self.tol));
        }
        if !(self.bath_temperature >= 0.0) {
            return Err(format!("bath_T must be >= 0, got {}", self.bath_temperature));
        }
        Ok(())
    }
}

/// `"antisymmetric"` or a 2×2 array of `[re, im]` pairs.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum CoefficientsConfig {
    Named(String),
    Matrix([[[f64; 2]; 2]; 2]),
}

impl CoefficientsConfig {
    pub fn to_matrix(&self) -> Result<CoefficientMatrix, String> {
        match self {
            CoefficientsConfig::Named(name) if name == "antisymmetric" => Ok(antisymmetric_coefficients()),
            CoefficientsConfig::Named(name) => Err(format!("unknown coefficient preset `{name}`")),
            CoefficientsConfig::Matrix(m) => Ok([
                [Complex64::new(m[0][0][0], m[0][0][1]), Complex64::new(m[0][1][0], m[0][1][1])],
                [Complex64::new(m[1][0][0], m[1][0][1]), Complex64::new(m[1][1][0], m[1][1][1])],
            ]),
        }
    }
}

/// One `(slot, polarization)` channel. Slot and polarization default to the
/// list order `(1,1), (1,2), (2,1), (2,2)`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhotonConfig {
    #[serde(default)]
    pub slot: Option<PhotonSlot>,
    #[serde(default)]
    pub polarization: Option<Polarization>,
    pub k: [f64; 3],
    #[serde(alias = "detector")]
    pub detector_id: String,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    #[serde(default = "default_ensemble_n")]
    pub n: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_policy_name")]
    pub undecided_policy: String,
    #[serde(default = "default_max_attempts")]
    pub max_attempts: usize,
}

fn default_ensemble_n() -> usize {
    1000
}

fn default_policy_name() -> String {
    "retry".into()
}

fn default_max_attempts() -> usize {
    10
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            n: default_ensemble_n(),
            base_seed: 0,
            undecided_policy: default_policy_name(),
            max_attempts: default_max_attempts(),
        }
    }
}

impl EnsembleConfig {
    pub fn policy(&self) -> Result<UndecidedPolicy, String> {
        match self.undecided_policy.as_str() {
            "retry" => Ok(UndecidedPolicy::Retry {
                max_attempts: self.max_attempts.max(1),
            }),
            "report" => Ok(UndecidedPolicy::Report),
            other => Err(format!("undecided_policy must be `retry` or `report`, got `{other}`")),
        }
    }
}

fn default_decoherence_time() -> f64 {
    1e-15
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EprConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub units: UnitsConfig,
    #[serde(rename = "D")]
    pub d: CoefficientsConfig,
    pub delta0: f64,
    pub photons: Vec<PhotonConfig>,
    pub detectors: Vec<DetectorSpec>,
    #[serde(default)]
    pub conditioning: Conditioning,
    #[serde(default)]
    pub contact_mode: ContactMode,
    pub spinboson: SpinBosonConfig,
    #[serde(default)]
    pub probe_times: Vec<f64>,
    #[serde(default)]
    pub ensemble: EnsembleConfig,
    #[serde(default = "default_decoherence_time")]
    pub decoherence_time_s: f64,
}

impl EprConfig {
    pub fn scenario(&self) -> Result<EprScenario, String> {
        if self.photons.len() != 4 {
            return Err(format!(
                "photons must list all four (slot, polarization) channels, got {}",
                self.photons.len()
            ));
        }
        let mut routes: [[Option<PhotonRoute>; 2]; 2] = Default::default();
        for (i, p) in self.photons.iter().enumerate() {
            let slot = p.slot.unwrap_or(if i < 2 { PhotonSlot::First } else { PhotonSlot::Second });
            let alpha = p
                .polarization
                .unwrap_or(if i % 2 == 0 { Polarization::One } else { Polarization::Two });
            let cell = &mut routes[usize::from(slot.index() - 1)][usize::from(alpha.index() - 1)];
            if cell.is_some() {
                return Err(format!(
                    "photons[{i}]: channel (slot {}, polarization {}) listed twice",
                    slot.index(),
                    alpha.index()
                ));
            }
            *cell = Some(PhotonRoute {
                k: WaveVector(p.k),
                detector_id: p.detector_id.clone(),
            });
        }
        let [[a, b], [c, d]] = routes;
        let routes = [
            [a.expect("four distinct channels"), b.expect("four distinct channels")],
            [c.expect("four distinct channels"), d.expect("four distinct channels")],
        ];
        let photons = TwoPhotonSpec::new(self.d.to_matrix()?, routes, self.delta0).map_err(|e| e.to_string())?;
        for det in &self.detectors {
            det.validate().map_err(|e| e.to_string())?;
        }
        self.spinboson.validate_times()?;
        let engine = CollapseEngine {
            params: self.spinboson.params()?,
            bath_temperature: self.spinboson.bath_temperature,
            protocol: self.spinboson.protocol(),
        };
        Ok(EprScenario {
            photons,
            detectors: self.detectors.clone(),
            conditioning: self.conditioning,
            engine,
            units: self.units.to_units()?,
            probe_times: self.probe_times.clone(),
            contact_mode: self.contact_mode,
            undecided_policy: self.ensemble.policy()?,
            decoherence_time_s: self.decoherence_time_s,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_key_is_named_with_position() {
        let src = ConfigSource::from_text(
            Path::new("wp.json"),
            "{\n  \"pulse\": {\n    \"k0\": [0, 0, 100]\n  }\n}\n".into(),
        );
        let err = src.parse::<WavepacketConfig>().unwrap_err();
        let text = err.to_string();
        assert!(text.contains("delta0"), "{text}");
        assert!(text.starts_with("wp.json:4:"), "{text}");
    }

    #[test]
    fn units_parse() {
        let u = UnitsConfig::default().to_units().unwrap();
        assert_eq!(u, Units::default());
        assert!(UnitsConfig {
            length: "furlong".into(),
            time: "s".into()
        }
        .to_units()
        .is_err());
    }

    #[test]
    fn hash_is_stable() {
        let a = ConfigSource::from_text(Path::new("a"), "{}".into());
        assert_eq!(
            a.sha256,
            "44136fa355b3678a1146ad16f7e8649e94fb4fc21fe77e8310c060f61caaff8a"
        );
    }
}
