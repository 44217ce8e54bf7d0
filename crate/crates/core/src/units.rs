//! Display units.
//!
//! Internally lengths and times share one unit (`c = 1`). A [`Units`] value
//! says how long that internal unit is in metres, and which time unit
//! reports should use.

use serde::{Deserialize, Serialize};

/// Speed of light in m/s (exact SI value).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Units {
    /// Metres per internal length unit.
    pub length_m: f64,
    /// Seconds per display time unit.
    pub time_s: f64,
}

impl Default for Units {
    /// Millimetres and picoseconds, a typical optical-bench scale.
    fn default() -> Self {
        Self {
            length_m: 1e-3,
            time_s: 1e-12,
        }
    }
}

impl Units {
    /// Converts an internal time (internal length / c) to seconds.
    pub fn internal_time_to_seconds(&self, t: f64) -> f64 {
        t * self.length_m / SPEED_OF_LIGHT
    }

    /// Converts seconds to an internal time.
    pub fn seconds_to_internal_time(&self, seconds: f64) -> f64 {
        seconds * SPEED_OF_LIGHT / self.length_m
    }

    /// Converts an internal time to display time units.
    pub fn internal_time_to_display(&self, t: f64) -> f64 {
        self.internal_time_to_seconds(t) / self.time_s
    }

    /// Renders a duration given in seconds with three significant digits
    /// and the SI prefix matching the display time unit.
    pub fn render_seconds(&self, seconds: f64) -> String {
        let value = seconds / self.time_s;
        format!("{} {}", sig3(value), time_unit_symbol(self.time_s))
    }

    pub fn render_internal_time(&self, t: f64) -> String {
        self.render_seconds(self.internal_time_to_seconds(t))
    }
}

fn time_unit_symbol(time_s: f64) -> String {
    const PREFIXES: [(f64, &str); 7] = [
        (1.0, "s"),
        (1e-3, "ms"),
        (1e-6, "us"),
        (1e-9, "ns"),
        (1e-12, "ps"),
        (1e-15, "fs"),
        (1e-18, "as"),
    ];
    PREFIXES
        .iter()
        .find(|(scale, _)| ((time_s / scale) - 1.0).abs() < 1e-9)
        .map(|(_, s)| s.to_string())
        .unwrap_or_else(|| format!("x{time_s:e} s"))
}

fn sig3(value: f64) -> String {
    if value == 0.0 || !value.is_finite() {
        return format!("{value}");
    }
    let exponent = value.abs().log10().floor() as i32;
    let decimals = (2 - exponent).max(0) as usize;
    if (-3..6).contains(&exponent) {
        format!("{value:.decimals$}")
    } else {
        format!("{value:.2e}")
    }
}
