//! JSON configuration. Every field is optional; missing fields take the
//! defaults below. Units are SI base units (ohms, volts, nanoseconds) as
//! spelled out by each field's suffix.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crossbar::{CrossbarError, ProgramPulses};
use crate::device::{DeviceParams, PulseSpec};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: cannot read config: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub rows: usize,
    pub cols: usize,
    pub r_low_ohms: f64,
    pub r_high_ohms: f64,
    pub sigma_decades: f64,
    pub read_voltage_v: f64,
    pub set_pulse: PulseSpec,
    pub reset_pulse: PulseSpec,
    pub read_v_max: f64,
    pub set_v_min: f64,
    pub set_v_max: f64,
    pub set_min_total_ns: f64,
    pub reset_v_min: f64,
    pub reset_max_width_ns: f64,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        let p = DeviceParams::default();
        Self {
            rows: 16,
            cols: 64,
            r_low_ohms: p.r_low_ohms,
            r_high_ohms: p.r_high_ohms,
            sigma_decades: p.sigma_decades,
            read_voltage_v: p.read_voltage_v,
            set_pulse: PulseSpec::default_set(),
            reset_pulse: PulseSpec::default_reset(),
            read_v_max: p.read_v_max,
            set_v_min: p.set_v_min,
            set_v_max: p.set_v_max,
            set_min_total_ns: p.set_min_total_ns,
            reset_v_min: p.reset_v_min,
            reset_max_width_ns: p.reset_max_width_ns,
            seed: p.seed,
        }
    }
}

impl Config {
    pub fn from_json(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let cfg: Config = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_string(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: shown.clone(),
            source,
        })?;
        Self::from_json(&text, &shown)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn device_params(&self) -> DeviceParams {
        DeviceParams {
            r_low_ohms: self.r_low_ohms,
            r_high_ohms: self.r_high_ohms,
            sigma_decades: self.sigma_decades,
            read_voltage_v: self.read_voltage_v,
            read_v_max: self.read_v_max,
            set_v_min: self.set_v_min,
            set_v_max: self.set_v_max,
            set_min_total_ns: self.set_min_total_ns,
            reset_v_min: self.reset_v_min,
            reset_max_width_ns: self.reset_max_width_ns,
            seed: self.seed,
        }
    }

    pub fn pulses(&self) -> ProgramPulses {
        ProgramPulses {
            set: self.set_pulse,
            reset: self.reset_pulse,
            read: PulseSpec::read_at(self.read_voltage_v),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.rows == 0 {
            return Err(ConfigError::Invalid("rows must be >= 1".into()));
        }
        if self.cols == 0 {
            return Err(ConfigError::Invalid("cols must be >= 1".into()));
        }
        let params = self.device_params();
        params.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.pulses().validate(&params).map_err(|e| match e {
            CrossbarError::PulseMismatch { role, pulse, got } => ConfigError::Invalid(format!(
                "{role}_pulse {pulse} does not classify as a {role} pulse (got {got:?})"
            )),
            other => ConfigError::Invalid(other.to_string()),
        })
    }

    /// Defaults with units, one per line, for `--help`.
    pub fn defaults_help() -> String {
        let d = Self::default();
        let pulse = |p: &PulseSpec| {
            format!(
                "amplitude {} V, rise {} ns, width {} ns, fall {} ns",
                p.amplitude_v, p.rise_ns, p.width_ns, p.fall_ns
            )
        };
        [
            format!("  rows                {}", d.rows),
            format!("  cols                {}", d.cols),
            format!("  r_low_ohms          {:e} ohm (crystalline median)", d.r_low_ohms),
            format!("  r_high_ohms         {:e} ohm (amorphous median)", d.r_high_ohms),
            format!("  sigma_decades       {} decades (std of log10 R)", d.sigma_decades),
            format!("  read_voltage_v      {} V", d.read_voltage_v),
            format!("  set_pulse           {}", pulse(&d.set_pulse)),
            format!("  reset_pulse         {}", pulse(&d.reset_pulse)),
            format!("  read_v_max          {} V", d.read_v_max),
            format!("  set_v_min           {} V", d.set_v_min),
            format!("  set_v_max           {} V", d.set_v_max),
            format!("  set_min_total_ns    {} ns (width + fall)", d.set_min_total_ns),
            format!("  reset_v_min         {} V", d.reset_v_min),
            format!("  reset_max_width_ns  {} ns", d.reset_max_width_ns),
            format!("  seed                {}", d.seed),
        ]
        .join("\n")
    }
}
