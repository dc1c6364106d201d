//! Single phase-change memory cell.
//!
//! A cell is either amorphous (high resistance, logical `0`) or crystalline
//! (low resistance, logical `1`). Voltage pulses are classified into read,
//! set and reset regimes by amplitude and timing; set and reset pulses
//! resample the cell resistance from a log-normal distribution around the
//! class median.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeviceError {
    #[error("invalid pulse: {0}")]
    InvalidPulse(String),
    #[error("invalid device parameters: {0}")]
    InvalidParams(String),
    #[error("pulse {0} matches no read/set/reset regime")]
    AmbiguousPulse(PulseSpec),
}

/// A trapezoidal voltage pulse. Times are in nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSpec {
    pub amplitude_v: f64,
    pub rise_ns: f64,
    pub width_ns: f64,
    pub fall_ns: f64,
}

impl PulseSpec {
    pub fn new(amplitude_v: f64, rise_ns: f64, width_ns: f64, fall_ns: f64) -> Result<Self, DeviceError> {
        let pulse = Self {
            amplitude_v,
            rise_ns,
            width_ns,
            fall_ns,
        };
        pulse.validate()?;
        Ok(pulse)
    }

    /// 2.7 V, 10 ns rise, 30 ns plateau, 3 us trailing edge.
    pub const fn default_set() -> Self {
        Self {
            amplitude_v: 2.7,
            rise_ns: 10.0,
            width_ns: 30.0,
            fall_ns: 3000.0,
        }
    }

    /// 4 V with 10 ns rise, plateau and fall.
    pub const fn default_reset() -> Self {
        Self {
            amplitude_v: 4.0,
            rise_ns: 10.0,
            width_ns: 10.0,
            fall_ns: 10.0,
        }
    }

    /// Low-bias read pulse at the given voltage.
    pub const fn read_at(amplitude_v: f64) -> Self {
        Self {
            amplitude_v,
            rise_ns: 10.0,
            width_ns: 100.0,
            fall_ns: 10.0,
        }
    }

    pub fn validate(&self) -> Result<(), DeviceError> {
        if !(self.amplitude_v.is_finite() && self.amplitude_v > 0.0) {
            return Err(DeviceError::InvalidPulse(format!(
                "amplitude_v must be > 0, got {}",
                self.amplitude_v
            )));
        }
        for (name, t) in [
            ("rise_ns", self.rise_ns),
            ("width_ns", self.width_ns),
            ("fall_ns", self.fall_ns),
        ] {
            if !(t.is_finite() && t >= 0.0) {
                return Err(DeviceError::InvalidPulse(format!("{name} must be >= 0, got {t}")));
            }
        }
        Ok(())
    }
}

impl std::fmt::Display for PulseSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "({} V, rise {} ns, width {} ns, fall {} ns)",
            self.amplitude_v, self.rise_ns, self.width_ns, self.fall_ns
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    /// High resistance, stores `0`.
    Amorphous,
    /// Low resistance, stores `1`.
    Crystalline,
}

impl Phase {
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            Phase::Crystalline
        } else {
            Phase::Amorphous
        }
    }

    pub fn bit(self) -> bool {
        self == Phase::Crystalline
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PulseClass {
    Read,
    Set,
    Reset,
}

/// Population parameters shared by every cell of an array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams {
    /// Median crystalline resistance.
    pub r_low_ohms: f64,
    /// Median amorphous resistance.
    pub r_high_ohms: f64,
    /// Standard deviation of log10(R) around the class median.
    pub sigma_decades: f64,
    pub read_voltage_v: f64,
    pub read_v_max: f64,
    pub set_v_min: f64,
    pub set_v_max: f64,
    /// Minimum plateau + trailing edge for crystallization.
    pub set_min_total_ns: f64,
    pub reset_v_min: f64,
    /// Longest plateau that still quenches into the amorphous phase.
    pub reset_max_width_ns: f64,
    pub seed: u64,
}

impl Default for DeviceParams {
    fn default() -> Self {
        Self {
            r_low_ohms: 1.0e3,
            r_high_ohms: 1.0e8,
            sigma_decades: 0.1,
            read_voltage_v: 0.4,
            read_v_max: 0.5,
            set_v_min: 2.0,
            set_v_max: 3.5,
            set_min_total_ns: 100.0,
            reset_v_min: 3.5,
            reset_max_width_ns: 50.0,
            seed: 42,
        }
    }
}

impl DeviceParams {
    pub fn validate(&self) -> Result<(), DeviceError> {
        let bad = |msg: String| Err(DeviceError::InvalidParams(msg));
        let all_finite = [
            self.r_low_ohms,
            self.r_high_ohms,
            self.sigma_decades,
            self.read_voltage_v,
            self.read_v_max,
            self.set_v_min,
            self.set_v_max,
            self.set_min_total_ns,
            self.reset_v_min,
            self.reset_max_width_ns,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !all_finite {
            return bad("all numeric fields must be finite".into());
        }
        if !(self.r_low_ohms > 0.0 && self.r_low_ohms < self.r_high_ohms) {
            return bad(format!(
                "require 0 < r_low_ohms < r_high_ohms, got r_low_ohms={} r_high_ohms={}",
                self.r_low_ohms, self.r_high_ohms
            ));
        }
        if self.sigma_decades < 0.0 {
            return bad(format!("sigma_decades must be >= 0, got {}", self.sigma_decades));
        }
        if self.read_voltage_v <= 0.0 {
            return bad(format!("read_voltage_v must be > 0, got {}", self.read_voltage_v));
        }
        if !(self.read_v_max < self.set_v_min
            && self.set_v_min < self.set_v_max
            && self.set_v_max <= self.reset_v_min)
        {
            return bad(format!(
                "require read_v_max < set_v_min < set_v_max <= reset_v_min, got {} / {} / {} / {}",
                self.read_v_max, self.set_v_min, self.set_v_max, self.reset_v_min
            ));
        }
        if self.set_min_total_ns < 0.0 || self.reset_max_width_ns < 0.0 {
            return bad("pulse timing thresholds must be >= 0".into());
        }
        if self.read_voltage_v > self.read_v_max {
            return bad(format!(
                "read_voltage_v {} exceeds read_v_max {}",
                self.read_voltage_v, self.read_v_max
            ));
        }
        Ok(())
    }

    pub fn median(&self, phase: Phase) -> f64 {
        match phase {
            Phase::Crystalline => self.r_low_ohms,
            Phase::Amorphous => self.r_high_ohms,
        }
    }

    pub fn with_sigma(&self, sigma_decades: f64) -> Self {
        Self {
            sigma_decades,
            ..self.clone()
        }
    }
}

pub fn classify_pulse(pulse: &PulseSpec, params: &DeviceParams) -> Result<PulseClass, DeviceError> {
    pulse.validate()?;
    let a = pulse.amplitude_v;
    if a <= params.read_v_max {
        return Ok(PulseClass::Read);
    }
    if a >= params.set_v_min
        && a < params.set_v_max
        && pulse.width_ns + pulse.fall_ns >= params.set_min_total_ns
    {
        return Ok(PulseClass::Set);
    }
    if a >= params.reset_v_min && pulse.width_ns <= params.reset_max_width_ns {
        return Ok(PulseClass::Reset);
    }
    Err(DeviceError::AmbiguousPulse(*pulse))
}

/// Draws a programmed resistance for `phase`: `10^x` with
/// `x ~ Normal(log10(median), sigma_decades)`.
pub fn sample_resistance<R: Rng + ?Sized>(phase: Phase, params: &DeviceParams, rng: &mut R) -> f64 {
    let median = params.median(phase);
    if params.sigma_decades == 0.0 {
        return median;
    }
    let normal = Normal::new(median.log10(), params.sigma_decades)
        .expect("sigma_decades is finite and non-negative");
    10f64.powf(normal.sample(rng))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub phase: Phase,
    pub resistance_ohms: f64,
    pub set_count: u64,
    pub reset_count: u64,
    pub read_count: u64,
}

impl Cell {
    pub fn new(phase: Phase, resistance_ohms: f64) -> Self {
        assert!(resistance_ohms > 0.0, "cell resistance must be positive");
        Self {
            phase,
            resistance_ohms,
            set_count: 0,
            reset_count: 0,
            read_count: 0,
        }
    }

    /// A cell at its class median.
    pub fn nominal(phase: Phase, params: &DeviceParams) -> Self {
        Self::new(phase, params.median(phase))
    }

    /// A cell freshly programmed into `phase`.
    pub fn sampled<R: Rng + ?Sized>(phase: Phase, params: &DeviceParams, rng: &mut R) -> Self {
        Self::new(phase, sample_resistance(phase, params, rng))
    }

    /// Applies one pulse. The cell is left untouched if the pulse cannot be
    /// classified.
    pub fn apply_pulse<R: Rng + ?Sized>(
        &mut self,
        pulse: &PulseSpec,
        params: &DeviceParams,
        rng: &mut R,
    ) -> Result<PulseClass, DeviceError> {
        let class = classify_pulse(pulse, params)?;
        match class {
            PulseClass::Read => self.read_count += 1,
            PulseClass::Set => {
                self.phase = Phase::Crystalline;
                self.resistance_ohms = sample_resistance(Phase::Crystalline, params, rng);
                self.set_count += 1;
            }
            PulseClass::Reset => {
                self.phase = Phase::Amorphous;
                self.resistance_ohms = sample_resistance(Phase::Amorphous, params, rng);
                self.reset_count += 1;
            }
        }
        Ok(class)
    }

    pub fn current(&self, v_read: f64) -> f64 {
        cell_current(self, v_read)
    }
}

/// Ohmic read current.
pub fn cell_current(cell: &Cell, v_read: f64) -> f64 {
    v_read / cell.resistance_ohms
}
