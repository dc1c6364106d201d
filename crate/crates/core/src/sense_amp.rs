//! Sense amplifier used as a logic gate.
//!
//! With `n` rows activated, a column's bit-line resistance depends only on
//! how many of the activated cells are crystalline. Those `n + 1` resistance
//! classes are ordered, so any k-of-n threshold function is obtained by
//! placing a single reference resistance between class `k` and class `k - 1`.
//! OR is `k = 1`, AND is `k = n`, and a plain read is `k = n = 1`. XOR of two
//! rows needs a window between two references; NOT is an inverted read.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::device::DeviceParams;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SenseError {
    #[error("{op} cannot take {n} inputs: {reason}")]
    Arity { op: LogicOp, n: usize, reason: &'static str },
    #[error("{op} over {n} inputs is infeasible: '1' class reaches {r_one_worst:e} ohm, '0' class reaches {r_zero_worst:e} ohm")]
    InfeasibleGate {
        op: LogicOp,
        n: usize,
        r_one_worst: f64,
        r_zero_worst: f64,
    },
    #[error("{0} has no single-reference class boundaries")]
    Unsupported(LogicOp),
    #[error("reference resistance must be > 0, got {0}")]
    BadReference(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "op", content = "k", rename_all = "lowercase")]
pub enum LogicOp {
    Read,
    Or,
    And,
    Xor,
    Not,
    /// Output is 1 iff at least `k` activated cells are crystalline.
    Threshold(usize),
}

impl LogicOp {
    pub fn check_arity(self, n: usize) -> Result<(), SenseError> {
        let fail = |reason| Err(SenseError::Arity { op: self, n, reason });
        match self {
            LogicOp::Read | LogicOp::Not if n != 1 => fail("exactly one input required"),
            LogicOp::Xor if n != 2 => fail("exactly two inputs required"),
            LogicOp::Or | LogicOp::And if n == 0 => fail("at least one input required"),
            LogicOp::Threshold(k) if k == 0 || k > n => fail("threshold requires 1 <= k <= n"),
            _ => Ok(()),
        }
    }

    /// The boolean function the gate computes.
    pub fn eval(self, inputs: &[bool]) -> bool {
        let ones = inputs.iter().filter(|&&b| b).count();
        match self {
            LogicOp::Read => ones == 1,
            LogicOp::Not => ones == 0,
            LogicOp::Or => ones >= 1,
            LogicOp::And => ones == inputs.len(),
            LogicOp::Xor => ones % 2 == 1,
            LogicOp::Threshold(k) => ones >= k,
        }
    }

    /// Crystalline-cell count at which a single-reference gate switches to
    /// '1' (before inversion).
    fn threshold(self, n: usize) -> Option<usize> {
        match self {
            LogicOp::Read | LogicOp::Not | LogicOp::Or => Some(1),
            LogicOp::And => Some(n),
            LogicOp::Threshold(k) => Some(k),
            LogicOp::Xor => None,
        }
    }
}

impl std::fmt::Display for LogicOp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LogicOp::Read => f.write_str("read"),
            LogicOp::Or => f.write_str("or"),
            LogicOp::And => f.write_str("and"),
            LogicOp::Xor => f.write_str("xor"),
            LogicOp::Not => f.write_str("not"),
            LogicOp::Threshold(k) => write!(f, "thresh:{k}"),
        }
    }
}

impl std::str::FromStr for LogicOp {
    type Err = String;

    /// Accepts `read`, `or`, `and`, `xor`, `not` and `thresh:<k>`,
    /// case-insensitively.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "read" => Ok(LogicOp::Read),
            "or" => Ok(LogicOp::Or),
            "and" => Ok(LogicOp::And),
            "xor" => Ok(LogicOp::Xor),
            "not" => Ok(LogicOp::Not),
            other => {
                let k = other
                    .strip_prefix("thresh:")
                    .or_else(|| other.strip_prefix("threshold:"))
                    .ok_or_else(|| format!("unknown op {s:?} (expected read|or|and|xor|not|thresh:<k>)"))?;
                k.parse()
                    .map(LogicOp::Threshold)
                    .map_err(|_| format!("invalid threshold in {s:?}"))
            }
        }
    }
}

/// Bit-line resistance with `low` crystalline and `high` amorphous cells at
/// their medians.
pub fn class_resistance(low: usize, high: usize, params: &DeviceParams) -> f64 {
    1.0 / (low as f64 / params.r_low_ohms + high as f64 / params.r_high_ohms)
}

/// Worst-case members of the two output classes of a single-reference gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassBoundaries {
    /// Highest-resistance bit-line state that must read '1'.
    pub r_one_worst: f64,
    /// Lowest-resistance bit-line state that must read '0'.
    pub r_zero_worst: f64,
}

impl ClassBoundaries {
    pub fn margin_ratio(&self) -> f64 {
        self.r_zero_worst / self.r_one_worst
    }

    pub fn geometric_mean(&self) -> f64 {
        (self.r_one_worst * self.r_zero_worst).sqrt()
    }

    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    fn feasible(self, op: LogicOp, n: usize) -> Result<Self, SenseError> {
        // also rejects NaN
        if !(self.r_one_worst < self.r_zero_worst) {
            return Err(SenseError::InfeasibleGate {
                op,
                n,
                r_one_worst: self.r_one_worst,
                r_zero_worst: self.r_zero_worst,
            });
        }
        Ok(self)
    }
}

fn threshold_boundaries(k: usize, n: usize, params: &DeviceParams) -> ClassBoundaries {
    ClassBoundaries {
        r_one_worst: class_resistance(k, n - k, params),
        r_zero_worst: class_resistance(k - 1, n - k + 1, params),
    }
}

/// Boundaries of a single-reference gate (read, OR, AND, k-of-n).
pub fn class_boundaries(op: LogicOp, n: usize, params: &DeviceParams) -> Result<ClassBoundaries, SenseError> {
    if matches!(op, LogicOp::Xor | LogicOp::Not) {
        return Err(SenseError::Unsupported(op));
    }
    op.check_arity(n)?;
    let k = op.threshold(n).expect("single-reference op");
    threshold_boundaries(k, n, params).feasible(op, n)
}

/// Every resistance window the gate must resolve: one for single-reference
/// gates, two for XOR (low side, then high side).
pub fn gate_windows(op: LogicOp, n: usize, params: &DeviceParams) -> Result<Vec<ClassBoundaries>, SenseError> {
    op.check_arity(n)?;
    match op {
        LogicOp::Xor => {
            let low_side = threshold_boundaries(2, 2, params).feasible(op, n)?;
            let high_side = threshold_boundaries(1, 2, params).feasible(op, n)?;
            Ok(vec![low_side, high_side])
        }
        other => Ok(vec![threshold_boundaries(other.threshold(n).unwrap(), n, params).feasible(op, n)?]),
    }
}

/// Worst-case '0' class resistance over worst-case '1' class resistance.
/// For XOR this is the narrower of its two windows.
pub fn margin_ratio(op: LogicOp, n: usize, params: &DeviceParams) -> Result<f64, SenseError> {
    Ok(gate_windows(op, n, params)?
        .iter()
        .map(ClassBoundaries::margin_ratio)
        .fold(f64::INFINITY, f64::min))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SenseAmpConfig {
    pub op: LogicOp,
    pub n_inputs: usize,
    /// The only reference of single-reference gates; the low-resistance side
    /// of the XOR window.
    pub ref_primary_ohms: f64,
    /// High-resistance side of the XOR window.
    pub ref_secondary_ohms: Option<f64>,
    pub invert_output: bool,
}

impl SenseAmpConfig {
    /// Replaces the reference of a single-reference gate.
    pub fn with_reference(mut self, ref_ohms: f64) -> Result<Self, SenseError> {
        if self.ref_secondary_ohms.is_some() {
            return Err(SenseError::Unsupported(self.op));
        }
        if !(ref_ohms.is_finite() && ref_ohms > 0.0) {
            return Err(SenseError::BadReference(ref_ohms));
        }
        self.ref_primary_ohms = ref_ohms;
        Ok(self)
    }
}

/// Emitted when the margin is too narrow for the configured spread.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginWarning {
    pub margin_ratio: f64,
    /// `10^(6 sigma)`: room for three standard deviations on each side.
    pub required_ratio: f64,
}

impl std::fmt::Display for MarginWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "margin ratio {:.4} is below {:.4} (+/-3 sigma per class); expect sensing errors under variability",
            self.margin_ratio, self.required_ratio
        )
    }
}

/// A calibrated gate together with the quantities the calibration used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub config: SenseAmpConfig,
    pub windows: Vec<ClassBoundaries>,
    pub margin_ratio: f64,
    pub warning: Option<MarginWarning>,
}

/// Places each reference at the geometric mean of the window it separates,
/// giving equal multiplicative margin towards both classes.
pub fn calibrate(op: LogicOp, n: usize, params: &DeviceParams) -> Result<Calibration, SenseError> {
    let windows = gate_windows(op, n, params)?;
    let config = SenseAmpConfig {
        op,
        n_inputs: n,
        ref_primary_ohms: windows[0].geometric_mean(),
        ref_secondary_ohms: windows.get(1).map(ClassBoundaries::geometric_mean),
        invert_output: op == LogicOp::Not,
    };
    let margin = windows
        .iter()
        .map(ClassBoundaries::margin_ratio)
        .fold(f64::INFINITY, f64::min);
    let required = 10f64.powf(6.0 * params.sigma_decades);
    let warning = (margin < required).then_some(MarginWarning {
        margin_ratio: margin,
        required_ratio: required,
    });
    Ok(Calibration {
        config,
        windows,
        margin_ratio: margin,
        warning,
    })
}

/// Ideal current comparator. A current equal to the reference current reads
/// as the low-conductance class.
pub fn sense(i_bitline: f64, cfg: &SenseAmpConfig, v_read: f64) -> bool {
    let i_primary = v_read / cfg.ref_primary_ohms;
    match cfg.ref_secondary_ohms {
        Some(high_side) => {
            let i_floor = v_read / high_side;
            i_floor < i_bitline && i_bitline < i_primary
        }
        None => (i_bitline > i_primary) ^ cfg.invert_output,
    }
}
