//! Behavioral simulator for bulk bitwise logic computed by a sense amplifier
//! on multi-row activations of a phase-change memory crossbar.
//!
//! Activating several rows at once places the selected cells of each column
//! in parallel on the bit-line. The bit-line resistance then falls into one
//! of `n + 1` classes set by the number of crystalline (low-resistance)
//! cells, and moving the sense amplifier's reference resistance between
//! classes selects which boolean function the read computes.
//!
//! * [`device`]: single-cell pulse classification and resistance sampling.
//! * [`crossbar`]: the cell array, row programming and bit-line algebra.
//! * [`sense_amp`]: class boundaries, reference calibration and sensing.
//! * [`engine`]: bulk row operations and the command script interpreter.
//! * [`analysis`]: Monte Carlo truth tables, current histograms and margin
//!   sweeps.
//! * [`config`] and [`report`]: JSON configuration and CSV output.
//!
//! ```
//! use pinatubo_sim::{analysis, DeviceParams, LogicOp};
//!
//! let params = DeviceParams::default();
//! let table = analysis::truth_table(
//!     LogicOp::Or, 2, &params, Some(100e3), 100, 7, analysis::Enumeration::Multiset,
//! ).unwrap();
//! assert!(table.iter().all(|class| class.errors == 0));
//! ```

pub mod analysis;
pub mod config;
pub mod crossbar;
pub mod device;
pub mod engine;
pub mod report;
pub mod sense_amp;

#[cfg(feature = "cli")]
pub mod cli;

pub use analysis::{ClassHistogram, ClassStats, Enumeration, SweepRow};
pub use config::Config;
pub use crossbar::{BitRow, Crossbar};
pub use device::{Cell, DeviceParams, Phase, PulseClass, PulseSpec};
pub use engine::{OpStats, RunOutput, Script, ScriptCommand};
pub use sense_amp::{Calibration, ClassBoundaries, LogicOp, SenseAmpConfig};
