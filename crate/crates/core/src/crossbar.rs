//! Rows x columns array of PCM cells with per-column bit-lines.
//!
//! Activating several rows connects the selected cells of each column in
//! parallel onto that column's bit-line. Wire resistance and sneak paths are
//! not modeled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::device::{Cell, DeviceError, DeviceParams, Phase, PulseClass, PulseSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CrossbarError {
    #[error("invalid dimensions {rows}x{cols}: both must be >= 1")]
    InvalidDimensions { rows: usize, cols: usize },
    #[error("row {index} out of range (array has {rows} rows)")]
    RowOutOfRange { index: usize, rows: usize },
    #[error("column {index} out of range (array has {cols} columns)")]
    ColumnOutOfRange { index: usize, cols: usize },
    #[error("bit row has {got} bits, array has {cols} columns")]
    WidthMismatch { got: usize, cols: usize },
    #[error("no rows activated")]
    EmptyActivation,
    #[error("row {0} activated more than once")]
    DuplicateRow(usize),
    #[error("{role} pulse {pulse} classifies as {got:?}")]
    PulseMismatch {
        role: &'static str,
        pulse: PulseSpec,
        got: Option<PulseClass>,
    },
    #[error(transparent)]
    Device(#[from] DeviceError),
}

/// One row of logical bits.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BitRow(pub Vec<bool>);

impl BitRow {
    pub fn zeros(len: usize) -> Self {
        Self(vec![false; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }
}

impl From<Vec<bool>> for BitRow {
    fn from(bits: Vec<bool>) -> Self {
        Self(bits)
    }
}

impl std::str::FromStr for BitRow {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() {
            return Err("empty bit string".into());
        }
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(format!("invalid bit {other:?} in {s:?}")),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(BitRow)
    }
}

impl std::fmt::Display for BitRow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Pulses used to program and read the array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProgramPulses {
    pub set: PulseSpec,
    pub reset: PulseSpec,
    pub read: PulseSpec,
}

impl ProgramPulses {
    pub fn for_params(params: &DeviceParams) -> Self {
        Self {
            set: PulseSpec::default_set(),
            reset: PulseSpec::default_reset(),
            read: PulseSpec::read_at(params.read_voltage_v),
        }
    }

    /// Each pulse must classify into the regime its role requires.
    pub fn validate(&self, params: &DeviceParams) -> Result<(), CrossbarError> {
        for (role, pulse, want) in [
            ("set", self.set, PulseClass::Set),
            ("reset", self.reset, PulseClass::Reset),
            ("read", self.read, PulseClass::Read),
        ] {
            let got = crate::device::classify_pulse(&pulse, params).ok();
            if got != Some(want) {
                return Err(CrossbarError::PulseMismatch { role, pulse, got });
            }
        }
        Ok(())
    }
}

/// Parallel combination `1 / sum(1/R_i)`.
pub fn parallel_resistance<I: IntoIterator<Item = f64>>(resistances: I) -> f64 {
    let conductance: f64 = resistances.into_iter().map(|r| 1.0 / r).sum();
    1.0 / conductance
}

#[derive(Debug, Clone)]
pub struct Crossbar {
    rows: usize,
    cols: usize,
    cells: Vec<Cell>,
    params: DeviceParams,
    pulses: ProgramPulses,
    rng: ChaCha8Rng,
}

impl Crossbar {
    /// Builds an array with every cell amorphous, resistances drawn from the
    /// high distribution.
    pub fn new(rows: usize, cols: usize, params: DeviceParams, seed: u64) -> Result<Self, CrossbarError> {
        let pulses = ProgramPulses::for_params(&params);
        Self::with_pulses(rows, cols, params, pulses, seed)
    }

    pub fn with_pulses(
        rows: usize,
        cols: usize,
        params: DeviceParams,
        pulses: ProgramPulses,
        seed: u64,
    ) -> Result<Self, CrossbarError> {
        if rows == 0 || cols == 0 {
            return Err(CrossbarError::InvalidDimensions { rows, cols });
        }
        params.validate()?;
        pulses.validate(&params)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cells = (0..rows * cols)
            .map(|_| Cell::sampled(Phase::Amorphous, &params, &mut rng))
            .collect();
        Ok(Self {
            rows,
            cols,
            cells,
            params,
            pulses,
            rng,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn params(&self) -> &DeviceParams {
        &self.params
    }

    pub fn pulses(&self) -> &ProgramPulses {
        &self.pulses
    }

    pub fn cell(&self, row: usize, col: usize) -> Result<&Cell, CrossbarError> {
        self.check_row(row)?;
        self.check_col(col)?;
        Ok(&self.cells[row * self.cols + col])
    }

    pub fn row_cells(&self, row: usize) -> Result<&[Cell], CrossbarError> {
        self.check_row(row)?;
        Ok(&self.cells[row * self.cols..(row + 1) * self.cols])
    }

    /// Stored phases of a row, as bits.
    pub fn row_phases(&self, row: usize) -> Result<BitRow, CrossbarError> {
        Ok(BitRow(self.row_cells(row)?.iter().map(|c| c.phase.bit()).collect()))
    }

    /// Writes a row: one set pulse per `1`, one reset pulse per `0`, in
    /// column order.
    pub fn program_row(&mut self, row: usize, bits: &BitRow) -> Result<(), CrossbarError> {
        self.check_row(row)?;
        if bits.len() != self.cols {
            return Err(CrossbarError::WidthMismatch {
                got: bits.len(),
                cols: self.cols,
            });
        }
        let start = row * self.cols;
        for (cell, &bit) in self.cells[start..start + self.cols].iter_mut().zip(bits.bits()) {
            let pulse = if bit { &self.pulses.set } else { &self.pulses.reset };
            cell.apply_pulse(pulse, &self.params, &mut self.rng)?;
        }
        Ok(())
    }

    /// Applies the read pulse to every cell of the activated rows. Phases and
    /// resistances are unchanged; only read counters advance.
    pub fn activate(&mut self, active_rows: &[usize]) -> Result<(), CrossbarError> {
        self.check_activation(active_rows)?;
        for &row in active_rows {
            let start = row * self.cols;
            for cell in &mut self.cells[start..start + self.cols] {
                cell.apply_pulse(&self.pulses.read, &self.params, &mut self.rng)?;
            }
        }
        Ok(())
    }

    pub fn bitline_resistance(&self, active_rows: &[usize], col: usize) -> Result<f64, CrossbarError> {
        self.check_activation(active_rows)?;
        self.check_col(col)?;
        Ok(parallel_resistance(
            active_rows
                .iter()
                .map(|&r| self.cells[r * self.cols + col].resistance_ohms),
        ))
    }

    pub fn bitline_current(&self, active_rows: &[usize], col: usize, v_read: f64) -> Result<f64, CrossbarError> {
        Ok(v_read / self.bitline_resistance(active_rows, col)?)
    }

    /// Bit-line currents of every column at the configured read voltage.
    pub fn bitline_currents(&self, active_rows: &[usize]) -> Result<Vec<f64>, CrossbarError> {
        let v = self.params.read_voltage_v;
        (0..self.cols)
            .map(|col| self.bitline_current(active_rows, col, v))
            .collect()
    }

    fn check_row(&self, row: usize) -> Result<(), CrossbarError> {
        if row >= self.rows {
            return Err(CrossbarError::RowOutOfRange {
                index: row,
                rows: self.rows,
            });
        }
        Ok(())
    }

    fn check_col(&self, col: usize) -> Result<(), CrossbarError> {
        if col >= self.cols {
            return Err(CrossbarError::ColumnOutOfRange {
                index: col,
                cols: self.cols,
            });
        }
        Ok(())
    }

    fn check_activation(&self, active_rows: &[usize]) -> Result<(), CrossbarError> {
        if active_rows.is_empty() {
            return Err(CrossbarError::EmptyActivation);
        }
        for (i, &row) in active_rows.iter().enumerate() {
            self.check_row(row)?;
            if active_rows[..i].contains(&row) {
                return Err(CrossbarError::DuplicateRow(row));
            }
        }
        Ok(())
    }
}
