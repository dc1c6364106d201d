//! Monte Carlo characterisation of sense-amplifier gates.
//!
//! Every trial programs fresh cells for one input combination, computes the
//! resulting bit-line current and senses it. Trials draw from independent
//! ChaCha streams keyed by `(seed, combination index, trial index)`, so
//! results do not depend on evaluation order.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crossbar::{parallel_resistance, ProgramPulses};
use crate::device::{Cell, DeviceError, DeviceParams, Phase};
use crate::sense_amp::{self, LogicOp, SenseAmpConfig, SenseError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("{0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error(transparent)]
    Sense(#[from] SenseError),
}

impl AnalysisError {
    pub fn is_infeasible(&self) -> bool {
        matches!(self, AnalysisError::Sense(SenseError::InfeasibleGate { .. }))
    }
}

/// Which input combinations to evaluate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Enumeration {
    /// One representative per number of `1` inputs (`n + 1` classes).
    #[default]
    Multiset,
    /// All `2^n` input vectors.
    Full,
}

/// Input combinations, most `1`s first. Multiset representatives put the
/// `1`s in the leading positions.
pub fn combinations(n: usize, enumeration: Enumeration) -> Vec<Vec<bool>> {
    match enumeration {
        Enumeration::Multiset => (0..=n).rev().map(|ones| (0..n).map(|i| i < ones).collect()).collect(),
        Enumeration::Full => {
            assert!(n < usize::BITS as usize, "too many inputs for full enumeration");
            (0..1usize << n)
                .rev()
                .map(|m| (0..n).map(|i| m >> (n - 1 - i) & 1 == 1).collect())
                .collect()
        }
    }
}

fn combo_label(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

fn trial_rng(seed: u64, combo: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((combo as u64) << 32) | trial as u64);
    rng
}

/// Bit-line currents of `trials` independently programmed cell groups.
pub fn sample_class_currents(
    inputs: &[bool],
    params: &DeviceParams,
    trials: usize,
    seed: u64,
    combo_index: usize,
) -> Result<Vec<f64>, DeviceError> {
    let pulses = ProgramPulses::for_params(params);
    (0..trials)
        .map(|t| {
            let mut rng = trial_rng(seed, combo_index, t);
            let mut resistances = Vec::with_capacity(inputs.len());
            for &bit in inputs {
                let mut cell = Cell::nominal(Phase::Amorphous, params);
                let pulse = if bit { &pulses.set } else { &pulses.reset };
                cell.apply_pulse(pulse, params, &mut rng)?;
                resistances.push(cell.resistance_ohms);
            }
            Ok(params.read_voltage_v / parallel_resistance(resistances))
        })
        .collect()
}

/// Current statistics and sensing outcome for one input combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub combination: String,
    pub expected: bool,
    pub trials: usize,
    pub current_min_a: f64,
    pub current_mean_a: f64,
    pub current_max_a: f64,
    /// Population standard deviation of log10(current).
    pub log10_std: f64,
    pub out0: usize,
    pub out1: usize,
    pub errors: usize,
}

impl ClassStats {
    fn from_currents(inputs: &[bool], expected: bool, currents: &[f64], cfg: &SenseAmpConfig, v_read: f64) -> Self {
        let trials = currents.len();
        let min = currents.iter().copied().fold(f64::INFINITY, f64::min);
        let max = currents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = currents.iter().sum::<f64>() / trials as f64;
        let logs: Vec<f64> = currents.iter().map(|i| i.log10()).collect();
        let log_mean = logs.iter().sum::<f64>() / trials as f64;
        let log_var = logs.iter().map(|x| (x - log_mean).powi(2)).sum::<f64>() / trials as f64;
        let out1 = currents.iter().filter(|&&i| sense_amp::sense(i, cfg, v_read)).count();
        let errors = if expected { trials - out1 } else { out1 };
        Self {
            combination: combo_label(inputs),
            expected,
            trials,
            // the mean can drift past min/max by an ulp when all samples are equal
            current_min_a: min,
            current_mean_a: mean.clamp(min, max),
            current_max_a: max,
            log10_std: log_var.sqrt(),
            out0: trials - out1,
            out1,
            errors,
        }
    }
}

fn check_trials(trials: usize) -> Result<(), AnalysisError> {
    if trials == 0 {
        return Err(AnalysisError::InvalidArgument("trials must be >= 1".into()));
    }
    Ok(())
}

/// Sense-amplifier configuration used for `op`: calibrated, or with the
/// reference replaced by `ref_override`.
pub fn sensing_config(
    op: LogicOp,
    n: usize,
    params: &DeviceParams,
    ref_override: Option<f64>,
) -> Result<SenseAmpConfig, SenseError> {
    let cfg = sense_amp::calibrate(op, n, params)?.config;
    match ref_override {
        Some(r) => cfg.with_reference(r),
        None => Ok(cfg),
    }
}

/// Senses every input combination `trials` times and counts disagreements
/// with the gate's boolean function.
pub fn truth_table(
    op: LogicOp,
    n: usize,
    params: &DeviceParams,
    ref_override: Option<f64>,
    trials: usize,
    seed: u64,
    enumeration: Enumeration,
) -> Result<Vec<ClassStats>, AnalysisError> {
    check_trials(trials)?;
    params.validate()?;
    let cfg = sensing_config(op, n, params, ref_override)?;
    combinations(n, enumeration)
        .iter()
        .enumerate()
        .map(|(idx, inputs)| {
            let currents = sample_class_currents(inputs, params, trials, seed, idx)?;
            Ok(ClassStats::from_currents(
                inputs,
                op.eval(inputs),
                &currents,
                &cfg,
                params.read_voltage_v,
            ))
        })
        .collect()
}

/// Total errors over total sensing events.
pub fn error_rate(table: &[ClassStats]) -> f64 {
    let errors: usize = table.iter().map(|c| c.errors).sum();
    let events: usize = table.iter().map(|c| c.trials).sum();
    errors as f64 / events as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistBin {
    /// `floor(log10(I) * bins_per_decade)`.
    pub index: i64,
    pub low_log10_a: f64,
    pub high_log10_a: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassHistogram {
    pub class: String,
    pub expected: bool,
    pub bins_per_decade: usize,
    /// Non-empty bins in increasing current order.
    pub bins: Vec<HistBin>,
}

impl ClassHistogram {
    /// Indices of the lowest and highest occupied bins.
    pub fn index_span(&self) -> Option<(i64, i64)> {
        Some((self.bins.first()?.index, self.bins.last()?.index))
    }
}

/// Histograms of log10(bit-line current) per input class, with bins of
/// width `1 / bins_per_decade` aligned to integer decades.
pub fn region_histogram(
    op: LogicOp,
    n: usize,
    params: &DeviceParams,
    trials: usize,
    bins_per_decade: usize,
    seed: u64,
    enumeration: Enumeration,
) -> Result<Vec<ClassHistogram>, AnalysisError> {
    check_trials(trials)?;
    if bins_per_decade == 0 {
        return Err(AnalysisError::InvalidArgument("bins_per_decade must be >= 1".into()));
    }
    params.validate()?;
    op.check_arity(n)?;
    let width = bins_per_decade as f64;
    combinations(n, enumeration)
        .iter()
        .enumerate()
        .map(|(idx, inputs)| {
            let currents = sample_class_currents(inputs, params, trials, seed, idx)?;
            let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
            for i in currents {
                *counts.entry((i.log10() * width).floor() as i64).or_default() += 1;
            }
            let bins = counts
                .into_iter()
                .map(|(b, count)| HistBin {
                    index: b,
                    low_log10_a: b as f64 / width,
                    high_log10_a: (b + 1) as f64 / width,
                    count,
                })
                .collect();
            Ok(ClassHistogram {
                class: combo_label(inputs),
                expected: op.eval(inputs),
                bins_per_decade,
                bins,
            })
        })
        .collect()
}

/// Smallest distance, in decades, between the occupied bins of any '1'
/// class and any '0' class, measured bin to bin: the lowest bin of the upper
/// region minus the highest bin of the lower region. Zero or negative when
/// regions share or interleave bins; `None` if either output class is
/// absent.
pub fn region_gap_decades(hists: &[ClassHistogram]) -> Option<f64> {
    let mut gap: Option<i64> = None;
    let mut width = 1;
    for one in hists.iter().filter(|h| h.expected) {
        for zero in hists.iter().filter(|h| !h.expected) {
            let (Some((a_lo, a_hi)), Some((b_lo, b_hi))) = (one.index_span(), zero.index_span()) else {
                continue;
            };
            width = one.bins_per_decade;
            let sep = (a_lo - b_hi).max(b_lo - a_hi);
            gap = Some(gap.map_or(sep, |g| g.min(sep)));
        }
    }
    gap.map(|g| g as f64 / width as f64)
}

/// `start, start + step, ...` up to `stop` inclusive within half a step.
/// Values are rounded to 12 significant digits so that accumulated binary
/// error does not leak into reports.
pub fn sweep_values(start: f64, stop: f64, step: f64) -> Result<Vec<f64>, String> {
    if !(step > 0.0 && step.is_finite() && start.is_finite() && stop >= start) {
        return Err(format!("sweep {start}:{stop}:{step} needs step > 0 and stop >= start"));
    }
    let count = ((stop - start) / step + 0.5).floor() as usize + 1;
    Ok((0..count)
        .map(|i| {
            let v = start + i as f64 * step;
            format!("{v:.11e}").parse().unwrap_or(v)
        })
        .collect())
}

/// One `(n, sigma)` point of a margin sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub op: LogicOp,
    pub n: usize,
    pub sigma: f64,
    /// NaN when `error` is set.
    pub margin_ratio: f64,
    /// NaN when `error` is set.
    pub error_rate: f64,
    pub error: Option<String>,
}

/// Error rate with calibrated references and analytic margin ratio over a
/// grid of input counts and spreads. Rows that fail (arity, infeasible gate)
/// are recorded with their error instead of aborting the sweep.
pub fn margin_sweep(
    op: LogicOp,
    n_values: &[usize],
    sigma_values: &[f64],
    base: &DeviceParams,
    trials: usize,
    seed: u64,
) -> Result<Vec<SweepRow>, AnalysisError> {
    check_trials(trials)?;
    if n_values.is_empty() || sigma_values.is_empty() {
        return Err(AnalysisError::InvalidArgument("sweep value lists must be non-empty".into()));
    }
    let mut rows = Vec::with_capacity(n_values.len() * sigma_values.len());
    for &n in n_values {
        for &sigma in sigma_values {
            let params = base.with_sigma(sigma);
            params.validate()?;
            let outcome = sense_amp::margin_ratio(op, n, &params)
                .map_err(AnalysisError::from)
                .and_then(|m| {
                    let table = truth_table(op, n, &params, None, trials, seed, Enumeration::Multiset)?;
                    Ok((m, error_rate(&table)))
                });
            rows.push(match outcome {
                Ok((margin_ratio, error_rate)) => SweepRow {
                    op,
                    n,
                    sigma,
                    margin_ratio,
                    error_rate,
                    error: None,
                },
                Err(e) => SweepRow {
                    op,
                    n,
                    sigma,
                    margin_ratio: f64::NAN,
                    error_rate: f64::NAN,
                    error: Some(e.to_string()),
                },
            });
        }
    }
    Ok(rows)
}
