//! wasm-bindgen bindings for the static demo page in `www/`.
//!
//! Each export takes plain numbers and strings and returns a JSON document
//! that the page plots on a canvas.

use pinatubo_sim::analysis::{self, ClassHistogram, Enumeration, SweepRow};
use pinatubo_sim::engine;
use pinatubo_sim::OpStats;
use pinatubo_sim::{sense_amp, Calibration, Crossbar, DeviceParams, LogicOp, Script};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct RegionsView {
    pub calibration: Option<Calibration>,
    /// Reference current(s) as log10(A), for the overlay lines.
    pub reference_log10_a: Vec<f64>,
    /// Fixed reference overlay, if one was given.
    pub override_log10_a: Option<f64>,
    pub gap_decades: Option<f64>,
    pub classes: Vec<ClassHistogram>,
}

fn params(sigma: f64) -> Result<DeviceParams, String> {
    let p = DeviceParams::default().with_sigma(sigma);
    p.validate().map_err(|e| e.to_string())?;
    Ok(p)
}

fn parse_op(op: &str) -> Result<LogicOp, String> {
    op.parse()
}

pub fn regions_view(
    op: &str,
    inputs: usize,
    sigma: f64,
    trials: usize,
    bins_per_decade: usize,
    seed: u64,
    ref_override_ohms: Option<f64>,
) -> Result<RegionsView, String> {
    let op = parse_op(op)?;
    let p = params(sigma)?;
    let classes = analysis::region_histogram(op, inputs, &p, trials, bins_per_decade, seed, Enumeration::Multiset)
        .map_err(|e| e.to_string())?;
    let calibration = sense_amp::calibrate(op, inputs, &p).ok();
    let reference_log10_a = calibration
        .iter()
        .flat_map(|c| [Some(c.config.ref_primary_ohms), c.config.ref_secondary_ohms])
        .flatten()
        .map(|r| (p.read_voltage_v / r).log10())
        .collect();
    Ok(RegionsView {
        gap_decades: analysis::region_gap_decades(&classes),
        override_log10_a: ref_override_ohms
            .filter(|r| *r > 0.0)
            .map(|r| (p.read_voltage_v / r).log10()),
        calibration,
        reference_log10_a,
        classes,
    })
}

pub fn margin_rows(
    op: &str,
    inputs: usize,
    sigma_max: f64,
    sigma_step: f64,
    trials: usize,
    seed: u64,
) -> Result<Vec<SweepRow>, String> {
    let sigmas = analysis::sweep_values(0.0, sigma_max, sigma_step)?;
    analysis::margin_sweep(parse_op(op)?, &[inputs], &sigmas, &DeviceParams::default(), trials, seed)
        .map_err(|e| e.to_string())
}

/// One executed script line, already rendered for display.
#[derive(Debug, Serialize)]
pub struct StepView {
    pub line: usize,
    pub command: String,
    pub bits: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct ScriptView {
    pub steps: Vec<StepView>,
    pub stats: OpStats,
    pub summary: String,
}

pub fn script_run(text: &str, rows: usize, cols: usize, sigma: f64, seed: u64) -> Result<ScriptView, String> {
    let script = Script::parse(text).map_err(|e| e.to_string())?;
    let mut cb = Crossbar::new(rows, cols, params(sigma)?, seed).map_err(|e| e.to_string())?;
    let run = engine::run_script(&mut cb, &script).map_err(|e| e.to_string())?;
    let steps = run
        .trace
        .iter()
        .map(|t| StepView {
            line: t.line,
            command: t.command.to_string(),
            bits: t.result.as_ref().map(|b| b.to_string()),
        })
        .collect();
    Ok(ScriptView {
        summary: run.stats.to_string(),
        stats: run.stats,
        steps,
    })
}

fn to_json<T: Serialize>(value: &T) -> Result<String, JsError> {
    serde_json::to_string(value).map_err(|e| JsError::new(&e.to_string()))
}

/// Current histograms per input class plus calibrated reference overlay.
/// `ref_ohms <= 0` means no fixed reference.
#[wasm_bindgen]
pub fn regions(
    op: &str,
    inputs: usize,
    sigma: f64,
    trials: usize,
    bins_per_decade: usize,
    seed: u32,
    ref_ohms: f64,
) -> Result<String, JsError> {
    let view = regions_view(op, inputs, sigma, trials, bins_per_decade, seed.into(), Some(ref_ohms))
        .map_err(|e| JsError::new(&e))?;
    to_json(&view)
}

/// Error rate and margin ratio for sigma in `0..=sigma_max`.
#[wasm_bindgen]
pub fn margins(op: &str, inputs: usize, sigma_max: f64, sigma_step: f64, trials: usize, seed: u32) -> Result<String, JsError> {
    let rows = margin_rows(op, inputs, sigma_max, sigma_step, trials, seed.into()).map_err(|e| JsError::new(&e))?;
    to_json(&rows)
}

#[wasm_bindgen]
pub fn run_script(text: &str, rows: usize, cols: usize, sigma: f64, seed: u32) -> Result<String, JsError> {
    let out = script_run(text, rows, cols, sigma, seed.into()).map_err(|e| JsError::new(&e))?;
    to_json(&out)
}
