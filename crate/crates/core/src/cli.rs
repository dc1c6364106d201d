//! `pinatubo-sim` command-line front end.
//!
//! Exit codes: 0 success, 1 usage/parse/IO error, 2 infeasible gate.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use crate::analysis::{self, AnalysisError, Enumeration};
use crate::config::Config;
use crate::crossbar::Crossbar;
use crate::engine::{self, Script};
use crate::report;
use crate::sense_amp::{self, LogicOp, SenseError};

#[derive(Debug, Parser)]
#[command(name = "pinatubo-sim", version, about = "Sense-amplifier bulk bitwise logic on simulated PCM crossbars")]
struct Cli {
    /// JSON config file; all fields optional
    #[arg(long, global = true, env = "PINATUBO_SIM_CONFIG")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print class boundaries, calibrated reference(s) and margin ratio
    Calibrate(GateArgs),
    /// Monte Carlo truth table: current statistics and sensing errors per input class
    Truthtable(TruthtableArgs),
    /// Histogram of log10(bit-line current) per input class
    Regions(RegionsArgs),
    /// Error rate and margin ratio over input counts and sigma values
    Margins(MarginsArgs),
    /// Execute a command script and write its trace
    Run(RunArgs),
    /// Print the effective configuration as JSON
    Config,
}

#[derive(Debug, Args)]
struct GateArgs {
    /// read | or | and | xor | not | thresh:<k>
    #[arg(long)]
    op: LogicOp,
    /// Number of activated rows
    #[arg(long = "inputs")]
    inputs: usize,
    /// Override sigma_decades (std of log10 R, decades)
    #[arg(long)]
    sigma: Option<f64>,
}

#[derive(Debug, Args)]
struct SamplingArgs {
    /// Trials per input class
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Override the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// Enumerate all 2^n input vectors instead of one per number of 1s
    #[arg(long)]
    full: bool,
    /// Output CSV path (stdout if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TruthtableArgs {
    #[command(flatten)]
    gate: GateArgs,
    #[command(flatten)]
    sampling: SamplingArgs,
    /// Reference resistance override in ohms (single-reference ops)
    #[arg(long = "ref")]
    reference: Option<f64>,
}

#[derive(Debug, Args)]
struct RegionsArgs {
    #[command(flatten)]
    gate: GateArgs,
    #[command(flatten)]
    sampling: SamplingArgs,
    /// Histogram bins per decade of current
    #[arg(long, default_value_t = 10)]
    bins_per_decade: usize,
}

#[derive(Debug, Args)]
struct MarginsArgs {
    /// read | or | and | xor | not | thresh:<k>
    #[arg(long)]
    op: LogicOp,
    /// Input counts: `n`, `a,b,c` or `start:stop:step`
    #[arg(long = "inputs")]
    inputs: String,
    /// Sigma values in decades: `s`, `a,b,c` or `start:stop:step` (inclusive)
    #[arg(long)]
    sigma: Option<String>,
    /// Trials per input class
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Override the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path (stdout if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Script file
    script: PathBuf,
    /// Trace CSV path (stdout if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override sigma_decades
    #[arg(long)]
    sigma: Option<f64>,
    /// Override the config seed
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        Self {
            code: if e.is_infeasible() { 2 } else { 1 },
            message: e.to_string(),
        }
    }
}

impl From<SenseError> for CliError {
    fn from(e: SenseError) -> Self {
        AnalysisError::from(e).into()
    }
}

/// Parses `start:stop:step` (endpoints inclusive within half a step), a
/// comma-separated list, or a single value.
pub fn parse_sweep(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("invalid number {t:?} in {s:?}"));
    match parts.len() {
        1 => s.split(',').map(num).collect(),
        3 => analysis::sweep_values(num(parts[0])?, num(parts[1])?, num(parts[2])?),
        _ => Err(format!("expected value, list or start:stop:step, got {s:?}")),
    }
}

fn parse_counts(s: &str) -> Result<Vec<usize>, String> {
    parse_sweep(s)?
        .into_iter()
        .map(|v| {
            let r = v.round();
            if (v - r).abs() > 1e-9 || r < 0.0 {
                Err(format!("input count {v} is not a non-negative integer"))
            } else {
                Ok(r as usize)
            }
        })
        .collect()
}

fn load_config(path: Option<&Path>) -> Result<Config, CliError> {
    match path {
        Some(p) => Config::load(p).map_err(|e| CliError::usage(e.to_string())),
        None => Ok(Config::default()),
    }
}

/// Writes via a temporary file in the destination directory and renames it
/// into place.
fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let fail = |e: &dyn std::fmt::Display| CliError::usage(format!("{}: cannot write output: {e}", path.display()));
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| fail(&e))?;
    tmp.write_all(contents.as_bytes()).map_err(|e| fail(&e))?;
    tmp.persist(path).map_err(|e| fail(&e.error))?;
    Ok(())
}

/// CSV goes to `--out` when given, otherwise to stdout; the summary goes to
/// whichever stream the CSV did not.
fn emit(
    csv: &str,
    summary: &str,
    out_path: Option<&Path>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    match out_path {
        Some(p) => {
            write_atomic(p, csv)?;
            let _ = writeln!(stdout, "{summary}\nwrote {}", p.display());
        }
        None => {
            let _ = stdout.write_all(csv.as_bytes());
            let _ = writeln!(stderr, "{summary}");
        }
    }
    Ok(())
}

/// `1.2345e5` rendered with an SI prefix.
fn si(value: f64, unit: &str) -> String {
    const PREFIXES: [(f64, &str); 9] = [
        (1e9, "G"),
        (1e6, "M"),
        (1e3, "k"),
        (1.0, ""),
        (1e-3, "m"),
        (1e-6, "u"),
        (1e-9, "n"),
        (1e-12, "p"),
        (1e-15, "f"),
    ];
    let (scale, prefix) = PREFIXES
        .iter()
        .find(|(s, _)| value.abs() >= *s)
        .copied()
        .unwrap_or((1e-15, "f"));
    format!("{:.4} {prefix}{unit}", value / scale)
}

fn cmd_calibrate(args: &GateArgs, cfg: &Config, out: &mut dyn Write) -> Result<(), CliError> {
    let mut params = cfg.device_params();
    if let Some(s) = args.sigma {
        params.sigma_decades = s;
    }
    params.validate().map_err(|e| CliError::usage(e.to_string()))?;
    let cal = sense_amp::calibrate(args.op, args.inputs, &params)?;
    let _ = writeln!(out, "op {} over {} input(s), read at {} V", args.op, args.inputs, params.read_voltage_v);
    let sides = if cal.windows.len() == 2 { &["low side", "high side"][..] } else { &[""][..] };
    let refs = [Some(cal.config.ref_primary_ohms), cal.config.ref_secondary_ohms];
    for ((w, side), r) in cal.windows.iter().zip(sides).zip(refs.iter().flatten()) {
        let tag = if side.is_empty() { String::new() } else { format!(" ({side})") };
        let _ = writeln!(out, "r_one_worst{tag}: {:e} ohm ({})", w.r_one_worst, si(w.r_one_worst, "ohm"));
        let _ = writeln!(out, "r_zero_worst{tag}: {:e} ohm ({})", w.r_zero_worst, si(w.r_zero_worst, "ohm"));
        let _ = writeln!(out, "reference{tag}: {:e} ohm ({})", r, si(*r, "ohm"));
        let _ = writeln!(out, "reference_current{tag}: {:e} A ({})", params.read_voltage_v / r, si(params.read_voltage_v / r, "A"));
    }
    if cal.config.invert_output {
        let _ = writeln!(out, "output inverted");
    }
    let _ = writeln!(out, "margin_ratio: {:e}", cal.margin_ratio);
    if let Some(w) = cal.warning {
        let _ = writeln!(out, "warning: {w}");
    }
    Ok(())
}

fn sampling_params(cfg: &Config, sigma: Option<f64>, seed: Option<u64>) -> (crate::DeviceParams, u64) {
    let mut params = cfg.device_params();
    if let Some(s) = sigma {
        params.sigma_decades = s;
    }
    (params, seed.unwrap_or(cfg.seed))
}

fn enumeration(full: bool) -> Enumeration {
    if full {
        Enumeration::Full
    } else {
        Enumeration::Multiset
    }
}

fn cmd_truthtable(
    args: &TruthtableArgs,
    cfg: &Config,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let (params, seed) = sampling_params(cfg, args.gate.sigma, args.sampling.seed);
    let table = analysis::truth_table(
        args.gate.op,
        args.gate.inputs,
        &params,
        args.reference,
        args.sampling.trials,
        seed,
        enumeration(args.sampling.full),
    )?;
    let reference = analysis::sensing_config(args.gate.op, args.gate.inputs, &params, args.reference)?;
    let errors: usize = table.iter().map(|c| c.errors).sum();
    let summary = format!(
        "{} n={} sigma={} trials={} seed={} ref={:e} ohm: {} error(s), error rate {:e}",
        args.gate.op,
        args.gate.inputs,
        params.sigma_decades,
        args.sampling.trials,
        seed,
        reference.ref_primary_ohms,
        errors,
        analysis::error_rate(&table)
    );
    emit(&report::truthtable_csv(&table), &summary, args.sampling.out.as_deref(), stdout, stderr)
}

fn cmd_regions(args: &RegionsArgs, cfg: &Config, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let (params, seed) = sampling_params(cfg, args.gate.sigma, args.sampling.seed);
    let hists = analysis::region_histogram(
        args.gate.op,
        args.gate.inputs,
        &params,
        args.sampling.trials,
        args.bins_per_decade,
        seed,
        enumeration(args.sampling.full),
    )?;
    let mut summary = format!("{} classes", hists.len());
    if let Some(gap) = analysis::region_gap_decades(&hists) {
        summary.push_str(&format!(", '1'/'0' region gap {gap:.3} decades"));
    }
    if let Ok(cal) = sense_amp::calibrate(args.gate.op, args.gate.inputs, &params) {
        summary.push_str(&format!(
            ", calibrated reference current log10(A) = {:.4}",
            (params.read_voltage_v / cal.config.ref_primary_ohms).log10()
        ));
    }
    emit(&report::regions_csv(&hists), &summary, args.sampling.out.as_deref(), stdout, stderr)
}

fn cmd_margins(args: &MarginsArgs, cfg: &Config, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let n_values = parse_counts(&args.inputs).map_err(CliError::usage)?;
    let sigmas = match &args.sigma {
        Some(s) => parse_sweep(s).map_err(CliError::usage)?,
        None => vec![cfg.sigma_decades],
    };
    let seed = args.seed.unwrap_or(cfg.seed);
    let rows = analysis::margin_sweep(args.op, &n_values, &sigmas, &cfg.device_params(), args.trials, seed)?;
    let failed: Vec<String> = rows
        .iter()
        .filter_map(|r| r.error.as_ref().map(|e| format!("n={} sigma={}: {e}", r.n, r.sigma)))
        .collect();
    let mut summary = format!("{} sweep rows", rows.len());
    for f in &failed {
        summary.push_str(&format!("\nskipped {f}"));
    }
    emit(&report::margins_csv(&rows), &summary, args.out.as_deref(), stdout, stderr)
}

fn cmd_run(args: &RunArgs, cfg: &Config, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.script)
        .map_err(|e| CliError::usage(format!("{}: {e}", args.script.display())))?;
    let shown = args.script.display().to_string();
    let script = Script::parse(&text).map_err(|e| CliError::usage(format!("{shown}: {e}")))?;
    let (params, seed) = sampling_params(cfg, args.sigma, args.seed);
    let mut cb = Crossbar::with_pulses(cfg.rows, cfg.cols, params, cfg.pulses(), seed)
        .map_err(|e| CliError::usage(e.to_string()))?;
    let run = engine::run_script(&mut cb, &script).map_err(|e| CliError {
        code: if e.is_infeasible() { 2 } else { 1 },
        message: format!("{shown}: {e}"),
    })?;
    let summary = format!("{} command(s); {}", run.trace.len(), run.stats);
    emit(&report::trace_csv(&run), &summary, args.out.as_deref(), stdout, stderr)
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let cfg = load_config(cli.config.as_deref())?;
    match &cli.command {
        Command::Calibrate(a) => cmd_calibrate(a, &cfg, stdout),
        Command::Truthtable(a) => cmd_truthtable(a, &cfg, stdout, stderr),
        Command::Regions(a) => cmd_regions(a, &cfg, stdout, stderr),
        Command::Margins(a) => cmd_margins(a, &cfg, stdout, stderr),
        Command::Run(a) => cmd_run(a, &cfg, stdout, stderr),
        Command::Config => {
            let _ = writeln!(stdout, "{}", cfg.to_json());
            Ok(())
        }
    }
}

fn command() -> clap::Command {
    Cli::command().after_help(format!(
        "Config defaults (override with --config or PINATUBO_SIM_CONFIG):\n{}\n\nExit codes: 0 success, 1 usage/parse/IO error, 2 infeasible gate.",
        Config::defaults_help()
    ))
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{rendered}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{rendered}");
                    1
                }
            };
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return 1;
        }
    };
    match dispatch(&cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message);
            e.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("pinatubo-sim").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn sweep_syntax() {
        let v = parse_sweep("0:0.5:0.05").unwrap();
        assert_eq!(v.len(), 11);
        assert!((v[10] - 0.5).abs() < 1e-12);
        assert_eq!(parse_sweep("0.1,0.2").unwrap(), vec![0.1, 0.2]);
        assert_eq!(parse_sweep("0.3").unwrap(), vec![0.3]);
        // stop within half a step of the grid is included
        assert_eq!(parse_sweep("0:0.96:0.1").unwrap().len(), 11);
        assert_eq!(parse_sweep("0:0.94:0.1").unwrap().len(), 10);
        assert!(parse_sweep("0:1:0").is_err());
        assert!(parse_sweep("1:0:0.1").is_err());
        assert!(parse_sweep("a").is_err());
        assert_eq!(parse_counts("2:8:1").unwrap(), vec![2, 3, 4, 5, 6, 7, 8]);
        assert!(parse_counts("2.5").is_err());
    }

    #[test]
    fn si_prefixes() {
        assert_eq!(si(223_605.68, "ohm"), "223.6057 kohm");
        assert_eq!(si(8e-9, "A"), "8.0000 nA");
    }

    #[test]
    fn calibrate_output() {
        let (code, out, _) = run_capture(&["calibrate", "--op", "or", "--inputs", "2"]);
        assert_eq!(code, 0);
        assert!(out.contains("223.6057 kohm"), "{out}");
        assert!(out.contains("margin_ratio: 5.00005e4"), "{out}");
        assert!(!out.contains("warning"));

        let (_, out, _) = run_capture(&["calibrate", "--op", "and", "--inputs", "2"]);
        assert!(out.contains("707.1032 ohm"), "{out}");
        assert!(out.contains("warning"), "{out}");

        let (_, out, _) = run_capture(&["calibrate", "--op", "or", "--inputs", "1"]);
        assert!(out.contains("316.2278 kohm"), "{out}");
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run_capture(&["calibrate", "--op", "nand", "--inputs", "2"]).0, 1);
        assert_eq!(run_capture(&["calibrate", "--op", "xor", "--inputs", "3"]).0, 1);
        assert_eq!(run_capture(&["bogus"]).0, 1);
    }

    #[test]
    fn help_lists_defaults_with_units() {
        let (code, out, _) = run_capture(&["--help"]);
        assert_eq!(code, 0);
        for needle in ["r_low_ohms", "1e3 ohm", "1e8 ohm", "sigma_decades", "0.4 V", "2.7 V", "4 V", "[default: 100]"] {
            if needle.starts_with("[default") {
                continue;
            }
            assert!(out.contains(needle), "missing {needle} in:\n{out}");
        }
        let (_, out, _) = run_capture(&["truthtable", "--help"]);
        assert!(out.contains("[default: 100]"), "{out}");
    }
}
