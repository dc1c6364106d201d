//! Row-level bulk bitwise operations and the command script interpreter.
//!
//! A bulk operation activates its source rows together, senses every column
//! through a calibrated sense amplifier and writes the result row back with
//! one set or reset pulse per destination cell.
//!
//! Script grammar, one command per line, `#` starts a comment:
//!
//! ```text
//! PROG   <row> <bits>
//! OR     <dest> <src> <src> [<src>...]
//! AND    <dest> <src> <src> [<src>...]
//! XOR    <dest> <src> <src>
//! NOT    <dest> <src>
//! THRESH <dest> <k> <src> [<src>...]
//! READ   <row>
//! ```
//!
//! Mnemonics are case-insensitive and rows are written `r<index>`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crossbar::{BitRow, Crossbar, CrossbarError};
use crate::sense_amp::{self, LogicOp, SenseError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("destination row {0} is also a source")]
    DestIsSource(usize),
    #[error(transparent)]
    Sense(#[from] SenseError),
    #[error(transparent)]
    Crossbar(#[from] CrossbarError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScriptError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("line {line}: {source}")]
    Exec {
        line: usize,
        #[source]
        source: EngineError,
    },
}

impl ScriptError {
    pub fn line(&self) -> usize {
        match self {
            ScriptError::Parse { line, .. } | ScriptError::Exec { line, .. } => *line,
        }
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            ScriptError::Exec {
                source: EngineError::Sense(SenseError::InfeasibleGate { .. }),
                ..
            }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScriptCommand {
    Prog { row: usize, bits: BitRow },
    Or { dest: usize, srcs: Vec<usize> },
    And { dest: usize, srcs: Vec<usize> },
    Xor { dest: usize, srcs: [usize; 2] },
    Not { dest: usize, src: usize },
    Thresh { dest: usize, k: usize, srcs: Vec<usize> },
    Read { row: usize },
}

impl ScriptCommand {
    /// The bulk operation this command performs, with its destination and
    /// sources. `None` for PROG and READ.
    pub fn bulk(&self) -> Option<(LogicOp, usize, &[usize])> {
        match self {
            ScriptCommand::Or { dest, srcs } => Some((LogicOp::Or, *dest, srcs)),
            ScriptCommand::And { dest, srcs } => Some((LogicOp::And, *dest, srcs)),
            ScriptCommand::Xor { dest, srcs } => Some((LogicOp::Xor, *dest, srcs)),
            ScriptCommand::Not { dest, src } => Some((LogicOp::Not, *dest, std::slice::from_ref(src))),
            ScriptCommand::Thresh { dest, k, srcs } => Some((LogicOp::Threshold(*k), *dest, srcs)),
            ScriptCommand::Prog { .. } | ScriptCommand::Read { .. } => None,
        }
    }

    fn rows(&self) -> Vec<usize> {
        match self {
            ScriptCommand::Prog { row, .. } | ScriptCommand::Read { row } => vec![*row],
            _ => {
                let (_, dest, srcs) = self.bulk().unwrap();
                std::iter::once(dest).chain(srcs.iter().copied()).collect()
            }
        }
    }
}

fn fmt_rows(f: &mut std::fmt::Formatter<'_>, rows: &[usize]) -> std::fmt::Result {
    for r in rows {
        write!(f, " r{r}")?;
    }
    Ok(())
}

impl std::fmt::Display for ScriptCommand {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScriptCommand::Prog { row, bits } => write!(f, "PROG r{row} {bits}"),
            ScriptCommand::Read { row } => write!(f, "READ r{row}"),
            ScriptCommand::Or { dest, srcs } => {
                write!(f, "OR r{dest}")?;
                fmt_rows(f, srcs)
            }
            ScriptCommand::And { dest, srcs } => {
                write!(f, "AND r{dest}")?;
                fmt_rows(f, srcs)
            }
            ScriptCommand::Xor { dest, srcs } => {
                write!(f, "XOR r{dest}")?;
                fmt_rows(f, srcs)
            }
            ScriptCommand::Not { dest, src } => write!(f, "NOT r{dest} r{src}"),
            ScriptCommand::Thresh { dest, k, srcs } => {
                write!(f, "THRESH r{dest} {k}")?;
                fmt_rows(f, srcs)
            }
        }
    }
}

/// A parsed script; each command keeps its 1-based source line.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Script {
    pub commands: Vec<(usize, ScriptCommand)>,
}

fn parse_row(tok: &str) -> Result<usize, String> {
    tok.strip_prefix(['r', 'R'])
        .filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
        .ok_or_else(|| format!("expected row like r0, got {tok:?}"))?
        .parse()
        .map_err(|e| format!("row {tok:?}: {e}"))
}

fn parse_rows(toks: &[&str]) -> Result<Vec<usize>, String> {
    toks.iter().map(|t| parse_row(t)).collect()
}

fn parse_command(toks: &[&str]) -> Result<ScriptCommand, String> {
    let mnemonic = toks[0].to_ascii_uppercase();
    let args = &toks[1..];
    let want = |cond: bool, usage: &str| {
        if cond {
            Ok(())
        } else {
            Err(format!("usage: {usage}"))
        }
    };
    let cmd = match mnemonic.as_str() {
        "PROG" => {
            want(args.len() == 2, "PROG <row> <bits>")?;
            ScriptCommand::Prog {
                row: parse_row(args[0])?,
                bits: args[1].parse()?,
            }
        }
        "READ" => {
            want(args.len() == 1, "READ <row>")?;
            ScriptCommand::Read { row: parse_row(args[0])? }
        }
        "OR" | "AND" => {
            want(args.len() >= 3, &format!("{mnemonic} <dest> <src> <src> [<src>...]"))?;
            let dest = parse_row(args[0])?;
            let srcs = parse_rows(&args[1..])?;
            if mnemonic == "OR" {
                ScriptCommand::Or { dest, srcs }
            } else {
                ScriptCommand::And { dest, srcs }
            }
        }
        "XOR" => {
            want(args.len() == 3, "XOR <dest> <src> <src>")?;
            ScriptCommand::Xor {
                dest: parse_row(args[0])?,
                srcs: [parse_row(args[1])?, parse_row(args[2])?],
            }
        }
        "NOT" => {
            want(args.len() == 2, "NOT <dest> <src>")?;
            ScriptCommand::Not {
                dest: parse_row(args[0])?,
                src: parse_row(args[1])?,
            }
        }
        "THRESH" => {
            want(args.len() >= 3, "THRESH <dest> <k> <src> [<src>...]")?;
            let k: usize = args[1]
                .parse()
                .map_err(|_| format!("threshold k must be a non-negative integer, got {:?}", args[1]))?;
            let srcs = parse_rows(&args[2..])?;
            if k == 0 || k > srcs.len() {
                return Err(format!("threshold k={k} outside 1..={}", srcs.len()));
            }
            ScriptCommand::Thresh {
                dest: parse_row(args[0])?,
                k,
                srcs,
            }
        }
        other => return Err(format!("unknown command {other:?}")),
    };
    if let Some((_, dest, srcs)) = cmd.bulk() {
        if srcs.contains(&dest) {
            return Err(format!("destination r{dest} is also a source"));
        }
        for (i, s) in srcs.iter().enumerate() {
            if srcs[..i].contains(s) {
                return Err(format!("source r{s} listed twice"));
            }
        }
    }
    Ok(cmd)
}

impl Script {
    pub fn parse(text: &str) -> Result<Self, ScriptError> {
        let mut commands = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("");
            let toks: Vec<&str> = body.split_whitespace().collect();
            if toks.is_empty() {
                continue;
            }
            let cmd = parse_command(&toks).map_err(|reason| ScriptError::Parse { line, reason })?;
            commands.push((line, cmd));
        }
        Ok(Self { commands })
    }

    /// Checks every row index and bit-string width against the array shape.
    pub fn validate(&self, rows: usize, cols: usize) -> Result<(), ScriptError> {
        for (line, cmd) in &self.commands {
            let line = *line;
            if let Some(&bad) = cmd.rows().iter().find(|&&r| r >= rows) {
                return Err(ScriptError::Parse {
                    line,
                    reason: format!("row r{bad} out of range (array has {rows} rows)"),
                });
            }
            if let ScriptCommand::Prog { bits, .. } = cmd {
                if bits.len() != cols {
                    return Err(ScriptError::Parse {
                        line,
                        reason: format!("bit string has {} bits, array has {cols} columns", bits.len()),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Pulse and activation accounting for a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpStats {
    pub set_pulses: u64,
    pub reset_pulses: u64,
    /// Multi-row (or single-row) activations; all columns sense in parallel.
    pub read_activations: u64,
    pub rows_activated_total: u64,
}

impl OpStats {
    fn count_write(&mut self, bits: &BitRow) {
        let ones = bits.bits().iter().filter(|&&b| b).count() as u64;
        self.set_pulses += ones;
        self.reset_pulses += bits.len() as u64 - ones;
    }

    fn count_activation(&mut self, rows: usize) {
        self.read_activations += 1;
        self.rows_activated_total += rows as u64;
    }
}

impl std::fmt::Display for OpStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "set_pulses={} reset_pulses={} read_activations={} rows_activated_total={}",
            self.set_pulses, self.reset_pulses, self.read_activations, self.rows_activated_total
        )
    }
}

/// Activates `src_rows`, senses every column and returns the bits without
/// writing them anywhere.
pub fn sense_rows(cb: &mut Crossbar, op: LogicOp, src_rows: &[usize], stats: &mut OpStats) -> Result<BitRow, EngineError> {
    let cfg = sense_amp::calibrate(op, src_rows.len(), cb.params())?.config;
    let currents = cb.bitline_currents(src_rows)?;
    cb.activate(src_rows)?;
    stats.count_activation(src_rows.len());
    let v = cb.params().read_voltage_v;
    Ok(BitRow(currents.into_iter().map(|i| sense_amp::sense(i, &cfg, v)).collect()))
}

/// Computes `op` over the source rows and writes the result to `dest_row`.
pub fn bulk_op(
    cb: &mut Crossbar,
    op: LogicOp,
    src_rows: &[usize],
    dest_row: usize,
    stats: &mut OpStats,
) -> Result<BitRow, EngineError> {
    if src_rows.contains(&dest_row) {
        return Err(EngineError::DestIsSource(dest_row));
    }
    op.check_arity(src_rows.len())?;
    // validate the destination before any cell is touched
    cb.row_cells(dest_row)?;
    let result = sense_rows(cb, op, src_rows, stats)?;
    cb.program_row(dest_row, &result)?;
    stats.count_write(&result);
    Ok(result)
}

/// One executed command and the row it produced, if any.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub line: usize,
    pub command: ScriptCommand,
    pub result: Option<BitRow>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunOutput {
    pub trace: Vec<TraceEntry>,
    pub stats: OpStats,
}

pub fn execute(cb: &mut Crossbar, cmd: &ScriptCommand, stats: &mut OpStats) -> Result<Option<BitRow>, EngineError> {
    match cmd {
        ScriptCommand::Prog { row, bits } => {
            cb.program_row(*row, bits)?;
            stats.count_write(bits);
            Ok(None)
        }
        ScriptCommand::Read { row } => sense_rows(cb, LogicOp::Read, &[*row], stats).map(Some),
        _ => {
            let (op, dest, srcs) = cmd.bulk().unwrap();
            bulk_op(cb, op, srcs, dest, stats).map(Some)
        }
    }
}

/// Validates the whole script against the array shape, then runs it in
/// order.
pub fn run_script(cb: &mut Crossbar, script: &Script) -> Result<RunOutput, ScriptError> {
    script.validate(cb.rows(), cb.cols())?;
    let mut out = RunOutput::default();
    for (line, cmd) in &script.commands {
        let result = execute(cb, cmd, &mut out.stats).map_err(|source| ScriptError::Exec { line: *line, source })?;
        out.trace.push(TraceEntry {
            line: *line,
            command: cmd.clone(),
            result,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{DeviceParams, Phase};

    fn quiet(rows: usize, cols: usize) -> Crossbar {
        Crossbar::new(rows, cols, DeviceParams::default().with_sigma(0.0), 11).unwrap()
    }

    fn bits(s: &str) -> BitRow {
        s.parse().unwrap()
    }

    fn load(cb: &mut Crossbar, rows: &[&str]) {
        for (r, s) in rows.iter().enumerate() {
            cb.program_row(r, &bits(s)).unwrap();
        }
    }

    #[test]
    fn bulk_ops_match_truth_tables() {
        let mut cb = quiet(6, 4);
        let mut stats = OpStats::default();
        load(&mut cb, &["1010", "0110", "0001"]);
        assert_eq!(bulk_op(&mut cb, LogicOp::Or, &[0, 1, 2], 3, &mut stats).unwrap(), bits("1111"));

        load(&mut cb, &["1100", "1010"]);
        assert_eq!(bulk_op(&mut cb, LogicOp::And, &[0, 1], 3, &mut stats).unwrap(), bits("1000"));
        assert_eq!(bulk_op(&mut cb, LogicOp::Xor, &[0, 1], 4, &mut stats).unwrap(), bits("0110"));
        assert_eq!(bulk_op(&mut cb, LogicOp::Not, &[0], 5, &mut stats).unwrap(), bits("0011"));
        assert_eq!(cb.row_phases(5).unwrap(), bits("0011"));
    }

    #[test]
    fn bulk_op_rejects_bad_operands() {
        let mut cb = quiet(4, 2);
        let mut stats = OpStats::default();
        assert_eq!(
            bulk_op(&mut cb, LogicOp::Or, &[0, 1], 1, &mut stats),
            Err(EngineError::DestIsSource(1))
        );
        assert!(matches!(
            bulk_op(&mut cb, LogicOp::Xor, &[0, 1, 2], 3, &mut stats),
            Err(EngineError::Sense(SenseError::Arity { .. }))
        ));
        assert!(matches!(
            bulk_op(&mut cb, LogicOp::Or, &[0, 1], 9, &mut stats),
            Err(EngineError::Crossbar(CrossbarError::RowOutOfRange { .. }))
        ));
        assert_eq!(stats, OpStats::default());
    }

    #[test]
    fn bulk_op_only_writes_destination() {
        let mut cb = Crossbar::new(4, 16, DeviceParams::default(), 3).unwrap();
        load(&mut cb, &["1010101010101010", "0110011001100110", "1111000011110000"]);
        let snapshot: Vec<Vec<(Phase, u64)>> = (0..3)
            .map(|r| cb.row_cells(r).unwrap().iter().map(|c| (c.phase, c.resistance_ohms.to_bits())).collect())
            .collect();
        let mut stats = OpStats::default();
        bulk_op(&mut cb, LogicOp::Or, &[0, 1, 2], 3, &mut stats).unwrap();
        for (r, row) in snapshot.iter().enumerate() {
            let now: Vec<(Phase, u64)> = cb.row_cells(r).unwrap().iter().map(|c| (c.phase, c.resistance_ohms.to_bits())).collect();
            assert_eq!(&now, row);
        }
        assert_eq!(stats.read_activations, 1);
        assert_eq!(stats.rows_activated_total, 3);
        assert_eq!(stats.set_pulses + stats.reset_pulses, 16);
    }

    #[test]
    fn parses_grammar() {
        let text = "# demo\nprog r0 1010\n  PROG R1 0110  # second\n\nOr r2 r0 r1\nTHRESH r3 2 r0 r1 r2\nXOR r4 r0 r1\nnot r5 r0\nREAD r2\n";
        let s = Script::parse(text).unwrap();
        let lines: Vec<usize> = s.commands.iter().map(|(l, _)| *l).collect();
        assert_eq!(lines, vec![2, 3, 5, 6, 7, 8, 9]);
        let shown: Vec<String> = s.commands.iter().map(|(_, c)| c.to_string()).collect();
        assert_eq!(
            shown,
            vec![
                "PROG r0 1010",
                "PROG r1 0110",
                "OR r2 r0 r1",
                "THRESH r3 2 r0 r1 r2",
                "XOR r4 r0 r1",
                "NOT r5 r0",
                "READ r2"
            ]
        );
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let cases = [
            ("PROG r0 1010\nOR r0 r0 r1\n", 2),
            ("OR r2 r0\n", 1),
            ("\n\nXOR r2 r0 r1 r3\n", 3),
            ("PROG 0 1010\n", 1),
            ("PROG r0 10a0\n", 1),
            ("NAND r2 r0 r1\n", 1),
            ("THRESH r3 4 r0 r1 r2\n", 1),
            ("AND r3 r0 r0\n", 1),
        ];
        for (text, line) in cases {
            let err = Script::parse(text).unwrap_err();
            assert_eq!(err.line(), line, "{text:?}: {err}");
        }
    }

    #[test]
    fn validate_checks_dimensions() {
        let s = Script::parse("PROG r0 1010\nREAD r7\n").unwrap();
        let err = s.validate(4, 4).unwrap_err();
        assert_eq!(err.line(), 2);
        assert!(err.to_string().contains("r7"));
        let s = Script::parse("PROG r0 10\n").unwrap();
        assert_eq!(s.validate(4, 4).unwrap_err().line(), 1);
    }

    #[test]
    fn runs_or_demo() {
        let mut cb = quiet(4, 4);
        let s = Script::parse("PROG r0 1010\nPROG r1 0110\nOR r2 r0 r1\nREAD r2\n").unwrap();
        let out = run_script(&mut cb, &s).unwrap();
        assert_eq!(out.trace.len(), 4);
        assert_eq!(out.trace[0].result, None);
        assert_eq!(out.trace[2].result, Some(bits("1110")));
        assert_eq!(out.trace[3].result, Some(bits("1110")));
        assert_eq!(out.stats.set_pulses + out.stats.reset_pulses, 4 * 3);
        assert_eq!(out.stats.read_activations, 2);
        assert_eq!(out.stats.rows_activated_total, 3);
    }

    #[test]
    fn empty_script() {
        let mut cb = quiet(2, 2);
        let out = run_script(&mut cb, &Script::parse("# nothing\n\n").unwrap()).unwrap();
        assert!(out.trace.is_empty());
        assert_eq!(out.stats, OpStats::default());
    }

    #[test]
    fn prog_then_read_round_trips_with_variability() {
        let mut cb = Crossbar::new(2, 64, DeviceParams::default(), 99).unwrap();
        let pattern: String = (0..64).map(|i| if (i * 7) % 3 == 0 { '1' } else { '0' }).collect();
        let s = Script::parse(&format!("PROG r1 {pattern}\nREAD r1\n")).unwrap();
        let out = run_script(&mut cb, &s).unwrap();
        assert_eq!(out.trace[1].result.as_ref().unwrap().to_string(), pattern);
    }
}
