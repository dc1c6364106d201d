//! CSV renderings of analysis and script results.
//!
//! Floating-point fields use Rust's shortest round-trip representation in
//! exponent form (`8e-9`, `4.00004e-4`), so parsing a field back yields the
//! exact value that was written.

use std::fmt::Write;

use crate::analysis::{ClassHistogram, ClassStats, SweepRow};
use crate::engine::RunOutput;

pub const TRUTHTABLE_HEADER: &str = "combo,trials,i_min_a,i_mean_a,i_max_a,log10_std,out0,out1,errors";
pub const REGIONS_HEADER: &str = "class,bin_low_log10a,bin_high_log10a,count";
pub const MARGINS_HEADER: &str = "op,n,sigma,margin_ratio,error_rate";
pub const TRACE_HEADER: &str = "step,command,result_bits";

fn num(x: f64) -> String {
    format!("{x:e}")
}

pub fn truthtable_csv(table: &[ClassStats]) -> String {
    let mut out = String::from(TRUTHTABLE_HEADER);
    out.push('\n');
    for c in table {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            c.combination,
            c.trials,
            num(c.current_min_a),
            num(c.current_mean_a),
            num(c.current_max_a),
            num(c.log10_std),
            c.out0,
            c.out1,
            c.errors
        )
        .unwrap();
    }
    out
}

pub fn regions_csv(hists: &[ClassHistogram]) -> String {
    let mut out = String::from(REGIONS_HEADER);
    out.push('\n');
    for h in hists {
        for b in &h.bins {
            writeln!(out, "{},{},{},{}", h.class, num(b.low_log10_a), num(b.high_log10_a), b.count).unwrap();
        }
    }
    out
}

pub fn margins_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(MARGINS_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.op,
            r.n,
            num(r.sigma),
            num(r.margin_ratio),
            num(r.error_rate)
        )
        .unwrap();
    }
    out
}

pub fn trace_csv(run: &RunOutput) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for (step, entry) in run.trace.iter().enumerate() {
        let bits = entry.result.as_ref().map(|b| b.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{}", step, entry.command, bits).unwrap();
    }
    out
}
