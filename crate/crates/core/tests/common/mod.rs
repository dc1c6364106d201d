//! Test oracles that share no code path with the simulator: a plain
//! bit-vector interpreter, a direct boolean truth function and a brute-force
//! class-boundary search.

#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// What each gate should output, written without reference to resistance
/// classes.
pub fn truth(op: &str, inputs: &[bool]) -> bool {
    match op {
        "read" => inputs[0],
        "not" => !inputs[0],
        "or" => inputs.iter().any(|&b| b),
        "and" => inputs.iter().all(|&b| b),
        "xor" => inputs.iter().fold(false, |acc, &b| acc ^ b),
        t => {
            let k: usize = t.strip_prefix("thresh:").unwrap().parse().unwrap();
            inputs.iter().filter(|&&b| b).count() >= k
        }
    }
}

pub fn all_inputs(n: usize) -> Vec<Vec<bool>> {
    (0..1u32 << n)
        .map(|m| (0..n).map(|i| m & (1 << i) != 0).collect())
        .collect()
}

/// Worst-case '1' and '0' bit-line resistances found by enumerating all
/// input vectors and summing conductances cell by cell.
pub fn brute_force_boundaries(op: &str, n: usize, r_low: f64, r_high: f64) -> (f64, f64) {
    let mut one_worst = f64::NEG_INFINITY;
    let mut zero_worst = f64::INFINITY;
    for inputs in all_inputs(n) {
        let mut g = 0.0;
        for &b in &inputs {
            g += 1.0 / if b { r_low } else { r_high };
        }
        let r = 1.0 / g;
        if truth(op, &inputs) {
            one_worst = one_worst.max(r);
        } else {
            zero_worst = zero_worst.min(r);
        }
    }
    (one_worst, zero_worst)
}

/// Reference interpreter over plain bit vectors. Rows start at zero, like a
/// freshly built (all amorphous) array. Returns the READ results in order.
pub fn interpret(script: &str, rows: usize, cols: usize) -> Vec<String> {
    let mut mem = vec![vec![false; cols]; rows];
    let mut reads = Vec::new();
    let row = |t: &str| -> usize { t[1..].parse().unwrap() };
    for line in script.lines() {
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.is_empty() {
            continue;
        }
        match t[0] {
            "PROG" => mem[row(t[1])] = t[2].chars().map(|c| c == '1').collect(),
            "READ" => reads.push(mem[row(t[1])].iter().map(|&b| if b { '1' } else { '0' }).collect()),
            op => {
                let dest = row(t[1]);
                let (name, srcs): (String, Vec<usize>) = if op == "THRESH" {
                    (format!("thresh:{}", t[2]), t[3..].iter().map(|s| row(s)).collect())
                } else {
                    (op.to_ascii_lowercase(), t[2..].iter().map(|s| row(s)).collect())
                };
                let result: Vec<bool> = (0..cols)
                    .map(|c| {
                        let inputs: Vec<bool> = srcs.iter().map(|&s| mem[s][c]).collect();
                        truth(&name, &inputs)
                    })
                    .collect();
                mem[dest] = result;
            }
        }
    }
    reads
}

fn bits<R: Rng>(rng: &mut R, cols: usize) -> String {
    (0..cols).map(|_| if rng.random_bool(0.5) { '1' } else { '0' }).collect()
}

/// A random valid script over a `rows x cols` array (rows >= 3). Every
/// bulk-op destination is read back, and every row is read at the end.
pub fn random_script(seed: u64, rows: usize, cols: usize, len: usize) -> String {
    assert!(rows >= 3);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lines = Vec::new();
    for r in 0..rows {
        if rng.random_bool(0.7) {
            lines.push(format!("PROG r{r} {}", bits(&mut rng, cols)));
        }
    }
    let mut idx: Vec<usize> = (0..rows).collect();
    for _ in 0..len {
        idx.shuffle(&mut rng);
        let dest = idx[0];
        let others = &idx[1..];
        let line = match rng.random_range(0..7) {
            0 => format!("PROG r{dest} {}", bits(&mut rng, cols)),
            1 | 2 => {
                let k = rng.random_range(2..=others.len());
                let srcs: Vec<String> = others[..k].iter().map(|s| format!("r{s}")).collect();
                let op = if rng.random_bool(0.5) { "OR" } else { "AND" };
                format!("{op} r{dest} {}", srcs.join(" "))
            }
            3 => format!("XOR r{dest} r{} r{}", others[0], others[1]),
            4 => format!("NOT r{dest} r{}", others[0]),
            5 => {
                let n = rng.random_range(1..=others.len());
                let k = rng.random_range(1..=n);
                let srcs: Vec<String> = others[..n].iter().map(|s| format!("r{s}")).collect();
                format!("THRESH r{dest} {k} {}", srcs.join(" "))
            }
            _ => format!("READ r{dest}"),
        };
        let is_bulk = !line.starts_with("PROG") && !line.starts_with("READ");
        lines.push(line);
        if is_bulk {
            lines.push(format!("READ r{dest}"));
        }
    }
    for r in 0..rows {
        lines.push(format!("READ r{r}"));
    }
    lines.join("\n") + "\n"
}
