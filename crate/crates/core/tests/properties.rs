mod common;

use pinatubo_sim::analysis::{self, Enumeration};
use pinatubo_sim::crossbar::parallel_resistance;
use pinatubo_sim::device::{cell_current, classify_pulse, sample_resistance};
use pinatubo_sim::engine::{run_script, Script};
use pinatubo_sim::sense_amp::{self, class_boundaries};
use pinatubo_sim::{BitRow, Cell, Config, Crossbar, DeviceParams, LogicOp, Phase, PulseClass, PulseSpec};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pulse_strategy() -> impl Strategy<Value = PulseSpec> {
    (0.01f64..6.0, 0.0f64..100.0, 0.0f64..5000.0, 0.0f64..5000.0)
        .prop_map(|(a, r, w, f)| PulseSpec::new(a, r, w, f).unwrap())
}

fn bits_strategy(cols: usize) -> impl Strategy<Value = BitRow> {
    prop::collection::vec(any::<bool>(), cols).prop_map(BitRow)
}

proptest! {
    #[test]
    fn pulse_regimes_are_disjoint(p in pulse_strategy()) {
        let d = DeviceParams::default();
        let read = p.amplitude_v <= d.read_v_max;
        let set = p.amplitude_v >= d.set_v_min && p.amplitude_v < d.set_v_max
            && p.width_ns + p.fall_ns >= d.set_min_total_ns;
        let reset = p.amplitude_v >= d.reset_v_min && p.width_ns <= d.reset_max_width_ns;
        prop_assert!(u8::from(read) + u8::from(set) + u8::from(reset) <= 1);
        let expected = if read { Some(PulseClass::Read) } else if set { Some(PulseClass::Set) } else if reset { Some(PulseClass::Reset) } else { None };
        prop_assert_eq!(classify_pulse(&p, &d).ok(), expected);
    }

    #[test]
    fn read_is_non_destructive(seed in any::<u64>(), crystalline in any::<bool>(), v in 0.05f64..0.5) {
        let d = DeviceParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cell = Cell::sampled(Phase::from_bit(crystalline), &d, &mut rng);
        let before = cell.clone();
        cell.apply_pulse(&PulseSpec::read_at(v), &d, &mut rng).unwrap();
        prop_assert_eq!(cell.phase, before.phase);
        prop_assert_eq!(cell.resistance_ohms.to_bits(), before.resistance_ohms.to_bits());
        prop_assert_eq!(cell.read_count, before.read_count + 1);
    }

    #[test]
    fn program_phase_ignores_history(seed in any::<u64>(), start in any::<bool>(), set in any::<bool>()) {
        let d = DeviceParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cell = Cell::sampled(Phase::from_bit(start), &d, &mut rng);
        let pulse = if set { PulseSpec::default_set() } else { PulseSpec::default_reset() };
        cell.apply_pulse(&pulse, &d, &mut rng).unwrap();
        prop_assert_eq!(cell.phase, Phase::from_bit(set));
        prop_assert!(cell.resistance_ohms > 0.0);
    }

    #[test]
    fn same_seed_same_samples(seed in any::<u64>(), sigma in 0.0f64..1.0) {
        let d = DeviceParams::default().with_sigma(sigma);
        let mut a = ChaCha8Rng::seed_from_u64(seed);
        let mut b = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..16 {
            let x = sample_resistance(Phase::Amorphous, &d, &mut a);
            let y = sample_resistance(Phase::Amorphous, &d, &mut b);
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn parallel_algebra(rs in prop::collection::vec(1.0f64..1e9, 1..9), extra in 1.0f64..1e9) {
        let r = parallel_resistance(rs.iter().copied());
        let min = rs.iter().copied().fold(f64::INFINITY, f64::min);
        if rs.len() == 1 {
            prop_assert!(((r - rs[0]) / rs[0]).abs() < 1e-15);
        } else {
            prop_assert!(r < min);
        }
        let bigger = parallel_resistance(rs.iter().copied().chain([extra]));
        prop_assert!(bigger <= r);
        let mut rev = rs.clone();
        rev.reverse();
        let r_rev = parallel_resistance(rev);
        prop_assert!(((r - r_rev) / r).abs() < 1e-12);
    }

    #[test]
    fn crossbar_bitline_matches_cells(seed in any::<u64>(), rows in 1usize..6, pattern in bits_strategy(5)) {
        let mut cb = Crossbar::new(rows, 5, DeviceParams::default(), seed).unwrap();
        cb.program_row(0, &pattern).unwrap();
        for col in 0..5 {
            let cell = cb.cell(0, col).unwrap().clone();
            let i = cb.bitline_current(&[0], col, 0.4).unwrap();
            let direct = cell_current(&cell, 0.4);
            prop_assert!(((i - direct) / direct).abs() < 1e-15);
            let all: Vec<usize> = (0..rows).collect();
            let mut rev = all.clone();
            rev.reverse();
            let fwd = cb.bitline_resistance(&all, col).unwrap();
            let bwd = cb.bitline_resistance(&rev, col).unwrap();
            prop_assert!(((fwd - bwd) / fwd).abs() < 1e-12);
            prop_assert!(fwd <= cell.resistance_ohms * (1.0 + 1e-15));
        }
    }

    #[test]
    fn calibration_sandwich(r_low in 10f64..1e5, decades in 0.5f64..6.0, n in 1usize..9) {
        let d = DeviceParams { r_low_ohms: r_low, r_high_ohms: r_low * 10f64.powf(decades), ..Default::default() };
        for op in [LogicOp::Or, LogicOp::And, LogicOp::Threshold(n.div_ceil(2))] {
            let b = class_boundaries(op, n, &d).unwrap();
            let r = sense_amp::calibrate(op, n, &d).unwrap().config.ref_primary_ohms;
            prop_assert!(b.r_one_worst < r && r < b.r_zero_worst);
            let lhs = r / b.r_one_worst;
            let rhs = b.r_zero_worst / r;
            prop_assert!(((lhs - rhs) / rhs).abs() < 1e-9);
        }
    }

    #[test]
    fn config_round_trip(rows in 1usize..64, cols in 1usize..128, sigma in 0.0f64..1.0, seed in any::<u64>(), r_low in 100f64..1e4) {
        let c = Config { rows, cols, sigma_decades: sigma, seed, r_low_ohms: r_low, ..Default::default() };
        let back = Config::from_json(&c.to_json(), "dump").unwrap();
        prop_assert_eq!(back, c);
    }

    #[test]
    fn program_read_round_trip(seed in any::<u64>(), pattern in bits_strategy(32), sigma in prop::sample::select(vec![0.0, 0.1])) {
        let mut cb = Crossbar::new(2, 32, DeviceParams::default().with_sigma(sigma), seed).unwrap();
        let script = Script::parse(&format!("PROG r1 {pattern}\nREAD r1\n")).unwrap();
        let out = run_script(&mut cb, &script).unwrap();
        prop_assert_eq!(out.trace[1].result.as_ref().unwrap(), &pattern);
    }
}

#[test]
fn boundaries_match_brute_force_enumeration() {
    let d = DeviceParams::default();
    for n in 1..=8 {
        let mut ops = vec![("or", LogicOp::Or), ("and", LogicOp::And)];
        let names: Vec<String> = (1..=n).map(|k| format!("thresh:{k}")).collect();
        for (k, name) in names.iter().enumerate() {
            ops.push((name.as_str(), LogicOp::Threshold(k + 1)));
        }
        if n == 1 {
            ops.push(("read", LogicOp::Read));
        }
        for (name, op) in ops {
            let (one, zero) = common::brute_force_boundaries(name, n, d.r_low_ohms, d.r_high_ohms);
            let b = class_boundaries(op, n, &d).unwrap();
            assert!(((b.r_one_worst - one) / one).abs() < 1e-12, "{name} n={n}");
            assert!(((b.r_zero_worst - zero) / zero).abs() < 1e-12, "{name} n={n}");
        }
    }
}

#[test]
fn degenerate_gates_coincide_with_read() {
    let d = DeviceParams::default();
    let read = sense_amp::calibrate(LogicOp::Read, 1, &d).unwrap();
    for op in [LogicOp::Or, LogicOp::And, LogicOp::Threshold(1)] {
        let c = sense_amp::calibrate(op, 1, &d).unwrap();
        assert_eq!(c.windows, read.windows);
        assert_eq!(c.config.ref_primary_ohms, read.config.ref_primary_ohms);
    }
}

#[test]
fn scripts_match_reference_interpreter() {
    for seed in 0..200u64 {
        let rows = 3 + (seed % 6) as usize;
        let cols = 1 + (seed * 13 % 64) as usize;
        let text = common::random_script(seed, rows, cols, 12);
        let script = Script::parse(&text).unwrap();
        let mut cb = Crossbar::new(rows, cols, DeviceParams::default().with_sigma(0.0), seed).unwrap();
        let out = run_script(&mut cb, &script).unwrap();
        let got: Vec<String> = out
            .trace
            .iter()
            .filter(|e| matches!(e.command, pinatubo_sim::ScriptCommand::Read { .. }))
            .map(|e| e.result.as_ref().unwrap().to_string())
            .collect();
        assert_eq!(got, common::interpret(&text, rows, cols), "seed {seed}:\n{text}");

        let writes = script
            .commands
            .iter()
            .filter(|(_, c)| !matches!(c, pinatubo_sim::ScriptCommand::Read { .. }))
            .count() as u64;
        assert_eq!(out.stats.set_pulses + out.stats.reset_pulses, cols as u64 * writes);
    }
}

#[test]
fn multiset_classes_agree_with_full_enumeration_at_zero_sigma() {
    let d = DeviceParams::default().with_sigma(0.0);
    let multi = analysis::truth_table(LogicOp::Or, 3, &d, None, 3, 1, Enumeration::Multiset).unwrap();
    let full = analysis::truth_table(LogicOp::Or, 3, &d, None, 3, 1, Enumeration::Full).unwrap();
    for f in &full {
        let ones = f.combination.chars().filter(|&c| c == '1').count();
        let m = &multi[3 - ones];
        assert!(((f.current_mean_a - m.current_mean_a) / m.current_mean_a).abs() < 1e-12);
        assert_eq!(f.errors, 0);
    }
}
