//! Expected results of the bundled programs on every engine.

mod common;

use memgoi::corpus::get;
use memgoi::engine::{Engine, RunConfig};

use common::{config_for, load, TOL};

fn expect(name: &str, cfg: RunConfig, probability: f64, readings: &[(&str, f64)]) {
    let p = get(name).unwrap();
    let (mem, t) = load(&p);
    for e in Engine::ALL {
        let o = mem.run(e, &t, &cfg).unwrap();
        assert!((o.probability - probability).abs() <= TOL, "{name} on {e}: {}", o.probability);
        assert_eq!(o.readings.len(), readings.len(), "{name} on {e}: {:?}", o.readings);
        for (r, q) in readings {
            assert!((o.reading(r) - q).abs() <= TOL, "{name} on {e}: {:?}", o.readings);
        }
    }
}

fn rounds(horizon: usize) -> RunConfig {
    RunConfig { horizon, ..RunConfig::default() }
}

#[test]
fn coin_terminates_with_geometric_mass() {
    for k in [1, 2, 5, 10] {
        let p = 1.0 - 0.5f64.powi(k as i32);
        expect("coin", rounds(k), p, &[("0", p)]);
        expect("coin_prob", rounds(k), p, &[("0", p)]);
    }
}

#[test]
fn bell_pair_reads_equal_bits() {
    expect("bell", rounds(10), 1.0, &[("00", 0.5), ("11", 0.5)]);
}

#[test]
fn unmeasured_qubits_read_as_unknown() {
    expect("entangled", rounds(10), 1.0, &[("??", 1.0)]);
}

#[test]
fn promoted_functions_are_reused() {
    expect("dup", rounds(10), 1.0, &[("1", 1.0)]);
    expect("box_comm", rounds(10), 1.0, &[("0", 1.0)]);
    expect("thrice", rounds(10), 1.0, &[("3", 1.0)]);
}

#[test]
fn register_programs() {
    expect("countdown", rounds(10), 1.0, &[("0", 1.0)]);
    expect("max", rounds(10), 1.0, &[("3", 1.0)]);
    expect("twice_rec", rounds(10), 1.0, &[("0", 1.0)]);
}

#[test]
fn classical_coins_keep_unread_values() {
    expect("coins_pair", rounds(10), 1.0, &[("(0.5)", 0.75), ("0", 0.25)]);
}

#[test]
fn divergence_has_no_terminal_mass() {
    let p = get("omega").unwrap();
    expect("omega", config_for(&p), 0.0, &[]);
}
