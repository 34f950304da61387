//! End-to-end acceptance checks. Prints one PASS or FAIL line per
//! criterion and exits with a nonzero status if any fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use memgoi::corpus::{corpus, get};
use memgoi::engine::{initial_machine, initial_net, Engine, Memory, RunConfig};
use memgoi::memory::laws::run_suite;
use memgoi::memory::{IntMemory, IntRegisters, MemoryStructure, ProbRegisters, QuantumMemory, QuantumRegisters};
use memgoi::msiam::Status;
use memgoi::pars::{converge, Distribution, Fused, Policy, RewriteSystem};
use memgoi::pcfll::PcfSystem;
use memgoi::program_nets::NetSystem;
use num_complex::Complex64;

use common::{config_for, explore, load, TOL};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn coin_recursion() -> Check {
    let p = get("coin").unwrap();
    let (mem, t) = load(&p);
    let mut slowest = Duration::ZERO;
    for e in Engine::ALL {
        let start = Instant::now();
        let ten = mem.run(e, &t, &RunConfig { horizon: 10, ..RunConfig::default() }).map_err(|x| x.to_string())?;
        ensure((ten.probability - 0.9990234375).abs() <= TOL, || {
            format!("{e}: p after 10 rounds = {}", ten.probability)
        })?;
        for k in 1..=12 {
            let o = mem.run(e, &t, &RunConfig { horizon: k, ..RunConfig::default() }).map_err(|x| x.to_string())?;
            let want = 1.0 - 0.5f64.powi(k as i32);
            ensure((o.probability - want).abs() <= TOL, || format!("{e}: p after {k} rounds = {}", o.probability))?;
        }
        let long = mem.run(e, &t, &RunConfig { horizon: 200, ..RunConfig::default() }).map_err(|x| x.to_string())?;
        ensure(long.probability >= 1.0 - TOL, || format!("{e}: p at horizon 200 = {}", long.probability))?;
        let took = start.elapsed();
        ensure(took < Duration::from_secs(10), || format!("{e} took {took:?}"))?;
        slowest = slowest.max(took);
    }
    Ok(format!("p(10) = 0.9990234375 and p(200) >= 1 - 1e-9 on all engines, slowest {slowest:.2?}"))
}

fn bell_state_ok(m: &QuantumMemory) -> Result<(), String> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let want = [h, 0.0, 0.0, h];
    ensure(m.bound().len() == 2, || format!("expected two qubits, got {:?}", m.bound()))?;
    for (a, w) in m.amplitudes().iter().zip(want) {
        ensure((a - Complex64::new(w, 0.0)).norm() <= TOL, || format!("amplitudes {:?}", m.amplitudes()))?;
    }
    Ok(())
}

fn bell() -> Check {
    let p = get("bell").unwrap();
    let (mem, t) = load(&p);
    for e in Engine::ALL {
        let o = mem.run(e, &t, &RunConfig::default()).map_err(|x| x.to_string())?;
        ensure((o.probability - 1.0).abs() <= TOL, || format!("{e}: p = {}", o.probability))?;
        ensure(o.readings.len() == 2, || format!("{e}: {:?}", o.readings))?;
        for r in ["00", "11"] {
            ensure((o.reading(r) - 0.5).abs() <= TOL, || format!("{e}: {:?}", o.readings))?;
        }
    }

    let ms = QuantumRegisters::default();
    let step = |m: Result<QuantumMemory, _>, addrs: &[usize], g: &str| m.and_then(|m| ms.update(addrs, g, &m));
    let prepared = step(step(Ok(ms.initial()), &[1], "H"), &[0, 1], "CNOT").map_err(|x| x.to_string())?;
    bell_state_ok(&prepared)?;

    let Memory::Quantum(qs) = &mem else { return Err("bell does not run on qubits".into()) };
    let prep = qs.labels().iter().map(|l| l.name.clone()).collect::<Vec<_>>();
    let names: Vec<&str> = prep.iter().map(String::as_str).collect();
    let pair = memgoi::pcfll::parse_term("CNOT <new, H new>", &names).map_err(|x| x.to_string())?;
    let pcf = PcfSystem::new(qs);
    bell_state_ok(&pcf.settle(&pcf.program(pair.clone()), Policy::Leftmost, 10_000).element.memory)?;
    let nets = NetSystem::new(qs);
    bell_state_ok(&nets.settle(&initial_net(qs, &pair).unwrap(), Policy::Leftmost, 10_000).element.memory)?;
    let (machine, init) = initial_machine(qs, &pair).unwrap();
    bell_state_ok(&machine.settle(&init, Policy::Leftmost, 10_000).element.memory)?;
    Ok("{00: 0.5, 11: 0.5} on all engines; prepared state (√2/2)(|00⟩+|11⟩)".into())
}

fn commutation() -> Check {
    let start = Instant::now();
    let reports = [
        ("int", run_suite(&IntRegisters, 1000, 11, TOL)),
        ("prob", run_suite(&ProbRegisters, 1000, 12, TOL)),
        ("quantum", run_suite(&QuantumRegisters::default(), 1000, 13, TOL)),
    ];
    for (name, r) in &reports {
        ensure(r.passed(), || format!("{name}: {:?}", &r.failures[..r.failures.len().min(3)]))?;
        ensure(r.test_test == 1000 && r.test_update == 1000 && r.update_update == 1000, || format!("{name}: {r:?}"))?;
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(30), || format!("took {took:?}"))?;
    Ok(format!("3 x 1000 instances per backend in {took:.2?}"))
}

fn diamond() -> Check {
    let programs = corpus();
    ensure(programs.len() >= 10, || "corpus too small".into())?;
    let mut compared = 0;
    for p in &programs {
        let (mem, t) = load(p);
        for e in [Engine::Net, Engine::Msiam] {
            let r = mem.check_diamond(e, &t, 25, 7).map_err(|x| x.to_string())?;
            ensure(r.passed, || format!("{} on {e}: {:?}", p.name, r.failure))?;
            compared += r.compared_steps;
        }
    }
    Ok(format!("{} programs, {compared} compared steps at depth 25", programs.len()))
}

fn adequacy() -> Check {
    let start = Instant::now();
    let programs = corpus();
    for p in &programs {
        let (mem, t) = load(p);
        let cfg = config_for(p);
        let runs: Vec<_> =
            Engine::ALL.iter().map(|e| mem.run(*e, &t, &cfg)).collect::<Result<_, _>>().map_err(|x| x.to_string())?;
        let [pcf, net, msiam] = &runs[..] else { unreachable!() };
        ensure((pcf.probability - net.probability).abs() <= TOL, || {
            format!("{}: pcf {} vs net {}", p.name, pcf.probability, net.probability)
        })?;
        ensure((net.probability - msiam.probability).abs() <= TOL, || {
            format!("{}: net {} vs msiam {}", p.name, net.probability, msiam.probability)
        })?;
        for other in [net, msiam] {
            ensure(pcf.readings.len() == other.readings.len(), || {
                format!("{}: {:?} vs {:?}", p.name, pcf.readings, other.readings)
            })?;
            for (r, q) in &pcf.readings {
                ensure((other.reading(r) - q).abs() <= TOL, || {
                    format!("{}: {:?} vs {:?}", p.name, pcf.readings, other.readings)
                })?;
            }
        }
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(120), || format!("took {took:?}"))?;
    Ok(format!("{} programs agree on pcf, net and msiam in {took:.2?}", programs.len()))
}

const EXPLORE_CAP: usize = 3_000;

/// Explores the reachable program nets and machine states of `t`.
/// Returns the number of states visited and of explorations that covered
/// the whole reachable set.
fn deadlock_free_with<S: MemoryStructure>(
    ms: &S,
    name: &str,
    t: &memgoi::pcfll::Term,
    cfg: &RunConfig,
) -> Result<(usize, usize), String> {
    let mut visited = 0;
    let mut complete = 0;
    let mut bad = Vec::new();
    let nets = NetSystem::new(ms);
    complete += explore(&nets, initial_net(ms, t).unwrap(), EXPLORE_CAP, |pn, rs| {
        visited += 1;
        if rs.is_empty() && nets.is_deadlocked(pn) {
            bad.push(format!("{name}: stuck program net"));
        }
    }) as usize;
    let (machine, init) = initial_machine(ms, t).unwrap();
    complete += explore(&machine, init, EXPLORE_CAP, |st, rs| {
        visited += 1;
        if rs.is_empty() && machine.classify(st) != Status::Final {
            bad.push(format!("{name}: terminal machine state is not final"));
        }
    }) as usize;
    for seed in 0..4 {
        let policy = Policy::Seeded(seed);
        let fused = Fused::new(&nets, policy, cfg.fuel);
        let c = converge(&Distribution::dirac(initial_net(ms, t).unwrap()), &fused, policy, cfg.horizon, TOL);
        for (pn, _) in c.distribution.iter() {
            visited += 1;
            if nets.is_terminal(pn) && nets.is_deadlocked(pn) {
                bad.push(format!("{name}: stuck program net under seed {seed}"));
            }
        }
        let fused = Fused::new(&machine, policy, cfg.fuel);
        let c = converge(
            &Distribution::dirac(machine.initial_state(&initial_net(ms, t).unwrap())),
            &fused,
            policy,
            cfg.horizon,
            TOL,
        );
        for (st, _) in c.distribution.iter() {
            visited += 1;
            if machine.is_terminal(st) && machine.classify(st) != Status::Final {
                bad.push(format!("{name}: terminal machine state is not final under seed {seed}"));
            }
        }
    }
    ensure(bad.is_empty(), || bad.join("; "))?;
    Ok((visited, complete))
}

fn deadlock_freeness() -> Check {
    let (mut visited, mut complete, mut total) = (0, 0, 0);
    for p in corpus() {
        let (mem, t) = load(&p);
        let cfg = config_for(&p);
        let (v, c) = match &mem {
            Memory::Int(ms) => deadlock_free_with(ms, p.name, &t, &cfg)?,
            Memory::Prob(ms) => deadlock_free_with(ms, p.name, &t, &cfg)?,
            Memory::Quantum(ms) => deadlock_free_with(ms, p.name, &t, &cfg)?,
        };
        visited += v;
        complete += c;
        total += 2;
    }
    Ok(format!(
        "{visited} reachable states, 0 violations, {complete}/{total} explorations exhaustive (cap {EXPLORE_CAP})"
    ))
}

fn register_trace() -> Check {
    let ms = IntRegisters;
    let m0 = ms.initial();
    let m1 = ms.update(&[0], "S", &m0).map_err(|x| x.to_string())?;
    ensure(m1 == IntMemory::from_values(&[1, 0, 0, 0]), || format!("m1 = {m1:?}"))?;
    let m2 = ms.update(&[1], "S", &m1).map_err(|x| x.to_string())?;
    ensure(m2 == IntMemory::from_values(&[1, 1, 0, 0]), || format!("m2 = {m2:?}"))?;
    let m3 = ms.update(&[0], "P", &m2).map_err(|x| x.to_string())?;
    ensure(m3 == IntMemory::from_values(&[0, 1, 0, 0]), || format!("m3 = {m3:?}"))?;
    let d = ms.test(1, &m3);
    let outcome: Vec<_> = d.iter().map(|((b, m), p)| (*b, m.clone(), p)).collect();
    ensure(outcome == vec![(false, m3.clone(), 1.0)], || format!("test = {outcome:?}"))?;
    Ok("m1 = (1,0,..), m2 = (1,1,..), m3 = (0,1,..), test(1, m3) = false".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("quantum coin recursion", coin_recursion),
        ("bell experiment", bell),
        ("memory commutation", commutation),
        ("diamond", diamond),
        ("three-way adequacy", adequacy),
        ("deadlock-freeness", deadlock_freeness),
        ("register trace", register_trace),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {why}", k + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
