//! The evaluators side by side: the abstract machine over closures, program
//! net reduction and the multi-token machine, each run as a rewrite system
//! grouped in rounds of one memory test.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::memory::{Backend, GateSet, IntRegisters, MemoryStructure, OpLabel, ProbRegisters, QuantumRegisters};
use crate::msiam::{Machine, MachineState};
use crate::pars::{check_diamond, converge, DiamondReport, Distribution, Fused, Policy, RewriteSystem};
use crate::pcfll::{elaborate, parse_term, translate, ParseError, PcfSystem, Term, TranslateError, Type, TypeError};
use crate::program_nets::{NetSystem, ProgramNet};
use crate::smeyll_nets::Net;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Engine {
    Pcf,
    Net,
    Msiam,
}

impl Engine {
    pub const ALL: [Engine; 3] = [Engine::Pcf, Engine::Net, Engine::Msiam];
}

impl FromStr for Engine {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "pcf" => Ok(Engine::Pcf),
            "net" => Ok(Engine::Net),
            "msiam" => Ok(Engine::Msiam),
            other => Err(format!("unknown engine `{other}` (expected pcf, net or msiam)")),
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Pcf => "pcf",
            Engine::Net => "net",
            Engine::Msiam => "msiam",
        })
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("type error: {0}")]
    Type(#[from] TypeError),
    #[error("translation error: {0}")]
    Translate(#[from] TranslateError),
}

/// Evaluation parameters.
#[derive(Clone, Copy, Debug)]
pub struct RunConfig {
    /// Maximum number of rounds. A round performs at most one memory test
    /// along each branch.
    pub horizon: usize,
    /// The run stops early once the non-terminal mass is below `tol`.
    pub tol: f64,
    /// Maximum number of deterministic steps within a round.
    pub fuel: usize,
    pub policy: Policy,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { horizon: 200, tol: 1e-9, fuel: 10_000, policy: Policy::Leftmost }
    }
}

/// Result of one engine run.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub engine: Engine,
    /// Terminal mass when the run stopped.
    pub probability: f64,
    pub reached_horizon: bool,
    pub rounds: usize,
    /// Terminal mass grouped by the classical reading of the result, by
    /// descending mass then reading.
    pub readings: Vec<(String, f64)>,
}

impl Outcome {
    pub fn reading(&self, r: &str) -> f64 {
        self.readings.iter().find(|(x, _)| x == r).map_or(0.0, |(_, p)| *p)
    }
}

/// The memory structure of a backend. Quantum memories use `gates`.
pub enum Memory {
    Int(IntRegisters),
    Prob(ProbRegisters),
    Quantum(QuantumRegisters),
}

impl Memory {
    pub fn new(backend: Backend, gates: &GateSet) -> Memory {
        match backend {
            Backend::Int => Memory::Int(IntRegisters),
            Backend::Prob => Memory::Prob(ProbRegisters),
            Backend::Quantum => Memory::Quantum(QuantumRegisters::new(gates.clone())),
        }
    }

    pub fn labels(&self) -> Vec<OpLabel> {
        match self {
            Memory::Int(m) => m.labels(),
            Memory::Prob(m) => m.labels(),
            Memory::Quantum(m) => m.labels(),
        }
    }

    /// Parses `src`, resolving the backend's operation names as constants.
    pub fn parse(&self, src: &str) -> Result<Term, ParseError> {
        let labels = self.labels();
        let names: Vec<&str> = labels.iter().map(|l| l.name.as_str()).collect();
        parse_term(src, &names)
    }

    /// The type of a closed program.
    pub fn typecheck(&self, t: &Term) -> Result<Type, TypeError> {
        Ok(elaborate(t, &[], &self.labels())?.ty)
    }

    /// The net of a closed program.
    pub fn net(&self, t: &Term) -> Result<Net, EngineError> {
        let typed = elaborate(t, &[], &self.labels())?;
        Ok(translate(&typed, &[])?.0)
    }

    pub fn run(&self, engine: Engine, t: &Term, cfg: &RunConfig) -> Result<Outcome, EngineError> {
        match self {
            Memory::Int(m) => run_with(m, engine, t, cfg),
            Memory::Prob(m) => run_with(m, engine, t, cfg),
            Memory::Quantum(m) => run_with(m, engine, t, cfg),
        }
    }

    /// The first `max_steps` transitions of the multi-token machine on `t`,
    /// one line each.
    pub fn trace(&self, t: &Term, max_steps: usize) -> Result<Vec<String>, EngineError> {
        fn go<S: MemoryStructure>(ms: &S, t: &Term, max_steps: usize) -> Result<Vec<String>, EngineError> {
            let (machine, init) = initial_machine(ms, t)?;
            Ok(machine.trace(&init, max_steps))
        }
        match self {
            Memory::Int(m) => go(m, t, max_steps),
            Memory::Prob(m) => go(m, t, max_steps),
            Memory::Quantum(m) => go(m, t, max_steps),
        }
    }

    /// Bounded diamond check of the raw (unfused) system of `engine`,
    /// comparing the leftmost policy with a seeded pseudorandom one.
    pub fn check_diamond(
        &self,
        engine: Engine,
        t: &Term,
        depth: usize,
        seed: u64,
    ) -> Result<DiamondReport, EngineError> {
        match self {
            Memory::Int(m) => diamond_with(m, engine, t, depth, seed),
            Memory::Prob(m) => diamond_with(m, engine, t, depth, seed),
            Memory::Quantum(m) => diamond_with(m, engine, t, depth, seed),
        }
    }
}

/// Joins leaf readings: juxtaposed when all are single characters,
/// comma-separated otherwise.
pub fn join_leaves(leaves: &[String]) -> String {
    if leaves.iter().all(|l| l.chars().count() == 1) {
        leaves.concat()
    } else {
        leaves.join(",")
    }
}

fn collect<R: RewriteSystem>(
    engine: Engine,
    sys: &R,
    init: R::Element,
    cfg: &RunConfig,
    read: impl Fn(&R::Element) -> String,
) -> Outcome {
    let fused = Fused::new(sys, cfg.policy, cfg.fuel);
    let c = converge(&Distribution::dirac(init), &fused, cfg.policy, cfg.horizon, cfg.tol);
    let mut by: BTreeMap<String, f64> = BTreeMap::new();
    for (e, p) in c.distribution.iter() {
        if sys.is_terminal(e) {
            *by.entry(read(e)).or_default() += p;
        }
    }
    let mut readings: Vec<(String, f64)> = by.into_iter().collect();
    readings.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Outcome { engine, probability: c.probability, reached_horizon: c.reached_horizon, rounds: c.steps, readings }
}

/// The program net of a closed program with the initial memory.
pub fn initial_net<S: MemoryStructure>(ms: &S, t: &Term) -> Result<ProgramNet<S::Mem>, EngineError> {
    let typed = elaborate(t, &[], &ms.labels())?;
    let (net, _) = translate(&typed, &[])?;
    let sys = NetSystem::new(ms);
    Ok(sys.canonicalize(&sys.program(net)))
}

/// The initial machine state of a closed program.
pub fn initial_machine<'a, S: MemoryStructure>(
    ms: &'a S,
    t: &Term,
) -> Result<(Machine<'a, S>, MachineState<S::Mem>), EngineError> {
    let pn = initial_net(ms, t)?;
    let machine = Machine::new(ms, pn.net.clone());
    let st = machine.initial_state(&pn);
    Ok((machine, st))
}

/// Runs `engine` on the closed program `t`.
pub fn run_with<S: MemoryStructure>(ms: &S, engine: Engine, t: &Term, cfg: &RunConfig) -> Result<Outcome, EngineError> {
    elaborate(t, &[], &ms.labels())?;
    Ok(match engine {
        Engine::Pcf => {
            let sys = PcfSystem::new(ms);
            let init = sys.program(t.clone());
            collect(engine, &sys, init, cfg, |e| join_leaves(&sys.leaves(e)))
        }
        Engine::Net => {
            let sys = NetSystem::new(ms);
            let init = initial_net(ms, t)?;
            collect(engine, &sys, init, cfg, |e| join_leaves(&sys.leaves(e)))
        }
        Engine::Msiam => {
            let (machine, init) = initial_machine(ms, t)?;
            collect(engine, &machine, init, cfg, |e| join_leaves(&machine.leaves(e)))
        }
    })
}

fn diamond_with<S: MemoryStructure>(
    ms: &S,
    engine: Engine,
    t: &Term,
    depth: usize,
    seed: u64,
) -> Result<DiamondReport, EngineError> {
    let policies = (Policy::Leftmost, Policy::Seeded(seed));
    Ok(match engine {
        Engine::Pcf => {
            elaborate(t, &[], &ms.labels())?;
            let sys = PcfSystem::new(ms);
            check_diamond(&sys, &[sys.program(t.clone())], depth, policies)
        }
        Engine::Net => {
            let sys = NetSystem::new(ms);
            check_diamond(&sys, &[initial_net(ms, t)?], depth, policies)
        }
        Engine::Msiam => {
            let (machine, init) = initial_machine(ms, t)?;
            check_diamond(&machine, &[init], depth, policies)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn engine_names_round_trip() {
        for e in Engine::ALL {
            assert_eq!(e.to_string().parse::<Engine>().unwrap(), e);
        }
        assert!("all".parse::<Engine>().is_err());
    }

    #[test]
    fn leaves_join() {
        assert_eq!(join_leaves(&["0".into(), "1".into()]), "01");
        assert_eq!(join_leaves(&["12".into(), "1".into()]), "12,1");
        assert_eq!(join_leaves(&[]), "");
    }

    #[test]
    fn trace_ends_in_a_final_state() {
        let mem = Memory::new(Backend::Int, &GateSet::builtin());
        let t = mem.parse("S new").unwrap();
        let lines = mem.trace(&t, 100).unwrap();
        assert!(lines.last().unwrap().contains("Final"), "{lines:?}");
        assert_eq!(mem.trace(&t, 1).unwrap().len(), 1);
    }

    #[test]
    fn identity_on_new_reads_zero_everywhere() {
        let mem = Memory::new(Backend::Int, &GateSet::builtin());
        let t = mem.parse("(\\x. x) new").unwrap();
        for e in Engine::ALL {
            let o = mem.run(e, &t, &RunConfig::default()).unwrap();
            assert!((o.probability - 1.0).abs() < 1e-12, "{e}: {o:?}");
            assert_eq!(o.readings, vec![("0".to_string(), 1.0)], "{e}");
        }
    }
}
