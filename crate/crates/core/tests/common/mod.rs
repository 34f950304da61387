//! Helpers shared by the integration tests.

#![allow(dead_code)]

use std::collections::{HashSet, VecDeque};
use std::hash::Hash;

use memgoi::corpus::Program;
use memgoi::engine::{Memory, RunConfig};
use memgoi::memory::GateSet;
use memgoi::pars::RewriteSystem;
use memgoi::pcfll::Term;

pub const TOL: f64 = 1e-9;

/// Rounds compared between engines.
pub const HORIZON: usize = 30;

/// The memory and parsed term of a bundled program.
pub fn load(p: &Program) -> (Memory, Term) {
    let mem = Memory::new(p.backend, &GateSet::builtin());
    let t = mem.parse(p.source).unwrap_or_else(|e| panic!("{}: {e}", p.name));
    (mem, t)
}

/// Matched-horizon settings. The divergent program runs 4 rounds of at
/// most 2 000 steps.
pub fn config_for(p: &Program) -> RunConfig {
    if p.name == "omega" {
        RunConfig { horizon: 4, fuel: 2_000, ..RunConfig::default() }
    } else {
        RunConfig { horizon: HORIZON, ..RunConfig::default() }
    }
}

/// Breadth-first exploration of every element reachable through any
/// redex, visiting at most `cap` distinct elements. Returns whether the
/// whole reachable set was covered.
pub fn explore<S>(sys: &S, init: S::Element, cap: usize, mut visit: impl FnMut(&S::Element, &[S::Redex])) -> bool
where
    S: RewriteSystem,
    S::Element: Hash + Eq,
{
    let mut seen: HashSet<S::Element> = HashSet::new();
    let mut queue = VecDeque::from([init]);
    while let Some(e) = queue.pop_front() {
        if seen.contains(&e) {
            continue;
        }
        if seen.len() >= cap {
            return false;
        }
        let rs = sys.redexes(&e);
        visit(&e, &rs);
        for r in &rs {
            for (next, _) in sys.apply(&e, r) {
                if !seen.contains(&next) {
                    queue.push_back(next);
                }
            }
        }
        seen.insert(e);
    }
    true
}
