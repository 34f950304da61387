//! Invariants of program nets and machine states along random traces over
//! the bundled programs.

mod common;

use std::collections::BTreeSet;

use memgoi::corpus::corpus;
use memgoi::engine::{initial_machine, initial_net, Memory};
use memgoi::memory::MemoryStructure;
use memgoi::msiam::{Dir, Machine, MachineState, Stack, Status};
use memgoi::pars::RewriteSystem;
use memgoi::pcfll::Term;
use memgoi::program_nets::{Input, NetSystem, ProgramNet};
use memgoi::smeyll_nets::{check_correct, NodeKind, Side};
use proptest::prelude::*;

use common::load;

/// Follows `choices`: each picks a redex, then a branch of its outcome.
/// Returns the number of steps taken.
fn walk<S: RewriteSystem>(
    sys: &S,
    init: S::Element,
    choices: &[(usize, usize)],
    mut check: impl FnMut(&S::Element, &S::Element) -> Result<(), String>,
) -> Result<usize, String> {
    let mut cur = init;
    let mut steps = 0;
    for (r, b) in choices {
        let rs = sys.redexes(&cur);
        if rs.is_empty() {
            break;
        }
        let out: Vec<_> = sys.apply(&cur, &rs[r % rs.len()]).into_iter().collect();
        let (next, _) = out[b % out.len()].clone();
        check(&cur, &next)?;
        cur = next;
        steps += 1;
    }
    Ok(steps)
}

fn net_invariants<M: Clone>(pn: &ProgramNet<M>) -> Result<(), String> {
    check_correct(&pn.net).map_err(|e| format!("correctness: {e}"))?;
    let addrs: BTreeSet<_> = pn.ind.values().collect();
    if addrs.len() != pn.ind.len() {
        return Err(format!("ind is not injective: {:?}", pn.ind));
    }
    for k in pn.ind.keys() {
        if let Input::One(n) = k {
            if pn.net.try_node(*n).map(|x| &x.kind) != Some(&NodeKind::One) || !pn.net.is_surface(*n) {
                return Err(format!("ind binds {k:?}, not a surface one node"));
            }
        }
    }
    Ok(())
}

fn net_trace<S: MemoryStructure>(ms: &S, t: &Term, choices: &[(usize, usize)]) -> Result<usize, String> {
    let sys = NetSystem::new(ms);
    let init = initial_net(ms, t).map_err(|e| e.to_string())?;
    net_invariants(&init)?;
    walk(&sys, init, choices, |_, next| net_invariants(next))
}

fn machine_invariants<S: MemoryStructure>(m: &Machine<'_, S>, st: &MachineState<S::Mem>) -> Result<(), String> {
    let at: BTreeSet<_> = st.tokens.values().collect();
    if at.len() != st.tokens.len() {
        return Err("two tokens share a position".into());
    }
    let net = m.net();
    for b in net.node_ids().filter(|b| *net.kind(*b) == NodeKind::BotBox) {
        let side = |s| {
            let (bot, _) = net.bot_side(b, s);
            st.tokens
                .values()
                .filter(|p| p.edge == bot && p.fstack == Stack::epsilon())
                .map(|p| p.bstack.clone())
                .collect::<BTreeSet<_>>()
        };
        if let Some(t) = side(Side::Left).intersection(&side(Side::Right)).next() {
            return Err(format!("both sides of box {b} opened in copy {t:?}"));
        }
    }
    if m.classify(st) == Status::Final && !m.enabled(st).is_empty() {
        return Err("final state with enabled transitions".into());
    }
    Ok(())
}

fn machine_trace<S: MemoryStructure>(ms: &S, t: &Term, choices: &[(usize, usize)]) -> Result<usize, String> {
    let (m, init) = initial_machine(ms, t).map_err(|e| e.to_string())?;
    machine_invariants(&m, &init)?;
    walk(&m, init, choices, |cur, next| {
        machine_invariants(&m, next)?;
        for (o, p) in &cur.tokens {
            if m.direction(p) == Some(Dir::Stable) && next.tokens.get(o) != Some(p) {
                return Err(format!("stable token {o} left {p}"));
            }
        }
        Ok(())
    })
}

fn programs() -> Vec<(String, Memory, Term)> {
    corpus()
        .iter()
        .map(|p| {
            let (mem, t) = load(p);
            (p.name.to_string(), mem, t)
        })
        .collect()
}

#[test]
fn recursive_programs_walk_the_whole_trace() {
    let (mem, t) = load(&memgoi::corpus::get("omega").unwrap());
    let Memory::Int(ms) = &mem else { panic!("omega runs on registers") };
    let choices: Vec<(usize, usize)> = (0..300).map(|k| (k * 7, k)).collect();
    assert_eq!(net_trace(ms, &t, &choices[..120]), Ok(120));
    assert_eq!(machine_trace(ms, &t, &choices), Ok(300));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn program_nets_stay_correct(k in 0usize..12, choices in prop::collection::vec((any::<usize>(), any::<usize>()), 0..120)) {
        let all = programs();
        let (name, mem, t) = &all[k % all.len()];
        let r = match mem {
            Memory::Int(ms) => net_trace(ms, t, &choices),
            Memory::Prob(ms) => net_trace(ms, t, &choices),
            Memory::Quantum(ms) => net_trace(ms, t, &choices),
        };
        prop_assert!(r.is_ok(), "{}: {:?}", name, r);
    }

    #[test]
    fn machine_states_keep_their_invariants(k in 0usize..12, choices in prop::collection::vec((any::<usize>(), any::<usize>()), 0..300)) {
        let all = programs();
        let (name, mem, t) = &all[k % all.len()];
        let r = match mem {
            Memory::Int(ms) => machine_trace(ms, t, &choices),
            Memory::Prob(ms) => machine_trace(ms, t, &choices),
            Memory::Quantum(ms) => machine_trace(ms, t, &choices),
        };
        prop_assert!(r.is_ok(), "{}: {:?}", name, r);
    }
}
