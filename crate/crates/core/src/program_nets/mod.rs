//! Program nets: a net together with a partial injective map from its
//! inputs to memory addresses and a memory, rewritten by Link, Update, Test
//! and the memory-free net rules.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::memory::{canonical_renaming, rename_addr, Address, MemoryError, MemoryStructure};
use crate::pars::{Distribution, Policy, RewriteSystem, Settled, PRUNE_BELOW};
use crate::smeyll_nets::{
    find_redexes, fire, is_redex, Branch, EdgeId, Fired, Formula, Net, NodeId, NodeKind, Place, Redex, RedexKind,
    ReduceError,
};

/// An input of a net: the conclusion of a surface `one` node, or a `⊥`
/// conclusion of the net given by its index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Input {
    One(NodeId),
    Conclusion(usize),
}

/// A raw program net. Use [`NetSystem::canonicalize`] to pick the
/// representative of its class under address permutations.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ProgramNet<M> {
    pub net: Net,
    pub ind: BTreeMap<Input, Address>,
    pub memory: M,
}

impl<M> ProgramNet<M> {
    /// A program net with no address bound.
    pub fn new(net: Net, memory: M) -> Self {
        ProgramNet { net, ind: BTreeMap::new(), memory }
    }

    /// Whether the surface `one` node `n` is bound to an address.
    pub fn is_active(&self, n: NodeId) -> bool {
        self.ind.contains_key(&Input::One(n))
    }
}

/// A program-net redex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PnRedex {
    /// Binds an inactive surface `one` node to a fresh address.
    Link(NodeId),
    /// Fires a sync node and applies its operation to the memory.
    Update(NodeId),
    /// Tests the address of an active `one` node cut against a ⊥-box.
    Test(NodeId),
    /// Any other net rule.
    Net(Redex),
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum PnError {
    #[error("{0:?} is not a redex of this program net")]
    NotARedex(PnRedex),
    #[error("one node n{0} has no address")]
    Inactive(NodeId),
    #[error(transparent)]
    Net(#[from] ReduceError),
    #[error(transparent)]
    Memory(#[from] MemoryError),
}

/// The rewrite system of program nets over a memory structure.
pub struct NetSystem<'a, S: MemoryStructure> {
    pub ms: &'a S,
}

impl<'a, S: MemoryStructure> NetSystem<'a, S> {
    pub fn new(ms: &'a S) -> Self {
        NetSystem { ms }
    }

    /// A program net for `net` with the initial memory and no binding.
    pub fn program(&self, net: Net) -> ProgramNet<S::Mem> {
        ProgramNet::new(net, self.ms.initial())
    }

    /// All redexes, in a deterministic order: every inactive surface `one`
    /// node gives a Link; tests and updates need active `one` nodes.
    pub fn enumerate(&self, pn: &ProgramNet<S::Mem>) -> Vec<PnRedex> {
        let mut out = BTreeSet::new();
        for n in pn.net.surface_nodes() {
            if *pn.net.kind(n) == NodeKind::One && !pn.is_active(n) {
                out.insert(PnRedex::Link(n));
            }
        }
        for r in find_redexes(&pn.net) {
            match r.kind {
                RedexKind::Test => {
                    if pn.is_active(tested_one(&pn.net, r.node)) {
                        out.insert(PnRedex::Test(r.node));
                    }
                }
                RedexKind::Sync => {
                    let ones = sync_ones(&pn.net, r.node);
                    if ones.iter().all(|o| pn.is_active(*o)) {
                        out.insert(PnRedex::Update(r.node));
                    }
                }
                _ => {
                    out.insert(PnRedex::Net(r));
                }
            }
        }
        out.into_iter().collect()
    }

    /// Fires a redex that does not split mass, in place.
    fn fire_det(&self, pn: &mut ProgramNet<S::Mem>, r: &PnRedex) -> Result<(), PnError> {
        match r {
            PnRedex::Link(n) => {
                let ok = pn.net.try_node(*n).is_some_and(|x| x.kind == NodeKind::One && x.place == Place::Surface);
                if !ok || pn.is_active(*n) {
                    return Err(PnError::NotARedex(*r));
                }
                let used: BTreeSet<Address> = pn.ind.values().copied().collect();
                let a = self.ms.fresh(&pn.memory, &used);
                pn.ind.insert(Input::One(*n), a);
            }
            PnRedex::Update(s) => {
                let redex = Redex { kind: RedexKind::Sync, node: *s };
                let ones = if is_redex(&pn.net, &redex) {
                    sync_ones(&pn.net, *s)
                } else {
                    return Err(PnError::NotARedex(*r));
                };
                let addrs = ones
                    .iter()
                    .map(|o| pn.ind.get(&Input::One(*o)).copied().ok_or(PnError::Inactive(*o)))
                    .collect::<Result<Vec<_>, _>>()?;
                let Fired::Synced(label, _) = fire(&mut pn.net, &redex, None)? else {
                    unreachable!("a sync redex reports its ones")
                };
                pn.memory = self.ms.update(&addrs, &label, &pn.memory)?;
            }
            PnRedex::Net(redex) => {
                fire(&mut pn.net, redex, None)?;
            }
            PnRedex::Test(_) => return Err(PnError::NotARedex(*r)),
        }
        Ok(())
    }

    /// One raw step. Test redexes give up to two branches: the memory test
    /// answering false keeps the left content, true keeps the right one.
    pub fn step(&self, pn: &ProgramNet<S::Mem>, r: &PnRedex) -> Result<Distribution<ProgramNet<S::Mem>>, PnError> {
        if let PnRedex::Test(c) = r {
            let redex = Redex { kind: RedexKind::Test, node: *c };
            if !is_redex(&pn.net, &redex) {
                return Err(PnError::NotARedex(*r));
            }
            let one = tested_one(&pn.net, *c);
            let a = *pn.ind.get(&Input::One(one)).ok_or(PnError::Inactive(one))?;
            let mut ind = pn.ind.clone();
            ind.remove(&Input::One(one));
            let mut out = Distribution::empty();
            for ((answer, m), p) in self.ms.test(a, &pn.memory) {
                let mut net = pn.net.clone();
                fire(&mut net, &redex, Some(if answer { Branch::Right } else { Branch::Left }))?;
                out.add(ProgramNet { net, ind: ind.clone(), memory: m }, p);
            }
            return Ok(out);
        }
        let mut next = pn.clone();
        self.fire_det(&mut next, r)?;
        Ok(Distribution::dirac(next))
    }

    /// The representative of `pn` with a compacted net numbered by a
    /// traversal from its conclusions, and addresses renumbered in the order
    /// of the inputs they are bound to.
    pub fn canonicalize(&self, pn: &ProgramNet<S::Mem>) -> ProgramNet<S::Mem> {
        let (net, map) = pn.net.canonical();
        let ind: BTreeMap<Input, Address> = pn
            .ind
            .iter()
            .map(|(k, a)| {
                let k = match k {
                    Input::One(n) => Input::One(map[n]),
                    c => *c,
                };
                (k, *a)
            })
            .collect();
        let referenced: Vec<Address> = ind.values().copied().collect();
        let sigma = canonical_renaming(self.ms, &pn.memory, &referenced);
        ProgramNet {
            net,
            ind: ind.into_iter().map(|(k, a)| (k, rename_addr(&sigma, a))).collect(),
            memory: self.ms.rename(&pn.memory, &sigma),
        }
    }

    /// A net with cuts or sync nodes left but no redex.
    pub fn is_deadlocked(&self, pn: &ProgramNet<S::Mem>) -> bool {
        let pending = pn.net.node_ids().any(|n| matches!(pn.net.kind(n), NodeKind::Cut | NodeKind::Sync(_)));
        pending && self.enumerate(pn).is_empty()
    }

    /// Classical readings of the `one` leaves under the conclusions, left
    /// to right. Leaves that are not bound `one` nodes read as `?`.
    pub fn leaves(&self, pn: &ProgramNet<S::Mem>) -> Vec<String> {
        let mut out = Vec::new();
        for e in &pn.net.conclusions {
            self.leaves_of(pn, *e, &mut out);
        }
        out
    }

    fn leaves_of(&self, pn: &ProgramNet<S::Mem>, e: EdgeId, out: &mut Vec<String>) {
        let n = pn.net.src(e);
        match pn.net.kind(n) {
            NodeKind::One => match pn.ind.get(&Input::One(n)) {
                Some(a) => out.push(self.ms.readout(&pn.memory, *a)),
                None => out.push("?".into()),
            },
            NodeKind::Tensor => {
                for p in pn.net.node(n).premises.clone() {
                    self.leaves_of(pn, p, out);
                }
            }
            _ if *pn.net.ty(e) == Formula::One => out.push("?".into()),
            _ => out.push("<fun>".into()),
        }
    }
}

/// The `one` node on the other side of a test cut.
fn tested_one(net: &Net, cut: NodeId) -> NodeId {
    net.node(cut)
        .premises
        .iter()
        .map(|e| net.src(*e))
        .find(|n| *net.kind(*n) == NodeKind::One)
        .expect("a test cut has a one node")
}

fn sync_ones(net: &Net, s: NodeId) -> Vec<NodeId> {
    net.node(s).premises.iter().map(|e| net.src(*e)).collect()
}

impl<S: MemoryStructure> RewriteSystem for NetSystem<'_, S> {
    type Element = ProgramNet<S::Mem>;
    type Redex = PnRedex;

    fn redexes(&self, e: &Self::Element) -> Vec<PnRedex> {
        self.enumerate(e)
    }

    fn apply(&self, e: &Self::Element, r: &PnRedex) -> Distribution<Self::Element> {
        let d = self.step(e, r).unwrap_or_else(|err| panic!("invalid program-net step: {err}"));
        let mut out = Distribution::empty();
        for (x, p) in d {
            out.add(self.canonicalize(&x), p);
        }
        out.prune(PRUNE_BELOW);
        out
    }

    fn is_choice(&self, _e: &Self::Element, r: &PnRedex) -> bool {
        matches!(r, PnRedex::Test(_))
    }

    fn same(&self, a: &Self::Element, b: &Self::Element, tol: f64) -> bool {
        a.net == b.net && a.ind == b.ind && self.ms.approx_eq(&a.memory, &b.memory, tol)
    }

    fn settle(&self, e: &Self::Element, policy: Policy, fuel: usize) -> Settled<Self::Element> {
        let mut cur = e.clone();
        let mut steps = 0;
        let compact_at = |pn: &ProgramNet<S::Mem>| 2 * pn.net.slot_count() + 64;
        let mut limit = compact_at(&cur);
        loop {
            let det: Vec<PnRedex> =
                self.enumerate(&cur).into_iter().filter(|r| !matches!(r, PnRedex::Test(_))).collect();
            if det.is_empty() || steps >= fuel {
                let exhausted = !det.is_empty();
                return Settled { element: self.canonicalize(&cur), steps, exhausted };
            }
            let r = det[policy.pick(&(steps, det.len()), det.len())];
            self.fire_det(&mut cur, &r).unwrap_or_else(|err| panic!("invalid program-net step: {err}"));
            steps += 1;
            if cur.net.slot_count() >= limit {
                cur = self.canonicalize(&cur);
                limit = compact_at(&cur);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memory::{IntRegisters, QuantumMemory, QuantumRegisters};
    use crate::smeyll_nets::Side;

    fn one_net() -> Net {
        let mut net = Net::new();
        let o = net.add_node(NodeKind::One, Place::Surface);
        let e = net.add_edge(o, Formula::One);
        net.conclusions = vec![e];
        net
    }

    /// `one` cut against a ⊥-box whose left side holds `one` and whose right
    /// side holds `one` through an `H` sync on the right.
    fn test_net() -> Net {
        let mut net = Net::new();
        let o = net.add_node(NodeKind::One, Place::Surface);
        let x = net.add_edge(o, Formula::One);
        let b = net.add_node(NodeKind::BotBox, Place::Surface);
        let mut sides = Vec::new();
        for side in [Side::Left, Side::Right] {
            let place = Place::In(b, side);
            let bot = net.add_node(NodeKind::Bot, place);
            let be = net.add_edge(bot, Formula::Bot);
            let one = net.add_node(NodeKind::One, place);
            let oe = net.add_edge(one, Formula::One);
            sides.push((be, oe));
        }
        net.plug(sides[0].0, b);
        net.plug(sides[1].0, b);
        net.plug(sides[0].1, b);
        net.plug(sides[1].1, b);
        let p = net.add_edge(b, Formula::Bot);
        let c = net.add_edge(b, Formula::One);
        net.add_cut(Place::Surface, x, p);
        net.conclusions = vec![c];
        net.validate().unwrap();
        net
    }

    #[test]
    fn lone_one_offers_link() {
        let ms = IntRegisters;
        let sys = NetSystem::new(&ms);
        let pn = sys.program(one_net());
        assert_eq!(sys.enumerate(&pn), vec![PnRedex::Link(0)]);
        let d = sys.apply(&pn, &PnRedex::Link(0));
        let next = d.into_single().unwrap();
        assert_eq!(next.ind.get(&Input::One(0)), Some(&0));
        assert!(sys.is_terminal(&next));
        assert_eq!(sys.leaves(&next), vec!["0".to_string()]);
    }

    #[test]
    fn test_needs_an_active_one() {
        let ms = IntRegisters;
        let sys = NetSystem::new(&ms);
        let pn = sys.program(test_net());
        assert_eq!(sys.enumerate(&pn), vec![PnRedex::Link(0)]);
        let linked = sys.apply(&pn, &PnRedex::Link(0)).into_single().unwrap();
        let rs = sys.enumerate(&linked);
        assert!(matches!(rs[..], [PnRedex::Test(_)]));
    }

    #[test]
    fn quantum_test_splits_evenly() {
        let ms = QuantumRegisters::default();
        let sys = NetSystem::new(&ms);
        let mut pn = sys.program(test_net());
        pn.ind.insert(Input::One(0), 0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        pn.memory = QuantumMemory::from_parts(vec![0], vec![h.into(), h.into()]);
        let r = sys.enumerate(&pn)[0];
        let d = sys.apply(&pn, &r);
        assert_eq!(d.len(), 2);
        for (b, p) in d.iter() {
            assert!((p - 0.5).abs() < 1e-12);
            assert!(b.ind.is_empty());
            assert_eq!(b.net.node_count(), 1);
        }
    }

    #[test]
    fn link_avoids_bound_addresses() {
        let ms = QuantumRegisters::default();
        let sys = NetSystem::new(&ms);
        let mut pn = sys.program(one_net());
        let mut extra = one_net();
        let o = extra.add_node(NodeKind::One, Place::Surface);
        let e = extra.add_edge(o, Formula::One);
        let t = extra.add_node(NodeKind::Tensor, Place::Surface);
        let c0 = extra.conclusions[0];
        extra.plug(c0, t);
        extra.plug(e, t);
        let te = extra.add_edge(t, Formula::tensor(Formula::One, Formula::One));
        extra.conclusions = vec![te];
        pn.net = extra;
        pn.ind.insert(Input::One(0), 0);
        let d = sys.step(&pn, &PnRedex::Link(o)).unwrap();
        let next = d.into_single().unwrap();
        assert_eq!(next.ind[&Input::One(o)], 1);
    }

    #[test]
    fn canonicalize_renumbers_addresses() {
        let ms = IntRegisters;
        let sys = NetSystem::new(&ms);
        let mut pn = sys.program(one_net());
        pn.ind.insert(Input::One(0), 7);
        let mut m = crate::memory::IntMemory::default();
        m.set(7, 3);
        pn.memory = m;
        let c = sys.canonicalize(&pn);
        assert_eq!(c.ind[&Input::One(0)], 0);
        assert_eq!(c.memory.get(0), 3);
        assert_eq!(sys.canonicalize(&c), c);
    }
}
