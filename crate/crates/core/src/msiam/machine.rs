//! Machine states, transitions and their memory effects.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use super::stack::{fmt_bstack, indicated, Item, Position, Shape, Sig, Stack, Symbol};
use crate::memory::{canonical_renaming, rename_addr, Address, MemoryError, MemoryStructure};
use crate::pars::{Distribution, Policy, RewriteSystem, Settled, PRUNE_BELOW};
use crate::program_nets::{Input, ProgramNet};
use crate::smeyll_nets::{EdgeId, Formula, Net, NodeId, NodeKind, Place, Side};

/// Where a position points.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Dir {
    Up,
    Down,
    Stable,
}

/// A part of the net whose copies are tracked separately: the surface, the
/// content of an exponential box, or one side of a ⊥-box.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Structure {
    Surface,
    Box(NodeId),
    Side(NodeId, Side),
}

impl Structure {
    pub fn of_place(place: Place) -> Structure {
        match place {
            Place::Surface => Structure::Surface,
            Place::In(b, Side::Main) => Structure::Box(b),
            Place::In(b, side) => Structure::Side(b, side),
        }
    }
}

/// A machine state: tokens keyed by the start position they came from,
/// the addresses bound to start positions, and the memory.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MachineState<M> {
    /// Origin of each token mapped to its current position.
    pub tokens: BTreeMap<Position, Position>,
    pub ind: BTreeMap<Position, Address>,
    pub memory: M,
}

impl<M> MachineState<M> {
    /// Current positions of the tokens, in origin order.
    pub fn positions(&self) -> impl Iterator<Item = &Position> {
        self.tokens.values()
    }
}

/// A transition. Tokens are named by their origin.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Transition {
    /// A single token crosses a node or a box door.
    Move(Position),
    /// All tokens on the premises of a sync node, with the given box stack,
    /// cross it and update the memory.
    Sync(NodeId, Vec<Sig>),
    /// A token starts on a `one` node (binding an address) or a `?d` node.
    Spawn(Position),
    /// The token at the principal door of a ⊥-box picks a side by testing
    /// its address.
    Test(Position),
}

/// Kind of a transition, as reported in traces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransitionKind {
    Move,
    Spawn,
    Link,
    Update,
    Test,
}

impl fmt::Display for TransitionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TransitionKind::Move => "move",
            TransitionKind::Spawn => "spawn",
            TransitionKind::Link => "link",
            TransitionKind::Update => "update",
            TransitionKind::Test => "test",
        })
    }
}

/// Classification of a state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Running,
    Final,
    Deadlock,
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum MachineError {
    #[error("{0:?} is not enabled")]
    NotEnabled(Transition),
    #[error("token from {0} has no address")]
    Unbound(Position),
    #[error(transparent)]
    Memory(#[from] MemoryError),
}

/// The multi-token machine of a net over a memory structure.
pub struct Machine<'a, S: MemoryStructure> {
    pub ms: &'a S,
    net: Net,
    /// The `one` and `?d` nodes lying directly in each structure.
    spawners: BTreeMap<Structure, Vec<NodeId>>,
    syncs: Vec<NodeId>,
}

/// Lookup tables over the tokens of a state.
struct Index<'s> {
    /// Current position to origin.
    at: HashMap<&'s Position, &'s Position>,
    by_edge: HashMap<EdgeId, Vec<&'s Position>>,
}

impl<'s> Index<'s> {
    fn new<M>(st: &'s MachineState<M>) -> Index<'s> {
        let mut at = HashMap::with_capacity(st.tokens.len());
        let mut by_edge: HashMap<EdgeId, Vec<&Position>> = HashMap::new();
        for (o, p) in &st.tokens {
            at.insert(p, o);
            by_edge.entry(p.edge).or_default().push(p);
        }
        Index { at, by_edge }
    }

    fn on(&self, e: EdgeId) -> &[&'s Position] {
        self.by_edge.get(&e).map_or(&[], Vec::as_slice)
    }
}

/// A state being rewritten in place, with its position index.
struct Work<M> {
    st: MachineState<M>,
    at: HashMap<Position, Position>,
}

impl<M> Work<M> {
    fn new(st: MachineState<M>) -> Work<M> {
        let at = st.tokens.iter().map(|(o, p)| (p.clone(), o.clone())).collect();
        Work { st, at }
    }

    fn relocate(&mut self, origin: &Position, to: Position) {
        let slot = self.st.tokens.get_mut(origin).expect("token exists");
        self.at.remove(slot);
        self.at.insert(to.clone(), origin.clone());
        *slot = to;
    }

    fn add(&mut self, p: Position) {
        self.at.insert(p.clone(), p.clone());
        self.st.tokens.insert(p.clone(), p);
    }
}

impl<'a, S: MemoryStructure> Machine<'a, S> {
    pub fn new(ms: &'a S, net: Net) -> Self {
        let mut spawners: BTreeMap<Structure, Vec<NodeId>> = BTreeMap::new();
        let mut syncs = Vec::new();
        for n in net.node_ids() {
            let node = net.node(n);
            match node.kind {
                NodeKind::One | NodeKind::Der => spawners.entry(Structure::of_place(node.place)).or_default().push(n),
                NodeKind::Sync(_) => syncs.push(n),
                _ => {}
            }
        }
        Machine { ms, net, spawners, syncs }
    }

    pub fn net(&self) -> &Net {
        &self.net
    }

    /// The structure a node lies directly in.
    pub fn structure_of(&self, n: NodeId) -> Structure {
        Structure::of_place(self.net.node(n).place)
    }

    /// Direction of a position, or `None` when its formula stack does not
    /// match the type of its edge.
    pub fn direction(&self, p: &Position) -> Option<Dir> {
        if p.fstack.is_delta() || *self.net.kind(self.net.src(p.edge)) == NodeKind::Bot {
            return Some(Dir::Stable);
        }
        match indicated(&p.fstack, self.net.ty(p.edge))? {
            Symbol::OfCourse | Symbol::Bot => Some(Dir::Up),
            Symbol::WhyNot | Symbol::One => Some(Dir::Down),
        }
    }

    pub fn is_stable(&self, p: &Position) -> bool {
        self.direction(p) == Some(Dir::Stable)
    }

    /// Whether `p` is a final position: leaving the net through one of its
    /// conclusions.
    pub fn is_fin(&self, p: &Position) -> bool {
        p.bstack.is_empty() && self.net.edge(p.edge).tgt.is_none() && self.direction(p) == Some(Dir::Down)
    }

    /// The upward positions on the conclusions, pointing to a `⊥` reached
    /// through multiplicative connectives only.
    pub fn initial_positions(&self) -> Vec<Position> {
        fn bots(f: &Formula, path: &mut Vec<Item>, out: &mut Vec<Stack>) {
            match f {
                Formula::Bot => out.push(Stack::from_items(path.iter().cloned(), false)),
                Formula::Tensor(a, b) | Formula::Par(a, b) => {
                    path.push(Item::L);
                    bots(a, path, out);
                    path.pop();
                    path.push(Item::R);
                    bots(b, path, out);
                    path.pop();
                }
                _ => {}
            }
        }
        let mut out = Vec::new();
        for e in &self.net.conclusions {
            let mut stacks = Vec::new();
            bots(self.net.ty(*e), &mut Vec::new(), &mut stacks);
            out.extend(stacks.into_iter().map(|s| Position::new(*e, s, Vec::new())));
        }
        out
    }

    /// The initial state of a program net over this machine's net: a token
    /// on every initial position, the bindings of active `one` nodes and
    /// `⊥` conclusions carried over, and the memory of `pn`.
    pub fn initial_state(&self, pn: &ProgramNet<S::Mem>) -> MachineState<S::Mem> {
        let mut st = MachineState { tokens: BTreeMap::new(), ind: BTreeMap::new(), memory: pn.memory.clone() };
        for p in self.initial_positions() {
            st.tokens.insert(p.clone(), p);
        }
        for (input, a) in &pn.ind {
            let p = match input {
                Input::One(n) => Position::new(self.net.node(*n).conclusions[0], Stack::epsilon(), Vec::new()),
                Input::Conclusion(i) => Position::new(self.net.conclusions[*i], Stack::epsilon(), Vec::new()),
            };
            st.ind.insert(p, *a);
        }
        st
    }

    /// The edge whose stable tokens name the opened copies of `s`.
    fn door(&self, s: Structure) -> Option<(EdgeId, Stack)> {
        match s {
            Structure::Surface => None,
            Structure::Box(b) => Some((self.net.node(b).premises[0], Stack::delta())),
            Structure::Side(b, side) => Some((self.net.bot_side(b, side).0, Stack::epsilon())),
        }
    }

    fn opened_in(&self, at: &HashMap<Position, Position>, s: Structure, t: &[Sig]) -> bool {
        match self.door(s) {
            None => t.is_empty(),
            Some((e, fs)) => at.contains_key(&Position::new(e, fs, t.to_vec())),
        }
    }

    fn opened_idx(&self, idx: &Index<'_>, s: Structure, t: &[Sig]) -> bool {
        match self.door(s) {
            None => t.is_empty(),
            Some((e, fs)) => idx.at.contains_key(&Position::new(e, fs, t.to_vec())),
        }
    }

    /// The box stacks of the opened copies of `s`.
    pub fn copies(&self, st: &MachineState<S::Mem>, s: Structure) -> BTreeSet<Vec<Sig>> {
        match self.door(s) {
            None => BTreeSet::from([Vec::new()]),
            Some((e, fs)) => {
                st.positions().filter(|p| p.edge == e && p.fstack == fs).map(|p| p.bstack.clone()).collect()
            }
        }
    }

    fn copies_idx(&self, idx: &Index<'_>, s: Structure) -> Vec<Vec<Sig>> {
        match self.door(s) {
            None => vec![Vec::new()],
            Some((e, fs)) => idx.on(e).iter().filter(|p| p.fstack == fs).map(|p| p.bstack.clone()).collect(),
        }
    }

    /// The start position of node `n` in the copy `t` of its structure.
    fn spawn_position(&self, n: NodeId, t: &[Sig]) -> Position {
        let e = self.net.node(n).conclusions[0];
        let fs = match self.net.kind(n) {
            NodeKind::One => Stack::epsilon(),
            _ => Stack::from_items([Item::Sig(Sig::star())], true),
        };
        Position::new(e, fs, t.to_vec())
    }

    /// The position a token at `p` moves to on its own, if any. `opened`
    /// answers whether a copy of a structure exists.
    fn move_of(&self, p: &Position, opened: &dyn Fn(Structure, &[Sig]) -> bool) -> Option<Position> {
        let net = &self.net;
        match self.direction(p)? {
            Dir::Stable => None,
            Dir::Down => {
                let n = net.edge(p.edge).tgt?;
                let node = net.node(n);
                let i = node.premises.iter().position(|e| *e == p.edge).expect("edge is a premise of its target");
                let mut s = p.fstack.clone();
                let mut t = p.bstack.clone();
                match node.kind {
                    NodeKind::Cut => Some(Position::new(node.premises[1 - i], s, t)),
                    NodeKind::Tensor | NodeKind::Par => {
                        s.push(if i == 0 { Item::L } else { Item::R });
                        Some(Position::new(node.conclusions[0], s, t))
                    }
                    NodeKind::Der => {
                        s.push(Item::Sig(Sig::star()));
                        Some(Position::new(node.conclusions[0], s, t))
                    }
                    NodeKind::Contr => {
                        let sig = s.pop_sig()?;
                        s.push(Item::Sig(if i == 0 { Sig::l(sig) } else { Sig::r(sig) }));
                        Some(Position::new(node.conclusions[0], s, t))
                    }
                    NodeKind::Bang | NodeKind::Y if i == 0 => {
                        let sigma = t.pop()?;
                        if let Shape::Y(tau, rho) = sigma.shape() {
                            s.push(Item::Sig(rho.clone()));
                            t.push(tau.clone());
                            return Some(Position::new(node.premises[1], s, t));
                        }
                        s.push(Item::Sig(sigma));
                        Some(Position::new(node.conclusions[0], s, t))
                    }
                    NodeKind::Y if i == 1 => {
                        let rho = s.pop_sig()?;
                        let tau = t.pop()?;
                        t.push(Sig::y(tau, rho));
                        Some(Position::new(node.premises[0], s, t))
                    }
                    NodeKind::Bang | NodeKind::Y => {
                        let j = if node.kind == NodeKind::Bang { i } else { i - 1 };
                        let tau = s.pop_sig()?;
                        let sigma = t.pop()?;
                        s.push(Item::Sig(Sig::pair(sigma, tau)));
                        Some(Position::new(node.conclusions[j], s, t))
                    }
                    NodeKind::BotBox if i >= 2 => {
                        let k = node.conclusions.len() - 1;
                        Some(Position::new(node.conclusions[(i - 2) % k + 1], s, t))
                    }
                    _ => None,
                }
            }
            Dir::Up => {
                let n = net.src(p.edge);
                let node = net.node(n);
                let c = node.conclusions.iter().position(|e| *e == p.edge).expect("edge is a conclusion of its source");
                let mut s = p.fstack.clone();
                let mut t = p.bstack.clone();
                match node.kind {
                    NodeKind::Ax => Some(Position::new(node.conclusions[1 - c], s, t)),
                    NodeKind::Tensor | NodeKind::Par => match s.pop()? {
                        Item::L => Some(Position::new(node.premises[0], s, t)),
                        Item::R => Some(Position::new(node.premises[1], s, t)),
                        Item::Sig(_) => None,
                    },
                    NodeKind::Der => s.pop_sig()?.is_star().then(|| Position::new(node.premises[0], s, t)),
                    NodeKind::Contr => match s.pop_sig()?.shape() {
                        Shape::L(sig) => Some(Position::new(node.premises[0], s.pushed(Item::Sig(sig.clone())), t)),
                        Shape::R(sig) => Some(Position::new(node.premises[1], s.pushed(Item::Sig(sig.clone())), t)),
                        _ => None,
                    },
                    NodeKind::Bang | NodeKind::Y if c == 0 => {
                        let sigma = s.pop_sig()?;
                        t.push(sigma);
                        Some(Position::new(node.premises[0], s, t))
                    }
                    NodeKind::Bang | NodeKind::Y => match s.pop_sig()?.shape() {
                        Shape::Pair(sigma, tau) => {
                            s.push(Item::Sig(tau.clone()));
                            t.push(sigma.clone());
                            Some(Position::new(net.aux_premise(n, c), s, t))
                        }
                        _ => None,
                    },
                    NodeKind::BotBox if c >= 1 => {
                        let side =
                            [Side::Left, Side::Right].into_iter().find(|side| opened(Structure::Side(n, *side), &t))?;
                        let (_, doors) = net.bot_side(n, side);
                        Some(Position::new(doors[c - 1], s, t))
                    }
                    _ => None,
                }
            }
        }
    }

    /// The ⊥-box whose principal door `p` is waiting at.
    fn test_site(&self, p: &Position) -> Option<NodeId> {
        let n = self.net.src(p.edge);
        let at_door = *self.net.kind(n) == NodeKind::BotBox && self.net.principal(n) == p.edge;
        (at_door && self.direction(p) == Some(Dir::Up)).then_some(n)
    }

    /// The origins of the tokens ready to cross sync node `s` in copy `t`.
    fn sync_tokens(&self, at: &dyn Fn(&Position) -> Option<Position>, s: NodeId, t: &[Sig]) -> Option<Vec<Position>> {
        self.net.node(s).premises.iter().map(|e| at(&Position::new(*e, Stack::epsilon(), t.to_vec()))).collect()
    }

    /// Every enabled transition, in a deterministic order.
    pub fn enabled(&self, st: &MachineState<S::Mem>) -> Vec<Transition> {
        let idx = Index::new(st);
        let opened = |s: Structure, t: &[Sig]| self.opened_idx(&idx, s, t);
        let mut out = Vec::new();
        for (o, p) in &st.tokens {
            if self.move_of(p, &opened).is_some() {
                out.push(Transition::Move(o.clone()));
            } else if self.test_site(p).is_some() && st.ind.contains_key(o) {
                out.push(Transition::Test(o.clone()));
            }
        }
        let lookup = |p: &Position| idx.at.get(p).map(|o| (*o).clone());
        for &s in &self.syncs {
            let first = self.net.node(s).premises[0];
            let mut seen = BTreeSet::new();
            for p in idx.on(first) {
                if !p.fstack.is_epsilon() || !seen.insert(p.bstack.clone()) {
                    continue;
                }
                if let Some(origins) = self.sync_tokens(&lookup, s, &p.bstack) {
                    if origins.iter().all(|o| st.ind.contains_key(o)) {
                        out.push(Transition::Sync(s, p.bstack.clone()));
                    }
                }
            }
        }
        for (structure, nodes) in &self.spawners {
            for t in self.copies_idx(&idx, *structure) {
                for n in nodes {
                    let p = self.spawn_position(*n, &t);
                    if !st.tokens.contains_key(&p) {
                        out.push(Transition::Spawn(p));
                    }
                }
            }
        }
        out.sort();
        out.dedup();
        out
    }

    pub fn kind_of(&self, tr: &Transition) -> TransitionKind {
        match tr {
            Transition::Move(_) => TransitionKind::Move,
            Transition::Sync(..) => TransitionKind::Update,
            Transition::Test(_) => TransitionKind::Test,
            Transition::Spawn(p) => {
                if *self.net.kind(self.net.src(p.edge)) == NodeKind::One {
                    TransitionKind::Link
                } else {
                    TransitionKind::Spawn
                }
            }
        }
    }

    /// Fires a transition that does not split mass.
    fn fire_det(&self, w: &mut Work<S::Mem>, tr: &Transition) -> Result<(), MachineError> {
        let bad = || MachineError::NotEnabled(tr.clone());
        match tr {
            Transition::Move(o) => {
                let p = w.st.tokens.get(o).ok_or_else(bad)?;
                let next = self.move_of(p, &|s, t| self.opened_in(&w.at, s, t)).ok_or_else(bad)?;
                w.relocate(o, next);
            }
            Transition::Spawn(p) => {
                let n = self.net.src(p.edge);
                let spawnable = matches!(self.net.kind(n), NodeKind::One | NodeKind::Der)
                    && *p == self.spawn_position(n, &p.bstack)
                    && !w.st.tokens.contains_key(p)
                    && self.opened_in(&w.at, self.structure_of(n), &p.bstack);
                if !spawnable {
                    return Err(bad());
                }
                if *self.net.kind(n) == NodeKind::One && !w.st.ind.contains_key(p) {
                    let used: BTreeSet<Address> = w.st.ind.values().copied().collect();
                    let a = self.ms.fresh(&w.st.memory, &used);
                    w.st.ind.insert(p.clone(), a);
                }
                w.add(p.clone());
            }
            Transition::Sync(s, t) => {
                let NodeKind::Sync(label) = self.net.kind(*s) else { return Err(bad()) };
                let origins = self.sync_tokens(&|p| w.at.get(p).cloned(), *s, t).ok_or_else(bad)?;
                let addrs = origins
                    .iter()
                    .map(|o| w.st.ind.get(o).copied().ok_or_else(|| MachineError::Unbound(o.clone())))
                    .collect::<Result<Vec<_>, _>>()?;
                w.st.memory = self.ms.update(&addrs, label, &w.st.memory)?;
                let outs = self.net.node(*s).conclusions.clone();
                for (o, e) in origins.iter().zip(outs) {
                    w.relocate(o, Position::new(e, Stack::epsilon(), t.clone()));
                }
            }
            Transition::Test(_) => return Err(bad()),
        }
        Ok(())
    }

    /// One raw transition. A test answering false sends the token to the
    /// left side of the ⊥-box, true to the right side.
    pub fn step(
        &self,
        st: &MachineState<S::Mem>,
        tr: &Transition,
    ) -> Result<Distribution<MachineState<S::Mem>>, MachineError> {
        if let Transition::Test(o) = tr {
            let p = st.tokens.get(o).ok_or_else(|| MachineError::NotEnabled(tr.clone()))?;
            let b = self.test_site(p).ok_or_else(|| MachineError::NotEnabled(tr.clone()))?;
            let a = *st.ind.get(o).ok_or_else(|| MachineError::Unbound(o.clone()))?;
            let mut out = Distribution::empty();
            for ((answer, m), q) in self.ms.test(a, &st.memory) {
                let side = if answer { Side::Right } else { Side::Left };
                let mut next = st.clone();
                let bot = self.net.bot_side(b, side).0;
                next.tokens.insert(o.clone(), Position::new(bot, Stack::epsilon(), p.bstack.clone()));
                next.memory = m;
                out.add(next, q);
            }
            return Ok(out);
        }
        let mut w = Work::new(st.clone());
        self.fire_det(&mut w, tr)?;
        Ok(Distribution::dirac(w.st))
    }

    /// Running while a transition is enabled; otherwise final when every
    /// token is stable or has left the net, and deadlocked if not.
    pub fn classify(&self, st: &MachineState<S::Mem>) -> Status {
        if !self.enabled(st).is_empty() {
            Status::Running
        } else if st.positions().all(|p| self.is_fin(p) || self.is_stable(p)) {
            Status::Final
        } else {
            Status::Deadlock
        }
    }

    /// The representative of `st` with addresses renumbered in the order of
    /// the start positions they are bound to.
    pub fn canonicalize(&self, st: &MachineState<S::Mem>) -> MachineState<S::Mem> {
        let referenced: Vec<Address> = st.ind.values().copied().collect();
        let sigma = canonical_renaming(self.ms, &st.memory, &referenced);
        MachineState {
            tokens: st.tokens.clone(),
            ind: st.ind.iter().map(|(k, a)| (k.clone(), rename_addr(&sigma, *a))).collect(),
            memory: self.ms.rename(&st.memory, &sigma),
        }
    }

    /// Classical readings of the `1` occurrences of the conclusions, left
    /// to right through tensors: the memory reading of the address of the
    /// token that left there, or `?` if none did. Other connectives read
    /// as `<fun>`.
    pub fn leaves(&self, st: &MachineState<S::Mem>) -> Vec<String> {
        let at: HashMap<&Position, &Position> = st.tokens.iter().map(|(o, p)| (p, o)).collect();
        let mut out = Vec::new();
        for e in &self.net.conclusions {
            self.leaves_of(st, &at, *e, self.net.ty(*e), &mut Vec::new(), &mut out);
        }
        out
    }

    fn leaves_of(
        &self,
        st: &MachineState<S::Mem>,
        at: &HashMap<&Position, &Position>,
        e: EdgeId,
        f: &Formula,
        path: &mut Vec<Item>,
        out: &mut Vec<String>,
    ) {
        match f {
            Formula::One => {
                let p = Position::new(e, Stack::from_items(path.iter().cloned(), false), Vec::new());
                match at.get(&p).and_then(|o| st.ind.get(*o)) {
                    Some(a) => out.push(self.ms.readout(&st.memory, *a)),
                    None => out.push("?".into()),
                }
            }
            Formula::Tensor(a, b) => {
                path.push(Item::L);
                self.leaves_of(st, at, e, a, path, out);
                path.pop();
                path.push(Item::R);
                self.leaves_of(st, at, e, b, path, out);
                path.pop();
            }
            _ => out.push("<fun>".into()),
        }
    }

    /// A one-line description of `tr` fired in `st`.
    pub fn describe(&self, st: &MachineState<S::Mem>, tr: &Transition) -> String {
        let kind = self.kind_of(tr);
        match tr {
            Transition::Move(o) => {
                let from = &st.tokens[o];
                let idx = Index::new(st);
                let to = self.move_of(from, &|s, t| self.opened_idx(&idx, s, t));
                let to = to.map_or("?".to_string(), |p| p.to_string());
                format!("{kind} token {o}: {from} -> {to}")
            }
            Transition::Spawn(p) => match st.ind.get(p) {
                Some(a) => format!("{kind} token {p} to address {a}"),
                None => format!("{kind} token {p}"),
            },
            Transition::Sync(s, t) => {
                let label = self.net.kind(*s).name();
                format!("{kind} {label} at n{s} in copy {}", fmt_bstack(t))
            }
            Transition::Test(o) => match st.ind.get(o) {
                Some(a) => format!("{kind} token {o} on address {a}"),
                None => format!("{kind} token {o}"),
            },
        }
    }

    /// Follows one run for at most `max_steps` transitions, firing the
    /// first enabled transition and keeping the likeliest outcome of each
    /// test. Each line names the transition and the memory after it.
    pub fn trace(&self, init: &MachineState<S::Mem>, max_steps: usize) -> Vec<String> {
        let mut cur = init.clone();
        let mut lines = Vec::new();
        for k in 1..=max_steps {
            let Some(tr) = self.enabled(&cur).into_iter().next() else {
                lines.push(format!("{:>5} stop  {:?}", k - 1, self.classify(&cur)));
                break;
            };
            let mut line = self.describe(&cur, &tr);
            let d = self.step(&cur, &tr).unwrap_or_else(|err| panic!("invalid machine step: {err}"));
            let mut best: Option<(MachineState<S::Mem>, f64)> = None;
            for (x, p) in d {
                if best.as_ref().is_none_or(|(_, q)| p > *q + 1e-12) {
                    best = Some((x, p));
                }
            }
            let (next, p) = best.expect("a step has an outcome");
            if matches!(tr, Transition::Test(_)) {
                line.push_str(&format!(" (branch p={p})"));
            }
            cur = next;
            lines.push(format!("{k:>5} {line} | {}", self.ms.describe(&cur.memory)));
        }
        lines
    }

    /// Runs every transition but tests until none is left or `fuel`
    /// transitions were fired. Returns the state, the number of transitions
    /// and whether fuel ran out.
    fn run_det(&self, st: &MachineState<S::Mem>, fuel: usize) -> (MachineState<S::Mem>, usize, bool) {
        let mut spawns: Vec<Position> = Vec::new();
        let mut live: Vec<Position> = Vec::new();
        {
            let idx = Index::new(st);
            for (structure, nodes) in &self.spawners {
                for t in self.copies_idx(&idx, *structure) {
                    for n in nodes {
                        let p = self.spawn_position(*n, &t);
                        if !st.tokens.contains_key(&p) {
                            spawns.push(p);
                        }
                    }
                }
            }
            for (o, p) in &st.tokens {
                if matches!(self.direction(p), Some(Dir::Up | Dir::Down)) && !self.is_fin(p) {
                    live.push(o.clone());
                }
            }
        }
        spawns.reverse();
        live.reverse();
        let mut w = Work::new(st.clone());
        let mut steps = 0;
        while steps < fuel {
            if let Some(p) = spawns.pop() {
                if w.st.tokens.contains_key(&p) {
                    continue;
                }
                self.fire_det(&mut w, &Transition::Spawn(p.clone()))
                    .unwrap_or_else(|err| panic!("invalid spawn: {err}"));
                steps += 1;
                live.push(p);
                continue;
            }
            let Some(o) = live.pop() else { break };
            let cur = w.st.tokens[&o].clone();
            if let Some(next) = self.move_of(&cur, &|s, t| self.opened_in(&w.at, s, t)) {
                w.relocate(&o, next.clone());
                steps += 1;
                if self.is_stable(&next) {
                    let door = self.net.edge(next.edge).tgt.filter(|b| {
                        self.net.kind(*b).is_exponential_box() && self.net.node(*b).premises[0] == next.edge
                    });
                    if let Some(nodes) = door.and_then(|b| self.spawners.get(&Structure::Box(b))) {
                        spawns.extend(nodes.iter().rev().map(|n| self.spawn_position(*n, &next.bstack)));
                    }
                } else {
                    live.push(o);
                }
                continue;
            }
            let Some(s) = self.net.edge(cur.edge).tgt.filter(|n| matches!(self.net.kind(*n), NodeKind::Sync(_))) else {
                continue;
            };
            let ready = self
                .sync_tokens(&|p| w.at.get(p).cloned(), s, &cur.bstack)
                .is_some_and(|os| os.iter().all(|o| w.st.ind.contains_key(o)));
            if ready {
                let tr = Transition::Sync(s, cur.bstack.clone());
                let origins = self.sync_tokens(&|p| w.at.get(p).cloned(), s, &cur.bstack).expect("ready");
                self.fire_det(&mut w, &tr).unwrap_or_else(|err| panic!("invalid sync: {err}"));
                steps += 1;
                live.extend(origins);
            }
        }
        let exhausted = steps >= fuel && self.enabled(&w.st).iter().any(|t| !matches!(t, Transition::Test(_)));
        (w.st, steps, exhausted)
    }

    /// Runs the deterministic transitions of `st` to completion.
    pub fn settle_state(&self, st: &MachineState<S::Mem>, fuel: usize) -> Settled<MachineState<S::Mem>> {
        let (element, steps, exhausted) = self.run_det(st, fuel);
        Settled { element: self.canonicalize(&element), steps, exhausted }
    }
}

impl<S: MemoryStructure> RewriteSystem for Machine<'_, S> {
    type Element = MachineState<S::Mem>;
    type Redex = Transition;

    fn redexes(&self, e: &Self::Element) -> Vec<Transition> {
        self.enabled(e)
    }

    fn apply(&self, e: &Self::Element, r: &Transition) -> Distribution<Self::Element> {
        let d = self.step(e, r).unwrap_or_else(|err| panic!("invalid machine step: {err}"));
        let mut out = Distribution::empty();
        for (x, p) in d {
            out.add(self.canonicalize(&x), p);
        }
        out.prune(PRUNE_BELOW);
        out
    }

    fn is_choice(&self, _e: &Self::Element, r: &Transition) -> bool {
        matches!(r, Transition::Test(_))
    }

    fn same(&self, a: &Self::Element, b: &Self::Element, tol: f64) -> bool {
        a.tokens == b.tokens && a.ind == b.ind && self.ms.approx_eq(&a.memory, &b.memory, tol)
    }

    fn settle(&self, e: &Self::Element, _policy: Policy, fuel: usize) -> Settled<Self::Element> {
        self.settle_state(e, fuel)
    }
}
