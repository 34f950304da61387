//! Surface reduction of nets.
//!
//! Only cuts at depth 0 reduce, and exponential steps need a box without
//! auxiliary doors. The ⊥-box rule has two outcomes, `u0` (left content)
//! and `u1` (right content); the memory decides between them one layer up.

use thiserror::Error;

use super::{EdgeId, Net, NodeId, NodeKind, Place, Side};

/// The rule a redex fires.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RedexKind {
    /// Cut against an axiom.
    Ax,
    /// `⊗` against `⅋`.
    TensorPar,
    /// A closed `!`-box against `?d`: the box opens.
    Deref,
    /// A closed Y-box against `?d`: the box opens and a copy of it is cut
    /// against the recursive door.
    YUnfold,
    /// A closed box against `?w`: the box is erased.
    Weaken,
    /// A closed box against `?c`: the box is duplicated.
    Contract,
    /// A closed box against an auxiliary door of another exponential box:
    /// the box moves inside.
    BoxComm,
    /// A `one` node against the principal door of a ⊥-box (`u0`/`u1`).
    Test,
    /// A sync node whose premises all come from `one` nodes.
    Sync,
}

/// A redex: its kind and the cut node (or sync node for [`RedexKind::Sync`]).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Redex {
    pub kind: RedexKind,
    pub node: NodeId,
}

/// The outcome of a test redex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Branch {
    /// `u0`: the left content survives.
    Left,
    /// `u1`: the right content survives.
    Right,
}

/// Result of [`reduce`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Reduct {
    One(Net),
    /// The `u0` and `u1` results of a test redex.
    Two(Net, Net),
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ReduceError {
    #[error("{0:?} is not a redex of this net")]
    NotARedex(Redex),
    #[error("a test redex needs a branch")]
    MissingBranch,
    #[error("cut on the two conclusions of one axiom")]
    AxiomLoop,
}

/// Information the program-net layer needs about a fired redex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Fired {
    Plain,
    /// The `one` node consumed by a test.
    Tested(NodeId),
    /// The sync label and the `one` nodes on its premises, in order.
    Synced(String, Vec<NodeId>),
}

fn classify_cut(net: &Net, c: NodeId) -> Option<RedexKind> {
    let ps = &net.node(c).premises;
    let (e1, e2) = (ps[0], ps[1]);
    let (n1, n2) = (net.src(e1), net.src(e2));
    let (k1, k2) = (net.kind(n1), net.kind(n2));
    if *k1 == NodeKind::Ax || *k2 == NodeKind::Ax {
        return Some(RedexKind::Ax);
    }
    for (a, na, ka, b, nb, kb) in [(e1, n1, k1, e2, n2, k2), (e2, n2, k2, e1, n1, k1)] {
        match (ka, kb) {
            (NodeKind::Tensor, NodeKind::Par) => return Some(RedexKind::TensorPar),
            (NodeKind::One, NodeKind::BotBox) if net.principal(nb) == b => return Some(RedexKind::Test),
            (NodeKind::Der | NodeKind::Weak | NodeKind::Contr, NodeKind::Bang | NodeKind::Y)
                if net.principal(nb) == b && net.is_closed_box(nb) =>
            {
                return Some(match (ka, kb) {
                    (NodeKind::Der, NodeKind::Bang) => RedexKind::Deref,
                    (NodeKind::Der, _) => RedexKind::YUnfold,
                    (NodeKind::Weak, _) => RedexKind::Weaken,
                    _ => RedexKind::Contract,
                });
            }
            (NodeKind::Bang | NodeKind::Y, NodeKind::Bang | NodeKind::Y)
                if net.principal(na) == a && net.is_closed_box(na) && net.principal(nb) != b =>
            {
                return Some(RedexKind::BoxComm);
            }
            _ => {}
        }
    }
    None
}

fn sync_ready(net: &Net, s: NodeId) -> bool {
    net.node(s).premises.iter().all(|e| {
        let n = net.src(*e);
        *net.kind(n) == NodeKind::One && net.is_surface(n)
    })
}

/// All redexes at depth 0, ordered by node id.
pub fn find_redexes(net: &Net) -> Vec<Redex> {
    let mut out = Vec::new();
    for n in net.node_ids() {
        let node = net.node(n);
        if node.place != Place::Surface {
            continue;
        }
        match node.kind {
            NodeKind::Cut => {
                if let Some(kind) = classify_cut(net, n) {
                    out.push(Redex { kind, node: n });
                }
            }
            NodeKind::Sync(_) if sync_ready(net, n) => out.push(Redex { kind: RedexKind::Sync, node: n }),
            _ => {}
        }
    }
    out
}

/// Whether `r` is currently a redex of `net`.
pub fn is_redex(net: &Net, r: &Redex) -> bool {
    let Some(node) = net.try_node(r.node) else { return false };
    if node.place != Place::Surface {
        return false;
    }
    match (&node.kind, r.kind) {
        (NodeKind::Sync(_), RedexKind::Sync) => sync_ready(net, r.node),
        (NodeKind::Cut, kind) => classify_cut(net, r.node) == Some(kind),
        _ => false,
    }
}

/// Fires `r` on a copy of `net`, returning both outcomes for tests.
pub fn reduce(net: &Net, r: &Redex) -> Result<Reduct, ReduceError> {
    if r.kind == RedexKind::Test {
        let mut left = net.clone();
        fire(&mut left, r, Some(Branch::Left))?;
        let mut right = net.clone();
        fire(&mut right, r, Some(Branch::Right))?;
        Ok(Reduct::Two(left, right))
    } else {
        let mut out = net.clone();
        fire(&mut out, r, None)?;
        Ok(Reduct::One(out))
    }
}

/// Fires `r` in place. Test redexes need `branch`.
pub fn fire(net: &mut Net, r: &Redex, branch: Option<Branch>) -> Result<Fired, ReduceError> {
    if !is_redex(net, r) {
        return Err(ReduceError::NotARedex(*r));
    }
    if r.kind == RedexKind::Sync {
        return Ok(fire_sync(net, r.node));
    }
    let c = r.node;
    let (e1, e2) = (net.node(c).premises[0], net.node(c).premises[1]);
    let place = net.node(c).place;
    // Orient the cut with `a` on the side named first in the rule.
    let first_is = |net: &Net, e: EdgeId, kinds: &[NodeKind]| kinds.contains(net.kind(net.src(e)));
    let orient = |net: &Net, kinds: &[NodeKind]| if first_is(net, e1, kinds) { (e1, e2) } else { (e2, e1) };
    match r.kind {
        RedexKind::Ax => {
            let (a, other) = orient(net, &[NodeKind::Ax]);
            let x = net.src(a);
            let concl = net.node(x).conclusions.clone();
            let a2 = if concl[0] == a { concl[1] } else { concl[0] };
            if a2 == other {
                return Err(ReduceError::AxiomLoop);
            }
            net.delete_node(c);
            net.redirect(other, a2);
            net.delete_node(x);
        }
        RedexKind::TensorPar => {
            let (t, p) = orient(net, &[NodeKind::Tensor]);
            let (tn, pn) = (net.src(t), net.src(p));
            let (ta, tb) = (net.node(tn).premises[0], net.node(tn).premises[1]);
            let (pa, pb) = (net.node(pn).premises[0], net.node(pn).premises[1]);
            net.delete_node(c);
            net.delete_node(tn);
            net.delete_node(pn);
            net.add_cut(place, ta, pa);
            net.add_cut(place, tb, pb);
        }
        RedexKind::Deref | RedexKind::YUnfold => {
            let (d, bx) = orient(net, &[NodeKind::Der]);
            let (dn, b) = (net.src(d), net.src(bx));
            let f = net.node(dn).premises[0];
            let content = net.node(b).premises.clone();
            let copy = (r.kind == RedexKind::YUnfold).then(|| net.copy_box(b));
            net.delete_node(c);
            net.delete_node(dn);
            net.delete_node(b);
            net.lift_content(b, Side::Main, place);
            net.add_cut(place, content[0], f);
            if let Some(copy) = copy {
                let p = net.principal(copy);
                net.add_cut(place, content[1], p);
            }
        }
        RedexKind::Weaken => {
            let (w, bx) = orient(net, &[NodeKind::Weak]);
            let (wn, b) = (net.src(w), net.src(bx));
            net.delete_node(c);
            net.delete_node(wn);
            net.delete_box(b);
        }
        RedexKind::Contract => {
            let (k, bx) = orient(net, &[NodeKind::Contr]);
            let (kn, b) = (net.src(k), net.src(bx));
            let (k1, k2) = (net.node(kn).premises[0], net.node(kn).premises[1]);
            let copy = net.copy_box(b);
            let p2 = net.principal(copy);
            net.delete_node(c);
            net.delete_node(kn);
            net.add_cut(place, bx, k1);
            net.add_cut(place, p2, k2);
        }
        RedexKind::BoxComm => {
            let (bx, aux) =
                if net.principal(net.src(e1)) == e1 && net.is_closed_box(net.src(e1)) { (e1, e2) } else { (e2, e1) };
            let (b, host) = (net.src(bx), net.src(aux));
            let j = net.node(host).conclusions.iter().position(|e| *e == aux).expect("door");
            let inner = net.aux_premise(host, j);
            net.delete_node(c);
            let hn = net.node_mut(host);
            hn.conclusions.remove(j);
            hn.premises.retain(|e| *e != inner);
            net.delete_edge(aux);
            net.edge_mut(inner).tgt = None;
            let inside = Place::In(host, Side::Main);
            net.node_mut(b).place = inside;
            net.add_cut(inside, bx, inner);
        }
        RedexKind::Test => {
            let branch = branch.ok_or(ReduceError::MissingBranch)?;
            let (o, bx) = orient(net, &[NodeKind::One]);
            let (on, b) = (net.src(o), net.src(bx));
            let (keep, drop) = match branch {
                Branch::Left => (Side::Left, Side::Right),
                Branch::Right => (Side::Right, Side::Left),
            };
            let (bot_edge, doors) = net.bot_side(b, keep);
            let outer: Vec<EdgeId> = net.node(b).conclusions[1..].to_vec();
            for n in net.descendants(b, Some(drop)) {
                net.delete_node(n);
            }
            let bot = net.src(bot_edge);
            net.delete_node(bot);
            net.delete_node(c);
            net.delete_node(on);
            net.node_mut(b).premises.clear();
            for (inner, out) in doors.iter().zip(&outer) {
                net.edge_mut(*inner).tgt = None;
                net.redirect(*inner, *out);
            }
            net.delete_node(b);
            net.lift_content(b, keep, place);
            return Ok(Fired::Tested(on));
        }
        RedexKind::Sync => unreachable!("handled above"),
    }
    Ok(Fired::Plain)
}

fn fire_sync(net: &mut Net, s: NodeId) -> Fired {
    let node = net.node(s).clone();
    let label = match &node.kind {
        NodeKind::Sync(l) => l.clone(),
        _ => unreachable!("checked by is_redex"),
    };
    let ones: Vec<NodeId> = node.premises.iter().map(|e| net.src(*e)).collect();
    net.node_mut(s).premises.clear();
    for (p, c) in node.premises.iter().zip(&node.conclusions) {
        net.edge_mut(*p).tgt = None;
        net.redirect(*p, *c);
    }
    net.delete_node(s);
    Fired::Synced(label, ones)
}
