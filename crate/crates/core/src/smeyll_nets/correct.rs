//! The correctness criterion: no switching path is cyclic, in the net and
//! in every box content.
//!
//! A switching path is an undirected path that never uses both premises of
//! a `⅋` or `?c` node and never uses two conclusions of a sync node. Each
//! structure (the surface and each box content) is checked separately with
//! boxes seen as single nodes.

use std::collections::BTreeMap;

use thiserror::Error;

use super::{EdgeId, Net, NodeId, NodeKind, Place, Side};

/// A cyclic switching path, given by its edges.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("cyclic switching path through edges {cycle:?} in {structure}")]
pub struct CorrectnessError {
    pub structure: String,
    pub cycle: Vec<EdgeId>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Port {
    Premise,
    Conclusion,
}

struct Level {
    /// For each vertex, its incident edges with the port kind at that vertex.
    adj: BTreeMap<NodeId, Vec<(EdgeId, NodeId, Port)>>,
    kinds: BTreeMap<NodeId, NodeKind>,
}

impl Level {
    fn build(net: &Net, place: Place) -> Level {
        let members: Vec<NodeId> = net.nodes_at(place);
        let mut adj: BTreeMap<NodeId, Vec<(EdgeId, NodeId, Port)>> = members.iter().map(|n| (*n, Vec::new())).collect();
        let kinds = members.iter().map(|n| (*n, net.kind(*n).clone())).collect();
        for n in &members {
            for e in &net.node(*n).conclusions {
                if let Some(t) = net.edge(*e).tgt {
                    if adj.contains_key(&t) {
                        adj.get_mut(n).expect("member").push((*e, t, Port::Conclusion));
                        adj.get_mut(&t).expect("member").push((*e, *n, Port::Premise));
                    }
                }
            }
        }
        Level { adj, kinds }
    }

    /// Whether a path may enter `v` through `a` and leave through `b`.
    fn allowed(&self, v: NodeId, a: Port, b: Port) -> bool {
        match self.kinds[&v] {
            NodeKind::Par | NodeKind::Contr => !(a == Port::Premise && b == Port::Premise),
            NodeKind::Sync(_) => !(a == Port::Conclusion && b == Port::Conclusion),
            _ => true,
        }
    }

    /// Removes vertices of degree at most one until none is left; they
    /// cannot lie on a cycle.
    fn prune(&mut self) {
        loop {
            let leaves: Vec<NodeId> = self.adj.iter().filter(|(_, es)| es.len() <= 1).map(|(v, _)| *v).collect();
            if leaves.is_empty() {
                return;
            }
            for v in leaves {
                if let Some(es) = self.adj.remove(&v) {
                    for (e, w, _) in es {
                        if let Some(list) = self.adj.get_mut(&w) {
                            list.retain(|(f, _, _)| *f != e);
                        }
                    }
                }
            }
        }
    }

    fn find_cycle(&self) -> Option<Vec<EdgeId>> {
        for start in self.adj.keys() {
            let mut path = Vec::new();
            let mut on_path = BTreeMap::new();
            on_path.insert(*start, ());
            if let Some(c) = self.search(*start, *start, None, &mut path, &mut on_path) {
                return Some(c);
            }
        }
        None
    }

    /// Extends a simple path from `start` currently at `v`, entered through
    /// `entry` (edge id and the port kind at `v`). Only vertices greater
    /// than `start` are visited, so each cycle is found from its least vertex.
    fn search(
        &self,
        start: NodeId,
        v: NodeId,
        entry: Option<(EdgeId, Port, Port)>,
        path: &mut Vec<EdgeId>,
        on_path: &mut BTreeMap<NodeId, ()>,
    ) -> Option<Vec<EdgeId>> {
        for (e, w, port) in &self.adj[&v] {
            if let Some((ein, pin, _)) = entry {
                if *e == ein || !self.allowed(v, pin, *port) {
                    continue;
                }
            }
            let back_port = self.adj[w].iter().find(|(f, _, _)| f == e).map(|(_, _, p)| *p).expect("symmetric");
            if *w == start {
                let first = entry.map(|_| path[0]);
                if let Some(first) = first {
                    let first_port = self.adj[&start].iter().find(|(f, _, _)| *f == first).map(|(_, _, p)| *p);
                    if first != *e && self.allowed(start, back_port, first_port.expect("incident")) {
                        let mut cycle = path.clone();
                        cycle.push(*e);
                        return Some(cycle);
                    }
                }
                continue;
            }
            if *w < start || on_path.contains_key(w) {
                continue;
            }
            path.push(*e);
            on_path.insert(*w, ());
            if let Some(c) = self.search(start, *w, Some((*e, back_port, *port)), path, on_path) {
                return Some(c);
            }
            on_path.remove(w);
            path.pop();
        }
        None
    }
}

fn structures(net: &Net) -> Vec<(Place, String)> {
    let mut out = vec![(Place::Surface, "the surface".to_string())];
    for n in net.node_ids() {
        match net.kind(n) {
            NodeKind::Bang | NodeKind::Y => out.push((Place::In(n, Side::Main), format!("the content of box n{n}"))),
            NodeKind::BotBox => {
                out.push((Place::In(n, Side::Left), format!("the left content of ⊥-box n{n}")));
                out.push((Place::In(n, Side::Right), format!("the right content of ⊥-box n{n}")));
            }
            _ => {}
        }
    }
    out
}

/// Checks that no switching path is cyclic, at every depth.
pub fn check_correct(net: &Net) -> Result<(), CorrectnessError> {
    for (place, structure) in structures(net) {
        let mut level = Level::build(net, place);
        level.prune();
        if let Some(cycle) = level.find_cycle() {
            return Err(CorrectnessError { structure, cycle });
        }
    }
    Ok(())
}
