//! The graph structure of nets: nodes, typed edges, boxes and their
//! contents, all stored in one arena with a place tag per node.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use super::Formula;

pub type NodeId = usize;
pub type EdgeId = usize;

/// Which content of a box a node belongs to. Exponential boxes have a single
/// content; ⊥-boxes have a left and a right one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Main,
    Left,
    Right,
}

/// Where a node lives: on the surface or directly inside a box content.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Place {
    Surface,
    In(NodeId, Side),
}

/// Node sorts. Box nodes stand for the box border: their premises are the
/// conclusions of the content and their conclusions are the doors.
///
/// Port layouts:
/// * `Ax`: conclusions `[A, A^⊥]`.
/// * `Cut`: premises `[A, A^⊥]`.
/// * `One`, `Bot`, `Weak`: a single conclusion.
/// * `Tensor`, `Par`: premises `[A, B]`, conclusion `[A□B]`.
/// * `Der`: premise `[A]`, conclusion `[?A]`. `Contr`: premises `[?A, ?A]`.
/// * `Sync`: premises `[P1..Pn]`, conclusions `[P1..Pn]`.
/// * `Bang`: premises `[A, ?C1..?Ck]`, conclusions `[!A, ?C1..?Ck]`.
/// * `Y`: premises `[A, ?A^⊥, ?C1..?Ck]`, conclusions `[!A, ?C1..?Ck]`.
/// * `BotBox`: premises `[⊥left, ⊥right, L1..Lk, R1..Rk]`, conclusions
///   `[⊥, C1..Ck]` with `k ≥ 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    Ax,
    Cut,
    One,
    Bot,
    Tensor,
    Par,
    Der,
    Weak,
    Contr,
    Sync(String),
    Bang,
    Y,
    BotBox,
}

impl NodeKind {
    pub fn is_box(&self) -> bool {
        matches!(self, NodeKind::Bang | NodeKind::Y | NodeKind::BotBox)
    }

    pub fn is_exponential_box(&self) -> bool {
        matches!(self, NodeKind::Bang | NodeKind::Y)
    }

    pub fn name(&self) -> String {
        match self {
            NodeKind::Ax => "ax".into(),
            NodeKind::Cut => "cut".into(),
            NodeKind::One => "one".into(),
            NodeKind::Bot => "bot".into(),
            NodeKind::Tensor => "tensor".into(),
            NodeKind::Par => "par".into(),
            NodeKind::Der => "?d".into(),
            NodeKind::Weak => "?w".into(),
            NodeKind::Contr => "?c".into(),
            NodeKind::Sync(l) => format!("sync[{l}]"),
            NodeKind::Bang => "!box".into(),
            NodeKind::Y => "Ybox".into(),
            NodeKind::BotBox => "⊥box".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Node {
    pub kind: NodeKind,
    pub premises: Vec<EdgeId>,
    pub conclusions: Vec<EdgeId>,
    pub place: Place,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Edge {
    pub ty: Formula,
    /// The node this edge is a conclusion of.
    pub src: NodeId,
    /// The node this edge is a premise of, if any.
    pub tgt: Option<NodeId>,
}

/// A net. Deleted nodes and edges leave holes until [`Net::canonical`]
/// compacts the arena.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Net {
    nodes: Vec<Option<Node>>,
    edges: Vec<Option<Edge>>,
    /// The conclusions of the net, in interface order.
    pub conclusions: Vec<EdgeId>,
}

impl Net {
    pub fn new() -> Net {
        Net::default()
    }

    pub fn add_node(&mut self, kind: NodeKind, place: Place) -> NodeId {
        self.nodes.push(Some(Node { kind, premises: Vec::new(), conclusions: Vec::new(), place }));
        self.nodes.len() - 1
    }

    /// Adds a new conclusion of type `ty` to node `src`.
    pub fn add_edge(&mut self, src: NodeId, ty: Formula) -> EdgeId {
        self.edges.push(Some(Edge { ty, src, tgt: None }));
        let e = self.edges.len() - 1;
        self.node_mut(src).conclusions.push(e);
        e
    }

    /// Appends `e` to the premises of `tgt`.
    pub fn plug(&mut self, e: EdgeId, tgt: NodeId) {
        assert!(self.edge(e).tgt.is_none(), "edge {e} already has a target");
        self.edge_mut(e).tgt = Some(tgt);
        self.node_mut(tgt).premises.push(e);
    }

    pub fn node(&self, n: NodeId) -> &Node {
        self.nodes[n].as_ref().unwrap_or_else(|| panic!("node {n} was deleted"))
    }

    pub fn node_mut(&mut self, n: NodeId) -> &mut Node {
        self.nodes[n].as_mut().unwrap_or_else(|| panic!("node {n} was deleted"))
    }

    pub fn try_node(&self, n: NodeId) -> Option<&Node> {
        self.nodes.get(n).and_then(Option::as_ref)
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        self.edges[e].as_ref().unwrap_or_else(|| panic!("edge {e} was deleted"))
    }

    pub fn edge_mut(&mut self, e: EdgeId) -> &mut Edge {
        self.edges[e].as_mut().unwrap_or_else(|| panic!("edge {e} was deleted"))
    }

    pub fn try_edge(&self, e: EdgeId) -> Option<&Edge> {
        self.edges.get(e).and_then(Option::as_ref)
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().enumerate().filter(|(_, n)| n.is_some()).map(|(i, _)| i)
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.edges.iter().enumerate().filter(|(_, e)| e.is_some()).map(|(i, _)| i)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_some()).count()
    }

    /// Number of node slots, including those of deleted nodes.
    pub fn slot_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().filter(|e| e.is_some()).count()
    }

    pub fn kind(&self, n: NodeId) -> &NodeKind {
        &self.node(n).kind
    }

    pub fn ty(&self, e: EdgeId) -> &Formula {
        &self.edge(e).ty
    }

    pub fn src(&self, e: EdgeId) -> NodeId {
        self.edge(e).src
    }

    pub fn is_surface(&self, n: NodeId) -> bool {
        self.node(n).place == Place::Surface
    }

    pub fn place_depth(&self, place: Place) -> usize {
        let mut d = 0;
        let mut cur = place;
        while let Place::In(b, _) = cur {
            d += 1;
            cur = self.node(b).place;
        }
        d
    }

    pub fn depth(&self, n: NodeId) -> usize {
        self.place_depth(self.node(n).place)
    }

    /// Depth of an edge: the depth of the node it is a conclusion of.
    pub fn edge_depth(&self, e: EdgeId) -> usize {
        self.depth(self.src(e))
    }

    /// The chain of enclosing `(box, side)` pairs of a node, innermost first.
    pub fn ancestors(&self, n: NodeId) -> Vec<(NodeId, Side)> {
        let mut out = Vec::new();
        let mut cur = self.node(n).place;
        while let Place::In(b, s) = cur {
            out.push((b, s));
            cur = self.node(b).place;
        }
        out
    }

    /// Whether `n` lies (at any depth) inside `b`, optionally on one side.
    pub fn is_inside(&self, n: NodeId, b: NodeId, side: Option<Side>) -> bool {
        let mut cur = self.node(n).place;
        while let Place::In(p, s) = cur {
            if p == b {
                return side.is_none_or(|want| want == s);
            }
            cur = self.node(p).place;
        }
        false
    }

    /// Every node strictly inside box `b` (on `side` if given), in id order.
    pub fn descendants(&self, b: NodeId, side: Option<Side>) -> Vec<NodeId> {
        self.node_ids().filter(|n| *n != b && self.is_inside(*n, b, side)).collect()
    }

    /// The principal conclusion of a box.
    pub fn principal(&self, b: NodeId) -> EdgeId {
        self.node(b).conclusions[0]
    }

    /// An exponential box without auxiliary doors.
    pub fn is_closed_box(&self, b: NodeId) -> bool {
        self.kind(b).is_exponential_box() && self.node(b).conclusions.len() == 1
    }

    /// For an exponential box, the content edge entering auxiliary door `j`
    /// (`j ≥ 1` indexes the conclusions).
    pub fn aux_premise(&self, b: NodeId, j: usize) -> EdgeId {
        match self.kind(b) {
            NodeKind::Bang => self.node(b).premises[j],
            NodeKind::Y => self.node(b).premises[j + 1],
            k => panic!("{} has no exponential auxiliary doors", k.name()),
        }
    }

    /// For a ⊥-box with `k` auxiliary doors, the bot edge and door premises
    /// of one side.
    pub fn bot_side(&self, b: NodeId, side: Side) -> (EdgeId, Vec<EdgeId>) {
        let node = self.node(b);
        let k = node.conclusions.len() - 1;
        match side {
            Side::Left => (node.premises[0], node.premises[2..2 + k].to_vec()),
            Side::Right => (node.premises[1], node.premises[2 + k..2 + 2 * k].to_vec()),
            Side::Main => panic!("a ⊥-box has no main content"),
        }
    }

    /// Deletes a node and its conclusion edges. Premise edges are detached.
    pub fn delete_node(&mut self, n: NodeId) {
        let node = self.nodes[n].take().unwrap_or_else(|| panic!("node {n} was deleted"));
        for e in node.conclusions {
            self.edges[e] = None;
        }
        for e in node.premises {
            if let Some(edge) = self.edges[e].as_mut() {
                edge.tgt = None;
            }
        }
    }

    pub fn delete_edge(&mut self, e: EdgeId) {
        self.edges[e] = None;
    }

    /// Deletes box `b`, its whole content, and the box's conclusions.
    pub fn delete_box(&mut self, b: NodeId) {
        for n in self.descendants(b, None) {
            self.delete_node(n);
        }
        self.delete_node(b);
    }

    /// Lets `keep` take the place of `from` as a premise of `from`'s target
    /// (or as a conclusion of the net), then deletes `from`.
    pub fn redirect(&mut self, keep: EdgeId, from: EdgeId) {
        let tgt = self.edge(from).tgt;
        match tgt {
            Some(t) => {
                let slot = self.node(t).premises.iter().position(|p| *p == from).expect("premise present");
                self.node_mut(t).premises[slot] = keep;
            }
            None => {
                let slot = self.conclusions.iter().position(|c| *c == from).expect("dangling edge is a conclusion");
                self.conclusions[slot] = keep;
            }
        }
        self.edge_mut(keep).tgt = tgt;
        self.edges[from] = None;
    }

    /// Adds a cut on `a` and `b` at `place`.
    pub fn add_cut(&mut self, place: Place, a: EdgeId, b: EdgeId) -> NodeId {
        let c = self.add_node(NodeKind::Cut, place);
        self.plug(a, c);
        self.plug(b, c);
        c
    }

    /// Moves every node placed directly in `(b, side)` to `place`.
    pub fn lift_content(&mut self, b: NodeId, side: Side, place: Place) {
        for slot in self.nodes.iter_mut().flatten() {
            if slot.place == Place::In(b, side) {
                slot.place = place;
            }
        }
    }

    /// Duplicates box `b` with its content. The copy's conclusions are new
    /// dangling edges that the caller must plug or register.
    pub fn copy_box(&mut self, b: NodeId) -> NodeId {
        let mut inside = self.descendants(b, None);
        inside.push(b);
        let mut map = BTreeMap::new();
        for n in &inside {
            let old = self.node(*n);
            let (kind, place) = (old.kind.clone(), old.place);
            map.insert(*n, self.add_node(kind, place));
        }
        for n in &inside {
            let new = map[n];
            if let Place::In(p, s) = self.node(new).place {
                if let Some(np) = map.get(&p) {
                    self.node_mut(new).place = Place::In(*np, s);
                }
            }
        }
        let mut edge_map = BTreeMap::new();
        for n in &inside {
            for e in self.node(*n).conclusions.clone() {
                let ty = self.ty(e).clone();
                edge_map.insert(e, self.add_edge(map[n], ty));
            }
        }
        for n in &inside {
            for e in self.node(*n).premises.clone() {
                let ne = edge_map[&e];
                self.plug(ne, map[n]);
            }
        }
        map[&b]
    }

    /// Nodes placed exactly at `place`, in id order.
    pub fn nodes_at(&self, place: Place) -> Vec<NodeId> {
        self.node_ids().filter(|n| self.node(*n).place == place).collect()
    }

    /// Nodes at depth 0.
    pub fn surface_nodes(&self) -> Vec<NodeId> {
        self.nodes_at(Place::Surface)
    }

    /// A compacted copy whose node and edge numbering follows a traversal
    /// from the conclusions, together with the old-to-new node map. Nets
    /// equal up to renumbering get equal canonical forms.
    pub fn canonical(&self) -> (Net, BTreeMap<NodeId, NodeId>) {
        enum Item {
            Node(NodeId),
            Edge(EdgeId),
        }
        let mut node_map: BTreeMap<NodeId, NodeId> = BTreeMap::new();
        let mut edge_map: BTreeMap<EdgeId, EdgeId> = BTreeMap::new();
        let mut node_order = Vec::new();
        let mut edge_order = Vec::new();
        let mut stack: Vec<Item> = Vec::new();
        let roots: Vec<Item> =
            self.conclusions.iter().map(|e| Item::Edge(*e)).chain(self.node_ids().map(Item::Node)).collect();
        for root in roots {
            stack.push(root);
            while let Some(item) = stack.pop() {
                match item {
                    Item::Edge(e) => {
                        if edge_map.contains_key(&e) {
                            continue;
                        }
                        edge_map.insert(e, edge_order.len());
                        edge_order.push(e);
                        let edge = self.edge(e);
                        if let Some(t) = edge.tgt {
                            stack.push(Item::Node(t));
                        }
                        stack.push(Item::Node(edge.src));
                    }
                    Item::Node(n) => {
                        if node_map.contains_key(&n) {
                            continue;
                        }
                        node_map.insert(n, node_order.len());
                        node_order.push(n);
                        let node = self.node(n);
                        if let Place::In(b, _) = node.place {
                            stack.push(Item::Node(b));
                        }
                        for e in node.conclusions.iter().rev() {
                            stack.push(Item::Edge(*e));
                        }
                        for e in node.premises.iter().rev() {
                            stack.push(Item::Edge(*e));
                        }
                    }
                }
            }
        }
        let nodes = node_order
            .iter()
            .map(|n| {
                let old = self.node(*n);
                Some(Node {
                    kind: old.kind.clone(),
                    premises: old.premises.iter().map(|e| edge_map[e]).collect(),
                    conclusions: old.conclusions.iter().map(|e| edge_map[e]).collect(),
                    place: match old.place {
                        Place::Surface => Place::Surface,
                        Place::In(b, s) => Place::In(node_map[&b], s),
                    },
                })
            })
            .collect();
        let edges = edge_order
            .iter()
            .map(|e| {
                let old = self.edge(*e);
                Some(Edge { ty: old.ty.clone(), src: node_map[&old.src], tgt: old.tgt.map(|t| node_map[&t]) })
            })
            .collect();
        let net = Net { nodes, edges, conclusions: self.conclusions.iter().map(|e| edge_map[e]).collect() };
        (net, node_map)
    }

    /// Checks the typing and wiring constraints of every node and edge.
    pub fn validate(&self) -> Result<(), String> {
        let mut dangling: BTreeSet<EdgeId> = BTreeSet::new();
        for e in self.edge_ids() {
            let edge = self.edge(e);
            let src = self.try_node(edge.src).ok_or(format!("edge {e} has a deleted source"))?;
            if !src.conclusions.contains(&e) {
                return Err(format!("edge {e} missing from the conclusions of node {}", edge.src));
            }
            match edge.tgt {
                Some(t) => {
                    let tgt = self.try_node(t).ok_or(format!("edge {e} has a deleted target"))?;
                    if tgt.premises.iter().filter(|p| **p == e).count() != 1 {
                        return Err(format!("edge {e} is not a premise of node {t} exactly once"));
                    }
                }
                None => {
                    dangling.insert(e);
                }
            }
        }
        let listed: BTreeSet<EdgeId> = self.conclusions.iter().copied().collect();
        if listed.len() != self.conclusions.len() || listed != dangling {
            return Err(format!("net conclusions {:?} differ from dangling edges {dangling:?}", self.conclusions));
        }
        for e in &self.conclusions {
            if !self.is_surface(self.src(*e)) {
                return Err(format!("conclusion {e} is not at the surface"));
            }
        }
        for n in self.node_ids() {
            self.validate_node(n).map_err(|m| format!("node {n} ({}): {m}", self.kind(n).name()))?;
        }
        Ok(())
    }

    fn validate_node(&self, n: NodeId) -> Result<(), String> {
        let node = self.node(n);
        let tys = |es: &[EdgeId]| -> Vec<Formula> { es.iter().map(|e| self.ty(*e).clone()).collect() };
        let (ps, cs) = (tys(&node.premises), tys(&node.conclusions));
        let shape = |np: usize, nc: usize| -> Result<(), String> {
            if ps.len() == np && cs.len() == nc {
                Ok(())
            } else {
                Err(format!("expected {np} premises and {nc} conclusions, found {} and {}", ps.len(), cs.len()))
            }
        };
        let check = |ok: bool, what: &str| if ok { Ok(()) } else { Err(format!("ill-typed: {what}")) };
        if let Place::In(b, s) = node.place {
            let owner = self.try_node(b).ok_or("enclosing box was deleted")?;
            let side_ok = match owner.kind {
                NodeKind::Bang | NodeKind::Y => s == Side::Main,
                NodeKind::BotBox => s != Side::Main,
                _ => false,
            };
            check(side_ok, "placed inside a non-box or on a wrong side")?;
        }
        if !node.kind.is_box() {
            for e in &node.premises {
                check(self.node(self.src(*e)).place == node.place, "premise crosses a box border")?;
            }
        }
        match &node.kind {
            NodeKind::Ax => {
                shape(0, 2)?;
                check(cs[1] == cs[0].neg(), "axiom conclusions are not dual")
            }
            NodeKind::Cut => {
                shape(2, 0)?;
                check(ps[1] == ps[0].neg(), "cut premises are not dual")
            }
            NodeKind::One => {
                shape(0, 1)?;
                check(cs[0] == Formula::One, "one node conclusion")
            }
            NodeKind::Bot => {
                shape(0, 1)?;
                check(cs[0] == Formula::Bot, "bot node conclusion")?;
                let tgt = self.edge(node.conclusions[0]).tgt.ok_or("bot node conclusion must enter its box")?;
                check(*self.kind(tgt) == NodeKind::BotBox, "bot node outside a ⊥-box")
            }
            NodeKind::Tensor => {
                shape(2, 1)?;
                check(cs[0] == Formula::tensor(ps[0].clone(), ps[1].clone()), "tensor")
            }
            NodeKind::Par => {
                shape(2, 1)?;
                check(cs[0] == Formula::par(ps[0].clone(), ps[1].clone()), "par")
            }
            NodeKind::Der => {
                shape(1, 1)?;
                check(cs[0] == Formula::why_not(ps[0].clone()), "dereliction")
            }
            NodeKind::Weak => {
                shape(0, 1)?;
                check(matches!(cs[0], Formula::WhyNot(_)), "weakening")
            }
            NodeKind::Contr => {
                shape(2, 1)?;
                check(matches!(cs[0], Formula::WhyNot(_)) && ps[0] == cs[0] && ps[1] == cs[0], "contraction")
            }
            NodeKind::Sync(_) => {
                check(ps == cs, "sync premises and conclusions differ")?;
                check(ps.iter().all(Formula::is_positive), "sync on a negative formula")
            }
            NodeKind::Bang | NodeKind::Y => {
                let off = if node.kind == NodeKind::Y { 2 } else { 1 };
                check(ps.len() >= off && cs.len() + off == ps.len() + 1, "exponential box shape")?;
                check(cs[0] == Formula::of_course(ps[0].clone()), "principal door")?;
                if off == 2 {
                    check(ps[1] == Formula::why_not(ps[0].neg()), "recursive door")?;
                }
                for j in 1..cs.len() {
                    check(matches!(cs[j], Formula::WhyNot(_)) && ps[j + off - 1] == cs[j], "auxiliary door")?;
                }
                for e in &node.premises {
                    check(self.node(self.src(*e)).place == Place::In(n, Side::Main), "door premise from outside")?;
                }
                Ok(())
            }
            NodeKind::BotBox => {
                let k = cs.len().saturating_sub(1);
                check(k >= 1 && ps.len() == 2 + 2 * k, "⊥-box shape")?;
                check(cs[0] == Formula::Bot && ps[0] == Formula::Bot && ps[1] == Formula::Bot, "⊥-box principal")?;
                for i in 0..k {
                    check(ps[2 + i] == cs[1 + i] && ps[2 + k + i] == cs[1 + i], "⊥-box auxiliary door")?;
                }
                let (bl, left) = self.bot_side(n, Side::Left);
                let (br, right) = self.bot_side(n, Side::Right);
                check(
                    *self.kind(self.src(bl)) == NodeKind::Bot && *self.kind(self.src(br)) == NodeKind::Bot,
                    "bot roots",
                )?;
                for e in std::iter::once(bl).chain(left) {
                    check(self.node(self.src(e)).place == Place::In(n, Side::Left), "left door premise")?;
                }
                for e in std::iter::once(br).chain(right) {
                    check(self.node(self.src(e)).place == Place::In(n, Side::Right), "right door premise")?;
                }
                Ok(())
            }
        }
    }

    /// Structured text: the conclusions, then one line per node, with box
    /// contents indented under their box.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let concl: Vec<String> = self.conclusions.iter().map(|e| format!("e{e}:{}", self.ty(*e))).collect();
        let _ = writeln!(out, "conclusions: {}", concl.join(" "));
        self.dump_level(Place::Surface, 0, &mut out);
        out
    }

    fn dump_level(&self, place: Place, indent: usize, out: &mut String) {
        let pad = "  ".repeat(indent);
        for n in self.nodes_at(place) {
            let node = self.node(n);
            let list = |es: &[EdgeId]| es.iter().map(|e| format!("e{e}:{}", self.ty(*e))).collect::<Vec<_>>().join(" ");
            let _ = writeln!(
                out,
                "{pad}n{n} {} [{}] -> [{}]",
                node.kind.name(),
                list(&node.premises),
                list(&node.conclusions)
            );
            let sides: &[Side] = match node.kind {
                NodeKind::Bang | NodeKind::Y => &[Side::Main],
                NodeKind::BotBox => &[Side::Left, Side::Right],
                _ => &[],
            };
            for s in sides {
                let _ = writeln!(out, "{pad}  {s:?} {{");
                self.dump_level(Place::In(n, *s), indent + 2, out);
                let _ = writeln!(out, "{pad}  }}");
            }
        }
    }
}
