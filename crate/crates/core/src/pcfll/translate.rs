//! Translation of typed terms to program nets.
//!
//! Types map to formulas by `α ↦ 1`, `A ⊸ B ↦ A^⊥ ⅋ B`, `A ⊗ B ↦ A ⊗ B`
//! and `!A ↦ !A`. A term of type `B` with free variables `x_i : A_i`
//! becomes a net with conclusions `A_i^⊥` and `B`, except for variables
//! bound to addresses, which become active `one` nodes.
//!
//! * A variable is an axiom, followed by `?d` when a `!` variable is used
//!   linearly.
//! * `λx.M` is a `⅋` between the occurrences of `x` and `M`.
//! * `M N` cuts `M` against `N ⊗ B^⊥` where `B` comes from a fresh axiom.
//! * Pairs are `⊗`; `let <x, y> = M in N` cuts `M` against a `⅋` of the
//!   occurrences of `x` and `y`.
//! * `new` is an inactive `one` node.
//! * A constant of arity `n` is an `n`-ary sync node between `n` axioms,
//!   read as a function from `1^{⊗n}` to `1^{⊗n}`.
//! * `if P then M else N` is a ⊥-box holding `N` on the left and `M` on the
//!   right, its principal door cut against `P`.
//! * Promoted values are `!`-boxes; `letrec` is a Y-box whose recursive
//!   door collects the recursive calls.
//! * Occurrences of a `!` variable are gathered by `?c` trees, or a `?w`
//!   when there are none.

use std::collections::BTreeMap;

use thiserror::Error;

use super::{elaborate, Binding, Closure, Kind, Term, Type, TypeError, Typed, VarMode};
use crate::memory::{MemoryStructure, OpLabel};
use crate::program_nets::{Input, ProgramNet};
use crate::smeyll_nets::{EdgeId, Formula, Net, NodeId, NodeKind, Place, Side};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum TranslateError {
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error("free variable `{0}` is neither an address nor listed as a conclusion")]
    Unlisted(String),
    #[error("translation produced an invalid net: {0}")]
    Invalid(String),
}

/// The formula interpreting a type.
pub fn type_formula(t: &Type) -> Formula {
    match t {
        Type::Base => Formula::One,
        Type::Lolli(a, b) => Formula::par(type_formula(a).neg(), type_formula(b)),
        Type::Tensor(a, b) => Formula::tensor(type_formula(a), type_formula(b)),
        Type::Bang(a) => Formula::of_course(type_formula(a)),
    }
}

/// Translates `t`. Free variables named in `conclusions` become the first
/// conclusions of the net, in order, followed by the result. Address
/// variables become `one` nodes, returned by name.
pub fn translate(t: &Typed, conclusions: &[String]) -> Result<(Net, BTreeMap<String, NodeId>), TranslateError> {
    let mut b = Builder { net: Net::new(), addresses: BTreeMap::new() };
    let (result, mut occ) = b.build(t, Place::Surface);
    let mut concl = Vec::new();
    for x in conclusions {
        let (ty, es) = occ.remove(x).ok_or_else(|| TranslateError::Unlisted(x.clone()))?;
        concl.push(b.gather(es, &ty, Place::Surface));
    }
    if let Some(x) = occ.keys().next() {
        return Err(TranslateError::Unlisted(x.clone()));
    }
    concl.push(result);
    b.net.conclusions = concl;
    b.net.validate().map_err(TranslateError::Invalid)?;
    Ok((b.net, b.addresses))
}

/// Types and translates a closure into a program net: address variables
/// become active `one` nodes bound to their addresses.
pub fn translate_closure<S: MemoryStructure>(
    ms: &S,
    cl: &Closure<S::Mem>,
    ops: &[OpLabel],
) -> Result<ProgramNet<S::Mem>, TranslateError> {
    let ctx: Vec<(String, Binding)> = cl.ind.keys().map(|x| (x.clone(), Binding::Address)).collect();
    let typed = elaborate(&cl.term, &ctx, ops)?;
    let (net, ones) = translate(&typed, &[])?;
    let mut pn = ProgramNet::new(net, cl.memory.clone());
    for (x, n) in ones {
        pn.ind.insert(Input::One(n), cl.ind[&x]);
    }
    Ok(crate::program_nets::NetSystem::new(ms).canonicalize(&pn))
}

/// The occurrence edges of each free variable, with its binder type.
type Occurrences = BTreeMap<String, (Type, Vec<EdgeId>)>;

struct Builder {
    net: Net,
    addresses: BTreeMap<String, NodeId>,
}

fn merge(mut a: Occurrences, b: Occurrences) -> Occurrences {
    for (x, (ty, es)) in b {
        a.entry(x).or_insert_with(|| (ty, Vec::new())).1.extend(es);
    }
    a
}

impl Builder {
    fn node(&mut self, kind: NodeKind, place: Place, premises: &[EdgeId], ty: Formula) -> EdgeId {
        let n = self.net.add_node(kind, place);
        for p in premises {
            self.net.plug(*p, n);
        }
        self.net.add_edge(n, ty)
    }

    fn axiom(&mut self, ty: Formula, place: Place) -> (EdgeId, EdgeId) {
        let n = self.net.add_node(NodeKind::Ax, place);
        let a = self.net.add_edge(n, ty.clone());
        let b = self.net.add_edge(n, ty.neg());
        (a, b)
    }

    fn tensor(&mut self, a: EdgeId, b: EdgeId, place: Place) -> EdgeId {
        let ty = Formula::tensor(self.net.ty(a).clone(), self.net.ty(b).clone());
        self.node(NodeKind::Tensor, place, &[a, b], ty)
    }

    fn par(&mut self, a: EdgeId, b: EdgeId, place: Place) -> EdgeId {
        let ty = Formula::par(self.net.ty(a).clone(), self.net.ty(b).clone());
        self.node(NodeKind::Par, place, &[a, b], ty)
    }

    /// One edge of type `binder^⊥` standing for all the occurrences `es`.
    fn gather(&mut self, es: Vec<EdgeId>, binder: &Type, place: Place) -> EdgeId {
        let ty = type_formula(binder).neg();
        match es.len() {
            0 => self.node(NodeKind::Weak, place, &[], ty),
            _ => {
                let mut it = es.into_iter();
                let first = it.next().expect("non-empty");
                it.fold(first, |acc, e| self.node(NodeKind::Contr, place, &[acc, e], ty.clone()))
            }
        }
    }

    fn take(&mut self, occ: &mut Occurrences, x: &str, binder: &Type, place: Place) -> EdgeId {
        let es = occ.remove(x).map(|(_, es)| es).unwrap_or_default();
        self.gather(es, binder, place)
    }

    /// Closes exponential box `bx`: plugs the `leading` content premises,
    /// adds the principal door of type `principal`, and routes every
    /// remaining free variable through an auxiliary door.
    fn close_box(
        &mut self,
        bx: NodeId,
        leading: &[EdgeId],
        principal: Formula,
        occ: Occurrences,
    ) -> (EdgeId, Occurrences) {
        let inside = Place::In(bx, Side::Main);
        let mut aux = Vec::new();
        for (x, (binder, es)) in occ {
            let e = self.gather(es, &binder, inside);
            aux.push((x, binder, e));
        }
        for p in leading {
            self.net.plug(*p, bx);
        }
        let door = self.net.add_edge(bx, principal);
        let mut outer = Occurrences::new();
        for (x, binder, e) in aux {
            self.net.plug(e, bx);
            let c = self.net.add_edge(bx, self.net.ty(e).clone());
            outer.insert(x, (binder, vec![c]));
        }
        (door, outer)
    }

    fn build(&mut self, t: &Typed, place: Place) -> (EdgeId, Occurrences) {
        match &t.kind {
            Kind::Var { name, binder } => {
                let mode = t.mode().expect("variables have a mode");
                if mode == VarMode::Address {
                    let n = self.net.add_node(NodeKind::One, place);
                    self.addresses.insert(name.clone(), n);
                    return (self.net.add_edge(n, Formula::One), Occurrences::new());
                }
                let binder = binder.clone().expect("non-address variables have a binder");
                let (r, back) = self.axiom(type_formula(&t.ty), place);
                let back = match mode {
                    VarMode::Derelict => {
                        let ty = Formula::why_not(self.net.ty(back).clone());
                        self.node(NodeKind::Der, place, &[back], ty)
                    }
                    _ => back,
                };
                (r, Occurrences::from([(name.clone(), (binder, vec![back]))]))
            }
            Kind::Lam { var, var_ty, body } => {
                let (r, mut occ) = self.build(body, place);
                let x = self.take(&mut occ, var, var_ty, place);
                (self.par(x, r, place), occ)
            }
            Kind::App(m, n) => {
                let (f, o1) = self.build(m, place);
                let (a, o2) = self.build(n, place);
                let (r, back) = self.axiom(type_formula(&t.ty), place);
                let arg = self.tensor(a, back, place);
                self.net.add_cut(place, f, arg);
                (r, merge(o1, o2))
            }
            Kind::Pair(m, n) => {
                let (a, o1) = self.build(m, place);
                let (b, o2) = self.build(n, place);
                (self.tensor(a, b, place), merge(o1, o2))
            }
            Kind::LetPair { x, y, x_ty, y_ty, bound, body } => {
                let (e, o1) = self.build(bound, place);
                let (r, mut o2) = self.build(body, place);
                let ex = self.take(&mut o2, x, x_ty, place);
                let ey = self.take(&mut o2, y, y_ty, place);
                let p = self.par(ex, ey, place);
                self.net.add_cut(place, e, p);
                (r, merge(o1, o2))
            }
            Kind::LetRec { f, x, f_ty, body, rest } => {
                let Type::Bang(fun) = f_ty else { unreachable!("letrec binds a banged function") };
                let Type::Lolli(x_ty, _) = &**fun else { unreachable!("letrec binds a function") };
                let yb = self.net.add_node(NodeKind::Y, place);
                let inside = Place::In(yb, Side::Main);
                let (r, mut occ) = self.build(body, inside);
                let ex = self.take(&mut occ, x, x_ty, inside);
                let content = self.par(ex, r, inside);
                let rec = self.take(&mut occ, f, f_ty, inside);
                let (principal, outer) = self.close_box(yb, &[content, rec], type_formula(f_ty), occ);
                let (res, mut occ_rest) = self.build(rest, place);
                let calls = self.take(&mut occ_rest, f, f_ty, place);
                self.net.add_cut(place, principal, calls);
                (res, merge(outer, occ_rest))
            }
            Kind::New => {
                let n = self.net.add_node(NodeKind::One, place);
                (self.net.add_edge(n, Formula::One), Occurrences::new())
            }
            Kind::Const { name, arity } => {
                let s = self.net.add_node(NodeKind::Sync(name.clone()), place);
                let mut bots = Vec::new();
                let mut outs = Vec::new();
                for _ in 0..*arity {
                    let (one, bot) = self.axiom(Formula::One, place);
                    self.net.plug(one, s);
                    bots.push(bot);
                }
                for _ in 0..*arity {
                    outs.push(self.net.add_edge(s, Formula::One));
                }
                let fold = |b: &mut Builder, es: Vec<EdgeId>, tensor: bool| {
                    let mut it = es.into_iter().rev();
                    let last = it.next().expect("constants have a positive arity");
                    it.fold(last, |acc, e| if tensor { b.tensor(e, acc, place) } else { b.par(e, acc, place) })
                };
                let input = fold(self, bots, false);
                let output = fold(self, outs, true);
                (self.par(input, output, place), Occurrences::new())
            }
            Kind::If { guard, then_, else_ } => {
                let (g, occ) = self.build(guard, place);
                let bb = self.net.add_node(NodeKind::BotBox, place);
                let mut sides = Vec::new();
                for (side, branch) in [(Side::Left, else_), (Side::Right, then_)] {
                    let inside = Place::In(bb, side);
                    let bot = self.node(NodeKind::Bot, inside, &[], Formula::Bot);
                    let (r, inner) = self.build(branch, inside);
                    debug_assert!(inner.is_empty(), "branches are closed");
                    sides.push((bot, r));
                }
                for e in [sides[0].0, sides[1].0, sides[0].1, sides[1].1] {
                    self.net.plug(e, bb);
                }
                let principal = self.net.add_edge(bb, Formula::Bot);
                let result = self.net.add_edge(bb, type_formula(&t.ty));
                self.net.add_cut(place, g, principal);
                (result, occ)
            }
            Kind::Promote(v) => {
                let bx = self.net.add_node(NodeKind::Bang, place);
                let inside = Place::In(bx, Side::Main);
                let (r, occ) = self.build(v, inside);
                let (principal, outer) = self.close_box(bx, &[r], type_formula(&t.ty), occ);
                (principal, outer)
            }
        }
    }
}

/// Parses, types and translates a closed program.
pub fn translate_program(src: &Term, ops: &[OpLabel]) -> Result<Net, TranslateError> {
    let typed = elaborate(src, &[], ops)?;
    Ok(translate(&typed, &[])?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pcfll::parse_term;
    use crate::smeyll_nets::check_correct;

    fn ops() -> Vec<OpLabel> {
        vec![OpLabel::new("H", 1), OpLabel::new("X", 1), OpLabel::new("CNOT", 2)]
    }

    fn net_of(src: &str) -> Net {
        let t = parse_term(src, &["H", "X", "CNOT"]).unwrap();
        let net = translate_program(&t, &ops()).unwrap();
        check_correct(&net).unwrap();
        net
    }

    fn count(net: &Net, kind: &NodeKind) -> usize {
        net.node_ids().filter(|n| net.kind(*n) == kind).count()
    }

    #[test]
    fn type_map() {
        let t = Type::lolli(Type::bang(Type::lolli(Type::Base, Type::Base)), Type::base_tuple(2));
        let f = type_formula(&t);
        let fun = Formula::par(Formula::Bot, Formula::One);
        assert_eq!(f, Formula::par(Formula::why_not(fun.neg()), Formula::tensor(Formula::One, Formula::One)));
    }

    #[test]
    fn linear_variable_is_an_axiom() {
        let ty = Type::lolli(Type::Base, Type::Base);
        let typed = elaborate(&Term::var("x"), &[("x".into(), Binding::Typed(ty.clone()))], &[]).unwrap();
        let (net, _) = translate(&typed, &["x".to_string()]).unwrap();
        assert_eq!(net.node_count(), 1);
        assert_eq!(*net.ty(net.conclusions[0]), type_formula(&ty).neg());
        assert_eq!(*net.ty(net.conclusions[1]), type_formula(&ty));
    }

    #[test]
    fn new_is_an_inactive_one() {
        let net = net_of("new");
        assert_eq!(net.node_count(), 1);
        assert_eq!(*net.kind(net.src(net.conclusions[0])), NodeKind::One);
    }

    #[test]
    fn recursive_coin_has_a_y_box_around_a_bot_box() {
        let net = net_of("letrec f x = (if x then \\g. new else \\g. g (H new)) f in f (H new)");
        let y = net.node_ids().find(|n| *net.kind(*n) == NodeKind::Y).unwrap();
        assert_eq!(*net.ty(net.principal(y)), Formula::of_course(Formula::par(Formula::Bot, Formula::One)));
        let bb = net.node_ids().find(|n| *net.kind(*n) == NodeKind::BotBox).unwrap();
        assert!(net.is_inside(bb, y, None));
        assert_eq!(count(&net, &NodeKind::Weak), 1);
        assert_eq!(count(&net, &NodeKind::Sync("H".into())), 2);
        assert_eq!(net.conclusions.len(), 1);
        assert_eq!(*net.ty(net.conclusions[0]), Formula::One);
    }

    #[test]
    fn duplication_uses_contraction() {
        let net = net_of("(\\g. if g (g new) then new else X new) (\\x. H x)");
        assert_eq!(count(&net, &NodeKind::Contr), 1);
        assert_eq!(count(&net, &NodeKind::Der), 2);
        assert_eq!(count(&net, &NodeKind::Bang), 1);
    }

    #[test]
    fn closures_bind_their_addresses() {
        use crate::memory::IntRegisters;
        let cl = Closure {
            term: Term::pair(Term::var("%0"), Term::New),
            ind: BTreeMap::from([("%0".to_string(), 4)]),
            memory: crate::memory::IntMemory::default(),
        };
        let pn = translate_closure(&IntRegisters, &cl, &[]).unwrap();
        assert_eq!(pn.ind.len(), 1);
        assert_eq!(pn.ind.values().copied().collect::<Vec<_>>(), vec![0]);
    }
}
