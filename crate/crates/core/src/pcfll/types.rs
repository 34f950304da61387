//! Linear typing.
//!
//! Terms carry no annotations, so types are inferred. A type is a shape
//! (base, function or tensor) together with a boolean flag telling whether
//! it sits under `!`. Shapes are solved by unification; flags are solved as
//! the least assignment satisfying a set of Horn clauses:
//!
//! * a variable used other than exactly once has a `!` binder;
//! * a use of a variable under `!` requires its binder to be under `!`;
//! * a promoted value requires every free variable to be bound under `!`;
//! * the function of an application, the guard of a conditional, the term
//!   destructured by `let` and pairs are never under `!`.
//!
//! Only function types may be promoted. The result of inference is an
//! elaborated tree in which promotions and variable modes (linear use,
//! dereliction, passing a `!` variable along, memory address) are explicit.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::{Term, Type};
use crate::memory::OpLabel;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum TypeError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("unknown constant `{0}`")]
    UnknownConstant(String),
    #[error("linear variable `{0}` must be used exactly once")]
    Linearity(String),
    #[error("the branches of a conditional must be closed, found free {0:?}")]
    OpenBranch(Vec<String>),
    #[error("type mismatch: expected {expected}, found {found}")]
    Mismatch { expected: String, found: String },
    #[error("cyclic type")]
    Cyclic,
    #[error("{0} cannot be duplicated or discarded")]
    NotDuplicable(String),
}

/// How a variable occurrence consumes its binder.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarMode {
    /// Linear binder, linear use.
    Linear,
    /// `!A` binder used at `A`.
    Derelict,
    /// `!A` binder used at `!A`.
    Pass,
    /// A variable bound to a memory address.
    Address,
}

/// A term annotated with types. Generic in the type representation so
/// that the same tree serves during and after inference.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Elab<T> {
    pub ty: T,
    pub kind: Kind<T>,
}

pub type Typed = Elab<Type>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Kind<T> {
    /// `binder` is `None` for address variables.
    Var {
        name: String,
        binder: Option<T>,
    },
    Lam {
        var: String,
        var_ty: T,
        body: Box<Elab<T>>,
    },
    App(Box<Elab<T>>, Box<Elab<T>>),
    Pair(Box<Elab<T>>, Box<Elab<T>>),
    LetPair {
        x: String,
        y: String,
        x_ty: T,
        y_ty: T,
        bound: Box<Elab<T>>,
        body: Box<Elab<T>>,
    },
    /// `f_ty` is the (banged) type of `f`.
    LetRec {
        f: String,
        x: String,
        f_ty: T,
        body: Box<Elab<T>>,
        rest: Box<Elab<T>>,
    },
    New,
    Const {
        name: String,
        arity: usize,
    },
    If {
        guard: Box<Elab<T>>,
        then_: Box<Elab<T>>,
        else_: Box<Elab<T>>,
    },
    /// A value lifted under `!`.
    Promote(Box<Elab<T>>),
}

impl Typed {
    pub fn mode(&self) -> Option<VarMode> {
        match &self.kind {
            Kind::Var { binder: None, .. } => Some(VarMode::Address),
            Kind::Var { binder: Some(b), .. } => Some(match (b.is_linear(), self.ty.is_linear()) {
                (true, _) => VarMode::Linear,
                (false, true) => VarMode::Derelict,
                (false, false) => VarMode::Pass,
            }),
            _ => None,
        }
    }

    /// Free variables, with addresses and binders included.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect(&mut Vec::new(), &mut out);
        out
    }

    fn collect(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        let under = |names: &[&String], t: &Typed, bound: &mut Vec<String>, out: &mut BTreeSet<String>| {
            let n = bound.len();
            bound.extend(names.iter().map(|s| (*s).clone()));
            t.collect(bound, out);
            bound.truncate(n);
        };
        match &self.kind {
            Kind::Var { name, .. } => {
                if !bound.contains(name) {
                    out.insert(name.clone());
                }
            }
            Kind::Lam { var, body, .. } => under(&[var], body, bound, out),
            Kind::App(m, n) | Kind::Pair(m, n) => {
                m.collect(bound, out);
                n.collect(bound, out);
            }
            Kind::LetPair { x, y, bound: m, body, .. } => {
                m.collect(bound, out);
                under(&[x, y], body, bound, out);
            }
            Kind::LetRec { f, x, body, rest, .. } => {
                under(&[f, x], body, bound, out);
                under(&[f], rest, bound, out);
            }
            Kind::New | Kind::Const { .. } => {}
            Kind::If { guard, then_, else_ } => {
                guard.collect(bound, out);
                then_.collect(bound, out);
                else_.collect(bound, out);
            }
            Kind::Promote(v) => v.collect(bound, out),
        }
    }
}

/// What a context entry binds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Binding {
    Typed(Type),
    /// A base-typed variable standing for a memory address.
    Address,
}

/// Infers the type of `term` under `ctx` and elaborates it. `ops` lists the
/// memory operations usable as constants.
pub fn elaborate(term: &Term, ctx: &[(String, Binding)], ops: &[OpLabel]) -> Result<Typed, TypeError> {
    let mut inf = Infer::default();
    let mut given = Vec::new();
    for (name, b) in ctx {
        let (ty, address) = match b {
            Binding::Typed(t) => (inf.intern_type(t), false),
            Binding::Address => (inf.intern_type(&Type::Base), true),
        };
        inf.env.push(Binder { name: name.clone(), ty, address, uses: 0 });
        given.push(name.clone());
    }
    let pre = inf.go(term, ops)?;
    for _ in &given {
        inf.pop_binder()?;
    }
    inf.solve()?;
    Ok(inf.resolve(&pre))
}

/// Returns the type of `term` under `ctx`.
pub fn typecheck(term: &Term, ctx: &[(String, Type)], ops: &[OpLabel]) -> Result<Type, TypeError> {
    let ctx: Vec<(String, Binding)> = ctx.iter().map(|(x, t)| (x.clone(), Binding::Typed(t.clone()))).collect();
    Ok(elaborate(term, &ctx, ops)?.ty)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Ty {
    b: usize,
    s: usize,
}

#[derive(Clone, Debug)]
enum Shape {
    Unknown,
    Base,
    Fun(Ty, Ty),
    Tensor(Ty, Ty),
}

struct Binder {
    name: String,
    ty: Ty,
    address: bool,
    uses: usize,
}

#[derive(Default)]
struct Infer {
    bparent: Vec<usize>,
    sparent: Vec<usize>,
    shapes: Vec<Shape>,
    all: Vec<Ty>,
    force_true: Vec<usize>,
    force_false: Vec<(usize, &'static str)>,
    implies: Vec<(usize, usize)>,
    /// Binders used other than exactly once.
    shared: Vec<(String, Ty)>,
    env: Vec<Binder>,
    truth: BTreeSet<usize>,
}

impl Infer {
    fn flag(&mut self) -> usize {
        self.bparent.push(self.bparent.len());
        self.bparent.len() - 1
    }

    fn shape(&mut self, s: Shape) -> usize {
        self.shapes.push(s);
        self.sparent.push(self.sparent.len());
        self.sparent.len() - 1
    }

    fn ty(&mut self, s: Shape) -> Ty {
        let t = Ty { b: self.flag(), s: self.shape(s) };
        self.all.push(t);
        t
    }

    fn linear(&mut self, s: Shape, why: &'static str) -> Ty {
        let t = self.ty(s);
        self.force_false.push((t.b, why));
        t
    }

    fn fresh(&mut self) -> Ty {
        self.ty(Shape::Unknown)
    }

    fn tuple(&mut self, n: usize) -> Ty {
        let base = self.linear(Shape::Base, "an operation argument");
        if n <= 1 {
            base
        } else {
            let rest = self.tuple(n - 1);
            self.linear(Shape::Tensor(base, rest), "an operation argument")
        }
    }

    fn intern_type(&mut self, t: &Type) -> Ty {
        let (bang, inner) = match t {
            Type::Bang(a) => (true, &**a),
            other => (false, other),
        };
        let shape = match inner {
            Type::Base => Shape::Base,
            Type::Lolli(a, b) => Shape::Fun(self.intern_type(a), self.intern_type(b)),
            Type::Tensor(a, b) => Shape::Tensor(self.intern_type(a), self.intern_type(b)),
            Type::Bang(_) => Shape::Unknown,
        };
        let ty = self.ty(shape);
        if bang {
            self.force_true.push(ty.b);
        } else {
            self.force_false.push((ty.b, "a variable of linear type"));
        }
        ty
    }

    fn bfind(&mut self, mut v: usize) -> usize {
        while self.bparent[v] != v {
            self.bparent[v] = self.bparent[self.bparent[v]];
            v = self.bparent[v];
        }
        v
    }

    fn sfind(&mut self, mut v: usize) -> usize {
        while self.sparent[v] != v {
            self.sparent[v] = self.sparent[self.sparent[v]];
            v = self.sparent[v];
        }
        v
    }

    fn unify(&mut self, a: Ty, b: Ty) -> Result<(), TypeError> {
        let (ra, rb) = (self.bfind(a.b), self.bfind(b.b));
        self.bparent[ra] = rb;
        self.unify_shape(a.s, b.s)
    }

    fn unify_shape(&mut self, a: usize, b: usize) -> Result<(), TypeError> {
        let (ra, rb) = (self.sfind(a), self.sfind(b));
        if ra == rb {
            return Ok(());
        }
        match (self.shapes[ra].clone(), self.shapes[rb].clone()) {
            (Shape::Unknown, _) => {
                if self.occurs(ra, rb) {
                    return Err(TypeError::Cyclic);
                }
                self.sparent[ra] = rb;
                Ok(())
            }
            (_, Shape::Unknown) => self.unify_shape(b, a),
            (Shape::Base, Shape::Base) => {
                self.sparent[ra] = rb;
                Ok(())
            }
            (Shape::Fun(a1, b1), Shape::Fun(a2, b2)) | (Shape::Tensor(a1, b1), Shape::Tensor(a2, b2)) => {
                self.sparent[ra] = rb;
                self.unify(a1, a2)?;
                self.unify(b1, b2)
            }
            _ => Err(TypeError::Mismatch { expected: self.describe(rb, 3), found: self.describe(ra, 3) }),
        }
    }

    fn occurs(&mut self, r: usize, s: usize) -> bool {
        let s = self.sfind(s);
        if s == r {
            return true;
        }
        match self.shapes[s].clone() {
            Shape::Fun(a, b) | Shape::Tensor(a, b) => self.occurs(r, a.s) || self.occurs(r, b.s),
            _ => false,
        }
    }

    fn describe(&mut self, s: usize, depth: usize) -> String {
        let s = self.sfind(s);
        if depth == 0 {
            return "…".into();
        }
        match self.shapes[s].clone() {
            Shape::Unknown => "_".into(),
            Shape::Base => "α".into(),
            Shape::Fun(a, b) => format!("({} ⊸ {})", self.describe(a.s, depth - 1), self.describe(b.s, depth - 1)),
            Shape::Tensor(a, b) => format!("({} ⊗ {})", self.describe(a.s, depth - 1), self.describe(b.s, depth - 1)),
        }
    }

    fn lookup(&self, x: &str) -> Option<usize> {
        self.env.iter().rposition(|b| b.name == x)
    }

    fn push_binder(&mut self, name: &str, ty: Ty) {
        self.env.push(Binder { name: name.to_string(), ty, address: false, uses: 0 });
    }

    fn pop_binder(&mut self) -> Result<(), TypeError> {
        let b = self.env.pop().expect("binder stack underflow");
        if b.uses != 1 {
            if b.address {
                return Err(TypeError::Linearity(b.name));
            }
            self.force_true.push(b.ty.b);
            self.shared.push((b.name, b.ty));
        }
        Ok(())
    }

    fn go(&mut self, t: &Term, ops: &[OpLabel]) -> Result<Elab<Ty>, TypeError> {
        let node = |ty, kind| Ok(Elab { ty, kind });
        match t {
            Term::Var(x) => {
                let i = self.lookup(x).ok_or_else(|| TypeError::Unbound(x.clone()))?;
                self.env[i].uses += 1;
                let binder = self.env[i].ty;
                let use_ty = Ty { b: self.flag(), s: binder.s };
                self.all.push(use_ty);
                self.implies.push((use_ty.b, binder.b));
                let binder = if self.env[i].address { None } else { Some(binder) };
                node(use_ty, Kind::Var { name: x.clone(), binder })
            }
            Term::Lam(x, body) => {
                let var_ty = self.fresh();
                self.push_binder(x, var_ty);
                let b = self.go(body, ops)?;
                self.pop_binder()?;
                let ty = self.ty(Shape::Fun(var_ty, b.ty));
                self.promotable(ty, t)?;
                node(ty, Kind::Lam { var: x.clone(), var_ty, body: Box::new(b) })
            }
            Term::App(m, n) => {
                let m = self.go(m, ops)?;
                let n = self.go(n, ops)?;
                self.force_false.push((m.ty.b, "a function in application position"));
                let (a, r) = (self.fresh(), self.fresh());
                let f = self.shape(Shape::Fun(a, r));
                self.unify_shape(m.ty.s, f)?;
                self.unify(n.ty, a)?;
                node(r, Kind::App(Box::new(m), Box::new(n)))
            }
            Term::Pair(m, n) => {
                let m = self.go(m, ops)?;
                let n = self.go(n, ops)?;
                let ty = self.linear(Shape::Tensor(m.ty, n.ty), "a pair");
                node(ty, Kind::Pair(Box::new(m), Box::new(n)))
            }
            Term::LetPair(x, y, m, n) => {
                let m = self.go(m, ops)?;
                self.force_false.push((m.ty.b, "a destructured pair"));
                let (x_ty, y_ty) = (self.fresh(), self.fresh());
                let s = self.shape(Shape::Tensor(x_ty, y_ty));
                self.unify_shape(m.ty.s, s)?;
                self.push_binder(x, x_ty);
                self.push_binder(y, y_ty);
                let n = self.go(n, ops)?;
                self.pop_binder()?;
                self.pop_binder()?;
                node(
                    n.ty,
                    Kind::LetPair { x: x.clone(), y: y.clone(), x_ty, y_ty, bound: Box::new(m), body: Box::new(n) },
                )
            }
            Term::LetRec(f, x, m, n) => {
                let (x_ty, r) = (self.fresh(), self.fresh());
                let f_ty = self.ty(Shape::Fun(x_ty, r));
                self.force_true.push(f_ty.b);
                self.push_binder(f, f_ty);
                self.push_binder(x, x_ty);
                let body = self.go(m, ops)?;
                self.unify(body.ty, r)?;
                self.pop_binder()?;
                for z in m.free_vars() {
                    if z != *f && z != *x {
                        let i = self.lookup(&z).ok_or_else(|| TypeError::Unbound(z.clone()))?;
                        let b = self.env[i].ty.b;
                        self.force_true.push(b);
                    }
                }
                let rest = self.go(n, ops)?;
                self.pop_binder()?;
                node(
                    rest.ty,
                    Kind::LetRec { f: f.clone(), x: x.clone(), f_ty, body: Box::new(body), rest: Box::new(rest) },
                )
            }
            Term::New => {
                let ty = self.linear(Shape::Base, "new");
                node(ty, Kind::New)
            }
            Term::Const(c) => {
                let arity = ops
                    .iter()
                    .find(|l| l.name == *c)
                    .map(|l| l.arity)
                    .ok_or_else(|| TypeError::UnknownConstant(c.clone()))?;
                let (a, b) = (self.tuple(arity), self.tuple(arity));
                let ty = self.ty(Shape::Fun(a, b));
                node(ty, Kind::Const { name: c.clone(), arity })
            }
            Term::If(p, m, n) => {
                let open: BTreeSet<String> = m.free_vars().into_iter().chain(n.free_vars()).collect();
                if !open.is_empty() {
                    return Err(TypeError::OpenBranch(open.into_iter().collect()));
                }
                let guard = self.go(p, ops)?;
                self.force_false.push((guard.ty.b, "a tested value"));
                let base = self.shape(Shape::Base);
                self.unify_shape(guard.ty.s, base)?;
                let m = self.go(m, ops)?;
                let n = self.go(n, ops)?;
                self.unify(m.ty, n.ty)?;
                node(m.ty, Kind::If { guard: Box::new(guard), then_: Box::new(m), else_: Box::new(n) })
            }
        }
    }

    /// Promoting the value `t` of type `ty` puts its free variables under `!`.
    fn promotable(&mut self, ty: Ty, t: &Term) -> Result<(), TypeError> {
        for z in t.free_vars() {
            let i = self.lookup(&z).ok_or_else(|| TypeError::Unbound(z.clone()))?;
            let b = self.env[i].ty.b;
            self.implies.push((ty.b, b));
        }
        Ok(())
    }

    fn is_true(&mut self, b: usize) -> bool {
        let r = self.bfind(b);
        self.truth.contains(&r)
    }

    fn solve(&mut self) -> Result<(), TypeError> {
        let mut truth = BTreeSet::new();
        for b in self.force_true.clone() {
            truth.insert(self.bfind(b));
        }
        let implies: Vec<(usize, usize)> =
            self.implies.clone().into_iter().map(|(a, b)| (self.bfind(a), self.bfind(b))).collect();
        loop {
            let before = truth.len();
            for (a, b) in &implies {
                if truth.contains(a) {
                    truth.insert(*b);
                }
            }
            if truth.len() == before {
                break;
            }
        }
        self.truth = truth;
        let false_roots: BTreeMap<usize, &'static str> =
            self.force_false.clone().into_iter().map(|(b, why)| (self.bfind(b), why)).collect();
        for (name, ty) in self.shared.clone() {
            let r = self.bfind(ty.b);
            let s = self.sfind(ty.s);
            if false_roots.contains_key(&r) || matches!(self.shapes[s], Shape::Base | Shape::Tensor(..)) {
                return Err(TypeError::Linearity(name));
            }
        }
        for (r, why) in &false_roots {
            if self.truth.contains(r) {
                return Err(TypeError::NotDuplicable((*why).to_string()));
            }
        }
        for ty in self.all.clone() {
            if !self.is_true(ty.b) {
                continue;
            }
            let s = self.sfind(ty.s);
            match self.shapes[s] {
                Shape::Unknown => {
                    let a = self.linear(Shape::Base, "a defaulted type");
                    let b = self.linear(Shape::Base, "a defaulted type");
                    self.shapes[s] = Shape::Fun(a, b);
                }
                Shape::Fun(..) => {}
                _ => return Err(TypeError::NotDuplicable(format!("a value of type {}", self.describe(s, 3)))),
            }
        }
        Ok(())
    }

    fn export_type(&mut self, t: Ty) -> Type {
        let s = self.sfind(t.s);
        let inner = match self.shapes[s].clone() {
            Shape::Unknown | Shape::Base => Type::Base,
            Shape::Fun(a, b) => Type::lolli(self.export_type(a), self.export_type(b)),
            Shape::Tensor(a, b) => Type::tensor(self.export_type(a), self.export_type(b)),
        };
        if self.is_true(t.b) {
            Type::bang(inner)
        } else {
            inner
        }
    }

    fn resolve(&mut self, e: &Elab<Ty>) -> Typed {
        let ty = self.export_type(e.ty);
        let mut sub = |x: &Elab<Ty>| Box::new(self.resolve(x));
        let kind = match &e.kind {
            Kind::Var { name, binder } => {
                let binder = binder.map(|b| self.export_type(b));
                Kind::Var { name: name.clone(), binder }
            }
            Kind::Lam { var, var_ty, body } => {
                let body = sub(body);
                Kind::Lam { var: var.clone(), var_ty: self.export_type(*var_ty), body }
            }
            Kind::App(m, n) => {
                let m = sub(m);
                Kind::App(m, sub(n))
            }
            Kind::Pair(m, n) => {
                let m = sub(m);
                Kind::Pair(m, sub(n))
            }
            Kind::LetPair { x, y, x_ty, y_ty, bound, body } => {
                let (bound, body) = (sub(bound), sub(body));
                Kind::LetPair {
                    x: x.clone(),
                    y: y.clone(),
                    x_ty: self.export_type(*x_ty),
                    y_ty: self.export_type(*y_ty),
                    bound,
                    body,
                }
            }
            Kind::LetRec { f, x, f_ty, body, rest } => {
                let (body, rest) = (sub(body), sub(rest));
                Kind::LetRec { f: f.clone(), x: x.clone(), f_ty: self.export_type(*f_ty), body, rest }
            }
            Kind::New => Kind::New,
            Kind::Const { name, arity } => Kind::Const { name: name.clone(), arity: *arity },
            Kind::If { guard, then_, else_ } => {
                let (guard, then_) = (sub(guard), sub(then_));
                Kind::If { guard, then_, else_: sub(else_) }
            }
            Kind::Promote(_) => unreachable!("promotions are introduced during resolution"),
        };
        match (&ty, &kind) {
            (Type::Bang(inner), Kind::Lam { .. } | Kind::Const { .. }) => {
                Elab { ty: ty.clone(), kind: Kind::Promote(Box::new(Elab { ty: (**inner).clone(), kind })) }
            }
            _ => Elab { ty, kind },
        }
    }
}
