//! Terms and types.

use std::collections::BTreeSet;
use std::fmt;

/// `x | λx.M | M N | ⟨M,N⟩ | let ⟨x,y⟩ = M in N | letrec f x = M in N |
/// new | c | if P then M else N`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Lam(String, Box<Term>),
    App(Box<Term>, Box<Term>),
    Pair(Box<Term>, Box<Term>),
    LetPair(String, String, Box<Term>, Box<Term>),
    LetRec(String, String, Box<Term>, Box<Term>),
    New,
    Const(String),
    If(Box<Term>, Box<Term>, Box<Term>),
}

impl Term {
    pub fn var(x: &str) -> Term {
        Term::Var(x.to_string())
    }

    pub fn lam(x: &str, body: Term) -> Term {
        Term::Lam(x.to_string(), Box::new(body))
    }

    pub fn app(m: Term, n: Term) -> Term {
        Term::App(Box::new(m), Box::new(n))
    }

    pub fn pair(m: Term, n: Term) -> Term {
        Term::Pair(Box::new(m), Box::new(n))
    }

    pub fn let_pair(x: &str, y: &str, m: Term, n: Term) -> Term {
        Term::LetPair(x.to_string(), y.to_string(), Box::new(m), Box::new(n))
    }

    pub fn letrec(f: &str, x: &str, m: Term, n: Term) -> Term {
        Term::LetRec(f.to_string(), x.to_string(), Box::new(m), Box::new(n))
    }

    pub fn ite(p: Term, m: Term, n: Term) -> Term {
        Term::If(Box::new(p), Box::new(m), Box::new(n))
    }

    /// `x | λx.M | ⟨U,V⟩ | c`.
    pub fn is_value(&self) -> bool {
        match self {
            Term::Var(_) | Term::Lam(..) | Term::Const(_) => true,
            Term::Pair(a, b) => a.is_value() && b.is_value(),
            _ => false,
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(x) => {
                if !bound.contains(x) {
                    out.insert(x.clone());
                }
            }
            Term::Lam(x, b) => {
                bound.push(x.clone());
                b.collect_free(bound, out);
                bound.pop();
            }
            Term::App(m, n) | Term::Pair(m, n) => {
                m.collect_free(bound, out);
                n.collect_free(bound, out);
            }
            Term::LetPair(x, y, m, n) => {
                m.collect_free(bound, out);
                bound.push(x.clone());
                bound.push(y.clone());
                n.collect_free(bound, out);
                bound.truncate(bound.len() - 2);
            }
            Term::LetRec(f, x, m, n) => {
                bound.push(f.clone());
                bound.push(x.clone());
                m.collect_free(bound, out);
                bound.pop();
                n.collect_free(bound, out);
                bound.pop();
            }
            Term::New | Term::Const(_) => {}
            Term::If(p, m, n) => {
                p.collect_free(bound, out);
                m.collect_free(bound, out);
                n.collect_free(bound, out);
            }
        }
    }

    /// Replaces the free occurrences of `x` by `v`. The free variables of `v`
    /// must not be bound anywhere in `self`.
    pub fn subst(&self, x: &str, v: &Term) -> Term {
        let go = |t: &Term| Box::new(t.subst(x, v));
        match self {
            Term::Var(y) if y == x => v.clone(),
            Term::Var(_) | Term::New | Term::Const(_) => self.clone(),
            Term::Lam(y, _) if y == x => self.clone(),
            Term::Lam(y, b) => Term::Lam(y.clone(), go(b)),
            Term::App(m, n) => Term::App(go(m), go(n)),
            Term::Pair(m, n) => Term::Pair(go(m), go(n)),
            Term::LetPair(a, b, m, n) => {
                let n = if a == x || b == x { n.clone() } else { go(n) };
                Term::LetPair(a.clone(), b.clone(), go(m), n)
            }
            Term::LetRec(f, y, m, n) => {
                let m = if f == x || y == x { m.clone() } else { go(m) };
                let n = if f == x { n.clone() } else { go(n) };
                Term::LetRec(f.clone(), y.clone(), m, n)
            }
            Term::If(p, m, n) => Term::If(go(p), go(m), go(n)),
        }
    }

    /// Occurrences of variables in left-to-right order, bound ones included.
    pub fn var_occurrences(&self, out: &mut Vec<String>) {
        match self {
            Term::Var(x) => out.push(x.clone()),
            Term::Lam(_, b) => b.var_occurrences(out),
            Term::App(m, n) | Term::Pair(m, n) | Term::LetPair(_, _, m, n) | Term::LetRec(_, _, m, n) => {
                m.var_occurrences(out);
                n.var_occurrences(out);
            }
            Term::New | Term::Const(_) => {}
            Term::If(p, m, n) => {
                p.var_occurrences(out);
                m.var_occurrences(out);
                n.var_occurrences(out);
            }
        }
    }

    /// Renames free variables according to `f`.
    pub fn rename_free(&self, f: &dyn Fn(&str) -> Option<String>) -> Term {
        let mut t = self.clone();
        for x in self.free_vars() {
            if let Some(y) = f(&x) {
                t = t.subst(&x, &Term::Var(y));
            }
        }
        t
    }

    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) | Term::New | Term::Const(_) => 1,
            Term::Lam(_, b) => 1 + b.size(),
            Term::App(m, n) | Term::Pair(m, n) | Term::LetPair(_, _, m, n) | Term::LetRec(_, _, m, n) => {
                1 + m.size() + n.size()
            }
            Term::If(p, m, n) => 1 + p.size() + m.size() + n.size(),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn atom(t: &Term, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match t {
                Term::Var(_) | Term::New | Term::Const(_) | Term::Pair(..) => write!(f, "{t}"),
                _ => write!(f, "({t})"),
            }
        }
        match self {
            Term::Var(x) | Term::Const(x) => f.write_str(x),
            Term::New => f.write_str("new"),
            Term::Lam(x, b) => write!(f, "\\{x}. {b}"),
            Term::App(m, n) => {
                match **m {
                    Term::App(..) => write!(f, "{m}")?,
                    _ => atom(m, f)?,
                }
                f.write_str(" ")?;
                atom(n, f)
            }
            Term::Pair(m, n) => write!(f, "<{m}, {n}>"),
            Term::LetPair(x, y, m, n) => write!(f, "let <{x}, {y}> = {m} in {n}"),
            Term::LetRec(g, x, m, n) => write!(f, "letrec {g} {x} = {m} in {n}"),
            Term::If(p, m, n) => write!(f, "if {p} then {m} else {n}"),
        }
    }
}

/// `α | A ⊸ B | A ⊗ B | !A`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Type {
    Base,
    Lolli(Box<Type>, Box<Type>),
    Tensor(Box<Type>, Box<Type>),
    Bang(Box<Type>),
}

impl Type {
    pub fn lolli(a: Type, b: Type) -> Type {
        Type::Lolli(Box::new(a), Box::new(b))
    }

    pub fn tensor(a: Type, b: Type) -> Type {
        Type::Tensor(Box::new(a), Box::new(b))
    }

    pub fn bang(a: Type) -> Type {
        Type::Bang(Box::new(a))
    }

    /// `α ⊗ (α ⊗ … α)` with `n ≥ 1` factors.
    pub fn base_tuple(n: usize) -> Type {
        assert!(n >= 1, "empty tuple type");
        (1..n).fold(Type::Base, |acc, _| Type::tensor(Type::Base, acc))
    }

    /// Types not of the form `!A`.
    pub fn is_linear(&self) -> bool {
        !matches!(self, Type::Bang(_))
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn atom(t: &Type, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match t {
                Type::Lolli(..) | Type::Tensor(..) => write!(f, "({t})"),
                _ => write!(f, "{t}"),
            }
        }
        match self {
            Type::Base => f.write_str("α"),
            Type::Lolli(a, b) => {
                atom(a, f)?;
                f.write_str(" ⊸ ")?;
                match **b {
                    Type::Lolli(..) => write!(f, "{b}"),
                    _ => atom(b, f),
                }
            }
            Type::Tensor(a, b) => {
                atom(a, f)?;
                f.write_str(" ⊗ ")?;
                atom(b, f)
            }
            Type::Bang(a) => {
                f.write_str("!")?;
                atom(a, f)
            }
        }
    }
}
