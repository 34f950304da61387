//! The abstract machine over closures: a term, a map from its free
//! variables to memory addresses, and a memory.
//!
//! Evaluation is call-by-value and left to right. Reduction contexts are
//!
//! ```text
//! C ::= [] | C N | V C | <C, N> | <V, C> | let <x, y> = C in N | if C then M else N
//! ```
//!
//! and every non-terminal closure has exactly one head redex.

use std::collections::{BTreeMap, BTreeSet};

use crate::memory::{canonical_renaming, rename_addr, Address, MemoryStructure};
use crate::pars::{Distribution, RewriteSystem, PRUNE_BELOW};

use super::Term;

/// Prefix of the variables introduced by Link. No parsed binder can start
/// with it, so substitution never captures them.
pub const ADDRESS_PREFIX: char = '%';

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Closure<M> {
    pub term: Term,
    pub ind: BTreeMap<String, Address>,
    pub memory: M,
}

impl<M> Closure<M> {
    pub fn new(term: Term, memory: M) -> Self {
        Closure { term, ind: BTreeMap::new(), memory }
    }
}

/// The kind of the head redex.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Head {
    /// `new` gets a fresh address.
    Link,
    /// A constant applied to a tuple of address variables.
    Update { name: String, vars: Vec<String> },
    /// A conditional on an address variable.
    Test { var: String },
    /// β, let-pair or letrec unfolding.
    Pure,
}

/// The head redex of `t`, as the path of child indices leading to it.
pub fn decompose(t: &Term) -> Option<(Vec<usize>, Head)> {
    let mut path = Vec::new();
    let mut cur = t;
    loop {
        let (next, i) = match cur {
            Term::New => return Some((path, Head::Link)),
            Term::LetRec(..) => return Some((path, Head::Pure)),
            Term::App(m, n) => {
                if !m.is_value() {
                    (&**m, 0)
                } else if !n.is_value() {
                    (&**n, 1)
                } else {
                    return match &**m {
                        Term::Lam(..) => Some((path, Head::Pure)),
                        Term::Const(c) => {
                            let vars = tuple_vars(n)?;
                            Some((path, Head::Update { name: c.clone(), vars }))
                        }
                        _ => None,
                    };
                }
            }
            Term::Pair(m, n) => {
                if !m.is_value() {
                    (&**m, 0)
                } else if !n.is_value() {
                    (&**n, 1)
                } else {
                    return None;
                }
            }
            Term::LetPair(_, _, m, _) => {
                if !m.is_value() {
                    (&**m, 0)
                } else if matches!(**m, Term::Pair(..)) {
                    return Some((path, Head::Pure));
                } else {
                    return None;
                }
            }
            Term::If(p, _, _) => {
                if !p.is_value() {
                    (&**p, 0)
                } else if let Term::Var(x) = &**p {
                    return Some((path, Head::Test { var: x.clone() }));
                } else {
                    return None;
                }
            }
            Term::Var(_) | Term::Lam(..) | Term::Const(_) => return None,
        };
        path.push(i);
        cur = next;
    }
}

fn tuple_vars(v: &Term) -> Option<Vec<String>> {
    match v {
        Term::Var(x) => Some(vec![x.clone()]),
        Term::Pair(a, b) => {
            let mut out = tuple_vars(a)?;
            out.extend(tuple_vars(b)?);
            Some(out)
        }
        _ => None,
    }
}

fn subterm<'t>(t: &'t Term, path: &[usize]) -> &'t Term {
    path.iter().fold(t, |cur, i| match (cur, i) {
        (Term::App(m, _) | Term::Pair(m, _) | Term::LetPair(_, _, m, _) | Term::If(m, _, _), 0) => m,
        (Term::App(_, n) | Term::Pair(_, n), 1) => n,
        _ => unreachable!("paths only follow evaluation positions"),
    })
}

fn replace(t: &Term, path: &[usize], new: Term) -> Term {
    let Some((i, rest)) = path.split_first() else { return new };
    let mut out = t.clone();
    let slot = match (&mut out, i) {
        (Term::App(m, _) | Term::Pair(m, _) | Term::LetPair(_, _, m, _) | Term::If(m, _, _), 0) => m,
        (Term::App(_, n) | Term::Pair(_, n), 1) => n,
        _ => unreachable!("paths only follow evaluation positions"),
    };
    **slot = replace(slot, rest, new);
    out
}

/// Renames free variables simultaneously.
fn rename_vars(t: &Term, map: &BTreeMap<String, String>) -> Term {
    let go = |u: &Term| Box::new(rename_vars(u, map));
    match t {
        Term::Var(x) => Term::Var(map.get(x).cloned().unwrap_or_else(|| x.clone())),
        Term::New | Term::Const(_) => t.clone(),
        Term::Lam(x, b) => Term::Lam(x.clone(), go(b)),
        Term::App(m, n) => Term::App(go(m), go(n)),
        Term::Pair(m, n) => Term::Pair(go(m), go(n)),
        Term::LetPair(x, y, m, n) => Term::LetPair(x.clone(), y.clone(), go(m), go(n)),
        Term::LetRec(f, x, m, n) => Term::LetRec(f.clone(), x.clone(), go(m), go(n)),
        Term::If(p, m, n) => Term::If(go(p), go(m), go(n)),
    }
}

/// Fires a pure head redex.
fn contract(r: &Term) -> Term {
    match r {
        Term::App(m, v) => match &**m {
            Term::Lam(x, body) => body.subst(x, v),
            _ => unreachable!("pure application redexes are β-redexes"),
        },
        Term::LetPair(x, y, m, n) => match &**m {
            Term::Pair(u, v) => n.subst(x, u).subst(y, v),
            _ => unreachable!("pure let redexes destructure pairs"),
        },
        Term::LetRec(f, x, m, n) => {
            let unfolded = Term::lam(x, Term::LetRec(f.clone(), x.clone(), m.clone(), m.clone()));
            n.subst(f, &unfolded)
        }
        _ => unreachable!("not a pure redex"),
    }
}

/// The machine as a rewrite system over a memory structure.
pub struct PcfSystem<'a, S: MemoryStructure> {
    pub ms: &'a S,
}

impl<'a, S: MemoryStructure> PcfSystem<'a, S> {
    pub fn new(ms: &'a S) -> Self {
        PcfSystem { ms }
    }

    /// The closure of a closed program with the initial memory.
    pub fn program(&self, term: Term) -> Closure<S::Mem> {
        Closure::new(term, self.ms.initial())
    }

    /// One raw step: the distribution of closures reached by firing the
    /// head redex, or `None` for terminal closures.
    pub fn step(&self, cl: &Closure<S::Mem>) -> Option<Distribution<Closure<S::Mem>>> {
        let (path, head) = decompose(&cl.term)?;
        let here = subterm(&cl.term, &path);
        let dirac = |term: Term, ind: BTreeMap<String, Address>, memory: S::Mem| {
            Some(Distribution::dirac(Closure { term, ind, memory }))
        };
        match head {
            Head::Link => {
                let name = (0..)
                    .map(|k| format!("{ADDRESS_PREFIX}{k}"))
                    .find(|x| !cl.ind.contains_key(x))
                    .expect("names are unbounded");
                let used: BTreeSet<Address> = cl.ind.values().copied().collect();
                let a = self.ms.fresh(&cl.memory, &used);
                let mut ind = cl.ind.clone();
                ind.insert(name.clone(), a);
                dirac(replace(&cl.term, &path, Term::Var(name)), ind, cl.memory.clone())
            }
            Head::Update { name, vars } => {
                let addrs: Vec<Address> = vars.iter().map(|x| cl.ind.get(x).copied()).collect::<Option<_>>()?;
                let memory = self.ms.update(&addrs, &name, &cl.memory).ok()?;
                let Term::App(_, v) = here else { unreachable!("update redexes are applications") };
                dirac(replace(&cl.term, &path, (**v).clone()), cl.ind.clone(), memory)
            }
            Head::Test { var } => {
                let a = *cl.ind.get(&var)?;
                let Term::If(_, then_, else_) = here else { unreachable!("test redexes are conditionals") };
                let mut ind = cl.ind.clone();
                ind.remove(&var);
                let mut out = Distribution::empty();
                for ((answer, m), p) in self.ms.test(a, &cl.memory) {
                    let branch = if answer { then_ } else { else_ };
                    out.add(
                        Closure { term: replace(&cl.term, &path, (**branch).clone()), ind: ind.clone(), memory: m },
                        p,
                    );
                }
                Some(out)
            }
            Head::Pure => dirac(replace(&cl.term, &path, contract(here)), cl.ind.clone(), cl.memory.clone()),
        }
    }

    /// Renames the address variables to `%0, %1, …` in order of first
    /// occurrence, and the addresses in the same order.
    pub fn canonicalize(&self, cl: &Closure<S::Mem>) -> Closure<S::Mem> {
        let mut occ = Vec::new();
        cl.term.var_occurrences(&mut occ);
        let mut order: Vec<String> = Vec::new();
        for x in occ.into_iter().chain(cl.ind.keys().cloned()) {
            if cl.ind.contains_key(&x) && !order.contains(&x) {
                order.push(x);
            }
        }
        let names: BTreeMap<String, String> =
            order.iter().enumerate().map(|(k, x)| (x.clone(), format!("{ADDRESS_PREFIX}{k}"))).collect();
        let referenced: Vec<Address> = order.iter().map(|x| cl.ind[x]).collect();
        let sigma = canonical_renaming(self.ms, &cl.memory, &referenced);
        Closure {
            term: rename_vars(&cl.term, &names),
            ind: cl.ind.iter().map(|(x, a)| (names[x].clone(), rename_addr(&sigma, *a))).collect(),
            memory: self.ms.rename(&cl.memory, &sigma),
        }
    }

    /// Classical readings of the leaves of a terminal value, left to right.
    /// Functions read as `<fun>` and anything else as `?`.
    pub fn leaves(&self, cl: &Closure<S::Mem>) -> Vec<String> {
        let mut out = Vec::new();
        self.leaves_of(cl, &cl.term, &mut out);
        out
    }

    fn leaves_of(&self, cl: &Closure<S::Mem>, t: &Term, out: &mut Vec<String>) {
        match t {
            Term::Var(x) => match cl.ind.get(x) {
                Some(a) => out.push(self.ms.readout(&cl.memory, *a)),
                None => out.push("?".into()),
            },
            Term::Pair(a, b) => {
                self.leaves_of(cl, a, out);
                self.leaves_of(cl, b, out);
            }
            Term::Lam(..) | Term::Const(_) => out.push("<fun>".into()),
            _ => out.push("?".into()),
        }
    }
}

impl<S: MemoryStructure> RewriteSystem for PcfSystem<'_, S> {
    type Element = Closure<S::Mem>;
    type Redex = Head;

    fn redexes(&self, e: &Self::Element) -> Vec<Head> {
        decompose(&e.term).map(|(_, h)| h).into_iter().collect()
    }

    fn apply(&self, e: &Self::Element, _r: &Head) -> Distribution<Self::Element> {
        let d = self.step(e).unwrap_or_else(|| panic!("closure {} has no applicable redex", e.term));
        let mut out = Distribution::empty();
        for (x, p) in d {
            out.add(self.canonicalize(&x), p);
        }
        out.prune(PRUNE_BELOW);
        out
    }

    fn is_choice(&self, _e: &Self::Element, r: &Head) -> bool {
        matches!(r, Head::Test { .. })
    }

    fn same(&self, a: &Self::Element, b: &Self::Element, tol: f64) -> bool {
        a.term == b.term && a.ind == b.ind && self.ms.approx_eq(&a.memory, &b.memory, tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memory::{IntMemory, IntRegisters, QuantumRegisters};
    use crate::pars::{converge, Fused, Policy};
    use crate::pcfll::parse_term;

    fn parse(src: &str) -> Term {
        parse_term(src, &["H", "X", "CNOT", "S", "P", "max"]).unwrap()
    }

    #[test]
    fn link_binds_a_fresh_address() {
        let sys = PcfSystem::new(&IntRegisters);
        let cl = sys.program(parse("(\\x. x) new"));
        let d = sys.apply(&cl, &Head::Link);
        let next = d.into_single().unwrap();
        assert_eq!(next.term, Term::app(Term::lam("x", Term::var("x")), Term::var("%0")));
        assert_eq!(next.ind, BTreeMap::from([("%0".to_string(), 0)]));
    }

    #[test]
    fn identity_terminates_in_two_steps() {
        let sys = PcfSystem::new(&IntRegisters);
        let mut cl = sys.program(parse("(\\x. x) new"));
        let mut steps = 0;
        while let Some(r) = sys.redexes(&cl).pop() {
            cl = sys.apply(&cl, &r).into_single().unwrap();
            steps += 1;
        }
        assert_eq!(steps, 2);
        assert_eq!(cl.term, Term::var("%0"));
    }

    #[test]
    fn test_on_a_nonzero_register_takes_the_false_branch() {
        let sys = PcfSystem::new(&IntRegisters);
        let mut memory = IntMemory::default();
        memory.set(0, 1);
        let cl = Closure {
            term: parse_term("if y then new else S new", &["S"]).unwrap().rename_free(&|_| Some("%0".into())),
            ind: BTreeMap::from([("%0".to_string(), 0)]),
            memory,
        };
        let d = sys.apply(&cl, &Head::Test { var: "%0".into() });
        let next = d.into_single().unwrap();
        assert_eq!(next.term, parse("S new"));
        assert!(next.ind.is_empty());
    }

    #[test]
    fn letrec_unfolds() {
        let t = parse("letrec f x = f x in f new");
        let (path, head) = decompose(&t).unwrap();
        assert!(path.is_empty());
        assert_eq!(head, Head::Pure);
        let unfolded = Term::lam("x", Term::letrec("f", "x", parse("f x"), parse("f x")));
        assert_eq!(contract(&t), Term::app(unfolded, Term::New));
    }

    #[test]
    fn canonicalization_orders_by_first_occurrence() {
        let sys = PcfSystem::new(&IntRegisters);
        let mut memory = IntMemory::default();
        memory.set(5, 2);
        let cl = Closure {
            term: Term::pair(Term::var("%3"), Term::var("%1")),
            ind: BTreeMap::from([("%3".to_string(), 5), ("%1".to_string(), 9)]),
            memory,
        };
        let c = sys.canonicalize(&cl);
        assert_eq!(c.term, Term::pair(Term::var("%0"), Term::var("%1")));
        assert_eq!(c.ind, BTreeMap::from([("%0".to_string(), 0), ("%1".to_string(), 1)]));
        assert_eq!(c.memory.get(0), 2);
        assert_eq!(sys.canonicalize(&c), c);
    }

    #[test]
    fn quantum_coin_converges_geometrically() {
        let ms = QuantumRegisters::default();
        let sys = PcfSystem::new(&ms);
        let cl = sys.program(parse("letrec f x = (if x then \\g. new else \\g. g (H new)) f in f (H new)"));
        let fused = Fused::new(&sys, Policy::Leftmost, 10_000);
        let c = converge(&Distribution::dirac(cl), &fused, Policy::Leftmost, 10, 1e-12);
        assert!((c.probability - 0.9990234375).abs() < 1e-9, "{}", c.probability);
        assert!(c.reached_horizon);
    }

    #[test]
    fn omega_never_terminates() {
        let sys = PcfSystem::new(&IntRegisters);
        let cl = sys.program(parse("letrec f x = f x in f new"));
        let fused = Fused::new(&sys, Policy::Leftmost, 200);
        let c = converge(&Distribution::dirac(cl), &fused, Policy::Leftmost, 5, 1e-9);
        assert_eq!(c.probability, 0.0);
    }

    #[test]
    fn bell_pair_measures_equal_bits() {
        let ms = QuantumRegisters::default();
        let sys = PcfSystem::new(&ms);
        let src = "let <a,b> = CNOT <new, H new> in (if a then \\q. if q then <X new, X new> else <X new, new> else \\q. if q then <new, X new> else <new, new>) b";
        let fused = Fused::new(&sys, Policy::Leftmost, 10_000);
        let c = converge(&Distribution::dirac(sys.program(parse(src))), &fused, Policy::Leftmost, 50, 1e-12);
        assert!((c.probability - 1.0).abs() < 1e-9);
        let mut readings: BTreeMap<String, f64> = BTreeMap::new();
        for (cl, p) in c.distribution.iter() {
            *readings.entry(sys.leaves(cl).concat()).or_default() += p;
        }
        assert_eq!(readings.len(), 2, "{readings:?}");
        assert!((readings["00"] - 0.5).abs() < 1e-9);
        assert!((readings["11"] - 0.5).abs() < 1e-9);
    }
}
