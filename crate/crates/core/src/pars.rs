//! Probabilistic abstract rewrite systems.
//!
//! A [`Distribution`] is a finite map from elements to probabilities. A
//! [`RewriteSystem`] sends an element and one of its redexes to a
//! distribution, and [`lift_step`] reduces every non-terminal element of a
//! distribution exactly once, picking redexes with a [`Policy`].
//!
//! [`Fused`] turns any system into one whose steps are *rounds*: all
//! deterministic redexes are fired, then one probabilistic choice, then the
//! deterministic redexes of every branch. Engines that agree on the
//! sequence of choices agree round by round.

use std::collections::hash_map::DefaultHasher;
use std::fmt::{self, Debug};
use std::hash::{Hash, Hasher};

use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Tolerance used by every probability comparison in the crate.
pub const TOL: f64 = 1e-9;

/// Entries below this probability are dropped after each lifted step.
pub const PRUNE_BELOW: f64 = 1e-15;

/// A finite-support sub-probability distribution.
///
/// Entries keep insertion order, so iterating a distribution built by a
/// deterministic process is itself deterministic.
#[derive(Clone)]
pub struct Distribution<E: Eq + Hash> {
    entries: IndexMap<E, f64>,
}

impl<E: Eq + Hash + Debug> Debug for Distribution<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.entries.iter()).finish()
    }
}

impl<E: Eq + Hash> Default for Distribution<E> {
    fn default() -> Self {
        Distribution { entries: IndexMap::new() }
    }
}

impl<E: Eq + Hash + Clone> Distribution<E> {
    /// The zero distribution.
    pub fn empty() -> Self {
        Self::default()
    }

    /// The point mass on `e`.
    pub fn dirac(e: E) -> Self {
        let mut d = Self::empty();
        d.add(e, 1.0);
        d
    }

    /// Builds a distribution, merging repeated elements and skipping
    /// non-positive weights.
    pub fn from_pairs<I: IntoIterator<Item = (E, f64)>>(pairs: I) -> Self {
        let mut d = Self::empty();
        for (e, p) in pairs {
            d.add(e, p);
        }
        d
    }

    /// Adds `p` to the weight of `e`. Non-positive weights are ignored.
    pub fn add(&mut self, e: E, p: f64) {
        if p > 0.0 {
            *self.entries.entry(e).or_insert(0.0) += p;
        }
    }

    /// Weight of `e` (zero when absent).
    pub fn get(&self, e: &E) -> f64 {
        self.entries.get(e).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&E, f64)> {
        self.entries.iter().map(|(e, p)| (e, *p))
    }

    pub fn elements(&self) -> impl Iterator<Item = &E> {
        self.entries.keys()
    }

    /// Total mass.
    pub fn mass(&self) -> f64 {
        self.entries.values().fold(0.0, |a, p| a + p)
    }

    /// Multiplies every weight by `k`.
    pub fn scale(&self, k: f64) -> Self {
        Self::from_pairs(self.iter().map(|(e, p)| (e.clone(), p * k)))
    }

    /// Pushes the distribution forward along `f`, merging collisions.
    pub fn map<G: Eq + Hash + Clone>(&self, mut f: impl FnMut(&E) -> G) -> Distribution<G> {
        Distribution::from_pairs(self.iter().map(|(e, p)| (f(e), p)))
    }

    /// Keeps the entries satisfying `keep`.
    pub fn filter(&self, mut keep: impl FnMut(&E) -> bool) -> Self {
        Self::from_pairs(self.iter().filter(|(e, _)| keep(e)).map(|(e, p)| (e.clone(), p)))
    }

    /// Drops entries whose weight is below `below`.
    pub fn prune(&mut self, below: f64) {
        self.entries.retain(|_, p| *p >= below);
    }

    /// The single element of a one-point distribution.
    pub fn into_single(self) -> Option<E> {
        if self.entries.len() == 1 {
            self.entries.into_iter().next().map(|(e, _)| e)
        } else {
            None
        }
    }

    /// Entries sorted by decreasing weight; ties keep insertion order.
    pub fn sorted(&self) -> Vec<(&E, f64)> {
        let mut v: Vec<_> = self.iter().collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1));
        v
    }

    /// Compares two distributions up to `tol`, using `same` as element
    /// equality. Weights are compared per equivalence class, so an element
    /// split into several numerically different copies still matches.
    pub fn approx_eq_by(&self, other: &Self, tol: f64, same: impl Fn(&E, &E) -> bool) -> bool {
        let class_weight = |d: &Self, e: &E| -> f64 { d.iter().filter(|(f, _)| same(e, f)).map(|(_, p)| p).sum() };
        self.elements().chain(other.elements()).all(|e| (class_weight(self, e) - class_weight(other, e)).abs() <= tol)
    }
}

impl<E: Eq + Hash> IntoIterator for Distribution<E> {
    type Item = (E, f64);
    type IntoIter = indexmap::map::IntoIter<E, f64>;
    fn into_iter(self) -> Self::IntoIter {
        self.entries.into_iter()
    }
}

/// A deterministic redex-selection rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Policy {
    /// Always the first redex in enumeration order.
    Leftmost,
    /// Always the last redex in enumeration order.
    Rightmost,
    /// A pseudorandom choice that depends only on the seed and the element.
    Seeded(u64),
}

impl Policy {
    /// Picks an index in `0..n` for element `e`. `n` must be positive.
    pub fn pick<E: Hash>(&self, e: &E, n: usize) -> usize {
        assert!(n > 0, "policy asked to choose among zero redexes");
        match self {
            Policy::Leftmost => 0,
            Policy::Rightmost => n - 1,
            Policy::Seeded(seed) => {
                let mut h = DefaultHasher::new();
                e.hash(&mut h);
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ h.finish().rotate_left(17));
                rng.gen_range(0..n)
            }
        }
    }
}

/// Outcome of firing deterministic redexes until none is left.
#[derive(Clone, Debug)]
pub struct Settled<E> {
    pub element: E,
    pub steps: usize,
    /// True when the fuel ran out before the element settled.
    pub exhausted: bool,
}

/// A probabilistic abstract rewrite system.
pub trait RewriteSystem: Sync {
    type Element: Clone + Eq + Hash + Send + Sync + Debug;
    type Redex: Clone + Send + Sync + Debug;

    /// All redexes of `e`, in a deterministic order.
    fn redexes(&self, e: &Self::Element) -> Vec<Self::Redex>;

    /// Fires `r` in `e`.
    fn apply(&self, e: &Self::Element, r: &Self::Redex) -> Distribution<Self::Element>;

    fn is_terminal(&self, e: &Self::Element) -> bool {
        self.redexes(e).is_empty()
    }

    /// Whether firing `r` may split mass. Such redexes end a round.
    fn is_choice(&self, _e: &Self::Element, _r: &Self::Redex) -> bool {
        false
    }

    /// Element equality used when comparing distributions up to rounding.
    fn same(&self, a: &Self::Element, b: &Self::Element, _tol: f64) -> bool {
        a == b
    }

    /// Fires non-choice redexes until none is left or `fuel` steps ran.
    fn settle(&self, e: &Self::Element, policy: Policy, fuel: usize) -> Settled<Self::Element> {
        let mut cur = e.clone();
        let mut steps = 0;
        loop {
            let rs = self.redexes(&cur);
            let det: Vec<&Self::Redex> = rs.iter().filter(|r| !self.is_choice(&cur, r)).collect();
            if det.is_empty() {
                return Settled { element: cur, steps, exhausted: false };
            }
            if steps >= fuel {
                return Settled { element: cur, steps, exhausted: true };
            }
            let r = det[policy.pick(&cur, det.len())].clone();
            cur = self
                .apply(&cur, &r)
                .into_single()
                .unwrap_or_else(|| panic!("non-choice redex {r:?} produced a proper split"));
            steps += 1;
        }
    }
}

/// How [`lift_step_with`] evaluates the independent per-element steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    /// Uses the rayon pool when the `parallel` feature is on, and falls back
    /// to sequential evaluation otherwise.
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

/// Evaluates `f` on every item, in parallel when requested and available.
pub fn map_items<T: Sync, R: Send>(items: &[T], exec: Exec, f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel if items.len() > 1 => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        _ => items.iter().map(f).collect(),
    }
}

/// Splits `mu` into its terminal and non-terminal parts.
pub fn terminal_split<S: RewriteSystem>(
    mu: &Distribution<S::Element>,
    sys: &S,
) -> (Distribution<S::Element>, Distribution<S::Element>) {
    let mut done = Distribution::empty();
    let mut open = Distribution::empty();
    for (e, p) in mu.iter() {
        if sys.is_terminal(e) {
            done.add(e.clone(), p);
        } else {
            open.add(e.clone(), p);
        }
    }
    (done, open)
}

/// Mass of the terminal part of `mu`.
pub fn degree_of_termination<S: RewriteSystem>(mu: &Distribution<S::Element>, sys: &S) -> f64 {
    mu.iter().filter(|(e, _)| sys.is_terminal(e)).fold(0.0, |a, (_, p)| a + p)
}

/// One lifted step with the default execution mode.
pub fn lift_step<S: RewriteSystem>(mu: &Distribution<S::Element>, sys: &S, policy: Policy) -> Distribution<S::Element> {
    lift_step_with(mu, sys, policy, Exec::default())
}

/// One lifted step: terminal elements stay, every other element is
/// replaced by the result of the redex the policy picks.
pub fn lift_step_with<S: RewriteSystem>(
    mu: &Distribution<S::Element>,
    sys: &S,
    policy: Policy,
    exec: Exec,
) -> Distribution<S::Element> {
    let entries: Vec<(&S::Element, f64)> = mu.iter().collect();
    let results = map_items(&entries, exec, |(e, _)| {
        let rs = sys.redexes(e);
        if rs.is_empty() {
            None
        } else {
            Some(sys.apply(e, &rs[policy.pick(*e, rs.len())]))
        }
    });
    let mut out = Distribution::empty();
    for ((e, p), r) in entries.into_iter().zip(results) {
        match r {
            None => out.add(e.clone(), p),
            Some(d) => {
                for (f, q) in d {
                    out.add(f, p * q);
                }
            }
        }
    }
    out.prune(PRUNE_BELOW);
    out
}

/// `n` lifted steps.
pub fn iterate<S: RewriteSystem>(
    mu: &Distribution<S::Element>,
    n: usize,
    sys: &S,
    policy: Policy,
) -> Distribution<S::Element> {
    let mut cur = mu.clone();
    for _ in 0..n {
        cur = lift_step(&cur, sys, policy);
    }
    cur
}

/// Result of [`converge`].
#[derive(Clone, Debug)]
pub struct Convergence<E: Eq + Hash> {
    /// Terminal mass when the iteration stopped.
    pub probability: f64,
    /// True when the horizon, rather than the tolerance, stopped the run.
    pub reached_horizon: bool,
    /// Number of lifted steps performed.
    pub steps: usize,
    /// The last distribution.
    pub distribution: Distribution<E>,
}

/// Iterates lifted steps until the non-terminal mass, which bounds any
/// further change of the degree of termination, drops below `tol`, or until
/// `horizon` steps have been made.
pub fn converge<S: RewriteSystem>(
    mu: &Distribution<S::Element>,
    sys: &S,
    policy: Policy,
    horizon: usize,
    tol: f64,
) -> Convergence<S::Element> {
    let mut cur = mu.clone();
    let mut steps = 0;
    loop {
        let (done, open) = terminal_split(&cur, sys);
        let stop_tol = open.mass() < tol;
        if stop_tol || steps >= horizon {
            return Convergence { probability: done.mass(), reached_horizon: !stop_tol, steps, distribution: cur };
        }
        cur = lift_step(&cur, sys, policy);
        steps += 1;
    }
}

/// Marker redex of a [`Fused`] system: one round.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Round;

/// Groups the steps of `inner` into rounds. A round settles the element,
/// fires one choice redex if any is left, then settles every branch.
pub struct Fused<'a, S: RewriteSystem> {
    pub inner: &'a S,
    pub policy: Policy,
    /// Maximum number of deterministic steps per settling phase.
    pub fuel: usize,
}

impl<'a, S: RewriteSystem> Fused<'a, S> {
    pub fn new(inner: &'a S, policy: Policy, fuel: usize) -> Self {
        Fused { inner, policy, fuel }
    }
}

impl<S: RewriteSystem> RewriteSystem for Fused<'_, S> {
    type Element = S::Element;
    type Redex = Round;

    fn redexes(&self, e: &S::Element) -> Vec<Round> {
        if self.inner.is_terminal(e) {
            Vec::new()
        } else {
            vec![Round]
        }
    }

    fn is_terminal(&self, e: &S::Element) -> bool {
        self.inner.is_terminal(e)
    }

    fn apply(&self, e: &S::Element, _r: &Round) -> Distribution<S::Element> {
        let settled = self.inner.settle(e, self.policy, self.fuel);
        if settled.exhausted {
            return Distribution::dirac(settled.element);
        }
        let here = settled.element;
        let rs = self.inner.redexes(&here);
        if rs.is_empty() {
            return Distribution::dirac(here);
        }
        let r = &rs[self.policy.pick(&here, rs.len())];
        let mut out = Distribution::empty();
        for (b, p) in self.inner.apply(&here, r) {
            out.add(self.inner.settle(&b, self.policy, self.fuel).element, p);
        }
        out
    }

    fn same(&self, a: &S::Element, b: &S::Element, tol: f64) -> bool {
        self.inner.same(a, b, tol)
    }
}

/// Outcome of [`check_diamond`].
#[derive(Clone, Debug, Default)]
pub struct DiamondReport {
    pub passed: bool,
    /// Number of (seed, k) pairs whose terminal parts were compared.
    pub compared_steps: usize,
    /// Number of one-step divergences examined.
    pub divergences: usize,
    /// Divergences whose joinability search hit the enumeration cap.
    pub inconclusive: usize,
    /// Description of the first violation.
    pub failure: Option<String>,
}

const JOIN_CAP: usize = 512;
const DIVERGENCE_SAMPLES: usize = 3;

fn join_candidates<S: RewriteSystem>(sys: &S, d: &Distribution<S::Element>) -> Option<Vec<Distribution<S::Element>>> {
    let mut partial = vec![Distribution::empty()];
    for (e, p) in d.iter() {
        let rs = sys.redexes(e);
        let options: Vec<Distribution<S::Element>> = if rs.is_empty() {
            vec![Distribution::dirac(e.clone())]
        } else {
            rs.iter().map(|r| sys.apply(e, r)).collect()
        };
        if partial.len() * options.len() > JOIN_CAP {
            return None;
        }
        let mut next = Vec::with_capacity(partial.len() * options.len());
        for acc in &partial {
            for o in &options {
                let mut x = acc.clone();
                for (f, q) in o.iter() {
                    x.add(f.clone(), p * q);
                }
                next.push(x);
            }
        }
        partial = next;
    }
    Some(partial)
}

/// Bounded check of the probabilistic diamond property.
///
/// For each seed, two runs of `depth` lifted steps under the two policies
/// must have equal terminal parts after every step. Along the first run,
/// elements with several redexes are split in two one-step reducts whose
/// terminal parts must agree and which must have a common one-step reduct.
pub fn check_diamond<S: RewriteSystem>(
    sys: &S,
    seeds: &[S::Element],
    depth: usize,
    policies: (Policy, Policy),
) -> DiamondReport {
    let mut report = DiamondReport { passed: true, ..Default::default() };
    let same = |a: &S::Element, b: &S::Element| sys.same(a, b, TOL);
    for (si, seed) in seeds.iter().enumerate() {
        let mut a = Distribution::dirac(seed.clone());
        let mut b = a.clone();
        for k in 1..=depth {
            for (e, _) in a.iter().take(2) {
                let rs = sys.redexes(e);
                if rs.len() < 2 {
                    continue;
                }
                for r2 in rs.iter().skip(1).take(DIVERGENCE_SAMPLES) {
                    report.divergences += 1;
                    let nu = sys.apply(e, &rs[0]);
                    let xi = sys.apply(e, r2);
                    let (nu_t, _) = terminal_split(&nu, sys);
                    let (xi_t, _) = terminal_split(&xi, sys);
                    if !nu_t.approx_eq_by(&xi_t, TOL, same) {
                        report.passed = false;
                        report.failure = Some(format!(
                            "seed {si}, step {k}: one-step reducts of {e:?} by {:?} and {r2:?} have different terminal parts {nu_t:?} vs {xi_t:?}",
                            rs[0]
                        ));
                        return report;
                    }
                    match (join_candidates(sys, &nu), join_candidates(sys, &xi)) {
                        (Some(ln), Some(lx)) => {
                            let joined = ln.iter().any(|x| lx.iter().any(|y| x.approx_eq_by(y, TOL, same)));
                            if !joined {
                                report.passed = false;
                                report.failure = Some(format!(
                                    "seed {si}, step {k}: reducts of {e:?} by {:?} and {r2:?} are not joinable in one step",
                                    rs[0]
                                ));
                                return report;
                            }
                        }
                        _ => report.inconclusive += 1,
                    }
                }
            }
            a = lift_step(&a, sys, policies.0);
            b = lift_step(&b, sys, policies.1);
            let (at, _) = terminal_split(&a, sys);
            let (bt, _) = terminal_split(&b, sys);
            report.compared_steps += 1;
            if !at.approx_eq_by(&bt, TOL, same) {
                report.passed = false;
                report.failure = Some(format!(
                    "seed {si}, step {k}: terminal parts differ under {:?} and {:?}: {at:?} vs {bt:?}",
                    policies.0, policies.1
                ));
                return report;
            }
        }
    }
    report
}

/// Small rewrite systems used by tests and benchmarks.
pub mod toy {
    use super::{Distribution, RewriteSystem};

    /// `Run → ½ Halt + ½ Run`.
    #[derive(Clone, Copy, Debug, Default)]
    pub struct Geometric;

    #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
    pub enum Coin {
        Run,
        Halt,
    }

    impl RewriteSystem for Geometric {
        type Element = Coin;
        type Redex = ();
        fn redexes(&self, e: &Coin) -> Vec<()> {
            match e {
                Coin::Run => vec![()],
                Coin::Halt => vec![],
            }
        }
        fn apply(&self, _e: &Coin, _r: &()) -> Distribution<Coin> {
            Distribution::from_pairs([(Coin::Halt, 0.5), (Coin::Run, 0.5)])
        }
        fn is_choice(&self, _e: &Coin, _r: &()) -> bool {
            true
        }
    }

    /// `a → b` and `a → c` with distinct terminal `b`, `c`: not diamond.
    #[derive(Clone, Copy, Debug, Default)]
    pub struct Fork;

    impl RewriteSystem for Fork {
        type Element = char;
        type Redex = char;
        fn redexes(&self, e: &char) -> Vec<char> {
            if *e == 'a' {
                vec!['b', 'c']
            } else {
                vec![]
            }
        }
        fn apply(&self, _e: &char, r: &char) -> Distribution<char> {
            Distribution::dirac(*r)
        }
    }

    /// Pairs of counters, each decremented independently, with a fair
    /// coin deciding whether the first counter restarts at zero: a diamond
    /// system with genuine divergences.
    #[derive(Clone, Copy, Debug, Default)]
    pub struct Counters;

    impl RewriteSystem for Counters {
        type Element = (u32, u32);
        type Redex = u8;
        fn redexes(&self, e: &(u32, u32)) -> Vec<u8> {
            let mut v = Vec::new();
            if e.0 > 0 {
                v.push(0);
            }
            if e.1 > 0 {
                v.push(1);
            }
            v
        }
        fn apply(&self, e: &(u32, u32), r: &u8) -> Distribution<(u32, u32)> {
            match r {
                0 => Distribution::from_pairs([((e.0 - 1, e.1), 0.5), ((e.0 - 1, e.1), 0.25), ((0, e.1), 0.25)]),
                _ => Distribution::dirac((e.0, e.1 - 1)),
            }
        }
    }

    /// A binary branching walk: `n → ½ (n+1) + ½ (n+2)` below `limit`, with
    /// `work` rounds of busy arithmetic per step to make the cost visible.
    #[derive(Clone, Copy, Debug)]
    pub struct Walk {
        pub limit: u64,
        pub work: u32,
    }

    impl RewriteSystem for Walk {
        type Element = (u64, u64);
        type Redex = ();
        fn redexes(&self, e: &(u64, u64)) -> Vec<()> {
            if e.0 < self.limit {
                vec![()]
            } else {
                vec![]
            }
        }
        fn apply(&self, e: &(u64, u64), _r: &()) -> Distribution<(u64, u64)> {
            let mut h = e.1;
            for i in 0..self.work {
                h = h.wrapping_mul(6364136223846793005).wrapping_add(u64::from(i) | 1);
            }
            let tag = h % 4;
            Distribution::from_pairs([
                ((e.0 + 1, (e.1 * 2 + tag) % 1024), 0.5),
                ((e.0 + 2, (e.1 * 3 + tag) % 1024), 0.5),
            ])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::toy::*;
    use super::*;

    fn ab() -> Distribution<Coin> {
        Distribution::from_pairs([(Coin::Halt, 0.5), (Coin::Run, 0.5)])
    }

    #[test]
    fn split_two_point() {
        let (t, n) = terminal_split(&ab(), &Geometric);
        assert_eq!(t.get(&Coin::Halt), 0.5);
        assert_eq!(n.get(&Coin::Run), 0.5);
        assert_eq!(t.len() + n.len(), 2);
    }

    #[test]
    fn split_all_terminal_and_empty() {
        let d = Distribution::dirac(Coin::Halt);
        let (t, n) = terminal_split(&d, &Geometric);
        assert_eq!(t.mass(), 1.0);
        assert!(n.is_empty());
        let (t, n) = terminal_split(&Distribution::<Coin>::empty(), &Geometric);
        assert!(t.is_empty() && n.is_empty());
    }

    #[test]
    fn degree_examples() {
        assert_eq!(degree_of_termination(&ab(), &Geometric), 0.5);
        assert_eq!(degree_of_termination(&Distribution::dirac(Coin::Halt), &Geometric), 1.0);
        let d = Distribution::from_pairs([((0u32, 0u32), 0.25), ((0, 0), 0.0), ((1, 0), 0.5)]);
        let mut d2 = d.clone();
        d2.add((0, 0), 0.25);
        assert_eq!(degree_of_termination(&d2, &Counters), 0.5);
    }

    #[test]
    fn lift_keeps_terminal_part() {
        let d = Distribution::dirac(Coin::Halt);
        let next = lift_step(&d, &Geometric, Policy::Leftmost);
        assert_eq!(next.get(&Coin::Halt), 1.0);
    }

    #[test]
    fn geometric_steps() {
        let d = Distribution::dirac(Coin::Run);
        let one = lift_step(&d, &Geometric, Policy::Leftmost);
        assert_eq!(one.get(&Coin::Halt), 0.5);
        assert_eq!(one.get(&Coin::Run), 0.5);
        let two = lift_step(&one, &Geometric, Policy::Leftmost);
        assert_eq!(two.get(&Coin::Halt), 0.75);
        assert_eq!(two.get(&Coin::Run), 0.25);
        let ten = iterate(&d, 10, &Geometric, Policy::Leftmost);
        assert!((degree_of_termination(&ten, &Geometric) - 0.9990234375).abs() < 1e-12);
        assert_eq!(iterate(&d, 0, &Geometric, Policy::Leftmost).get(&Coin::Run), 1.0);
    }

    #[test]
    fn converge_examples() {
        let c = converge(&Distribution::dirac(Coin::Run), &Geometric, Policy::Leftmost, 64, 1e-12);
        assert!((c.probability - 1.0).abs() < 1e-12);
        assert!(!c.reached_horizon);

        let c = converge(&Distribution::dirac(Coin::Halt), &Geometric, Policy::Leftmost, 64, 1e-12);
        assert_eq!(c.probability, 1.0);
        assert!(!c.reached_horizon);
        assert!(c.steps <= 1);

        struct Loop;
        impl RewriteSystem for Loop {
            type Element = u8;
            type Redex = ();
            fn redexes(&self, _e: &u8) -> Vec<()> {
                vec![()]
            }
            fn apply(&self, e: &u8, _r: &()) -> Distribution<u8> {
                Distribution::dirac(*e)
            }
        }
        let c = converge(&Distribution::dirac(0u8), &Loop, Policy::Leftmost, 20, 1e-9);
        assert_eq!(c.probability, 0.0);
        assert!(c.probability.is_sign_positive());
        assert!(c.reached_horizon);
    }

    #[test]
    fn diamond_examples() {
        let r = check_diamond(&Geometric, &[Coin::Run], 10, (Policy::Leftmost, Policy::Seeded(7)));
        assert!(r.passed, "{r:?}");
        let r = check_diamond(&Counters, &[(3, 4), (0, 2)], 10, (Policy::Leftmost, Policy::Rightmost));
        assert!(r.passed, "{r:?}");
        assert!(r.divergences > 0);
        let r = check_diamond(&Fork, &['a'], 3, (Policy::Leftmost, Policy::Rightmost));
        assert!(!r.passed);
        assert!(r.failure.is_some());
    }

    #[test]
    fn fused_rounds_of_geometric() {
        let f = Fused::new(&Geometric, Policy::Leftmost, 100);
        let d = iterate(&Distribution::dirac(Coin::Run), 3, &f, Policy::Leftmost);
        assert!((degree_of_termination(&d, &f) - 0.875).abs() < 1e-15);
    }

    #[test]
    fn seeded_policy_is_deterministic() {
        let p = Policy::Seeded(42);
        for n in 1..20 {
            assert_eq!(p.pick(&"x", n), p.pick(&"x", n));
            assert!(p.pick(&n, n) < n);
        }
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let w = Walk { limit: 12, work: 4 };
        let mut a = Distribution::dirac((0, 1));
        let mut b = a.clone();
        for _ in 0..8 {
            a = lift_step_with(&a, &w, Policy::Leftmost, Exec::Sequential);
            b = lift_step_with(&b, &w, Policy::Leftmost, Exec::Parallel);
        }
        assert_eq!(a.len(), b.len());
        for ((x, p), (y, q)) in a.iter().zip(b.iter()) {
            assert_eq!(x, y);
            assert_eq!(p, q);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn mass_is_conserved(a in 0u32..6, b in 0u32..6, seed in any::<u64>(), n in 0usize..12) {
                let d = iterate(&Distribution::dirac((a, b)), n, &Counters, Policy::Seeded(seed));
                prop_assert!((d.mass() - 1.0).abs() < TOL);
            }

            #[test]
            fn termination_degree_is_monotone(n in 0usize..20) {
                let d0 = iterate(&Distribution::dirac(Coin::Run), n, &Geometric, Policy::Leftmost);
                let d1 = lift_step(&d0, &Geometric, Policy::Leftmost);
                prop_assert!(degree_of_termination(&d1, &Geometric) + 1e-15 >= degree_of_termination(&d0, &Geometric));
                prop_assert!(d1.get(&Coin::Halt) + 1e-15 >= d0.get(&Coin::Halt));
            }

            #[test]
            fn policies_agree_on_terminal_parts(a in 0u32..6, b in 0u32..6, seed in any::<u64>(), n in 0usize..14) {
                let x = iterate(&Distribution::dirac((a, b)), n, &Counters, Policy::Leftmost);
                let y = iterate(&Distribution::dirac((a, b)), n, &Counters, Policy::Seeded(seed));
                let (xt, _) = terminal_split(&x, &Counters);
                let (yt, _) = terminal_split(&y, &Counters);
                prop_assert!(xt.approx_eq_by(&yt, TOL, |p, q| p == q));
            }
        }
    }
}
