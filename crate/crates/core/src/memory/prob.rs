//! Probabilistic boolean registers: each address holds the probability of
//! reading `true`.

use std::collections::{BTreeMap, BTreeSet};
use std::hash::{Hash, Hasher};

use super::{check_tuple, rename_addr, Address, MemoryError, MemoryStructure, OpLabel, Renaming};
use crate::pars::{Distribution, PRUNE_BELOW};

/// A map from addresses to probabilities in `[0, 1]`; absent addresses hold 0.
#[derive(Clone, Debug, Default)]
pub struct ProbMemory {
    values: BTreeMap<Address, f64>,
}

impl ProbMemory {
    pub fn get(&self, a: Address) -> f64 {
        self.values.get(&a).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, a: Address, v: f64) {
        assert!((0.0..=1.0).contains(&v), "register value {v} outside [0, 1]");
        if v == 0.0 {
            self.values.remove(&a);
        } else {
            self.values.insert(a, v);
        }
    }

    /// Builds a memory from the values at addresses `0, 1, 2, …`.
    pub fn from_values(values: &[f64]) -> Self {
        let mut m = ProbMemory::default();
        for (a, v) in values.iter().enumerate() {
            m.set(a, *v);
        }
        m
    }
}

impl PartialEq for ProbMemory {
    fn eq(&self, other: &Self) -> bool {
        self.values.len() == other.values.len()
            && self.values.iter().zip(other.values.iter()).all(|((a, x), (b, y))| a == b && x == y)
    }
}

impl Eq for ProbMemory {}

impl Hash for ProbMemory {
    fn hash<H: Hasher>(&self, state: &mut H) {
        for (a, v) in &self.values {
            a.hash(state);
            v.to_bits().hash(state);
        }
    }
}

/// Probabilistic registers with the fair-coin update `c`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ProbRegisters;

impl MemoryStructure for ProbRegisters {
    type Mem = ProbMemory;

    fn name(&self) -> &'static str {
        "prob"
    }

    fn initial(&self) -> ProbMemory {
        ProbMemory::default()
    }

    fn labels(&self) -> Vec<OpLabel> {
        vec![OpLabel::new("c", 1)]
    }

    fn test(&self, i: Address, m: &ProbMemory) -> Distribution<(bool, ProbMemory)> {
        let p = m.get(i);
        let mut on = m.clone();
        on.set(i, 1.0);
        let mut off = m.clone();
        off.set(i, 0.0);
        let mut d = Distribution::from_pairs([((true, on), p), ((false, off), 1.0 - p)]);
        d.prune(PRUNE_BELOW);
        d
    }

    fn update(&self, addrs: &[Address], label: &str, m: &ProbMemory) -> Result<ProbMemory, MemoryError> {
        let op = self.label(label).ok_or_else(|| MemoryError::UnknownLabel(label.to_string()))?;
        check_tuple(addrs, &op)?;
        let mut out = m.clone();
        out.set(addrs[0], 0.5);
        Ok(out)
    }

    fn support(&self, m: &ProbMemory) -> BTreeSet<Address> {
        m.values.keys().copied().collect()
    }

    fn rename(&self, m: &ProbMemory, sigma: &Renaming) -> ProbMemory {
        ProbMemory { values: m.values.iter().map(|(a, v)| (rename_addr(sigma, *a), *v)).collect() }
    }

    fn approx_eq(&self, a: &ProbMemory, b: &ProbMemory, tol: f64) -> bool {
        let keys: BTreeSet<Address> = a.values.keys().chain(b.values.keys()).copied().collect();
        keys.into_iter().all(|k| (a.get(k) - b.get(k)).abs() <= tol)
    }

    fn readout(&self, m: &ProbMemory, i: Address) -> String {
        match m.get(i) {
            0.0 => "0".into(),
            1.0 => "1".into(),
            v => format!("({v})"),
        }
    }

    fn describe(&self, m: &ProbMemory) -> String {
        let cells: Vec<String> = m.values.iter().map(|(a, v)| format!("{a}:{v}")).collect();
        format!("{{{}}}", cells.join(", "))
    }

    fn unreferenced_order(&self, m: &ProbMemory, referenced: &BTreeSet<Address>) -> Vec<Address> {
        let mut rest: Vec<Address> = m.values.keys().copied().filter(|a| !referenced.contains(a)).collect();
        rest.sort_by(|a, b| m.get(*a).total_cmp(&m.get(*b)).then(a.cmp(b)));
        rest
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coin_then_test() {
        let r = ProbRegisters;
        let m1 = r.update(&[0], "c", &r.initial()).unwrap();
        assert_eq!(m1, ProbMemory::from_values(&[0.5]));
        let t = r.test(0, &m1);
        assert_eq!(t.get(&(false, ProbMemory::from_values(&[0.0]))), 0.5);
        assert_eq!(t.get(&(true, ProbMemory::from_values(&[1.0]))), 0.5);
    }

    #[test]
    fn degenerate_tests() {
        let r = ProbRegisters;
        let one = ProbMemory::from_values(&[1.0]);
        let t = r.test(0, &one);
        assert_eq!(t.len(), 1);
        assert_eq!(t.get(&(true, one.clone())), 1.0);
        let t = r.test(3, &r.initial());
        assert_eq!(t.len(), 1);
        assert_eq!(t.get(&(false, r.initial())), 1.0);
    }

    #[test]
    fn coin_is_idempotent() {
        let r = ProbRegisters;
        let m = ProbMemory::from_values(&[0.3, 1.0]);
        let once = r.update(&[0], "c", &m).unwrap();
        assert_eq!(r.update(&[0], "c", &once).unwrap(), once);
    }

    #[test]
    fn coin_arity() {
        assert!(ProbRegisters.update(&[0, 1], "c", &ProbMemory::default()).is_err());
    }
}
