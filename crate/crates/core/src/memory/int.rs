//! Integer registers with successor, predecessor and max.

use std::collections::{BTreeMap, BTreeSet};

use super::{check_tuple, rename_addr, Address, MemoryError, MemoryStructure, OpLabel, Renaming};
use crate::pars::Distribution;

/// A map from addresses to natural numbers; absent addresses hold 0.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IntMemory {
    values: BTreeMap<Address, u64>,
}

impl IntMemory {
    /// Builds a memory from the values at addresses `0, 1, 2, …`.
    pub fn from_values(values: &[u64]) -> Self {
        let mut m = IntMemory::default();
        for (a, v) in values.iter().enumerate() {
            m.set(a, *v);
        }
        m
    }

    pub fn get(&self, a: Address) -> u64 {
        self.values.get(&a).copied().unwrap_or(0)
    }

    pub fn set(&mut self, a: Address, v: u64) {
        if v == 0 {
            self.values.remove(&a);
        } else {
            self.values.insert(a, v);
        }
    }
}

/// Integer registers. The test is deterministic: it answers whether the
/// register holds zero and leaves the memory unchanged.
#[derive(Clone, Copy, Debug, Default)]
pub struct IntRegisters;

impl MemoryStructure for IntRegisters {
    type Mem = IntMemory;

    fn name(&self) -> &'static str {
        "int"
    }

    fn initial(&self) -> IntMemory {
        IntMemory::default()
    }

    fn labels(&self) -> Vec<OpLabel> {
        vec![OpLabel::new("S", 1), OpLabel::new("P", 1), OpLabel::new("max", 2)]
    }

    fn test(&self, i: Address, m: &IntMemory) -> Distribution<(bool, IntMemory)> {
        Distribution::dirac((m.get(i) == 0, m.clone()))
    }

    fn update(&self, addrs: &[Address], label: &str, m: &IntMemory) -> Result<IntMemory, MemoryError> {
        let op = self.label(label).ok_or_else(|| MemoryError::UnknownLabel(label.to_string()))?;
        check_tuple(addrs, &op)?;
        let mut out = m.clone();
        match label {
            "S" => out.set(addrs[0], m.get(addrs[0]) + 1),
            "P" => out.set(addrs[0], m.get(addrs[0]).saturating_sub(1)),
            _ => out.set(addrs[0], m.get(addrs[0]).max(m.get(addrs[1]))),
        }
        Ok(out)
    }

    fn support(&self, m: &IntMemory) -> BTreeSet<Address> {
        m.values.keys().copied().collect()
    }

    fn rename(&self, m: &IntMemory, sigma: &Renaming) -> IntMemory {
        IntMemory { values: m.values.iter().map(|(a, v)| (rename_addr(sigma, *a), *v)).collect() }
    }

    fn approx_eq(&self, a: &IntMemory, b: &IntMemory, _tol: f64) -> bool {
        a == b
    }

    fn readout(&self, m: &IntMemory, i: Address) -> String {
        m.get(i).to_string()
    }

    fn describe(&self, m: &IntMemory) -> String {
        let cells: Vec<String> = m.values.iter().map(|(a, v)| format!("{a}:{v}")).collect();
        format!("{{{}}}", cells.join(", "))
    }

    fn unreferenced_order(&self, m: &IntMemory, referenced: &BTreeSet<Address>) -> Vec<Address> {
        let mut rest: Vec<Address> = m.values.keys().copied().filter(|a| !referenced.contains(a)).collect();
        rest.sort_by_key(|a| (m.get(*a), *a));
        rest
    }
}
