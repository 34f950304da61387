//! Memory structures: addresses, labelled update operations and a
//! probabilistic boolean test.
//!
//! Three instances are provided: integer registers ([`IntRegisters`]),
//! probabilistic boolean registers ([`ProbRegisters`]) and a quantum state
//! vector with address binding ([`QuantumRegisters`]).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Debug;
use std::hash::Hash;

use thiserror::Error;

use crate::pars::Distribution;

mod int;
pub mod laws;
mod prob;
mod quantum;

pub use int::{IntMemory, IntRegisters};
pub use prob::{ProbMemory, ProbRegisters};
pub use quantum::{parse_complex, Gate, GateError, GateSet, QuantumMemory, QuantumRegisters};

/// A memory address.
pub type Address = usize;

/// A finite relabelling of addresses. Addresses outside the map are fixed.
pub type Renaming = BTreeMap<Address, Address>;

/// An update operation name together with the number of addresses it acts on.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OpLabel {
    pub name: String,
    pub arity: usize,
}

impl OpLabel {
    pub fn new(name: &str, arity: usize) -> Self {
        OpLabel { name: name.to_string(), arity }
    }
}

/// Failure of a partial update.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum MemoryError {
    #[error("unknown operation `{0}`")]
    UnknownLabel(String),
    #[error("operation `{label}` expects {expected} addresses, got {got}")]
    Arity { label: String, expected: usize, got: usize },
    #[error("address {0} occurs twice in an update tuple")]
    Duplicate(Address),
}

/// A memory structure: a set of memories with a test and labelled updates.
///
/// Implementations must make updates and tests on disjoint addresses
/// commute, and be equivariant under [`MemoryStructure::rename`]; see
/// [`laws`].
pub trait MemoryStructure: Send + Sync {
    type Mem: Clone + Eq + Hash + Debug + Send + Sync;

    /// Short backend name.
    fn name(&self) -> &'static str;

    /// The memory in which every address holds its default value.
    fn initial(&self) -> Self::Mem;

    /// The update operations this structure supports.
    fn labels(&self) -> Vec<OpLabel>;

    fn label(&self, name: &str) -> Option<OpLabel> {
        self.labels().into_iter().find(|l| l.name == name)
    }

    /// Tests address `i`, returning the outcome together with the new memory.
    fn test(&self, i: Address, m: &Self::Mem) -> Distribution<(bool, Self::Mem)>;

    /// Applies `label` to the tuple `addrs`. Defined exactly when the tuple
    /// has the label's arity and no repeated address.
    fn update(&self, addrs: &[Address], label: &str, m: &Self::Mem) -> Result<Self::Mem, MemoryError>;

    /// Addresses holding a non-default value.
    fn support(&self, m: &Self::Mem) -> BTreeSet<Address>;

    /// Smallest address outside `support(m) ∪ used`.
    fn fresh(&self, m: &Self::Mem, used: &BTreeSet<Address>) -> Address {
        let support = self.support(m);
        (0..).find(|a| !support.contains(a) && !used.contains(a)).expect("addresses are unbounded")
    }

    /// Relabels addresses; `sigma` must be injective on the support.
    fn rename(&self, m: &Self::Mem, sigma: &Renaming) -> Self::Mem;

    /// Equality up to `tol` on every stored number.
    fn approx_eq(&self, a: &Self::Mem, b: &Self::Mem, tol: f64) -> bool;

    /// Classical reading of address `i`, used in reports.
    fn readout(&self, m: &Self::Mem, i: Address) -> String;

    /// One-line human-readable summary.
    fn describe(&self, m: &Self::Mem) -> String;

    /// Canonical order of the support addresses not in `referenced`. The
    /// order depends only on the stored values: memories that differ by a
    /// renaming of these addresses get the same order.
    fn unreferenced_order(&self, m: &Self::Mem, referenced: &BTreeSet<Address>) -> Vec<Address> {
        self.support(m).into_iter().filter(|a| !referenced.contains(a)).collect()
    }
}

/// Checks arity and distinctness of an update tuple.
pub fn check_tuple(addrs: &[Address], label: &OpLabel) -> Result<(), MemoryError> {
    if addrs.len() != label.arity {
        return Err(MemoryError::Arity { label: label.name.clone(), expected: label.arity, got: addrs.len() });
    }
    let mut seen = BTreeSet::new();
    for a in addrs {
        if !seen.insert(*a) {
            return Err(MemoryError::Duplicate(*a));
        }
    }
    Ok(())
}

/// Image of `a` under `sigma`.
pub fn rename_addr(sigma: &Renaming, a: Address) -> Address {
    sigma.get(&a).copied().unwrap_or(a)
}

/// The renaming sending `referenced` (in order, duplicates ignored) to
/// `0, 1, 2, …`, followed by the remaining support addresses of `m` in the
/// structure's canonical order.
pub fn canonical_renaming<S: MemoryStructure>(ms: &S, m: &S::Mem, referenced: &[Address]) -> Renaming {
    let mut sigma = Renaming::new();
    let mut seen = BTreeSet::new();
    for a in referenced {
        if seen.insert(*a) {
            sigma.insert(*a, sigma.len());
        }
    }
    for a in ms.unreferenced_order(m, &seen) {
        sigma.insert(a, sigma.len());
    }
    sigma
}

/// Runtime choice among the three bundled structures.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    Int,
    Prob,
    Quantum,
}

impl std::str::FromStr for Backend {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "int" => Ok(Backend::Int),
            "prob" => Ok(Backend::Prob),
            "quantum" => Ok(Backend::Quantum),
            other => Err(format!("unknown backend `{other}` (expected int, prob or quantum)")),
        }
    }
}

impl std::fmt::Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Backend::Int => "int",
            Backend::Prob => "prob",
            Backend::Quantum => "quantum",
        })
    }
}
