//! Memory-based geometry of interaction.
//!
//! The crate provides a generic engine for probabilistic abstract rewrite
//! systems ([`pars`]), parametric memory structures ([`memory`]), proof
//! nets with boxes and synchronization nodes ([`smeyll_nets`]), program
//! nets coupling a net to a memory ([`program_nets`]), a multi-token
//! interaction machine ([`msiam`]) and a linear PCF with memory effects
//! ([`pcfll`]). The three evaluators agree on convergence probabilities,
//! which [`engine`] exposes side by side.
//!
//! ```
//! use memgoi::engine::{Engine, Memory, RunConfig};
//! use memgoi::memory::{Backend, GateSet};
//!
//! let mem = Memory::new(Backend::Quantum, &GateSet::builtin());
//! let term = mem.parse("letrec f x = (if x then \\g. new else \\g. g (H new)) f in f (H new)").unwrap();
//! let out = mem.run(Engine::Msiam, &term, &RunConfig { horizon: 10, ..RunConfig::default() }).unwrap();
//! assert!((out.probability - 0.9990234375).abs() < 1e-12);
//! ```

pub mod corpus;
pub mod engine;
pub mod memory;
pub mod msiam;
pub mod pars;
pub mod pcfll;
pub mod program_nets;
pub mod smeyll_nets;
