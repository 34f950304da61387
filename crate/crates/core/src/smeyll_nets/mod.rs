//! Nets of multiplicative exponential linear logic with units, extended with
//! ⊥-boxes for tests, sync nodes for memory operations and Y-boxes for
//! recursion.

mod correct;
mod formula;
mod net;
mod reduce;

pub use correct::{check_correct, CorrectnessError};
pub use formula::Formula;
pub use net::{Edge, EdgeId, Net, Node, NodeId, NodeKind, Place, Side};
pub use reduce::{find_redexes, fire, is_redex, reduce, Branch, Fired, Redex, RedexKind, ReduceError, Reduct};
