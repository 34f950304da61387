//! The multi-token interaction machine: tokens carrying formula and box
//! stacks travel through a net, synchronize on sync nodes, and choose a
//! side of each ⊥-box by testing the memory.

mod machine;
mod stack;

pub use machine::{Dir, Machine, MachineError, MachineState, Status, Structure, Transition, TransitionKind};
pub use stack::{fmt_bstack, indicated, indicator, Item, Occurrence, Position, Shape, Sig, Stack, Step, Symbol};
