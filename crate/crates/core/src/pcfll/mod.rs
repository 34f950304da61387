//! A linearly typed PCF with memory: syntax, type inference, the abstract
//! machine over closures and the translation to program nets.

mod machine;
mod parse;
mod syntax;
mod translate;
mod types;

pub use machine::{decompose, Closure, Head, PcfSystem, ADDRESS_PREFIX};
pub use parse::{parse_term, ParseError};
pub use syntax::{Term, Type};
pub use translate::{translate, translate_closure, translate_program, type_formula, TranslateError};
pub use types::{elaborate, typecheck, Binding, Elab, Kind, TypeError, Typed, VarMode};
