//! Formulas of multiplicative exponential linear logic with units.

use std::fmt;
use std::sync::Arc;

/// `1 | ⊥ | A⊗B | A⅋B | !A | ?A`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    One,
    Bot,
    Tensor(Arc<Formula>, Arc<Formula>),
    Par(Arc<Formula>, Arc<Formula>),
    OfCourse(Arc<Formula>),
    WhyNot(Arc<Formula>),
}

impl Formula {
    pub fn tensor(a: Formula, b: Formula) -> Formula {
        Formula::Tensor(Arc::new(a), Arc::new(b))
    }

    pub fn par(a: Formula, b: Formula) -> Formula {
        Formula::Par(Arc::new(a), Arc::new(b))
    }

    pub fn of_course(a: Formula) -> Formula {
        Formula::OfCourse(Arc::new(a))
    }

    pub fn why_not(a: Formula) -> Formula {
        Formula::WhyNot(Arc::new(a))
    }

    /// `A ⊸ B := A^⊥ ⅋ B`.
    pub fn lolli(a: Formula, b: Formula) -> Formula {
        Formula::par(a.neg(), b)
    }

    /// Linear negation.
    pub fn neg(&self) -> Formula {
        match self {
            Formula::One => Formula::Bot,
            Formula::Bot => Formula::One,
            Formula::Tensor(a, b) => Formula::par(a.neg(), b.neg()),
            Formula::Par(a, b) => Formula::tensor(a.neg(), b.neg()),
            Formula::OfCourse(a) => Formula::why_not(a.neg()),
            Formula::WhyNot(a) => Formula::of_course(a.neg()),
        }
    }

    /// Positive formulas: `1`, `A⊗B` and `!A`.
    pub fn is_positive(&self) -> bool {
        matches!(self, Formula::One | Formula::Tensor(..) | Formula::OfCourse(_))
    }

    /// Number of occurrences of `1`.
    pub fn count_ones(&self) -> usize {
        match self {
            Formula::One => 1,
            Formula::Bot => 0,
            Formula::Tensor(a, b) | Formula::Par(a, b) => a.count_ones() + b.count_ones(),
            Formula::OfCourse(a) | Formula::WhyNot(a) => a.count_ones(),
        }
    }

    /// The immediate subformula of `!A` or `?A`.
    pub fn body(&self) -> Option<&Formula> {
        match self {
            Formula::OfCourse(a) | Formula::WhyNot(a) => Some(a),
            _ => None,
        }
    }

    /// The two subformulas of `A⊗B` or `A⅋B`.
    pub fn halves(&self) -> Option<(&Formula, &Formula)> {
        match self {
            Formula::Tensor(a, b) | Formula::Par(a, b) => Some((a, b)),
            _ => None,
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn atom(x: &Formula, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match x {
                Formula::Tensor(..) | Formula::Par(..) => write!(f, "({x})"),
                _ => write!(f, "{x}"),
            }
        }
        match self {
            Formula::One => f.write_str("1"),
            Formula::Bot => f.write_str("⊥"),
            Formula::Tensor(a, b) => {
                atom(a, f)?;
                f.write_str(" ⊗ ")?;
                atom(b, f)
            }
            Formula::Par(a, b) => {
                atom(a, f)?;
                f.write_str(" ⅋ ")?;
                atom(b, f)
            }
            Formula::OfCourse(a) => {
                f.write_str("!")?;
                atom(a, f)
            }
            Formula::WhyNot(a) => {
                f.write_str("?")?;
                atom(a, f)
            }
        }
    }
}

impl fmt::Debug for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}
