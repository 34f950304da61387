//! Exponential signatures, formula stacks, box stacks and positions.

use std::fmt;
use std::sync::Arc;

use crate::smeyll_nets::{EdgeId, Formula};

/// An exponential signature: the name of one copy of a box. Signatures
/// are shared trees carrying their size and a structural hash. Equality,
/// hashing and ordering of distinct signatures take constant time.
#[derive(Clone)]
pub struct Sig(Arc<SigNode>);

struct SigNode {
    shape: Shape,
    size: usize,
    hash: u64,
}

/// The outermost constructor of a signature.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Shape {
    Star,
    L(Sig),
    R(Sig),
    Pair(Sig, Sig),
    Y(Sig, Sig),
}

fn mix(h: u64, x: u64) -> u64 {
    let mut z = h ^ x.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(h << 6).wrapping_add(h >> 2);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Sig {
    fn make(shape: Shape) -> Sig {
        let (size, hash) = match &shape {
            Shape::Star => (1, mix(0, 1)),
            Shape::L(a) => (1 + a.size(), mix(2, a.0.hash)),
            Shape::R(a) => (1 + a.size(), mix(3, a.0.hash)),
            Shape::Pair(a, b) => (1 + a.size() + b.size(), mix(mix(4, a.0.hash), b.0.hash)),
            Shape::Y(a, b) => (1 + a.size() + b.size(), mix(mix(5, a.0.hash), b.0.hash)),
        };
        Sig(Arc::new(SigNode { shape, size, hash }))
    }

    pub fn star() -> Sig {
        Sig::make(Shape::Star)
    }

    pub fn l(s: Sig) -> Sig {
        Sig::make(Shape::L(s))
    }

    pub fn r(s: Sig) -> Sig {
        Sig::make(Shape::R(s))
    }

    pub fn pair(a: Sig, b: Sig) -> Sig {
        Sig::make(Shape::Pair(a, b))
    }

    pub fn y(a: Sig, b: Sig) -> Sig {
        Sig::make(Shape::Y(a, b))
    }

    pub fn shape(&self) -> &Shape {
        &self.0.shape
    }

    pub fn is_star(&self) -> bool {
        matches!(self.shape(), Shape::Star)
    }

    /// Number of constructors.
    pub fn size(&self) -> usize {
        self.0.size
    }
}

/// Moves the children of `shape` onto `out`, leaving a leaf.
fn take_children(shape: &mut Shape, out: &mut Vec<Sig>) {
    match std::mem::replace(shape, Shape::Star) {
        Shape::Star => {}
        Shape::L(a) | Shape::R(a) => out.push(a),
        Shape::Pair(a, b) | Shape::Y(a, b) => {
            out.push(a);
            out.push(b);
        }
    }
}

impl Drop for SigNode {
    fn drop(&mut self) {
        let mut pending = Vec::new();
        take_children(&mut self.shape, &mut pending);
        while let Some(s) = pending.pop() {
            if let Ok(mut node) = Arc::try_unwrap(s.0) {
                take_children(&mut node.shape, &mut pending);
            }
        }
    }
}

impl PartialEq for Sig {
    fn eq(&self, other: &Sig) -> bool {
        let mut pending = vec![(self, other)];
        while let Some((a, b)) = pending.pop() {
            if Arc::ptr_eq(&a.0, &b.0) {
                continue;
            }
            if a.0.hash != b.0.hash || a.0.size != b.0.size {
                return false;
            }
            match (a.shape(), b.shape()) {
                (Shape::Star, Shape::Star) => {}
                (Shape::L(x), Shape::L(y)) | (Shape::R(x), Shape::R(y)) => pending.push((x, y)),
                (Shape::Pair(x1, x2), Shape::Pair(y1, y2)) | (Shape::Y(x1, x2), Shape::Y(y1, y2)) => {
                    pending.push((x1, y1));
                    pending.push((x2, y2));
                }
                _ => return false,
            }
        }
        true
    }
}

impl Eq for Sig {}

impl std::hash::Hash for Sig {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl PartialOrd for Sig {
    fn partial_cmp(&self, other: &Sig) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Sig {
    fn cmp(&self, other: &Sig) -> std::cmp::Ordering {
        if self == other {
            return std::cmp::Ordering::Equal;
        }
        (self.0.size, self.0.hash).cmp(&(other.0.size, other.0.hash)).then_with(|| self.0.shape.cmp(&other.0.shape))
    }
}

enum Piece<'a> {
    Sig(&'a Sig),
    Text(&'static str),
}

impl fmt::Display for Sig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut pending = vec![Piece::Sig(self)];
        while let Some(piece) = pending.pop() {
            let s = match piece {
                Piece::Text(t) => {
                    f.write_str(t)?;
                    continue;
                }
                Piece::Sig(s) => s,
            };
            let (open, close, children): (&str, &str, Vec<&Sig>) = match s.shape() {
                Shape::Star => {
                    f.write_str("*")?;
                    continue;
                }
                Shape::L(a) => ("l(", ")", vec![a]),
                Shape::R(a) => ("r(", ")", vec![a]),
                Shape::Pair(a, b) => ("⟨", "⟩", vec![a, b]),
                Shape::Y(a, b) => ("y(", ")", vec![a, b]),
            };
            f.write_str(open)?;
            pending.push(Piece::Text(close));
            for (k, c) in children.into_iter().enumerate().rev() {
                pending.push(Piece::Sig(c));
                if k > 0 {
                    pending.push(Piece::Text(","));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Sig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// An element of a formula stack.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Item {
    L,
    R,
    Sig(Sig),
}

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Item::L => f.write_str("l"),
            Item::R => f.write_str("r"),
            Item::Sig(s) => write!(f, "{s}"),
        }
    }
}

/// A formula stack: a sequence of items ending in `ε` or in `δ`.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Stack {
    /// The items, head last.
    rev: Vec<Item>,
    delta: bool,
}

impl Stack {
    /// `ε`.
    pub fn epsilon() -> Stack {
        Stack::default()
    }

    /// `δ`.
    pub fn delta() -> Stack {
        Stack { rev: Vec::new(), delta: true }
    }

    /// The stack `i1.i2.….in.ε` (or `….δ` when `delta`), head first.
    pub fn from_items(items: impl IntoIterator<Item = Item>, delta: bool) -> Stack {
        let mut rev: Vec<Item> = items.into_iter().collect();
        rev.reverse();
        Stack { rev, delta }
    }

    /// Whether the stack is exactly `δ`.
    pub fn is_delta(&self) -> bool {
        self.delta && self.rev.is_empty()
    }

    /// Whether the stack is exactly `ε`.
    pub fn is_epsilon(&self) -> bool {
        !self.delta && self.rev.is_empty()
    }

    /// Whether the stack ends in `δ`.
    pub fn ends_in_delta(&self) -> bool {
        self.delta
    }

    pub fn head(&self) -> Option<&Item> {
        self.rev.last()
    }

    pub fn len(&self) -> usize {
        self.rev.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rev.is_empty()
    }

    /// The items, head first.
    pub fn items(&self) -> impl Iterator<Item = &Item> {
        self.rev.iter().rev()
    }

    pub fn push(&mut self, it: Item) {
        self.rev.push(it);
    }

    pub fn pushed(mut self, it: Item) -> Stack {
        self.rev.push(it);
        self
    }

    pub fn pop(&mut self) -> Option<Item> {
        self.rev.pop()
    }

    /// Splits off a signature at the head.
    pub fn pop_sig(&mut self) -> Option<Sig> {
        match self.rev.last() {
            Some(Item::Sig(_)) => match self.rev.pop() {
                Some(Item::Sig(s)) => Some(s),
                _ => unreachable!("head checked"),
            },
            _ => None,
        }
    }
}

impl fmt::Display for Stack {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.rev.is_empty() {
            return f.write_str(if self.delta { "δ" } else { "ε" });
        }
        let mut first = true;
        for it in self.items() {
            if !first {
                f.write_str(".")?;
            }
            first = false;
            write!(f, "{it}")?;
        }
        if self.delta {
            f.write_str(".δ")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Stack {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// The symbol a formula stack points to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Symbol {
    One,
    Bot,
    OfCourse,
    WhyNot,
}

/// One step of the walk from a formula to a subformula.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Step {
    Left,
    Right,
    Under,
}

/// An occurrence of a unit or a modality in a formula: its symbol and the
/// path leading to it from the root.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Occurrence {
    pub symbol: Symbol,
    pub path: Vec<Step>,
}

/// The occurrence `s` indicates in `a`, if the walk matches. `δ` alone
/// indicates nothing.
pub fn indicator(s: &Stack, a: &Formula) -> Option<Occurrence> {
    let mut path = Vec::new();
    let symbol = walk(s, a, Some(&mut path))?;
    Some(Occurrence { symbol, path })
}

/// The symbol `s` indicates in `a`, without recording the path.
pub fn indicated(s: &Stack, a: &Formula) -> Option<Symbol> {
    walk(s, a, None)
}

fn walk(s: &Stack, a: &Formula, mut path: Option<&mut Vec<Step>>) -> Option<Symbol> {
    let mut cur = a;
    let mut items = s.items().peekable();
    loop {
        let mut record = |st: Step| {
            if let Some(p) = path.as_deref_mut() {
                p.push(st);
            }
        };
        match cur {
            Formula::One | Formula::Bot => {
                if items.next().is_some() || s.delta {
                    return None;
                }
                return Some(if *cur == Formula::One { Symbol::One } else { Symbol::Bot });
            }
            Formula::Tensor(l, r) | Formula::Par(l, r) => match items.next()? {
                Item::L => {
                    record(Step::Left);
                    cur = l;
                }
                Item::R => {
                    record(Step::Right);
                    cur = r;
                }
                Item::Sig(_) => return None,
            },
            Formula::OfCourse(b) | Formula::WhyNot(b) => {
                let Item::Sig(_) = items.next()? else { return None };
                if items.peek().is_none() && s.delta {
                    return Some(if matches!(cur, Formula::OfCourse(_)) { Symbol::OfCourse } else { Symbol::WhyNot });
                }
                record(Step::Under);
                cur = b;
            }
        }
    }
}

/// A position: an edge, a formula stack on its type, and a box stack with
/// one signature per enclosing exponential box.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Position {
    pub edge: EdgeId,
    pub fstack: Stack,
    /// The box stack, innermost box last.
    pub bstack: Vec<Sig>,
}

impl Position {
    pub fn new(edge: EdgeId, fstack: Stack, bstack: Vec<Sig>) -> Position {
        Position { edge, fstack, bstack }
    }
}

/// Writes a box stack innermost first, as `σ.τ.ε`, or `ε` when empty.
pub fn fmt_bstack(t: &[Sig]) -> String {
    if t.is_empty() {
        return "ε".into();
    }
    t.iter().rev().map(|s| s.to_string()).collect::<Vec<_>>().join(".")
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(e{}, {}, {})", self.edge, self.fstack, fmt_bstack(&self.bstack))
    }
}

impl fmt::Debug for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Formula {
        Formula::of_course(Formula::tensor(Formula::Bot, Formula::of_course(Formula::One)))
    }

    fn star() -> Item {
        Item::Sig(Sig::star())
    }

    #[test]
    fn star_delta_indicates_the_outer_bang() {
        let occ = indicator(&Stack::from_items([star()], true), &sample()).unwrap();
        assert_eq!(occ, Occurrence { symbol: Symbol::OfCourse, path: vec![] });
    }

    #[test]
    fn deeper_stack_indicates_the_inner_bang() {
        let s = Stack::from_items([star(), Item::R, star()], true);
        let occ = indicator(&s, &sample()).unwrap();
        assert_eq!(occ, Occurrence { symbol: Symbol::OfCourse, path: vec![Step::Under, Step::Right] });
    }

    #[test]
    fn star_left_indicates_bot() {
        let s = Stack::from_items([star(), Item::L], false);
        assert_eq!(indicated(&s, &sample()), Some(Symbol::Bot));
    }

    #[test]
    fn mismatches_are_undefined() {
        assert_eq!(indicated(&Stack::from_items([Item::L], false), &sample()), None);
        assert_eq!(indicated(&Stack::delta(), &sample()), None);
        assert_eq!(indicated(&Stack::from_items([star()], false), &sample()), None);
        assert_eq!(indicated(&Stack::epsilon(), &Formula::One), Some(Symbol::One));
        assert_eq!(indicated(&Stack::from_items([Item::L], false), &Formula::One), None);
    }

    #[test]
    fn stack_operations_work_at_the_head() {
        let mut s = Stack::from_items([Item::L, star()], true);
        assert_eq!(s.to_string(), "l.*.δ");
        assert_eq!(s.head(), Some(&Item::L));
        assert_eq!(s.pop_sig(), None);
        assert_eq!(s.pop(), Some(Item::L));
        assert_eq!(s.pop_sig(), Some(Sig::star()));
        assert!(s.is_delta());
        s.push(Item::R);
        assert_eq!(s.to_string(), "r.δ");
        assert_eq!(Stack::epsilon().to_string(), "ε");
    }

    #[test]
    fn signatures_print() {
        let s = Sig::y(Sig::star(), Sig::pair(Sig::l(Sig::star()), Sig::r(Sig::star())));
        assert_eq!(s.to_string(), "y(*,⟨l(*),r(*)⟩)");
        assert_eq!(s.size(), 7);
        assert_eq!(Sig::pair(Sig::star(), Sig::l(Sig::star())).to_string(), "⟨*,l(*)⟩");
        let p = Position::new(3, Stack::epsilon(), vec![Sig::star(), Sig::l(Sig::star())]);
        assert_eq!(p.to_string(), "(e3, ε, l(*).*)");
    }

    #[test]
    fn deep_signatures_compare_print_and_drop() {
        let build =
            || (0..200_000).fold(Sig::star(), |s, k| if k % 2 == 0 { Sig::y(s, Sig::star()) } else { Sig::l(s) });
        let (a, b) = (build(), build());
        assert_eq!(a, b);
        assert_eq!(a.cmp(&b), std::cmp::Ordering::Equal);
        assert_ne!(a, Sig::r(b.clone()));
        assert_eq!(a.to_string().len(), b.to_string().len());
        drop((a, b));
    }
}
