//! Concrete syntax.
//!
//! ```text
//! term  ::= \x y … . term | let <x, y> = term in term
//!         | letrec f x = term in term | if term then term else term | app
//! app   ::= atom atom*
//! atom  ::= ident | new | ( term ) | < term , term (, term)* >
//! ```
//!
//! `λ` may replace the backslash, tuples nest to the right, and `--` starts
//! a line comment. Free identifiers naming a memory operation become
//! constants.

use std::collections::BTreeSet;

use thiserror::Error;

use super::Term;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Lambda,
    Dot,
    LParen,
    RParen,
    LAngle,
    RAngle,
    Comma,
    Equals,
    Let,
    In,
    LetRec,
    If,
    Then,
    Else,
    New,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(x) => format!("identifier `{x}`"),
            Tok::Eof => "end of input".into(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::Lambda => "\\",
            Tok::Dot => ".",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LAngle => "<",
            Tok::RAngle => ">",
            Tok::Comma => ",",
            Tok::Equals => "=",
            Tok::Let => "let",
            Tok::In => "in",
            Tok::LetRec => "letrec",
            Tok::If => "if",
            Tok::Then => "then",
            Tok::Else => "else",
            Tok::New => "new",
            Tok::Ident(_) | Tok::Eof => "",
        }
    }
}

struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let mut advance = |n: usize, i: &mut usize| {
            for _ in 0..n {
                if chars[*i] == '\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
                *i += 1;
            }
        };
        if c.is_whitespace() {
            advance(1, &mut i);
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'-') {
            while i < chars.len() && chars[i] != '\n' {
                advance(1, &mut i);
            }
            continue;
        }
        let single = match c {
            '\\' | 'λ' => Some(Tok::Lambda),
            '.' => Some(Tok::Dot),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '<' | '⟨' => Some(Tok::LAngle),
            '>' | '⟩' => Some(Tok::RAngle),
            ',' => Some(Tok::Comma),
            '=' => Some(Tok::Equals),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Spanned { tok, line: l0, col: c0 });
            advance(1, &mut i);
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            let mut j = i;
            while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_' || chars[j] == '\'') {
                j += 1;
            }
            let word: String = chars[start..j].iter().collect();
            advance(j - i, &mut i);
            let tok = match word.as_str() {
                "let" => Tok::Let,
                "in" => Tok::In,
                "letrec" => Tok::LetRec,
                "if" => Tok::If,
                "then" => Tok::Then,
                "else" => Tok::Else,
                "new" => Tok::New,
                _ => Tok::Ident(word),
            };
            out.push(Spanned { tok, line: l0, col: c0 });
            continue;
        }
        return Err(ParseError { line: l0, col: c0, message: format!("unexpected character `{c}`") });
    }
    out.push(Spanned { tok: Tok::Eof, line, col });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn error(&self, message: String) -> ParseError {
        let t = &self.toks[self.pos];
        ParseError { line: t.line, col: t.col, message }
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if t != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("expected {}, found {}", want.describe(), self.peek().describe())))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(x) => {
                self.bump();
                Ok(x)
            }
            other => Err(self.error(format!("expected an identifier, found {}", other.describe()))),
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        match self.peek() {
            Tok::Lambda => {
                self.bump();
                let mut xs = vec![self.ident()?];
                while let Tok::Ident(_) = self.peek() {
                    xs.push(self.ident()?);
                }
                self.expect(Tok::Dot)?;
                let body = self.term()?;
                Ok(xs.iter().rev().fold(body, |b, x| Term::lam(x, b)))
            }
            Tok::Let => {
                self.bump();
                self.expect(Tok::LAngle)?;
                let x = self.ident()?;
                self.expect(Tok::Comma)?;
                let y = self.ident()?;
                self.expect(Tok::RAngle)?;
                self.expect(Tok::Equals)?;
                let m = self.term()?;
                self.expect(Tok::In)?;
                let n = self.term()?;
                Ok(Term::let_pair(&x, &y, m, n))
            }
            Tok::LetRec => {
                self.bump();
                let f = self.ident()?;
                let x = self.ident()?;
                self.expect(Tok::Equals)?;
                let m = self.term()?;
                self.expect(Tok::In)?;
                let n = self.term()?;
                Ok(Term::letrec(&f, &x, m, n))
            }
            Tok::If => {
                self.bump();
                let p = self.term()?;
                self.expect(Tok::Then)?;
                let m = self.term()?;
                self.expect(Tok::Else)?;
                let n = self.term()?;
                Ok(Term::ite(p, m, n))
            }
            _ => self.app(),
        }
    }

    fn starts_atom(&self) -> bool {
        matches!(self.peek(), Tok::Ident(_) | Tok::New | Tok::LParen | Tok::LAngle)
    }

    fn app(&mut self) -> Result<Term, ParseError> {
        let mut t = self.atom()?;
        while self.starts_atom() {
            let a = self.atom()?;
            t = Term::app(t, a);
        }
        Ok(t)
    }

    fn atom(&mut self) -> Result<Term, ParseError> {
        match self.peek().clone() {
            Tok::Ident(x) => {
                self.bump();
                Ok(Term::Var(x))
            }
            Tok::New => {
                self.bump();
                Ok(Term::New)
            }
            Tok::LParen => {
                self.bump();
                let t = self.term()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            Tok::LAngle => {
                self.bump();
                let mut items = vec![self.term()?];
                while *self.peek() == Tok::Comma {
                    self.bump();
                    items.push(self.term()?);
                }
                if items.len() < 2 {
                    return Err(self.error("a tuple needs at least two components".into()));
                }
                self.expect(Tok::RAngle)?;
                let last = items.pop().expect("two items");
                Ok(items.into_iter().rev().fold(last, |acc, t| Term::pair(t, acc)))
            }
            other => Err(self.error(format!("expected a term, found {}", other.describe()))),
        }
    }
}

/// Parses a program. Free identifiers listed in `constants` become
/// [`Term::Const`].
pub fn parse_term(src: &str, constants: &[&str]) -> Result<Term, ParseError> {
    let mut p = Parser { toks: lex(src)?, pos: 0 };
    let t = p.term()?;
    if *p.peek() != Tok::Eof {
        return Err(p.error(format!("unexpected {} after the end of the term", p.peek().describe())));
    }
    let names: BTreeSet<&str> = constants.iter().copied().collect();
    Ok(resolve(&t, &names, &mut Vec::new()))
}

fn resolve(t: &Term, names: &BTreeSet<&str>, bound: &mut Vec<String>) -> Term {
    let under = |xs: &[&String], b: &Term, bound: &mut Vec<String>| {
        let n = bound.len();
        bound.extend(xs.iter().map(|x| (*x).clone()));
        let r = resolve(b, names, bound);
        bound.truncate(n);
        Box::new(r)
    };
    match t {
        Term::Var(x) if !bound.contains(x) && names.contains(x.as_str()) => Term::Const(x.clone()),
        Term::Var(_) | Term::New | Term::Const(_) => t.clone(),
        Term::Lam(x, b) => Term::Lam(x.clone(), under(&[x], b, bound)),
        Term::App(m, n) => Term::App(under(&[], m, bound), under(&[], n, bound)),
        Term::Pair(m, n) => Term::Pair(under(&[], m, bound), under(&[], n, bound)),
        Term::LetPair(x, y, m, n) => {
            Term::LetPair(x.clone(), y.clone(), under(&[], m, bound), under(&[x, y], n, bound))
        }
        Term::LetRec(f, x, m, n) => Term::LetRec(f.clone(), x.clone(), under(&[f, x], m, bound), under(&[f], n, bound)),
        Term::If(p, m, n) => Term::If(under(&[], p, bound), under(&[], m, bound), under(&[], n, bound)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_recursive_coin() {
        let src = "letrec f x = (if x then \\g. new else \\g. g (H new)) f in f (H new)";
        let t = parse_term(src, &["H"]).unwrap();
        let h_new = Term::app(Term::Const("H".into()), Term::New);
        let body = Term::app(
            Term::ite(
                Term::var("x"),
                Term::lam("g", Term::New),
                Term::lam("g", Term::app(Term::var("g"), h_new.clone())),
            ),
            Term::var("f"),
        );
        assert_eq!(t, Term::letrec("f", "x", body, Term::app(Term::var("f"), h_new)));
    }

    #[test]
    fn tuples_nest_right_and_comments_are_skipped() {
        let t = parse_term("-- three\n<new, new, new>", &[]).unwrap();
        assert_eq!(t, Term::pair(Term::New, Term::pair(Term::New, Term::New)));
    }

    #[test]
    fn bound_names_shadow_constants() {
        let t = parse_term("\\H. H new", &["H"]).unwrap();
        assert_eq!(t, Term::lam("H", Term::app(Term::var("H"), Term::New)));
        let u = parse_term("λx y. CNOT <x, y>", &["CNOT"]).unwrap();
        assert_eq!(
            u,
            Term::lam(
                "x",
                Term::lam("y", Term::app(Term::Const("CNOT".into()), Term::pair(Term::var("x"), Term::var("y"))))
            )
        );
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_term("let <x y> = new in x", &[]).unwrap_err();
        assert_eq!((e.line, e.col), (1, 8));
        let e = parse_term("new\n  )", &[]).unwrap_err();
        assert_eq!((e.line, e.col), (2, 3));
        assert!(parse_term("if new then new", &[]).is_err());
        assert!(parse_term("<new>", &[]).is_err());
        assert!(parse_term("x # y", &[]).is_err());
    }

    #[test]
    fn display_reparses() {
        let src = "let <a,b> = CNOT <new, H new> in (if a then \\q. q else \\q. X q) b";
        let t = parse_term(src, &["CNOT", "H", "X"]).unwrap();
        let again = parse_term(&t.to_string(), &["CNOT", "H", "X"]).unwrap();
        assert_eq!(t, again);
    }
}
