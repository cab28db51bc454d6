//! Text syntax for series.
//!
//! ```text
//! series  := sign? product (('+' | '-') product)*
//! product := power ('*' power)*
//! power   := atom ('^' exponent)?
//! exponent:= '-'? nat | '(' '-'? nat '/' '2' ')'
//! atom    := nat ('/' nat)? | generator | ident '(' ref ',' ref ')'
//!          | ident | '(' series ')'
//! generator := 'W{' trace* '}'
//! trace   := 'Tr[' slot+ ']'
//! slot    := '~'? ident ('@' nat)?
//! ref     := '~'? ident
//! ```
//!
//! `eps`, `hbar` and `s1`, `s2`, .. are the ring variables; any other
//! identifier is a scalar kernel (`g`), and `name(x,y)` an ordered pair
//! kernel. Half-integer powers `eps^(k/2)` only exist for round-tripping
//! normalization bookkeeping. Products are only defined when one side is a
//! multiple of the unit; the algebra product is a separate command.
//!
//! Printing is the canonical [`Series`] rendering, e.g.
//! `1*W{Tr[x1] Tr[y1]} + hbar*g*W{}`.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::coeff::{Coefficient, Kernel, Monomial, Rational, Var};
use crate::observables::{Generator, Series, Slot};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Num(BigInt),
    Ident(String),
    Sym(char),
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(n) => write!(f, "number `{n}`"),
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Sym(c) => write!(f, "`{c}`"),
            Tok::End => write!(f, "end of input"),
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Pos {
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut column) = (1, 1);
    while let Some(&c) = chars.peek() {
        let pos = Pos { line, column };
        if c == '\n' {
            chars.next();
            line += 1;
            column = 1;
            continue;
        }
        if c.is_whitespace() {
            chars.next();
            column += 1;
            continue;
        }
        if c.is_ascii_digit() {
            let mut s = String::new();
            while let Some(&d) = chars.peek().filter(|d| d.is_ascii_digit()) {
                s.push(d);
                chars.next();
                column += 1;
            }
            out.push((Tok::Num(s.parse().expect("digits")), pos));
        } else if c.is_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(&d) = chars.peek().filter(|d| d.is_alphanumeric() || **d == '_' || **d == '\'') {
                s.push(d);
                chars.next();
                column += 1;
            }
            out.push((Tok::Ident(s), pos));
        } else if "+-*/^(),~@{}[]".contains(c) {
            chars.next();
            column += 1;
            out.push((Tok::Sym(c), pos));
        } else {
            return Err(ParseError {
                line,
                column,
                message: format!("unexpected character `{c}`"),
            });
        }
    }
    out.push((Tok::End, Pos { line, column }));
    Ok(out)
}

/// Parser settings.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ParseOptions {
    /// Largest admissible slot color; `Some(0)` forbids colors and `None`
    /// skips the check.
    pub max_color: Option<u8>,
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    opts: ParseOptions,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.at + k).min(self.toks.len() - 1)].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn error_at<T>(&self, pos: Pos, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            line: pos.line,
            column: pos.column,
            message: message.into(),
        })
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        self.error_at(self.pos(), message)
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn eat(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            self.error(format!("expected `{c}`, found {}", self.peek()))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.bump() {
            Tok::Ident(s) => Ok(s),
            other => {
                self.at -= 1;
                self.error(format!("expected {what}, found {other}"))
            }
        }
    }

    fn nat(&mut self) -> Result<BigInt, ParseError> {
        match self.bump() {
            Tok::Num(n) => Ok(n),
            other => {
                self.at -= 1;
                self.error(format!("expected a number, found {other}"))
            }
        }
    }

    fn small(&self, n: &BigInt, pos: Pos) -> Result<i32, ParseError> {
        i32::try_from(n.clone()).or_else(|_| self.error_at(pos, "exponent too large"))
    }

    fn series(&mut self) -> Result<Series, ParseError> {
        let mut acc = if self.eat('-') {
            -self.product()?
        } else {
            self.eat('+');
            self.product()?
        };
        loop {
            if self.eat('+') {
                acc = acc + self.product()?;
            } else if self.eat('-') {
                acc = acc - self.product()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn product(&mut self) -> Result<Series, ParseError> {
        let mut acc = self.power()?;
        while *self.peek() == Tok::Sym('*') {
            let pos = self.pos();
            self.bump();
            let rhs = self.power()?;
            acc = if acc.is_scalar() {
                rhs.scale(&acc.unit_coefficient())
            } else if rhs.is_scalar() {
                acc.scale(&rhs.unit_coefficient())
            } else {
                return self.error_at(
                    pos,
                    "`*` between two generator expressions; use the product command for the algebra product",
                );
            };
        }
        Ok(acc)
    }

    fn power(&mut self) -> Result<Series, ParseError> {
        let base_pos = self.pos();
        let base = self.atom()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let pos = self.pos();
        let half = if self.eat('(') {
            let neg = self.eat('-');
            let n = self.nat()?;
            self.expect('/')?;
            let two = self.nat()?;
            if two != BigInt::from(2) {
                return self.error_at(pos, "fractional exponents must have denominator 2");
            }
            self.expect(')')?;
            let n = self.small(&n, pos)?;
            Some(if neg { -n } else { n })
        } else {
            None
        };
        if !base.is_scalar() {
            return self.error_at(base_pos, "only scalar expressions can be raised to a power");
        }
        let c = base.unit_coefficient();
        let eps_only = c.len() == 1 && {
            let (m, r) = c.terms().next().expect("one term");
            r.is_one() && m.variables() == vec![Var::Eps]
        };
        let eps_half = |c: &Coefficient| c.terms().next().expect("one term").0.eps_half();
        if let Some(h) = half {
            if !eps_only || eps_half(&c) != 2 {
                return self.error_at(pos, "half-integer exponents only apply to eps");
            }
            return Ok(Series::scalar(Coefficient::monomial(Monomial::eps_half_units(h))));
        }
        let neg = self.eat('-');
        let n = self.nat()?;
        let n = self.small(&n, pos)?;
        if !neg {
            return Ok(Series::scalar(c.pow(n as u32)));
        }
        if eps_only {
            return Ok(Series::scalar(Coefficient::monomial(Monomial::eps_half_units(
                -n * eps_half(&c),
            ))));
        }
        match c.as_constant() {
            Some(r) if !r.is_zero() => Ok(Series::scalar(Coefficient::constant(
                num_traits::Pow::pow(r.recip(), n as u32),
            ))),
            _ => self.error_at(pos, "negative exponents only apply to eps and nonzero constants"),
        }
    }

    fn atom(&mut self) -> Result<Series, ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                let mut r = Rational::from_integer(n);
                if *self.peek() == Tok::Sym('/') && matches!(self.peek_at(1), Tok::Num(_)) {
                    self.bump();
                    let d = self.nat()?;
                    if d.is_zero() {
                        return self.error_at(pos, "division by zero");
                    }
                    r /= Rational::from_integer(d);
                }
                Ok(Series::scalar(Coefficient::constant(r)))
            }
            Tok::Sym('(') => {
                self.bump();
                let s = self.series()?;
                self.expect(')')?;
                Ok(s)
            }
            Tok::Ident(name) if name == "W" && *self.peek_at(1) == Tok::Sym('{') => {
                Ok(Series::generator(self.generator()?))
            }
            Tok::Ident(name) => {
                self.bump();
                if self.eat('(') {
                    let first = self.reference()?;
                    self.expect(',')?;
                    let second = self.reference()?;
                    self.expect(')')?;
                    return Ok(Series::scalar(Coefficient::var(Var::Kernel(Kernel::pair(
                        name, first, second,
                    )))));
                }
                Ok(Series::scalar(Coefficient::var(variable(&name))))
            }
            other => self.error(format!("unexpected {other}")),
        }
    }

    fn reference(&mut self) -> Result<String, ParseError> {
        let conj = self.eat('~');
        let label = self.ident("a slot label")?;
        Ok(if conj { format!("~{label}") } else { label })
    }

    fn generator(&mut self) -> Result<Generator, ParseError> {
        let start = self.pos();
        self.bump();
        self.expect('{')?;
        let mut words = Vec::new();
        let mut seen = BTreeSet::new();
        while *self.peek() != Tok::Sym('}') {
            let tpos = self.pos();
            match self.bump() {
                Tok::Ident(t) if t == "Tr" => {}
                other => {
                    self.at -= 1;
                    return self.error(format!("expected `Tr[` or `}}`, found {other}"));
                }
            }
            self.expect('[')?;
            let mut slots = Vec::new();
            while *self.peek() != Tok::Sym(']') {
                let spos = self.pos();
                let conj = self.eat('~');
                let label = self.ident("a slot label")?;
                let color = if self.eat('@') {
                    let cpos = self.pos();
                    let c = self.nat()?;
                    let c = u8::try_from(c).ok().filter(|c| *c >= 1);
                    let Some(c) = c else {
                        return self.error_at(cpos, "color indices start at 1");
                    };
                    if let Some(k) = self.opts.max_color {
                        if c > k {
                            return self.error_at(cpos, format!("unknown color {c} (colors configured: {k})"));
                        }
                    }
                    Some(c)
                } else {
                    None
                };
                if !seen.insert(label.clone()) {
                    return self.error_at(spos, format!("duplicate slot label `{label}` in one generator"));
                }
                slots.push(Slot {
                    label,
                    conjugated: conj,
                    color,
                });
            }
            self.bump();
            if slots.is_empty() {
                return self.error_at(tpos, "empty trace `Tr[]`");
            }
            words.push(slots);
        }
        self.bump();
        Generator::new(words).or_else(|e| self.error_at(start, e.to_string()))
    }
}

fn variable(name: &str) -> Var {
    match name {
        "eps" => Var::Eps,
        "hbar" => Var::Hbar,
        _ => match name.strip_prefix('s').and_then(|d| d.parse::<u8>().ok()) {
            Some(k) if k >= 1 && !name[1..].starts_with('0') => Var::S(k),
            _ => Var::Kernel(Kernel::scalar(name)),
        },
    }
}

/// Parses a series expression.
pub fn parse_series_with(text: &str, opts: ParseOptions) -> Result<Series, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
        opts,
    };
    let s = p.series()?;
    if *p.peek() != Tok::End {
        return p.error(format!("unexpected {} after expression", p.peek()));
    }
    Ok(s)
}

pub fn parse_series(text: &str) -> Result<Series, ParseError> {
    parse_series_with(text, ParseOptions::default())
}

/// Parses a scalar expression (no generators other than the unit).
pub fn parse_coefficient(text: &str) -> Result<Coefficient, ParseError> {
    let s = parse_series(text)?;
    if !s.is_scalar() {
        return Err(ParseError {
            line: 1,
            column: 1,
            message: "expected a scalar expression".into(),
        });
    }
    Ok(s.unit_coefficient())
}

/// The canonical rendering; `parse_series(&print(s)) == s`.
pub fn print(s: &Series) -> String {
    s.to_string()
}

/// Labels of all slots in a series.
pub fn labels(s: &Series) -> BTreeSet<String> {
    s.terms()
        .flat_map(|(g, _)| g.slots().map(|x| x.label.clone()).collect::<Vec<_>>())
        .collect()
}
