//! Normal-ordered multi-trace generators and series over them.
//!
//! A [`Generator`] stands for `N^{-|a|/2} :Tr(..) .. Tr(..):`, the
//! normalization being implicit. Generators are kept in canonical form:
//! each trace word is rotated to its lexicographically least rotation and
//! the words are sorted, so equal observables compare equal.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use thiserror::Error;

use crate::coeff::{fmt_unsigned_term, Coefficient, Monomial, Rational};
use num_traits::Signed;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ObservableError {
    #[error("trace word {0} is empty")]
    EmptyTrace(usize),
    #[error("generator mixes colored and uncolored slots")]
    MixedColoring,
    #[error("color index must be at least 1")]
    ZeroColor,
    #[error("operands differ in coloring (colored vs uncolored)")]
    ModeMismatch,
}

/// One field factor inside a trace.
///
/// `color` is the projector that immediately follows this field in the
/// trace, `Tr(.. M P_color ..)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Slot {
    pub label: String,
    pub conjugated: bool,
    pub color: Option<u8>,
}

impl Slot {
    pub fn new(label: impl Into<String>) -> Self {
        Slot {
            label: label.into(),
            conjugated: false,
            color: None,
        }
    }

    pub fn colored(label: impl Into<String>, color: u8) -> Self {
        Slot {
            color: Some(color),
            ..Slot::new(label)
        }
    }

    pub fn conj(mut self) -> Self {
        self.conjugated = !self.conjugated;
        self
    }

    /// The label as it appears inside kernel symbols (`~x` when conjugated).
    pub fn reference(&self) -> String {
        if self.conjugated {
            format!("~{}", self.label)
        } else {
            self.label.clone()
        }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.reference())?;
        if let Some(c) = self.color {
            write!(f, "@{c}")?;
        }
        Ok(())
    }
}

/// A single trace factor, stored in its least rotation.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TraceWord {
    slots: Vec<Slot>,
}

impl TraceWord {
    /// Canonicalizes the rotation; the word must be nonempty.
    pub fn new(slots: Vec<Slot>) -> Self {
        assert!(!slots.is_empty(), "trace words are nonempty");
        let n = slots.len();
        let best = (1..n).fold(0, |best, r| {
            let cand = (0..n).map(|i| &slots[(r + i) % n]);
            let cur = (0..n).map(|i| &slots[(best + i) % n]);
            if cand.lt(cur) {
                r
            } else {
                best
            }
        });
        let mut slots = slots;
        slots.rotate_left(best);
        TraceWord { slots }
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Hermitian conjugate of the word: order reversed, conjugation flags
    /// flipped and each projector reattached to the field that precedes it
    /// in the reversed word.
    ///
    /// `Tr(M1 Pa M2 Pb M3 Pc)^* = Tr(M3 Pb M2 Pa M1 Pc)`.
    pub fn star(&self) -> TraceWord {
        let n = self.slots.len();
        let reversed = (0..n)
            .rev()
            .map(|i| {
                let mut s = self.slots[i].clone().conj();
                s.color = self.slots[(i + n - 1) % n].color;
                s
            })
            .collect();
        TraceWord::new(reversed)
    }
}

impl fmt::Display for TraceWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tr[")?;
        for (i, s) in self.slots.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, "]")
    }
}

/// Whether a generator carries projector colors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coloring {
    /// The unit `W_0`, compatible with either mode.
    Neutral,
    Uncolored,
    Colored,
}

/// A canonical multi-trace generator; the empty generator is the unit.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Generator {
    traces: Vec<TraceWord>,
}

/// Orders generators by total leg count, then trace count, then words, so
/// that the unit comes first and lower-order observables precede higher ones.
impl Ord for Generator {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.total_legs(), self.traces.len(), &self.traces).cmp(&(
            other.total_legs(),
            other.traces.len(),
            &other.traces,
        ))
    }
}

impl PartialOrd for Generator {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Generator {
    pub fn unit() -> Self {
        Generator::default()
    }

    /// Builds a canonical generator from raw words.
    pub fn new(words: Vec<Vec<Slot>>) -> Result<Self, ObservableError> {
        let mut colored = None;
        for (i, w) in words.iter().enumerate() {
            if w.is_empty() {
                return Err(ObservableError::EmptyTrace(i));
            }
            for s in w {
                if s.color == Some(0) {
                    return Err(ObservableError::ZeroColor);
                }
                match colored {
                    None => colored = Some(s.color.is_some()),
                    Some(c) if c != s.color.is_some() => return Err(ObservableError::MixedColoring),
                    _ => {}
                }
            }
        }
        Ok(Self::from_words(words.into_iter().map(TraceWord::new).collect()))
    }

    /// Uncolored generator from label lists.
    pub fn from_labels(words: &[&[&str]]) -> Result<Self, ObservableError> {
        Self::new(
            words
                .iter()
                .map(|w| w.iter().map(|l| Slot::new(*l)).collect())
                .collect(),
        )
    }

    pub(crate) fn from_words(mut traces: Vec<TraceWord>) -> Self {
        traces.sort();
        Generator { traces }
    }

    pub fn traces(&self) -> &[TraceWord] {
        &self.traces
    }

    pub fn is_unit(&self) -> bool {
        self.traces.is_empty()
    }

    /// The multi-index `a = (a_1, .., a_T)` in canonical trace order.
    pub fn multi_index(&self) -> Vec<usize> {
        self.traces.iter().map(TraceWord::len).collect()
    }

    pub fn trace_count(&self) -> usize {
        self.traces.len()
    }

    /// `|a|`, the number of field factors.
    pub fn total_legs(&self) -> usize {
        self.traces.iter().map(TraceWord::len).sum()
    }

    pub fn slots(&self) -> impl Iterator<Item = &Slot> {
        self.traces.iter().flat_map(|t| t.slots.iter())
    }

    pub fn coloring(&self) -> Coloring {
        match self.slots().next() {
            None => Coloring::Neutral,
            Some(s) if s.color.is_some() => Coloring::Colored,
            Some(_) => Coloring::Uncolored,
        }
    }

    pub fn max_color(&self) -> u8 {
        self.slots().filter_map(|s| s.color).max().unwrap_or(0)
    }

    pub fn star(&self) -> Generator {
        Self::from_words(self.traces.iter().map(TraceWord::star).collect())
    }

    /// Trace-list concatenation, `W_a ._class W_b = W_{ab}`.
    pub fn concat(&self, other: &Generator) -> Generator {
        Self::from_words(self.traces.iter().chain(other.traces.iter()).cloned().collect())
    }

    /// Applies `f` to every slot and recanonicalizes.
    pub fn map_slots(&self, mut f: impl FnMut(&Slot) -> Slot) -> Generator {
        Self::from_words(
            self.traces
                .iter()
                .map(|t| TraceWord::new(t.slots.iter().map(&mut f).collect()))
                .collect(),
        )
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "W{{")?;
        for (i, t) in self.traces.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{t}")?;
        }
        write!(f, "}}")
    }
}

pub(crate) fn check_modes(a: Coloring, b: Coloring) -> Result<Coloring, ObservableError> {
    match (a, b) {
        (Coloring::Neutral, x) | (x, Coloring::Neutral) => Ok(x),
        (x, y) if x == y => Ok(x),
        _ => Err(ObservableError::ModeMismatch),
    }
}

/// A finite linear combination of generators with [`Coefficient`]s.
///
/// `truncated` records that some terms were dropped by an eps-degree cap in
/// this value or any value it was computed from.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Series {
    terms: BTreeMap<Generator, Coefficient>,
    pub truncated: bool,
}

impl Series {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn unit() -> Self {
        Self::generator(Generator::unit())
    }

    pub fn generator(g: Generator) -> Self {
        Self::term(Coefficient::one(), g)
    }

    pub fn scalar(c: Coefficient) -> Self {
        Self::term(c, Generator::unit())
    }

    pub fn term(c: Coefficient, g: Generator) -> Self {
        let mut s = Series::zero();
        s.add_term(c, g);
        s
    }

    pub fn add_term(&mut self, c: Coefficient, g: Generator) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(g) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                let sum = e.get() + &c;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Generator, &Coefficient)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, g: &Generator) -> Coefficient {
        self.terms.get(g).cloned().unwrap_or_default()
    }

    /// The coefficient of the unit, i.e. the vacuum expectation.
    pub fn unit_coefficient(&self) -> Coefficient {
        self.coefficient(&Generator::unit())
    }

    /// Whether every term is a multiple of the unit.
    pub fn is_scalar(&self) -> bool {
        self.terms.keys().all(Generator::is_unit)
    }

    pub fn coloring(&self) -> Result<Coloring, ObservableError> {
        self.terms
            .keys()
            .try_fold(Coloring::Neutral, |acc, g| check_modes(acc, g.coloring()))
    }

    pub fn max_color(&self) -> u8 {
        self.terms.keys().map(Generator::max_color).max().unwrap_or(0)
    }

    /// Minimum eps degree over all terms; `None` for the zero series.
    pub fn degree(&self) -> Option<i32> {
        self.terms.values().filter_map(Coefficient::eps_min_degree).min()
    }

    pub fn scale(&self, c: &Coefficient) -> Series {
        self.map_coefficients(|x| x * c)
    }

    pub fn scale_rational(&self, c: &Rational) -> Series {
        self.map_coefficients(|x| x.scale(c))
    }

    pub fn map_coefficients(&self, mut f: impl FnMut(&Coefficient) -> Coefficient) -> Series {
        let mut out = Series {
            truncated: self.truncated,
            ..Series::zero()
        };
        for (g, c) in &self.terms {
            out.add_term(f(c), g.clone());
        }
        out
    }

    pub fn try_map_coefficients<E>(
        &self,
        mut f: impl FnMut(&Coefficient) -> Result<Coefficient, E>,
    ) -> Result<Series, E> {
        let mut out = Series {
            truncated: self.truncated,
            ..Series::zero()
        };
        for (g, c) in &self.terms {
            out.add_term(f(c)?, g.clone());
        }
        Ok(out)
    }

    /// Keeps the terms whose generator passes `keep`.
    pub fn filter_generators(&self, mut keep: impl FnMut(&Generator) -> bool) -> Series {
        Series {
            terms: self
                .terms
                .iter()
                .filter(|(g, _)| keep(g))
                .map(|(g, c)| (g.clone(), c.clone()))
                .collect(),
            truncated: self.truncated,
        }
    }

    pub fn map_generators(&self, mut f: impl FnMut(&Generator) -> Generator) -> Series {
        let mut out = Series {
            truncated: self.truncated,
            ..Series::zero()
        };
        for (g, c) in &self.terms {
            out.add_term(c.clone(), f(g));
        }
        out
    }

    /// The *-operation: conjugates every generator (and kernel symbols in
    /// the coefficients); an involution.
    pub fn star(&self) -> Series {
        let mut out = Series {
            truncated: self.truncated,
            ..Series::zero()
        };
        for (g, c) in &self.terms {
            out.add_term(c.conjugate(), g.star());
        }
        out
    }

    /// Commutative trace-concatenation product, bilinearly extended.
    pub fn classical_product(&self, other: &Series) -> Result<Series, ObservableError> {
        check_modes(self.coloring()?, other.coloring()?)?;
        let mut out = Series {
            truncated: self.truncated || other.truncated,
            ..Series::zero()
        };
        for (ga, ca) in &self.terms {
            for (gb, cb) in &other.terms {
                out.add_term(ca * cb, ga.concat(gb));
            }
        }
        Ok(out)
    }

    /// Flattened `(coefficient, monomial, generator)` triples in print order:
    /// by monomial (eps first), then generator.
    pub fn flat_terms(&self) -> Vec<(&Rational, &Monomial, &Generator)> {
        let mut out: Vec<_> = self
            .terms
            .iter()
            .flat_map(|(g, c)| c.terms().map(move |(m, r)| (r, m, g)))
            .collect();
        out.sort_by(|a, b| (a.1, a.2).cmp(&(b.1, b.2)));
        out
    }
}

impl fmt::Display for Series {
    /// Canonical rendering `c*mono*W{..} + ..`; the zero series is `0`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let flat = self.flat_terms();
        if flat.is_empty() {
            return write!(f, "0");
        }
        for (i, (r, m, g)) in flat.into_iter().enumerate() {
            let neg = r.is_negative();
            match (i, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            write!(f, "{}*{}", fmt_unsigned_term(r, m), g)?;
        }
        Ok(())
    }
}

impl Add for &Series {
    type Output = Series;

    fn add(self, rhs: &Series) -> Series {
        let mut out = self.clone();
        out.truncated |= rhs.truncated;
        for (g, c) in &rhs.terms {
            out.add_term(c.clone(), g.clone());
        }
        out
    }
}

impl Sub for &Series {
    type Output = Series;

    fn sub(self, rhs: &Series) -> Series {
        self + &(-rhs)
    }
}

impl Neg for &Series {
    type Output = Series;

    fn neg(self) -> Series {
        self.map_coefficients(|c| -c)
    }
}

impl Add for Series {
    type Output = Series;
    fn add(self, rhs: Series) -> Series {
        &self + &rhs
    }
}

impl Sub for Series {
    type Output = Series;
    fn sub(self, rhs: Series) -> Series {
        &self - &rhs
    }
}

impl Neg for Series {
    type Output = Series;
    fn neg(self) -> Series {
        -&self
    }
}
