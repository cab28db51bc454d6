//! The eps-graded product on series of generators and operations built
//! on it: expectations, commutators, the rescaled bracket, connected
//! products, the nested-commutator identity and color restriction.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use thiserror::Error;

use crate::coeff::{Coefficient, Kernel, Monomial, Rational, Var};
use crate::observables::{Coloring, Generator, ObservableError, Series, Slot};
use crate::ribbon::{analyze_partners, result_generator, LegTable, LoopReport, PairingEnumerator, PairingMode};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error(transparent)]
    Observable(#[from] ObservableError),
    #[error("color {color} exceeds the configured color count {colors}")]
    ColorOutOfRange { color: u8, colors: u8 },
    #[error("colored generator {0} in an uncolored algebra")]
    UnexpectedColor(String),
    #[error("uncolored generator {0} in a colored algebra")]
    MissingColor(String),
    #[error("commutator is not divisible by eps^2: term {term}")]
    NotDivisibleByEps2 { term: String },
    #[error("empty list of factors")]
    NoFactors,
    #[error("color face must be nonempty")]
    EmptyFace,
    #[error("reassignment to the uncolored algebra needs a single-color face")]
    NotExtremal,
}

/// How contraction lines are weighted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Every line carries the same scalar `g = 1/m^2`.
    Matrix,
    /// A line from leg `x` (left factor) to leg `y` carries `K(x,y)`.
    Kernel,
}

/// Configuration of the product.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Algebra {
    pub mode: Mode,
    /// `Some(k)` for the colored algebra with `k` projector blocks.
    pub colors: Option<u8>,
    /// Name of the line weight (`g` or `K` by default).
    pub kernel: String,
    /// Attach `hbar` to each line.
    pub track_hbar: bool,
    /// Drop terms of eps-degree above the cap and flag the result.
    pub max_eps_degree: Option<i32>,
}

/// Data handed to an inspector for every enumerated graph.
pub struct GraphRecord<'r> {
    pub factors: &'r [&'r Generator],
    pub report: &'r LoopReport,
    /// `None` when the graph vanishes because of mixed projector colors.
    pub weight: Option<&'r Monomial>,
    pub output: &'r Generator,
}

pub type Inspector<'a> = &'a (dyn Fn(&GraphRecord<'_>) + Sync);

/// Sum over the admissible pairings of `factors`: output generator to
/// coefficient, plus whether the eps cap removed anything.
pub(crate) fn graph_sum(
    factors: &[&Generator],
    mode: PairingMode,
    line: &(dyn Fn(&Slot, &Slot) -> Monomial + Sync),
    line_scale: &Rational,
    track_hbar: bool,
    cap: Option<i32>,
    inspector: Option<Inspector<'_>>,
) -> (BTreeMap<Generator, Coefficient>, bool) {
    let table = LegTable::new(factors);
    let enumerator = PairingEnumerator::new(&table, mode).eps_cap(cap);
    let partials: Vec<(BTreeMap<Generator, Coefficient>, bool)> = enumerator
        .partitions()
        .into_par_iter()
        .map(|part| {
            let mut acc: BTreeMap<Generator, Coefficient> = BTreeMap::new();
            let stats = enumerator.for_each_in(part, |partner, npairs| {
                let report = analyze_partners(&table, partner);
                let output = result_generator(&table, &report);
                let weight = (!report.vanishes).then(|| {
                    let mut m = Monomial::eps_half_units(report.exponent_half_units);
                    if track_hbar {
                        m = &m * &Monomial::hbar(npairs as u32);
                    }
                    for (i, &j) in partner.iter().enumerate() {
                        if j != usize::MAX && i < j {
                            m = &m * &line(table.slot_at(i), table.slot_at(j));
                        }
                    }
                    for (k, &p) in report.s_exponents.iter().enumerate() {
                        if p > 0 {
                            m.set_s(k as u8 + 1, p);
                        }
                    }
                    m
                });
                if let Some(f) = inspector {
                    f(&GraphRecord {
                        factors,
                        report: &report,
                        weight: weight.as_ref(),
                        output: &output,
                    });
                }
                if let Some(m) = weight {
                    let c = num_traits::Pow::pow(line_scale, npairs as u32);
                    acc.entry(output).or_default().add_term(c, m);
                }
            });
            (acc, stats.truncated)
        })
        .collect();
    let mut total: BTreeMap<Generator, Coefficient> = BTreeMap::new();
    let mut truncated = false;
    for (part, t) in partials {
        truncated |= t;
        for (g, c) in part {
            let e = total.entry(g).or_default();
            *e = &*e + &c;
        }
    }
    total.retain(|_, c| !c.is_zero());
    (total, truncated)
}

impl Algebra {
    pub fn matrix() -> Self {
        Algebra {
            mode: Mode::Matrix,
            colors: None,
            kernel: "g".into(),
            track_hbar: true,
            max_eps_degree: None,
        }
    }

    pub fn kernel() -> Self {
        Algebra {
            mode: Mode::Kernel,
            kernel: "K".into(),
            ..Self::matrix()
        }
    }

    pub fn with_colors(mut self, k: u8) -> Self {
        self.colors = Some(k);
        self
    }

    pub fn with_cap(mut self, cap: Option<i32>) -> Self {
        self.max_eps_degree = cap;
        self
    }

    pub fn with_hbar(mut self, on: bool) -> Self {
        self.track_hbar = on;
        self
    }

    pub fn with_kernel_name(mut self, name: impl Into<String>) -> Self {
        self.kernel = name.into();
        self
    }

    /// The weight of a line from `left` to `right`.
    pub fn line(&self, left: &Slot, right: &Slot) -> Monomial {
        let k = match self.mode {
            Mode::Matrix => Kernel::scalar(&self.kernel),
            Mode::Kernel => Kernel::pair(&self.kernel, left.reference(), right.reference()),
        };
        Monomial::kernel(k, 1)
    }

    /// Checks that every generator fits this algebra's coloring.
    pub fn check(&self, s: &Series) -> Result<(), AlgebraError> {
        s.coloring()?;
        for (g, _) in s.terms() {
            match (g.coloring(), self.colors) {
                (Coloring::Colored, None) => return Err(AlgebraError::UnexpectedColor(g.to_string())),
                (Coloring::Uncolored, Some(_)) => return Err(AlgebraError::MissingColor(g.to_string())),
                (Coloring::Colored, Some(k)) if g.max_color() > k => {
                    return Err(AlgebraError::ColorOutOfRange {
                        color: g.max_color(),
                        colors: k,
                    })
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn product(&self, a: &Series, b: &Series) -> Result<Series, AlgebraError> {
        self.product_inspected(a, b, None)
    }

    /// The product, calling `inspector` on every enumerated graph.
    pub fn product_inspected(
        &self,
        a: &Series,
        b: &Series,
        inspector: Option<Inspector<'_>>,
    ) -> Result<Series, AlgebraError> {
        self.check(a)?;
        self.check(b)?;
        let jobs: Vec<_> = a
            .terms()
            .flat_map(|(ga, ca)| b.terms().map(move |(gb, cb)| (ga, ca, gb, cb)))
            .collect();
        let line = |x: &Slot, y: &Slot| self.line(x, y);
        let one = Rational::from_integer(1.into());
        let parts: Vec<(Series, bool)> = jobs
            .into_par_iter()
            .map(|(ga, ca, gb, cb)| {
                let c = ca * cb;
                let graph_cap = self.max_eps_degree.map(|cap| {
                    let floor = c.eps_min_half_degree().unwrap_or(0);
                    (2 * cap - floor).div_euclid(2)
                });
                let (sum, truncated) =
                    graph_sum(&[ga, gb], PairingMode::Product, &line, &one, self.track_hbar, graph_cap, inspector);
                let mut s = Series::zero();
                for (g, k) in sum {
                    s.add_term(&k * &c, g);
                }
                (s, truncated)
            })
            .collect();
        let mut out = Series::zero();
        out.truncated = a.truncated || b.truncated;
        for (s, t) in parts {
            out.truncated |= t;
            out = out + s;
        }
        Ok(self.apply_cap(out))
    }

    fn apply_cap(&self, s: Series) -> Series {
        let Some(cap) = self.max_eps_degree else {
            return s;
        };
        let mut dropped = false;
        let mut out = s.map_coefficients(|c| {
            let kept = c.filter(|m| m.eps_half() <= 2 * cap);
            dropped |= kept.len() != c.len();
            kept
        });
        out.truncated |= dropped;
        out
    }

    /// Left-to-right product of a nonempty list.
    pub fn product_all(&self, factors: &[Series]) -> Result<Series, AlgebraError> {
        let (first, rest) = factors.split_first().ok_or(AlgebraError::NoFactors)?;
        rest.iter().try_fold(first.clone(), |acc, f| self.product(&acc, f))
    }

    /// `<:Q_1: .. :Q_r:>`, the unit coefficient of the iterated product.
    pub fn moment(&self, gens: &[Generator]) -> Result<Coefficient, AlgebraError> {
        let factors: Vec<Series> = gens.iter().cloned().map(Series::generator).collect();
        Ok(expectation(&self.product_all(&factors)?))
    }

    pub fn commutator(&self, a: &Series, b: &Series) -> Result<Series, AlgebraError> {
        Ok(self.product(a, b)? - self.product(b, a)?)
    }

    /// `[A, B] / eps^2`; fails if some term has eps-degree below 2.
    pub fn poisson_bracket(&self, a: &Series, b: &Series) -> Result<Series, AlgebraError> {
        let c = self.commutator(a, b)?;
        for (r, m, g) in c.flat_terms() {
            if m.eps_half() < 4 {
                return Err(AlgebraError::NotDivisibleByEps2 {
                    term: crate::coeff::fmt_unsigned_term(r, m) + "*" + &g.to_string(),
                });
            }
        }
        Ok(c.map_coefficients(|x| x.shift_eps_half(-4)))
    }

    /// The connected product: the full product minus all factorizations
    /// into classical products of connected products over proper set
    /// partitions of the factors.
    pub fn connected_product(&self, factors: &[Series]) -> Result<Series, AlgebraError> {
        let n = factors.len();
        if n == 0 {
            return Err(AlgebraError::NoFactors);
        }
        assert!(n < 32, "too many factors");
        let mut full: HashMap<u32, Series> = HashMap::new();
        let mut conn: HashMap<u32, Series> = HashMap::new();
        full.insert(0, Series::unit());
        // subsets in increasing order, so every proper subset is ready first
        for mask in 1u32..1 << n {
            let members: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            let f = if members.len() == 1 {
                factors[members[0]].clone()
            } else {
                let without_last = mask & !(1 << members[members.len() - 1]);
                self.product(&full[&without_last], &factors[members[members.len() - 1]])?
            };
            // blocks containing the lowest member
            let low = 1u32 << members[0];
            let rest = mask & !low;
            let mut c = f.clone();
            let mut sub = rest;
            loop {
                let block = sub | low;
                if block != mask {
                    let term = conn[&block].classical_product(&full[&(mask & !block)])?;
                    c = c - term;
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & rest;
            }
            full.insert(mask, f);
            conn.insert(mask, c);
        }
        Ok(conn.remove(&((1u32 << n) - 1)).expect("full mask computed"))
    }

    /// Both sides of `sum_pi [A_pi(n), .. [A_pi(1), B]..]^conn =
    /// sum_pi [A_pi(n), .. [A_pi(1), B]..]`. The left side expands each
    /// nested commutator into signed ordered products and replaces each
    /// product by its connected part.
    pub fn nested_commutator_sym(&self, as_: &[Series], b: &Series) -> Result<(Series, Series), AlgebraError> {
        let n = as_.len();
        let mut lhs = Series::zero();
        let mut rhs = Series::zero();
        for perm in permutations(n) {
            // signed words over factor indices; n stands for B
            let mut words: Vec<(i64, Vec<usize>)> = vec![(1, vec![n])];
            let mut nested = b.clone();
            for &k in &perm {
                words = words
                    .into_iter()
                    .flat_map(|(sign, w)| {
                        let mut left = vec![k];
                        left.extend(&w);
                        let mut right = w;
                        right.push(k);
                        [(sign, left), (-sign, right)]
                    })
                    .collect();
                nested = self.commutator(&as_[k], &nested)?;
            }
            rhs = rhs + nested;
            for (sign, w) in words {
                let factors: Vec<Series> = w.iter().map(|&i| if i == n { b.clone() } else { as_[i].clone() }).collect();
                let c = self.connected_product(&factors)?;
                lhs = lhs + c.scale_rational(&Rational::from_integer(sign.into()));
            }
        }
        Ok((lhs, rhs))
    }
}

/// The coefficient of the unit generator.
pub fn expectation(s: &Series) -> Coefficient {
    s.unit_coefficient()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

/// What happens to the surviving colors after a restriction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reassign {
    /// Keep the original color numbers.
    Keep,
    /// Renumber the face colors `1..=m` in increasing order.
    Compact,
    /// Single-color face only: the extremal point `s = 1`, colors removed,
    /// landing in the uncolored algebra.
    Uncolor,
}

/// Restricts a colored series to a face of the color simplex: weights of
/// colors off the face are set to zero and generators using those
/// projectors are dropped.
pub fn restrict_colors(s: &Series, face: &[u8], reassign: Reassign) -> Result<Series, AlgebraError> {
    let mut face: Vec<u8> = face.to_vec();
    face.sort_unstable();
    face.dedup();
    if face.is_empty() {
        return Err(AlgebraError::EmptyFace);
    }
    if reassign == Reassign::Uncolor && face.len() != 1 {
        return Err(AlgebraError::NotExtremal);
    }
    let on_face = |c: Option<u8>| c.is_none_or(|c| face.contains(&c));
    let kept = s.filter_generators(|g| g.slots().all(|x| on_face(x.color)));
    let renumber = |c: u8| match reassign {
        Reassign::Keep => c,
        _ => face.iter().position(|&f| f == c).expect("on face") as u8 + 1,
    };
    let mut out = Series::zero();
    out.truncated = s.truncated;
    for (g, c) in kept.terms() {
        let mut coeff = Coefficient::zero();
        for (m, r) in c.terms() {
            if m.s_pows().iter().enumerate().any(|(k, &p)| p > 0 && !face.contains(&(k as u8 + 1))) {
                continue;
            }
            let mut mm = m.clone();
            for k in 0..m.s_pows().len() {
                mm.set_s(k as u8 + 1, 0);
            }
            if reassign != Reassign::Uncolor {
                for (k, &p) in m.s_pows().iter().enumerate() {
                    if p > 0 {
                        mm.set_s(renumber(k as u8 + 1), p);
                    }
                }
            }
            coeff.add_term(r.clone(), mm);
        }
        let g = g.map_slots(|x| {
            let mut y = x.clone();
            y.color = match reassign {
                Reassign::Uncolor => None,
                _ => x.color.map(renumber),
            };
            y
        });
        out.add_term(coeff, g);
    }
    Ok(out)
}

/// Substitutes `s_k = value` for every color.
pub fn evaluate_colors(s: &Series, values: &[Rational]) -> Result<Series, crate::coeff::CoeffError> {
    s.try_map_coefficients(|c| {
        values
            .iter()
            .enumerate()
            .try_fold(c.clone(), |acc, (k, v)| acc.substitute(&Var::S(k as u8 + 1), v))
    })
}
