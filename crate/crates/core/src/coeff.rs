//! Exact coefficient ring for series terms.
//!
//! A [`Coefficient`] is a sparse polynomial over the rationals in the
//! variables `eps` (= 1/N), `hbar`, the color weights `s1..sk` and an open
//! set of [`Kernel`] symbols. Powers of `eps` may be negative (the kernel
//! change map produces Laurent terms) and are stored in half units so that
//! the `N^{-|a|/2}` normalization of odd generators can be tracked exactly.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub type Rational = BigRational;

/// Builds a rational from a numerator and denominator.
pub fn rat(num: i64, den: i64) -> Rational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

/// A propagator-like symbol.
///
/// `Scalar` covers the 0-dimensional propagator `g = 1/m^2` and any other
/// named constant (e.g. a kernel difference `F` in matrix mode). `Pair` is an
/// ordered two-point symbol `name(first, second)`: `K(x,y)` and `K(y,x)` are
/// distinct.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Kernel {
    Scalar(String),
    Pair {
        name: String,
        first: String,
        second: String,
    },
}

impl Kernel {
    pub fn scalar(name: impl Into<String>) -> Self {
        Kernel::Scalar(name.into())
    }

    pub fn pair(name: impl Into<String>, first: impl Into<String>, second: impl Into<String>) -> Self {
        Kernel::Pair {
            name: name.into(),
            first: first.into(),
            second: second.into(),
        }
    }

    /// Complex conjugate: `K(x,y)* = K(~y,~x)`; scalars are real.
    pub fn conjugate(&self) -> Self {
        match self {
            Kernel::Scalar(_) => self.clone(),
            Kernel::Pair { name, first, second } => Kernel::Pair {
                name: name.clone(),
                first: toggle_conjugation(second),
                second: toggle_conjugation(first),
            },
        }
    }
}

fn toggle_conjugation(label: &str) -> String {
    match label.strip_prefix('~') {
        Some(rest) => rest.to_string(),
        None => format!("~{label}"),
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::Scalar(name) => write!(f, "{name}"),
            Kernel::Pair { name, first, second } => write!(f, "{name}({first},{second})"),
        }
    }
}

/// A variable of the coefficient ring.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    Eps,
    Hbar,
    /// Color weight `s_alpha`, 1-based.
    S(u8),
    Kernel(Kernel),
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::Eps => write!(f, "eps"),
            Var::Hbar => write!(f, "hbar"),
            Var::S(i) => write!(f, "s{i}"),
            Var::Kernel(k) => write!(f, "{k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoeffError {
    #[error("no value assigned to `{0}`")]
    Unassigned(Var),
    #[error("half-integer power of eps in `{0}` cannot be evaluated or substituted")]
    HalfIntegerEps(String),
    #[error("negative power of `{0}` cannot be evaluated at zero")]
    DivisionByZero(Var),
}

/// A monomial `eps^(e/2) hbar^h s1^.. sk^.. K..^..`.
///
/// Zero exponents are never stored, so structural equality is the ring's
/// equality.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    eps_half: i32,
    hbar: u32,
    /// Index `i` holds the power of `s_{i+1}`; trailing zeros trimmed.
    s: Vec<u32>,
    kernels: BTreeMap<Kernel, u32>,
}

impl Monomial {
    pub fn one() -> Self {
        Self::default()
    }

    pub fn eps(pow: i32) -> Self {
        Self::eps_half_units(2 * pow)
    }

    pub fn eps_half_units(half: i32) -> Self {
        Monomial {
            eps_half: half,
            ..Self::default()
        }
    }

    pub fn hbar(pow: u32) -> Self {
        Monomial {
            hbar: pow,
            ..Self::default()
        }
    }

    pub fn s(color: u8, pow: u32) -> Self {
        let mut m = Self::default();
        m.set_s(color, pow);
        m
    }

    pub fn kernel(k: Kernel, pow: u32) -> Self {
        let mut m = Self::default();
        if pow > 0 {
            m.kernels.insert(k, pow);
        }
        m
    }

    pub fn var(v: &Var, pow: u32) -> Self {
        match v {
            Var::Eps => Self::eps(pow as i32),
            Var::Hbar => Self::hbar(pow),
            Var::S(c) => Self::s(*c, pow),
            Var::Kernel(k) => Self::kernel(k.clone(), pow),
        }
    }

    pub fn eps_half(&self) -> i32 {
        self.eps_half
    }

    /// Power of eps in whole units.
    ///
    /// Panics on an odd half-unit power: those only exist inside
    /// normalization bookkeeping and must cancel before reaching callers.
    pub fn eps_degree(&self) -> i32 {
        assert!(
            self.eps_half % 2 == 0,
            "half-integer eps power leaked out of normalization bookkeeping"
        );
        self.eps_half / 2
    }

    pub fn hbar_pow(&self) -> u32 {
        self.hbar
    }

    pub fn s_pow(&self, color: u8) -> u32 {
        self.s.get(color as usize - 1).copied().unwrap_or(0)
    }

    pub fn s_pows(&self) -> &[u32] {
        &self.s
    }

    pub fn kernels(&self) -> &BTreeMap<Kernel, u32> {
        &self.kernels
    }

    pub fn kernel_degree(&self) -> u32 {
        self.kernels.values().sum()
    }

    pub fn is_one(&self) -> bool {
        *self == Self::default()
    }

    pub fn set_s(&mut self, color: u8, pow: u32) {
        assert!(color >= 1, "colors are 1-based");
        let idx = color as usize - 1;
        if self.s.len() <= idx {
            if pow == 0 {
                return;
            }
            self.s.resize(idx + 1, 0);
        }
        self.s[idx] = pow;
        while self.s.last() == Some(&0) {
            self.s.pop();
        }
    }

    pub fn mul_kernel(&mut self, k: Kernel, pow: u32) {
        if pow > 0 {
            *self.kernels.entry(k).or_insert(0) += pow;
        }
    }

    /// Power of a variable (eps in half units).
    pub fn power_of(&self, v: &Var) -> i64 {
        match v {
            Var::Eps => self.eps_half as i64,
            Var::Hbar => self.hbar as i64,
            Var::S(c) => self.s_pow(*c) as i64,
            Var::Kernel(k) => self.kernels.get(k).copied().unwrap_or(0) as i64,
        }
    }

    /// The monomial with `v` removed.
    pub fn without(&self, v: &Var) -> Monomial {
        let mut m = self.clone();
        match v {
            Var::Eps => m.eps_half = 0,
            Var::Hbar => m.hbar = 0,
            Var::S(c) => m.set_s(*c, 0),
            Var::Kernel(k) => {
                m.kernels.remove(k);
            }
        }
        m
    }

    pub fn shift_eps_half(&self, delta: i32) -> Monomial {
        let mut m = self.clone();
        m.eps_half += delta;
        m
    }

    pub fn conjugate(&self) -> Monomial {
        let mut m = self.clone();
        m.kernels = self
            .kernels
            .iter()
            .map(|(k, p)| (k.conjugate(), *p))
            .collect();
        m
    }

    pub fn variables(&self) -> Vec<Var> {
        let mut out = Vec::new();
        if self.eps_half != 0 {
            out.push(Var::Eps);
        }
        if self.hbar != 0 {
            out.push(Var::Hbar);
        }
        for (i, p) in self.s.iter().enumerate() {
            if *p != 0 {
                out.push(Var::S(i as u8 + 1));
            }
        }
        out.extend(self.kernels.keys().cloned().map(Var::Kernel));
        out
    }
}

impl Mul for &Monomial {
    type Output = Monomial;

    fn mul(self, rhs: &Monomial) -> Monomial {
        let mut out = self.clone();
        out.eps_half += rhs.eps_half;
        out.hbar += rhs.hbar;
        if out.s.len() < rhs.s.len() {
            out.s.resize(rhs.s.len(), 0);
        }
        for (i, p) in rhs.s.iter().enumerate() {
            out.s[i] += p;
        }
        for (k, p) in &rhs.kernels {
            *out.kernels.entry(k.clone()).or_insert(0) += p;
        }
        out
    }
}

fn fmt_pow(f: &mut fmt::Formatter<'_>, base: &dyn fmt::Display, pow: i64) -> fmt::Result {
    if pow == 1 {
        write!(f, "{base}")
    } else {
        write!(f, "{base}^{pow}")
    }
}

impl fmt::Display for Monomial {
    /// `eps^2*hbar*s1*K(x1,y2)^2`; the empty monomial renders as `1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return write!(f, "1");
        }
        let mut first = true;
        let mut sep = |f: &mut fmt::Formatter<'_>| -> fmt::Result {
            if !std::mem::replace(&mut first, false) {
                write!(f, "*")?;
            }
            Ok(())
        };
        if self.eps_half != 0 {
            sep(f)?;
            if self.eps_half % 2 == 0 {
                fmt_pow(f, &"eps", (self.eps_half / 2) as i64)?;
            } else {
                write!(f, "eps^({}/2)", self.eps_half)?;
            }
        }
        if self.hbar != 0 {
            sep(f)?;
            fmt_pow(f, &"hbar", self.hbar as i64)?;
        }
        for (i, p) in self.s.iter().enumerate() {
            if *p != 0 {
                sep(f)?;
                fmt_pow(f, &format!("s{}", i + 1), *p as i64)?;
            }
        }
        for (k, p) in &self.kernels {
            sep(f)?;
            fmt_pow(f, k, *p as i64)?;
        }
        Ok(())
    }
}

/// Numeric assignment used by [`Coefficient::eval`].
#[derive(Clone, Debug, Default)]
pub struct Env {
    pub eps: Option<Rational>,
    pub hbar: Option<Rational>,
    pub s: BTreeMap<u8, Rational>,
    pub kernels: BTreeMap<Kernel, Rational>,
}

impl Env {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, v: Var, value: Rational) -> Self {
        self.set(v, value);
        self
    }

    pub fn set(&mut self, v: Var, value: Rational) {
        match v {
            Var::Eps => self.eps = Some(value),
            Var::Hbar => self.hbar = Some(value),
            Var::S(c) => {
                self.s.insert(c, value);
            }
            Var::Kernel(k) => {
                self.kernels.insert(k, value);
            }
        }
    }

    fn get(&self, v: &Var) -> Option<&Rational> {
        match v {
            Var::Eps => self.eps.as_ref(),
            Var::Hbar => self.hbar.as_ref(),
            Var::S(c) => self.s.get(c),
            Var::Kernel(k) => self.kernels.get(k),
        }
    }
}

fn rational_pow(base: &Rational, exp: i64) -> Option<Rational> {
    if exp >= 0 {
        Some(num_traits::pow(base.clone(), exp as usize))
    } else if base.is_zero() {
        None
    } else {
        Some(num_traits::pow(base.recip(), (-exp) as usize))
    }
}

/// Sparse polynomial `sum_m c_m * m` with nonzero rational `c_m`.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Coefficient {
    terms: BTreeMap<Monomial, Rational>,
}

impl Coefficient {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        Self::term(c, Monomial::one())
    }

    pub fn monomial(m: Monomial) -> Self {
        Self::term(Rational::one(), m)
    }

    pub fn term(c: Rational, m: Monomial) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Coefficient { terms }
    }

    pub fn var(v: Var) -> Self {
        Self::monomial(Monomial::var(&v, 1))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1
            && self
                .terms
                .iter()
                .next()
                .is_some_and(|(m, c)| m.is_one() && c.is_one())
    }

    /// The rational value if the coefficient has no variables.
    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next()?;
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Adds `c * m` in place.
    pub fn add_term(&mut self, c: Rational, m: Monomial) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn scale(&self, c: &Rational) -> Coefficient {
        if c.is_zero() {
            return Coefficient::zero();
        }
        Coefficient {
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect(),
        }
    }

    pub fn mul_monomial(&self, m: &Monomial) -> Coefficient {
        Coefficient {
            terms: self.terms.iter().map(|(k, v)| (k * m, v.clone())).collect(),
        }
    }

    /// Smallest power of eps in whole units, `None` for zero.
    pub fn eps_min_degree(&self) -> Option<i32> {
        self.terms.keys().map(Monomial::eps_degree).min()
    }

    pub fn eps_max_degree(&self) -> Option<i32> {
        self.terms.keys().map(Monomial::eps_degree).max()
    }

    /// Smallest eps power in half units (normalization-internal).
    pub fn eps_min_half_degree(&self) -> Option<i32> {
        self.terms.keys().map(Monomial::eps_half).min()
    }

    pub fn variables(&self) -> Vec<Var> {
        let mut vars: Vec<Var> = self.terms.keys().flat_map(Monomial::variables).collect();
        vars.sort();
        vars.dedup();
        vars
    }

    /// Exact substitution of every variable.
    pub fn eval(&self, env: &Env) -> Result<Rational, CoeffError> {
        let mut total = Rational::zero();
        for (m, c) in &self.terms {
            let mut value = c.clone();
            for v in m.variables() {
                let x = env.get(&v).ok_or_else(|| CoeffError::Unassigned(v.clone()))?;
                let pow = match v {
                    Var::Eps => {
                        if m.eps_half % 2 != 0 {
                            return Err(CoeffError::HalfIntegerEps(m.to_string()));
                        }
                        (m.eps_half / 2) as i64
                    }
                    _ => m.power_of(&v),
                };
                value *= rational_pow(x, pow).ok_or(CoeffError::DivisionByZero(v.clone()))?;
            }
            total += value;
        }
        Ok(total)
    }

    /// Substitutes a rational for one variable, keeping the others symbolic.
    pub fn substitute(&self, v: &Var, value: &Rational) -> Result<Coefficient, CoeffError> {
        self.substitute_poly(v, &Coefficient::constant(value.clone()))
    }

    /// Substitutes a polynomial for one variable. Negative powers of the
    /// substituted variable are only allowed when the replacement is a
    /// nonzero constant.
    pub fn substitute_poly(&self, v: &Var, value: &Coefficient) -> Result<Coefficient, CoeffError> {
        let mut out = Coefficient::zero();
        for (m, c) in &self.terms {
            let mut pow = m.power_of(v);
            if pow == 0 {
                out.add_term(c.clone(), m.clone());
                continue;
            }
            if *v == Var::Eps {
                if pow % 2 != 0 {
                    return Err(CoeffError::HalfIntegerEps(m.to_string()));
                }
                pow /= 2;
            }
            let rest = Coefficient::term(c.clone(), m.without(v));
            let factor = if pow >= 0 {
                value.pow(pow as u32)
            } else {
                let constant = value
                    .as_constant()
                    .filter(|x| !x.is_zero())
                    .ok_or(CoeffError::DivisionByZero(v.clone()))?;
                Coefficient::constant(rational_pow(&constant, pow).expect("nonzero base"))
            };
            out = &out + &(&rest * &factor);
        }
        Ok(out)
    }

    pub fn pow(&self, exp: u32) -> Coefficient {
        let mut acc = Coefficient::one();
        for _ in 0..exp {
            acc = &acc * self;
        }
        acc
    }

    /// Multiplies every monomial by `eps^(delta/2)`.
    pub fn shift_eps_half(&self, delta: i32) -> Coefficient {
        Coefficient {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.shift_eps_half(delta), c.clone()))
                .collect(),
        }
    }

    /// Keeps the terms accepted by `keep`.
    pub fn filter(&self, mut keep: impl FnMut(&Monomial) -> bool) -> Coefficient {
        Coefficient {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| keep(m))
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn map_monomials(&self, mut f: impl FnMut(&Monomial) -> Monomial) -> Coefficient {
        let mut out = Coefficient::zero();
        for (m, c) in &self.terms {
            out.add_term(c.clone(), f(m));
        }
        out
    }

    pub fn conjugate(&self) -> Coefficient {
        self.map_monomials(Monomial::conjugate)
    }
}

impl From<Rational> for Coefficient {
    fn from(c: Rational) -> Self {
        Coefficient::constant(c)
    }
}

impl From<Monomial> for Coefficient {
    fn from(m: Monomial) -> Self {
        Coefficient::monomial(m)
    }
}

impl Add for &Coefficient {
    type Output = Coefficient;

    fn add(self, rhs: &Coefficient) -> Coefficient {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(c.clone(), m.clone());
        }
        out
    }
}

impl Sub for &Coefficient {
    type Output = Coefficient;

    fn sub(self, rhs: &Coefficient) -> Coefficient {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(-c.clone(), m.clone());
        }
        out
    }
}

impl Neg for &Coefficient {
    type Output = Coefficient;

    fn neg(self) -> Coefficient {
        Coefficient {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect(),
        }
    }
}

impl Mul for &Coefficient {
    type Output = Coefficient;

    fn mul(self, rhs: &Coefficient) -> Coefficient {
        let mut out = Coefficient::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ca * cb, ma * mb);
            }
        }
        out
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl $tr for Coefficient {
            type Output = Coefficient;
            fn $method(self, rhs: Coefficient) -> Coefficient {
                (&self).$method(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Coefficient {
    type Output = Coefficient;
    fn neg(self) -> Coefficient {
        -&self
    }
}

/// Renders a rational as `p` or `p/q`.
pub fn fmt_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Writes `|c| * m` without sign, as used inside a signed sum.
pub(crate) fn fmt_unsigned_term(c: &Rational, m: &Monomial) -> String {
    let abs = c.abs();
    if m.is_one() {
        fmt_rational(&abs)
    } else if abs.is_one() {
        m.to_string()
    } else {
        format!("{}*{}", fmt_rational(&abs), m)
    }
}

impl fmt::Display for Coefficient {
    /// Canonical rendering, e.g. `3/2*eps^2*hbar*s1*K(x1,y2)^2 - g`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            match (i, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            write!(f, "{}", fmt_unsigned_term(c, m))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn eps(p: i32) -> Coefficient {
        Coefficient::monomial(Monomial::eps(p))
    }

    fn g() -> Coefficient {
        Coefficient::var(Var::Kernel(Kernel::scalar("g")))
    }

    fn q(n: i64, d: i64) -> Coefficient {
        Coefficient::constant(rat(n, d))
    }

    #[test]
    fn add_examples() {
        assert_eq!(&(&q(1, 2) * &eps(1)) + &(&q(1, 2) * &eps(1)), eps(1));
        assert_eq!(&eps(2) + &Coefficient::zero(), eps(2));
        let two_eps_g = &(&q(2, 1) * &eps(1)) * &g();
        assert!((&two_eps_g + &(-&two_eps_g)).is_zero());
    }

    #[test]
    fn mul_examples() {
        assert_eq!(&eps(1) * &eps(2), eps(3));
        let s1 = Coefficient::var(Var::S(1));
        let s2 = Coefficient::var(Var::S(2));
        let lhs = &(&s1 * &g()) * &(&s2 * &g());
        let expected = Coefficient::monomial(&(&Monomial::s(1, 1) * &Monomial::s(2, 1)) * &Monomial::kernel(Kernel::scalar("g"), 2));
        assert_eq!(lhs, expected);
        let one = Coefficient::one();
        assert_eq!(&(&eps(1) + &one) * &(&eps(1) - &one), &eps(2) - &one);
    }

    #[test]
    fn eval_examples() {
        let env = Env::new().with(Var::Eps, rat(1, 2));
        assert_eq!(eps(2).eval(&env).unwrap(), rat(1, 4));
        let gv = Var::Kernel(Kernel::scalar("g"));
        let env = Env::new().with(gv.clone(), int(1));
        assert_eq!((&q(2, 1) * &g().pow(2)).eval(&env).unwrap(), int(2));
        let env = Env::new()
            .with(Var::S(1), rat(1, 3))
            .with(Var::S(2), rat(2, 3))
            .with(gv, int(1));
        let c = &(&Coefficient::var(Var::S(1)) * &Coefficient::var(Var::S(2))) * &g().pow(2);
        assert_eq!(c.eval(&env).unwrap(), rat(2, 9));
    }

    #[test]
    fn eval_reports_missing_symbol() {
        let k = Kernel::pair("K", "x1", "y2");
        let c = Coefficient::var(Var::Kernel(k.clone()));
        let err = c.eval(&Env::new()).unwrap_err();
        assert_eq!(err, CoeffError::Unassigned(Var::Kernel(k)));
        assert!(err.to_string().contains("K(x1,y2)"));
    }

    #[test]
    fn eval_negative_eps_power() {
        let env = Env::new().with(Var::Eps, rat(1, 3));
        assert_eq!(eps(-1).eval(&env).unwrap(), int(3));
    }

    #[test]
    fn min_degree_examples() {
        assert_eq!((&eps(2) + &eps(5)).eps_min_degree(), Some(2));
        assert_eq!(q(3, 1).eps_min_degree(), Some(0));
        assert_eq!(Coefficient::zero().eps_min_degree(), None);
    }

    #[test]
    fn half_units_cancel_in_products() {
        let a = Coefficient::monomial(Monomial::eps_half_units(3));
        let b = Coefficient::monomial(Monomial::eps_half_units(-1));
        assert_eq!((&a * &b).eps_min_degree(), Some(1));
        assert!(a.eval(&Env::new().with(Var::Eps, rat(1, 4))).is_err());
    }

    #[test]
    #[should_panic(expected = "half-integer")]
    fn half_unit_leak_is_rejected() {
        Coefficient::monomial(Monomial::eps_half_units(1)).eps_min_degree();
    }

    #[test]
    fn rendering() {
        let m = &(&(&Monomial::eps(2) * &Monomial::hbar(1)) * &Monomial::s(1, 1))
            * &Monomial::kernel(Kernel::pair("K", "x1", "y2"), 2);
        let c = Coefficient::term(rat(3, 2), m);
        assert_eq!(c.to_string(), "3/2*eps^2*hbar*s1*K(x1,y2)^2");
        assert_eq!((&eps(-1) - &q(2, 1)).to_string(), "eps^-1 - 2");
        assert_eq!(Coefficient::zero().to_string(), "0");
    }

    #[test]
    fn substitution() {
        let f = Var::Kernel(Kernel::scalar("F"));
        let c = &Coefficient::var(f.clone()) * &eps(-1);
        let gs = Coefficient::var(Var::Kernel(Kernel::scalar("gt")));
        let replaced = c.substitute_poly(&f, &gs).unwrap();
        assert_eq!(replaced, &gs * &eps(-1));
        let at = c.substitute(&Var::Eps, &rat(1, 2)).unwrap();
        assert_eq!(at, &Coefficient::var(f) * &q(2, 1));
    }

    #[test]
    fn conjugation_swaps_and_toggles() {
        let k = Kernel::pair("K", "x", "~y");
        assert_eq!(k.conjugate(), Kernel::pair("K", "y", "~x"));
        assert_eq!(k.conjugate().conjugate(), k);
    }

    fn arb_monomial() -> impl Strategy<Value = Monomial> {
        (
            -2i32..4,
            0u32..3,
            0u32..2,
            0u32..2,
            prop::sample::select(vec!["g", "K(x,y)", "K(y,x)"]),
            0u32..3,
        )
            .prop_map(|(e, h, s1, s2, k, kp)| {
                let kernel = match k {
                    "g" => Kernel::scalar("g"),
                    "K(x,y)" => Kernel::pair("K", "x", "y"),
                    _ => Kernel::pair("K", "y", "x"),
                };
                let mut m = &(&Monomial::eps(e) * &Monomial::hbar(h)) * &Monomial::kernel(kernel, kp);
                m.set_s(1, s1);
                m.set_s(2, s2);
                m
            })
    }

    fn arb_coeff() -> impl Strategy<Value = Coefficient> {
        prop::collection::vec((-5i64..6, 1i64..4, arb_monomial()), 0..5).prop_map(|ts| {
            let mut c = Coefficient::zero();
            for (n, d, m) in ts {
                c.add_term(rat(n, d), m);
            }
            c
        })
    }

    fn arb_env() -> impl Strategy<Value = Env> {
        prop::collection::vec((1i64..5, 1i64..5), 6).prop_map(|v| {
            let mut env = Env::new();
            env.set(Var::Eps, rat(v[0].0, v[0].1));
            env.set(Var::Hbar, rat(v[1].0, v[1].1));
            env.set(Var::S(1), rat(v[2].0, v[2].1));
            env.set(Var::S(2), rat(v[3].0, v[3].1));
            env.set(Var::Kernel(Kernel::scalar("g")), rat(v[4].0, v[4].1));
            env.set(Var::Kernel(Kernel::pair("K", "x", "y")), rat(v[5].0, v[5].1));
            env.set(Var::Kernel(Kernel::pair("K", "y", "x")), rat(v[5].1, v[5].0 + 1));
            env
        })
    }

    proptest! {
        #[test]
        fn ring_axioms(a in arb_coeff(), b in arb_coeff(), c in arb_coeff()) {
            prop_assert_eq!(&a + &b, &b + &a);
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert!((&a - &a).is_zero());
            prop_assert_eq!(&a * &Coefficient::one(), a.clone());
        }

        #[test]
        fn eval_is_ring_homomorphism(a in arb_coeff(), b in arb_coeff(), env in arb_env()) {
            let ea = a.eval(&env).unwrap();
            let eb = b.eval(&env).unwrap();
            prop_assert_eq!((&a * &b).eval(&env).unwrap(), &ea * &eb);
            prop_assert_eq!((&a + &b).eval(&env).unwrap(), ea + eb);
        }

        #[test]
        fn canonical_form_is_unique(a in arb_coeff(), b in arb_coeff()) {
            let lhs = &(&a + &b) - &b;
            prop_assert_eq!(lhs.terms().count(), a.terms().count());
            prop_assert!(lhs.terms().all(|(_, c)| !c.is_zero()));
            prop_assert_eq!(lhs, a);
        }
    }
}
