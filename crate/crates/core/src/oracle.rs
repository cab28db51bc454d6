//! Brute-force finite-N evaluation of Gaussian moments.
//!
//! Moments are computed by Wick's theorem in its most literal form: for
//! every perfect matching of the legs, count the index assignments that
//! satisfy the propagator deltas `<M_ij M_kl> = c d_il d_jk`, looping over
//! explicit indices. Nothing here looks at strands or loops, so agreement
//! with the graph expansion is meaningful.

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::coeff::{CoeffError, Coefficient, Env, Kernel, Rational, Var};
use crate::observables::{Generator, Series};

pub const DEFAULT_MAX_LEGS: usize = 10;
pub const DEFAULT_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("N must be at least 1")]
    ZeroN,
    #[error("block sizes sum to {sum}, expected N = {n}")]
    BlockSum { sum: usize, n: usize },
    #[error("{legs} legs exceed the oracle cap of {cap}")]
    LegCap { legs: usize, cap: usize },
    #[error("color {color} has no block (only {blocks} blocks)")]
    NoBlock { color: u8, blocks: usize },
    #[error("cannot evaluate claim: {0}")]
    Eval(#[from] CoeffError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleConfig {
    pub n: usize,
    pub blocks: Vec<usize>,
    /// The numeric propagator `c = 1/m^2`.
    pub covariance: Rational,
    pub hbar: Rational,
    pub max_legs: usize,
}

/// Treatment of contractions inside one generator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IntraPairs {
    /// Normal-ordered generators: no intra-generator pairs.
    Forbidden,
    /// Plain traces: intra pairs carry the full covariance.
    Covariance,
    /// Generators normal-ordered with respect to another kernel `c'`:
    /// intra pairs carry `c - c'`.
    Weight(Rational),
}

impl OracleConfig {
    pub fn new(n: usize, covariance: Rational) -> Self {
        OracleConfig {
            n,
            blocks: vec![n],
            covariance,
            hbar: Rational::one(),
            max_legs: DEFAULT_MAX_LEGS,
        }
    }

    pub fn with_blocks(blocks: Vec<usize>, covariance: Rational) -> Self {
        OracleConfig {
            n: blocks.iter().sum(),
            blocks,
            ..Self::new(0, covariance)
        }
    }

    pub fn with_hbar(mut self, hbar: Rational) -> Self {
        self.hbar = hbar;
        self
    }

    pub fn with_max_legs(mut self, cap: usize) -> Self {
        self.max_legs = cap;
        self
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        if self.n == 0 {
            return Err(OracleError::ZeroN);
        }
        let sum: usize = self.blocks.iter().sum();
        if sum != self.n {
            return Err(OracleError::BlockSum { sum, n: self.n });
        }
        Ok(())
    }

    /// Index range of the block for `color`, or everything when uncolored.
    fn range(&self, color: Option<u8>) -> Result<std::ops::Range<usize>, OracleError> {
        match color {
            None => Ok(0..self.n),
            Some(c) => {
                let k = c as usize;
                if k == 0 || k > self.blocks.len() {
                    return Err(OracleError::NoBlock {
                        color: c,
                        blocks: self.blocks.len(),
                    });
                }
                let start: usize = self.blocks[..k - 1].iter().sum();
                Ok(start..start + self.blocks[k - 1])
            }
        }
    }

    /// The evaluation point of engine coefficients: `eps = 1/N`,
    /// `s_k = N_k/N`, every scalar kernel `= c`, `hbar`.
    pub fn env(&self, claim: &Coefficient) -> Env {
        let n = Rational::from_integer((self.n as i64).into());
        let mut env = Env::new()
            .with(Var::Eps, n.recip())
            .with(Var::Hbar, self.hbar.clone());
        for (k, b) in self.blocks.iter().enumerate() {
            env.set(Var::S(k as u8 + 1), Rational::from_integer((*b as i64).into()) / &n);
        }
        for v in claim.variables() {
            if let Var::Kernel(Kernel::Scalar(_)) = v {
                env.set(v, self.covariance.clone());
            }
        }
        env
    }

    fn describe(&self) -> String {
        format!(
            "N={},blocks={},c={},hbar={}",
            self.n,
            self.blocks.iter().map(usize::to_string).collect::<Vec<_>>().join(","),
            self.covariance,
            self.hbar
        )
    }
}

struct Leg {
    owner: usize,
    row: usize,
    col: usize,
}

/// Legs and corner index variables of a list of generators.
struct Layout {
    legs: Vec<Leg>,
    ranges: Vec<std::ops::Range<usize>>,
}

impl Layout {
    fn new(gens: &[Generator], cfg: &OracleConfig) -> Result<Self, OracleError> {
        let mut legs = Vec::new();
        let mut ranges = Vec::new();
        for (owner, g) in gens.iter().enumerate() {
            for word in g.traces() {
                let base = ranges.len();
                let n = word.len();
                for (p, slot) in word.slots().iter().enumerate() {
                    // the corner after slot p carries that slot's projector
                    ranges.push(cfg.range(slot.color)?);
                    legs.push(Leg {
                        owner,
                        row: base + (p + n - 1) % n,
                        col: base + p,
                    });
                }
            }
        }
        Ok(Layout { legs, ranges })
    }
}

/// All perfect matchings of `0..n` as lists of pairs, skipping pairs
/// rejected by `allowed`.
fn perfect_matchings(n: usize, allowed: &dyn Fn(usize, usize) -> bool) -> Vec<Vec<(usize, usize)>> {
    fn go(
        free: &mut Vec<usize>,
        current: &mut Vec<(usize, usize)>,
        allowed: &dyn Fn(usize, usize) -> bool,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        let Some(&first) = free.first() else {
            out.push(current.clone());
            return;
        };
        for k in 1..free.len() {
            let other = free[k];
            if !allowed(first, other) {
                continue;
            }
            let mut rest: Vec<usize> = free.iter().copied().filter(|&x| x != first && x != other).collect();
            current.push((first, other));
            go(&mut rest, current, allowed, out);
            current.pop();
        }
    }
    let mut out = Vec::new();
    if n.is_multiple_of(2) {
        go(&mut (0..n).collect(), &mut Vec::new(), allowed, &mut out);
    }
    out
}

/// Number of assignments of the corner variables satisfying every
/// equality in `eqs`, by explicit backtracking.
fn count_assignments(ranges: &[std::ops::Range<usize>], eqs: &[(usize, usize)]) -> u64 {
    let nv = ranges.len();
    // constraints checked once their later variable is assigned
    let mut checks: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for &(a, b) in eqs {
        checks[a.max(b)].push(a.min(b));
    }
    let mut value = vec![0usize; nv];
    fn go(v: usize, ranges: &[std::ops::Range<usize>], checks: &[Vec<usize>], value: &mut [usize]) -> u64 {
        if v == ranges.len() {
            return 1;
        }
        let mut total = 0;
        for x in ranges[v].clone() {
            value[v] = x;
            if checks[v].iter().all(|&u| value[u] == x) {
                total += go(v + 1, ranges, checks, value);
            }
        }
        total
    }
    go(0, ranges, &checks, &mut value)
}

/// `<W_1 .. W_r>` at finite N, including the `N^{-|a|/2}` normalizations
/// and `hbar` per contraction.
pub fn oracle_moment(gens: &[Generator], cfg: &OracleConfig, allow_intra: bool) -> Result<Rational, OracleError> {
    let intra = if allow_intra {
        IntraPairs::Covariance
    } else {
        IntraPairs::Forbidden
    };
    oracle_moment_with(gens, cfg, &intra)
}

pub fn oracle_moment_with(gens: &[Generator], cfg: &OracleConfig, intra: &IntraPairs) -> Result<Rational, OracleError> {
    cfg.validate()?;
    let total: usize = gens.iter().map(Generator::total_legs).sum();
    if total > cfg.max_legs {
        return Err(OracleError::LegCap {
            legs: total,
            cap: cfg.max_legs,
        });
    }
    if total % 2 == 1 {
        return Ok(Rational::zero());
    }
    let layout = Layout::new(gens, cfg)?;
    let legs = &layout.legs;
    let inter = &cfg.hbar * &cfg.covariance;
    let intra_weight = match intra {
        IntraPairs::Forbidden => None,
        IntraPairs::Covariance => Some(inter.clone()),
        IntraPairs::Weight(w) => Some(&cfg.hbar * w),
    };
    let allowed = |a: usize, b: usize| legs[a].owner != legs[b].owner || intra_weight.is_some();
    let mut sum = Rational::zero();
    for matching in perfect_matchings(total, &allowed) {
        let mut weight = Rational::one();
        let mut eqs = Vec::with_capacity(2 * matching.len());
        for &(a, b) in &matching {
            let (u, v) = (&legs[a], &legs[b]);
            weight *= if u.owner == v.owner {
                intra_weight.clone().expect("allowed")
            } else {
                inter.clone()
            };
            eqs.push((u.row, v.col));
            eqs.push((u.col, v.row));
        }
        if weight.is_zero() {
            continue;
        }
        let count = count_assignments(&layout.ranges, &eqs);
        sum += weight * Rational::from_integer((count as i64).into());
    }
    let n = Rational::from_integer((cfg.n as i64).into());
    Ok(sum / num_traits::Pow::pow(&n, (total / 2) as u32))
}

/// One configuration's comparison.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckLine {
    pub config: String,
    pub claimed: Rational,
    pub oracle: Rational,
}

impl CheckLine {
    pub fn matches(&self) -> bool {
        self.claimed == self.oracle
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OracleReport {
    pub lines: Vec<CheckLine>,
}

impl OracleReport {
    pub fn all_match(&self) -> bool {
        self.lines.iter().all(CheckLine::matches)
    }
}

/// The oracle value of `<F_1 .. F_r>` for series factors, expanded
/// multilinearly with coefficients evaluated at the configuration.
pub fn oracle_series_moment(factors: &[Series], cfg: &OracleConfig) -> Result<Rational, OracleError> {
    fn go(
        k: usize,
        factors: &[Series],
        cfg: &OracleConfig,
        gens: &mut Vec<Generator>,
        weight: Rational,
    ) -> Result<Rational, OracleError> {
        if k == factors.len() {
            return oracle_moment(gens, cfg, false).map(|m| m * weight);
        }
        let mut total = Rational::zero();
        for (g, c) in factors[k].terms() {
            let w = c.eval(&cfg.env(c))?;
            if w.is_zero() {
                continue;
            }
            gens.push(g.clone());
            total += go(k + 1, factors, cfg, gens, &weight * w)?;
            gens.pop();
        }
        Ok(total)
    }
    go(0, factors, cfg, &mut Vec::new(), Rational::one())
}

/// Compares a claimed expectation of `<F_1 .. F_r>` against the oracle for
/// each configuration.
pub fn oracle_check(factors: &[Series], claim: &Coefficient, cfgs: &[OracleConfig]) -> Result<OracleReport, OracleError> {
    let mut report = OracleReport::default();
    for cfg in cfgs {
        let claimed = claim.eval(&cfg.env(claim))?;
        let oracle = oracle_series_moment(factors, cfg)?;
        report.lines.push(CheckLine {
            config: cfg.describe(),
            claimed,
            oracle,
        });
    }
    Ok(report)
}

/// A linear combination of products of traces of powers of one matrix:
/// each term is `coefficient * Tr M^p1 * Tr M^p2 * ..`.
pub type TraceExpr = Vec<(Rational, Vec<usize>)>;

type Matrix = Vec<Vec<Rational>>;

fn mat_mul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).fold(Rational::zero(), |acc, k| acc + &a[i][k] * &b[k][j]))
                .collect()
        })
        .collect()
}

fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let mut m = vec![vec![Rational::zero(); n]; n];
    for i in 0..n {
        for j in i..n {
            let x = Rational::new(rng.gen_range(-6i64..=6).into(), rng.gen_range(1i64..=4).into());
            m[i][j] = x.clone();
            m[j][i] = x;
        }
    }
    m
}

/// Value of `expr` on one matrix.
pub fn evaluate_trace_expr(expr: &TraceExpr, m: &Matrix) -> Rational {
    let n = m.len();
    let max_pow = expr.iter().flat_map(|(_, ps)| ps.iter().copied()).max().unwrap_or(0);
    let mut traces = vec![Rational::from_integer((n as i64).into())];
    let mut power: Matrix = (0..n)
        .map(|i| (0..n).map(|j| if i == j { Rational::one() } else { Rational::zero() }).collect())
        .collect();
    for _ in 0..max_pow {
        power = mat_mul(&power, m);
        traces.push((0..n).fold(Rational::zero(), |acc, i| acc + &power[i][i]));
    }
    expr.iter()
        .map(|(c, ps)| ps.iter().fold(c.clone(), |acc, &p| acc * &traces[p]))
        .fold(Rational::zero(), |a, b| a + b)
}

/// Whether `expr` vanishes on `trials` seeded random rational real
/// symmetric (hence hermitian) `n x n` matrices.
pub fn sample_matrix_identity(expr: &TraceExpr, n: usize, trials: usize, seed: u64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials).all(|_| evaluate_trace_expr(expr, &random_hermitian(n, &mut rng)).is_zero())
}

/// The N=2 relation `Tr M^3 - 3/2 Tr M Tr M^2 + 1/2 (Tr M)^3`.
pub fn schur_relation_n2() -> TraceExpr {
    vec![
        (Rational::one(), vec![3]),
        (Rational::new((-3).into(), 2.into()), vec![1, 2]),
        (Rational::new(1.into(), 2.into()), vec![1, 1, 1]),
    ]
}
