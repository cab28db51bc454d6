//! 't Hooft normalization and coupling exponents, and the connected-product
//! degree bound.

use std::fmt;
use std::ops::{Add, Sub};

use thiserror::Error;

use crate::observables::{Generator, Series};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScalingError {
    #[error("the connected-product bound needs at least two factors, got {0}")]
    TooFewFactors(usize),
    #[error("descriptor with {traces} traces but only {fields} fields")]
    EmptyTrace { traces: u32, fields: u32 },
}

/// A number in `Z/2`, stored in half units.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfInt(i64);

impl HalfInt {
    pub fn from_halves(h: i64) -> Self {
        HalfInt(h)
    }

    pub fn from_int(n: i64) -> Self {
        HalfInt(2 * n)
    }

    pub fn halves(self) -> i64 {
        self.0
    }

    pub fn to_int(self) -> Option<i64> {
        (self.0 % 2 == 0).then_some(self.0 / 2)
    }
}

impl Add for HalfInt {
    type Output = HalfInt;
    fn add(self, o: HalfInt) -> HalfInt {
        HalfInt(self.0 + o.0)
    }
}

impl Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, o: HalfInt) -> HalfInt {
        HalfInt(self.0 - o.0)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_int() {
            Some(n) => write!(f, "{n}"),
            None => write!(f, "{}/2", self.0),
        }
    }
}

/// Trace count `T` and field count `n` of a multi-trace monomial.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FieldDescriptor {
    pub traces: u32,
    pub fields: u32,
}

impl FieldDescriptor {
    pub fn new(traces: u32, fields: u32) -> Result<Self, ScalingError> {
        if fields < traces {
            return Err(ScalingError::EmptyTrace { traces, fields });
        }
        Ok(FieldDescriptor { traces, fields })
    }

    pub fn of(g: &Generator) -> Self {
        FieldDescriptor {
            traces: g.trace_count() as u32,
            fields: g.total_legs() as u32,
        }
    }
}

/// `|Phi|/2`.
pub fn free_normalization_exponent(d: FieldDescriptor) -> HalfInt {
    HalfInt::from_halves(d.fields as i64)
}

/// `T + |Phi|/2`.
pub fn interacting_normalization_exponent(d: FieldDescriptor) -> HalfInt {
    HalfInt::from_int(d.traces as i64) + free_normalization_exponent(d)
}

/// `T + |Phi|/2 - 2`, the power of N in the 't Hooft coupling.
pub fn thooft_coupling_exponent(d: FieldDescriptor) -> HalfInt {
    interacting_normalization_exponent(d) - HalfInt::from_int(2)
}

/// `(|Phi_from|/2 + T_from) - (|Phi_to|/2 + T_to)`.
pub fn rg_strength_exponent(from: FieldDescriptor, to: FieldDescriptor) -> HalfInt {
    interacting_normalization_exponent(from) - interacting_normalization_exponent(to)
}

/// `2k - 2 - sum T_i` for `k` factors with the given trace counts.
pub fn connected_degree_bound(trace_counts: &[u32]) -> Result<i64, ScalingError> {
    let k = trace_counts.len();
    if k < 2 {
        return Err(ScalingError::TooFewFactors(k));
    }
    Ok(2 * k as i64 - 2 - trace_counts.iter().map(|&t| t as i64).sum::<i64>())
}

/// Whether the series' minimal eps-degree meets `bound` (the zero series
/// meets every bound).
pub fn meets_degree_bound(s: &Series, bound: i64) -> bool {
    s.degree().is_none_or(|d| d as i64 >= bound)
}
