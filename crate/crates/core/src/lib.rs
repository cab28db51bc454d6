//! Exact 1/N expansion of the Gaussian Hermitian multi-trace observable
//! algebra.
//!
//! Generators are normal-ordered products of traces of a Hermitian matrix
//! field, normalized by `N^{-|a|/2}`. Products are sums over contraction
//! graphs whose index loops determine powers of `eps = 1/N`; an independent
//! finite-N evaluator ([`oracle`]) checks every structure constant.

pub mod algebra;
pub mod cli;
pub mod coeff;
pub mod observables;
pub mod oracle;
pub mod ribbon;
pub mod scaling;
pub mod serial;
pub mod syntax;
pub mod transport;

pub use coeff::{Coefficient, Env, Kernel, Monomial, Rational, Var};
pub use observables::{Generator, Series, Slot, TraceWord};
