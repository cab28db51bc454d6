//! Change of normal-ordering kernel.
//!
//! A generator normal-ordered with respect to kernel `c'` is re-expressed in
//! the basis normal-ordered with respect to `c`: sum over all pairings of
//! its legs (same trace and same vertex allowed), each line weighted by
//! `hbar * F` with `F = c - c'`, the unpaired legs forming the new
//! generator. Exponents of eps come out of the same loop counting as the
//! product and may be negative, e.g. `W_(2) -> W'_(2) + eps^-1 hbar F W_0`.
//!
//! Transport from kernel `0` to kernel `c` (`F = +c`) undoes normal
//! ordering, so unit coefficients become full Gaussian moments.

use std::fmt;

use crate::algebra::{graph_sum, Mode};
use crate::coeff::{Kernel, Monomial, Rational};
use crate::observables::{Generator, Series, Slot};
use crate::ribbon::PairingMode;

/// The kernel difference `F` carried by transport lines.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransportKernel {
    pub name: String,
    /// Overall factor per line; `-1` gives the inverse map.
    pub scale: Rational,
    /// Matrix mode uses the scalar `F`; kernel mode the symmetric `F(x,y)`
    /// with labels in sorted order.
    pub mode: Mode,
}

impl TransportKernel {
    pub fn new(name: impl Into<String>, mode: Mode) -> Self {
        TransportKernel {
            name: name.into(),
            scale: Rational::from_integer(1.into()),
            mode,
        }
    }

    pub fn negated(&self) -> Self {
        TransportKernel {
            scale: -self.scale.clone(),
            ..self.clone()
        }
    }

    fn line(&self, x: &Slot, y: &Slot) -> Monomial {
        let k = match self.mode {
            Mode::Matrix => Kernel::scalar(&self.name),
            Mode::Kernel => {
                let (a, b) = (x.reference(), y.reference());
                if a <= b {
                    Kernel::pair(&self.name, a, b)
                } else {
                    Kernel::pair(&self.name, b, a)
                }
            }
        };
        Monomial::kernel(k, 1)
    }
}

/// A term of the transported series with a negative power of eps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NegativePower {
    pub generator: Generator,
    pub degree: i32,
}

impl fmt::Display for NegativePower {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "negative eps power {} in the coefficient of {} (single-vertex self-contraction)",
            self.degree, self.generator
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransportOutcome {
    pub series: Series,
    /// One entry per output generator whose coefficient has negative
    /// eps-degree.
    pub warnings: Vec<NegativePower>,
}

impl TransportOutcome {
    pub fn has_negative_powers(&self) -> bool {
        !self.warnings.is_empty()
    }
}

/// Transports every generator of `s` along `f`.
pub fn transport(s: &Series, f: &TransportKernel, track_hbar: bool) -> TransportOutcome {
    let line = |x: &Slot, y: &Slot| f.line(x, y);
    let mut out = Series::zero();
    out.truncated = s.truncated;
    for (g, c) in s.terms() {
        let (sum, _) = graph_sum(&[g], PairingMode::Transport, &line, &f.scale, track_hbar, None, None);
        for (h, k) in sum {
            out.add_term(&k * c, h);
        }
    }
    let warnings = out
        .terms()
        .filter_map(|(g, c)| {
            c.eps_min_degree().filter(|d| *d < 0).map(|degree| NegativePower {
                generator: g.clone(),
                degree,
            })
        })
        .collect();
    TransportOutcome { series: out, warnings }
}

/// `transport(transport(s, F), -F) - s`, which vanishes identically.
pub fn transport_roundtrip_check(s: &Series, f: &TransportKernel, track_hbar: bool) -> Series {
    let there = transport(s, f, track_hbar).series;
    transport(&there, &f.negated(), track_hbar).series - s.clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::{int, Coefficient};

    fn w(words: &[&[&str]]) -> Series {
        Series::generator(Generator::from_labels(words).unwrap())
    }

    fn f_mono(pow: u32) -> Monomial {
        Monomial::kernel(Kernel::scalar("F"), pow)
    }

    #[test]
    fn quadratic_self_contraction() {
        let out = transport(&w(&[&["x1", "x2"]]), &TransportKernel::new("F", Mode::Matrix), true);
        let mut expected = w(&[&["x1", "x2"]]);
        expected.add_term(
            Coefficient::monomial(&(&Monomial::eps(-1) * &Monomial::hbar(1)) * &f_mono(1)),
            Generator::unit(),
        );
        assert_eq!(out.series, expected);
        assert_eq!(out.warnings.len(), 1);
        assert_eq!(out.warnings[0].degree, -1);
    }

    #[test]
    fn unit_and_linear_are_fixed() {
        let f = TransportKernel::new("F", Mode::Matrix);
        assert_eq!(transport(&Series::unit(), &f, true).series, Series::unit());
        let x = w(&[&["x"]]);
        let out = transport(&x, &f, true);
        assert_eq!(out.series, x);
        assert!(!out.has_negative_powers());
    }

    #[test]
    fn quartic_hermite_structure() {
        // Tr M^4 -> :Tr M^4: + 4 F N Tr M^2 + 2 F N^3 + F^2 (2 N^3 + N)
        let f = TransportKernel::new("F", Mode::Matrix);
        let out = transport(&w(&[&["x1", "x2", "x3", "x4"]]), &f, false).series;
        let unit = out.unit_coefficient();
        let mut expected = Coefficient::term(int(2), &Monomial::eps(-1) * &f_mono(2));
        expected.add_term(int(1), &Monomial::eps(1) * &f_mono(2));
        assert_eq!(unit, expected);
        let two_traces: Vec<_> = out.terms().filter(|(g, _)| g.multi_index() == vec![1, 1]).collect();
        let adjacent: Vec<_> = out.terms().filter(|(g, _)| g.multi_index() == vec![2]).collect();
        assert_eq!(two_traces.len(), 2);
        assert_eq!(adjacent.len(), 4);
        for (_, c) in adjacent {
            assert_eq!(*c, Coefficient::monomial(f_mono(1)));
        }
    }

    #[test]
    fn roundtrip_vanishes() {
        for mode in [Mode::Matrix, Mode::Kernel] {
            let f = TransportKernel::new("F", mode);
            for g in [w(&[&["x1", "x2", "x3"], &["x4"]]), w(&[&["x1", "x2", "x3", "x4"]]), Series::unit()] {
                assert!(transport_roundtrip_check(&g, &f, true).is_zero());
            }
        }
    }

    #[test]
    fn kernel_labels_sorted() {
        let f = TransportKernel::new("F", Mode::Kernel);
        let out = transport(&w(&[&["y", "x"]]), &f, true).series;
        let unit = out.unit_coefficient();
        let (m, _) = unit.terms().next().unwrap();
        assert!(m.kernels().contains_key(&Kernel::pair("F", "x", "y")));
    }
}
