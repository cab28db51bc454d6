//! Generator families shared by the integration tests.
#![allow(dead_code)]

use largen::coeff::{Coefficient, Kernel, Monomial, Rational};
use largen::{Generator, Series, Slot};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Partitions of `m` as non-increasing part lists.
pub fn partitions(m: usize) -> Vec<Vec<usize>> {
    fn go(m: usize, max: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if m == 0 {
            out.push(prefix.clone());
            return;
        }
        for p in (1..=m.min(max)).rev() {
            prefix.push(p);
            go(m - p, p, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(m, m, &mut Vec::new(), &mut out);
    out
}

/// Every trace shape with at most `max_legs` legs, the unit included.
pub fn shapes_up_to(max_legs: usize) -> Vec<Vec<usize>> {
    (0..=max_legs).flat_map(partitions).collect()
}

/// Uncolored generator of the given shape, labels `prefix1, prefix2, ..`.
pub fn shaped(shape: &[usize], prefix: &str) -> Generator {
    colored_shape(shape, prefix, &vec![None; shape.iter().sum()])
}

pub fn colored_shape(shape: &[usize], prefix: &str, colors: &[Option<u8>]) -> Generator {
    let mut k = 0;
    let words = shape
        .iter()
        .map(|&len| {
            (0..len)
                .map(|_| {
                    let s = Slot {
                        label: format!("{prefix}{}", k + 1),
                        conjugated: false,
                        color: colors[k],
                    };
                    k += 1;
                    s
                })
                .collect()
        })
        .collect();
    Generator::new(words).expect("valid shape")
}

/// A random shape with exactly `legs` legs.
pub fn random_shape(rng: &mut ChaCha8Rng, legs: usize) -> Vec<usize> {
    let mut shape = Vec::new();
    let mut left = legs;
    while left > 0 {
        let p = rng.gen_range(1..=left);
        shape.push(p);
        left -= p;
    }
    shape
}

/// Random generator with `legs` legs; slots are conjugated with
/// probability 1/4 when `conj` is set.
pub fn random_generator(rng: &mut ChaCha8Rng, legs: usize, prefix: &str, conj: bool) -> Generator {
    let g = shaped(&random_shape(rng, legs), prefix);
    g.map_slots(|s| {
        let mut s = s.clone();
        s.conjugated = conj && rng.gen_range(0..4) == 0;
        s
    })
}

pub fn random_colored(rng: &mut ChaCha8Rng, legs: usize, prefix: &str, k: u8) -> Generator {
    let shape = random_shape(rng, legs);
    let colors: Vec<Option<u8>> = (0..legs).map(|_| Some(rng.gen_range(1..=k))).collect();
    colored_shape(&shape, prefix, &colors)
}

/// A random series for round-trip tests: up to four terms with random
/// rationals, monomials and (possibly colored, conjugated) generators.
pub fn random_series(rng: &mut ChaCha8Rng) -> Series {
    let mut s = Series::zero();
    let colored = rng.gen_bool(0.3);
    for t in 0..rng.gen_range(0..=4) {
        let legs = rng.gen_range(0..=5);
        let prefix = format!("l{t}x");
        let mut g = if colored {
            random_colored(rng, legs, &prefix, 3)
        } else {
            random_generator(rng, legs, &prefix, true)
        };
        if rng.gen_bool(0.2) {
            g = Generator::unit();
        }
        let mut m = &Monomial::eps(rng.gen_range(-2..=4)) * &Monomial::hbar(rng.gen_range(0..=3));
        if rng.gen_bool(0.5) {
            m = &m * &Monomial::s(rng.gen_range(1..=3), rng.gen_range(1..=2));
        }
        match rng.gen_range(0..3) {
            0 => m = &m * &Monomial::kernel(Kernel::scalar("g"), rng.gen_range(1..=3)),
            1 => m = &m * &Monomial::kernel(Kernel::pair("K", "x", "~y"), 1),
            _ => {}
        }
        let num: i64 = rng.gen_range(-9..=9);
        let den: i64 = rng.gen_range(1..=6);
        s.add_term(Coefficient::term(Rational::new(num.into(), den.into()), m), g);
    }
    s
}
