//! Randomized invariants across modules.

mod common;

use common::*;
use largen::algebra::{Algebra, Mode};
use largen::coeff::{int, rat};
use largen::oracle::{oracle_moment, OracleConfig};
use largen::ribbon::{analyze, enumerate_pairings, LegTable, PairingMode};
use largen::scaling::{connected_degree_bound, meets_degree_bound};
use largen::transport::{transport_roundtrip_check, TransportKernel};
use largen::{Generator, Series};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn rotate(g: &Generator, k: usize) -> Generator {
    let words = g
        .traces()
        .iter()
        .map(|t| {
            let mut s = t.slots().to_vec();
            let n = s.len();
            s.rotate_left(k % n);
            s
        })
        .collect();
    Generator::new(words).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ribbon_identities(seed in any::<u64>(), la in 0usize..=4, lb in 0usize..=4, transport in any::<bool>()) {
        let mut r = rng(seed);
        let a = random_generator(&mut r, la, "x", true);
        let b = random_generator(&mut r, lb, "y", true);
        let (table, mode) = if transport {
            (LegTable::new(&[&a]), PairingMode::Transport)
        } else {
            (LegTable::new(&[&a, &b]), PairingMode::Product)
        };
        for p in enumerate_pairings(&table, mode, None) {
            let rep = analyze(&table, mode, &p).unwrap();
            prop_assert!(rep.check_identities().is_ok(), "{rep}");
            prop_assert_eq!(rep.exponent_half_units % 2, 0);
            if !transport {
                prop_assert_eq!(rep.exponent_from_genus(), Some(rep.exponent() as i64));
            }
        }
    }

    #[test]
    fn oracle_invariances(seed in any::<u64>(), la in 1usize..=3, lb in 1usize..=3, k in 0usize..3, n in 1usize..=3) {
        let mut r = rng(seed);
        let a = random_generator(&mut r, la, "x", false);
        let b = random_generator(&mut r, lb, "y", false);
        let cfg = OracleConfig::new(n, rat(1, 2));
        let base = oracle_moment(&[a.clone(), b.clone()], &cfg, false).unwrap();
        prop_assert_eq!(&oracle_moment(&[b.clone(), a.clone()], &cfg, false).unwrap(), &base);
        prop_assert_eq!(&oracle_moment(&[rotate(&a, k), b.clone()], &cfg, false).unwrap(), &base);
    }

    #[test]
    fn transport_round_trip(seed in any::<u64>(), legs in 0usize..=5, kernel in any::<bool>()) {
        let mut r = rng(seed);
        let mode = if kernel { Mode::Kernel } else { Mode::Matrix };
        let g = random_generator(&mut r, legs, "x", kernel);
        let s = Series::generator(g).scale_rational(&int(r.gen_range(1..5)));
        prop_assert!(transport_roundtrip_check(&s, &TransportKernel::new("F", mode), true).is_zero());
    }

    #[test]
    fn unit_is_neutral(seed in any::<u64>(), legs in 0usize..=5) {
        let mut r = rng(seed);
        let s = Series::generator(random_generator(&mut r, legs, "x", true));
        let alg = Algebra::kernel();
        prop_assert_eq!(alg.product(&Series::unit(), &s).unwrap(), s.clone());
        prop_assert_eq!(alg.product(&s, &Series::unit()).unwrap(), s);
    }

    #[test]
    fn connected_bound_single_trace(seed in any::<u64>(), k in 2usize..=3) {
        let mut r = rng(seed);
        let factors: Vec<Series> = (0..k)
            .map(|i| {
                let legs = r.gen_range(1..=3);
                Series::generator(shaped(&[legs], &((b'a' + i as u8) as char).to_string()))
            })
            .collect();
        let conn = Algebra::matrix().connected_product(&factors).unwrap();
        prop_assert!(meets_degree_bound(&conn, connected_degree_bound(&vec![1; k]).unwrap()));
    }

    #[test]
    fn star_is_antihomomorphism(seed in any::<u64>(), la in 0usize..=3, lb in 0usize..=3) {
        let mut r = rng(seed);
        let a = Series::generator(random_generator(&mut r, la, "x", true));
        let b = Series::generator(random_generator(&mut r, lb, "y", true));
        let alg = Algebra::kernel();
        prop_assert_eq!(
            alg.product(&a, &b).unwrap().star(),
            alg.product(&b.star(), &a.star()).unwrap()
        );
    }
}
