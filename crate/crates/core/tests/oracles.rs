mod common;

use earsim_core::features::time::{
    approximate_entropy, lempel_ziv, lz76_phrase_count, permutation_entropy, sample_entropy,
};
use earsim_core::similarity::mann_whitney_exact;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Random epochs of length ≤ 64; every third one is coarsely quantized to force ties.
fn epochs(seed: u64, count: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let n = rng.gen_range(8..=64);
            let x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            if i % 3 == 0 {
                x.iter().map(|v: &f64| (v * 2.0).round()).collect()
            } else {
                x
            }
        })
        .collect()
}

#[test]
fn approximate_entropy_matches_definition() {
    for x in epochs(1, 240) {
        let r = 0.2 * common::population_sd(&x);
        if r == 0.0 {
            continue;
        }
        let got = approximate_entropy(&x, 2, 0.2);
        assert!((got.value - common::apen(&x, 2, r)).abs() <= 1e-10, "{x:?}");
    }
}

#[test]
fn sample_entropy_matches_definition() {
    for (k, x) in epochs(2, 240).into_iter().enumerate() {
        let d = 1 + k % 3;
        if x.len() <= d + 1 {
            continue;
        }
        let r = 0.2 * common::population_sd(&x);
        if r == 0.0 {
            continue;
        }
        let got = sample_entropy(&x, d, 0.2);
        match common::sampen(&x, d, r) {
            Some(v) => assert!((got.value - v).abs() <= 1e-10 && !got.degenerate, "{x:?}"),
            None => assert!(got.degenerate && got.value == 0.0),
        }
    }
}

#[test]
fn permutation_entropy_matches_definition() {
    for (k, x) in epochs(3, 240).into_iter().enumerate() {
        let (order, tau) = (3 + k % 3, 1 + k % 2);
        if x.len() < (order - 1) * tau + 1 {
            continue;
        }
        let got: f64 = permutation_entropy(&x, order, tau);
        assert!((got - common::permen(&x, order, tau)).abs() <= 1e-10);
    }
}

#[test]
fn lempel_ziv_matches_naive_parser() {
    for x in epochs(4, 240) {
        assert!((lempel_ziv(&x) - common::lempel_ziv(&x)).abs() <= 1e-10);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..300 {
        let n = rng.gen_range(1..=80);
        let p = rng.gen_range(0.05..0.95);
        let bits: Vec<u8> = (0..n).map(|_| u8::from(rng.gen_bool(p))).collect();
        assert_eq!(lz76_phrase_count(&bits), common::lz76(&bits), "{bits:?}");
    }
    // long runs, as in median-binarized slow waves
    for _ in 0..60 {
        let n = rng.gen_range(50..=300);
        let stay = rng.gen_range(0.7..0.98);
        let mut b = 0u8;
        let bits: Vec<u8> = (0..n)
            .map(|_| {
                if !rng.gen_bool(stay) {
                    b ^= 1;
                }
                b
            })
            .collect();
        assert_eq!(lz76_phrase_count(&bits), common::lz76(&bits), "{bits:?}");
    }
}

#[test]
fn lempel_ziv_hand_parses() {
    // 0 | 1 | (copy of 01010101 to the end)
    let alt = [0u8, 1, 0, 1, 0, 1, 0, 1, 0, 1];
    assert_eq!(lz76_phrase_count(&alt), 2);
    assert_eq!(common::lz76(&alt), 2);
    assert_eq!(lz76_phrase_count(&[0u8; 16]), 1);
    let x: Vec<f64> = alt.iter().map(|&b| b as f64).collect();
    assert!((lempel_ziv(&x) - 2.0 * 10f64.log2() / 10.0).abs() < 1e-12);
}

#[test]
fn exact_mann_whitney_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..200 {
        let na = rng.gen_range(1..=8);
        let nb = rng.gen_range(1..=8);
        let mut draw =
            |n: usize| -> Vec<f64> { (0..n).map(|_| rng.gen_range(0..6) as f64).collect() };
        let (a, b) = (draw(na), draw(nb));
        let got = mann_whitney_exact(&a, &b).unwrap();
        let (u, pg, pl) = common::mwu_exact(&a, &b);
        assert!((got.u - u).abs() <= 1e-10);
        assert!((got.p_greater - pg).abs() <= 1e-10, "{a:?} {b:?}");
        assert!((got.p_less - pl).abs() <= 1e-10);
    }
}
