//! Correlations checked against brute-force routes that share no code with the library.

use proptest::prelude::*;
use qalign_core::metrics::{plcc, srcc, PairedSeries};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Rank = 1 + #smaller + (#equal - 1) / 2, by explicit counting.
fn brute_ranks(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .map(|&v| {
            let smaller = values.iter().filter(|&&w| w < v).count() as f64;
            let equal = values.iter().filter(|&&w| w == v).count() as f64;
            1.0 + smaller + (equal - 1.0) / 2.0
        })
        .collect()
}

/// Raw-moment Pearson formula.
fn brute_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sx, sy): (f64, f64) = (x.iter().sum(), y.iter().sum());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

/// Spearman without ties: 1 - 6 Σd² / (n(n² - 1)).
fn brute_spearman_distinct(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (brute_ranks(x), brute_ranks(y));
    let n = x.len() as f64;
    let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b).powi(2)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
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
    out
}

#[test]
fn all_small_permutations() {
    for n in 3..=6 {
        let labels: Vec<f64> = (0..n).map(|i| i as f64).collect();
        for perm in permutations(n) {
            let preds: Vec<f64> = perm.iter().map(|&i| i as f64).collect();
            let series = PairedSeries::new(preds.clone(), labels.clone()).unwrap();
            let s = srcc(&series).unwrap();
            assert!((s - brute_spearman_distinct(&preds, &labels)).abs() < 1e-12, "{perm:?}");
            let p = plcc(&series).unwrap();
            assert!((p - brute_pearson(&preds, &labels)).abs() < 1e-12, "{perm:?}");
        }
    }
}

#[test]
fn random_real_vectors() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let n = rng.gen_range(3..=40);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let series = PairedSeries::new(x.clone(), y.clone()).unwrap();
        let s = srcc(&series).unwrap();
        assert!((s - brute_pearson(&brute_ranks(&x), &brute_ranks(&y))).abs() < 1e-12);
        let p = plcc(&series).unwrap();
        assert!((p - brute_pearson(&x, &y)).abs() < 1e-12);
    }
}

#[test]
fn ties_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..500 {
        let n = rng.gen_range(3..=8);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0..4) as f64).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(0..4) as f64).collect();
        let Ok(series) = PairedSeries::new(x.clone(), y.clone()) else { continue };
        if let Ok(s) = srcc(&series) {
            assert!((s - brute_pearson(&brute_ranks(&x), &brute_ranks(&y))).abs() < 1e-12);
        }
    }
}

fn vec_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (3usize..30).prop_flat_map(|n| {
        (
            prop::collection::vec(-100.0f64..100.0, n),
            prop::collection::vec(-100.0f64..100.0, n),
        )
    })
}

proptest! {
    #[test]
    fn symmetric((x, y) in vec_pair()) {
        let a = PairedSeries::new(x.clone(), y.clone()).unwrap();
        let b = PairedSeries::new(y, x).unwrap();
        prop_assert!((srcc(&a).unwrap() - srcc(&b).unwrap()).abs() < 1e-12);
        prop_assert!((plcc(&a).unwrap() - plcc(&b).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn positive_affine_invariance((x, y) in vec_pair(), a in 0.01f64..100.0, b in -100.0f64..100.0) {
        let mapped: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let base = PairedSeries::new(x, y.clone()).unwrap();
        let moved = PairedSeries::new(mapped, y).unwrap();
        prop_assert!((plcc(&base).unwrap() - plcc(&moved).unwrap()).abs() < 1e-9);
        prop_assert!((srcc(&base).unwrap() - srcc(&moved).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn self_correlation_is_one((x, _) in vec_pair()) {
        let s = PairedSeries::new(x.clone(), x).unwrap();
        prop_assert!((srcc(&s).unwrap() - 1.0).abs() < 1e-12);
        prop_assert!((plcc(&s).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bounded((x, y) in vec_pair()) {
        let s = PairedSeries::new(x, y).unwrap();
        prop_assert!((-1.0..=1.0).contains(&srcc(&s).unwrap()));
        prop_assert!((-1.0..=1.0).contains(&plcc(&s).unwrap()));
    }
}
