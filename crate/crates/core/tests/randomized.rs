//! Statistical and structural checks of the randomized algorithms.

mod common;

use proptest::prelude::*;
use ttkrp::orthogonalize::left_orthogonality_defect;
use ttkrp::random::{gaussian_matrix, GaussianStream};
use ttkrp::sketch::{estimate_norm_krp, krp_partial_contractions_rl, GaussianFactorSet};
use ttkrp::synthetic::{decaying_sum, normalized_random_tt};
use ttkrp::tensor::formal_difference;
use ttkrp::{
    compression_pass, formal_sum, norm_exact, random_gaussian_tt, round_adaptive_krp,
    round_fixed_krp, round_orth_rand, round_rand_orth_tt, round_sum_adaptive_krp, AdaptiveConfig,
    OrthRandRule, TTSum, TTTensor,
};

fn rel_error(x: &TTTensor, y: &TTTensor) -> f64 {
    norm_exact(&formal_difference(x, y).unwrap()) / norm_exact(x)
}

#[test]
fn gaussian_matrix_moments() {
    let m = gaussian_matrix(400, 250, 5);
    let n = (m.nrows() * m.ncols()) as f64;
    let mean = m.iter().sum::<f64>() / n;
    let var = m.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    // standard errors: 1/sqrt(n) = 0.003 for the mean, sqrt(2/n) = 0.0045 for the variance
    assert!(mean.abs() < 0.015, "mean {mean}");
    assert!((var - 1.0).abs() < 0.025, "variance {var}");
    assert_eq!(gaussian_matrix(3, 4, 9), gaussian_matrix(3, 4, 9));
    assert_ne!(gaussian_matrix(3, 4, 9), gaussian_matrix(3, 4, 10));
}

#[test]
fn random_tt_core_variance() {
    // d = 3, n = 50, r = 10: entries of core k have variance 1/(r_{k-1} n r_k)
    let (modes, ranks) = ([50, 50, 50], [1, 10, 10, 1]);
    let mut sums = [0.0f64; 3];
    let mut counts = [0usize; 3];
    for seed in 0..200 {
        let x = random_gaussian_tt(&modes, &ranks, seed).unwrap();
        for (k, c) in x.cores().iter().enumerate() {
            sums[k] += c.data().iter().map(|v| v * v).sum::<f64>();
            counts[k] += c.data().len();
        }
    }
    for k in 0..3 {
        let expect = 1.0 / (ranks[k] * modes[k] * ranks[k + 1]) as f64;
        let got = sums[k] / counts[k] as f64;
        assert!(
            (got / expect - 1.0).abs() < 0.2,
            "core {k}: {got} vs {expect}"
        );
    }
}

#[test]
fn sketch_streams_are_independent_of_data_streams() {
    // a sketch drawn with the same seed as the tensor must not replay its factors
    let mut data = GaussianStream::new(3);
    let mut sketch = GaussianStream::sketch(3);
    let a: Vec<f64> = (0..16).map(|_| data.sample()).collect();
    let b: Vec<f64> = (0..16).map(|_| sketch.sample()).collect();
    assert_ne!(a, b);
}

#[test]
fn krp_norm_estimator_is_unbiased() {
    let x = normalized_random_tt(4, 6, 3, 1).unwrap();
    let trials = 2000;
    let sq: Vec<f64> = (0..trials)
        .map(|t| estimate_norm_krp(&x, 8, t).unwrap().powi(2))
        .collect();
    let mean = sq.iter().sum::<f64>() / trials as f64;
    let sd = (sq.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (trials as f64 - 1.0)).sqrt();
    let se = sd / (trials as f64).sqrt();
    assert!((mean - 1.0).abs() <= 4.0 * se, "mean {mean}, se {se}");
}

#[test]
fn norm_estimate_is_exact_on_zero_and_scales() {
    let zero = TTTensor::zeros(&[4, 5, 6]).unwrap();
    assert_eq!(estimate_norm_krp(&zero, 16, 1).unwrap(), 0.0);
    let x = normalized_random_tt(3, 5, 2, 2).unwrap();
    let a = estimate_norm_krp(&x, 16, 4).unwrap();
    let b = estimate_norm_krp(&x.scaled(-3.0), 16, 4).unwrap();
    assert!((b - 3.0 * a).abs() <= 1e-12 * b);
}

#[test]
fn appended_contractions_equal_one_wide_contraction() {
    let x = random_gaussian_tt(&[4, 3, 5, 3], &[1, 2, 3, 2, 1], 2).unwrap();
    let mut s = GaussianStream::new(8);
    let a = GaussianFactorSet::draw(&mut s, &x.mode_sizes(), 2, 3);
    let b = GaussianFactorSet::draw(&mut s, &x.mode_sizes(), 2, 4);
    let mut w = krp_partial_contractions_rl(&x, &a).unwrap();
    w.append(krp_partial_contractions_rl(&x, &b).unwrap());
    let whole = krp_partial_contractions_rl(&x, &a.concat(&b).unwrap()).unwrap();
    for k in 2..=4 {
        assert!(common::rel_diff(w.w(k), whole.w(k)) <= 1e-14);
    }
}

#[test]
fn fixed_rank_methods_are_exact_on_exact_low_rank() {
    let x = random_gaussian_tt(&[6, 5, 7, 4], &[1, 3, 4, 2, 1], 4).unwrap();
    let padded = formal_sum(&[x.clone(), x.scaled(0.5)]).unwrap();
    let ranks = [3, 4, 2];
    for seed in 0..3 {
        let outputs = [
            round_fixed_krp(&padded, &ranks, seed).unwrap(),
            round_rand_orth_tt(&padded, &ranks, seed).unwrap(),
            round_orth_rand(&padded, &OrthRandRule::Ranks(ranks.to_vec()), seed).unwrap(),
        ];
        for y in &outputs {
            assert_eq!(y.ranks(), vec![1, 3, 4, 2, 1]);
            assert!(rel_error(&padded, y) <= 1e-10);
            assert!(left_orthogonality_defect(y) <= 1e-12);
        }
    }
}

#[test]
fn randomized_rounding_is_seed_deterministic() {
    let x = decaying_sum(4, 8, 3, 3, 0.1, 5).unwrap();
    assert_eq!(
        round_fixed_krp(&x, &[4; 3], 11).unwrap(),
        round_fixed_krp(&x, &[4; 3], 11).unwrap()
    );
    let cfg = AdaptiveConfig::new(1e-4, 11);
    assert_eq!(
        round_adaptive_krp(&x, &cfg).unwrap().tensor,
        round_adaptive_krp(&x, &cfg).unwrap().tensor
    );
}

#[test]
fn orth_rand_tolerance_mode_is_guaranteed() {
    let x = decaying_sum(4, 10, 4, 4, 0.1, 1).unwrap();
    for (i, eps) in [1e-2, 1e-4, 1e-6].into_iter().enumerate() {
        let y = round_orth_rand(&x, &OrthRandRule::Tolerance(eps), i as u64).unwrap();
        assert!(rel_error(&x, &y) <= eps, "eps {eps:e}");
    }
}

#[test]
fn compression_pass_rejects_non_orthogonal_input() {
    let x = random_gaussian_tt(&[4, 4, 4], &[1, 3, 3, 1], 1).unwrap();
    assert!(compression_pass(&x, 1e-3).is_err());
}

#[test]
fn sum_rounding_of_cancelling_terms_is_zero() {
    let x = random_gaussian_tt(&[5, 4, 6], &[1, 3, 2, 1], 1).unwrap();
    let sum = TTSum::new(vec![x.clone(), x.scaled(-1.0)]).unwrap();
    let out = round_sum_adaptive_krp(&sum, 1e-6, 0.05, 3).unwrap();
    assert_eq!(out.tensor.ranks(), vec![1, 1, 1, 1]);
    let dense = out.tensor.to_dense().unwrap();
    assert!(dense.norm() <= 1e-10 * norm_exact(&x));
}

#[test]
fn sum_rounding_matches_dense_sum() {
    let terms: Vec<TTTensor> = (0..5)
        .map(|i| {
            normalized_random_tt(3, 9, 3, 40 + i)
                .unwrap()
                .scaled(0.3f64.powi(i as i32))
        })
        .collect();
    let sum = TTSum::new(terms).unwrap();
    let dense = sum.formal_sum().to_dense().unwrap();
    let eps = 1e-6;
    let ok = (0..10)
        .filter(|&seed| {
            let y = round_sum_adaptive_krp(&sum, eps, 0.05, seed)
                .unwrap()
                .tensor;
            y.to_dense().unwrap().distance(&dense) <= 1.5 * eps * dense.norm()
        })
        .count();
    assert!(ok >= 9, "{ok}/10");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fixed_rank_outputs_are_left_orthonormal(seed in any::<u64>(), l in 1usize..6) {
        let x = random_gaussian_tt(&[5, 4, 6, 3], &[1, 4, 5, 3, 1], seed).unwrap();
        for y in [round_fixed_krp(&x, &[l; 3], seed).unwrap(), round_rand_orth_tt(&x, &[l; 3], seed).unwrap()] {
            prop_assert!(left_orthogonality_defect(&y) <= 1e-12);
            for (a, b) in y.ranks().iter().zip(x.ranks()) {
                prop_assert!(*a <= b);
            }
        }
    }

    #[test]
    fn sum_sketch_is_sum_of_sketches(seeds in prop::collection::vec(any::<u64>(), 2..5), cols in 1usize..5) {
        let terms: Vec<TTTensor> = seeds.iter()
            .map(|&s| random_gaussian_tt(&[3, 4, 3, 2], &[1, 2, 3, 2, 1], s).unwrap())
            .collect();
        let sum = TTSum::new(terms).unwrap();
        let mut stream = GaussianStream::new(seeds[0]);
        let f = GaussianFactorSet::draw(&mut stream, &sum.mode_sizes(), 2, cols);
        let formal = sum.formal_sum();
        let direct = formal.cores()[0].vertical() * krp_partial_contractions_rl(&formal, &f).unwrap().w(2);
        let mut acc = nalgebra::DMatrix::zeros(3, cols);
        for t in sum.terms() {
            acc += t.cores()[0].vertical() * krp_partial_contractions_rl(t, &f).unwrap().w(2);
        }
        prop_assert!(common::rel_diff(&acc, &direct) <= 1e-13);
    }
}
