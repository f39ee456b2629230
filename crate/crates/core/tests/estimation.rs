mod common;

use common::{mean, sample_var};
use proptest::prelude::*;
use rand::Rng;
use rgnn::freq::{argmax, estimate_grr_fs, estimate_matrix_inverse, true_variance_grr_fs};
use rgnn::ldp::{grr_perturb, Budget, TransitionMatrix};

fn check_unbiased_and_variance(domains: &[u32], m: usize, eps: f64, pi1: f64, n: usize, trials: usize, seed: u64) {
    let t = common::run_trials(domains, m, eps, pi1, n, trials, seed);
    let ch = TransitionMatrix::new(domains[0] as usize, Budget::Finite(eps)).unwrap();
    let true_var = true_variance_grr_fs(t.lambda, domains.len(), m, ch.p(), ch.q(), n).unwrap();
    let se = (true_var / trials as f64).sqrt();
    let avg = mean(&t.estimates);
    assert!(
        (avg - pi1).abs() < 3.0 * se,
        "{domains:?} m={m} eps={eps}: mean {avg} vs {pi1} (se {se})"
    );
    let emp_var = sample_var(&t.estimates);
    assert!(
        (emp_var / true_var - 1.0).abs() < 0.2,
        "empirical variance {emp_var} vs {true_var}"
    );
    let mean_var_hat = mean(&t.var_hats);
    assert!(
        (mean_var_hat / true_var - 1.0).abs() < 0.2,
        "mean estimated variance {mean_var_hat} vs {true_var}"
    );
}

#[test]
fn grr_fs_estimator_is_unbiased_with_matching_variance() {
    let ln3 = 3f64.ln();
    check_unbiased_and_variance(&[2, 2, 2, 2], 2, ln3, 0.8, 5000, 500, 1);
    check_unbiased_and_variance(&[3, 3, 3], 1, 1.0, 0.6, 3000, 400, 2);
    check_unbiased_and_variance(&[2, 2, 2, 2, 2, 2], 3, 0.5, 0.3, 3000, 400, 3);
    check_unbiased_and_variance(&[2, 2], 2, 2.0, 0.9, 2000, 400, 4);
}

#[test]
fn matrix_inverse_estimator_is_unbiased() {
    let (c, n, trials) = (4usize, 2000usize, 300usize);
    let pi = [0.5, 0.3, 0.15, 0.05];
    let ch = TransitionMatrix::new(c, Budget::Finite(1.0)).unwrap();
    let mut rng = common::rng(7);
    let mut est0 = Vec::new();
    let mut var0 = Vec::new();
    for _ in 0..trials {
        let mut counts = vec![0usize; c];
        for _ in 0..n {
            let k = rng.random_range(0.0..1.0);
            let class = pi
                .iter()
                .scan(0.0, |acc, &s| {
                    *acc += s;
                    Some(*acc)
                })
                .position(|cum| k < cum)
                .unwrap_or(c - 1);
            let o = grr_perturb(class as u32 + 1, c as u32, Budget::Finite(1.0), &mut rng).unwrap();
            counts[o as usize - 1] += 1;
        }
        let observed: Vec<f64> = counts.iter().map(|&x| x as f64 / n as f64).collect();
        let est = estimate_matrix_inverse(&observed, &ch, n).unwrap();
        est0.push(est.estimate[0]);
        var0.push(est.variance[0]);
    }
    let expected_var = mean(&var0);
    let se = (expected_var / trials as f64).sqrt();
    assert!((mean(&est0) - 0.5).abs() < 3.0 * se);
    assert!((sample_var(&est0) / expected_var - 1.0).abs() < 0.25);
}

proptest! {
    #[test]
    fn grr_fs_argmax_follows_observed(
        raw in prop::collection::vec(0.0f64..1.0, 2..6),
        eps in 0.05f64..3.0,
        d in 1usize..12,
        frac in 0.0f64..1.0,
    ) {
        let total: f64 = raw.iter().sum();
        prop_assume!(total > 1e-6);
        let observed: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let m = 1 + ((d - 1) as f64 * frac) as usize;
        let ch = TransitionMatrix::new(observed.len(), Budget::Finite(eps)).unwrap();
        let est = estimate_grr_fs(&observed, d, m, &ch, 10).unwrap();
        prop_assert_eq!(argmax(&est.estimate), argmax(&observed));
    }

    #[test]
    fn matrix_inverse_argmax_follows_observed(raw in prop::collection::vec(0.0f64..1.0, 2..8), eps in 0.05f64..3.0) {
        let ch = TransitionMatrix::new(raw.len(), Budget::Finite(eps)).unwrap();
        prop_assert_eq!(argmax(&ch.apply_inverse(&raw)), argmax(&raw));
    }

    #[test]
    fn matrix_inverse_equals_grr_fs_without_sampling(
        raw in prop::collection::vec(0.01f64..1.0, 2..6),
        p_gap in 0.05f64..0.9,
    ) {
        let c = raw.len();
        let total: f64 = raw.iter().sum();
        let observed: Vec<f64> = raw.iter().map(|x| x / total).collect();
        // any valid (p, q) pair with p > q and p + (c-1) q = 1
        let q = (1.0 - p_gap) / c as f64;
        let p = 1.0 - (c - 1) as f64 * q;
        let ch = TransitionMatrix::from_probabilities(c, p, q).unwrap();
        let a = estimate_matrix_inverse(&observed, &ch, 50).unwrap();
        let b = estimate_grr_fs(&observed, 5, 5, &ch, 50).unwrap();
        for k in 0..c {
            prop_assert!((a.estimate[k] - b.estimate[k]).abs() < 1e-12);
        }
    }
}
