//! Unbiased frequency estimation for GRR-FS and plain GRR reports.
//!
//! Estimates are affine in the observed proportions and are deliberately left
//! unclipped; entries may fall outside `[0, 1]`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ldp::TransitionMatrix;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyEstimate {
    pub estimate: Vec<f64>,
    pub variance: Vec<f64>,
    pub n: usize,
}

fn check_observed(observed: &[f64]) -> Result<()> {
    if observed.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::invalid("observed proportions must be finite and non-negative"));
    }
    Ok(())
}

fn check_sampling(d: usize, m: usize) -> Result<()> {
    if m < 1 || m > d {
        return Err(Error::invalid(format!("sample count m={m} outside 1..={d}")));
    }
    Ok(())
}

/// Inverts the GRR-FS observation equation
/// `lambda_j = (m pi_j g (p-q) + m q g + d - m) / (d g)` for one proportion.
#[inline]
pub fn grr_fs_point(observed: f64, d: usize, m: usize, channel: &TransitionMatrix) -> f64 {
    let (d, m) = (d as f64, m as f64);
    let g = channel.size() as f64;
    let diff = channel.p() - channel.q();
    // The second term carries (p - q) to the first power: that is the exact
    // inverse of the observation equation.
    observed * d / (m * diff) + (m - d - m * g * channel.q()) / (m * g * diff)
}

/// Frequency estimate for one GRR-FS column from observed proportions over `n` reports.
pub fn estimate_grr_fs(
    observed: &[f64],
    d: usize,
    m: usize,
    channel: &TransitionMatrix,
    n: usize,
) -> Result<FrequencyEstimate> {
    check_observed(observed)?;
    check_sampling(d, m)?;
    if observed.len() != channel.size() {
        return Err(Error::invalid(format!(
            "{} proportions for a domain of size {}",
            observed.len(),
            channel.size()
        )));
    }
    if (observed.iter().sum::<f64>() - 1.0).abs() > 1e-6 {
        return Err(Error::invalid("observed proportions must sum to 1"));
    }
    if n < 2 {
        return Err(Error::invalid(format!("need at least 2 reports, got {n}")));
    }
    let (df, mf) = (d as f64, m as f64);
    let diff = channel.p() - channel.q();
    let estimate: Vec<f64> = observed.iter().map(|&l| grr_fs_point(l, d, m, channel)).collect();
    let variance = observed
        .iter()
        .map(|&lam| df * df * lam * (1.0 - lam) / (mf * mf * (n as f64 - 1.0) * diff * diff))
        .collect();
    Ok(FrequencyEstimate { estimate, variance, n })
}

/// Sampling variance of the GRR-FS estimate when the true observation
/// probability is `lambda`.
pub fn true_variance_grr_fs(lambda: f64, d: usize, m: usize, p: f64, q: f64, n: usize) -> Result<f64> {
    if !(p > q) {
        return Err(Error::invalid(format!("need p > q, got p={p} q={q}")));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::invalid(format!("lambda={lambda} outside [0, 1]")));
    }
    check_sampling(d, m)?;
    if n < 1 {
        return Err(Error::invalid("need at least one report"));
    }
    let (d, m) = (d as f64, m as f64);
    Ok(d * d * lambda * (1.0 - lambda) / (n as f64 * m * m * (p - q) * (p - q)))
}

/// `P^{-1} lambda'` with the per-class variance taken from the diagonal of
/// `(n-1)^{-1} P^{-1} (diag(lambda') - lambda' lambda'^T) P^{-T}`.
pub fn estimate_matrix_inverse(observed: &[f64], channel: &TransitionMatrix, n: usize) -> Result<FrequencyEstimate> {
    check_observed(observed)?;
    let c = channel.size();
    if observed.len() != c {
        return Err(Error::invalid(format!(
            "{} proportions for {c} classes",
            observed.len()
        )));
    }
    if n < 2 {
        return Err(Error::invalid(format!("need at least 2 reports, got {n}")));
    }
    let estimate = channel.apply_inverse(observed);

    let (a, b) = channel.inverse_coefficients();
    let inv = |i: usize, j: usize| if i == j { a + b } else { b };
    let cov = |i: usize, j: usize| {
        let diag = if i == j { observed[i] } else { 0.0 };
        diag - observed[i] * observed[j]
    };
    let scale = 1.0 / (n as f64 - 1.0);
    let variance = (0..c)
        .map(|k| {
            let mut acc = 0.0;
            for i in 0..c {
                for j in 0..c {
                    acc += inv(k, i) * cov(i, j) * inv(k, j);
                }
            }
            acc * scale
        })
        .collect();
    Ok(FrequencyEstimate { estimate, variance, n })
}

pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (j, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = j;
        }
    }
    best
}
