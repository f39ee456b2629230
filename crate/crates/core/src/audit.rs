//! Exhaustive numeric privacy auditor for GRR-FS.
//!
//! For small configurations the full output distribution of GRR-FS is
//! computable exactly: the hidden sampled subset is marginalized by summing
//! over all `m`-subsets with weight `1 / C(d, m)`. Comparing the two output
//! distributions of a pair of inputs gives the worst-case likelihood ratio.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ldp::{Budget, TransitionMatrix};

pub const DEFAULT_OUTPUT_CAP: u128 = 4096;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditRow {
    pub output: Vec<u32>,
    pub prob_x: f64,
    pub prob_x_prime: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub rows: Vec<AuditRow>,
    pub max_ratio: f64,
    pub argmax: Vec<u32>,
    /// Number of coordinates in which the two inputs differ.
    pub hamming: usize,
}

fn output_space(domains: &[u32], cap: u128) -> Result<usize> {
    let size = domains.iter().fold(1u128, |acc, &g| acc.saturating_mul(g as u128));
    if size > cap {
        return Err(Error::OutputSpaceTooLarge { size, cap });
    }
    Ok(size as usize)
}

/// Output `index` in lexicographic order (first coordinate most significant).
fn decode(mut index: usize, domains: &[u32]) -> Vec<u32> {
    let mut out = vec![0; domains.len()];
    for i in (0..domains.len()).rev() {
        let g = domains[i] as usize;
        out[i] = (index % g) as u32 + 1;
        index /= g;
    }
    out
}

fn check_input(x: &[u32], domains: &[u32]) -> Result<()> {
    if x.len() != domains.len() {
        return Err(Error::invalid("input and domain list differ in length"));
    }
    for (&v, &g) in x.iter().zip(domains) {
        if v < 1 || v > g {
            return Err(Error::OutOfDomain { value: v, domain: g });
        }
    }
    Ok(())
}

/// Exact probability of every GRR-FS output for input `x`, in lexicographic
/// output order.
pub fn output_distribution(domains: &[u32], m: usize, eps_x: Budget, x: &[u32], cap: u128) -> Result<Vec<f64>> {
    check_input(x, domains)?;
    let d = domains.len();
    if m < 1 || m > d {
        return Err(Error::invalid(format!("sample count m={m} outside 1..={d}")));
    }
    if d > 30 {
        return Err(Error::invalid("auditor supports at most 30 coordinates"));
    }
    let size = output_space(domains, cap)?;
    let channels = domains
        .iter()
        .map(|&g| TransitionMatrix::new(g as usize, eps_x))
        .collect::<Result<Vec<_>>>()?;
    let subsets: Vec<u32> = (0u32..(1u32 << d)).filter(|s| s.count_ones() as usize == m).collect();
    let weight = 1.0 / subsets.len() as f64;

    let mut dist = Vec::with_capacity(size);
    for idx in 0..size {
        let o = decode(idx, domains);
        let mut total = 0.0;
        for &s in &subsets {
            let mut prob = 1.0;
            for i in 0..d {
                prob *= if s & (1 << i) != 0 {
                    channels[i].prob(o[i], x[i])
                } else {
                    1.0 / domains[i] as f64
                };
            }
            total += prob;
        }
        dist.push(total * weight);
    }
    Ok(dist)
}

/// Worst-case ratio `Pr[o | x] / Pr[o | x_prime]` over all outputs `o`.
pub fn audit_pair(
    domains: &[u32],
    m: usize,
    eps_x: Budget,
    x: &[u32],
    x_prime: &[u32],
    cap: u128,
) -> Result<AuditReport> {
    let px = output_distribution(domains, m, eps_x, x, cap)?;
    let py = output_distribution(domains, m, eps_x, x_prime, cap)?;
    let mut rows = Vec::with_capacity(px.len());
    let mut best = (f64::NEG_INFINITY, 0usize);
    for (idx, (&a, &b)) in px.iter().zip(&py).enumerate() {
        let ratio = match (a > 0.0, b > 0.0) {
            (_, true) => a / b,
            (true, false) => f64::INFINITY,
            (false, false) => continue,
        };
        if ratio > best.0 {
            best = (ratio, idx);
        }
        rows.push(AuditRow {
            output: decode(idx, domains),
            prob_x: a,
            prob_x_prime: b,
            ratio,
        });
    }
    Ok(AuditReport {
        rows,
        max_ratio: best.0,
        argmax: decode(best.1, domains),
        hamming: x.iter().zip(x_prime).filter(|(a, b)| a != b).count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ldp::amplified_budget;
    use approx::assert_relative_eq;

    fn ln3() -> Budget {
        Budget::Finite(3f64.ln())
    }

    #[test]
    fn enumeration_example() {
        // Pr[(1,1) | (1,1)] = 0.5 * (0.75 * 0.5) + 0.5 * (0.5 * 0.75)
        let dist = output_distribution(&[2, 2], 1, ln3(), &[1, 1], DEFAULT_OUTPUT_CAP).unwrap();
        assert_relative_eq!(dist[0], 0.375, epsilon = 1e-15);
        assert_relative_eq!(dist.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn single_coordinate_neighbors_hit_amplified_bound() {
        let r = audit_pair(&[2, 2], 1, ln3(), &[1, 1], &[2, 1], DEFAULT_OUTPUT_CAP).unwrap();
        assert_relative_eq!(r.max_ratio, 2.0, epsilon = 1e-12);
        assert_eq!(r.argmax, vec![1, 2]);
        assert_relative_eq!(amplified_budget(3f64.ln(), 1, 2).unwrap().exp(), 2.0, epsilon = 1e-12);
        assert_eq!(r.hamming, 1);
    }

    #[test]
    fn identical_inputs_ratio_one() {
        let r = audit_pair(&[3, 2], 2, ln3(), &[2, 1], &[2, 1], DEFAULT_OUTPUT_CAP).unwrap();
        assert_relative_eq!(r.max_ratio, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn all_coordinate_neighbors_reach_composed_bound() {
        let r = audit_pair(&[2, 2], 1, ln3(), &[1, 1], &[2, 2], DEFAULT_OUTPUT_CAP).unwrap();
        assert_relative_eq!(r.max_ratio, 3.0, epsilon = 1e-12);
        assert_eq!(r.argmax, vec![1, 1]);
    }

    #[test]
    fn cap_is_enforced() {
        let err = audit_pair(&[5; 6], 1, ln3(), &[1; 6], &[1; 6], DEFAULT_OUTPUT_CAP).unwrap_err();
        assert!(matches!(err, Error::OutputSpaceTooLarge { size: 15625, .. }));
    }
}
