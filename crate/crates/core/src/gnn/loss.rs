//! Node-level cross-entropy and bag-level KL proportion loss, each returning
//! its value and its gradient with respect to the softmax outputs.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::reconstruct::{BagProportions, ReconstructedLabels};

/// Floor added inside every logarithm.
pub const LOG_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct LossTerm {
    pub value: f64,
    /// d(value)/d(probs), same shape as the prediction matrix.
    pub grad: Array2<f64>,
}

/// Mean of `-ln(p_{v, y_v} + floor)` over `nodes`; unlabeled nodes in the
/// list are skipped.
pub fn loss_gnn(probs: &Array2<f64>, labels: &ReconstructedLabels, nodes: &[usize]) -> Result<LossTerm> {
    let targets: Vec<(usize, usize)> = nodes
        .iter()
        .filter_map(|&v| labels.class_of(v).map(|y| (v, y)))
        .collect();
    if targets.is_empty() {
        return Err(Error::invalid("cross-entropy over an empty training set"));
    }
    let scale = 1.0 / targets.len() as f64;
    let mut grad = Array2::zeros(probs.raw_dim());
    let mut value = 0.0;
    for (v, y) in targets {
        let p = probs[[v, y]] + LOG_FLOOR;
        value -= p.ln();
        grad[[v, y]] -= scale / p;
    }
    Ok(LossTerm {
        value: value * scale,
        grad,
    })
}

/// `sum_j a_j ln((a_j + floor) / (b_j + floor))`.
pub fn kl_divergence(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| x * ((x + LOG_FLOOR).ln() - (y + LOG_FLOOR).ln()))
        .sum()
}

/// Mean predicted distribution over each bag's members.
pub fn bag_predictions(probs: &Array2<f64>, bags: &BagProportions) -> Vec<Vec<f64>> {
    bags.members
        .iter()
        .map(|members| {
            let mut mean = vec![0.0; probs.ncols()];
            for &v in members {
                for (m, &p) in mean.iter_mut().zip(probs.row(v)) {
                    *m += p;
                }
            }
            let k = members.len().max(1) as f64;
            mean.iter_mut().for_each(|m| *m /= k);
            mean
        })
        .collect()
}

/// Mean over bags with labeled members of `KL(predicted ‖ reconstructed)`,
/// where the predicted proportion averages soft prediction rows.
pub fn loss_llp(probs: &Array2<f64>, bags: &BagProportions) -> Result<LossTerm> {
    let included = bags.num_included();
    if included == 0 {
        return Err(Error::invalid("every bag is empty"));
    }
    let predicted = bag_predictions(probs, bags);
    let scale = 1.0 / included as f64;
    let mut grad = Array2::zeros(probs.raw_dim());
    let mut value = 0.0;
    for (r, members) in bags.members.iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        let b_hat = &predicted[r];
        let b_tilde = &bags.reconstructed[r];
        value += kl_divergence(b_hat, b_tilde);
        let per_member = scale / members.len() as f64;
        let dkl: Vec<f64> = b_hat
            .iter()
            .zip(b_tilde)
            .map(|(&x, &y)| (x + LOG_FLOOR).ln() - (y + LOG_FLOOR).ln() + x / (x + LOG_FLOOR))
            .collect();
        for &v in members {
            for (g, &d) in grad.row_mut(v).iter_mut().zip(&dkl) {
                *g += per_member * d;
            }
        }
    }
    Ok(LossTerm {
        value: value * scale,
        grad,
    })
}
