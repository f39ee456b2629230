use std::time::Instant;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::loss::{loss_gnn, loss_llp};
use super::model::{backward, encode_input, forward, Dropout, ModelParams};
use crate::error::{Error, Result};
use crate::features::LabelData;
use crate::freq::argmax;
use crate::graph::Graph;
use crate::ldp::Budget;
use crate::reconstruct::{BagProportions, FeatureMode, ReconstructedFeatures, ReconstructedLabels};

/// Which parameters `train` returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Selection {
    /// Epoch with the best accuracy against the validation labels supplied to `train`.
    #[default]
    BestValidation,
    LastEpoch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub eps_x: Budget,
    pub eps_y: Budget,
    /// Features sampled per node by the feature randomizer.
    pub m: usize,
    pub k_x: usize,
    pub k_y: usize,
    pub clusters: usize,
    /// Weight of the label-proportion loss.
    pub alpha: f64,
    pub lr: f64,
    pub epochs: usize,
    pub dropout: f64,
    pub hidden: usize,
    pub weight_decay: f64,
    pub seed: u64,
    pub feature_mode: FeatureMode,
    pub selection: Selection,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            eps_x: Budget::Finite(1.0),
            eps_y: Budget::Finite(1.0),
            m: 10,
            k_x: 8,
            k_y: 8,
            clusters: 16,
            alpha: 1.0,
            lr: 0.01,
            epochs: 100,
            dropout: 0.5,
            hidden: 16,
            weight_decay: 0.0,
            seed: 0,
            feature_mode: FeatureMode::Argmax,
            selection: Selection::BestValidation,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0) {
            return Err(Error::invalid(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if self.epochs < 1 {
            return Err(Error::invalid("need at least one epoch"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::invalid(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        if self.hidden < 1 || !(self.lr > 0.0) {
            return Err(Error::invalid("hidden width and learning rate must be positive"));
        }
        Ok(())
    }
}

/// Server-side training inputs: only reconstructed (or perturbed) artifacts.
#[derive(Debug, Clone, Copy)]
pub struct TrainInputs<'a> {
    pub graph: &'a Graph,
    pub features: &'a ReconstructedFeatures,
    pub labels: &'a ReconstructedLabels,
    pub train_nodes: &'a [usize],
    pub val_nodes: &'a [usize],
    pub val_labels: &'a ReconstructedLabels,
    pub bags: Option<&'a BagProportions>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub loss: f64,
    pub gnn_loss: f64,
    pub llp_loss: f64,
    pub train_acc: f64,
    pub val_acc: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_acc: Option<f64>,
    pub wall_ms: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub best_epoch: usize,
    pub history: Vec<EpochMetrics>,
}

#[derive(Debug, Clone)]
pub struct Objective {
    pub total: f64,
    pub gnn: f64,
    pub llp: f64,
    pub grad: ModelParams,
}

/// `L_gnn + alpha * L_llp` and its exact gradient for one forward pass.
#[allow(clippy::too_many_arguments)]
pub fn objective(
    params: &ModelParams,
    x: &Array2<f64>,
    graph: &Graph,
    labels: &ReconstructedLabels,
    train_nodes: &[usize],
    bags: Option<&BagProportions>,
    alpha: f64,
    dropout: Option<Dropout>,
) -> Result<Objective> {
    let cache = forward(params, x, graph, dropout)?;
    let gnn = loss_gnn(&cache.probs, labels, train_nodes)?;
    let mut grad_probs = gnn.grad;
    let mut total = gnn.value;
    let mut llp_value = 0.0;
    if let Some(bags) = bags.filter(|b| b.num_included() > 0) {
        let llp = loss_llp(&cache.probs, bags)?;
        llp_value = llp.value;
        if alpha > 0.0 {
            total += alpha * llp.value;
            grad_probs.scaled_add(alpha, &llp.grad);
        }
    }
    let grad = backward(params, &cache, graph, &grad_probs);
    Ok(Objective {
        total,
        gnn: gnn.value,
        llp: llp_value,
        grad,
    })
}

/// Fraction of `nodes` (with a known class) whose argmax prediction matches.
pub fn accuracy(probs: &Array2<f64>, class_of: impl Fn(usize) -> Option<usize>, nodes: &[usize]) -> Option<f64> {
    let mut total = 0usize;
    let mut hits = 0usize;
    for &v in nodes {
        if let Some(y) = class_of(v) {
            total += 1;
            let row: Vec<f64> = probs.row(v).to_vec();
            if argmax(&row) == y {
                hits += 1;
            }
        }
    }
    (total > 0).then(|| hits as f64 / total as f64)
}

/// Accuracy against ground truth. Harness-side only.
pub fn evaluate(
    params: &ModelParams,
    graph: &Graph,
    x: &Array2<f64>,
    truth: &LabelData,
    nodes: &[usize],
) -> Result<f64> {
    let probs = forward(params, x, graph, None)?.probs;
    accuracy(&probs, |v| truth.class_of(v), nodes).ok_or_else(|| Error::invalid("no labeled nodes to evaluate"))
}

/// Per-epoch callback receiving evaluation-mode predictions.
pub type Monitor<'a> = &'a mut dyn FnMut(&Array2<f64>) -> f64;

/// Full-batch Adam on the regularized objective.
///
/// `monitor`, when given, receives the evaluation-mode predictions after each
/// epoch and returns a test accuracy that is only recorded in the history.
pub fn train(config: &TrainConfig, inputs: TrainInputs<'_>, mut monitor: Option<Monitor<'_>>) -> Result<TrainOutcome> {
    config.validate()?;
    let x = encode_input(inputs.features)?;
    let classes = inputs.labels.num_classes();
    let mut params = ModelParams::init(x.ncols(), config.hidden, classes, config.seed);
    let mut adam = Adam::new(params.num_params(), config.lr, config.weight_decay);
    let mut flat = params.to_vec();

    let mut history = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, usize, ModelParams)> = None;
    let start = Instant::now();
    for epoch in 1..=config.epochs {
        let dropout = Dropout {
            rate: config.dropout,
            seed: config.seed,
            step: epoch as u64,
        };
        let obj = objective(
            &params,
            &x,
            inputs.graph,
            inputs.labels,
            inputs.train_nodes,
            inputs.bags,
            config.alpha,
            Some(dropout),
        )
        .map_err(|e| Error::Diverged {
            epoch,
            what: e.to_string(),
        })?;
        if !obj.total.is_finite() || !obj.grad.is_finite() {
            return Err(Error::Diverged {
                epoch,
                what: format!("loss {} (gnn {}, llp {})", obj.total, obj.gnn, obj.llp),
            });
        }
        adam.step(&mut flat, &obj.grad.to_vec());
        params.load(&flat);

        let probs = forward(&params, &x, inputs.graph, None)
            .map_err(|e| Error::Diverged {
                epoch,
                what: e.to_string(),
            })?
            .probs;
        let train_acc = accuracy(&probs, |v| inputs.labels.class_of(v), inputs.train_nodes).unwrap_or(0.0);
        let val_acc = accuracy(&probs, |v| inputs.val_labels.class_of(v), inputs.val_nodes);
        let test_acc = monitor.as_mut().map(|f| f(&probs));
        history.push(EpochMetrics {
            epoch,
            loss: obj.total,
            gnn_loss: obj.gnn,
            llp_loss: obj.llp,
            train_acc,
            val_acc: val_acc.unwrap_or(f64::NAN),
            test_acc,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        if let (Selection::BestValidation, Some(acc)) = (config.selection, val_acc) {
            if best.as_ref().is_none_or(|(b, _, _)| acc > *b) {
                best = Some((acc, epoch, params.clone()));
            }
        }
    }
    let (params, best_epoch) = match best {
        Some((_, epoch, p)) => (p, epoch),
        None => (params, config.epochs),
    };
    Ok(TrainOutcome {
        params,
        best_epoch,
        history,
    })
}
