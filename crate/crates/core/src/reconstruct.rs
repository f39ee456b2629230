//! Server-side denoising: multi-hop mean propagation followed by frequency
//! estimation, for node features, node labels and cluster label proportions.
//!
//! Everything here consumes only the public graph and the randomized reports
//! ([`PerturbedFeatures`], [`PerturbedLabels`]).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{CategoricalFeatures, LabelData};
use crate::freq::{argmax, grr_fs_point};
use crate::graph::Graph;
use crate::ldp::{PerturbedFeatures, PerturbedLabels, TransitionMatrix};

/// Lower clamp applied by [`simplex_project`].
pub const SIMPLEX_FLOOR: f64 = 1e-8;

/// Row-major per-node vectors after `hops` rounds of mean propagation.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagatedSignal {
    pub values: Vec<f64>,
    pub width: usize,
    pub hops: usize,
}

impl PropagatedSignal {
    pub fn row(&self, v: usize) -> &[f64] {
        &self.values[v * self.width..(v + 1) * self.width]
    }
}

/// `hops` synchronous rounds of `x_v <- mean({x_v} ∪ {x_u : u ∈ N(v)})`.
///
/// `signals` holds one row of `width` entries per node.
pub fn propagate_mean(graph: &Graph, signals: &[f64], width: usize, hops: usize) -> PropagatedSignal {
    let n = graph.num_nodes();
    assert_eq!(signals.len(), n * width, "one signal row per node");
    let mut cur = signals.to_vec();
    if width == 0 {
        return PropagatedSignal {
            values: cur,
            width,
            hops,
        };
    }
    let mut next = vec![0.0; cur.len()];
    for _ in 0..hops {
        next.par_chunks_mut(width).enumerate().for_each(|(v, out)| {
            out.copy_from_slice(&cur[v * width..(v + 1) * width]);
            let nbrs = graph.neighbors(v);
            for &u in nbrs {
                let u = u as usize;
                for (o, &x) in out.iter_mut().zip(&cur[u * width..(u + 1) * width]) {
                    *o += x;
                }
            }
            let inv = 1.0 / (nbrs.len() + 1) as f64;
            out.iter_mut().for_each(|o| *o *= inv);
        });
        std::mem::swap(&mut cur, &mut next);
    }
    PropagatedSignal {
        values: cur,
        width,
        hops,
    }
}

/// How reconstructed features are emitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureMode {
    /// Most probable category per node and column.
    #[default]
    Argmax,
    /// Binary columns only: the clipped estimated probability of category 2.
    BinaryProb,
    /// Binary columns only: the clipped estimated probability of category 1.
    BinaryProbFirst,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReconstructedFeatures {
    Categorical(CategoricalFeatures),
    Probabilities {
        num_nodes: usize,
        dim: usize,
        values: Vec<f64>,
    },
}

impl ReconstructedFeatures {
    /// Uses the randomized reports unchanged (no reconstruction).
    pub fn passthrough(perturbed: &PerturbedFeatures) -> Self {
        ReconstructedFeatures::Categorical(perturbed.table().clone())
    }

    pub fn num_nodes(&self) -> usize {
        match self {
            ReconstructedFeatures::Categorical(t) => t.num_nodes(),
            ReconstructedFeatures::Probabilities { num_nodes, .. } => *num_nodes,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ReconstructedFeatures::Categorical(t) => t.dim(),
            ReconstructedFeatures::Probabilities { dim, .. } => *dim,
        }
    }
}

/// Reconstructs every node's features from neighborhood-level frequency
/// estimates over `hops`-hop mean-propagated one-hot reports.
pub fn reconstruct_features(
    graph: &Graph,
    perturbed: &PerturbedFeatures,
    hops: usize,
    mode: FeatureMode,
) -> Result<ReconstructedFeatures> {
    let n = perturbed.num_nodes();
    if graph.num_nodes() != n {
        return Err(Error::invalid(format!(
            "graph has {} nodes but reports cover {n}",
            graph.num_nodes()
        )));
    }
    let d = perturbed.dim();
    let m = perturbed.m();
    let binary = mode != FeatureMode::Argmax;
    if binary {
        if let Some(i) = perturbed.domains().iter().position(|&g| g != 2) {
            return Err(Error::invalid(format!(
                "binary-probability mode needs binary columns; column {i} has domain {}",
                perturbed.domains()[i]
            )));
        }
    }

    let columns: Vec<Result<Vec<f64>>> = (0..d)
        .into_par_iter()
        .map(|i| {
            let g = perturbed.domains()[i] as usize;
            let channel = TransitionMatrix::new(g, perturbed.eps_x())?;
            let mut onehot = vec![0.0; n * g];
            for v in 0..n {
                onehot[v * g + perturbed.get(v, i) as usize - 1] = 1.0;
            }
            let prop = propagate_mean(graph, &onehot, g, hops);
            let out = (0..n)
                .map(|v| {
                    let est: Vec<f64> = prop.row(v).iter().map(|&l| grr_fs_point(l, d, m, &channel)).collect();
                    match mode {
                        FeatureMode::Argmax => (argmax(&est) + 1) as f64,
                        FeatureMode::BinaryProb => est[1].clamp(0.0, 1.0),
                        FeatureMode::BinaryProbFirst => est[0].clamp(0.0, 1.0),
                    }
                })
                .collect();
            Ok(out)
        })
        .collect();
    let columns = columns.into_iter().collect::<Result<Vec<_>>>()?;

    let mut values = Vec::with_capacity(n * d);
    for v in 0..n {
        values.extend(columns.iter().map(|col| col[v]));
    }
    if binary {
        Ok(ReconstructedFeatures::Probabilities {
            num_nodes: n,
            dim: d,
            values,
        })
    } else {
        let cats = values.into_iter().map(|x| x as u32).collect();
        Ok(ReconstructedFeatures::Categorical(CategoricalFeatures::new(
            n,
            perturbed.domains().to_vec(),
            cats,
        )?))
    }
}

/// Denoised one-hot labels for the labeled node subset.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructedLabels {
    labels: LabelData,
}

impl ReconstructedLabels {
    pub fn passthrough(perturbed: &PerturbedLabels) -> Self {
        ReconstructedLabels {
            labels: perturbed.data().clone(),
        }
    }

    pub fn class_of(&self, v: usize) -> Option<usize> {
        self.labels.class_of(v)
    }

    pub fn one_hot(&self, v: usize) -> Option<Vec<f64>> {
        self.labels.one_hot(v)
    }

    pub fn num_classes(&self) -> usize {
        self.labels.num_classes()
    }

    pub fn labeled_nodes(&self) -> Vec<usize> {
        self.labels.labeled_nodes()
    }

    pub fn data(&self) -> &LabelData {
        &self.labels
    }
}

/// Masked propagation of perturbed labels (unlabeled nodes contribute zero
/// vectors), then `P^{-1}` and argmax for every labeled node.
pub fn reconstruct_labels(graph: &Graph, perturbed: &PerturbedLabels, hops: usize) -> Result<ReconstructedLabels> {
    let n = perturbed.num_nodes();
    if graph.num_nodes() != n {
        return Err(Error::invalid(format!(
            "graph has {} nodes but reports cover {n}",
            graph.num_nodes()
        )));
    }
    let c = perturbed.num_classes();
    let channel = perturbed.channel()?;
    let mut init = vec![0.0; n * c];
    for v in perturbed.labeled_nodes() {
        init[v * c + perturbed.class_of(v).expect("labeled")] = 1.0;
    }
    let prop = propagate_mean(graph, &init, c, hops);
    let out = (0..n)
        .map(|v| {
            perturbed.class_of(v).map(|_| {
                let row = prop.row(v);
                let mass: f64 = row.iter().sum();
                let normalized: Vec<f64> = if mass > 0.0 {
                    row.iter().map(|x| x / mass).collect()
                } else {
                    row.to_vec()
                };
                argmax(&channel.apply_inverse(&normalized)) as u32
            })
        })
        .collect();
    Ok(ReconstructedLabels {
        labels: LabelData::new(c, out)?,
    })
}

/// Clamps entries to at least [`SIMPLEX_FLOOR`] and renormalizes to unit sum.
/// Non-finite entries are rejected.
pub fn simplex_project(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("simplex projection needs finite entries"));
    }
    let clamped: Vec<f64> = v.iter().map(|&x| x.max(SIMPLEX_FLOOR)).collect();
    let total: f64 = clamped.iter().sum();
    Ok(clamped.into_iter().map(|x| x / total).collect())
}

/// Observed and reconstructed label proportions per cluster.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BagProportions {
    pub observed: Vec<Vec<f64>>,
    pub reconstructed: Vec<Vec<f64>>,
    /// Labeled members per cluster; clusters with zero count are excluded
    /// from the proportion loss.
    pub counts: Vec<usize>,
    #[serde(skip)]
    pub members: Vec<Vec<usize>>,
}

impl BagProportions {
    pub fn num_bags(&self) -> usize {
        self.counts.len()
    }

    pub fn is_included(&self, r: usize) -> bool {
        self.counts[r] > 0
    }

    pub fn num_included(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }
}

/// Mean perturbed one-hot label over the labeled members of each cluster,
/// mapped through `P^{-1}` and projected onto the simplex.
///
/// Only nodes listed in `members` contribute (e.g. the labeled training
/// nodes); unlabeled entries are skipped.
pub fn reconstruct_bag_proportions(
    perturbed: &PerturbedLabels,
    assignment: &[usize],
    num_clusters: usize,
    members: &[usize],
) -> Result<BagProportions> {
    let c = perturbed.num_classes();
    let channel = perturbed.channel()?;
    let mut sums = vec![vec![0.0; c]; num_clusters];
    let mut counts = vec![0usize; num_clusters];
    let mut bag_members = vec![Vec::new(); num_clusters];
    for &v in members {
        if let Some(y) = perturbed.class_of(v) {
            let r = *assignment
                .get(v)
                .ok_or_else(|| Error::invalid(format!("node {v} has no cluster")))?;
            if r >= num_clusters {
                return Err(Error::invalid(format!("cluster id {r} >= {num_clusters}")));
            }
            sums[r][y] += 1.0;
            counts[r] += 1;
            bag_members[r].push(v);
        }
    }
    let mut observed = Vec::with_capacity(num_clusters);
    let mut reconstructed = Vec::with_capacity(num_clusters);
    for (sum, &count) in sums.into_iter().zip(&counts) {
        if count == 0 {
            observed.push(vec![0.0; c]);
            reconstructed.push(vec![1.0 / c as f64; c]);
            continue;
        }
        let b: Vec<f64> = sum.iter().map(|x| x / count as f64).collect();
        reconstructed.push(simplex_project(&channel.apply_inverse(&b))?);
        observed.push(b);
    }
    Ok(BagProportions {
        observed,
        reconstructed,
        counts,
        members: bag_members,
    })
}

/// Per-column fraction of nodes whose reconstructed category differs from
/// the reported one.
pub fn feature_disagreement(perturbed: &PerturbedFeatures, reconstructed: &CategoricalFeatures) -> Vec<f64> {
    let n = perturbed.num_nodes().max(1) as f64;
    (0..perturbed.dim())
        .map(|i| {
            (0..perturbed.num_nodes())
                .filter(|&v| perturbed.get(v, i) != reconstructed.get(v, i))
                .count() as f64
                / n
        })
        .collect()
}
