//! Categorical node features, node labels, node splits and feature
//! preprocessing (quantile discretization, OR-grouping of binary features).

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::{self, Purpose};

/// N×d table of 1-based category indices; column `i` takes values in `1..=domains[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoricalFeatures {
    values: Vec<u32>,
    domains: Vec<u32>,
    num_nodes: usize,
}

impl CategoricalFeatures {
    pub fn new(num_nodes: usize, domains: Vec<u32>, values: Vec<u32>) -> Result<Self> {
        let d = domains.len();
        if values.len() != num_nodes * d {
            return Err(Error::invalid(format!(
                "expected {} values for {num_nodes}x{d} table, got {}",
                num_nodes * d,
                values.len()
            )));
        }
        if let Some(g) = domains.iter().find(|&&g| g < 2) {
            return Err(Error::invalid(format!("domain size {g} < 2")));
        }
        for row in values.chunks(d.max(1)) {
            for (&x, &g) in row.iter().zip(&domains) {
                if x < 1 || x > g {
                    return Err(Error::OutOfDomain { value: x, domain: g });
                }
            }
        }
        Ok(CategoricalFeatures {
            values,
            domains,
            num_nodes,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn dim(&self) -> usize {
        self.domains.len()
    }

    pub fn domains(&self) -> &[u32] {
        &self.domains
    }

    pub fn row(&self, v: usize) -> &[u32] {
        let d = self.dim();
        &self.values[v * d..(v + 1) * d]
    }

    pub fn get(&self, v: usize, i: usize) -> u32 {
        self.values[v * self.dim() + i]
    }

    pub fn column(&self, i: usize) -> Vec<u32> {
        (0..self.num_nodes).map(|v| self.get(v, i)).collect()
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }
}

/// Class assignments for the labeled subset of nodes. Classes are 0-based;
/// `None` marks an unlabeled node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelData {
    labels: Vec<Option<u32>>,
    num_classes: usize,
}

impl LabelData {
    pub fn new(num_classes: usize, labels: Vec<Option<u32>>) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::invalid("need at least two classes"));
        }
        if let Some(c) = labels.iter().flatten().find(|&&c| c as usize >= num_classes) {
            return Err(Error::invalid(format!("class {c} >= {num_classes}")));
        }
        Ok(LabelData { labels, num_classes })
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_nodes(&self) -> usize {
        self.labels.len()
    }

    pub fn class_of(&self, v: usize) -> Option<usize> {
        self.labels[v].map(|c| c as usize)
    }

    pub fn one_hot(&self, v: usize) -> Option<Vec<f64>> {
        self.class_of(v).map(|c| one_hot(c, self.num_classes))
    }

    pub fn labeled_nodes(&self) -> Vec<usize> {
        (0..self.labels.len()).filter(|&v| self.labels[v].is_some()).collect()
    }

    pub fn raw(&self) -> &[Option<u32>] {
        &self.labels
    }
}

pub fn one_hot(class: usize, num_classes: usize) -> Vec<f64> {
    let mut y = vec![0.0; num_classes];
    y[class] = 1.0;
    y
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Train,
    Val,
    Test,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Train => "train",
            Role::Val => "val",
            Role::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Role> {
        match s {
            "train" => Some(Role::Train),
            "val" => Some(Role::Val),
            "test" => Some(Role::Test),
            _ => None,
        }
    }
}

/// Disjoint train/validation/test roles covering every node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSplit {
    roles: Vec<Role>,
}

impl NodeSplit {
    pub fn from_roles(roles: Vec<Role>) -> Self {
        NodeSplit { roles }
    }

    /// Random split with the given train and validation fractions; the rest is test.
    pub fn random(num_nodes: usize, train_frac: f64, val_frac: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&train_frac) || !(0.0..=1.0).contains(&val_frac) || train_frac + val_frac > 1.0 + 1e-12
        {
            return Err(Error::invalid(format!(
                "split fractions {train_frac}/{val_frac} are not a valid partition"
            )));
        }
        let mut order: Vec<usize> = (0..num_nodes).collect();
        order.shuffle(&mut rng::stream(seed, Purpose::Split, 0));
        let n_train = (train_frac * num_nodes as f64).round() as usize;
        let n_val = ((val_frac * num_nodes as f64).round() as usize).min(num_nodes - n_train);
        let mut roles = vec![Role::Test; num_nodes];
        for (rank, &v) in order.iter().enumerate() {
            roles[v] = if rank < n_train {
                Role::Train
            } else if rank < n_train + n_val {
                Role::Val
            } else {
                Role::Test
            };
        }
        Ok(NodeSplit { roles })
    }

    /// The 50/25/25 default.
    pub fn standard(num_nodes: usize, seed: u64) -> Self {
        Self::random(num_nodes, 0.5, 0.25, seed).expect("static fractions are valid")
    }

    pub fn role(&self, v: usize) -> Role {
        self.roles[v]
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn nodes(&self, role: Role) -> Vec<usize> {
        (0..self.roles.len()).filter(|&v| self.roles[v] == role).collect()
    }
}

/// Maps a numeric column to bins `1..=bins` by empirical quantile edges.
///
/// Edge `k` (for `k` in `1..bins`) is the smallest observed value whose
/// empirical CDF reaches `k/bins`; a value lands in bin `1 + #{edges < value}`,
/// so values equal to an edge fall into the lower bin. A constant column maps
/// entirely to bin 1. The returned domain size is always `bins`.
pub fn quantile_discretize(column: &[f64], bins: u32) -> Result<(Vec<u32>, u32)> {
    if bins < 2 {
        return Err(Error::invalid(format!("bins must be >= 2, got {bins}")));
    }
    if column.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("non-finite value in column"));
    }
    if column.is_empty() {
        return Ok((Vec::new(), bins));
    }
    let mut sorted = column.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len();
    let b = bins as usize;
    let edges: Vec<f64> = (1..b)
        .map(|k| {
            let rank = (k * n).div_ceil(b);
            sorted[rank.max(1) - 1]
        })
        .collect();
    let out = column
        .iter()
        .map(|&x| 1 + edges.iter().filter(|&&e| e < x).count() as u32)
        .collect();
    Ok((out, bins))
}

/// Combines consecutive groups of `group_size` binary columns with logical OR.
///
/// Binary columns encode bit 0 as category 1 and bit 1 as category 2. When
/// `d` is not a multiple of `group_size` the trailing group is smaller.
pub fn group_or_reduce(features: &CategoricalFeatures, group_size: usize) -> Result<CategoricalFeatures> {
    if group_size == 0 {
        return Err(Error::invalid("group size must be positive"));
    }
    if let Some(i) = features.domains().iter().position(|&g| g != 2) {
        return Err(Error::invalid(format!(
            "column {i} has domain {} but OR-grouping needs binary columns",
            features.domains()[i]
        )));
    }
    let d = features.dim();
    if !d.is_multiple_of(group_size) {
        log::warn!(
            "feature count {d} is not a multiple of group size {group_size}; last group has {} columns",
            d % group_size
        );
    }
    let groups = d.div_ceil(group_size);
    let n = features.num_nodes();
    let mut values = Vec::with_capacity(n * groups);
    for v in 0..n {
        for chunk in features.row(v).chunks(group_size) {
            values.push(if chunk.contains(&2) { 2 } else { 1 });
        }
    }
    CategoricalFeatures::new(n, vec![2; groups], values)
}

/// Fraction of entries equal to category 1 (bit 0) in a binary table.
pub fn sparsity(features: &CategoricalFeatures) -> f64 {
    let total = features.values().len();
    if total == 0 {
        return 0.0;
    }
    features.values().iter().filter(|&&x| x == 1).count() as f64 / total as f64
}
