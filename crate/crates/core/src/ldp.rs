//! Client-side randomizers and privacy-budget accounting.
//!
//! Features are randomized with GRR-FS: each node samples `m` of its `d`
//! coordinates uniformly at random, passes the sampled ones through
//! generalized randomized response (GRR) with budget `eps_x`, and replaces the
//! rest with uniform noise. Labels pass through plain GRR with budget `eps_y`.

use std::fmt;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::features::{CategoricalFeatures, LabelData};
use crate::rng::{self, Purpose};

/// A per-report privacy budget. `Unbounded` disables randomization of the
/// reported value (the channel becomes the identity).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Budget {
    Finite(f64),
    Unbounded,
}

impl Budget {
    pub fn finite(eps: f64) -> Result<Self> {
        if eps.is_finite() && eps > 0.0 {
            Ok(Budget::Finite(eps))
        } else {
            Err(Error::invalid(format!(
                "privacy budget must be positive and finite, got {eps}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Budget::Finite(e) => e,
            Budget::Unbounded => f64::INFINITY,
        }
    }

    fn check(self) -> Result<Self> {
        match self {
            Budget::Finite(e) => Budget::finite(e),
            Budget::Unbounded => Ok(self),
        }
    }
}

impl fmt::Display for Budget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Budget::Finite(e) => write!(f, "{e}"),
            Budget::Unbounded => f.write_str("inf"),
        }
    }
}

impl std::str::FromStr for Budget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inf" | "infinity" | "none" => Ok(Budget::Unbounded),
            _ => {
                let e: f64 = s
                    .parse()
                    .map_err(|_| Error::invalid(format!("cannot parse budget {s:?}")))?;
                Budget::finite(e)
            }
        }
    }
}

impl Serialize for Budget {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Budget::Finite(e) => s.serialize_f64(*e),
            Budget::Unbounded => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Budget {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        let parsed = match Raw::deserialize(d)? {
            Raw::Num(e) => Budget::finite(e),
            Raw::Str(s) => s.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

/// The symmetric GRR channel over `size` categories: diagonal `p`,
/// off-diagonal `q`, with `p = e^eps q` and `p + (size-1) q = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionMatrix {
    size: usize,
    p: f64,
    q: f64,
}

impl TransitionMatrix {
    pub fn new(size: usize, budget: Budget) -> Result<Self> {
        if size < 2 {
            return Err(Error::invalid(format!("domain size {size} < 2")));
        }
        let (p, q) = match budget.check()? {
            Budget::Finite(eps) => {
                let denom = eps.exp() + size as f64 - 1.0;
                (eps.exp() / denom, 1.0 / denom)
            }
            Budget::Unbounded => (1.0, 0.0),
        };
        Ok(TransitionMatrix { size, p, q })
    }

    /// Builds the channel directly from its two probabilities.
    pub fn from_probabilities(size: usize, p: f64, q: f64) -> Result<Self> {
        if size < 2 || !(p > q) || q < 0.0 || (p + (size as f64 - 1.0) * q - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "({p}, {q}) is not a valid symmetric channel over {size} categories"
            )));
        }
        Ok(TransitionMatrix { size, p, q })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// `Pr[report = out | true = inp]`, both 1-based.
    pub fn prob(&self, out: u32, inp: u32) -> f64 {
        if out == inp {
            self.p
        } else {
            self.q
        }
    }

    /// Coefficients `(a, b)` of the closed-form inverse `a I + b 11^T`.
    pub fn inverse_coefficients(&self) -> (f64, f64) {
        let diff = self.p - self.q;
        let a = 1.0 / diff;
        let b = -self.q / (diff * (self.p + (self.size as f64 - 1.0) * self.q));
        (a, b)
    }

    pub fn apply_inverse(&self, v: &[f64]) -> Vec<f64> {
        let (a, b) = self.inverse_coefficients();
        let shift = b * v.iter().sum::<f64>();
        v.iter().map(|&x| a * x + shift).collect()
    }
}

/// Generalized randomized response on a single 1-based category.
pub fn grr_perturb<R: Rng + ?Sized>(value: u32, domain: u32, budget: Budget, rng: &mut R) -> Result<u32> {
    if value < 1 || value > domain {
        return Err(Error::OutOfDomain { value, domain });
    }
    let channel = TransitionMatrix::new(domain as usize, budget)?;
    Ok(grr_with(&channel, value, rng))
}

fn grr_with<R: Rng + ?Sized>(channel: &TransitionMatrix, value: u32, rng: &mut R) -> u32 {
    if channel.q == 0.0 || rng.random::<f64>() < channel.p {
        return value;
    }
    let k = rng.random_range(1..channel.size as u32);
    if k >= value {
        k + 1
    } else {
        k
    }
}

/// GRR with feature sampling applied to one node's feature vector.
pub fn grr_fs_perturb<R: Rng + ?Sized>(
    x: &[u32],
    domains: &[u32],
    m: usize,
    eps_x: Budget,
    rng: &mut R,
) -> Result<Vec<u32>> {
    let d = x.len();
    if domains.len() != d {
        return Err(Error::invalid("feature vector and domain list differ in length"));
    }
    if m < 1 || m > d {
        return Err(Error::invalid(format!("sample count m={m} outside 1..={d}")));
    }
    let channels = domains
        .iter()
        .map(|&g| TransitionMatrix::new(g as usize, eps_x))
        .collect::<Result<Vec<_>>>()?;
    for (&v, &g) in x.iter().zip(domains) {
        if v < 1 || v > g {
            return Err(Error::OutOfDomain { value: v, domain: g });
        }
    }
    Ok(grr_fs_with(x, domains, &channels, m, rng))
}

fn grr_fs_with<R: Rng + ?Sized>(
    x: &[u32],
    domains: &[u32],
    channels: &[TransitionMatrix],
    m: usize,
    rng: &mut R,
) -> Vec<u32> {
    let d = x.len();
    let mut sampled = vec![false; d];
    for i in index::sample(rng, d, m) {
        sampled[i] = true;
    }
    (0..d)
        .map(|i| {
            if sampled[i] {
                grr_with(&channels[i], x[i], rng)
            } else {
                rng.random_range(1..=domains[i])
            }
        })
        .collect()
}

/// Randomizes a one-hot label vector through GRR over `c` classes.
pub fn label_perturb<R: Rng + ?Sized>(y: &[f64], eps_y: Budget, rng: &mut R) -> Result<Vec<f64>> {
    let c = y.len();
    let hot: Vec<usize> = (0..c).filter(|&j| y[j] != 0.0).collect();
    if hot.len() != 1 || y[hot[0]] != 1.0 {
        return Err(Error::invalid("label vector is not one-hot"));
    }
    let out = grr_perturb(hot[0] as u32 + 1, c as u32, eps_y, rng)?;
    Ok(crate::features::one_hot(out as usize - 1, c))
}

/// Total feature budget of GRR-FS after amplification by sampling `m` of `d`
/// coordinates: `ln(1 + (m/d)(e^{m eps_x} - 1))`.
pub fn amplified_budget(eps_x: f64, m: usize, d: usize) -> Result<f64> {
    if !(eps_x > 0.0) {
        return Err(Error::invalid(format!("eps_x must be positive, got {eps_x}")));
    }
    if m < 1 || m > d {
        return Err(Error::invalid(format!("sample count m={m} outside 1..={d}")));
    }
    let rate = m as f64 / d as f64;
    Ok((rate * (m as f64 * eps_x).exp_m1()).ln_1p())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub eps_x: Budget,
    pub m: usize,
    pub d: usize,
    /// Amplified feature budget.
    #[serde(with = "eps_value")]
    pub eps_features: f64,
    pub eps_y: Budget,
    #[serde(with = "eps_value")]
    pub eps_total: f64,
}

/// Budgets as numbers, with `"inf"` for the unbounded case.
mod eps_value {
    use super::Budget;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(eps: &f64, s: S) -> Result<S::Ok, S::Error> {
        if eps.is_finite() {
            s.serialize_f64(*eps)
        } else {
            Budget::Unbounded.serialize(s)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Budget::deserialize(d)?.value())
    }
}

impl BudgetReport {
    pub fn new(eps_x: Budget, m: usize, d: usize, eps_y: Budget) -> Result<Self> {
        let eps_features = match eps_x {
            Budget::Finite(e) => amplified_budget(e, m, d)?,
            Budget::Unbounded => f64::INFINITY,
        };
        Ok(BudgetReport {
            eps_x,
            m,
            d,
            eps_features,
            eps_y,
            eps_total: eps_features + eps_y.value(),
        })
    }
}

impl fmt::Display for BudgetReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "eps_x={} m={} d={} -> eps_X={:.4}; eps_y={}; total={:.4}",
            self.eps_x, self.m, self.d, self.eps_features, self.eps_y, self.eps_total
        )
    }
}

/// Parameters recorded alongside perturbed data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbMeta {
    pub eps_x: Budget,
    pub eps_y: Budget,
    pub m: usize,
    pub seed: u64,
    pub domains: Vec<u32>,
    pub num_classes: usize,
}

/// Randomized feature reports: the only feature table server-side code accepts.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedFeatures {
    table: CategoricalFeatures,
    eps_x: Budget,
    m: usize,
}

impl PerturbedFeatures {
    /// Wraps reports received from clients (e.g. loaded from disk).
    pub fn from_reports(table: CategoricalFeatures, eps_x: Budget, m: usize) -> Result<Self> {
        if m < 1 || m > table.dim() {
            return Err(Error::invalid(format!(
                "sample count m={m} outside 1..={}",
                table.dim()
            )));
        }
        Ok(PerturbedFeatures {
            table,
            eps_x: eps_x.check()?,
            m,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.table.num_nodes()
    }

    pub fn dim(&self) -> usize {
        self.table.dim()
    }

    pub fn domains(&self) -> &[u32] {
        self.table.domains()
    }

    pub fn get(&self, v: usize, i: usize) -> u32 {
        self.table.get(v, i)
    }

    pub fn row(&self, v: usize) -> &[u32] {
        self.table.row(v)
    }

    pub fn eps_x(&self) -> Budget {
        self.eps_x
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn table(&self) -> &CategoricalFeatures {
        &self.table
    }
}

/// Randomized one-hot labels for the labeled node subset.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedLabels {
    labels: LabelData,
    eps_y: Budget,
}

impl PerturbedLabels {
    pub fn from_reports(labels: LabelData, eps_y: Budget) -> Result<Self> {
        Ok(PerturbedLabels {
            labels,
            eps_y: eps_y.check()?,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.labels.num_classes()
    }

    pub fn num_nodes(&self) -> usize {
        self.labels.num_nodes()
    }

    pub fn class_of(&self, v: usize) -> Option<usize> {
        self.labels.class_of(v)
    }

    pub fn one_hot(&self, v: usize) -> Option<Vec<f64>> {
        self.labels.one_hot(v)
    }

    pub fn labeled_nodes(&self) -> Vec<usize> {
        self.labels.labeled_nodes()
    }

    pub fn eps_y(&self) -> Budget {
        self.eps_y
    }

    pub fn channel(&self) -> Result<TransitionMatrix> {
        TransitionMatrix::new(self.num_classes(), self.eps_y)
    }

    pub fn data(&self) -> &LabelData {
        &self.labels
    }
}

/// Runs GRR-FS on every node; node `v` draws from its own stream derived from
/// `(seed, v)`.
pub fn perturb_features(
    features: &CategoricalFeatures,
    m: usize,
    eps_x: Budget,
    seed: u64,
) -> Result<PerturbedFeatures> {
    let d = features.dim();
    if m < 1 || m > d {
        return Err(Error::invalid(format!("sample count m={m} outside 1..={d}")));
    }
    let channels = features
        .domains()
        .iter()
        .map(|&g| TransitionMatrix::new(g as usize, eps_x))
        .collect::<Result<Vec<_>>>()?;
    let mut values = Vec::with_capacity(features.values().len());
    for v in 0..features.num_nodes() {
        let mut rng = rng::stream(seed, Purpose::FeaturePerturb, v as u64);
        values.extend(grr_fs_with(features.row(v), features.domains(), &channels, m, &mut rng));
    }
    let table = CategoricalFeatures::new(features.num_nodes(), features.domains().to_vec(), values)?;
    PerturbedFeatures::from_reports(table, eps_x, m)
}

pub fn perturb_labels(labels: &LabelData, eps_y: Budget, seed: u64) -> Result<PerturbedLabels> {
    let channel = TransitionMatrix::new(labels.num_classes(), eps_y)?;
    let out = (0..labels.num_nodes())
        .map(|v| {
            labels.class_of(v).map(|c| {
                let mut rng = rng::stream(seed, Purpose::LabelPerturb, v as u64);
                grr_with(&channel, c as u32 + 1, &mut rng) - 1
            })
        })
        .collect();
    PerturbedLabels::from_reports(LabelData::new(labels.num_classes(), out)?, eps_y)
}
