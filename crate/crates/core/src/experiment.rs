//! End-to-end pipeline: perturb → partition → reconstruct → train → evaluate,
//! swept over a grid of privacy budgets and hyperparameters.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::partition;
use crate::error::{Error, Result};
use crate::features::{group_or_reduce, CategoricalFeatures, LabelData, NodeSplit, Role};
use crate::gnn::{encode_input, evaluate, train, TrainConfig, TrainInputs};
use crate::graph::{load_edge_list, Graph};
use crate::io;
use crate::ldp::{perturb_features, perturb_labels, Budget, BudgetReport};
use crate::reconstruct::{
    reconstruct_bag_proportions, reconstruct_features, reconstruct_labels, ReconstructedFeatures, ReconstructedLabels,
};
use crate::rng::derive_seed;
use crate::synth::{synth_homophily_graph, SynthConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Feature and label reconstruction plus the proportion loss.
    Rgnn,
    /// Trains on the randomized features as reported.
    NoFx,
    /// Trains on the randomized labels as reported.
    NoFy,
    /// Proportion loss disabled.
    NoLlp,
    /// Randomized features and labels, no reconstruction, no proportion loss.
    NoisyBaseline,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Rgnn,
        Variant::NoFx,
        Variant::NoFy,
        Variant::NoLlp,
        Variant::NoisyBaseline,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Rgnn => "rgnn",
            Variant::NoFx => "no-fx",
            Variant::NoFy => "no-fy",
            Variant::NoLlp => "no-llp",
            Variant::NoisyBaseline => "noisy-baseline",
        }
    }

    fn reconstructs_features(self) -> bool {
        matches!(self, Variant::Rgnn | Variant::NoFy | Variant::NoLlp)
    }

    fn reconstructs_labels(self) -> bool {
        matches!(self, Variant::Rgnn | Variant::NoFx | Variant::NoLlp)
    }

    fn uses_llp(self) -> bool {
        matches!(self, Variant::Rgnn | Variant::NoFx | Variant::NoFy)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum DataSource {
    Synth(SynthConfig),
    Files {
        edges: PathBuf,
        features: PathBuf,
        labels: PathBuf,
    },
    /// Planetoid-style `<name>.content` / `<name>.cites`, optionally OR-grouped.
    Citation {
        dir: PathBuf,
        name: String,
        #[serde(default)]
        group_size: Option<usize>,
    },
}

/// Lists of values to sweep; an empty list means "use the base config value".
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grid {
    pub eps_x: Vec<Budget>,
    pub eps_y: Vec<Budget>,
    pub k_x: Vec<usize>,
    pub k_y: Vec<usize>,
    pub clusters: Vec<usize>,
    pub alpha: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub train: TrainConfig,
    pub grid: Grid,
    pub variants: Vec<Variant>,
    pub repeats: usize,
    pub seed: u64,
    pub train_frac: f64,
    pub val_frac: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            data: DataSource::Synth(SynthConfig::default()),
            train: TrainConfig::default(),
            grid: Grid::default(),
            variants: vec![Variant::Rgnn],
            repeats: 5,
            seed: 0,
            train_frac: 0.5,
            val_frac: 0.25,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.repeats < 1 {
            return Err(Error::invalid("repeats must be >= 1"));
        }
        if self.variants.is_empty() {
            return Err(Error::invalid("no variants selected"));
        }
        self.train.validate()
    }

    pub fn grid_points(&self) -> Vec<GridPoint> {
        fn or<T: Clone>(v: &[T], base: T) -> Vec<T> {
            if v.is_empty() {
                vec![base]
            } else {
                v.to_vec()
            }
        }
        let t = &self.train;
        let g = &self.grid;
        let mut out = Vec::new();
        for &eps_x in &or(&g.eps_x, t.eps_x) {
            for &eps_y in &or(&g.eps_y, t.eps_y) {
                for &k_x in &or(&g.k_x, t.k_x) {
                    for &k_y in &or(&g.k_y, t.k_y) {
                        for &clusters in &or(&g.clusters, t.clusters) {
                            for &alpha in &or(&g.alpha, t.alpha) {
                                out.push(GridPoint {
                                    eps_x,
                                    eps_y,
                                    k_x,
                                    k_y,
                                    clusters,
                                    alpha,
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub eps_x: Budget,
    pub eps_y: Budget,
    pub k_x: usize,
    pub k_y: usize,
    pub clusters: usize,
    pub alpha: f64,
}

impl GridPoint {
    pub fn apply(&self, base: &TrainConfig) -> TrainConfig {
        TrainConfig {
            eps_x: self.eps_x,
            eps_y: self.eps_y,
            k_x: self.k_x,
            k_y: self.k_y,
            clusters: self.clusters,
            alpha: self.alpha,
            ..base.clone()
        }
    }
}

/// Private inputs held by the simulated clients plus evaluation ground truth.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub graph: Graph,
    pub features: CategoricalFeatures,
    /// Labels the clients hold (and may report).
    pub labels: LabelData,
    /// Ground truth used only for evaluation.
    pub truth: LabelData,
}

impl Dataset {
    pub fn load(source: &DataSource) -> Result<Self> {
        match source {
            DataSource::Synth(cfg) => {
                let data = synth_homophily_graph(cfg)?;
                let truth = LabelData::new(
                    cfg.num_classes,
                    data.communities.iter().map(|&c| Some(c as u32)).collect(),
                )?;
                Ok(Dataset {
                    graph: data.graph,
                    features: data.features,
                    labels: data.labels,
                    truth,
                })
            }
            DataSource::Files {
                edges,
                features,
                labels,
            } => {
                let features = io::read_features(features, None)?;
                let graph = load_edge_list(edges, Some(features.num_nodes()))?;
                let labels = io::read_labels(labels, features.num_nodes(), None)?;
                Ok(Dataset {
                    graph,
                    features,
                    truth: labels.clone(),
                    labels,
                })
            }
            DataSource::Citation { dir, name, group_size } => {
                let ds = io::load_citation_dataset(dir, name)?;
                let features = match group_size {
                    Some(g) => group_or_reduce(&ds.features, *g)?,
                    None => ds.features,
                };
                Ok(Dataset {
                    graph: ds.graph,
                    features,
                    truth: ds.labels.clone(),
                    labels: ds.labels,
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub variant: Variant,
    pub eps_x: Budget,
    pub eps_y: Budget,
    pub k_x: usize,
    pub k_y: usize,
    pub clusters: usize,
    pub alpha: f64,
    pub repeat: usize,
    pub seed: u64,
    /// Amplified feature budget.
    pub eps_features: Budget,
    pub eps_total: Budget,
    pub test_acc: Option<f64>,
    pub val_acc: Option<f64>,
    pub best_epoch: Option<usize>,
    pub final_loss: Option<f64>,
    pub error: Option<String>,
}

/// Everything the server trains on for one run.
pub struct PreparedRun {
    pub split: NodeSplit,
    pub features: ReconstructedFeatures,
    pub labels: ReconstructedLabels,
    pub bags: crate::reconstruct::BagProportions,
    pub train_nodes: Vec<usize>,
    pub val_nodes: Vec<usize>,
    pub config: TrainConfig,
}

/// Client randomization plus server-side reconstruction for one variant.
pub fn prepare_run(data: &Dataset, config: &TrainConfig, variant: Variant, split: NodeSplit) -> Result<PreparedRun> {
    let seed = config.seed;
    // clients in the test split never report labels
    let reported: Vec<Option<u32>> = (0..data.labels.num_nodes())
        .map(|v| match split.role(v) {
            Role::Test => None,
            _ => data.labels.raw()[v],
        })
        .collect();
    let reported = LabelData::new(data.labels.num_classes(), reported)?;

    let perturbed_x = perturb_features(&data.features, config.m, config.eps_x, seed)?;
    let perturbed_y = perturb_labels(&reported, config.eps_y, seed)?;
    let clusters = partition(&data.graph, config.clusters, seed)?;

    let features = if variant.reconstructs_features() {
        reconstruct_features(&data.graph, &perturbed_x, config.k_x, config.feature_mode)?
    } else {
        ReconstructedFeatures::passthrough(&perturbed_x)
    };
    let labels = if variant.reconstructs_labels() {
        reconstruct_labels(&data.graph, &perturbed_y, config.k_y)?
    } else {
        ReconstructedLabels::passthrough(&perturbed_y)
    };
    let train_nodes: Vec<usize> = split
        .nodes(Role::Train)
        .into_iter()
        .filter(|&v| perturbed_y.class_of(v).is_some())
        .collect();
    let val_nodes: Vec<usize> = split
        .nodes(Role::Val)
        .into_iter()
        .filter(|&v| perturbed_y.class_of(v).is_some())
        .collect();
    let bags = reconstruct_bag_proportions(&perturbed_y, &clusters.cluster, clusters.num_clusters, &train_nodes)?;
    let mut config = config.clone();
    if !variant.uses_llp() {
        config.alpha = 0.0;
    }
    Ok(PreparedRun {
        split,
        features,
        labels,
        bags,
        train_nodes,
        val_nodes,
        config,
    })
}

/// Test accuracy of one variant at one configuration.
pub fn run_once(
    data: &Dataset,
    config: &TrainConfig,
    variant: Variant,
    split: NodeSplit,
) -> Result<(f64, crate::gnn::TrainOutcome)> {
    let prep = prepare_run(data, config, variant, split)?;
    let inputs = TrainInputs {
        graph: &data.graph,
        features: &prep.features,
        labels: &prep.labels,
        train_nodes: &prep.train_nodes,
        val_nodes: &prep.val_nodes,
        val_labels: &prep.labels,
        bags: Some(&prep.bags),
    };
    let outcome = train(&prep.config, inputs, None)?;
    let x = encode_input(&prep.features)?;
    let test = prep.split.nodes(Role::Test);
    let acc = evaluate(&outcome.params, &data.graph, &x, &data.truth, &test)?;
    Ok((acc, outcome))
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub records: Vec<RunRecord>,
    pub budgets: Vec<(GridPoint, BudgetReport)>,
}

/// Runs every grid point × repeat × variant. Runs are independent; with
/// `threads > 1` they execute concurrently but records keep their sweep order.
pub fn run_pipeline(config: &ExperimentConfig, data: &Dataset, threads: usize) -> Result<SweepResult> {
    config.validate()?;
    let d = data.features.dim();
    let points = config.grid_points();
    let mut budgets = Vec::with_capacity(points.len());
    for gp in &points {
        let report = BudgetReport::new(gp.eps_x, config.train.m, d, gp.eps_y)?;
        log::info!("grid point {gp:?}: {report}");
        budgets.push((*gp, report));
    }

    let mut jobs = Vec::new();
    for (gi, gp) in points.iter().enumerate() {
        for repeat in 0..config.repeats {
            for &variant in &config.variants {
                jobs.push((gi, *gp, repeat, variant));
            }
        }
    }
    let run_job = |&(gi, gp, repeat, variant): &(usize, GridPoint, usize, Variant)| {
        let seed = derive_seed(config.seed, &[gi as u64, repeat as u64]);
        let mut tc = gp.apply(&config.train);
        tc.seed = seed;
        let budget = &budgets[gi].1;
        let result = NodeSplit::random(data.graph.num_nodes(), config.train_frac, config.val_frac, seed)
            .and_then(|split| run_once(data, &tc, variant, split));
        let mut record = RunRecord {
            variant,
            eps_x: gp.eps_x,
            eps_y: gp.eps_y,
            k_x: gp.k_x,
            k_y: gp.k_y,
            clusters: gp.clusters,
            alpha: gp.alpha,
            repeat,
            seed,
            eps_features: as_budget(budget.eps_features),
            eps_total: as_budget(budget.eps_total),
            test_acc: None,
            val_acc: None,
            best_epoch: None,
            final_loss: None,
            error: None,
        };
        match result {
            Ok((acc, outcome)) => {
                record.test_acc = Some(acc);
                record.best_epoch = Some(outcome.best_epoch);
                record.val_acc = outcome
                    .history
                    .get(outcome.best_epoch - 1)
                    .map(|m| m.val_acc)
                    .filter(|a| a.is_finite());
                record.final_loss = outcome.history.last().map(|m| m.loss);
            }
            Err(e) => {
                log::warn!("run {variant:?} grid {gi} repeat {repeat} failed: {e}");
                record.error = Some(e.to_string());
            }
        }
        record
    };

    let records = if threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::invalid(e.to_string()))?;
        pool.install(|| jobs.par_iter().map(run_job).collect())
    } else {
        jobs.iter().map(run_job).collect()
    };
    Ok(SweepResult { records, budgets })
}

fn as_budget(eps: f64) -> Budget {
    if eps.is_finite() {
        Budget::Finite(eps)
    } else {
        Budget::Unbounded
    }
}

pub fn records_to_jsonl(records: &[RunRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn records_from_jsonl(text: &str) -> Result<Vec<RunRecord>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Ok(serde_json::from_str(l)?))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub variant: Variant,
    pub eps_x: Budget,
    pub eps_y: Budget,
    pub runs: usize,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

/// Mean ± population std of test accuracy grouped by (variant, eps_x, eps_y),
/// in order of first appearance. Failed runs are skipped; groups with no
/// successful run are omitted.
pub fn summarize(records: &[RunRecord]) -> Vec<SummaryRow> {
    type Key = (Variant, String, String);
    let mut order: Vec<Key> = Vec::new();
    let mut groups: BTreeMap<Key, (Budget, Budget, Vec<f64>)> = BTreeMap::new();
    for r in records {
        let key = (r.variant, r.eps_x.to_string(), r.eps_y.to_string());
        let entry = groups.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            (r.eps_x, r.eps_y, Vec::new())
        });
        if let Some(acc) = r.test_acc {
            entry.2.push(acc);
        }
    }
    order
        .into_iter()
        .filter_map(|key| {
            let (eps_x, eps_y, accs) = &groups[&key];
            if accs.is_empty() {
                return None;
            }
            let n = accs.len() as f64;
            let mean = accs.iter().sum::<f64>() / n;
            let var = accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
            Some(SummaryRow {
                variant: key.0,
                eps_x: *eps_x,
                eps_y: *eps_y,
                runs: accs.len(),
                mean,
                std: var.sqrt(),
            })
        })
        .collect()
}

pub fn summary_text(rows: &[SummaryRow]) -> String {
    let mut out = format!(
        "{:<16} {:>8} {:>8} {:>5} {:>16}\n",
        "variant", "eps_x", "eps_y", "runs", "accuracy(%)"
    );
    for r in rows {
        writeln!(
            out,
            "{:<16} {:>8} {:>8} {:>5} {:>9.1} ± {:<4.1}",
            r.variant.as_str(),
            r.eps_x.to_string(),
            r.eps_y.to_string(),
            r.runs,
            100.0 * r.mean,
            100.0 * r.std
        )
        .unwrap();
    }
    out
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from("variant,eps_x,eps_y,runs,mean,std\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{:?},{:?}",
            r.variant.as_str(),
            r.eps_x,
            r.eps_y,
            r.runs,
            r.mean,
            r.std
        )
        .unwrap();
    }
    out
}
