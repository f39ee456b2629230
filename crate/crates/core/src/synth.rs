//! Stochastic-block-model graphs with community-dependent categorical features.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{CategoricalFeatures, LabelData};
use crate::graph::Graph;
use crate::rng::{self, Purpose};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub num_nodes: usize,
    pub num_classes: usize,
    pub dim: usize,
    pub domain: u32,
    pub p_in: f64,
    pub p_out: f64,
    pub feature_skew: f64,
    pub label_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            num_nodes: 1000,
            num_classes: 4,
            dim: 20,
            domain: 2,
            p_in: 0.02,
            p_out: 0.002,
            feature_skew: 0.8,
            label_rate: 0.5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub graph: Graph,
    pub features: CategoricalFeatures,
    pub labels: LabelData,
    /// Community of every node, labeled or not.
    pub communities: Vec<usize>,
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        for (name, p) in [("p_in", self.p_in), ("p_out", self.p_out)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!("{name}={p} is not a probability")));
            }
        }
        if self.p_in <= self.p_out {
            return Err(Error::invalid("p_in must exceed p_out"));
        }
        if self.num_classes < 2 || self.num_classes > self.num_nodes {
            return Err(Error::invalid("need 2 <= num_classes <= num_nodes"));
        }
        if self.domain < 2 {
            return Err(Error::invalid("domain must be >= 2"));
        }
        let floor = 1.0 / self.domain as f64;
        if !(self.feature_skew > floor && self.feature_skew <= 1.0) {
            return Err(Error::invalid(format!(
                "feature_skew {} must lie in (1/{}, 1]",
                self.feature_skew, self.domain
            )));
        }
        if !(0.0..=1.0).contains(&self.label_rate) {
            return Err(Error::invalid("label_rate must lie in [0, 1]"));
        }
        Ok(())
    }
}

pub fn synth_homophily_graph(cfg: &SynthConfig) -> Result<SynthData> {
    cfg.validate()?;
    let n = cfg.num_nodes;
    let c = cfg.num_classes;
    let mut rng = rng::stream(cfg.seed, Purpose::Synth, 0);

    // equal-size communities over a shuffled node order
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut communities = vec![0usize; n];
    for (rank, &v) in order.iter().enumerate() {
        communities[v] = rank * c / n;
    }

    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let p = if communities[u] == communities[v] {
                cfg.p_in
            } else {
                cfg.p_out
            };
            if p > 0.0 && rng.random::<f64>() < p {
                edges.push((u as u32, v as u32));
            }
        }
    }
    let graph = Graph::from_edges(n, &edges)?;

    let g = cfg.domain;
    let preferred: Vec<Vec<u32>> = (0..c)
        .map(|_| (0..cfg.dim).map(|_| rng.random_range(1..=g)).collect())
        .collect();
    let mut values = Vec::with_capacity(n * cfg.dim);
    for &comm in &communities {
        for &pref in &preferred[comm] {
            let x = if rng.random::<f64>() < cfg.feature_skew {
                pref
            } else {
                // uniform over the other g-1 categories
                let k = rng.random_range(1..g);
                if k >= pref {
                    k + 1
                } else {
                    k
                }
            };
            values.push(x);
        }
    }
    let features = CategoricalFeatures::new(n, vec![g; cfg.dim], values)?;

    let num_labeled = (cfg.label_rate * n as f64).round() as usize;
    let mut pick: Vec<usize> = (0..n).collect();
    pick.shuffle(&mut rng);
    let mut labels = vec![None; n];
    for &v in &pick[..num_labeled] {
        labels[v] = Some(communities[v] as u32);
    }
    let labels = LabelData::new(c, labels)?;

    Ok(SynthData {
        graph,
        features,
        labels,
        communities,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disconnected_communities_when_p_out_zero() {
        let cfg = SynthConfig {
            num_nodes: 200,
            num_classes: 2,
            p_in: 0.05,
            p_out: 0.0,
            ..Default::default()
        };
        let data = synth_homophily_graph(&cfg).unwrap();
        assert!(data.graph.num_edges() > 0);
        for (u, v) in data.graph.edges() {
            assert_eq!(data.communities[u as usize], data.communities[v as usize]);
        }
    }

    #[test]
    fn rejects_uninformative_skew() {
        let cfg = SynthConfig {
            domain: 2,
            feature_skew: 0.5,
            ..Default::default()
        };
        assert!(synth_homophily_graph(&cfg).is_err());
        let cfg = SynthConfig {
            p_in: 1.5,
            ..Default::default()
        };
        assert!(synth_homophily_graph(&cfg).is_err());
    }

    #[test]
    fn default_instance_is_homophilous() {
        let cfg = SynthConfig::default();
        let data = synth_homophily_graph(&cfg).unwrap();
        let h = data.graph.homophily(&data.communities);
        assert!(h > 0.5, "homophily {h}");
        assert_eq!(data.labels.labeled_nodes().len(), 500);
        for v in data.labels.labeled_nodes() {
            assert_eq!(data.labels.class_of(v), Some(data.communities[v]));
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let cfg = SynthConfig {
            num_nodes: 150,
            ..Default::default()
        };
        let a = synth_homophily_graph(&cfg).unwrap();
        let b = synth_homophily_graph(&cfg).unwrap();
        assert_eq!(a.graph, b.graph);
        assert_eq!(a.features, b.features);
        assert_eq!(a.labels, b.labels);
    }
}
