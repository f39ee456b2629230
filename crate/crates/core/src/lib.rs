//! Node classification under local differential privacy.
//!
//! Clients randomize their categorical features (GRR with feature sampling)
//! and labels (GRR) before reporting. The server sees only the public graph
//! and those reports; it reconstructs features and labels by mean-propagating
//! reports over multi-hop neighborhoods and inverting the known noise channel,
//! estimates per-cluster label proportions, and trains a two-layer
//! mean-aggregation GNN on cross-entropy plus a KL label-proportion term.
//!
//! Module map:
//! * [`graph`], [`features`], [`synth`], [`io`]: data, preprocessing, file formats
//! * [`ldp`], [`audit`]: randomizers, budget accounting, exact privacy audit
//! * [`freq`]: unbiased frequency estimators
//! * [`reconstruct`]: server-side feature/label/bag-proportion reconstruction
//! * [`cluster`]: balanced edge-cut partitioning
//! * [`gnn`]: model, losses, gradients, training
//! * [`experiment`]: end-to-end pipeline, sweeps and reports
//!
//! Server-side entry points take [`ldp::PerturbedFeatures`] /
//! [`ldp::PerturbedLabels`] (or their reconstructions), never the raw tables:
//!
//! ```compile_fail
//! use rgnn::{features::CategoricalFeatures, graph::Graph, reconstruct::*};
//! let g = Graph::empty(1);
//! let raw = CategoricalFeatures::new(1, vec![2], vec![1]).unwrap();
//! reconstruct_features(&g, &raw, 2, FeatureMode::Argmax).unwrap();
//! ```
//!
//! ```compile_fail
//! use rgnn::{features::LabelData, graph::Graph, reconstruct::*};
//! let g = Graph::empty(1);
//! let raw = LabelData::new(2, vec![Some(0)]).unwrap();
//! reconstruct_labels(&g, &raw, 2).unwrap();
//! ```
//!
//! ```compile_fail
//! use rgnn::{features::CategoricalFeatures, gnn::TrainInputs, graph::Graph};
//! let g = Graph::empty(1);
//! let raw = CategoricalFeatures::new(1, vec![2], vec![1]).unwrap();
//! let _ = TrainInputs { graph: &g, features: &raw, ..todo!() };
//! ```

// `!(x > y)` comparisons deliberately reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod cluster;
pub mod error;
pub mod experiment;
pub mod features;
pub mod freq;
pub mod gnn;
pub mod graph;
pub mod io;
pub mod ldp;
pub mod reconstruct;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};
