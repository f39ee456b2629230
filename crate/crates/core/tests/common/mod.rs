#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rgnn::graph::Graph;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// G(n, p) graph.
pub fn random_graph(n: usize, p: f64, seed: u64) -> Graph {
    let mut r = rng(seed);
    let mut edges = Vec::new();
    for u in 0..n as u32 {
        for v in u + 1..n as u32 {
            if r.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, &edges).unwrap()
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn sample_var(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Random 6-node instance with bags: analytic gradient of the full objective
/// against central finite differences. Returns the relative error
/// `|g - g_fd| / max(|g|, |g_fd|)`.
pub fn gradient_check_error(seed: u64, alpha: f64) -> f64 {
    use ndarray::Array2;
    use rgnn::features::LabelData;
    use rgnn::gnn::{objective, ModelParams};
    use rgnn::ldp::{Budget, PerturbedLabels};
    use rgnn::reconstruct::{reconstruct_bag_proportions, ReconstructedLabels};

    let mut r = rng(seed);
    let graph = Graph::from_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 3), (1, 4)]).unwrap();
    let (dim, hidden, classes) = (4, 5, 3);
    let x = Array2::from_shape_simple_fn((6, dim), || r.random::<f64>());
    let mut params = ModelParams::init(dim, hidden, classes, seed);
    params.b1.mapv_inplace(|_| r.random_range(-0.1..0.1));
    params.b2.mapv_inplace(|_| r.random_range(-0.1..0.1));
    let ys: Vec<Option<u32>> = (0..6)
        .map(|v| (v != 5).then(|| r.random_range(0..classes as u32)))
        .collect();
    let reported = PerturbedLabels::from_reports(LabelData::new(classes, ys).unwrap(), Budget::Finite(1.0)).unwrap();
    let labels = ReconstructedLabels::passthrough(&reported);
    let train_nodes = [0, 1, 2, 3, 4];
    let bags = reconstruct_bag_proportions(&reported, &[0, 0, 0, 1, 1, 1], 2, &train_nodes).unwrap();

    let eval = |p: &ModelParams| objective(p, &x, &graph, &labels, &train_nodes, Some(&bags), alpha, None).unwrap();
    let analytic = eval(&params).grad.to_vec();
    let flat = params.to_vec();
    let h = 1e-5;
    let mut probe = params.clone();
    let mut numeric = Vec::with_capacity(flat.len());
    for k in 0..flat.len() {
        let mut shifted = flat.clone();
        shifted[k] = flat[k] + h;
        probe.load(&shifted);
        let up = eval(&probe).total;
        shifted[k] = flat[k] - h;
        probe.load(&shifted);
        let down = eval(&probe).total;
        numeric.push((up - down) / (2.0 * h));
    }
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, b)| a - b).collect();
    norm(&diff) / norm(&analytic).max(norm(&numeric)).max(1e-300)
}

fn random_table(n: usize, domains: &[u32], seed: u64) -> rgnn::features::CategoricalFeatures {
    let mut r = rng(seed);
    let values = (0..n)
        .flat_map(|_| domains.iter().map(|&g| r.random_range(1..=g)).collect::<Vec<_>>())
        .collect();
    rgnn::features::CategoricalFeatures::new(n, domains.to_vec(), values).unwrap()
}

/// Random instance `trial`: number of (node, column) cells where argmax-mode
/// feature reconstruction differs from the argmax of the propagated one-hot
/// reports.
pub fn feature_argmax_mismatches(trial: u64) -> usize {
    use rgnn::freq::argmax;
    use rgnn::ldp::{perturb_features, Budget};
    use rgnn::reconstruct::{propagate_mean, reconstruct_features, FeatureMode, ReconstructedFeatures};

    let n = 30 + 3 * trial as usize;
    let g = random_graph(n, 0.12, 1000 + trial);
    let gamma = 2 + (trial % 3) as u32;
    let domains = vec![gamma; 5];
    let feats = random_table(n, &domains, 2000 + trial);
    let perturbed = perturb_features(&feats, 2, Budget::Finite(0.8), trial).unwrap();
    let hops = (trial % 4) as usize;
    let ReconstructedFeatures::Categorical(rec) =
        reconstruct_features(&g, &perturbed, hops, FeatureMode::Argmax).unwrap()
    else {
        panic!("argmax mode yields categories");
    };
    let gu = gamma as usize;
    let mut mismatches = 0;
    for i in 0..domains.len() {
        let mut onehot = vec![0.0; n * gu];
        for v in 0..n {
            onehot[v * gu + perturbed.get(v, i) as usize - 1] = 1.0;
        }
        let prop = propagate_mean(&g, &onehot, gu, hops);
        mismatches += (0..n)
            .filter(|&v| rec.get(v, i) as usize != argmax(prop.row(v)) + 1)
            .count();
    }
    mismatches
}

/// Random instance `trial`: number of nodes where label reconstruction
/// differs from the argmax of masked propagation (or labels a node that
/// reported nothing).
pub fn label_argmax_mismatches(trial: u64) -> usize {
    use rgnn::features::LabelData;
    use rgnn::freq::argmax;
    use rgnn::ldp::{perturb_labels, Budget};
    use rgnn::reconstruct::{propagate_mean, reconstruct_labels};

    let n = 40 + 2 * trial as usize;
    let c = 2 + (trial % 4) as usize;
    let g = random_graph(n, 0.1, 3000 + trial);
    let mut r = rng(4000 + trial);
    let raw: Vec<Option<u32>> = (0..n)
        .map(|_| (r.random::<f64>() < 0.6).then(|| r.random_range(0..c as u32)))
        .collect();
    let labels = LabelData::new(c, raw).unwrap();
    let perturbed = perturb_labels(&labels, Budget::Finite(1.0), trial).unwrap();
    let hops = (trial % 5) as usize;
    let rec = reconstruct_labels(&g, &perturbed, hops).unwrap();
    let mut init = vec![0.0; n * c];
    for v in perturbed.labeled_nodes() {
        init[v * c + perturbed.class_of(v).unwrap()] = 1.0;
    }
    let prop = propagate_mean(&g, &init, c, hops);
    (0..n)
        .filter(|&v| rec.class_of(v) != perturbed.class_of(v).map(|_| argmax(prop.row(v))))
        .count()
}

pub struct Trials {
    pub estimates: Vec<f64>,
    pub var_hats: Vec<f64>,
    /// Expected observed proportion of category 1.
    pub lambda: f64,
}

/// `trials` independent rounds of `n` users drawn i.i.d. with first
/// coordinate 1 with probability `pi1`, reporting through GRR-FS; column 0 is
/// estimated.
pub fn run_trials(domains: &[u32], m: usize, eps: f64, pi1: f64, n: usize, trials: usize, seed: u64) -> Trials {
    let d = domains.len();
    let g = domains[0] as usize;
    let ch = rgnn::ldp::TransitionMatrix::new(g, rgnn::ldp::Budget::Finite(eps)).unwrap();
    let mut r = rng(seed);
    let mut estimates = Vec::with_capacity(trials);
    let mut var_hats = Vec::with_capacity(trials);
    for _ in 0..trials {
        let mut counts = vec![0usize; g];
        for _ in 0..n {
            let mut x = vec![1u32; d];
            x[0] = if r.random::<f64>() < pi1 { 1 } else { 2 };
            let o = rgnn::ldp::grr_fs_perturb(&x, domains, m, rgnn::ldp::Budget::Finite(eps), &mut r).unwrap();
            counts[o[0] as usize - 1] += 1;
        }
        let observed: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
        let est = rgnn::freq::estimate_grr_fs(&observed, d, m, &ch, n).unwrap();
        estimates.push(est.estimate[0]);
        var_hats.push(est.variance[0]);
    }
    let (p, q) = (ch.p(), ch.q());
    let beta = m as f64 / d as f64;
    let lambda = beta * (pi1 * p + (1.0 - pi1) * q) + (1.0 - beta) / g as f64;
    Trials {
        estimates,
        var_hats,
        lambda,
    }
}
