use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::reconstruct::ReconstructedFeatures;
use crate::rng::{self, Purpose, StreamRng};

/// Two mean-aggregation layers. Layer `k` maps `[h_v ‖ mean_{u ∈ N(v)} h_u]`
/// through `w_k` and `b_k`; ReLU follows layer 1, softmax follows layer 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

impl ModelParams {
    /// Glorot-uniform weights, zero biases.
    pub fn init(input_dim: usize, hidden: usize, classes: usize, seed: u64) -> Self {
        let mut rng = rng::stream(seed, Purpose::Init, 0);
        let mut glorot = |rows: usize, cols: usize| {
            let bound = (6.0 / (rows + cols) as f64).sqrt();
            Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-bound..=bound))
        };
        let w1 = glorot(2 * input_dim, hidden);
        let w2 = glorot(2 * hidden, classes);
        ModelParams {
            w1,
            b1: Array1::zeros(hidden),
            w2,
            b2: Array1::zeros(classes),
        }
    }

    pub fn zeros_like(&self) -> Self {
        ModelParams {
            w1: Array2::zeros(self.w1.raw_dim()),
            b1: Array1::zeros(self.b1.raw_dim()),
            w2: Array2::zeros(self.w2.raw_dim()),
            b2: Array1::zeros(self.b2.raw_dim()),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w1.nrows() / 2
    }

    pub fn hidden(&self) -> usize {
        self.w1.ncols()
    }

    pub fn classes(&self) -> usize {
        self.w2.ncols()
    }

    pub fn num_params(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    /// All parameters in the order w1, b1, w2, b2 (row-major).
    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        out.extend(self.w1.iter());
        out.extend(self.b1.iter());
        out.extend(self.w2.iter());
        out.extend(self.b2.iter());
        out
    }

    /// Inverse of [`to_vec`](Self::to_vec) for a flat vector of the same layout.
    pub fn load(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.num_params());
        let mut it = flat.iter().copied();
        for x in self
            .w1
            .iter_mut()
            .chain(self.b1.iter_mut())
            .chain(self.w2.iter_mut())
            .chain(self.b2.iter_mut())
        {
            *x = it.next().expect("length checked");
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_vec().iter().all(|x| x.is_finite())
    }
}

/// Dense model input: one-hot concatenation of categorical columns, or the
/// raw probability matrix.
pub fn encode_input(features: &ReconstructedFeatures) -> Result<Array2<f64>> {
    match features {
        ReconstructedFeatures::Categorical(t) => {
            let offsets: Vec<usize> = t
                .domains()
                .iter()
                .scan(0usize, |acc, &g| {
                    let o = *acc;
                    *acc += g as usize;
                    Some(o)
                })
                .collect();
            let width: usize = t.domains().iter().map(|&g| g as usize).sum();
            let mut x = Array2::zeros((t.num_nodes(), width));
            for v in 0..t.num_nodes() {
                for (i, &val) in t.row(v).iter().enumerate() {
                    x[[v, offsets[i] + val as usize - 1]] = 1.0;
                }
            }
            Ok(x)
        }
        ReconstructedFeatures::Probabilities { num_nodes, dim, values } => {
            if values.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::invalid("probability features must lie in [0, 1]"));
            }
            Ok(
                Array2::from_shape_vec((*num_nodes, *dim), values.clone())
                    .map_err(|e| Error::invalid(e.to_string()))?,
            )
        }
    }
}

/// Row `v` of the result is the mean of rows `N(v)` of `h` (zero if isolated).
pub fn neighbor_mean(graph: &Graph, h: ArrayView2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros(h.raw_dim());
    for v in 0..graph.num_nodes() {
        let nbrs = graph.neighbors(v);
        if nbrs.is_empty() {
            continue;
        }
        let mut row = out.row_mut(v);
        for &u in nbrs {
            row += &h.row(u as usize);
        }
        row /= nbrs.len() as f64;
    }
    out
}

/// Adjoint of [`neighbor_mean`].
fn neighbor_mean_transpose(graph: &Graph, g: ArrayView2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros(g.raw_dim());
    for v in 0..graph.num_nodes() {
        let nbrs = graph.neighbors(v);
        if nbrs.is_empty() {
            continue;
        }
        let scaled = &g.row(v) / nbrs.len() as f64;
        for &u in nbrs {
            let mut row = out.row_mut(u as usize);
            row += &scaled;
        }
    }
    out
}

fn dropout_mask(shape: (usize, usize), rate: f64, rng: &mut StreamRng) -> Array2<f64> {
    let keep = 1.0 / (1.0 - rate);
    Array2::from_shape_simple_fn(shape, || if rng.random::<f64>() < rate { 0.0 } else { keep })
}

pub fn softmax_rows(z: &Array2<f64>) -> Array2<f64> {
    let mut out = z.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|x| (x - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    out
}

/// Everything the backward pass needs from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    a1: Array2<f64>,
    z1: Array2<f64>,
    mask1: Option<Array2<f64>>,
    a2: Array2<f64>,
    pub probs: Array2<f64>,
}

/// Dropout configuration for a training-mode forward pass.
#[derive(Debug, Clone, Copy)]
pub struct Dropout {
    pub rate: f64,
    pub seed: u64,
    pub step: u64,
}

pub fn forward(params: &ModelParams, x: &Array2<f64>, graph: &Graph, dropout: Option<Dropout>) -> Result<ForwardCache> {
    if x.ncols() != params.input_dim() || x.nrows() != graph.num_nodes() {
        return Err(Error::invalid(format!(
            "input is {}x{}, model expects {} nodes x {} features",
            x.nrows(),
            x.ncols(),
            graph.num_nodes(),
            params.input_dim()
        )));
    }
    let mut rng = dropout
        .filter(|d| d.rate > 0.0)
        .map(|d| (d.rate, rng::stream(d.seed, Purpose::Dropout, d.step)));

    let x_in = match rng.as_mut() {
        Some((rate, r)) => x * &dropout_mask(x.dim(), *rate, r),
        None => x.clone(),
    };
    let a1 = concatenate![Axis(1), x_in, neighbor_mean(graph, x_in.view())];
    let z1 = a1.dot(&params.w1) + &params.b1;
    let h = z1.mapv(|v| v.max(0.0));

    let mask1 = rng.as_mut().map(|(rate, r)| dropout_mask(h.dim(), *rate, r));
    let h_in = match &mask1 {
        Some(m) => &h * m,
        None => h,
    };
    let a2 = concatenate![Axis(1), h_in, neighbor_mean(graph, h_in.view())];
    let z2 = a2.dot(&params.w2) + &params.b2;
    let probs = softmax_rows(&z2);
    if probs.iter().any(|p| !p.is_finite()) {
        return Err(Error::invalid("non-finite activations in output layer"));
    }
    Ok(ForwardCache {
        a1,
        z1,
        mask1,
        a2,
        probs,
    })
}

/// Gradients of a scalar loss with respect to all parameters, given the
/// loss gradient with respect to the softmax outputs.
pub fn backward(params: &ModelParams, cache: &ForwardCache, graph: &Graph, grad_probs: &Array2<f64>) -> ModelParams {
    let p = &cache.probs;
    // softmax Jacobian-vector product, row by row
    let inner = (grad_probs * p).sum_axis(Axis(1)).insert_axis(Axis(1));
    let dz2 = p * &(grad_probs - &inner);

    let dw2 = cache.a2.t().dot(&dz2);
    let db2 = dz2.sum_axis(Axis(0));
    let da2 = dz2.dot(&params.w2.t());
    let h = params.hidden();
    let mut dh = da2.slice(s![.., ..h]).to_owned();
    dh += &neighbor_mean_transpose(graph, da2.slice(s![.., h..]));
    if let Some(m) = &cache.mask1 {
        dh *= m;
    }
    let relu_grad = cache.z1.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
    let dz1 = dh * relu_grad;
    let dw1 = cache.a1.t().dot(&dz1);
    let db1 = dz1.sum_axis(Axis(0));
    ModelParams {
        w1: dw1,
        b1: db1,
        w2: dw2,
        b2: db2,
    }
}
