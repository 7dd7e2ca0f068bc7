//! Numeric kernels and the three model families: feature-only feedforward,
//! edge-only propagation over an all-ones input, and composed GNNs
//! (GCN, GIN sum/mean/max, SAGE-mean).
//!
//! Forward passes cache what the hand-written backward passes need; gradients
//! are exact analytic derivatives in 64-bit arithmetic. A forward/backward
//! pair is a pure function of (params, inputs) and is internally sequential,
//! so runs are bit-reproducible for a fixed seed.

use crate::dense::{matmul, matmul_a_bt, matmul_at_b, DenseMatrix};
use crate::graph::{normalized_adjacency, CsrMatrix, Graph};
use rand::Rng;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("{op}: shape mismatch ({left_rows}x{left_cols} vs {right_rows}x{right_cols})")]
    ShapeMismatch {
        op: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    #[error("label {label} at row {row} outside [0,{num_classes})")]
    LabelOutOfRange {
        row: usize,
        label: usize,
        num_classes: usize,
    },
    #[error("label count {labels} does not match logit rows {rows}")]
    LabelCount { labels: usize, rows: usize },
    #[error("empty graph has no readout")]
    EmptyGraph,
    #[error("unknown model kind `{0}`")]
    UnknownModelKind(String),
    #[error("layer {layer} has parameters of the wrong kind")]
    WrongLayerParams { layer: usize },
}

/// Neighborhood aggregation used by GIN layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregator {
    Sum,
    Mean,
    Max,
}

/// The GNN propagation schemes in the toolkit, in canonical tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PropagationKind {
    Gcn,
    GinSum,
    GinMean,
    GinMax,
    SageMean,
}

impl PropagationKind {
    /// Canonical order: gcn < gin-sum < gin-mean < gin-max < sage-mean.
    pub const ALL: [PropagationKind; 5] = [
        PropagationKind::Gcn,
        PropagationKind::GinSum,
        PropagationKind::GinMean,
        PropagationKind::GinMax,
        PropagationKind::SageMean,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PropagationKind::Gcn => "gcn",
            PropagationKind::GinSum => "gin-sum",
            PropagationKind::GinMean => "gin-mean",
            PropagationKind::GinMax => "gin-max",
            PropagationKind::SageMean => "sage-mean",
        }
    }
}

impl fmt::Display for PropagationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PropagationKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PropagationKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| ModelError::UnknownModelKind(s.to_string()))
    }
}

/// A concrete trainable model. `Edges` carries the propagation scheme picked
/// for it; the per-dataset selection over all schemes lives in training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// Feedforward network over node features, blind to edges.
    Features,
    /// GNN propagation fed an all-ones input, blind to feature contents.
    Edges(PropagationKind),
    /// Composed GNN over the actual features.
    Gnn(PropagationKind),
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::Features => f.write_str("features"),
            ModelKind::Edges(p) => write!(f, "edges-{p}"),
            ModelKind::Gnn(p) => f.write_str(p.name()),
        }
    }
}

impl FromStr for ModelKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "features" {
            return Ok(ModelKind::Features);
        }
        if let Some(rest) = s.strip_prefix("edges-") {
            return Ok(ModelKind::Edges(rest.parse()?));
        }
        Ok(ModelKind::Gnn(s.parse()?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    Node,
    Graph,
}

/// Which all-ones input the edge-only model receives. The default is a single
/// ones column; the same-shaped ones matrix is kept as a config switch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgeInput {
    #[default]
    OnesColumn,
    OnesMatrix,
}

pub const MAX_HIDDEN_WIDTH: usize = 128;
pub const DEFAULT_NUM_LAYERS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub num_layers: usize,
    /// Overrides the width rule min(128, 2*max(in_dim, out_dim)) when set.
    pub hidden_override: Option<usize>,
    pub task_kind: TaskKind,
    pub edge_input: EdgeInput,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, task_kind: TaskKind) -> Self {
        Self {
            kind,
            num_layers: DEFAULT_NUM_LAYERS,
            hidden_override: None,
            task_kind,
            edge_input: EdgeInput::default(),
        }
    }

    pub fn hidden_width(&self, in_dim: usize, out_dim: usize) -> usize {
        self.hidden_override
            .unwrap_or_else(|| MAX_HIDDEN_WIDTH.min(2 * in_dim.max(out_dim)))
    }

    /// Input width the model sees on a task with the given feature dimension.
    pub fn input_dim(&self, feat_dim: usize) -> usize {
        match (self.kind, self.edge_input) {
            (ModelKind::Edges(_), EdgeInput::OnesColumn) => 1,
            (ModelKind::Edges(_), EdgeInput::OnesMatrix) => feat_dim,
            _ => feat_dim,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams {
    pub weight: DenseMatrix,
    pub bias: Vec<f64>,
}

/// The 2-layer MLP inside one GIN layer.
#[derive(Debug, Clone, PartialEq)]
pub struct GinParams {
    pub w1: DenseMatrix,
    pub b1: Vec<f64>,
    pub w2: DenseMatrix,
    pub b2: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SageParams {
    pub w_self: DenseMatrix,
    pub w_neigh: DenseMatrix,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LayerParams {
    Dense(DenseParams),
    Gin(GinParams),
    Sage(SageParams),
}

/// All weights and biases of a model, layer by layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    pub layers: Vec<LayerParams>,
}

impl Parameters {
    pub fn zeros_like(&self) -> Parameters {
        let layers = self
            .layers
            .iter()
            .map(|l| match l {
                LayerParams::Dense(p) => LayerParams::Dense(DenseParams {
                    weight: DenseMatrix::zeros(p.weight.rows(), p.weight.cols()),
                    bias: vec![0.0; p.bias.len()],
                }),
                LayerParams::Gin(p) => LayerParams::Gin(GinParams {
                    w1: DenseMatrix::zeros(p.w1.rows(), p.w1.cols()),
                    b1: vec![0.0; p.b1.len()],
                    w2: DenseMatrix::zeros(p.w2.rows(), p.w2.cols()),
                    b2: vec![0.0; p.b2.len()],
                }),
                LayerParams::Sage(p) => LayerParams::Sage(SageParams {
                    w_self: DenseMatrix::zeros(p.w_self.rows(), p.w_self.cols()),
                    w_neigh: DenseMatrix::zeros(p.w_neigh.rows(), p.w_neigh.cols()),
                    bias: vec![0.0; p.bias.len()],
                }),
            })
            .collect();
        Parameters { layers }
    }

    /// Every tensor as a flat mutable slice, in a fixed deterministic order.
    pub fn flat_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for l in &mut self.layers {
            match l {
                LayerParams::Dense(p) => {
                    out.push(p.weight.data_mut());
                    out.push(p.bias.as_mut_slice());
                }
                LayerParams::Gin(p) => {
                    out.push(p.w1.data_mut());
                    out.push(p.b1.as_mut_slice());
                    out.push(p.w2.data_mut());
                    out.push(p.b2.as_mut_slice());
                }
                LayerParams::Sage(p) => {
                    out.push(p.w_self.data_mut());
                    out.push(p.w_neigh.data_mut());
                    out.push(p.bias.as_mut_slice());
                }
            }
        }
        out
    }

    pub fn flat(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for l in &self.layers {
            match l {
                LayerParams::Dense(p) => {
                    out.push(p.weight.data());
                    out.push(p.bias.as_slice());
                }
                LayerParams::Gin(p) => {
                    out.push(p.w1.data());
                    out.push(p.b1.as_slice());
                    out.push(p.w2.data());
                    out.push(p.b2.as_slice());
                }
                LayerParams::Sage(p) => {
                    out.push(p.w_self.data());
                    out.push(p.w_neigh.data());
                    out.push(p.bias.as_slice());
                }
            }
        }
        out
    }

    pub fn all_finite(&self) -> bool {
        self.flat().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }
}

// ---------------------------------------------------------------------------
// Kernels (spec operation surface)
// ---------------------------------------------------------------------------

/// Sparse-dense product adj * h.
pub fn spmm(adj: &CsrMatrix, h: &DenseMatrix) -> Result<DenseMatrix, ModelError> {
    if adj.num_cols != h.rows() {
        return Err(ModelError::ShapeMismatch {
            op: "spmm",
            left_rows: adj.num_rows,
            left_cols: adj.num_cols,
            right_rows: h.rows(),
            right_cols: h.cols(),
        });
    }
    let mut out = DenseMatrix::zeros(adj.num_rows, h.cols());
    for i in 0..adj.num_rows {
        let lo = adj.row_offsets[i];
        let hi = adj.row_offsets[i + 1];
        let orow = out.row_mut(i);
        for k in lo..hi {
            let coeff = adj.values[k];
            let hrow = h.row(adj.col_indices[k]);
            for (o, &x) in orow.iter_mut().zip(hrow) {
                *o += coeff * x;
            }
        }
    }
    Ok(out)
}

/// sigma(norm_adj * h * w + bias); sigma = ReLU when `apply_nonlinearity`,
/// identity otherwise (the last layer emits logits).
pub fn gcn_layer_forward(
    adj: &CsrMatrix,
    h: &DenseMatrix,
    params: &DenseParams,
    apply_nonlinearity: bool,
) -> Result<DenseMatrix, ModelError> {
    check_mul("gcn_layer", h, &params.weight)?;
    let mut out = spmm(adj, &matmul(h, &params.weight))?;
    out.add_row_bias(&params.bias);
    if apply_nonlinearity {
        out.relu_inplace();
    }
    Ok(out)
}

/// Neighborhood aggregation over the raw adjacency (no self-loops). Mean and
/// max over an empty neighborhood yield a zero row. For max, returns the
/// arg-max node per (row, col) for gradient routing; ties resolve to the
/// lowest node id (rows are sorted ascending).
pub fn aggregate_neighbors(
    graph: &Graph,
    h: &DenseMatrix,
    aggregator: Aggregator,
) -> (DenseMatrix, Option<Vec<usize>>) {
    let n = graph.num_nodes();
    let c = h.cols();
    let mut out = DenseMatrix::zeros(n, c);
    match aggregator {
        Aggregator::Sum | Aggregator::Mean => {
            for v in 0..n {
                let neigh = graph.neighbors(v);
                if neigh.is_empty() {
                    continue;
                }
                let orow = out.row_mut(v);
                for &u in neigh {
                    for (o, &x) in orow.iter_mut().zip(h.row(u)) {
                        *o += x;
                    }
                }
                if aggregator == Aggregator::Mean {
                    let inv = 1.0 / neigh.len() as f64;
                    for o in orow.iter_mut() {
                        *o *= inv;
                    }
                }
            }
            (out, None)
        }
        Aggregator::Max => {
            let mut argmax = vec![usize::MAX; n * c];
            for v in 0..n {
                let neigh = graph.neighbors(v);
                if neigh.is_empty() {
                    continue;
                }
                let orow = out.row_mut(v);
                for (j, o) in orow.iter_mut().enumerate() {
                    let mut best = neigh[0];
                    let mut best_val = h.get(neigh[0], j);
                    for &u in &neigh[1..] {
                        let x = h.get(u, j);
                        if x > best_val {
                            best = u;
                            best_val = x;
                        }
                    }
                    *o = best_val;
                    argmax[v * c + j] = best;
                }
            }
            (out, Some(argmax))
        }
    }
}

/// Routes aggregation output gradients back to node embeddings.
fn aggregate_backward(
    graph: &Graph,
    d_agg: &DenseMatrix,
    aggregator: Aggregator,
    argmax: Option<&[usize]>,
) -> DenseMatrix {
    let n = graph.num_nodes();
    let c = d_agg.cols();
    let mut d_h = DenseMatrix::zeros(n, c);
    match aggregator {
        Aggregator::Sum => {
            for v in 0..n {
                for &u in graph.neighbors(v) {
                    let dst = d_h.row_mut(u);
                    for (j, o) in dst.iter_mut().enumerate() {
                        *o += d_agg.get(v, j);
                    }
                }
            }
        }
        Aggregator::Mean => {
            for v in 0..n {
                let deg = graph.neighbors(v).len();
                if deg == 0 {
                    continue;
                }
                let inv = 1.0 / deg as f64;
                for &u in graph.neighbors(v) {
                    let dst = d_h.row_mut(u);
                    for (j, o) in dst.iter_mut().enumerate() {
                        *o += d_agg.get(v, j) * inv;
                    }
                }
            }
        }
        Aggregator::Max => {
            let argmax = argmax.expect("max aggregation requires an argmax cache");
            for v in 0..n {
                for j in 0..c {
                    let u = argmax[v * c + j];
                    if u != usize::MAX {
                        let g = d_agg.get(v, j);
                        d_h.set(u, j, d_h.get(u, j) + g);
                    }
                }
            }
        }
    }
    d_h
}

/// GIN layer: MLP(h_v + aggr over neighbors), epsilon fixed to 0. The inner
/// MLP is linear-ReLU-linear; `apply_nonlinearity` adds the outer ReLU used
/// between hidden layers.
pub fn gin_layer_forward(
    graph: &Graph,
    h: &DenseMatrix,
    params: &GinParams,
    aggregator: Aggregator,
    apply_nonlinearity: bool,
) -> Result<DenseMatrix, ModelError> {
    check_mul("gin_layer", h, &params.w1)?;
    let (mut z, _) = aggregate_neighbors(graph, h, aggregator);
    for (zv, &hv) in z.data_mut().iter_mut().zip(h.data()) {
        *zv += hv;
    }
    let mut m = matmul(&z, &params.w1);
    m.add_row_bias(&params.b1);
    m.relu_inplace();
    let mut out = matmul(&m, &params.w2);
    out.add_row_bias(&params.b2);
    if apply_nonlinearity {
        out.relu_inplace();
    }
    Ok(out)
}

/// SAGE-mean layer: sigma(h_v W_self + mean_neighbors(h_u) W_neigh + bias);
/// an empty neighborhood contributes a zero mean term.
pub fn sage_mean_layer_forward(
    graph: &Graph,
    h: &DenseMatrix,
    params: &SageParams,
    apply_nonlinearity: bool,
) -> Result<DenseMatrix, ModelError> {
    check_mul("sage_layer", h, &params.w_self)?;
    let (neigh_mean, _) = aggregate_neighbors(graph, h, Aggregator::Mean);
    let mut out = matmul(h, &params.w_self);
    let neigh_part = matmul(&neigh_mean, &params.w_neigh);
    for (o, &x) in out.data_mut().iter_mut().zip(neigh_part.data()) {
        *o += x;
    }
    out.add_row_bias(&params.bias);
    if apply_nonlinearity {
        out.relu_inplace();
    }
    Ok(out)
}

/// Feedforward network over the feature matrix; never sees the adjacency.
pub fn feature_only_forward(
    features: &DenseMatrix,
    params: &Parameters,
) -> Result<DenseMatrix, ModelError> {
    let mut h = features.clone();
    let last = params.layers.len() - 1;
    for (l, layer) in params.layers.iter().enumerate() {
        let LayerParams::Dense(p) = layer else {
            return Err(ModelError::WrongLayerParams { layer: l });
        };
        check_mul("dense_layer", &h, &p.weight)?;
        let mut out = matmul(&h, &p.weight);
        out.add_row_bias(&p.bias);
        if l != last {
            out.relu_inplace();
        }
        h = out;
    }
    Ok(h)
}

/// Runs the chosen propagation with an all-ones input; the stored feature
/// matrix is never read.
pub fn edge_only_forward(
    graph: &Graph,
    params: &Parameters,
    propagation: PropagationKind,
    edge_input: EdgeInput,
) -> Result<DenseMatrix, ModelError> {
    let cols = match edge_input {
        EdgeInput::OnesColumn => 1,
        EdgeInput::OnesMatrix => graph.feat_dim(),
    };
    let input = DenseMatrix::ones(graph.num_nodes(), cols);
    propagate(graph, &normalized_adjacency(graph), &input, params, propagation)
}

fn propagate(
    graph: &Graph,
    norm_adj: &CsrMatrix,
    input: &DenseMatrix,
    params: &Parameters,
    propagation: PropagationKind,
) -> Result<DenseMatrix, ModelError> {
    let mut h = input.clone();
    let last = params.layers.len() - 1;
    for (l, layer) in params.layers.iter().enumerate() {
        let nonlin = l != last;
        h = match (propagation, layer) {
            (PropagationKind::Gcn, LayerParams::Dense(p)) => {
                gcn_layer_forward(norm_adj, &h, p, nonlin)?
            }
            (PropagationKind::GinSum, LayerParams::Gin(p)) => {
                gin_layer_forward(graph, &h, p, Aggregator::Sum, nonlin)?
            }
            (PropagationKind::GinMean, LayerParams::Gin(p)) => {
                gin_layer_forward(graph, &h, p, Aggregator::Mean, nonlin)?
            }
            (PropagationKind::GinMax, LayerParams::Gin(p)) => {
                gin_layer_forward(graph, &h, p, Aggregator::Max, nonlin)?
            }
            (PropagationKind::SageMean, LayerParams::Sage(p)) => {
                sage_mean_layer_forward(graph, &h, p, nonlin)?
            }
            _ => return Err(ModelError::WrongLayerParams { layer: l }),
        };
    }
    Ok(h)
}

/// Column-wise sum of node embeddings into one graph embedding.
pub fn graph_readout(node_embeddings: &DenseMatrix) -> Result<Vec<f64>, ModelError> {
    if node_embeddings.rows() == 0 {
        return Err(ModelError::EmptyGraph);
    }
    Ok(node_embeddings.column_sums())
}

/// Mean softmax cross-entropy over rows, computed with max-shifted
/// log-sum-exp. Returns the loss and d(loss)/d(logits).
pub fn softmax_cross_entropy(
    logits: &DenseMatrix,
    labels: &[usize],
) -> Result<(f64, DenseMatrix), ModelError> {
    if labels.len() != logits.rows() {
        return Err(ModelError::LabelCount {
            labels: labels.len(),
            rows: logits.rows(),
        });
    }
    let n = logits.rows();
    let c = logits.cols();
    let mut d_logits = DenseMatrix::zeros(n, c);
    let inv_n = 1.0 / n as f64;
    let mut loss = 0.0;
    for i in 0..n {
        let label = labels[i];
        if label >= c {
            return Err(ModelError::LabelOutOfRange {
                row: i,
                label,
                num_classes: c,
            });
        }
        let row = logits.row(i);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for &x in row {
            sum += (x - max).exp();
        }
        let lse = max + sum.ln();
        loss += lse - row[label];
        let drow = d_logits.row_mut(i);
        for (j, (d, &x)) in drow.iter_mut().zip(row).enumerate() {
            let softmax = (x - lse).exp();
            *d = (softmax - if j == label { 1.0 } else { 0.0 }) * inv_n;
        }
    }
    Ok((loss * inv_n, d_logits))
}

fn check_mul(op: &'static str, h: &DenseMatrix, w: &DenseMatrix) -> Result<(), ModelError> {
    if h.cols() != w.rows() {
        return Err(ModelError::ShapeMismatch {
            op,
            left_rows: h.rows(),
            left_cols: h.cols(),
            right_rows: w.rows(),
            right_cols: w.cols(),
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Model: dims, init, cached forward, analytic backward
// ---------------------------------------------------------------------------

/// A graph together with its precomputed normalized adjacency, shared across
/// the runs of a harness.
#[derive(Debug, Clone)]
pub struct PreparedGraph {
    pub graph: Graph,
    pub norm_adj: CsrMatrix,
}

impl PreparedGraph {
    pub fn new(graph: Graph) -> Self {
        let norm_adj = normalized_adjacency(&graph);
        Self { graph, norm_adj }
    }
}

enum LayerCache {
    Plain,
    Gin {
        z: DenseMatrix,
        m: DenseMatrix,
        argmax: Option<Vec<usize>>,
    },
    Sage {
        neigh_mean: DenseMatrix,
    },
}

/// Per-forward activation cache: acts[0] is the model input, acts[l+1] the
/// post-activation output of layer l; acts[last] holds the logits.
pub struct Trace {
    acts: Vec<DenseMatrix>,
    caches: Vec<LayerCache>,
}

impl Trace {
    pub fn logits(&self) -> &DenseMatrix {
        self.acts.last().expect("trace holds at least the input")
    }
}

/// A model instantiated for a concrete task: layer dimensions resolved from
/// the spec, the task's feature width, and its class count.
#[derive(Debug, Clone)]
pub struct Model {
    spec: ModelSpec,
    in_dim: usize,
    out_dim: usize,
    dims: Vec<(usize, usize)>,
}

impl Model {
    pub fn new(spec: ModelSpec, feat_dim: usize, num_classes: usize) -> Model {
        assert!(spec.num_layers >= 1, "num_layers must be >= 1");
        let in_dim = spec.input_dim(feat_dim);
        let out_dim = num_classes;
        let hidden = spec.hidden_width(in_dim, out_dim);
        let mut dims = Vec::with_capacity(spec.num_layers);
        for l in 0..spec.num_layers {
            let d_in = if l == 0 { in_dim } else { hidden };
            let d_out = if l == spec.num_layers - 1 { out_dim } else { hidden };
            dims.push((d_in, d_out));
        }
        Model {
            spec,
            in_dim,
            out_dim,
            dims,
        }
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn hidden_width(&self) -> usize {
        self.spec.hidden_width(self.in_dim, self.out_dim)
    }

    fn propagation(&self) -> Option<PropagationKind> {
        match self.spec.kind {
            ModelKind::Features => None,
            ModelKind::Edges(p) | ModelKind::Gnn(p) => Some(p),
        }
    }

    /// Glorot-uniform weights drawn from the run's seeded generator in a
    /// fixed traversal order; biases start at zero.
    pub fn init_params<R: Rng>(&self, rng: &mut R) -> Parameters {
        let hidden = self.hidden_width();
        let layers = self
            .dims
            .iter()
            .map(|&(d_in, d_out)| match self.propagation() {
                None | Some(PropagationKind::Gcn) => LayerParams::Dense(DenseParams {
                    weight: glorot(rng, d_in, d_out),
                    bias: vec![0.0; d_out],
                }),
                Some(PropagationKind::GinSum)
                | Some(PropagationKind::GinMean)
                | Some(PropagationKind::GinMax) => LayerParams::Gin(GinParams {
                    w1: glorot(rng, d_in, hidden),
                    b1: vec![0.0; hidden],
                    w2: glorot(rng, hidden, d_out),
                    b2: vec![0.0; d_out],
                }),
                Some(PropagationKind::SageMean) => LayerParams::Sage(SageParams {
                    w_self: glorot(rng, d_in, d_out),
                    w_neigh: glorot(rng, d_in, d_out),
                    bias: vec![0.0; d_out],
                }),
            })
            .collect();
        Parameters { layers }
    }

    fn model_input(&self, g: &PreparedGraph) -> DenseMatrix {
        match (self.spec.kind, self.spec.edge_input) {
            (ModelKind::Edges(_), EdgeInput::OnesColumn) => {
                DenseMatrix::ones(g.graph.num_nodes(), 1)
            }
            (ModelKind::Edges(_), EdgeInput::OnesMatrix) => {
                DenseMatrix::ones(g.graph.num_nodes(), g.graph.feat_dim())
            }
            _ => g.graph.features().clone(),
        }
    }

    /// Forward pass producing per-node logits and the cache for backward.
    pub fn forward(&self, g: &PreparedGraph, params: &Parameters) -> Result<Trace, ModelError> {
        let last = params.layers.len() - 1;
        let mut acts = Vec::with_capacity(params.layers.len() + 1);
        let mut caches = Vec::with_capacity(params.layers.len());
        acts.push(self.model_input(g));
        for (l, layer) in params.layers.iter().enumerate() {
            let nonlin = l != last;
            let h = acts.last().unwrap();
            let (out, cache) = match (self.propagation(), layer) {
                (None, LayerParams::Dense(p)) => {
                    check_mul("dense_layer", h, &p.weight)?;
                    let mut out = matmul(h, &p.weight);
                    out.add_row_bias(&p.bias);
                    if nonlin {
                        out.relu_inplace();
                    }
                    (out, LayerCache::Plain)
                }
                (Some(PropagationKind::Gcn), LayerParams::Dense(p)) => (
                    gcn_layer_forward(&g.norm_adj, h, p, nonlin)?,
                    LayerCache::Plain,
                ),
                (Some(prop), LayerParams::Gin(p)) if gin_aggregator(prop).is_some() => {
                    let aggr = gin_aggregator(prop).unwrap();
                    check_mul("gin_layer", h, &p.w1)?;
                    let (mut z, argmax) = aggregate_neighbors(&g.graph, h, aggr);
                    for (zv, &hv) in z.data_mut().iter_mut().zip(h.data()) {
                        *zv += hv;
                    }
                    let mut m = matmul(&z, &p.w1);
                    m.add_row_bias(&p.b1);
                    m.relu_inplace();
                    let mut out = matmul(&m, &p.w2);
                    out.add_row_bias(&p.b2);
                    if nonlin {
                        out.relu_inplace();
                    }
                    (out, LayerCache::Gin { z, m, argmax })
                }
                (Some(PropagationKind::SageMean), LayerParams::Sage(p)) => {
                    check_mul("sage_layer", h, &p.w_self)?;
                    let (neigh_mean, _) = aggregate_neighbors(&g.graph, h, Aggregator::Mean);
                    let mut out = matmul(h, &p.w_self);
                    let neigh_part = matmul(&neigh_mean, &p.w_neigh);
                    for (o, &x) in out.data_mut().iter_mut().zip(neigh_part.data()) {
                        *o += x;
                    }
                    out.add_row_bias(&p.bias);
                    if nonlin {
                        out.relu_inplace();
                    }
                    (out, LayerCache::Sage { neigh_mean })
                }
                _ => return Err(ModelError::WrongLayerParams { layer: l }),
            };
            acts.push(out);
            caches.push(cache);
        }
        Ok(Trace { acts, caches })
    }

    /// Accumulates exact gradients for every parameter into `grads`, given
    /// d(loss)/d(logits). Returns nothing else; `trace` must come from a
    /// forward with the same graph and params.
    pub fn backward(
        &self,
        g: &PreparedGraph,
        params: &Parameters,
        trace: &Trace,
        d_logits: &DenseMatrix,
        grads: &mut Parameters,
    ) -> Result<(), ModelError> {
        let last = params.layers.len() - 1;
        let mut d_out = d_logits.clone();
        for l in (0..params.layers.len()).rev() {
            let nonlin = l != last;
            let h_in = &trace.acts[l];
            let h_out = &trace.acts[l + 1];
            if nonlin {
                d_out.relu_backward_mask(h_out);
            }
            d_out = match (&params.layers[l], &mut grads.layers[l], &trace.caches[l]) {
                (LayerParams::Dense(p), LayerParams::Dense(gp), LayerCache::Plain) => {
                    match self.propagation() {
                        None => {
                            // y = h W + b
                            add_into(&mut gp.weight, &matmul_at_b(h_in, &d_out));
                            add_bias(&mut gp.bias, &d_out);
                            matmul_a_bt(&d_out, &p.weight)
                        }
                        Some(PropagationKind::Gcn) => {
                            // y = A (h W) + b with A symmetric
                            let s = spmm(&g.norm_adj, &d_out)?;
                            add_into(&mut gp.weight, &matmul_at_b(h_in, &s));
                            add_bias(&mut gp.bias, &d_out);
                            matmul_a_bt(&s, &p.weight)
                        }
                        _ => return Err(ModelError::WrongLayerParams { layer: l }),
                    }
                }
                (LayerParams::Gin(p), LayerParams::Gin(gp), LayerCache::Gin { z, m, argmax }) => {
                    let aggr = gin_aggregator(self.propagation().unwrap())
                        .ok_or(ModelError::WrongLayerParams { layer: l })?;
                    // out = m W2 + b2, m = relu(z W1 + b1), z = h + aggr(h)
                    add_into(&mut gp.w2, &matmul_at_b(m, &d_out));
                    add_bias(&mut gp.b2, &d_out);
                    let mut d_m = matmul_a_bt(&d_out, &p.w2);
                    d_m.relu_backward_mask(m);
                    add_into(&mut gp.w1, &matmul_at_b(z, &d_m));
                    add_bias(&mut gp.b1, &d_m);
                    let d_z = matmul_a_bt(&d_m, &p.w1);
                    let mut d_h = aggregate_backward(&g.graph, &d_z, aggr, argmax.as_deref());
                    add_into(&mut d_h, &d_z);
                    d_h
                }
                (
                    LayerParams::Sage(p),
                    LayerParams::Sage(gp),
                    LayerCache::Sage { neigh_mean },
                ) => {
                    // y = h W_self + mean(h) W_neigh + b
                    add_into(&mut gp.w_self, &matmul_at_b(h_in, &d_out));
                    add_into(&mut gp.w_neigh, &matmul_at_b(neigh_mean, &d_out));
                    add_bias(&mut gp.bias, &d_out);
                    let d_mean = matmul_a_bt(&d_out, &p.w_neigh);
                    let mut d_h =
                        aggregate_backward(&g.graph, &d_mean, Aggregator::Mean, None);
                    add_into(&mut d_h, &matmul_a_bt(&d_out, &p.w_self));
                    d_h
                }
                _ => return Err(ModelError::WrongLayerParams { layer: l }),
            };
        }
        Ok(())
    }

    /// Graph-level logits: per-graph forward, then sum readout of the node
    /// logits. Traces are returned per graph for the backward pass.
    pub fn forward_graphs(
        &self,
        graphs: &[&PreparedGraph],
        params: &Parameters,
    ) -> Result<(DenseMatrix, Vec<Trace>), ModelError> {
        let mut logits = DenseMatrix::zeros(graphs.len(), self.out_dim);
        let mut traces = Vec::with_capacity(graphs.len());
        for (i, g) in graphs.iter().enumerate() {
            let trace = self.forward(g, params)?;
            let readout = graph_readout(trace.logits())?;
            logits.row_mut(i).copy_from_slice(&readout);
            traces.push(trace);
        }
        Ok((logits, traces))
    }

    pub fn backward_graphs(
        &self,
        graphs: &[&PreparedGraph],
        params: &Parameters,
        traces: &[Trace],
        d_graph_logits: &DenseMatrix,
        grads: &mut Parameters,
    ) -> Result<(), ModelError> {
        for (i, g) in graphs.iter().enumerate() {
            // sum readout broadcasts the graph gradient to every node row
            let n = g.graph.num_nodes();
            let mut d_nodes = DenseMatrix::zeros(n, self.out_dim);
            for v in 0..n {
                d_nodes.row_mut(v).copy_from_slice(d_graph_logits.row(i));
            }
            self.backward(g, params, &traces[i], &d_nodes, grads)?;
        }
        Ok(())
    }
}

fn gin_aggregator(prop: PropagationKind) -> Option<Aggregator> {
    match prop {
        PropagationKind::GinSum => Some(Aggregator::Sum),
        PropagationKind::GinMean => Some(Aggregator::Mean),
        PropagationKind::GinMax => Some(Aggregator::Max),
        _ => None,
    }
}

fn glorot<R: Rng>(rng: &mut R, fan_in: usize, fan_out: usize) -> DenseMatrix {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let data = (0..fan_in * fan_out)
        .map(|_| rng.random_range(-bound..bound))
        .collect();
    DenseMatrix::from_vec(fan_in, fan_out, data)
}

fn add_into(dst: &mut DenseMatrix, src: &DenseMatrix) {
    for (d, &s) in dst.data_mut().iter_mut().zip(src.data()) {
        *d += s;
    }
}

fn add_bias(dst: &mut [f64], d_out: &DenseMatrix) {
    for (d, s) in dst.iter_mut().zip(d_out.column_sums()) {
        *d += s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;

    fn graph(n: usize, edges: &[(usize, usize)], feats: Vec<Vec<f64>>) -> Graph {
        Graph::from_edges(n, edges, DenseMatrix::from_rows(&feats), None).unwrap()
    }

    fn identity_csr(n: usize) -> CsrMatrix {
        CsrMatrix {
            num_rows: n,
            num_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    #[test]
    fn spmm_identity_is_identity() {
        let h = DenseMatrix::from_vec(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let out = spmm(&identity_csr(3), &h).unwrap();
        assert_eq!(out, h);
    }

    #[test]
    fn spmm_two_node_full_graph() {
        // all four coefficients 1/2, H = [[1],[3]] -> [[2],[2]]
        let g = graph(2, &[(0, 1)], vec![vec![0.0], vec![0.0]]);
        let adj = normalized_adjacency(&g);
        let h = DenseMatrix::from_vec(2, 1, vec![1.0, 3.0]);
        let out = spmm(&adj, &h).unwrap();
        assert!((out.get(0, 0) - 2.0).abs() < 1e-15);
        assert!((out.get(1, 0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn spmm_zero_row_yields_zero_output_row() {
        let adj = CsrMatrix {
            num_rows: 2,
            num_cols: 2,
            row_offsets: vec![0, 0, 1],
            col_indices: vec![1],
            values: vec![2.0],
        };
        let h = DenseMatrix::from_vec(2, 2, vec![5.0, 6.0, 7.0, 8.0]);
        let out = spmm(&adj, &h).unwrap();
        assert_eq!(out.row(0), &[0.0, 0.0]);
        assert_eq!(out.row(1), &[14.0, 16.0]);
    }

    #[test]
    fn spmm_shape_mismatch_is_an_error() {
        let h = DenseMatrix::zeros(2, 2);
        assert!(spmm(&identity_csr(3), &h).is_err());
    }

    #[test]
    fn gcn_layer_isolated_node_relu() {
        // norm_adj = I, w = I, bias = 0: ReLU([1, -2]) = [1, 0]
        let p = DenseParams {
            weight: DenseMatrix::from_vec(2, 2, vec![1.0, 0.0, 0.0, 1.0]),
            bias: vec![0.0, 0.0],
        };
        let h = DenseMatrix::from_vec(1, 2, vec![1.0, -2.0]);
        let out = gcn_layer_forward(&identity_csr(1), &h, &p, true).unwrap();
        assert_eq!(out.data(), &[1.0, 0.0]);
        let linear = gcn_layer_forward(&identity_csr(1), &h, &p, false).unwrap();
        assert_eq!(linear.data(), &[1.0, -2.0]);
    }

    #[test]
    fn gin_aggregations_on_star_center() {
        // star: center 0, leaves 1..3 with scalar features 1,2,3
        let g = graph(
            4,
            &[(0, 1), (0, 2), (0, 3)],
            vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]],
        );
        let h = g.features().clone();
        let (sum, _) = aggregate_neighbors(&g, &h, Aggregator::Sum);
        let (mean, _) = aggregate_neighbors(&g, &h, Aggregator::Mean);
        let (max, argmax) = aggregate_neighbors(&g, &h, Aggregator::Max);
        assert_eq!(sum.get(0, 0), 6.0);
        assert_eq!(mean.get(0, 0), 2.0);
        assert_eq!(max.get(0, 0), 3.0);
        assert_eq!(argmax.unwrap()[0], 3);
    }

    #[test]
    fn gin_isolated_node_aggregates_zero() {
        let g = graph(1, &[], vec![vec![2.0]]);
        let p = GinParams {
            w1: DenseMatrix::from_vec(1, 1, vec![1.0]),
            b1: vec![0.0],
            w2: DenseMatrix::from_vec(1, 1, vec![1.0]),
            b2: vec![0.0],
        };
        for aggr in [Aggregator::Sum, Aggregator::Mean, Aggregator::Max] {
            let out = gin_layer_forward(&g, g.features(), &p, aggr, false).unwrap();
            // MLP(h_v + 0) with identity weights
            assert_eq!(out.get(0, 0), 2.0);
        }
    }

    #[test]
    fn sum_equals_mean_for_degree_one() {
        let g = graph(2, &[(0, 1)], vec![vec![5.0], vec![7.0]]);
        let (sum, _) = aggregate_neighbors(&g, g.features(), Aggregator::Sum);
        let (mean, _) = aggregate_neighbors(&g, g.features(), Aggregator::Mean);
        assert_eq!(sum, mean);
    }

    #[test]
    fn max_ties_route_to_lowest_node_id() {
        let g = graph(
            3,
            &[(0, 1), (0, 2)],
            vec![vec![0.0], vec![4.0], vec![4.0]],
        );
        let (_, argmax) = aggregate_neighbors(&g, g.features(), Aggregator::Max);
        assert_eq!(argmax.unwrap()[0], 1);
    }

    #[test]
    fn sage_two_node_edge() {
        // scalars 1 and 3, w_self = w_neigh = [1], bias = 0 -> 4 and 4
        let g = graph(2, &[(0, 1)], vec![vec![1.0], vec![3.0]]);
        let p = SageParams {
            w_self: DenseMatrix::from_vec(1, 1, vec![1.0]),
            w_neigh: DenseMatrix::from_vec(1, 1, vec![1.0]),
            bias: vec![0.0],
        };
        let out = sage_mean_layer_forward(&g, g.features(), &p, false).unwrap();
        assert_eq!(out.get(0, 0), 4.0);
        assert_eq!(out.get(1, 0), 4.0);
    }

    #[test]
    fn sage_isolated_node_uses_self_only() {
        let g = graph(1, &[], vec![vec![-2.0]]);
        let p = SageParams {
            w_self: DenseMatrix::from_vec(1, 1, vec![1.0]),
            w_neigh: DenseMatrix::from_vec(1, 1, vec![100.0]),
            bias: vec![1.0],
        };
        let out = sage_mean_layer_forward(&g, g.features(), &p, true).unwrap();
        // ReLU(-2 + 0 + 1) = 0
        assert_eq!(out.get(0, 0), 0.0);
    }

    #[test]
    fn feature_only_zero_weights_give_zero_logits() {
        let params = Parameters {
            layers: vec![LayerParams::Dense(DenseParams {
                weight: DenseMatrix::zeros(3, 2),
                bias: vec![0.0, 0.0],
            })],
        };
        let x = DenseMatrix::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let out = feature_only_forward(&x, &params).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn feature_only_is_rowwise() {
        let mut rng = seeded(7);
        let spec = ModelSpec::new(ModelKind::Features, TaskKind::Node);
        let model = Model::new(spec, 3, 2);
        let params = model.init_params(&mut rng);
        let x = DenseMatrix::from_vec(2, 3, vec![1.0, 2.0, 3.0, -1.0, 0.5, 2.0]);
        let permuted = DenseMatrix::from_vec(2, 3, vec![-1.0, 0.5, 2.0, 1.0, 2.0, 3.0]);
        let a = feature_only_forward(&x, &params).unwrap();
        let b = feature_only_forward(&permuted, &params).unwrap();
        assert_eq!(a.row(0), b.row(1));
        assert_eq!(a.row(1), b.row(0));
    }

    #[test]
    fn edge_only_ignores_feature_contents() {
        let mut rng = seeded(3);
        let spec = ModelSpec::new(ModelKind::Edges(PropagationKind::GinSum), TaskKind::Node);
        let model = Model::new(spec, 2, 2);
        let params = model.init_params(&mut rng);
        let g1 = graph(3, &[(0, 1), (1, 2)], vec![vec![1.0, 2.0]; 3]);
        let g2 = graph(3, &[(0, 1), (1, 2)], vec![vec![-9.0, 4.5]; 3]);
        let a = edge_only_forward(&g1, &params, PropagationKind::GinSum, EdgeInput::OnesColumn)
            .unwrap();
        let b = edge_only_forward(&g2, &params, PropagationKind::GinSum, EdgeInput::OnesColumn)
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn edge_only_gin_sum_separates_degrees() {
        // path 0-1-2: degree of node 1 is 2, others 1; pre-MLP z = 1 + deg
        let g = graph(3, &[(0, 1), (1, 2)], vec![vec![0.0]; 3]);
        let ones = DenseMatrix::ones(3, 1);
        let (agg, _) = aggregate_neighbors(&g, &ones, Aggregator::Sum);
        assert_eq!(agg.get(0, 0) + 1.0, 2.0);
        assert_eq!(agg.get(1, 0) + 1.0, 3.0);
    }

    #[test]
    fn edge_only_gcn_regular_graph_gives_identical_logits() {
        let mut rng = seeded(11);
        let spec = ModelSpec::new(ModelKind::Edges(PropagationKind::Gcn), TaskKind::Node);
        let model = Model::new(spec, 1, 2);
        let params = model.init_params(&mut rng);
        // 4-cycle is 2-regular
        let g = graph(4, &[(0, 1), (1, 2), (2, 3), (3, 0)], vec![vec![0.0]; 4]);
        let out =
            edge_only_forward(&g, &params, PropagationKind::Gcn, EdgeInput::OnesColumn).unwrap();
        for v in 1..4 {
            for j in 0..2 {
                assert!((out.get(v, j) - out.get(0, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn readout_sums_columns() {
        let h = DenseMatrix::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(graph_readout(&h).unwrap(), vec![4.0, 6.0]);
        let single = DenseMatrix::from_vec(1, 2, vec![9.0, -1.0]);
        assert_eq!(graph_readout(&single).unwrap(), vec![9.0, -1.0]);
        assert!(graph_readout(&DenseMatrix::zeros(0, 2)).is_err());
    }

    #[test]
    fn cross_entropy_uniform_logits_is_ln_c() {
        for c in [2, 3, 7] {
            let logits = DenseMatrix::zeros(4, c);
            let labels = vec![0; 4];
            let (loss, _) = softmax_cross_entropy(&logits, &labels).unwrap();
            assert!((loss - (c as f64).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn cross_entropy_large_margin_loss_vanishes() {
        let logits = DenseMatrix::from_vec(1, 2, vec![200.0, 0.0]);
        let (loss, _) = softmax_cross_entropy(&logits, &[0]).unwrap();
        assert!(loss < 1e-12);
    }

    #[test]
    fn cross_entropy_gradient_rows_sum_to_zero() {
        let logits = DenseMatrix::from_vec(2, 3, vec![0.3, -1.2, 2.0, 0.0, 0.5, -0.5]);
        let (_, d) = softmax_cross_entropy(&logits, &[2, 0]).unwrap();
        for i in 0..2 {
            let s: f64 = d.row(i).iter().sum();
            assert!(s.abs() < 1e-15);
        }
    }

    #[test]
    fn cross_entropy_rejects_bad_labels() {
        let logits = DenseMatrix::zeros(1, 2);
        assert!(matches!(
            softmax_cross_entropy(&logits, &[2]),
            Err(ModelError::LabelOutOfRange { .. })
        ));
    }

    #[test]
    fn model_kind_names_round_trip() {
        for s in [
            "features",
            "gcn",
            "gin-sum",
            "gin-mean",
            "gin-max",
            "sage-mean",
            "edges-gcn",
            "edges-sage-mean",
        ] {
            let kind: ModelKind = s.parse().unwrap();
            assert_eq!(kind.to_string(), s);
        }
        assert!("edges".parse::<ModelKind>().is_err());
        assert!("gat".parse::<ModelKind>().is_err());
    }

    #[test]
    fn hidden_width_rule() {
        let spec = ModelSpec::new(ModelKind::Features, TaskKind::Node);
        assert_eq!(spec.hidden_width(16, 4), 32);
        assert_eq!(spec.hidden_width(1433, 7), 128);
        let overridden = ModelSpec {
            hidden_override: Some(10),
            ..spec
        };
        assert_eq!(overridden.hidden_width(16, 4), 10);
    }

    fn seeded(seed: u64) -> rand_chacha::ChaCha8Rng {
        use rand::SeedableRng;
        rand_chacha::ChaCha8Rng::seed_from_u64(seed)
    }
}
