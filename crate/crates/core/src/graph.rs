//! Graph and task representations shared by every stage of the pipeline.
//!
//! Graphs are stored as undirected CSR adjacency (rows sorted ascending, no
//! self-loops, no duplicates) plus a dense node-feature matrix. All types are
//! immutable after construction and safe to share across worker threads.

use crate::dense::DenseMatrix;
use thiserror::Error;

/// Sparse matrix in CSR form with real coefficients, e.g. the normalized
/// adjacency used by GCN propagation.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub num_rows: usize,
    pub num_cols: usize,
    pub row_offsets: Vec<usize>,
    pub col_indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }
}

/// Undirected graph: CSR adjacency, node features, optional node labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    num_nodes: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    features: DenseMatrix,
    node_labels: Option<Vec<usize>>,
}

/// One structural defect found by [`validate`]. Violations are data, not
/// failures: validate never aborts on malformed input.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("row_offsets has length {actual}, expected num_nodes + 1 = {expected}")]
    OffsetsLength { expected: usize, actual: usize },
    #[error("nonmonotone offsets at row {row}")]
    NonmonotoneOffsets { row: usize },
    #[error("row_offsets ends at {last} but col_indices has length {nnz}")]
    OffsetsEndMismatch { last: usize, nnz: usize },
    #[error("column index {col} out of range in row {row}")]
    ColIndexOutOfRange { row: usize, col: usize },
    #[error("row {row} is not strictly sorted (duplicate or unordered neighbor)")]
    RowNotSorted { row: usize },
    #[error("self-loop stored at node {node}")]
    SelfLoop { node: usize },
    #[error("asymmetric: edge ({u},{v}) present but ({v},{u}) absent")]
    Asymmetric { u: usize, v: usize },
    #[error("features have {actual} rows, expected {expected}")]
    FeatureRowCount { expected: usize, actual: usize },
    #[error("non-finite feature at ({row},{col})")]
    NonFiniteFeature { row: usize, col: usize },
    #[error("node_labels has length {actual}, expected {expected}")]
    LabelsLength { expected: usize, actual: usize },
}

#[derive(Debug, Error)]
pub enum TaskError {
    #[error("graph is invalid: {0}")]
    InvalidGraph(Violation),
    #[error("edge ({u},{v}) references a node >= num_nodes ({num_nodes})")]
    EdgeOutOfRange { u: usize, v: usize, num_nodes: usize },
    #[error("self-loop ({node},{node}) is not allowed in input edges")]
    InputSelfLoop { node: usize },
    #[error("duplicate input edge ({u},{v})")]
    DuplicateEdge { u: usize, v: usize },
    #[error("num_classes must be >= 2, got {0}")]
    TooFewClasses(usize),
    #[error("splits are not disjoint: id {id} appears twice")]
    OverlappingSplits { id: usize },
    #[error("split id {id} out of range ({len} available)")]
    SplitOutOfRange { id: usize, len: usize },
    #[error("{split} node {id} has label {label}, outside [0,{num_classes})")]
    LabelOutOfRange {
        split: &'static str,
        id: usize,
        label: usize,
        num_classes: usize,
    },
    #[error("{split} node {id} has no label")]
    MissingLabel { split: &'static str, id: usize },
    #[error("graph_labels has length {actual}, expected {expected}")]
    GraphLabelsLength { expected: usize, actual: usize },
    #[error("no predictions: the test split is empty")]
    NoPredictions,
}

impl Graph {
    /// Builds a graph from undirected input edges. Directed input is
    /// mirrored; rows are sorted; self-loops and duplicates are rejected.
    pub fn from_edges(
        num_nodes: usize,
        edges: &[(usize, usize)],
        features: DenseMatrix,
        node_labels: Option<Vec<usize>>,
    ) -> Result<Self, TaskError> {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); num_nodes];
        for &(u, v) in edges {
            if u >= num_nodes || v >= num_nodes {
                return Err(TaskError::EdgeOutOfRange { u, v, num_nodes });
            }
            if u == v {
                return Err(TaskError::InputSelfLoop { node: u });
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut row_offsets = Vec::with_capacity(num_nodes + 1);
        let mut col_indices = Vec::new();
        row_offsets.push(0);
        for (u, mut row) in adj.into_iter().enumerate() {
            row.sort_unstable();
            for pair in row.windows(2) {
                if pair[0] == pair[1] {
                    return Err(TaskError::DuplicateEdge { u, v: pair[0] });
                }
            }
            col_indices.extend_from_slice(&row);
            row_offsets.push(col_indices.len());
        }
        let graph = Self {
            num_nodes,
            row_offsets,
            col_indices,
            features,
            node_labels,
        };
        if let Some(v) = validate(&graph).into_iter().next() {
            return Err(TaskError::InvalidGraph(v));
        }
        Ok(graph)
    }

    /// Assembles a graph from raw CSR parts without any checking. Intended
    /// for tests and for [`validate`], which must accept malformed input.
    pub fn from_raw_parts(
        num_nodes: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        features: DenseMatrix,
        node_labels: Option<Vec<usize>>,
    ) -> Self {
        Self {
            num_nodes,
            row_offsets,
            col_indices,
            features,
            node_labels,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.col_indices.len() / 2
    }

    pub fn feat_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn features(&self) -> &DenseMatrix {
        &self.features
    }

    pub fn node_labels(&self) -> Option<&[usize]> {
        self.node_labels.as_deref()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.row_offsets[v + 1] - self.row_offsets[v]
    }

    /// Neighbor ids of `v`, sorted ascending.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.col_indices[self.row_offsets[v]..self.row_offsets[v + 1]]
    }

    /// Undirected edge list with each edge stored once as (u,v), u < v.
    pub fn edge_list_once(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.num_edges());
        for u in 0..self.num_nodes {
            for &v in self.neighbors(u) {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }
}

/// Checks every structural invariant and returns all violations found.
/// An empty list means the graph is valid.
pub fn validate(graph: &Graph) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = graph.num_nodes;
    let offsets = &graph.row_offsets;
    let cols = &graph.col_indices;

    if offsets.len() != n + 1 {
        out.push(Violation::OffsetsLength {
            expected: n + 1,
            actual: offsets.len(),
        });
        // offsets unusable; structural checks below would index out of range
        check_features(graph, &mut out);
        return out;
    }
    let mut monotone = true;
    for row in 0..n {
        if offsets[row + 1] < offsets[row] {
            out.push(Violation::NonmonotoneOffsets { row });
            monotone = false;
        }
    }
    if *offsets.last().unwrap() != cols.len() {
        out.push(Violation::OffsetsEndMismatch {
            last: *offsets.last().unwrap(),
            nnz: cols.len(),
        });
        monotone = false;
    }
    if monotone {
        for row in 0..n {
            let slice = &cols[offsets[row]..offsets[row + 1]];
            let mut sorted = true;
            for pair in slice.windows(2) {
                if pair[0] >= pair[1] {
                    sorted = false;
                }
            }
            if !sorted {
                out.push(Violation::RowNotSorted { row });
            }
            for &c in slice {
                if c >= n {
                    out.push(Violation::ColIndexOutOfRange { row, col: c });
                } else if c == row {
                    out.push(Violation::SelfLoop { node: row });
                } else if sorted && cols[offsets[c]..offsets[c + 1]].binary_search(&row).is_err() {
                    out.push(Violation::Asymmetric { u: row, v: c });
                }
            }
        }
    }
    check_features(graph, &mut out);
    out
}

fn check_features(graph: &Graph, out: &mut Vec<Violation>) {
    if graph.features.rows() != graph.num_nodes {
        out.push(Violation::FeatureRowCount {
            expected: graph.num_nodes,
            actual: graph.features.rows(),
        });
    }
    for i in 0..graph.features.rows() {
        for (j, &v) in graph.features.row(i).iter().enumerate() {
            if !v.is_finite() {
                out.push(Violation::NonFiniteFeature { row: i, col: j });
            }
        }
    }
    if let Some(labels) = &graph.node_labels {
        if labels.len() != graph.num_nodes {
            out.push(Violation::LabelsLength {
                expected: graph.num_nodes,
                actual: labels.len(),
            });
        }
    }
}

/// D^(-1/2) (A+I) D^(-1/2): self-loops added, degrees taken from A+I,
/// coefficient (u,v) = 1/sqrt(d_u * d_v). Defined for every valid graph
/// since the self-loop guarantees d >= 1.
pub fn normalized_adjacency(graph: &Graph) -> CsrMatrix {
    let n = graph.num_nodes;
    let inv_sqrt_deg: Vec<f64> = (0..n)
        .map(|v| 1.0 / ((graph.degree(v) + 1) as f64).sqrt())
        .collect();
    let mut row_offsets = Vec::with_capacity(n + 1);
    let mut col_indices = Vec::with_capacity(graph.col_indices.len() + n);
    let mut values = Vec::with_capacity(graph.col_indices.len() + n);
    row_offsets.push(0);
    for u in 0..n {
        let mut self_written = false;
        for &v in graph.neighbors(u) {
            if !self_written && v > u {
                col_indices.push(u);
                values.push(inv_sqrt_deg[u] * inv_sqrt_deg[u]);
                self_written = true;
            }
            col_indices.push(v);
            values.push(inv_sqrt_deg[u] * inv_sqrt_deg[v]);
        }
        if !self_written {
            col_indices.push(u);
            values.push(inv_sqrt_deg[u] * inv_sqrt_deg[u]);
        }
        row_offsets.push(col_indices.len());
    }
    CsrMatrix {
        num_rows: n,
        num_cols: n,
        row_offsets,
        col_indices,
        values,
    }
}

/// Transductive node classification: one partially labeled graph plus a
/// fixed train/val/test split over node ids.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeTask {
    graph: Graph,
    num_classes: usize,
    train: Vec<usize>,
    val: Vec<usize>,
    test: Vec<usize>,
}

impl NodeTask {
    pub fn new(
        graph: Graph,
        num_classes: usize,
        mut train: Vec<usize>,
        mut val: Vec<usize>,
        mut test: Vec<usize>,
    ) -> Result<Self, TaskError> {
        if let Some(v) = validate(&graph).into_iter().next() {
            return Err(TaskError::InvalidGraph(v));
        }
        if num_classes < 2 {
            return Err(TaskError::TooFewClasses(num_classes));
        }
        check_splits(
            &[&train, &val, &test],
            graph.num_nodes(),
            |id, split| match graph.node_labels() {
                None => Err(TaskError::MissingLabel { split, id }),
                Some(labels) if labels[id] >= num_classes => Err(TaskError::LabelOutOfRange {
                    split,
                    id,
                    label: labels[id],
                    num_classes,
                }),
                Some(_) => Ok(()),
            },
        )?;
        if test.is_empty() {
            return Err(TaskError::NoPredictions);
        }
        train.sort_unstable();
        val.sort_unstable();
        test.sort_unstable();
        Ok(Self {
            graph,
            num_classes,
            train,
            val,
            test,
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn train(&self) -> &[usize] {
        &self.train
    }

    pub fn val(&self) -> &[usize] {
        &self.val
    }

    pub fn test(&self) -> &[usize] {
        &self.test
    }

    pub fn labels(&self) -> &[usize] {
        self.graph.node_labels().expect("checked at construction")
    }
}

/// Inductive graph classification: a labeled graph collection plus a fixed
/// train/val/test split over graph indices.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphTask {
    graphs: Vec<Graph>,
    graph_labels: Vec<usize>,
    num_classes: usize,
    train: Vec<usize>,
    val: Vec<usize>,
    test: Vec<usize>,
}

impl GraphTask {
    pub fn new(
        graphs: Vec<Graph>,
        graph_labels: Vec<usize>,
        num_classes: usize,
        mut train: Vec<usize>,
        mut val: Vec<usize>,
        mut test: Vec<usize>,
    ) -> Result<Self, TaskError> {
        if num_classes < 2 {
            return Err(TaskError::TooFewClasses(num_classes));
        }
        if graph_labels.len() != graphs.len() {
            return Err(TaskError::GraphLabelsLength {
                expected: graphs.len(),
                actual: graph_labels.len(),
            });
        }
        for g in &graphs {
            if let Some(v) = validate(g).into_iter().next() {
                return Err(TaskError::InvalidGraph(v));
            }
        }
        check_splits(&[&train, &val, &test], graphs.len(), |id, split| {
            if graph_labels[id] >= num_classes {
                Err(TaskError::LabelOutOfRange {
                    split,
                    id,
                    label: graph_labels[id],
                    num_classes,
                })
            } else {
                Ok(())
            }
        })?;
        if test.is_empty() {
            return Err(TaskError::NoPredictions);
        }
        train.sort_unstable();
        val.sort_unstable();
        test.sort_unstable();
        Ok(Self {
            graphs,
            graph_labels,
            num_classes,
            train,
            val,
            test,
        })
    }

    pub fn graphs(&self) -> &[Graph] {
        &self.graphs
    }

    pub fn graph_labels(&self) -> &[usize] {
        &self.graph_labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn train(&self) -> &[usize] {
        &self.train
    }

    pub fn val(&self) -> &[usize] {
        &self.val
    }

    pub fn test(&self) -> &[usize] {
        &self.test
    }
}

fn check_splits(
    splits: &[&Vec<usize>; 3],
    len: usize,
    check_label: impl Fn(usize, &'static str) -> Result<(), TaskError>,
) -> Result<(), TaskError> {
    const NAMES: [&str; 3] = ["train", "val", "test"];
    let mut seen = vec![false; len];
    for (split, name) in splits.iter().zip(NAMES) {
        for &id in split.iter() {
            if id >= len {
                return Err(TaskError::SplitOutOfRange { id, len });
            }
            if seen[id] {
                return Err(TaskError::OverlappingSplits { id });
            }
            seen[id] = true;
            check_label(id, name)?;
        }
    }
    Ok(())
}

/// Either task kind; the unit the training harness and file formats accept.
#[derive(Debug, Clone, PartialEq)]
pub enum Task {
    Node(NodeTask),
    Graph(GraphTask),
}

impl Task {
    pub fn num_classes(&self) -> usize {
        match self {
            Task::Node(t) => t.num_classes(),
            Task::Graph(t) => t.num_classes(),
        }
    }

    /// Input feature dimension seen by a model trained on this task.
    pub fn feat_dim(&self) -> usize {
        match self {
            Task::Node(t) => t.graph().feat_dim(),
            Task::Graph(t) => t.graphs().first().map_or(0, Graph::feat_dim),
        }
    }
}

/// The ordered universe of predictions P: test-set node ids or test-set
/// graph indices, ascending. Stable for a given task file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictionUniverse {
    pub ids: Vec<usize>,
    pub num_classes: usize,
}

impl PredictionUniverse {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Test-set ids in ascending order; errors if the test set is empty.
pub fn prediction_universe(task: &Task) -> Result<PredictionUniverse, TaskError> {
    let (ids, num_classes) = match task {
        Task::Node(t) => (t.test().to_vec(), t.num_classes()),
        Task::Graph(t) => (t.test().to_vec(), t.num_classes()),
    };
    if ids.is_empty() {
        return Err(TaskError::NoPredictions);
    }
    Ok(PredictionUniverse { ids, num_classes })
}
