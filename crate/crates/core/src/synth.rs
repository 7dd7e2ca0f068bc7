//! Seeded synthetic tasks with oracle-known solvability structure.
//!
//! Three node-level kinds, mirrored at graph level:
//!
//! - `feature`: labels are a linear threshold function of the features
//!   (margin-separated score buckets); edges are a label-agnostic regular
//!   random graph, so structure carries no label information.
//! - `structure`: labels are quantile buckets of node degree; features are
//!   pure noise independent of the label.
//! - `joint`: each node carries a hidden bit in its features and the label
//!   is XOR(bit, majority bit of the neighbors). All (bit, majority) cells
//!   are exactly balanced, globally and per split, so neither the feature
//!   view nor the edge view alone carries any label signal, while a >= 2
//!   layer message-passing model can represent the rule.
//!
//! Label noise permutes labels among a randomly chosen subset of examples,
//! which corrupts round(noise_rate * n) labels while preserving class counts
//! exactly, so the balance invariant holds at every noise level.

use crate::dense::DenseMatrix;
use crate::graph::{Graph, GraphTask, NodeTask, Task, TaskError};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::collections::HashSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth spec: {0}")]
    InvalidSpec(String),
    #[error("graph construction did not converge to a simple graph")]
    GraphConstruction,
    #[error(transparent)]
    Task(#[from] TaskError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    Feature,
    Structure,
    Joint,
}

impl SynthKind {
    pub fn name(self) -> &'static str {
        match self {
            SynthKind::Feature => "feature",
            SynthKind::Structure => "structure",
            SynthKind::Joint => "joint",
        }
    }
}

impl std::str::FromStr for SynthKind {
    type Err = SynthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "feature" => Ok(SynthKind::Feature),
            "structure" => Ok(SynthKind::Structure),
            "joint" => Ok(SynthKind::Joint),
            other => Err(SynthError::InvalidSpec(format!(
                "unknown kind `{other}` (expected feature|structure|joint)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthScale {
    Nodes { num_nodes: usize },
    Graphs { num_graphs: usize, nodes_per_graph: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub kind: SynthKind,
    pub scale: SynthScale,
    pub num_classes: usize,
    pub feat_dim: usize,
    pub noise_rate: f64,
    pub seed: u64,
}

/// Degree of the regular random graphs used by the feature and joint kinds.
/// Odd, so neighbor-bit majorities are never tied; regular, so the edge-only
/// view is structurally uniform.
const REGULAR_DEGREE: usize = 5;
/// Class score centers are spaced this far apart along the label direction.
const CENTER_GAP: f64 = 2.0;
/// Within-class scores spread uniformly over +- WITHIN_SPREAD around the
/// center, leaving a margin of CENTER_GAP - 2 * WITHIN_SPREAD between classes.
const WITHIN_SPREAD: f64 = 0.6;
/// Noise on the hidden-bit feature channel of the joint kind.
const JOINT_BIT_SIGMA: f64 = 0.25;
/// Distinct degree values per bucket in the structure kind.
const DEGREES_PER_BUCKET: usize = 2;
/// Degree offset between consecutive buckets.
const BUCKET_STRIDE: usize = 2;
/// Smallest degree in the structure kind.
const DEGREE_BASE: usize = 1;

pub fn generate(spec: &SynthSpec) -> Result<Task, SynthError> {
    validate_spec(spec)?;
    match spec.scale {
        SynthScale::Nodes { .. } => {
            let task = match spec.kind {
                SynthKind::Feature => gen_feature_task(spec)?,
                SynthKind::Structure => gen_structure_task(spec)?,
                SynthKind::Joint => gen_joint_task(spec)?,
            };
            Ok(Task::Node(task))
        }
        SynthScale::Graphs { .. } => Ok(Task::Graph(gen_graph_task(spec)?)),
    }
}

fn validate_spec(spec: &SynthSpec) -> Result<(), SynthError> {
    let err = |msg: String| Err(SynthError::InvalidSpec(msg));
    if spec.num_classes < 2 {
        return err(format!("num_classes must be >= 2, got {}", spec.num_classes));
    }
    if spec.feat_dim < 1 {
        return err("feat_dim must be >= 1".into());
    }
    if !(0.0..0.5).contains(&spec.noise_rate) {
        return err(format!(
            "noise_rate must lie in [0, 0.5), got {}",
            spec.noise_rate
        ));
    }
    match spec.scale {
        SynthScale::Nodes { num_nodes } => {
            if num_nodes < 5 * spec.num_classes {
                return err(format!(
                    "num_nodes must be >= 5 * num_classes = {}",
                    5 * spec.num_classes
                ));
            }
            match spec.kind {
                SynthKind::Feature if num_nodes % 2 != 0 => {
                    err("feature kind needs an even num_nodes (regular pairing)".into())
                }
                SynthKind::Structure
                    if num_nodes
                        < 2 * (DEGREE_BASE
                            + BUCKET_STRIDE * (spec.num_classes - 1)
                            + DEGREES_PER_BUCKET) =>
                {
                    err(format!(
                        "structure kind with {} classes needs num_nodes >= {}",
                        spec.num_classes,
                        2 * (DEGREE_BASE
                            + BUCKET_STRIDE * (spec.num_classes - 1)
                            + DEGREES_PER_BUCKET)
                    ))
                }
                SynthKind::Joint if spec.num_classes != 2 => {
                    err("joint kind is an XOR rule and needs exactly 2 classes".into())
                }
                SynthKind::Joint if num_nodes % 8 != 0 => {
                    err("joint kind needs num_nodes divisible by 8 (balanced cells)".into())
                }
                _ => Ok(()),
            }
        }
        SynthScale::Graphs {
            num_graphs,
            nodes_per_graph,
        } => {
            if num_graphs < 5 * spec.num_classes {
                return err(format!(
                    "num_graphs must be >= 5 * num_classes = {}",
                    5 * spec.num_classes
                ));
            }
            if nodes_per_graph < 2 * spec.num_classes + 1 {
                return err("nodes_per_graph too small for separated edge-count buckets".into());
            }
            if spec.kind == SynthKind::Joint {
                if spec.num_classes != 2 {
                    return err("joint kind is an XOR rule and needs exactly 2 classes".into());
                }
                if num_graphs % 4 != 0 {
                    return err("joint kind needs num_graphs divisible by 4".into());
                }
                if nodes_per_graph < 7 {
                    return err("joint kind needs nodes_per_graph >= 7".into());
                }
            }
            Ok(())
        }
    }
}

/// Node labels from a margin-separated linear threshold function of the
/// features; edges from a label-agnostic regular random graph.
pub fn gen_feature_task(spec: &SynthSpec) -> Result<NodeTask, SynthError> {
    let SynthScale::Nodes { num_nodes: n } = spec.scale else {
        return Err(SynthError::InvalidSpec("feature task needs node scale".into()));
    };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let c = spec.num_classes;
    let mut labels = balanced_labels(n, c, &mut rng);
    let direction = random_unit(spec.feat_dim, &mut rng);
    let features = scored_features(&labels, c, spec.feat_dim, &direction, &mut rng, 0.0);
    let edges = regular_graph(n, REGULAR_DEGREE, &mut rng)?;
    corrupt_labels(&mut labels, spec.noise_rate, &mut rng);
    let (train, val, test) = stratified_split(&labels, &mut rng);
    let graph = Graph::from_edges(n, &edges, features, Some(labels))?;
    Ok(NodeTask::new(graph, c, train, val, test)?)
}

/// Node labels = quantile bucket of node degree; features pure noise.
///
/// Bucket b covers the DEGREES_PER_BUCKET degree values starting at
/// DEGREE_BASE + BUCKET_STRIDE * b, with equal counts per value, so buckets
/// are exactly the degree quantiles. Degrees stay small to keep the
/// activation scale of sum-aggregating models tame, and the within-bucket
/// spread keeps validation accuracy improving in small steps instead of
/// whole-bucket jumps (which a patience-based early stopper would cut off at
/// its first plateau).
pub fn gen_structure_task(spec: &SynthSpec) -> Result<NodeTask, SynthError> {
    let SynthScale::Nodes { num_nodes: n } = spec.scale else {
        return Err(SynthError::InvalidSpec("structure task needs node scale".into()));
    };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let c = spec.num_classes;
    let mut labels = balanced_labels(n, c, &mut rng);
    let mut within_bucket_rank = vec![0usize; c];
    let mut degrees = vec![0usize; n];
    for (v, &y) in labels.iter().enumerate() {
        let atom = within_bucket_rank[y] % DEGREES_PER_BUCKET;
        within_bucket_rank[y] += 1;
        degrees[v] = DEGREE_BASE + BUCKET_STRIDE * y + atom;
    }
    if degrees.iter().sum::<usize>() % 2 != 0 {
        // make the stub count even without leaving the top bucket
        let top = labels.iter().position(|&y| y == c - 1).expect("balanced");
        degrees[top] += 1;
    }
    let edges = configuration_graph(&degrees, &mut rng)?;
    let features = noise_features(n, spec.feat_dim, &mut rng);
    corrupt_labels(&mut labels, spec.noise_rate, &mut rng);
    let (train, val, test) = stratified_split(&labels, &mut rng);
    let graph = Graph::from_edges(n, &edges, features, Some(labels))?;
    Ok(NodeTask::new(graph, c, train, val, test)?)
}

/// Hidden bit per node encoded in the features; label = XOR(bit, neighbor
/// majority bit). Every (bit, majority) cell holds exactly n/4 nodes and the
/// graph is 5-regular, so features alone and structure alone are both
/// chance-level by construction.
pub fn gen_joint_task(spec: &SynthSpec) -> Result<NodeTask, SynthError> {
    let SynthScale::Nodes { num_nodes: n } = spec.scale else {
        return Err(SynthError::InvalidSpec("joint task needs node scale".into()));
    };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (bits, majorities) = balanced_bit_cells(n, &mut rng);
    let edges = joint_graph(&bits, &majorities, &mut rng)?;
    let mut labels: Vec<usize> = bits
        .iter()
        .zip(&majorities)
        .map(|(&b, &m)| (b ^ m) as usize)
        .collect();
    let features = joint_features(&bits, spec.feat_dim, &mut rng);
    corrupt_labels(&mut labels, spec.noise_rate, &mut rng);
    // stratify on (bit, majority) cells so every split stays exactly balanced
    let cells: Vec<usize> = bits
        .iter()
        .zip(&majorities)
        .map(|(&b, &m)| (b as usize) * 2 + m as usize)
        .collect();
    let (train, val, test) = stratified_split(&cells, &mut rng);
    let graph = Graph::from_edges(n, &edges, features, Some(labels))?;
    Ok(NodeTask::new(graph, 2, train, val, test)?)
}

/// Graph-level mirror of the three kinds: label from the mean feature score,
/// from the edge-count bucket, or from the XOR of both bits.
pub fn gen_graph_task(spec: &SynthSpec) -> Result<GraphTask, SynthError> {
    let SynthScale::Graphs {
        num_graphs,
        nodes_per_graph: m,
    } = spec.scale
    else {
        return Err(SynthError::InvalidSpec("graph task needs graph scale".into()));
    };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let c = spec.num_classes;
    let direction = random_unit(spec.feat_dim, &mut rng);

    let (mut labels, feature_bits, structure_bits) = match spec.kind {
        SynthKind::Joint => {
            let (f_bits, s_bits) = balanced_bit_cells(num_graphs, &mut rng);
            let labels = f_bits
                .iter()
                .zip(&s_bits)
                .map(|(&f, &s)| (f ^ s) as usize)
                .collect();
            (labels, Some(f_bits), Some(s_bits))
        }
        _ => (balanced_labels(num_graphs, c, &mut rng), None, None),
    };

    let mut graphs = Vec::with_capacity(num_graphs);
    for g in 0..num_graphs {
        let (features, edges) = match spec.kind {
            SynthKind::Feature => {
                let score = class_center(labels[g], c)
                    + rng.random_range(-WITHIN_SPREAD..WITHIN_SPREAD);
                let features =
                    shifted_features(m, spec.feat_dim, &direction, score, &mut rng);
                let edges = gnp_edges(m, 0.3, &mut rng);
                (features, edges)
            }
            SynthKind::Structure => {
                // bucket y gets (y+1) * m/2 edges; buckets well separated
                let count = (labels[g] + 1) * (m / 2).max(2);
                let edges = fixed_count_edges(m, count, &mut rng)?;
                (noise_features(m, spec.feat_dim, &mut rng), edges)
            }
            SynthKind::Joint => {
                let f = feature_bits.as_ref().unwrap()[g];
                let s = structure_bits.as_ref().unwrap()[g];
                let score = if f { 1.0 } else { -1.0 };
                let features =
                    shifted_features(m, spec.feat_dim, &direction, score, &mut rng);
                let count = if s { 3 * m } else { m };
                let edges = fixed_count_edges(m, count, &mut rng)?;
                (features, edges)
            }
        };
        graphs.push(Graph::from_edges(m, &edges, features, None)?);
    }

    corrupt_labels(&mut labels, spec.noise_rate, &mut rng);
    let strata: Vec<usize> = match (&feature_bits, &structure_bits) {
        (Some(f), Some(s)) => f
            .iter()
            .zip(s)
            .map(|(&a, &b)| (a as usize) * 2 + b as usize)
            .collect(),
        _ => labels.clone(),
    };
    let (train, val, test) = stratified_split(&strata, &mut rng);
    Ok(GraphTask::new(graphs, labels, c, train, val, test)?)
}

// ---------------------------------------------------------------------------
// building blocks
// ---------------------------------------------------------------------------

/// Class ids with counts balanced within +-1, in random node order.
fn balanced_labels(n: usize, c: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut labels = vec![0usize; n];
    for (rank, &node) in order.iter().enumerate() {
        labels[node] = rank % c;
    }
    labels
}

/// Two bit vectors whose four joint cells each hold exactly n/4 items.
fn balanced_bit_cells(n: usize, rng: &mut ChaCha8Rng) -> (Vec<bool>, Vec<bool>) {
    debug_assert_eq!(n % 4, 0);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut first = vec![false; n];
    let mut second = vec![false; n];
    for (rank, &i) in order.iter().enumerate() {
        let cell = rank % 4;
        first[i] = cell >= 2;
        second[i] = cell % 2 == 1;
    }
    (first, second)
}

fn class_center(y: usize, c: usize) -> f64 {
    (y as f64 - (c as f64 - 1.0) / 2.0) * CENTER_GAP
}

fn random_unit(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Gaussian features whose projection onto `direction` is exactly the
/// node's class score: center + uniform within-class offset.
fn scored_features(
    labels: &[usize],
    c: usize,
    dim: usize,
    direction: &[f64],
    rng: &mut ChaCha8Rng,
    extra_spread: f64,
) -> DenseMatrix {
    let n = labels.len();
    let mut out = DenseMatrix::zeros(n, dim);
    for i in 0..n {
        let score = class_center(labels[i], c)
            + rng.random_range(-WITHIN_SPREAD..WITHIN_SPREAD)
            + extra_spread * rng.sample::<f64, _>(StandardNormal);
        let row = out.row_mut(i);
        for v in row.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let proj: f64 = row.iter().zip(direction).map(|(x, w)| x * w).sum();
        for (v, w) in row.iter_mut().zip(direction) {
            *v += (score - proj) * w;
        }
    }
    out
}

/// Gaussian features shifted by `score` along `direction` for every node of
/// one graph (plus small per-node jitter along the same direction).
fn shifted_features(
    m: usize,
    dim: usize,
    direction: &[f64],
    score: f64,
    rng: &mut ChaCha8Rng,
) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(m, dim);
    for i in 0..m {
        let jitter: f64 = rng.sample::<f64, _>(StandardNormal) * 0.3;
        let row = out.row_mut(i);
        for v in row.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        for (v, w) in row.iter_mut().zip(direction) {
            *v += (score + jitter) * w;
        }
    }
    out
}

fn noise_features(n: usize, dim: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let data = (0..n * dim).map(|_| rng.sample(StandardNormal)).collect();
    DenseMatrix::from_vec(n, dim, data)
}

/// Channel 0 carries the hidden bit as +-1 plus small noise; the remaining
/// channels are pure noise.
fn joint_features(bits: &[bool], dim: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let n = bits.len();
    let mut out = DenseMatrix::zeros(n, dim);
    for i in 0..n {
        let row = out.row_mut(i);
        row[0] = if bits[i] { 1.0 } else { -1.0 }
            + JOINT_BIT_SIGMA * rng.sample::<f64, _>(StandardNormal);
        for v in row.iter_mut().skip(1) {
            *v = rng.sample(StandardNormal);
        }
    }
    out
}

/// Permutes the labels of round(noise_rate * n) randomly chosen examples
/// among themselves: corrupts labels while preserving class counts exactly.
fn corrupt_labels(labels: &mut [usize], noise_rate: f64, rng: &mut ChaCha8Rng) {
    let k = (noise_rate * labels.len() as f64).round() as usize;
    if k < 2 {
        return;
    }
    let mut idx: Vec<usize> = (0..labels.len()).collect();
    idx.shuffle(rng);
    idx.truncate(k);
    let mut values: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
    values.shuffle(rng);
    for (&i, v) in idx.iter().zip(values) {
        labels[i] = v;
    }
}

/// 60/20/20 split stratified by the given stratum ids, so per-stratum counts
/// stay balanced within +-1 across splits.
fn stratified_split(
    strata: &[usize],
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    let max = strata.iter().copied().max().unwrap_or(0);
    let mut by_stratum: Vec<Vec<usize>> = vec![Vec::new(); max + 1];
    for (i, &s) in strata.iter().enumerate() {
        by_stratum[s].push(i);
    }
    let (mut train, mut val, mut test) = (Vec::new(), Vec::new(), Vec::new());
    for members in by_stratum.iter_mut() {
        if members.is_empty() {
            continue;
        }
        members.shuffle(rng);
        let len = members.len();
        let n_train = (6 * len + 5) / 10;
        let n_val = (2 * len + 5) / 10;
        for (pos, &id) in members.iter().enumerate() {
            if pos < n_train {
                train.push(id);
            } else if pos < n_train + n_val {
                val.push(id);
            } else {
                test.push(id);
            }
        }
    }
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    (train, val, test)
}

/// Pairs stubs into a simple graph: shuffle, pair consecutively, then repair
/// self-loops and duplicates by random pair swaps. Deterministic given rng.
fn pair_stubs(
    stubs: &[usize],
    rng: &mut ChaCha8Rng,
    forbidden: &HashSet<(usize, usize)>,
) -> Result<Vec<(usize, usize)>, SynthError> {
    debug_assert_eq!(stubs.len() % 2, 0);
    for _attempt in 0..50 {
        let mut order = stubs.to_vec();
        order.shuffle(rng);
        let mut pairs: Vec<(usize, usize)> = order.chunks_exact(2).map(|c| (c[0], c[1])).collect();
        for _sweep in 0..500 {
            let mut seen: HashSet<(usize, usize)> = HashSet::with_capacity(pairs.len());
            let mut bad = Vec::new();
            for (i, &(a, b)) in pairs.iter().enumerate() {
                let key = (a.min(b), a.max(b));
                if a == b || forbidden.contains(&key) || !seen.insert(key) {
                    bad.push(i);
                }
            }
            if bad.is_empty() {
                return Ok(pairs);
            }
            for &i in &bad {
                let j = rng.random_range(0..pairs.len());
                if i == j {
                    continue;
                }
                let (a, b) = pairs[i];
                let (c, d) = pairs[j];
                pairs[i] = (a, d);
                pairs[j] = (c, b);
            }
        }
    }
    Err(SynthError::GraphConstruction)
}

/// Random d-regular simple graph on n nodes (n * d even).
fn regular_graph(
    n: usize,
    d: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(usize, usize)>, SynthError> {
    let stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
    pair_stubs(&stubs, rng, &HashSet::new())
}

/// Configuration-model simple graph with the given degree sequence.
fn configuration_graph(
    degrees: &[usize],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(usize, usize)>, SynthError> {
    let stubs: Vec<usize> = degrees
        .iter()
        .enumerate()
        .flat_map(|(v, &d)| std::iter::repeat_n(v, d))
        .collect();
    pair_stubs(&stubs, rng, &HashSet::new())
}

/// 5-regular graph realizing the target neighbor-bit majorities exactly:
/// a node with majority target m gets 3 neighbors of bit m and 2 of bit !m,
/// built from two intra-group pairings and one cross-group pairing.
fn joint_graph(
    bits: &[bool],
    majorities: &[bool],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(usize, usize)>, SynthError> {
    let n = bits.len();
    let mut intra = [Vec::new(), Vec::new()];
    let mut cross = [Vec::new(), Vec::new()];
    for v in 0..n {
        let g = bits[v] as usize;
        let same = if majorities[v] == bits[v] { 3 } else { 2 };
        for _ in 0..same {
            intra[g].push(v);
        }
        for _ in 0..(REGULAR_DEGREE - same) {
            cross[g].push(v);
        }
    }
    let mut edges = pair_stubs(&intra[0], rng, &HashSet::new())?;
    let taken: HashSet<(usize, usize)> = HashSet::new();
    edges.extend(pair_stubs(&intra[1], rng, &taken)?);
    edges.extend(pair_bipartite(&cross[0], &cross[1], rng)?);
    Ok(edges)
}

/// Pairs two stub lists of equal length across groups without duplicates.
fn pair_bipartite(
    left: &[usize],
    right: &[usize],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(usize, usize)>, SynthError> {
    debug_assert_eq!(left.len(), right.len());
    for _attempt in 0..50 {
        let mut l = left.to_vec();
        let mut r = right.to_vec();
        l.shuffle(rng);
        r.shuffle(rng);
        let mut pairs: Vec<(usize, usize)> = l.iter().copied().zip(r.iter().copied()).collect();
        for _sweep in 0..500 {
            let mut seen: HashSet<(usize, usize)> = HashSet::with_capacity(pairs.len());
            let mut bad = Vec::new();
            for (i, &(a, b)) in pairs.iter().enumerate() {
                if !seen.insert((a, b)) {
                    bad.push(i);
                }
            }
            if bad.is_empty() {
                return Ok(pairs);
            }
            for &i in &bad {
                let j = rng.random_range(0..pairs.len());
                if i == j {
                    continue;
                }
                let (a, b) = pairs[i];
                let (c, d) = pairs[j];
                pairs[i] = (a, d);
                pairs[j] = (c, b);
            }
        }
    }
    Err(SynthError::GraphConstruction)
}

/// Erdos-Renyi edges with probability p, each unordered pair drawn once.
fn gnp_edges(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.random_range(0.0..1.0) < p {
                edges.push((u, v));
            }
        }
    }
    edges
}

/// Exactly `count` distinct edges sampled uniformly over unordered pairs.
fn fixed_count_edges(
    n: usize,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(usize, usize)>, SynthError> {
    let max_pairs = n * (n - 1) / 2;
    if count > max_pairs {
        return Err(SynthError::InvalidSpec(format!(
            "cannot place {count} edges on {n} nodes (max {max_pairs})"
        )));
    }
    let mut chosen = HashSet::with_capacity(count);
    let mut edges = Vec::with_capacity(count);
    while edges.len() < count {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u == v {
            continue;
        }
        let key = (u.min(v), u.max(v));
        if chosen.insert(key) {
            edges.push(key);
        }
    }
    edges.sort_unstable();
    Ok(edges)
}
