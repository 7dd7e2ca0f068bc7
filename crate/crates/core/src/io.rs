//! File formats: datasets, run matrices, solvable sets, measure files, and
//! the report CSVs. These formats are the toolkit's interoperability surface;
//! an external training framework integrates by writing a run-matrix file.
//!
//! All JSON is written compactly with a fixed field order and all writes go
//! through a temp file plus atomic rename, so identical inputs produce
//! byte-identical files and no partial output ever lands at the target path.

use crate::dense::DenseMatrix;
use crate::graph::{Graph, GraphTask, NodeTask, Task};
use crate::measures::MeasureReport;
use crate::stats::SolvableSet;
use crate::training::RunMatrix;
use serde::{Deserialize, Serialize};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    WriteFailed {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{path}: {msg}")]
    Schema { path: PathBuf, msg: String },
}

fn schema(path: &Path, msg: impl Into<String>) -> IoError {
    IoError::Schema {
        path: path.to_path_buf(),
        msg: msg.into(),
    }
}

/// Writes via a temp file in the same directory plus atomic rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = tempfile::NamedTempFile::new_in(dir.unwrap_or(Path::new(".")))
        .map_err(|source| IoError::WriteFailed {
            path: path.to_path_buf(),
            source,
        })?;
    tmp.write_all(bytes).map_err(|source| IoError::WriteFailed {
        path: path.to_path_buf(),
        source,
    })?;
    tmp.persist(path).map_err(|e| IoError::WriteFailed {
        path: path.to_path_buf(),
        source: e.error,
    })?;
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let bytes = std::fs::read(path).map_err(|source| IoError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_slice(&bytes).map_err(|source| IoError::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut bytes = serde_json::to_vec(value).map_err(|source| IoError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    bytes.push(b'\n');
    atomic_write(path, &bytes)
}

// ---------------------------------------------------------------------------
// dataset files
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SplitsFile {
    train: Vec<usize>,
    val: Vec<usize>,
    test: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDatasetFile {
    task: String,
    num_nodes: usize,
    num_classes: usize,
    features: Vec<Vec<f64>>,
    edges: Vec<(usize, usize)>,
    labels: Vec<usize>,
    splits: SplitsFile,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphRecordFile {
    num_nodes: usize,
    features: Vec<Vec<f64>>,
    edges: Vec<(usize, usize)>,
    label: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphDatasetFile {
    task: String,
    num_classes: usize,
    graphs: Vec<GraphRecordFile>,
    splits: SplitsFile,
}

fn features_matrix(
    path: &Path,
    rows: &[Vec<f64>],
    num_nodes: usize,
    what: &str,
) -> Result<DenseMatrix, IoError> {
    if rows.len() != num_nodes {
        return Err(schema(
            path,
            format!("{what}: features has {} rows, expected {num_nodes}", rows.len()),
        ));
    }
    let dim = rows.first().map_or(0, Vec::len);
    if dim == 0 {
        return Err(schema(path, format!("{what}: feature rows must be nonempty")));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != dim {
            return Err(schema(
                path,
                format!("{what}: feature row {i} has length {}, expected {dim}", row.len()),
            ));
        }
    }
    Ok(DenseMatrix::from_rows(rows))
}

/// Loads a dataset file into a validated task. Edges are stored once and
/// symmetrized here; self-loops and duplicate edges are rejected.
pub fn load_dataset(path: &Path) -> Result<Task, IoError> {
    let value: serde_json::Value = read_json(path)?;
    let task = value
        .get("task")
        .and_then(|v| v.as_str())
        .ok_or_else(|| schema(path, "missing or non-string top-level `task` key"))?;
    match task {
        "node_classification" => {
            let file: NodeDatasetFile =
                serde_json::from_value(value).map_err(|source| IoError::Json {
                    path: path.to_path_buf(),
                    source,
                })?;
            if file.labels.len() != file.num_nodes {
                return Err(schema(
                    path,
                    format!(
                        "labels has length {}, expected num_nodes = {}",
                        file.labels.len(),
                        file.num_nodes
                    ),
                ));
            }
            if let Some(bad) = file.labels.iter().find(|&&l| l >= file.num_classes) {
                return Err(schema(
                    path,
                    format!("label {bad} outside [0,{})", file.num_classes),
                ));
            }
            let features = features_matrix(path, &file.features, file.num_nodes, "node task")?;
            let graph = Graph::from_edges(file.num_nodes, &file.edges, features, Some(file.labels))
                .map_err(|e| schema(path, e.to_string()))?;
            let task = NodeTask::new(
                graph,
                file.num_classes,
                file.splits.train,
                file.splits.val,
                file.splits.test,
            )
            .map_err(|e| schema(path, e.to_string()))?;
            Ok(Task::Node(task))
        }
        "graph_classification" => {
            let file: GraphDatasetFile =
                serde_json::from_value(value).map_err(|source| IoError::Json {
                    path: path.to_path_buf(),
                    source,
                })?;
            let mut graphs = Vec::with_capacity(file.graphs.len());
            let mut labels = Vec::with_capacity(file.graphs.len());
            for (i, record) in file.graphs.iter().enumerate() {
                let features = features_matrix(
                    path,
                    &record.features,
                    record.num_nodes,
                    &format!("graph {i}"),
                )?;
                let graph = Graph::from_edges(record.num_nodes, &record.edges, features, None)
                    .map_err(|e| schema(path, format!("graph {i}: {e}")))?;
                graphs.push(graph);
                labels.push(record.label);
            }
            let task = GraphTask::new(
                graphs,
                labels,
                file.num_classes,
                file.splits.train,
                file.splits.val,
                file.splits.test,
            )
            .map_err(|e| schema(path, e.to_string()))?;
            Ok(Task::Graph(task))
        }
        other => Err(schema(
            path,
            format!("unknown task `{other}` (expected node_classification or graph_classification)"),
        )),
    }
}

pub fn save_dataset(task: &Task, path: &Path) -> Result<(), IoError> {
    match task {
        Task::Node(t) => {
            let g = t.graph();
            let file = NodeDatasetFile {
                task: "node_classification".into(),
                num_nodes: g.num_nodes(),
                num_classes: t.num_classes(),
                features: (0..g.num_nodes()).map(|v| g.features().row(v).to_vec()).collect(),
                edges: g.edge_list_once(),
                labels: t.labels().to_vec(),
                splits: SplitsFile {
                    train: t.train().to_vec(),
                    val: t.val().to_vec(),
                    test: t.test().to_vec(),
                },
            };
            write_json(path, &file)
        }
        Task::Graph(t) => {
            let file = GraphDatasetFile {
                task: "graph_classification".into(),
                num_classes: t.num_classes(),
                graphs: t
                    .graphs()
                    .iter()
                    .zip(t.graph_labels())
                    .map(|(g, &label)| GraphRecordFile {
                        num_nodes: g.num_nodes(),
                        features: (0..g.num_nodes())
                            .map(|v| g.features().row(v).to_vec())
                            .collect(),
                        edges: g.edge_list_once(),
                        label,
                    })
                    .collect(),
                splits: SplitsFile {
                    train: t.train().to_vec(),
                    val: t.val().to_vec(),
                    test: t.test().to_vec(),
                },
            };
            write_json(path, &file)
        }
    }
}

// ---------------------------------------------------------------------------
// run-matrix files
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunMatrixFile {
    model: String,
    dataset: String,
    num_classes: usize,
    n_runs: usize,
    prediction_ids: Vec<usize>,
    val_accuracy: Vec<f64>,
    /// One string of '0'/'1' per run, one char per prediction.
    correct: Vec<String>,
}

pub fn save_runmatrix(runs: &RunMatrix, path: &Path) -> Result<(), IoError> {
    let file = RunMatrixFile {
        model: runs.model_name.clone(),
        dataset: runs.dataset_name.clone(),
        num_classes: runs.num_classes,
        n_runs: runs.n_runs,
        prediction_ids: runs.prediction_ids.clone(),
        val_accuracy: runs.per_run_val_accuracy.clone(),
        correct: runs
            .correct
            .iter()
            .map(|row| row.iter().map(|&b| if b { '1' } else { '0' }).collect())
            .collect(),
    };
    write_json(path, &file)
}

pub fn load_runmatrix(path: &Path) -> Result<RunMatrix, IoError> {
    let file: RunMatrixFile = read_json(path)?;
    let n_pred = file.prediction_ids.len();
    if file.correct.len() != file.n_runs {
        return Err(schema(
            path,
            format!("correct has {} rows, expected n_runs = {}", file.correct.len(), file.n_runs),
        ));
    }
    if file.val_accuracy.len() != file.n_runs {
        return Err(schema(
            path,
            format!(
                "val_accuracy has length {}, expected n_runs = {}",
                file.val_accuracy.len(),
                file.n_runs
            ),
        ));
    }
    if !file.prediction_ids.windows(2).all(|w| w[0] < w[1]) {
        return Err(schema(path, "prediction_ids must be strictly ascending"));
    }
    let mut correct = Vec::with_capacity(file.n_runs);
    for (r, row) in file.correct.iter().enumerate() {
        if row.len() != n_pred {
            return Err(schema(
                path,
                format!("correct row {r} has length {}, expected {n_pred}", row.len()),
            ));
        }
        let mut bits = Vec::with_capacity(n_pred);
        for (i, ch) in row.chars().enumerate() {
            match ch {
                '0' => bits.push(false),
                '1' => bits.push(true),
                other => {
                    return Err(schema(
                        path,
                        format!("correct row {r}, position {i}: invalid char `{other}`"),
                    ))
                }
            }
        }
        correct.push(bits);
    }
    Ok(RunMatrix {
        model_name: file.model,
        dataset_name: file.dataset,
        num_classes: file.num_classes,
        n_runs: file.n_runs,
        n_predictions: n_pred,
        correct,
        prediction_ids: file.prediction_ids,
        per_run_val_accuracy: file.val_accuracy,
        aborted_runs: Vec::new(),
    })
}

// ---------------------------------------------------------------------------
// solvable-set files
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolvableSetFile {
    dataset: String,
    model: String,
    num_classes: usize,
    n_runs: usize,
    alpha: f64,
    universe_size: usize,
    prediction_ids: Vec<usize>,
}

pub fn save_solvable(set: &SolvableSet, path: &Path) -> Result<(), IoError> {
    let file = SolvableSetFile {
        dataset: set.dataset_name.clone(),
        model: set.model_name.clone(),
        num_classes: set.num_classes,
        n_runs: set.n_runs,
        alpha: set.alpha,
        universe_size: set.universe_size,
        prediction_ids: set.prediction_ids.clone(),
    };
    write_json(path, &file)
}

pub fn load_solvable(path: &Path) -> Result<SolvableSet, IoError> {
    let file: SolvableSetFile = read_json(path)?;
    if !file.prediction_ids.windows(2).all(|w| w[0] < w[1]) {
        return Err(schema(path, "prediction_ids must be strictly ascending"));
    }
    if file.prediction_ids.len() > file.universe_size {
        return Err(schema(
            path,
            format!(
                "{} prediction ids exceed universe_size {}",
                file.prediction_ids.len(),
                file.universe_size
            ),
        ));
    }
    if !(file.alpha > 0.0 && file.alpha < 1.0) {
        return Err(schema(path, format!("alpha {} outside (0,1)", file.alpha)));
    }
    Ok(SolvableSet {
        dataset_name: file.dataset,
        model_name: file.model,
        prediction_ids: file.prediction_ids,
        universe_size: file.universe_size,
        alpha: file.alpha,
        n_runs: file.n_runs,
        num_classes: file.num_classes,
    })
}

// ---------------------------------------------------------------------------
// measure files and report CSVs
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapRowFile {
    pub architecture: String,
    pub feature_retention: Option<f64>,
    pub edge_retention: Option<f64>,
    pub additional: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchIds {
    pub architecture: String,
    pub prediction_ids: Vec<usize>,
}

/// Per-dataset measure results plus the underlying solvable-set ids, so the
/// report stage can pool Jaccard similarities without re-reading run files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureFile {
    pub dataset: String,
    pub alpha: f64,
    pub n_runs: usize,
    pub num_classes: usize,
    pub universe_size: usize,
    pub features: f64,
    pub edges: f64,
    pub e_fande: f64,
    pub fande: f64,
    pub fore: f64,
    pub gnn_best_architecture: String,
    pub gnn_best: f64,
    pub selected_edge_kind: String,
    pub gap: Vec<GapRowFile>,
    pub feature_ids: Vec<usize>,
    pub edge_ids: Vec<usize>,
    pub gnn_ids: Vec<ArchIds>,
}

impl MeasureFile {
    pub fn from_report(
        report: &MeasureReport,
        s_f: &SolvableSet,
        s_e: &SolvableSet,
        gnn_sets: &[(&str, &SolvableSet)],
    ) -> MeasureFile {
        MeasureFile {
            dataset: report.dataset_name.clone(),
            alpha: report.alpha,
            n_runs: report.n_runs,
            num_classes: s_f.num_classes,
            universe_size: s_f.universe_size,
            features: report.features,
            edges: report.edges,
            e_fande: report.expected_fande,
            fande: report.fande,
            fore: report.fore,
            gnn_best_architecture: report.gnn_best.0.clone(),
            gnn_best: report.gnn_best.1,
            selected_edge_kind: report.selected_edge_kind.clone(),
            gap: report
                .gap
                .iter()
                .map(|g| GapRowFile {
                    architecture: g.architecture.clone(),
                    feature_retention: g.feature_retention,
                    edge_retention: g.edge_retention,
                    additional: g.additional,
                })
                .collect(),
            feature_ids: s_f.prediction_ids.clone(),
            edge_ids: s_e.prediction_ids.clone(),
            gnn_ids: gnn_sets
                .iter()
                .map(|(arch, set)| ArchIds {
                    architecture: arch.to_string(),
                    prediction_ids: set.prediction_ids.clone(),
                })
                .collect(),
        }
    }

    /// Rebuilds the solvable set of one architecture for Jaccard pooling.
    pub fn gnn_set(&self, arch_ids: &ArchIds) -> SolvableSet {
        SolvableSet {
            dataset_name: self.dataset.clone(),
            model_name: arch_ids.architecture.clone(),
            prediction_ids: arch_ids.prediction_ids.clone(),
            universe_size: self.universe_size,
            alpha: self.alpha,
            n_runs: self.n_runs,
            num_classes: self.num_classes,
        }
    }
}

pub fn save_measure(file: &MeasureFile, path: &Path) -> Result<(), IoError> {
    write_json(path, file)
}

pub fn load_measure(path: &Path) -> Result<MeasureFile, IoError> {
    read_json(path)
}

/// Numeric CSV cell: 3 decimal places, missing printed as an empty cell.
pub fn fmt_ratio(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{v:.3}"),
        None => String::new(),
    }
}

/// Labeled grid written as CSV: one row per label, one column per name.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvGrid {
    /// Header of the label column, e.g. "architecture".
    pub corner: String,
    pub columns: Vec<String>,
    pub rows: Vec<(String, Vec<Option<f64>>)>,
}

pub fn write_grid_csv(grid: &CsvGrid, path: &Path) -> Result<(), IoError> {
    let mut out = String::new();
    out.push_str(&grid.corner);
    for c in &grid.columns {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for (label, cells) in &grid.rows {
        out.push_str(label);
        for cell in cells {
            out.push(',');
            out.push_str(&fmt_ratio(*cell));
        }
        out.push('\n');
    }
    atomic_write(path, out.as_bytes())
}

/// Table-shaped report rows: dataset,features,edges,e_fande,fande,fore,gnn.
pub fn write_report_csv(rows: &[MeasureFile], path: &Path) -> Result<(), IoError> {
    let mut out = String::from("dataset,features,edges,e_fande,fande,fore,gnn\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.dataset,
            fmt_ratio(Some(row.features)),
            fmt_ratio(Some(row.edges)),
            fmt_ratio(Some(row.e_fande)),
            fmt_ratio(Some(row.fande)),
            fmt_ratio(Some(row.fore)),
            fmt_ratio(Some(row.gnn_best)),
        ));
    }
    atomic_write(path, out.as_bytes())
}

/// GaP grids (architecture rows x dataset columns) assembled from measure
/// files; architecture order follows first appearance across the inputs.
pub fn gap_grids(rows: &[MeasureFile]) -> [CsvGrid; 3] {
    let columns: Vec<String> = rows.iter().map(|r| r.dataset.clone()).collect();
    let mut archs: Vec<String> = Vec::new();
    for row in rows {
        for gap in &row.gap {
            if !archs.contains(&gap.architecture) {
                archs.push(gap.architecture.clone());
            }
        }
    }
    let cell = |arch: &str, row: &MeasureFile, pick: fn(&GapRowFile) -> Option<f64>| {
        row.gap
            .iter()
            .find(|g| g.architecture == arch)
            .and_then(pick)
    };
    let build = |pick: fn(&GapRowFile) -> Option<f64>| CsvGrid {
        corner: "architecture".into(),
        columns: columns.clone(),
        rows: archs
            .iter()
            .map(|arch| {
                (
                    arch.clone(),
                    rows.iter().map(|r| cell(arch, r, pick)).collect(),
                )
            })
            .collect(),
    };
    [
        build(|g| g.feature_retention),
        build(|g| g.edge_retention),
        build(|g| g.additional),
    ]
}

/// Writes the aggregate report: the Table-shaped CSV, the three GaP grids,
/// and the architecture-by-architecture Jaccard grid.
pub fn emit_report(
    rows: &[MeasureFile],
    jaccard: &CsvGrid,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, IoError> {
    std::fs::create_dir_all(out_dir).map_err(|source| IoError::WriteFailed {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let [feature_ret, edge_ret, additional] = gap_grids(rows);
    let paths = [
        ("report.csv", None),
        ("gap_feature_retention.csv", Some(&feature_ret)),
        ("gap_edge_retention.csv", Some(&edge_ret)),
        ("gap_additional.csv", Some(&additional)),
        ("jaccard.csv", Some(jaccard)),
    ];
    let mut written = Vec::new();
    for (name, grid) in paths {
        let path = out_dir.join(name);
        match grid {
            None => write_report_csv(rows, &path)?,
            Some(g) => write_grid_csv(g, &path)?,
        }
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, SynthKind, SynthScale, SynthSpec};

    fn tmpdir() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    fn synth_task(kind: SynthKind, scale: SynthScale, seed: u64) -> Task {
        generate(&SynthSpec {
            kind,
            scale,
            num_classes: 2,
            feat_dim: 3,
            noise_rate: 0.1,
            seed,
        })
        .unwrap()
    }

    #[test]
    fn dataset_round_trip_node() {
        let dir = tmpdir();
        let path = dir.path().join("ds.json");
        let task = synth_task(SynthKind::Feature, SynthScale::Nodes { num_nodes: 30 }, 5);
        save_dataset(&task, &path).unwrap();
        let loaded = load_dataset(&path).unwrap();
        assert_eq!(task, loaded);
    }

    #[test]
    fn dataset_round_trip_graph() {
        let dir = tmpdir();
        let path = dir.path().join("ds.json");
        let task = synth_task(
            SynthKind::Structure,
            SynthScale::Graphs {
                num_graphs: 12,
                nodes_per_graph: 8,
            },
            5,
        );
        save_dataset(&task, &path).unwrap();
        let loaded = load_dataset(&path).unwrap();
        assert_eq!(task, loaded);
    }

    #[test]
    fn dataset_save_is_byte_stable() {
        let dir = tmpdir();
        let a = dir.path().join("a.json");
        let b = dir.path().join("b.json");
        let task = synth_task(SynthKind::Feature, SynthScale::Nodes { num_nodes: 30 }, 7);
        save_dataset(&task, &a).unwrap();
        save_dataset(&task, &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn unknown_top_level_key_is_rejected() {
        let dir = tmpdir();
        let path = dir.path().join("bad.json");
        std::fs::write(
            &path,
            r#"{"task":"node_classification","num_nodes":1,"num_classes":2,
                "features":[[1.0]],"edges":[],"labels":[0],
                "splits":{"train":[],"val":[],"test":[0]},"extra":1}"#,
        )
        .unwrap();
        let err = load_dataset(&path).unwrap_err().to_string();
        assert!(err.contains("extra"), "{err}");
    }

    #[test]
    fn self_loop_in_dataset_is_rejected() {
        let dir = tmpdir();
        let path = dir.path().join("bad.json");
        std::fs::write(
            &path,
            r#"{"task":"node_classification","num_nodes":2,"num_classes":2,
                "features":[[1.0],[2.0]],"edges":[[0,0]],"labels":[0,1],
                "splits":{"train":[0],"val":[],"test":[1]}}"#,
        )
        .unwrap();
        let err = load_dataset(&path).unwrap_err().to_string();
        assert!(err.contains("self-loop"), "{err}");
    }

    fn sample_runmatrix() -> RunMatrix {
        RunMatrix {
            model_name: "features".into(),
            dataset_name: "toy".into(),
            num_classes: 3,
            n_runs: 2,
            n_predictions: 3,
            correct: vec![vec![true, false, true], vec![false, false, true]],
            prediction_ids: vec![2, 5, 9],
            per_run_val_accuracy: vec![0.75, 0.5],
            aborted_runs: vec![],
        }
    }

    #[test]
    fn runmatrix_round_trip() {
        let dir = tmpdir();
        let path = dir.path().join("runs.json");
        let rm = sample_runmatrix();
        save_runmatrix(&rm, &path).unwrap();
        let loaded = load_runmatrix(&path).unwrap();
        assert_eq!(rm, loaded);
        // load-save-load is identity on bytes
        let path2 = dir.path().join("runs2.json");
        save_runmatrix(&loaded, &path2).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
    }

    #[test]
    fn runmatrix_wrong_row_length_names_the_row() {
        let dir = tmpdir();
        let path = dir.path().join("runs.json");
        std::fs::write(
            &path,
            r#"{"model":"features","dataset":"toy","num_classes":2,"n_runs":2,
                "prediction_ids":[0,1],"val_accuracy":[0.5,0.5],
                "correct":["10","1"]}"#,
        )
        .unwrap();
        let err = load_runmatrix(&path).unwrap_err().to_string();
        assert!(err.contains("row 1"), "{err}");
    }

    #[test]
    fn runmatrix_bad_char_is_rejected() {
        let dir = tmpdir();
        let path = dir.path().join("runs.json");
        std::fs::write(
            &path,
            r#"{"model":"features","dataset":"toy","num_classes":2,"n_runs":1,
                "prediction_ids":[0,1],"val_accuracy":[0.5],"correct":["1x"]}"#,
        )
        .unwrap();
        let err = load_runmatrix(&path).unwrap_err().to_string();
        assert!(err.contains('x'), "{err}");
    }

    #[test]
    fn solvable_round_trip() {
        let dir = tmpdir();
        let path = dir.path().join("set.json");
        let set = SolvableSet {
            dataset_name: "toy".into(),
            model_name: "edges-gcn".into(),
            prediction_ids: vec![1, 4, 6],
            universe_size: 10,
            alpha: 0.001,
            n_runs: 100,
            num_classes: 4,
        };
        save_solvable(&set, &path).unwrap();
        assert_eq!(load_solvable(&path).unwrap(), set);
    }

    #[test]
    fn report_csv_formats_three_decimals() {
        let dir = tmpdir();
        let path = dir.path().join("report.csv");
        let row = MeasureFile {
            dataset: "cora-like".into(),
            alpha: 0.001,
            n_runs: 100,
            num_classes: 7,
            universe_size: 1000,
            features: 0.586,
            edges: 0.346,
            e_fande: 0.586 * 0.346,
            fande: 0.192,
            fore: 0.586 + 0.346 - 0.192,
            gnn_best_architecture: "gcn".into(),
            gnn_best: 0.828,
            selected_edge_kind: "gcn".into(),
            gap: vec![],
            feature_ids: vec![],
            edge_ids: vec![],
            gnn_ids: vec![],
        };
        write_report_csv(&[row], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "dataset,features,edges,e_fande,fande,fore,gnn");
        assert_eq!(
            lines.next().unwrap(),
            "cora-like,0.586,0.346,0.203,0.192,0.740,0.828"
        );
    }

    #[test]
    fn grid_csv_prints_missing_as_empty_cell() {
        let dir = tmpdir();
        let path = dir.path().join("grid.csv");
        let grid = CsvGrid {
            corner: "architecture".into(),
            columns: vec!["a".into(), "b".into()],
            rows: vec![("gcn".into(), vec![Some(0.6464), None])],
        };
        write_grid_csv(&grid, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "architecture,a,b\ngcn,0.646,\n");
    }

    #[test]
    fn measure_file_round_trip() {
        let dir = tmpdir();
        let path = dir.path().join("measure.json");
        let mf = MeasureFile {
            dataset: "toy".into(),
            alpha: 0.001,
            n_runs: 100,
            num_classes: 2,
            universe_size: 4,
            features: 0.5,
            edges: 0.25,
            e_fande: 0.125,
            fande: 0.25,
            fore: 0.5,
            gnn_best_architecture: "sage-mean".into(),
            gnn_best: 0.75,
            selected_edge_kind: "gin-sum".into(),
            gap: vec![GapRowFile {
                architecture: "sage-mean".into(),
                feature_retention: Some(1.0),
                edge_retention: None,
                additional: Some(0.5),
            }],
            feature_ids: vec![0, 1],
            edge_ids: vec![1],
            gnn_ids: vec![ArchIds {
                architecture: "sage-mean".into(),
                prediction_ids: vec![0, 1, 2],
            }],
        };
        save_measure(&mf, &path).unwrap();
        assert_eq!(load_measure(&path).unwrap(), mf);
    }
}
