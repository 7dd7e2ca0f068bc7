//! Command-line pipeline: generate synthetic datasets, train the model
//! families across seeded runs, derive solvable sets, and emit the measure
//! and report files.
//!
//! Worker-thread count comes from `GNNANATOMY_THREADS` (default: available
//! parallelism); results are identical for any thread count. Every
//! subcommand is pure with respect to its declared inputs and outputs, exits
//! 0 on success, and prints a one-line diagnostic on failure.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use gnnanatomy::io;
use gnnanatomy::measures;
use gnnanatomy::models::{EdgeInput, ModelKind, ModelSpec, PropagationKind};
use gnnanatomy::stats::{solvable_set, SolvableSet};
use gnnanatomy::synth::{generate, SynthKind, SynthScale, SynthSpec};
use gnnanatomy::training::{run_harness, select_edge_propagation, task_kind_of, TrainConfig};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "gnnanatomy",
    version,
    about = "Measure whether a graph dataset needs joint feature+edge reasoning"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic dataset with known solvability structure.
    Synth(SynthArgs),
    /// Train a model across seeded runs and write the run-matrix file.
    Train(TrainArgs),
    /// Turn a run matrix into a solvable set via the exact binomial test.
    Analyze(AnalyzeArgs),
    /// Compute the measures for one dataset from solvable-set files.
    Measure(MeasureArgs),
    /// Aggregate measure files from several datasets into the report CSVs.
    Report(ReportArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Dataset kind: feature | structure | joint
    #[arg(long)]
    kind: String,
    /// Node-classification scale: number of nodes
    #[arg(long, conflicts_with = "graphs")]
    nodes: Option<usize>,
    /// Graph-classification scale: number of graphs
    #[arg(long, requires = "nodes_per_graph")]
    graphs: Option<usize>,
    /// Nodes per generated graph (with --graphs)
    #[arg(long)]
    nodes_per_graph: Option<usize>,
    /// Number of classes
    #[arg(long, default_value_t = 2)]
    classes: usize,
    /// Feature dimension
    #[arg(long, default_value_t = 8)]
    feat_dim: usize,
    /// Label corruption rate in [0, 0.5)
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Generator seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output dataset path (JSON)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset file path
    #[arg(long)]
    dataset: PathBuf,
    /// Model: features | edges | edges-<prop> | gcn | gin-sum | gin-mean |
    /// gin-max | sage-mean. Bare `edges` tries every propagation and keeps
    /// the best by mean validation accuracy.
    #[arg(long)]
    model: String,
    /// Number of seeded runs [default: 100]
    #[arg(long)]
    runs: Option<usize>,
    /// Seed of run 0; run r uses seed_base + r [default: 0]
    #[arg(long)]
    seed_base: Option<u64>,
    /// Output run-matrix path (JSON)
    #[arg(long)]
    out: PathBuf,
    /// Optional key = value config file overriding training defaults
    #[arg(long)]
    config: Option<PathBuf>,
    /// Maximum training epochs [default: 10000]
    #[arg(long)]
    max_epochs: Option<usize>,
    /// Early-stopping patience in epochs [default: 25]
    #[arg(long)]
    patience: Option<usize>,
    /// Adam learning rate [default: 0.001]
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Edge-only input shape: ones-column | ones-matrix
    #[arg(long, default_value = "ones-column")]
    edge_input: String,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Run-matrix file path
    #[arg(long)]
    runs_file: PathBuf,
    /// Significance level of the per-prediction binomial test
    #[arg(long, default_value_t = 0.001)]
    alpha: f64,
    /// Output solvable-set path (JSON)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MeasureArgs {
    /// Feature-only solvable-set file
    #[arg(long)]
    features: PathBuf,
    /// Edge-only solvable-set file
    #[arg(long)]
    edges: PathBuf,
    /// GNN solvable-set file (repeat per architecture)
    #[arg(long, required = true)]
    gnn: Vec<PathBuf>,
    /// Output directory for measure.json, row.csv, gap.csv, jaccard.csv
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory holding measure.json files (one per dataset)
    #[arg(long)]
    measure_dir: PathBuf,
    /// Output directory for report.csv and the GaP/Jaccard grids
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let pool = thread_pool()?;
    pool.install(|| match cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::Train(args) => cmd_train(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Measure(args) => cmd_measure(args),
        Command::Report(args) => cmd_report(args),
    })
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(value) = std::env::var("GNNANATOMY_THREADS") {
        let threads: usize = value
            .parse()
            .map_err(|_| anyhow!("GNNANATOMY_THREADS must be a positive integer, got `{value}`"))?;
        if threads == 0 {
            bail!("GNNANATOMY_THREADS must be >= 1");
        }
        builder = builder.num_threads(threads);
    }
    builder.build().context("building worker thread pool")
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let kind: SynthKind = args.kind.parse()?;
    let scale = match (args.nodes, args.graphs) {
        (Some(num_nodes), None) => SynthScale::Nodes { num_nodes },
        (None, Some(num_graphs)) => SynthScale::Graphs {
            num_graphs,
            nodes_per_graph: args
                .nodes_per_graph
                .ok_or_else(|| anyhow!("--graphs requires --nodes-per-graph"))?,
        },
        (None, None) => bail!("one of --nodes or --graphs is required"),
        (Some(_), Some(_)) => bail!("--nodes conflicts with --graphs"),
    };
    let spec = SynthSpec {
        kind,
        scale,
        num_classes: args.classes,
        feat_dim: args.feat_dim,
        noise_rate: args.noise,
        seed: args.seed,
    };
    let task = generate(&spec)?;
    io::save_dataset(&task, &args.out)?;
    println!(
        "wrote {} ({} dataset, {} classes, seed {})",
        args.out.display(),
        kind.name(),
        args.classes,
        args.seed
    );
    Ok(())
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn resolve_config(args: &TrainArgs) -> Result<TrainConfig> {
    let mut config = TrainConfig::default();
    if let Some(path) = &args.config {
        apply_config_file(&mut config, path)?;
    }
    if let Some(v) = args.runs {
        config.n_runs = v;
    }
    if let Some(v) = args.seed_base {
        config.seed_base = v;
    }
    if let Some(v) = args.max_epochs {
        config.max_epochs = v;
    }
    if let Some(v) = args.patience {
        config.patience = v;
    }
    if let Some(v) = args.learning_rate {
        config.learning_rate = v;
    }
    config.validate()?;
    Ok(config)
}

/// Simple `key = value` file; `#` starts a comment. Flags take precedence
/// over file entries, file entries over defaults.
fn apply_config_file(config: &mut TrainConfig, path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config file {}", path.display()))?;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("{}:{}: expected key = value", path.display(), lineno + 1))?;
        let (key, value) = (key.trim(), value.trim());
        let parse_err = || anyhow!("{}:{}: invalid value for {key}", path.display(), lineno + 1);
        match key {
            "max_epochs" => config.max_epochs = value.parse().map_err(|_| parse_err())?,
            "patience" => config.patience = value.parse().map_err(|_| parse_err())?,
            "learning_rate" => config.learning_rate = value.parse().map_err(|_| parse_err())?,
            "n_runs" => config.n_runs = value.parse().map_err(|_| parse_err())?,
            "seed_base" => config.seed_base = value.parse().map_err(|_| parse_err())?,
            other => bail!("{}:{}: unknown config key `{other}`", path.display(), lineno + 1),
        }
    }
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let config = resolve_config(&args)?;
    let edge_input = match args.edge_input.as_str() {
        "ones-column" => EdgeInput::OnesColumn,
        "ones-matrix" => EdgeInput::OnesMatrix,
        other => bail!("invalid --edge-input `{other}` (ones-column | ones-matrix)"),
    };
    let task = io::load_dataset(&args.dataset)?;
    let name = dataset_name(&args.dataset);
    let runs = if args.model == "edges" {
        let (kind, runs) = select_edge_propagation(&task, &config, &name, edge_input)?;
        println!("edge-only propagation selected: {kind}");
        runs
    } else {
        let kind: ModelKind = args.model.parse()?;
        let spec = ModelSpec {
            edge_input,
            ..ModelSpec::new(kind, task_kind_of(&task))
        };
        run_harness(&spec, &task, &config, &name)?
    };
    if !runs.aborted_runs.is_empty() {
        eprintln!(
            "warning: {} run(s) aborted on non-finite loss and were recorded as all-incorrect: {:?}",
            runs.aborted_runs.len(),
            runs.aborted_runs
        );
    }
    io::save_runmatrix(&runs, &args.out)?;
    println!(
        "wrote {} ({} on {}, {} runs x {} predictions, mean val accuracy {:.3})",
        args.out.display(),
        runs.model_name,
        runs.dataset_name,
        runs.n_runs,
        runs.n_predictions,
        runs.mean_val_accuracy()
    );
    Ok(())
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<()> {
    let runs = io::load_runmatrix(&args.runs_file)?;
    let set = solvable_set(&runs, args.alpha)?;
    io::save_solvable(&set, &args.out)?;
    println!(
        "wrote {} ({} on {}: {} of {} predictions solvable at alpha {})",
        args.out.display(),
        set.model_name,
        set.dataset_name,
        set.len(),
        set.universe_size,
        set.alpha
    );
    Ok(())
}

/// Canonical architecture order for tie-breaks, then unknown names in input
/// order.
fn canonical_arch_order(sets: &mut Vec<SolvableSet>) {
    let rank = |name: &str| {
        PropagationKind::ALL
            .iter()
            .position(|k| k.name() == name)
            .unwrap_or(PropagationKind::ALL.len())
    };
    sets.sort_by_key(|s| rank(&s.model_name));
}

fn cmd_measure(args: MeasureArgs) -> Result<()> {
    let s_f = io::load_solvable(&args.features)?;
    let s_e = io::load_solvable(&args.edges)?;
    let mut gnn_sets = Vec::new();
    for path in &args.gnn {
        gnn_sets.push(io::load_solvable(path)?);
    }
    canonical_arch_order(&mut gnn_sets);
    for set in gnn_sets.iter().chain([&s_e]) {
        if (set.alpha - s_f.alpha).abs() > f64::EPSILON {
            bail!(
                "alpha mismatch: {} uses {}, features uses {}",
                set.model_name,
                set.alpha,
                s_f.alpha
            );
        }
    }
    let selected_edge_kind = s_e
        .model_name
        .strip_prefix("edges-")
        .unwrap_or(&s_e.model_name)
        .to_string();
    let named: Vec<(&str, &SolvableSet)> = gnn_sets
        .iter()
        .map(|s| (s.model_name.as_str(), s))
        .collect();
    let report = measures::measure_report(&s_f, &s_e, &named, &selected_edge_kind)?;
    let file = io::MeasureFile::from_report(&report, &s_f, &s_e, &named);

    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    io::save_measure(&file, &args.out_dir.join("measure.json"))?;
    io::write_report_csv(std::slice::from_ref(&file), &args.out_dir.join("row.csv"))?;

    let gap_grid = io::CsvGrid {
        corner: "architecture".into(),
        columns: vec![
            "feature_retention".into(),
            "edge_retention".into(),
            "additional".into(),
        ],
        rows: report
            .gap
            .iter()
            .map(|g| {
                (
                    g.architecture.clone(),
                    vec![g.feature_retention, g.edge_retention, g.additional],
                )
            })
            .collect(),
    };
    io::write_grid_csv(&gap_grid, &args.out_dir.join("gap.csv"))?;

    let jaccard = pairwise_jaccard(&gnn_sets.iter().collect::<Vec<_>>())?;
    io::write_grid_csv(&jaccard, &args.out_dir.join("jaccard.csv"))?;
    println!(
        "wrote measures for {} to {} (ForE {:.3}, best GNN {} at {:.3})",
        report.dataset_name,
        args.out_dir.display(),
        report.fore,
        report.gnn_best.0,
        report.gnn_best.1
    );
    Ok(())
}

/// Architecture-by-architecture Jaccard grid over one or more datasets.
fn pairwise_jaccard(sets_by_arch: &[&SolvableSet]) -> Result<io::CsvGrid> {
    let names: Vec<String> = sets_by_arch.iter().map(|s| s.model_name.clone()).collect();
    let mut rows = Vec::with_capacity(names.len());
    for a in sets_by_arch {
        let mut cells = Vec::with_capacity(names.len());
        for b in sets_by_arch {
            cells.push(measures::jaccard_across_datasets(&[a], &[b])?);
        }
        rows.push((a.model_name.clone(), cells));
    }
    Ok(io::CsvGrid {
        corner: "architecture".into(),
        columns: names,
        rows,
    })
}

fn cmd_report(args: ReportArgs) -> Result<()> {
    let mut files = Vec::new();
    let entries = std::fs::read_dir(&args.measure_dir)
        .with_context(|| format!("reading {}", args.measure_dir.display()))?;
    for entry in entries {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "json") {
            files.push(io::load_measure(&path)?);
        }
    }
    if files.is_empty() {
        bail!(
            "no measure .json files found in {}",
            args.measure_dir.display()
        );
    }
    files.sort_by(|a, b| a.dataset.cmp(&b.dataset));

    // pooled Jaccard over all datasets, architecture by architecture
    let mut archs: Vec<String> = Vec::new();
    for f in &files {
        for ids in &f.gnn_ids {
            if !archs.contains(&ids.architecture) {
                archs.push(ids.architecture.clone());
            }
        }
    }
    let rank = |name: &str| {
        PropagationKind::ALL
            .iter()
            .position(|k| k.name() == name)
            .unwrap_or(PropagationKind::ALL.len())
    };
    archs.sort_by_key(|a| rank(a));

    let sets_for = |arch: &str| -> Vec<(usize, SolvableSet)> {
        files
            .iter()
            .enumerate()
            .filter_map(|(i, f)| {
                f.gnn_ids
                    .iter()
                    .find(|ids| ids.architecture == arch)
                    .map(|ids| (i, f.gnn_set(ids)))
            })
            .collect()
    };
    let mut rows = Vec::with_capacity(archs.len());
    for a in &archs {
        let a_sets = sets_for(a);
        let mut cells = Vec::with_capacity(archs.len());
        for b in &archs {
            let b_sets = sets_for(b);
            // pool only datasets where both architectures were measured
            let mut left = Vec::new();
            let mut right = Vec::new();
            for (i, sa) in &a_sets {
                if let Some((_, sb)) = b_sets.iter().find(|(j, _)| j == i) {
                    left.push(sa);
                    right.push(sb);
                }
            }
            if left.is_empty() {
                cells.push(None);
            } else {
                let left: Vec<&SolvableSet> = left.into_iter().collect();
                let right: Vec<&SolvableSet> = right.into_iter().collect();
                cells.push(measures::jaccard_across_datasets(&left, &right)?);
            }
        }
        rows.push((a.clone(), cells));
    }
    let jaccard = io::CsvGrid {
        corner: "architecture".into(),
        columns: archs.clone(),
        rows,
    };
    let written = io::emit_report(&files, &jaccard, &args.out)?;
    println!(
        "wrote report for {} dataset(s): {}",
        files.len(),
        written
            .iter()
            .map(|p| p.display().to_string())
            .collect::<Vec<_>>()
            .join(", ")
    );
    Ok(())
}
