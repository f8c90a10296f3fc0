use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use serde::Serialize;

use roadweights::config::RunConfig;
use roadweights::eval::{
    coverage, grid_search, hyper_grid, run_comparison, sweep_medians, training_size_sweep, GridSearch,
    SWEEP_FRACTIONS,
};
use roadweights::graph::{build_dual, RoadGraph};
use roadweights::io::{self, DatasetPaths};
use roadweights::model::{Hyper, Model, StructureOptions};
use roadweights::objective::{ObjectiveTerms, Variant};
use roadweights::pagerank::{degree_stats, dual_weights, pagerank, pagerank_stats};
use roadweights::synth::{generate_synthetic, SyntheticSpec};
use roadweights::trips::{partition_by_tag, split, TripSet};

const LOG_ENV: &str = "ROADWEIGHTS_LOG";

const FORMATS: &str = "\
FILE FORMATS (UTF-8 CSV with a header row, comma separated, no quoting)

  network.csv   edge_id,tail,head,length_m,speed_limit_kmh
                One directed road segment per row. tail/head are junction
                names. speed_limit_kmh may be blank when unknown.
  schedule.csv  day_class,start_hhmm,end_hhmm,tag
                day_class is weekday or weekend. For each day class the
                half-open intervals [start, end) must cover 0000-2400 with no
                gap or overlap. Tags are numbered in order of first appearance.
  trips.csv     trip_id,seq,edge_id,day_class,enter_hhmmss,exit_hhmmss
                One link record per row; records of a trip are ordered by seq
                and their times must not decrease.
  costs.csv     trip_id,cost
                Observed total cost of every trip (e.g. seconds or grams).
  weights.csv   edge_id,tag,cost_per_meter,annotated_flag
                Output of annotate. annotated_flag is 1 when the entry is
                reachable from trip data through the chosen constraints, 0
                otherwise (cost_per_meter is then 0).

A dataset directory holds network.csv, schedule.csv, trips.csv and costs.csv;
the individual paths can be overridden with --network, --schedule, --trips
and --costs.

CONFIG FILE
  key = value lines, # starts a comment. Keys: alpha, beta, gamma,
  similarity_threshold, exact_similarity_max_edges, highway_cutoff_kmh,
  cg_tol, cg_max_iters (number or auto), jacobi, pr_tol, pr_max_iters, seed,
  variant (F1..F4), train_fraction, default_speed_kmh, baseline_lambdas
  (comma separated). Flags override the file.

EXIT CODES
  0 success, 2 invalid input or arguments, 3 solver did not converge,
  4 I/O error.

Set ROADWEIGHTS_LOG (error, warn, info, debug, trace) for log output on stderr.";

#[derive(Parser)]
#[command(name = "roadweights", version, about = "Annotate road networks with time-varying edge costs learned from trip costs")]
#[command(after_long_help = FORMATS)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit every variant on a dataset and write the weights of the chosen one.
    Annotate(AnnotateArgs),
    /// Split a dataset, fit every variant on the training part and score it on the rest.
    Evaluate(EvaluateArgs),
    /// Per-tag PageRank histograms and dual-graph degree statistics.
    PagerankStats(StatsArgs),
    /// Generate a synthetic grid dataset with known ground truth.
    Synth(SynthArgs),
    /// Split a dataset's trips into training and test datasets.
    Split(SplitArgs),
    /// Held-out error of the chosen variant as the training set grows.
    Sweep(SweepArgs),
    /// Cross-validated grid search over alpha, beta and gamma.
    Tune(TuneArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Dataset directory.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    network: Option<PathBuf>,
    #[arg(long)]
    schedule: Option<PathBuf>,
    #[arg(long)]
    trips: Option<PathBuf>,
    #[arg(long)]
    costs: Option<PathBuf>,
}

impl DataArgs {
    fn paths(&self) -> Result<DatasetPaths> {
        let base = self.data.as_deref().map(DatasetPaths::in_dir);
        let pick = |given: &Option<PathBuf>, from_dir: Option<&PathBuf>, what: &str| match (given, from_dir) {
            (Some(p), _) => Ok(p.clone()),
            (None, Some(p)) => Ok(p.clone()),
            (None, None) => bail!("no {what} file: pass --data or --{what}"),
        };
        Ok(DatasetPaths {
            network: pick(&self.network, base.as_ref().map(|b| &b.network), "network")?,
            schedule: pick(&self.schedule, base.as_ref().map(|b| &b.schedule), "schedule")?,
            trips: pick(&self.trips, base.as_ref().map(|b| &b.trips), "trips")?,
            costs: pick(&self.costs, base.as_ref().map(|b| &b.costs), "costs")?,
        })
    }

    fn load(&self) -> Result<(RoadGraph, TripSet)> {
        let paths = self.paths()?;
        let (graph, trips) = io::load_dataset(&paths)?;
        info!(
            "loaded {} edges, {} tags, {} trips",
            graph.num_edges(),
            graph.num_tags(),
            trips.len()
        );
        Ok((graph, trips))
    }
}

#[derive(Args)]
struct ConfigArgs {
    /// key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    variant: Option<Variant>,
    #[arg(long)]
    seed: Option<u64>,
    /// Any configuration key, as KEY=VALUE. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        for kv in &self.overrides {
            let Some((k, v)) = kv.split_once('=') else {
                bail!("--set expects KEY=VALUE, got {kv:?}");
            };
            cfg.set(k, v).map_err(anyhow::Error::msg)?;
        }
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = self.beta {
            cfg.beta = v;
        }
        if let Some(v) = self.gamma {
            cfg.gamma = v;
        }
        if let Some(v) = self.variant {
            cfg.variant = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct AnnotateArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    config: ConfigArgs,
    /// Output weights CSV.
    #[arg(long)]
    out: PathBuf,
    /// Output JSON run report.
    #[arg(long)]
    report: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    config: ConfigArgs,
    /// Use this dataset directory as the test set and all of --data for training.
    #[arg(long)]
    test: Option<PathBuf>,
    /// Output directory for report.json, alr_curve.csv and coverage.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    config: ConfigArgs,
    /// Only this tag (default: every tag).
    #[arg(long)]
    tag: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// Output dataset directory (truth.csv holds the ground truth).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 20)]
    rows: usize,
    #[arg(long, default_value_t = 20)]
    cols: usize,
    #[arg(long = "trip-count", default_value_t = 500)]
    trip_count: usize,
    #[arg(long, default_value_t = 5)]
    min_records: usize,
    #[arg(long, default_value_t = 20)]
    max_records: usize,
    /// Stop once this fraction of edges is traversed.
    #[arg(long)]
    coverage: Option<f64>,
    /// Relative standard deviation of trip cost noise.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Every n-th grid line is a highway (0: none).
    #[arg(long, default_value_t = 5)]
    highway_every: usize,
    /// Every n-th grid line is an arterial (0: none).
    #[arg(long, default_value_t = 0)]
    arterial_every: usize,
    #[arg(long, default_value_t = 0.0)]
    missing_speed_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SplitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 0.8)]
    train_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    train_out: PathBuf,
    #[arg(long)]
    test_out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    config: ConfigArgs,
    /// Number of split seeds, starting at the configured seed.
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    /// Output CSV `seed,fraction,train_trips,ssl`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TuneArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 10.0, 1000.0])]
    alphas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [100.0, 1e4, 1e5])]
    betas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [1e-4])]
    gammas: Vec<f64>,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    /// Output JSON with every grid point and the best one.
    #[arg(long)]
    out: PathBuf,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").map_err(|source| roadweights::Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| roadweights::Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(())
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|source| roadweights::Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(())
}

fn config_map(cfg: &RunConfig) -> serde_json::Map<String, serde_json::Value> {
    cfg.to_pairs()
        .into_iter()
        .map(|(k, v)| (k.to_string(), serde_json::Value::String(v)))
        .collect()
}

#[derive(Serialize)]
struct VariantReport {
    hyper: Hyper,
    cg_iterations: usize,
    cg_relative_residual: f64,
    objective: ObjectiveTerms,
    coverage: f64,
}

#[derive(Serialize)]
struct TagReport {
    tag: String,
    pagerank_iterations: usize,
    pagerank_residual: f64,
}

#[derive(Serialize)]
struct AnnotateReport {
    config: serde_json::Map<String, serde_json::Value>,
    edges: usize,
    tags: usize,
    trips: usize,
    unknowns: usize,
    similarity_links: usize,
    adjacency_links: usize,
    pagerank: Vec<TagReport>,
    variants: std::collections::BTreeMap<Variant, VariantReport>,
    weights_variant: Variant,
}

fn annotate(args: &AnnotateArgs) -> Result<()> {
    let cfg = args.config.resolve()?;
    let (graph, trips) = args.data.load()?;
    let dual = build_dual(&graph);
    let model = Model::build(&graph, &dual, &trips, &StructureOptions::from(&cfg))?;
    let fits = model.fit_all(&Variant::ALL, Hyper::from(&cfg), cfg.cg())?;
    let mut variants = std::collections::BTreeMap::new();
    for f in &fits {
        variants.insert(
            f.variant,
            VariantReport {
                hyper: f.hyper,
                cg_iterations: f.iterations,
                cg_relative_residual: f.relative_residual,
                objective: f.terms,
                coverage: coverage(graph.layout(), &f.annotated)?,
            },
        );
    }
    let chosen = fits
        .iter()
        .find(|f| f.variant == cfg.variant)
        .expect("every variant is fitted");
    io::write_weights(&args.out, &graph, &chosen.d, &chosen.annotated)?;
    let report = AnnotateReport {
        config: config_map(&cfg),
        edges: graph.num_edges(),
        tags: graph.num_tags(),
        trips: trips.len(),
        unknowns: model.q.dim(),
        similarity_links: model.a.assembled.nnz() / 2,
        adjacency_links: model.b.assembled.nnz() / 2,
        pagerank: model
            .pageranks
            .iter()
            .map(|p| TagReport {
                tag: graph.schedule().tag_name(p.tag).to_string(),
                pagerank_iterations: p.iterations,
                pagerank_residual: p.residual,
            })
            .collect(),
        variants,
        weights_variant: cfg.variant,
    };
    write_json(&args.report, &report)
}

#[derive(Serialize)]
struct EvaluateReport {
    config: serde_json::Map<String, serde_json::Value>,
    #[serde(flatten)]
    result: roadweights::eval::EvalReport,
}

fn evaluate(args: &EvaluateArgs) -> Result<()> {
    let cfg = args.config.resolve()?;
    let (graph, trips) = args.data.load()?;
    let (train, test) = match &args.test {
        Some(dir) => {
            let p = DatasetPaths::in_dir(dir);
            (trips, io::load_trips(&p.trips, &p.costs, &graph)?)
        }
        None => split(&trips, cfg.train_fraction, cfg.seed)?,
    };
    let dual = build_dual(&graph);
    let result = run_comparison(&train, &test, &graph, &dual, &cfg)?;
    create_dir(&args.out)?;
    let mut curve = String::from("threshold_pct,fraction\n");
    for p in &result.alr_curve {
        curve += &format!("{},{}\n", p.threshold_pct, p.fraction);
    }
    write_text(&args.out.join("alr_curve.csv"), &curve)?;
    let mut cov = String::from("variant,coverage\n");
    for (v, r) in &result.variants {
        cov += &format!("{v},{}\n", r.coverage);
    }
    write_text(&args.out.join("coverage.csv"), &cov)?;
    write_json(
        &args.out.join("report.json"),
        &EvaluateReport {
            config: config_map(&cfg),
            result,
        },
    )
}

fn pagerank_stats_cmd(args: &StatsArgs) -> Result<()> {
    let cfg = args.config.resolve()?;
    let (graph, trips) = args.data.load()?;
    let schedule = graph.schedule();
    let tags: Vec<usize> = match &args.tag {
        Some(name) => match schedule.tag_index(name) {
            Some(t) => vec![t],
            None => bail!("unknown tag {name:?}; the schedule has {:?}", schedule.tags()),
        },
        None => (0..graph.num_tags()).collect(),
    };
    let dual = build_dual(&graph);
    let parts = partition_by_tag(&trips, schedule);
    create_dir(&args.out)?;
    for tag in tags {
        let name = schedule.tag_name(tag);
        let m = dual_weights(&dual, &parts[tag], tag);
        let pr = pagerank(&m, cfg.pr_tol, cfg.pr_max_iters)?;
        let hist = pagerank_stats(&pr)?;
        io::write_histogram(&args.out.join(format!("pagerank_histogram_{name}.csv")), &hist)?;
        io::write_pagerank(&args.out.join(format!("pagerank_{name}.csv")), &graph, &pr)?;
    }
    let stats = degree_stats(&dual);
    io::write_degree_stats(&args.out.join("degree_stats.csv"), &stats)?;
    io::write_degree_histogram(&args.out.join("degree_histogram.csv"), &stats)?;
    Ok(())
}

fn synth(args: &SynthArgs) -> Result<()> {
    let spec = SyntheticSpec {
        rows: args.rows,
        cols: args.cols,
        trip_count: args.trip_count,
        records_per_trip: (args.min_records, args.max_records),
        coverage_target: args.coverage,
        noise: args.noise,
        highway_every: args.highway_every,
        arterial_every: args.arterial_every,
        missing_speed_fraction: args.missing_speed_fraction,
        ..SyntheticSpec::default()
    };
    let data = generate_synthetic(&spec, args.seed)?;
    io::write_synthetic(&args.out, &data)?;
    info!(
        "wrote {} edges and {} trips to {}",
        data.graph.num_edges(),
        data.trips.len(),
        args.out.display()
    );
    Ok(())
}

fn write_dataset(dir: &Path, graph: &RoadGraph, trips: &TripSet) -> Result<()> {
    create_dir(dir)?;
    let p = DatasetPaths::in_dir(dir);
    io::write_schedule(&p.schedule, graph.schedule())?;
    io::write_network(&p.network, graph)?;
    io::write_trips(&p.trips, &p.costs, trips, graph)?;
    Ok(())
}

fn split_cmd(args: &SplitArgs) -> Result<()> {
    let (graph, trips) = args.data.load()?;
    let (train, test) = split(&trips, args.train_fraction, args.seed)?;
    write_dataset(&args.train_out, &graph, &train)?;
    write_dataset(&args.test_out, &graph, &test)?;
    info!("split {} trips into {} / {}", trips.len(), train.len(), test.len());
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<()> {
    let cfg = args.config.resolve()?;
    let (graph, trips) = args.data.load()?;
    let dual = build_dual(&graph);
    let seeds: Vec<u64> = (cfg.seed..cfg.seed + args.seeds).collect();
    let rows = training_size_sweep(&trips, &graph, &dual, &cfg, &SWEEP_FRACTIONS, &seeds)?;
    let mut text = String::from("seed,fraction,train_trips,ssl\n");
    for r in &rows {
        text += &format!("{},{},{},{}\n", r.seed, r.fraction, r.train_trips, r.ssl);
    }
    write_text(&args.out, &text)?;
    for (f, m) in SWEEP_FRACTIONS.iter().zip(sweep_medians(&rows, &SWEEP_FRACTIONS)) {
        info!("fraction {f}: median SSL {m:e}");
    }
    Ok(())
}

#[derive(Serialize)]
struct TuneReport {
    config: serde_json::Map<String, serde_json::Value>,
    #[serde(flatten)]
    search: GridSearch,
}

fn tune(args: &TuneArgs) -> Result<()> {
    let cfg = args.config.resolve()?;
    let (graph, trips) = args.data.load()?;
    let dual = build_dual(&graph);
    let grid = hyper_grid(&args.alphas, &args.betas, &args.gammas);
    if grid.iter().any(|h| !(h.alpha >= 0.0 && h.beta >= 0.0 && h.gamma > 0.0)) {
        bail!("grid values must be non-negative and gamma positive");
    }
    let search = grid_search(&trips, &graph, &dual, &cfg, cfg.variant, &grid, args.folds, cfg.seed)?;
    let best = search.best;
    write_json(
        &args.out,
        &TuneReport {
            config: config_map(&cfg),
            search,
        },
    )?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "alpha = {}\nbeta = {}\ngamma = {}", best.alpha, best.beta, best.gamma)?;
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Annotate(a) => annotate(a),
        Command::Evaluate(a) => evaluate(a),
        Command::PagerankStats(a) => pagerank_stats_cmd(a),
        Command::Synth(a) => synth(a),
        Command::Split(a) => split_cmd(a),
        Command::Sweep(a) => sweep(a),
        Command::Tune(a) => tune(a),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<roadweights::Error>() {
            return e.exit_code() as u8;
        }
        if cause.is::<std::io::Error>() {
            return 4;
        }
    }
    2
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
