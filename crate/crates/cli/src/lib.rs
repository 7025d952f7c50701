//! Command line front end for covering-based active sample selection.
//!
//! One binary, six subcommands: `gen-toy` writes a synthetic pool, `calibrate`
//! picks covering radii, `acquire` runs a single seeded experiment, `oracle`
//! cross-checks the greedy algorithms against exhaustive optima on small
//! random instances, `bench` drives multi-seed multi-method comparisons from a
//! config file, and `report` converts and aggregates step reports.
//!
//! Every subcommand is deterministic given its flags and seed. Artifacts are
//! written atomically (temp file + rename) so a crashed run never leaves a
//! partial file behind. Exit codes: 0 on success, 1 on any validation or IO
//! error, 2 when an oracle refuses an instance too large to enumerate.

pub mod bench;
pub mod instance;

pub use bench::{parse_bench_config, run_bench, BenchConfig, PoolSource};
pub use instance::random_instance;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use cfcover::calibrate::{calibrate_uniform, refine_per_radius, write_curve_csv};
use cfcover::coverage::{build_ball_graph, CoverageConfig, GroupFilter};
use cfcover::dataset::{
    build_distance_index, generate_identical, generate_toy, load_pool_csv, save_pool_csv, Group,
    ToyParams,
};
use cfcover::fccm::{fccm_select, ScoreMode};
use cfcover::greedy_radius::run_greedy;
use cfcover::harness::{
    aggregate, emit_report, read_report_csv, read_report_json, run_experiment, split_membership,
    ExperimentConfig, InitPolicy, Method, ReportFormat, ReportRow, SplitFractions, StepAggregate,
};
use cfcover::io_util::write_atomic;
use cfcover::oracle::{optimal_coverage, optimal_radius_sum};
use cfcover::radii::{RadiusKind, SelectionState};
use cfcover::{Error, PoolSet64, Result};

#[derive(Parser, Debug)]
#[command(
    name = "cfcover",
    about = "Covering-based active sample selection for treatment effect estimation",
    after_help = "Worker threads honor the RAYON_NUM_THREADS environment variable.\n\
                  All artifacts are UTF-8 with LF line endings and '.' decimals."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic benchmark pool and write it as CSV
    GenToy(GenToyArgs),
    /// Sweep a radius grid and pick the smallest radius clearing a coverage threshold
    Calibrate(CalibrateArgs),
    /// Run one seeded acquisition experiment and write its step report
    Acquire(AcquireArgs),
    /// Compare greedy selection against exhaustive optima on small random instances
    #[command(subcommand)]
    Oracle(OracleTask),
    /// Run a multi-seed multi-method benchmark described by a key=value config file
    Bench(BenchArgs),
    /// Convert a step report between CSV and JSON and optionally aggregate it
    Report(ReportArgs),
}

#[derive(Args, Debug)]
pub struct GenToyArgs {
    /// RNG seed for cluster centers and unit draws
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Treated-arm cluster count
    #[arg(long, default_value_t = 50)]
    pub clusters_t1: usize,
    /// Control-arm cluster count
    #[arg(long, default_value_t = 30)]
    pub clusters_t0: usize,
    /// Units per cluster
    #[arg(long, default_value_t = 200)]
    pub per_cluster: usize,
    /// Treated-arm center offset along both axes
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    pub offset_t1: f64,
    /// Control-arm center offset along both axes
    #[arg(long, default_value_t = -2.0, allow_negative_numbers = true)]
    pub offset_t0: f64,
    /// Give both arms copies of one shared set of clusters instead
    #[arg(
        long,
        conflicts_with_all = ["clusters_t1", "clusters_t0", "offset_t1", "offset_t0"]
    )]
    pub identical: bool,
    /// Shared cluster count in --identical mode
    #[arg(long, default_value_t = 40, requires = "identical")]
    pub clusters: usize,
    /// Output pool CSV
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct CalibrateArgs {
    /// Input pool CSV
    #[arg(long)]
    pub pool: PathBuf,
    /// Smallest grid radius (normalized by the pool diameter)
    #[arg(long, default_value_t = 0.05)]
    pub grid_start: f64,
    /// Largest grid radius
    #[arg(long, default_value_t = 0.30)]
    pub grid_end: f64,
    /// Grid spacing
    #[arg(long, default_value_t = 0.01)]
    pub grid_step: f64,
    /// Plateau mean coverage the chosen radius must clear
    #[arg(long, default_value_t = 0.95)]
    pub threshold: f64,
    /// Counterfactual edge weight used while converging
    #[arg(long, default_value_t = 2.5)]
    pub alpha: f64,
    /// Acquisition cap per grid point (default: four times the pool size)
    #[arg(long)]
    pub max_steps: Option<usize>,
    /// Also refine each of the four radii separately around the chosen value
    #[arg(long)]
    pub refine: bool,
    /// Where to write the sweep curve CSV
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AcquireArgs {
    /// Input pool CSV
    #[arg(long)]
    pub pool: PathBuf,
    /// Acquisition strategy: fccm, fccm-minus, greedy-radius, random, or kcenter-factual
    #[arg(long, default_value = "fccm")]
    pub method: String,
    /// Starting labels: all-control, all-treated, or k-random
    #[arg(long, default_value = "all-control")]
    pub init: String,
    /// Labels drawn per arm when --init k-random
    #[arg(long, default_value_t = 1)]
    pub init_k: usize,
    /// Acquisition steps after initialization
    #[arg(long, default_value_t = 50)]
    pub steps: usize,
    /// Units acquired per step
    #[arg(long, default_value_t = 1)]
    pub step_len: usize,
    /// Seed for the split, the initial labels, and any randomized method
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Uniform normalized radius for all four covering balls
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    /// Treated factual radius (overrides --delta)
    #[arg(long = "delta11")]
    pub delta_11: Option<f64>,
    /// Treated-to-control counterfactual radius (overrides --delta)
    #[arg(long = "delta10")]
    pub delta_10: Option<f64>,
    /// Control factual radius (overrides --delta)
    #[arg(long = "delta00")]
    pub delta_00: Option<f64>,
    /// Control-to-treated counterfactual radius (overrides --delta)
    #[arg(long = "delta01")]
    pub delta_01: Option<f64>,
    /// Counterfactual edge weight in the coverage score
    #[arg(long, default_value_t = 2.5)]
    pub alpha: f64,
    /// Pool, validation, and test fractions, comma separated
    #[arg(long, default_value = "0.6,0.2,0.2")]
    pub split: String,
    /// Report destination; the .csv or .json extension picks the format
    #[arg(long)]
    pub out: PathBuf,
    /// Optional acquisition-order CSV (step, pool row, arm)
    #[arg(long)]
    pub order_out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum OracleTask {
    /// Greedy radius reduction vs the exhaustive split optimum
    RadiusSum(RadiusSumArgs),
    /// Unscaled greedy coverage vs the exhaustive subset optimum
    Coverage(CoverageArgs),
}

#[derive(Args, Debug)]
pub struct RadiusSumArgs {
    /// Instance size; the exhaustive search refuses large values
    #[arg(long)]
    pub n: usize,
    /// Instance seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Total selection budget, the two initial labels included
    #[arg(long, default_value_t = 4)]
    pub budget: usize,
}

#[derive(Args, Debug)]
pub struct CoverageArgs {
    /// Instance size; the exhaustive search refuses large values
    #[arg(long)]
    pub n: usize,
    /// Instance seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Centers to select
    #[arg(long, default_value_t = 3)]
    pub budget: usize,
    /// Uniform normalized ball radius
    #[arg(long, default_value_t = 0.5)]
    pub delta: f64,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Benchmark description, one key=value per line
    #[arg(long)]
    pub config: PathBuf,
    /// Directory for the report artifacts
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Input report (.csv or .json)
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Converted copy (.csv or .json)
    #[arg(long)]
    pub out: PathBuf,
    /// Optional per-step aggregate CSV (means and deviations across seeds)
    #[arg(long)]
    pub aggregate_out: Option<PathBuf>,
}

/// Parses argv and runs the request, translating outcomes into the exit
/// code contract: 0 success, 1 validation error (including bad flags),
/// 2 oracle guard refusal.
pub fn main_entry() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests arrive as Err too; they keep exit 0.
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e @ Error::OracleGuard { .. }) => {
            eprintln!("{e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::GenToy(a) => run_gen_toy(a),
        Command::Calibrate(a) => run_calibrate(a),
        Command::Acquire(a) => run_acquire(a),
        Command::Oracle(OracleTask::RadiusSum(a)) => run_oracle_radius_sum(a),
        Command::Oracle(OracleTask::Coverage(a)) => run_oracle_coverage(a),
        Command::Bench(a) => run_bench_cmd(a),
        Command::Report(a) => run_report(a),
    }
}

/// Missing deltas fall back to the uniform value.
#[derive(Clone, Copy, Debug, Default)]
pub struct DeltaOverrides {
    pub delta_11: Option<f64>,
    pub delta_10: Option<f64>,
    pub delta_00: Option<f64>,
    pub delta_01: Option<f64>,
}

pub fn coverage_from_parts(delta: f64, o: &DeltaOverrides, alpha: f64) -> CoverageConfig<f64> {
    CoverageConfig {
        delta_11: o.delta_11.unwrap_or(delta),
        delta_10: o.delta_10.unwrap_or(delta),
        delta_00: o.delta_00.unwrap_or(delta),
        delta_01: o.delta_01.unwrap_or(delta),
        alpha,
    }
}

pub fn parse_init(name: &str, k: usize) -> Result<InitPolicy> {
    match name {
        "all-control" => Ok(InitPolicy::AllOf(Group::Control)),
        "all-treated" => Ok(InitPolicy::AllOf(Group::Treated)),
        "k-random" => Ok(InitPolicy::KRandomPerGroup(k)),
        _ => Err(Error::Config(format!(
            "unknown init policy {name:?}; expected all-control, all-treated, or k-random"
        ))),
    }
}

pub fn parse_split(raw: &str) -> Result<SplitFractions<f64>> {
    let parts: Vec<&str> = raw.split(',').collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!(
            "split needs three comma-separated fractions such as 0.6,0.2,0.2; got {raw:?}"
        )));
    }
    let frac = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|e| Error::Config(format!("split fraction {s:?}: {e}")))
    };
    Ok(SplitFractions::new(
        frac(parts[0])?,
        frac(parts[1])?,
        frac(parts[2])?,
    ))
}

pub fn parse_format(name: &str) -> Result<ReportFormat> {
    ReportFormat::from_name(name)
        .ok_or_else(|| Error::Config(format!("unknown format {name:?}; expected csv or json")))
}

/// Report format from a file extension, case-insensitive.
pub fn format_from_path(path: &Path) -> Result<ReportFormat> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    ext.as_deref()
        .and_then(ReportFormat::from_name)
        .ok_or_else(|| {
            Error::Config(format!(
                "cannot infer a report format from {path:?}; use a .csv or .json extension"
            ))
        })
}

fn parse_method(name: &str) -> Result<Method> {
    Method::from_name(name).ok_or_else(|| {
        Error::Config(format!(
            "unknown method {name:?}; expected one of fccm, fccm-minus, greedy-radius, random, \
             kcenter-factual"
        ))
    })
}

fn run_gen_toy(a: &GenToyArgs) -> Result<()> {
    let pool: PoolSet64 = if a.identical {
        generate_identical(a.seed, a.clusters, a.per_cluster)
    } else {
        generate_toy(&ToyParams {
            seed: a.seed,
            clusters_t1: a.clusters_t1,
            clusters_t0: a.clusters_t0,
            per_cluster: a.per_cluster,
            offset_t1: a.offset_t1,
            offset_t0: a.offset_t0,
        })
    };
    save_pool_csv(&pool, &a.out)?;
    println!(
        "wrote {} ({} units, {} covariates)",
        a.out.display(),
        pool.n(),
        pool.dim()
    );
    Ok(())
}

// The negated comparison is load-bearing: a NaN step compares false either
// way and must land in the error branch.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
fn build_grid(start: f64, end: f64, step: f64) -> Result<Vec<f64>> {
    if !start.is_finite() || !end.is_finite() || !(step > 0.0) {
        return Err(Error::Config(
            "grid needs finite bounds and a positive step".into(),
        ));
    }
    if end < start {
        return Err(Error::Config("grid end lies below grid start".into()));
    }
    let mut grid = Vec::new();
    for k in 0.. {
        let v = start + (k as f64) * step;
        if v > end + step * 1e-6 {
            break;
        }
        grid.push(v);
    }
    Ok(grid)
}

fn run_calibrate(a: &CalibrateArgs) -> Result<()> {
    let pool = load_pool_csv(&a.pool)?;
    let index = build_distance_index(&pool)?;
    let grid = build_grid(a.grid_start, a.grid_end, a.grid_step)?;
    let max_steps = a.max_steps.unwrap_or(4 * pool.n());
    let (curve, chosen) = calibrate_uniform(
        &index,
        pool.groups(),
        &grid,
        a.threshold,
        a.alpha,
        max_steps,
    )?;
    if let Some(out) = &a.out {
        write_curve_csv(&curve, out)?;
        println!("curve -> {}", out.display());
    }
    println!("grid points: {}", curve.entries.len());
    println!("curve monotone: {}", curve.is_monotone());
    match chosen {
        Some(d) => println!("chosen delta: {d}"),
        None => println!("chosen delta: none (no grid point clears {})", a.threshold),
    }
    if a.refine {
        match chosen {
            Some(base) => {
                let refined = refine_per_radius(
                    &index,
                    pool.groups(),
                    base,
                    &grid,
                    a.threshold,
                    a.alpha,
                    max_steps,
                )?;
                for kind in RadiusKind::ALL {
                    match refined.get(kind) {
                        Some(v) => println!("refined delta{}: {v}", kind.tag()),
                        None => println!("refined delta{}: none", kind.tag()),
                    }
                }
            }
            None => println!("refine skipped: no grid point to refine around"),
        }
    }
    Ok(())
}

fn write_order_csv(
    pool: &PoolSet64,
    order: &[usize],
    pool_rows: &[usize],
    step_len: usize,
    path: &Path,
) -> Result<()> {
    let mut text = String::from("step,index,group\n");
    for (i, &local) in order.iter().enumerate() {
        let row = pool_rows[local];
        text.push_str(&format!(
            "{},{},{}\n",
            i / step_len + 1,
            row,
            pool.group_of(row).bit()
        ));
    }
    write_atomic(path, text.as_bytes())
}

fn run_acquire(a: &AcquireArgs) -> Result<()> {
    let pool = load_pool_csv(&a.pool)?;
    let overrides = DeltaOverrides {
        delta_11: a.delta_11,
        delta_10: a.delta_10,
        delta_00: a.delta_00,
        delta_01: a.delta_01,
    };
    let config = ExperimentConfig {
        init: parse_init(&a.init, a.init_k)?,
        method: parse_method(&a.method)?,
        steps: a.steps,
        step_len: a.step_len,
        seeds: vec![a.seed],
        coverage: coverage_from_parts(a.delta, &overrides, a.alpha),
        split: parse_split(&a.split)?,
    };
    let format = format_from_path(&a.out)?;
    let report = run_experiment(&pool, &config)?;
    emit_report(&report.rows, format, &a.out)?;
    if let Some(order_out) = &a.order_out {
        let (pool_rows, _, _) = split_membership(pool.n(), a.seed, &config.split)?;
        let (_, order) = &report.seed_orders[0];
        write_order_csv(&pool, order, &pool_rows, config.step_len, order_out)?;
        println!("order -> {}", order_out.display());
    }
    println!("wrote {} ({} rows)", a.out.display(), report.rows.len());
    if !report.truncated_seeds.is_empty() {
        println!("note: candidates ran out before the acquisition budget");
    }
    Ok(())
}

fn run_oracle_radius_sum(a: &RadiusSumArgs) -> Result<()> {
    if a.budget < 4 {
        return Err(Error::Config(format!(
            "budget must fund all four radius kinds, so at least 4; got {}",
            a.budget
        )));
    }
    let pool = random_instance(a.n, a.seed)?;
    let index = build_distance_index(&pool)?;
    let groups = pool.groups();
    let oracle = optimal_radius_sum(&index, groups, a.budget)?;
    let init = SelectionState::with_selected(
        groups,
        &[
            groups.members(Group::Treated)[0],
            groups.members(Group::Control)[0],
        ],
    )?;
    let trace = run_greedy(&index, groups, &init, a.budget - 2)?;
    let achieved = trace
        .steps
        .last()
        .map_or(trace.initial.sum, |s| s.radii_after.sum);
    println!("instance: n={} seed={} budget={}", a.n, a.seed, a.budget);
    println!("greedy delta_sum: {achieved}");
    println!("optimal delta_sum: {}", oracle.best_value);
    println!("ratio: {} (bound 2)", achieved / oracle.best_value);
    println!("subsets enumerated: {}", oracle.enumerated);
    Ok(())
}

fn run_oracle_coverage(a: &CoverageArgs) -> Result<()> {
    let pool = random_instance(a.n, a.seed)?;
    let index = build_distance_index(&pool)?;
    let config = CoverageConfig::uniform(a.delta, 1.0);
    let mut graph = build_ball_graph(&index, pool.groups(), &config)?;
    let oracle = optimal_coverage(&graph, a.budget, GroupFilter::Both)?;
    let init = SelectionState::new(pool.n());
    fccm_select(
        &mut graph,
        &init,
        a.budget,
        GroupFilter::Both,
        ScoreMode::Unscaled,
    )?;
    let achieved = graph.covered_marks();
    println!(
        "instance: n={} seed={} budget={} delta={}",
        a.n, a.seed, a.budget, a.delta
    );
    println!("greedy covered marks: {achieved}");
    println!("optimal covered marks: {}", oracle.best_value);
    println!(
        "ratio: {} (bound 0.6321205588285577)",
        achieved as f64 / oracle.best_value
    );
    println!("subsets enumerated: {}", oracle.enumerated);
    Ok(())
}

fn run_bench_cmd(a: &BenchArgs) -> Result<()> {
    let text = fs::read_to_string(&a.config)?;
    let config = parse_bench_config(&text)?;
    for line in run_bench(&config, &a.out)? {
        println!("{line}");
    }
    Ok(())
}

fn write_aggregate_csv(aggs: &[StepAggregate<f64>], path: &Path) -> Result<()> {
    let mut text = String::from(
        "step,n_seeds,mean_labeled,mean_sqrt_pehe,std_sqrt_pehe,mean_coverage,std_coverage,\
         mean_delta_sum,std_delta_sum\n",
    );
    for a in aggs {
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            a.step,
            a.n_seeds,
            a.mean_labeled,
            a.mean_sqrt_pehe,
            a.std_sqrt_pehe,
            a.mean_coverage,
            a.std_coverage,
            a.mean_delta_sum,
            a.std_delta_sum
        ));
    }
    write_atomic(path, text.as_bytes())
}

fn run_report(a: &ReportArgs) -> Result<()> {
    let rows: Vec<ReportRow<f64>> = match format_from_path(&a.input)? {
        ReportFormat::Csv => read_report_csv(&a.input)?,
        ReportFormat::Json => read_report_json(&a.input)?,
    };
    emit_report(&rows, format_from_path(&a.out)?, &a.out)?;
    if let Some(agg_out) = &a.aggregate_out {
        write_aggregate_csv(&aggregate(&rows), agg_out)?;
        println!("aggregate -> {}", agg_out.display());
    }
    println!("wrote {} ({} rows)", a.out.display(), rows.len());
    Ok(())
}
