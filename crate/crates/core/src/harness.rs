//! Experiment driver: split a labeled pool, seed an initial selection, run an
//! acquisition method step by step, and log radii, coverage, and estimator
//! error after every step.
//!
//! Acquisition methods only ever see geometry and treatment arms. The pool's
//! outcomes enter exclusively through estimator fitting and evaluation, so a
//! selection order can never depend on a label the method has not paid for.
//! `run_experiment` enforces this structurally: `acquire` takes the distance
//! index and group assignment, not the pool.

use std::cmp::Ordering;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::coverage::{build_ball_graph, CoverageConfig, CoverageReport, GroupFilter};
use crate::dataset::{build_distance_index, DistanceIndex, Group, Groups, PoolSet};
use crate::error::{Error, Result};
use crate::estimate::{sqrt_pehe, TwoHeadedEstimator};
use crate::fccm::{fccm_select, ScoreMode};
use crate::greedy_radius::run_greedy;
use crate::io_util::write_atomic;
use crate::radii::{NearestCache, RadiusKind, SelectionState};
use crate::scalar::{real_usize, Real};

/// ChaCha stream ids deriving independent per-seed randomness for the three
/// places the harness draws at all. Keeping them on separate streams means
/// e.g. changing the split fractions never shifts the initial selection.
const STREAM_SPLIT: u64 = 11;
const STREAM_INIT: u64 = 12;
const STREAM_RANDOM: u64 = 13;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// How the labeled set is seeded before acquisition starts.
///
/// `KRandomPerGroup` draws positions keyed only by group size, so two groups
/// of equal size receive the same positions. On a pool whose arms are copies
/// of each other this makes the initial selections twins, which is what the
/// paired-radii experiment needs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitPolicy {
    /// Pre-label one arm completely; acquisition then targets the other arm.
    AllOf(Group),
    /// Label k random units in each arm; acquisition stays open to both.
    KRandomPerGroup(usize),
}

impl InitPolicy {
    /// Which units acquisition may pick, derived from how the run started:
    /// a fully labeled arm is never acquired from again.
    pub fn acquisition_filter(self) -> GroupFilter {
        match self {
            InitPolicy::AllOf(g) => GroupFilter::Only(g.other()),
            InitPolicy::KRandomPerGroup(_) => GroupFilter::Both,
        }
    }
}

/// Acquisition strategy under comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Scaled factual + counterfactual coverage maximization.
    Fccm,
    /// Same, with both counterfactual radii forced to zero during scoring.
    FccmMinus,
    /// Greedy largest-radius reduction.
    GreedyRadius,
    /// Uniformly random order over the admitted candidates.
    Random,
    /// Farthest-point traversal within each unit's own arm.
    KCenterFactual,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Fccm,
        Method::FccmMinus,
        Method::GreedyRadius,
        Method::Random,
        Method::KCenterFactual,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Fccm => "fccm",
            Method::FccmMinus => "fccm-minus",
            Method::GreedyRadius => "greedy-radius",
            Method::Random => "random",
            Method::KCenterFactual => "kcenter-factual",
        }
    }

    pub fn from_name(name: &str) -> Option<Method> {
        Method::ALL.into_iter().find(|m| m.name() == name)
    }
}

/// Fractions of the pool routed to acquisition, validation, and test.
#[derive(Clone, Copy, Debug)]
pub struct SplitFractions<F> {
    pub pool: F,
    pub val: F,
    pub test: F,
}

impl<F: Real> SplitFractions<F> {
    pub fn new(pool: F, val: F, test: F) -> SplitFractions<F> {
        SplitFractions { pool, val, test }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("pool", self.pool), ("val", self.val), ("test", self.test)] {
            if !(v >= F::zero() && v <= F::one()) {
                return Err(Error::Config(format!(
                    "split fraction {name} must lie in [0, 1]"
                )));
            }
        }
        let sum = self.pool + self.val + self.test;
        if (sum - F::one()).abs() > crate::scalar::real(1e-9) {
            return Err(Error::Config("split fractions must sum to 1".into()));
        }
        Ok(())
    }

    /// Deterministic counts: pool and val round half-up, test takes the
    /// remainder. Each non-empty part must hold at least two units so it can
    /// form a pool of its own.
    pub fn counts(&self, n: usize) -> Result<(usize, usize, usize)> {
        self.validate()?;
        let nf = n as f64;
        let pool_n = (self.pool.to_f64().unwrap() * nf).round() as usize;
        let mut val_n = (self.val.to_f64().unwrap() * nf).round() as usize;
        if pool_n + val_n > n {
            val_n = n - pool_n;
        }
        let test_n = n - pool_n - val_n;
        for (name, c) in [("pool", pool_n), ("val", val_n), ("test", test_n)] {
            if c == 1 {
                return Err(Error::Config(format!(
                    "{name} split would hold a single unit; use 0 or at least 2"
                )));
            }
        }
        if pool_n < 2 {
            return Err(Error::Config("pool split needs at least 2 units".into()));
        }
        Ok((pool_n, val_n, test_n))
    }
}

/// Full specification of one experiment (minus the pool itself).
#[derive(Clone, Debug)]
pub struct ExperimentConfig<F> {
    pub init: InitPolicy,
    pub method: Method,
    /// Acquisition steps after initialization; 0 logs only the initial row.
    pub steps: usize,
    /// Units acquired per step.
    pub step_len: usize,
    pub seeds: Vec<u64>,
    pub coverage: CoverageConfig<F>,
    pub split: SplitFractions<F>,
}

impl<F: Real> ExperimentConfig<F> {
    pub fn validate(&self) -> Result<()> {
        if self.step_len == 0 {
            return Err(Error::Config("step_len must be at least 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if let InitPolicy::KRandomPerGroup(0) = self.init {
            return Err(Error::Config("KRandomPerGroup needs k >= 1".into()));
        }
        if self.method == Method::GreedyRadius {
            if let InitPolicy::AllOf(_) = self.init {
                return Err(Error::Config(
                    "greedy radius reduction needs both arms initialized; \
                     AllOf leaves one arm empty"
                        .into(),
                ));
            }
        }
        self.coverage.validate()?;
        self.split.validate()
    }
}

/// One logged step of one seeded run. Radii are normalized by the pool
/// diameter; a radius whose center arm is still empty is logged as 1.0, the
/// largest value any defined radius can take, so trajectories stay
/// non-increasing once the arm is seeded.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReportRow<F> {
    pub seed: u64,
    pub step: usize,
    pub labeled_count: usize,
    pub delta_11: F,
    pub delta_10: F,
    pub delta_00: F,
    pub delta_01: F,
    pub delta_sum: F,
    pub p_f_t1: F,
    pub p_cf_t1: F,
    pub p_f_t0: F,
    pub p_cf_t0: F,
    pub mean_coverage: F,
    /// NaN when no estimator can be fit yet (an arm still unlabeled) or the
    /// run has no test split.
    pub sqrt_pehe: F,
}

/// Everything a run produced. `seed_orders` holds each seed's acquisition
/// sequence in pool-split-local indices; selection hygiene tests compare
/// these across outcome perturbations.
#[derive(Clone, Debug)]
pub struct RunReport<F> {
    pub rows: Vec<ReportRow<F>>,
    pub seed_orders: Vec<(u64, Vec<usize>)>,
    /// Seeds whose candidate supply ran out before the acquisition budget.
    pub truncated_seeds: Vec<u64>,
    /// Final-state estimator error on the validation split, per seed. NaN
    /// when the run has no validation split.
    pub final_val: Vec<(u64, F)>,
}

struct SeedRun<F> {
    seed: u64,
    rows: Vec<ReportRow<F>>,
    order: Vec<usize>,
    truncated: bool,
    final_val: F,
}

/// One acquisition: the unit paid for, plus the counterfactual witness the
/// radius-greedy method registers alongside it.
struct Acquisition {
    index: usize,
    proxy: Option<usize>,
}

fn shuffled_indices(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut stream_rng(seed, STREAM_SPLIT));
    idx
}

/// First k positions of a seeded permutation of 0..len, ascending. Keyed by
/// `len` and the seed alone.
fn sample_positions(len: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut pos: Vec<usize> = (0..len).collect();
    for i in 0..k {
        let j = rng.random_range(i..len);
        pos.swap(i, j);
    }
    let mut picked = pos[..k].to_vec();
    picked.sort_unstable();
    picked
}

fn initial_selection(groups: &Groups, policy: InitPolicy, seed: u64) -> Result<SelectionState> {
    match policy {
        InitPolicy::AllOf(g) => SelectionState::with_selected(groups, groups.members(g)),
        InitPolicy::KRandomPerGroup(k) => {
            let mut state = SelectionState::new(groups.n());
            for g in Group::BOTH {
                let members = groups.members(g);
                if k > members.len() {
                    return Err(Error::Config(format!(
                        "initial selection wants {k} units per arm but one arm has {}",
                        members.len()
                    )));
                }
                // A fresh stream per arm, keyed only by the seed: equal-size
                // arms draw equal positions.
                let mut rng = stream_rng(seed, STREAM_INIT);
                for p in sample_positions(members.len(), k, &mut rng) {
                    state.select(groups, members[p])?;
                }
            }
            Ok(state)
        }
    }
}

/// Runs the configured method for up to `budget` acquisitions. Sees geometry
/// and arms only.
fn acquire<F: Real>(
    index: &DistanceIndex<F>,
    groups: &Groups,
    config: &ExperimentConfig<F>,
    init: &SelectionState,
    budget: usize,
    seed: u64,
) -> Result<(Vec<Acquisition>, bool)> {
    let filter = config.init.acquisition_filter();
    match config.method {
        Method::Fccm | Method::FccmMinus => {
            let cov = if config.method == Method::FccmMinus {
                config.coverage.counterfactual_zeroed()
            } else {
                config.coverage
            };
            let mut graph = build_ball_graph(index, groups, &cov)?;
            let run = fccm_select(&mut graph, init, budget, filter, ScoreMode::Scaled)?;
            let acqs = run
                .order
                .iter()
                .map(|&v| Acquisition {
                    index: v,
                    proxy: None,
                })
                .collect();
            Ok((acqs, run.truncated))
        }
        Method::GreedyRadius => {
            let trace = run_greedy(index, groups, init, budget)?;
            let acqs = trace
                .steps
                .iter()
                .map(|s| Acquisition {
                    index: s.index,
                    proxy: s.proxy,
                })
                .collect();
            Ok((acqs, trace.saturated))
        }
        Method::Random => {
            let mut candidates: Vec<usize> = (0..groups.n())
                .filter(|&v| !init.is_selected(v) && filter.admits(groups.group_of(v)))
                .collect();
            candidates.shuffle(&mut stream_rng(seed, STREAM_RANDOM));
            candidates.truncate(budget);
            let truncated = candidates.len() < budget;
            let acqs = candidates
                .into_iter()
                .map(|v| Acquisition {
                    index: v,
                    proxy: None,
                })
                .collect();
            Ok((acqs, truncated))
        }
        Method::KCenterFactual => {
            let n = groups.n();
            let mut own_min = vec![F::infinity(); n];
            let absorb = |sel: usize, own_min: &mut Vec<F>| {
                for &i in groups.members(groups.group_of(sel)) {
                    let d = index.dist(i, sel);
                    if d < own_min[i] {
                        own_min[i] = d;
                    }
                }
            };
            for v in init.all_selected() {
                absorb(v, &mut own_min);
            }
            let mut eligible: Vec<bool> = (0..n)
                .map(|v| !init.is_selected(v) && filter.admits(groups.group_of(v)))
                .collect();
            let mut acqs = Vec::with_capacity(budget);
            for _ in 0..budget {
                // Farthest-first: unseeded arms carry infinite distance and
                // win immediately; strict > keeps the lowest index on ties.
                let mut best: Option<usize> = None;
                for v in 0..n {
                    if !eligible[v] {
                        continue;
                    }
                    if best.is_none_or(|b| own_min[v] > own_min[b]) {
                        best = Some(v);
                    }
                }
                let Some(v) = best else { break };
                eligible[v] = false;
                absorb(v, &mut own_min);
                acqs.push(Acquisition {
                    index: v,
                    proxy: None,
                });
            }
            let truncated = acqs.len() < budget;
            Ok((acqs, truncated))
        }
    }
}

/// Fits on the labeled part of `pool` and scores on `eval`. NaN whenever no
/// estimator exists yet (an arm unlabeled, outcomes absent) or there is
/// nothing to score against.
fn eval_pehe<F: Real>(pool: &PoolSet<F>, state: &SelectionState, eval: Option<&PoolSet<F>>) -> F {
    let Some(target) = eval else {
        return F::nan();
    };
    match TwoHeadedEstimator::fit_from_pool(pool, state).and_then(|est| sqrt_pehe(&est, target)) {
        Ok(r) => r.sqrt_pehe,
        Err(_) => F::nan(),
    }
}

fn capped_normalized<F: Real>(
    cache: &NearestCache<F>,
    index: &DistanceIndex<F>,
    groups: &Groups,
    state: &SelectionState,
    kind: RadiusKind,
) -> F {
    let r = cache.radius_or_inf(groups, state, kind);
    if r.is_finite() {
        index.normalized(r)
    } else {
        F::one()
    }
}

#[allow(clippy::too_many_arguments)]
fn make_row<F: Real>(
    seed: u64,
    step: usize,
    pool: &PoolSet<F>,
    index: &DistanceIndex<F>,
    state: &SelectionState,
    cache: &NearestCache<F>,
    report: CoverageReport<F>,
    test: Option<&PoolSet<F>>,
) -> ReportRow<F> {
    let groups = pool.groups();
    let d11 = capped_normalized(cache, index, groups, state, RadiusKind::FactualTreated);
    let d10 = capped_normalized(
        cache,
        index,
        groups,
        state,
        RadiusKind::CounterfactualTreated,
    );
    let d00 = capped_normalized(cache, index, groups, state, RadiusKind::FactualControl);
    let d01 = capped_normalized(
        cache,
        index,
        groups,
        state,
        RadiusKind::CounterfactualControl,
    );
    ReportRow {
        seed,
        step,
        labeled_count: state.total_selected(),
        delta_11: d11,
        delta_10: d10,
        delta_00: d00,
        delta_01: d01,
        delta_sum: d11 + d10 + d00 + d01,
        p_f_t1: report.p_f_t1,
        p_cf_t1: report.p_cf_t1,
        p_f_t0: report.p_f_t0,
        p_cf_t0: report.p_cf_t0,
        mean_coverage: report.mean,
        sqrt_pehe: eval_pehe(pool, state, test),
    }
}

/// Pool, validation, and test membership for one seed, as original-pool row
/// indices. The seeded permutation decides membership only; every part is
/// sorted back into the pool's row order, so the degenerate (1, 0, 0) split
/// is exactly the identity. This is the mapping that turns a run's
/// split-local acquisition order back into pool rows.
pub fn split_membership<F: Real>(
    n: usize,
    seed: u64,
    split: &SplitFractions<F>,
) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    let (pool_n, val_n, _) = split.counts(n)?;
    let perm = shuffled_indices(n, seed);
    let part = |range: std::ops::Range<usize>| {
        let mut idx = perm[range].to_vec();
        idx.sort_unstable();
        idx
    };
    Ok((
        part(0..pool_n),
        part(pool_n..pool_n + val_n),
        part(pool_n + val_n..n),
    ))
}

fn run_seed<F: Real>(
    pool: &PoolSet<F>,
    config: &ExperimentConfig<F>,
    seed: u64,
) -> Result<SeedRun<F>> {
    let (pool_idx, val_idx, test_idx) = split_membership(pool.n(), seed, &config.split)?;
    let pool_split = pool.subset(&pool_idx)?;
    let val_split = if val_idx.is_empty() {
        None
    } else {
        Some(pool.subset(&val_idx)?)
    };
    let test_split = if test_idx.is_empty() {
        None
    } else {
        Some(pool.subset(&test_idx)?)
    };

    let index = build_distance_index(&pool_split)?;
    let groups = pool_split.groups();
    let init = initial_selection(groups, config.init, seed)?;
    let budget = config.steps * config.step_len;
    let (acqs, truncated) = acquire(&index, groups, config, &init, budget, seed)?;

    // Replay the order against the true coverage radii. Methods that score
    // on altered radii (the counterfactual-blind ablation) still get their
    // achieved coverage measured on the real definition.
    let mut graph = build_ball_graph(&index, groups, &config.coverage)?;
    graph.reset_coverage();
    let mut state = init.clone();
    let mut cache = NearestCache::from_state(&index, groups, &state);
    for v in state.all_selected() {
        graph.mark_covered(v)?;
    }

    let mut rows = Vec::with_capacity(config.steps + 1);
    rows.push(make_row(
        seed,
        0,
        &pool_split,
        &index,
        &state,
        &cache,
        graph.coverage_report(),
        test_split.as_ref(),
    ));
    for (k, chunk) in acqs.chunks(config.step_len).enumerate() {
        for a in chunk {
            state.select(groups, a.index)?;
            cache.note_selection(&index, groups, a.index);
            if let Some(p) = a.proxy {
                state.add_proxy(groups, p);
            }
            graph.mark_covered(a.index)?;
        }
        rows.push(make_row(
            seed,
            k + 1,
            &pool_split,
            &index,
            &state,
            &cache,
            graph.coverage_report(),
            test_split.as_ref(),
        ));
    }

    let final_val = eval_pehe(&pool_split, &state, val_split.as_ref());
    Ok(SeedRun {
        seed,
        rows,
        order: acqs.iter().map(|a| a.index).collect(),
        truncated,
        final_val,
    })
}

/// Runs the configured experiment over all seeds (in parallel) and returns
/// every seed's rows concatenated in the order the seeds were given.
pub fn run_experiment<F: Real>(
    pool: &PoolSet<F>,
    config: &ExperimentConfig<F>,
) -> Result<RunReport<F>> {
    config.validate()?;
    config.split.counts(pool.n())?;
    let runs: Vec<SeedRun<F>> = config
        .seeds
        .par_iter()
        .map(|&seed| run_seed(pool, config, seed))
        .collect::<Result<_>>()?;

    let mut report = RunReport {
        rows: Vec::new(),
        seed_orders: Vec::new(),
        truncated_seeds: Vec::new(),
        final_val: Vec::new(),
    };
    for run in runs {
        report.rows.extend(run.rows);
        report.seed_orders.push((run.seed, run.order));
        if run.truncated {
            report.truncated_seeds.push(run.seed);
        }
        report.final_val.push((run.seed, run.final_val));
    }
    Ok(report)
}

/// Per-step mean and sample standard deviation across seeds. Steps missing
/// from truncated seeds aggregate over the seeds that reached them.
#[derive(Clone, Copy, Debug)]
pub struct StepAggregate<F> {
    pub step: usize,
    pub n_seeds: usize,
    pub mean_labeled: F,
    pub mean_sqrt_pehe: F,
    pub std_sqrt_pehe: F,
    pub mean_coverage: F,
    pub std_coverage: F,
    pub mean_delta_sum: F,
    pub std_delta_sum: F,
}

fn mean_std<F: Real>(values: &[F]) -> (F, F) {
    let n = values.len();
    if n == 0 {
        return (F::nan(), F::nan());
    }
    let nf = real_usize::<F>(n);
    let mut sum = F::zero();
    for &v in values {
        sum = sum + v;
    }
    let mean = sum / nf;
    if n == 1 {
        return (mean, F::zero());
    }
    let mut ss = F::zero();
    for &v in values {
        let d = v - mean;
        ss = ss + d * d;
    }
    (mean, (ss / (nf - F::one())).sqrt())
}

pub fn aggregate<F: Real>(rows: &[ReportRow<F>]) -> Vec<StepAggregate<F>> {
    let mut steps: Vec<usize> = rows.iter().map(|r| r.step).collect();
    steps.sort_unstable();
    steps.dedup();
    steps
        .into_iter()
        .map(|step| {
            let at: Vec<&ReportRow<F>> = rows.iter().filter(|r| r.step == step).collect();
            let collect =
                |f: &dyn Fn(&ReportRow<F>) -> F| -> Vec<F> { at.iter().map(|r| f(r)).collect() };
            let (mean_labeled, _) = mean_std(&collect(&|r| real_usize(r.labeled_count)));
            let (mean_sqrt_pehe, std_sqrt_pehe) = mean_std(&collect(&|r| r.sqrt_pehe));
            let (mean_coverage, std_coverage) = mean_std(&collect(&|r| r.mean_coverage));
            let (mean_delta_sum, std_delta_sum) = mean_std(&collect(&|r| r.delta_sum));
            StepAggregate {
                step,
                n_seeds: at.len(),
                mean_labeled,
                mean_sqrt_pehe,
                std_sqrt_pehe,
                mean_coverage,
                std_coverage,
                mean_delta_sum,
                std_delta_sum,
            }
        })
        .collect()
}

/// Result of one sweep point: the full report plus the two headline means.
#[derive(Clone, Debug)]
pub struct AlphaSummary<F> {
    pub alpha: F,
    /// Mean final-state error on the validation split; the sweep ranks on
    /// this so the test split never participates in selection.
    pub mean_final_val: F,
    /// Mean last-row error on the test split, reported for the record.
    pub mean_final_test: F,
    pub report: RunReport<F>,
}

fn nan_last<F: Real>(a: F, b: F) -> Ordering {
    match (a.is_nan(), b.is_nan()) {
        (true, true) => Ordering::Equal,
        (true, false) => Ordering::Greater,
        (false, true) => Ordering::Less,
        (false, false) => a.partial_cmp(&b).unwrap(),
    }
}

/// Runs the experiment once per candidate alpha and ranks the candidates by
/// mean final validation error, ascending (ties by alpha). The winner is the
/// first element.
pub fn sweep_alpha<F: Real>(
    pool: &PoolSet<F>,
    config: &ExperimentConfig<F>,
    alphas: &[F],
) -> Result<Vec<AlphaSummary<F>>> {
    if alphas.is_empty() {
        return Err(Error::Config(
            "alpha sweep needs at least one candidate".into(),
        ));
    }
    let mut out = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let mut cfg = config.clone();
        cfg.coverage.alpha = alpha;
        let report = run_experiment(pool, &cfg)?;
        let vals: Vec<F> = report.final_val.iter().map(|&(_, v)| v).collect();
        let (mean_final_val, _) = mean_std(&vals);
        let finals: Vec<F> = config
            .seeds
            .iter()
            .map(|&s| {
                report
                    .rows
                    .iter()
                    .rfind(|r| r.seed == s)
                    .map_or(F::nan(), |r| r.sqrt_pehe)
            })
            .collect();
        let (mean_final_test, _) = mean_std(&finals);
        out.push(AlphaSummary {
            alpha,
            mean_final_val,
            mean_final_test,
            report,
        });
    }
    out.sort_by(|a, b| {
        nan_last(a.mean_final_val, b.mean_final_val)
            .then_with(|| a.alpha.partial_cmp(&b.alpha).unwrap())
    });
    Ok(out)
}

/// Checkpoints at fifths of the step budget: steps/5, 2·steps/5, ..., steps.
pub fn checkpoint_fifths(steps: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (1..=5).map(|k| k * steps / 5).filter(|&s| s > 0).collect();
    out.dedup();
    out
}

/// Error comparison between an ablated run and the full method at the given
/// step checkpoints. Positive gain means the full method's mean error is
/// lower at that step.
#[derive(Clone, Copy, Debug)]
pub struct AblationRow<F> {
    pub step: usize,
    pub mean_labeled: F,
    pub mean_ablated: F,
    pub mean_full: F,
    /// (ablated - full) / ablated, in percent.
    pub gain_percent: F,
}

pub fn ablation_gains<F: Real>(
    ablated: &[ReportRow<F>],
    full: &[ReportRow<F>],
    checkpoints: &[usize],
) -> Vec<AblationRow<F>> {
    let ab = aggregate(ablated);
    let fu = aggregate(full);
    let find = |agg: &[StepAggregate<F>], step: usize| {
        agg.iter()
            .find(|a| a.step == step)
            .map(|a| (a.mean_sqrt_pehe, a.mean_labeled))
    };
    checkpoints
        .iter()
        .filter_map(|&step| {
            let (mean_ablated, _) = find(&ab, step)?;
            let (mean_full, mean_labeled) = find(&fu, step)?;
            let gain_percent =
                (mean_ablated - mean_full) / mean_ablated * crate::scalar::real(100.0);
            Some(AblationRow {
                step,
                mean_labeled,
                mean_ablated,
                mean_full,
                gain_percent,
            })
        })
        .collect()
}

/// Column order shared by both report formats.
pub const REPORT_COLUMNS: [&str; 14] = [
    "seed",
    "step",
    "labeled_count",
    "delta_11",
    "delta_10",
    "delta_00",
    "delta_01",
    "delta_sum",
    "p_f_t1",
    "p_cf_t1",
    "p_f_t0",
    "p_cf_t0",
    "mean_coverage",
    "sqrt_pehe",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl ReportFormat {
    pub fn from_name(name: &str) -> Option<ReportFormat> {
        match name {
            "csv" => Some(ReportFormat::Csv),
            "json" => Some(ReportFormat::Json),
            _ => None,
        }
    }
}

fn float_fields<F: Real>(row: &ReportRow<F>) -> [F; 11] {
    [
        row.delta_11,
        row.delta_10,
        row.delta_00,
        row.delta_01,
        row.delta_sum,
        row.p_f_t1,
        row.p_cf_t1,
        row.p_f_t0,
        row.p_cf_t0,
        row.mean_coverage,
        row.sqrt_pehe,
    ]
}

/// Renders rows in the shared column order. CSV keeps NaN as the literal
/// `NaN`; JSON (which has no NaN) writes `null` for it.
pub fn render_report<F: Real>(rows: &[ReportRow<F>], format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => {
            let mut out = REPORT_COLUMNS.join(",");
            out.push('\n');
            for row in rows {
                out.push_str(&format!("{},{},{}", row.seed, row.step, row.labeled_count));
                for v in float_fields(row) {
                    out.push_str(&format!(",{}", v.to_f64().unwrap_or(f64::NAN)));
                }
                out.push('\n');
            }
            out
        }
        ReportFormat::Json => {
            let mut out = String::from("[");
            for (i, row) in rows.iter().enumerate() {
                out.push_str(if i == 0 { "\n" } else { ",\n" });
                out.push_str(&format!(
                    "{{\"seed\":{},\"step\":{},\"labeled_count\":{}",
                    row.seed, row.step, row.labeled_count
                ));
                for (name, v) in REPORT_COLUMNS[3..].iter().zip(float_fields(row)) {
                    let v = v.to_f64().unwrap_or(f64::NAN);
                    if v.is_finite() {
                        out.push_str(&format!(",\"{name}\":{v}"));
                    } else {
                        out.push_str(&format!(",\"{name}\":null"));
                    }
                }
                out.push('}');
            }
            out.push_str("\n]\n");
            out
        }
    }
}

pub fn emit_report<F: Real>(
    rows: &[ReportRow<F>],
    format: ReportFormat,
    path: &Path,
) -> Result<()> {
    write_atomic(path, render_report(rows, format).as_bytes())
}

fn row_from_parts<F: Real>(
    seed: u64,
    step: usize,
    labeled_count: usize,
    f: [F; 11],
) -> ReportRow<F> {
    ReportRow {
        seed,
        step,
        labeled_count,
        delta_11: f[0],
        delta_10: f[1],
        delta_00: f[2],
        delta_01: f[3],
        delta_sum: f[4],
        p_f_t1: f[5],
        p_cf_t1: f[6],
        p_f_t0: f[7],
        p_cf_t0: f[8],
        mean_coverage: f[9],
        sqrt_pehe: f[10],
    }
}

/// Reads rows back from the CSV format. Only the rows round-trip; acquisition
/// orders and truncation flags live in `RunReport` and are not serialized.
pub fn read_report_csv<F: Real>(path: &Path) -> Result<Vec<ReportRow<F>>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let Some((_, header)) = lines.next() else {
        return Err(Error::CsvFormat {
            line: 1,
            msg: "empty report".into(),
        });
    };
    if header != REPORT_COLUMNS.join(",") {
        return Err(Error::CsvFormat {
            line: 1,
            msg: "unexpected header".into(),
        });
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let lineno = i as u64 + 1;
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != REPORT_COLUMNS.len() {
            return Err(Error::CsvFormat {
                line: lineno,
                msg: format!(
                    "expected {} fields, got {}",
                    REPORT_COLUMNS.len(),
                    parts.len()
                ),
            });
        }
        let bad = |what: &str| Error::CsvFormat {
            line: lineno,
            msg: what.into(),
        };
        let seed: u64 = parts[0].parse().map_err(|_| bad("seed"))?;
        let step: usize = parts[1].parse().map_err(|_| bad("step"))?;
        let labeled: usize = parts[2].parse().map_err(|_| bad("labeled_count"))?;
        let mut f = [F::nan(); 11];
        for (k, raw) in parts[3..].iter().enumerate() {
            let v: f64 = raw.parse().map_err(|_| bad(REPORT_COLUMNS[3 + k]))?;
            f[k] = crate::scalar::real(v);
        }
        rows.push(row_from_parts(seed, step, labeled, f));
    }
    Ok(rows)
}

/// Reads rows back from the JSON format; `null` restores NaN.
pub fn read_report_json<F: Real>(path: &Path) -> Result<Vec<ReportRow<F>>> {
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("report is not valid JSON: {e}")))?;
    let Some(items) = value.as_array() else {
        return Err(Error::Config("report JSON must be an array of rows".into()));
    };
    let mut rows = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let obj = item
            .as_object()
            .ok_or_else(|| Error::Config(format!("row {i} is not an object")))?;
        let int = |name: &str| -> Result<u64> {
            obj.get(name)
                .and_then(|v| v.as_u64())
                .ok_or_else(|| Error::Config(format!("row {i}: bad field {name}")))
        };
        let seed = int("seed")?;
        let step = int("step")? as usize;
        let labeled = int("labeled_count")? as usize;
        let mut f = [F::nan(); 11];
        for (k, name) in REPORT_COLUMNS[3..].iter().enumerate() {
            let v = obj
                .get(*name)
                .ok_or_else(|| Error::Config(format!("row {i}: missing field {name}")))?;
            f[k] = if v.is_null() {
                F::nan()
            } else {
                crate::scalar::real(
                    v.as_f64()
                        .ok_or_else(|| Error::Config(format!("row {i}: bad field {name}")))?,
                )
            };
        }
        rows.push(row_from_parts(seed, step, labeled, f));
    }
    Ok(rows)
}
