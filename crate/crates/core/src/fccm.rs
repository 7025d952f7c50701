//! Coverage-maximizing acquisition: each round selects the candidate whose
//! balls hold the most still-uncovered targets, weighted and scaled.
//!
//! The scaled score is `(uf + alpha * uc) * zeta * (1 - zeta)` with
//! `zeta = uf / (uf + uc)` over uncovered targets only. The parabola factor
//! peaks when a candidate covers factual and counterfactual ground evenly and
//! vanishes when it covers only one side, which steers selection toward
//! cross-group frontier points.

use crate::coverage::{BallGraph, CoverageReport, GroupFilter};
use crate::dataset::{DistanceIndex, Groups};
use crate::error::Result;
use crate::radii::SelectionState;
use crate::scalar::{real_usize, Real};

/// Downward parabola `zeta * (1 - zeta)`: 0 at the endpoints, 1/4 at 1/2.
pub fn scale_coefficient<F: Real>(zeta: F) -> F {
    zeta * (F::one() - zeta)
}

/// Score breakdown of one candidate at the current coverage state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeScore<F> {
    pub node: usize,
    /// Uncovered factual targets + alpha x uncovered counterfactual targets.
    pub weighted_out_degree: F,
    /// Uncovered factual share of the candidate's uncovered targets; 0 when
    /// it has none at all.
    pub zeta: F,
    pub scale_c: F,
    pub scaled_degree: F,
}

fn score_from_counts<F: Real>(node: usize, uf: usize, uc: usize, alpha: F) -> NodeScore<F> {
    let weighted = real_usize::<F>(uf) + alpha * real_usize::<F>(uc);
    if uf + uc == 0 {
        return NodeScore {
            node,
            weighted_out_degree: F::zero(),
            zeta: F::zero(),
            scale_c: F::zero(),
            scaled_degree: F::zero(),
        };
    }
    let zeta = real_usize::<F>(uf) / real_usize::<F>(uf + uc);
    let scale_c = scale_coefficient(zeta);
    NodeScore {
        node,
        weighted_out_degree: weighted,
        zeta,
        scale_c,
        scaled_degree: weighted * scale_c,
    }
}

/// Scores `node` by walking its balls and counting uncovered targets.
pub fn score_node<F: Real>(graph: &BallGraph<F>, node: usize, alpha: F) -> NodeScore<F> {
    let uf = graph
        .factual_ball(node)
        .iter()
        .filter(|&&u| !graph.is_covered_factual(u))
        .count();
    let uc = graph
        .counterfactual_ball(node)
        .iter()
        .filter(|&&u| !graph.is_covered_counterfactual(u))
        .count();
    score_from_counts(node, uf, uc, alpha)
}

/// How candidates are ranked each round.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ScoreMode {
    /// Weighted degree times the parabola coefficient (the default).
    Scaled,
    /// Raw marginal weighted degree; classical greedy max coverage. Exists so
    /// the coverage-guarantee property can be checked in the regime it is
    /// proved for.
    Unscaled,
}

/// Result of a coverage-maximization run.
#[derive(Clone, Debug)]
pub struct FccmRun<F> {
    /// Acquired units in order.
    pub order: Vec<usize>,
    /// Coverage after marking the initial selection, before any acquisition.
    pub initial_coverage: CoverageReport<F>,
    /// Coverage after each acquisition; same length as `order`.
    pub coverage: Vec<CoverageReport<F>>,
    /// Per-acquisition flag: the primary score of every candidate was zero
    /// and the fallback ranking decided instead.
    pub degenerate_steps: Vec<bool>,
    /// True when candidates ran out before the budget was spent.
    pub truncated: bool,
    pub final_state: SelectionState,
}

struct DegreeLedger {
    uf: Vec<usize>,
    uc: Vec<usize>,
}

impl DegreeLedger {
    fn new<F: Real>(graph: &BallGraph<F>) -> DegreeLedger {
        DegreeLedger {
            uf: (0..graph.n())
                .map(|v| graph.factual_ball(v).len())
                .collect(),
            uc: (0..graph.n())
                .map(|v| graph.counterfactual_ball(v).len())
                .collect(),
        }
    }

    /// Settles a coverage change: every candidate holding a newly covered
    /// target in its ball loses that target from its uncovered counts.
    /// Factual balls are symmetric within a group, so the holders of a
    /// factual target are exactly the target's own ball; counterfactual
    /// holders come from the incoming edge lists.
    fn absorb<F: Real>(&mut self, graph: &BallGraph<F>, delta: &crate::coverage::MarkDelta) {
        for &x in &delta.newly_factual {
            for &w in graph.factual_ball(x) {
                self.uf[w] -= 1;
            }
        }
        for &x in &delta.newly_counterfactual {
            for &v in graph.incoming_counterfactual(x) {
                self.uc[v] -= 1;
            }
        }
    }
}

/// Picks the next acquisition. Returns the chosen node and whether the
/// degenerate fallback decided.
fn pick<F: Real>(
    graph: &BallGraph<F>,
    state: &SelectionState,
    ledger: &DegreeLedger,
    filter: GroupFilter,
    mode: ScoreMode,
) -> Option<(usize, bool)> {
    let alpha = graph.config().alpha;
    // Primary pass: scaled (or raw marginal) score, ties to more uncovered
    // counterfactual targets, then lowest index via the ascending scan.
    let mut best: Option<(usize, F, usize)> = None;
    for v in 0..graph.n() {
        if state.is_selected(v) || !filter.admits(graph.groups().group_of(v)) {
            continue;
        }
        let score = score_from_counts::<F>(v, ledger.uf[v], ledger.uc[v], alpha);
        let primary = match mode {
            ScoreMode::Scaled => score.scaled_degree,
            ScoreMode::Unscaled => score.weighted_out_degree,
        };
        let better = match &best {
            None => true,
            Some((_, bp, buc)) => primary > *bp || (primary == *bp && ledger.uc[v] > *buc),
        };
        if better {
            best = Some((v, primary, ledger.uc[v]));
        }
    }
    let (node, primary, _) = best?;
    if primary > F::zero() {
        return Some((node, false));
    }
    // Degenerate round: every candidate's primary score is zero. Rank by
    // marginal weighted degree first so remaining uncoverable-by-parabola
    // targets (all-factual or all-counterfactual leftovers) still get
    // covered, then by raw whole-ball degree, then the usual tie rules.
    let mut fallback: Option<(usize, F, F, usize)> = None;
    for v in 0..graph.n() {
        if state.is_selected(v) || !filter.admits(graph.groups().group_of(v)) {
            continue;
        }
        let marginal = real_usize::<F>(ledger.uf[v]) + alpha * real_usize::<F>(ledger.uc[v]);
        let raw = real_usize::<F>(graph.factual_ball(v).len())
            + alpha * real_usize::<F>(graph.counterfactual_ball(v).len());
        let better = match &fallback {
            None => true,
            Some((_, bm, br, buc)) => {
                marginal > *bm
                    || (marginal == *bm && raw > *br)
                    || (marginal == *bm && raw == *br && ledger.uc[v] > *buc)
            }
        };
        if better {
            fallback = Some((v, marginal, raw, ledger.uc[v]));
        }
    }
    fallback.map(|(v, ..)| (v, true))
}

/// Greedy coverage maximization over a prepared ball graph.
///
/// Resets the graph's coverage flags, marks the initial selection covered,
/// then acquires up to `budget` units from the groups `filter` admits,
/// logging coverage after every acquisition. Outcome data never enters:
/// selection sees geometry and treatment assignment only.
pub fn fccm_select<F: Real>(
    graph: &mut BallGraph<F>,
    init: &SelectionState,
    budget: usize,
    filter: GroupFilter,
    mode: ScoreMode,
) -> Result<FccmRun<F>> {
    fccm_select_while(graph, init, budget, filter, mode, |_, _| true)
}

/// [`fccm_select`] with an extra stop condition: after each acquisition,
/// `keep_going` sees the fresh coverage report and the acquisition count and
/// may end the run early. Early stops are not flagged as truncation; that
/// marker stays reserved for running out of candidates.
pub fn fccm_select_while<F: Real>(
    graph: &mut BallGraph<F>,
    init: &SelectionState,
    budget: usize,
    filter: GroupFilter,
    mode: ScoreMode,
    mut keep_going: impl FnMut(&CoverageReport<F>, usize) -> bool,
) -> Result<FccmRun<F>> {
    graph.reset_coverage();
    let mut state = init.clone();
    let mut ledger = DegreeLedger::new(graph);
    for v in init.all_selected() {
        let delta = graph.mark_covered(v)?;
        ledger.absorb(graph, &delta);
    }
    let initial_coverage = graph.coverage_report();
    let mut order = Vec::new();
    let mut coverage = Vec::new();
    let mut degenerate_steps = Vec::new();
    let mut truncated = false;
    for _ in 0..budget {
        let Some((node, degenerate)) = pick(graph, &state, &ledger, filter, mode) else {
            truncated = true;
            break;
        };
        state.select(graph.groups(), node)?;
        let delta = graph.mark_covered(node)?;
        ledger.absorb(graph, &delta);
        order.push(node);
        let report = graph.coverage_report();
        coverage.push(report);
        degenerate_steps.push(degenerate);
        if !keep_going(&report, order.len()) {
            break;
        }
    }
    Ok(FccmRun {
        order,
        initial_coverage,
        coverage,
        degenerate_steps,
        truncated,
        final_state: state,
    })
}

/// Convenience: build the ball graph for `config` and run scaled selection.
pub fn fccm_select_with_config<F: Real>(
    index: &DistanceIndex<F>,
    groups: &Groups,
    config: &crate::coverage::CoverageConfig<F>,
    init: &SelectionState,
    budget: usize,
    filter: GroupFilter,
) -> Result<FccmRun<F>> {
    let mut graph = crate::coverage::build_ball_graph(index, groups, config)?;
    fccm_select(&mut graph, init, budget, filter, ScoreMode::Scaled)
}

/// The factual-only ablation: identical to [`fccm_select_with_config`] with
/// both counterfactual radii forced to zero.
pub fn fccm_minus_select<F: Real>(
    index: &DistanceIndex<F>,
    groups: &Groups,
    config: &crate::coverage::CoverageConfig<F>,
    init: &SelectionState,
    budget: usize,
    filter: GroupFilter,
) -> Result<FccmRun<F>> {
    fccm_select_with_config(
        index,
        groups,
        &config.counterfactual_zeroed(),
        init,
        budget,
        filter,
    )
}
