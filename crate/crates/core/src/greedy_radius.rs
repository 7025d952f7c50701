//! Greedy radius reduction: acquire one label at a time, always attacking the
//! largest of the four covering radii.
//!
//! A factual target is resolved directly by selecting the witness of the max.
//! A counterfactual target cannot be labeled on the opposite side, so the
//! witness becomes a proxy and the nearest same-side point is selected
//! instead; if that nearest point is already labeled the kind is excluded and
//! the max re-run over the remaining radii (exclusions last only for the
//! current step). When every kind is excluded or has an empty quantified set,
//! the run saturates.

use std::path::Path;

use crate::dataset::{DistanceIndex, Group, Groups};
use crate::error::{Error, Result};
use crate::io_util::write_atomic;
use crate::radii::{NearestCache, RadiiReport, RadiusKind, SelectionState};
use crate::scalar::Real;

/// One acquisition: which unit was labeled, which radius it went after, and
/// where all four radii stood afterwards. `fallback_used` marks steps where
/// at least one counterfactual branch was abandoned first.
#[derive(Clone, Debug)]
pub struct GreedyStep<F> {
    pub index: usize,
    pub group: Group,
    pub target: RadiusKind,
    /// Counterfactual witness registered alongside the acquisition, when the
    /// step targeted a counterfactual radius. Needed to replay the state.
    pub proxy: Option<usize>,
    pub radii_after: RadiiReport<F>,
    pub fallback_used: bool,
}

/// Full record of a greedy run.
#[derive(Clone, Debug)]
pub struct GreedyTrace<F> {
    pub initial: RadiiReport<F>,
    pub steps: Vec<GreedyStep<F>>,
    /// True when the run stopped before exhausting its budget because no
    /// radius remained targetable.
    pub saturated: bool,
    pub final_state: SelectionState,
}

fn report_from_cache<F: Real>(
    cache: &NearestCache<F>,
    index: &DistanceIndex<F>,
    groups: &Groups,
    state: &SelectionState,
) -> RadiiReport<F> {
    let delta_11 = cache.radius_or_inf(groups, state, RadiusKind::FactualTreated);
    let delta_10 = cache.radius_or_inf(groups, state, RadiusKind::CounterfactualTreated);
    let delta_00 = cache.radius_or_inf(groups, state, RadiusKind::FactualControl);
    let delta_01 = cache.radius_or_inf(groups, state, RadiusKind::CounterfactualControl);
    RadiiReport {
        delta_11,
        delta_10,
        delta_00,
        delta_01,
        sum: delta_11 + delta_10 + delta_00 + delta_01,
        max_distance: index.max_distance(),
    }
}

/// Witness of a radius: the quantified point farthest from its centers.
/// Lowest index wins ties. `None` when the quantified set is empty.
fn witness<F: Real>(
    cache: &NearestCache<F>,
    groups: &Groups,
    state: &SelectionState,
    kind: RadiusKind,
) -> Option<usize> {
    let centers = kind.centers_group();
    let mut best: Option<(usize, F)> = None;
    for &i in groups.members(kind.target_group()) {
        if state.excluded_from(kind, i) {
            continue;
        }
        let v = cache.nearest_to(centers, i);
        match best {
            Some((_, bv)) if v <= bv => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

/// Nearest member of `g` to unit `anchor`, over the whole group including
/// already-selected points. Lowest index wins ties.
fn nearest_in_group<F: Real>(
    index: &DistanceIndex<F>,
    groups: &Groups,
    g: Group,
    anchor: usize,
) -> usize {
    let mut best = groups.members(g)[0];
    let mut best_d = index.dist(best, anchor);
    for &i in &groups.members(g)[1..] {
        let d = index.dist(i, anchor);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

struct StepOutcome {
    index: usize,
    group: Group,
    target: RadiusKind,
    proxy: Option<usize>,
    fallback_used: bool,
}

/// One acquisition against the current state, or `None` at saturation.
fn plan_step<F: Real>(
    index: &DistanceIndex<F>,
    groups: &Groups,
    state: &SelectionState,
    cache: &NearestCache<F>,
) -> Option<StepOutcome> {
    let mut excluded = [false; 4];
    let mut fallback_used = false;
    loop {
        let mut best: Option<(RadiusKind, F)> = None;
        for (slot, kind) in RadiusKind::ALL.into_iter().enumerate() {
            if excluded[slot] {
                continue;
            }
            // A kind with an empty quantified set has no witness to go after.
            let quantifiable = groups
                .members(kind.target_group())
                .iter()
                .any(|&i| !state.excluded_from(kind, i));
            if !quantifiable {
                continue;
            }
            let v = cache.radius_or_inf(groups, state, kind);
            if best.is_none_or(|(_, bv)| v > bv) {
                best = Some((kind, v));
            }
        }
        let (kind, _) = best?;
        if kind.is_factual() {
            let a = witness(cache, groups, state, kind).expect("non-empty quantified set");
            return Some(StepOutcome {
                index: a,
                group: kind.target_group(),
                target: kind,
                proxy: None,
                fallback_used,
            });
        }
        let a_proxy = witness(cache, groups, state, kind).expect("non-empty quantified set");
        let b = nearest_in_group(index, groups, kind.centers_group(), a_proxy);
        if !state.is_selected(b) {
            return Some(StepOutcome {
                index: b,
                group: kind.centers_group(),
                target: kind,
                proxy: Some(a_proxy),
                fallback_used,
            });
        }
        let slot = RadiusKind::ALL
            .iter()
            .position(|&k| k == kind)
            .expect("member");
        excluded[slot] = true;
        fallback_used = true;
    }
}

/// Runs up to `budget` acquisitions from `init`. Both groups must already
/// hold at least one selected unit. Deterministic for fixed inputs.
pub fn run_greedy<F: Real>(
    index: &DistanceIndex<F>,
    groups: &Groups,
    init: &SelectionState,
    budget: usize,
) -> Result<GreedyTrace<F>> {
    for g in Group::BOTH {
        if init.selected(g).is_empty() {
            return Err(Error::EmptySelection { group: g.bit() });
        }
    }
    let mut state = init.clone();
    let mut cache = NearestCache::from_state(index, groups, &state);
    let initial = report_from_cache(&cache, index, groups, &state);
    let mut steps = Vec::with_capacity(budget);
    let mut saturated = false;
    for _ in 0..budget {
        let Some(plan) = plan_step(index, groups, &state, &cache) else {
            saturated = true;
            break;
        };
        state.select(groups, plan.index)?;
        cache.note_selection(index, groups, plan.index);
        if let Some(p) = plan.proxy {
            state.add_proxy(groups, p);
        }
        steps.push(GreedyStep {
            index: plan.index,
            group: plan.group,
            target: plan.target,
            proxy: plan.proxy,
            radii_after: report_from_cache(&cache, index, groups, &state),
            fallback_used: plan.fallback_used,
        });
    }
    Ok(GreedyTrace {
        initial,
        steps,
        saturated,
        final_state: state,
    })
}

/// Trace as CSV: one row per acquisition with all four radii, their sum, and
/// the sum normalized by the pool diameter.
pub fn write_trace_csv<F: Real>(trace: &GreedyTrace<F>, path: &Path) -> Result<()> {
    let mut out = String::from(
        "step,index,group,tag,delta_11,delta_10,delta_00,delta_01,sum,normalized_sum\n",
    );
    for (k, s) in trace.steps.iter().enumerate() {
        let r = &s.radii_after;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            k + 1,
            s.index,
            s.group,
            s.target.tag(),
            r.delta_11.to_f64().unwrap_or(f64::NAN),
            r.delta_10.to_f64().unwrap_or(f64::NAN),
            r.delta_00.to_f64().unwrap_or(f64::NAN),
            r.delta_01.to_f64().unwrap_or(f64::NAN),
            r.sum.to_f64().unwrap_or(f64::NAN),
            r.normalized_sum().to_f64().unwrap_or(f64::NAN),
        ));
    }
    write_atomic(path, out.as_bytes())
}
