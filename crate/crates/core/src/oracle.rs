//! Exhaustive small-instance oracles: the minimal achievable radius sum under
//! a four-way budget split, and the maximal achievable coverage for a fixed
//! budget. Both exist to pin approximation guarantees in tests; hard size
//! guards keep the enumeration from exploding.

use std::collections::HashMap;

use crate::coverage::{BallGraph, GroupFilter};
use crate::dataset::{DistanceIndex, Groups};
use crate::error::{Error, Result};
use crate::radii::RadiusKind;
use crate::scalar::{real_usize, Real};

/// Exact optimum found by enumeration. `best_subset` is canonical: the
/// lexicographically least subset attaining the optimum, in ascending order.
#[derive(Clone, Debug)]
pub struct OracleResult<F> {
    pub best_subset: Vec<usize>,
    pub best_value: F,
    pub enumerated: u64,
}

const MAX_POOL: usize = 16;
const MAX_RADIUS_BUDGET: usize = 8;
const MAX_CANDIDATES: usize = 18;
const MAX_COVERAGE_BUDGET: usize = 5;

/// Calls `f` for every k-subset of `items` in lexicographic order.
fn for_each_combination(items: &[usize], k: usize, f: &mut impl FnMut(&[usize])) {
    let n = items.len();
    if k > n {
        return;
    }
    if k == 0 {
        f(&[]);
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    let mut buf = vec![0usize; k];
    loop {
        for (slot, &i) in buf.iter_mut().zip(idx.iter()) {
            *slot = items[i];
        }
        f(&buf);
        // Advance to the next combination: bump the rightmost index that has
        // room, then pack everything after it tightly.
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Best achievable radius of `kind` using exactly `b` centers, by exhaustion.
/// Counterfactual kinds quantify over the whole opposite group (no proxy
/// exclusions), which is the worst case and makes the resulting sum a valid
/// bound target.
fn part_optimum<F: Real>(
    index: &DistanceIndex<F>,
    groups: &Groups,
    kind: RadiusKind,
    b: usize,
    enumerated: &mut u64,
) -> (Vec<usize>, F) {
    let center_pool = groups.members(kind.centers_group());
    let targets = groups.members(kind.target_group());
    let mut best: Option<(Vec<usize>, F)> = None;
    for_each_combination(center_pool, b, &mut |subset| {
        *enumerated += 1;
        let mut worst = F::zero();
        for &i in targets {
            if kind.is_factual() && subset.contains(&i) {
                continue;
            }
            let mut near = F::infinity();
            for &j in subset {
                let d = index.dist(i, j);
                if d < near {
                    near = d;
                }
            }
            if near > worst {
                worst = near;
            }
        }
        if best.as_ref().is_none_or(|(_, bv)| worst < *bv) {
            best = Some((subset.to_vec(), worst));
        }
    });
    best.expect("part budget validated against group size")
}

fn guard(what: &'static str, got: usize, limit: usize) -> Result<()> {
    if got > limit {
        return Err(Error::OracleGuard { what, got, limit });
    }
    Ok(())
}

/// Minimal radius sum for an explicit budget split
/// `(b_11, b_10, b_00, b_01)`, one part per radius kind in priority order.
/// Each part selects its own centers independently.
pub fn optimal_radius_sum_for_split<F: Real>(
    index: &DistanceIndex<F>,
    groups: &Groups,
    split: [usize; 4],
) -> Result<OracleResult<F>> {
    guard("pool size", groups.n(), MAX_POOL)?;
    guard("budget", split.iter().sum(), MAX_RADIUS_BUDGET)?;
    let mut enumerated = 0;
    let mut total = F::zero();
    let mut union: Vec<usize> = Vec::new();
    for (kind, &b) in RadiusKind::ALL.iter().zip(split.iter()) {
        if b == 0 || b > groups.len_of(kind.centers_group()) {
            return Err(Error::Config(format!(
                "split part for kind {} must be in 1..={}, got {b}",
                kind.tag(),
                groups.len_of(kind.centers_group())
            )));
        }
        let (subset, value) = part_optimum(index, groups, *kind, b, &mut enumerated);
        total = total + value;
        union.extend(subset);
    }
    union.sort_unstable();
    union.dedup();
    Ok(OracleResult {
        best_subset: union,
        best_value: total,
        enumerated,
    })
}

/// Minimal radius sum over every way of splitting `total_budget` into four
/// positive parts capped by group sizes. Part optima are shared across
/// splits, so each (kind, size) pair is enumerated once.
pub fn optimal_radius_sum<F: Real>(
    index: &DistanceIndex<F>,
    groups: &Groups,
    total_budget: usize,
) -> Result<OracleResult<F>> {
    guard("pool size", groups.n(), MAX_POOL)?;
    guard("budget", total_budget, MAX_RADIUS_BUDGET)?;
    if total_budget < 4 {
        return Err(Error::Config(format!(
            "total budget {total_budget} cannot fund all four radius kinds"
        )));
    }
    let mut enumerated = 0;
    let mut memo: HashMap<(usize, usize), (Vec<usize>, F)> = HashMap::new();
    let caps: Vec<usize> = RadiusKind::ALL
        .iter()
        .map(|k| groups.len_of(k.centers_group()))
        .collect();
    let mut best: Option<(F, Vec<usize>)> = None;
    for b11 in 1..=caps[0].min(total_budget) {
        for b10 in 1..=caps[1].min(total_budget - b11) {
            for b00 in 1..=caps[2].min(total_budget - b11 - b10) {
                let b01 = total_budget - b11 - b10 - b00;
                if b01 < 1 || b01 > caps[3] {
                    continue;
                }
                let split = [b11, b10, b00, b01];
                let mut total = F::zero();
                let mut union: Vec<usize> = Vec::new();
                for (slot, kind) in RadiusKind::ALL.into_iter().enumerate() {
                    let entry = memo.entry((slot, split[slot])).or_insert_with(|| {
                        part_optimum(index, groups, kind, split[slot], &mut enumerated)
                    });
                    total = total + entry.1;
                    union.extend(entry.0.iter().copied());
                }
                if best.as_ref().is_none_or(|(bv, _)| total < *bv) {
                    union.sort_unstable();
                    union.dedup();
                    best = Some((total, union));
                }
            }
        }
    }
    let (best_value, best_subset) = best.ok_or_else(|| {
        Error::Config(format!(
            "no feasible split of budget {total_budget} for groups of sizes {} and {}",
            groups.len_of(crate::dataset::Group::Treated),
            groups.len_of(crate::dataset::Group::Control),
        ))
    })?;
    Ok(OracleResult {
        best_subset,
        best_value,
        enumerated,
    })
}

/// Maximal covered-mark count (factual flags + counterfactual flags) over all
/// center subsets of size `budget` drawn from the groups `filter` admits.
/// Starts from a clean slate regardless of the graph's current flags; budgets
/// beyond the candidate count are clamped.
pub fn optimal_coverage<F: Real>(
    graph: &BallGraph<F>,
    budget: usize,
    filter: GroupFilter,
) -> Result<OracleResult<F>> {
    let candidates: Vec<usize> = (0..graph.n())
        .filter(|&v| filter.admits(graph.groups().group_of(v)))
        .collect();
    guard("candidate count", candidates.len(), MAX_CANDIDATES)?;
    guard("budget", budget, MAX_COVERAGE_BUDGET)?;
    let k = budget.min(candidates.len());
    let n = graph.n();
    let mut covered_f = vec![false; n];
    let mut covered_c = vec![false; n];
    let mut enumerated = 0u64;
    let mut best: Option<(Vec<usize>, usize)> = None;
    for_each_combination(&candidates, k, &mut |subset| {
        enumerated += 1;
        covered_f.iter_mut().for_each(|b| *b = false);
        covered_c.iter_mut().for_each(|b| *b = false);
        let mut marks = 0usize;
        for &c in subset {
            for &u in graph.factual_ball(c) {
                if !covered_f[u] {
                    covered_f[u] = true;
                    marks += 1;
                }
            }
            for &u in graph.counterfactual_ball(c) {
                if !covered_c[u] {
                    covered_c[u] = true;
                    marks += 1;
                }
            }
        }
        if best.as_ref().is_none_or(|(_, bm)| marks > *bm) {
            best = Some((subset.to_vec(), marks));
        }
    });
    let (best_subset, marks) =
        best.expect("at least one subset exists (k = 0 yields the empty subset)");
    Ok(OracleResult {
        best_subset,
        best_value: real_usize(marks),
        enumerated,
    })
}
