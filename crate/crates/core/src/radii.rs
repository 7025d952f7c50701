//! Factual and counterfactual covering radii over a selection state.
//!
//! For center group `t`, the factual radius is the max over unlabeled
//! same-group points of the distance to their nearest selected center; the
//! counterfactual radius quantifies over the *opposite* group instead,
//! excluding its proxy collection. Selected opposite-group points are not
//! excluded from the counterfactual max: having a label of your own does not
//! make the cross-group surface covered near you.

use crate::dataset::{DistanceIndex, Group, Groups};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// One of the four covering radii, identified by center group and by whether
/// the covered side is the centers' own group or the opposite one.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RadiusKind {
    FactualTreated,
    CounterfactualTreated,
    FactualControl,
    CounterfactualControl,
}

impl RadiusKind {
    /// Fixed priority order used everywhere ties between equal radii are
    /// broken.
    pub const ALL: [RadiusKind; 4] = [
        RadiusKind::FactualTreated,
        RadiusKind::CounterfactualTreated,
        RadiusKind::FactualControl,
        RadiusKind::CounterfactualControl,
    ];

    /// Group whose selected points act as ball centers.
    pub fn centers_group(self) -> Group {
        match self {
            RadiusKind::FactualTreated | RadiusKind::CounterfactualTreated => Group::Treated,
            RadiusKind::FactualControl | RadiusKind::CounterfactualControl => Group::Control,
        }
    }

    /// Group whose points must be covered.
    pub fn target_group(self) -> Group {
        match self {
            RadiusKind::FactualTreated => Group::Treated,
            RadiusKind::CounterfactualTreated => Group::Control,
            RadiusKind::FactualControl => Group::Control,
            RadiusKind::CounterfactualControl => Group::Treated,
        }
    }

    pub fn is_factual(self) -> bool {
        matches!(
            self,
            RadiusKind::FactualTreated | RadiusKind::FactualControl
        )
    }

    /// Two-digit tag `<centers><target>` used in trace output.
    pub fn tag(self) -> &'static str {
        match self {
            RadiusKind::FactualTreated => "11",
            RadiusKind::CounterfactualTreated => "10",
            RadiusKind::FactualControl => "00",
            RadiusKind::CounterfactualControl => "01",
        }
    }
}

/// Labeled sets of both groups plus the proxy collections that mark
/// counterfactually spoken-for points. Proxy sets only ever grow.
#[derive(Clone, Debug)]
pub struct SelectionState {
    selected: [Vec<usize>; 2],
    proxies: [Vec<usize>; 2],
    is_selected: Vec<bool>,
    is_proxy: Vec<bool>,
}

impl SelectionState {
    pub fn new(n: usize) -> SelectionState {
        SelectionState {
            selected: [Vec::new(), Vec::new()],
            proxies: [Vec::new(), Vec::new()],
            is_selected: vec![false; n],
            is_proxy: vec![false; n],
        }
    }

    /// State with the given units pre-selected (acquisition order preserved).
    pub fn with_selected(groups: &Groups, initial: &[usize]) -> Result<SelectionState> {
        let mut state = SelectionState::new(groups.n());
        for &i in initial {
            state.select(groups, i)?;
        }
        Ok(state)
    }

    /// Marks `i` as labeled. Rejects out-of-range and repeated indices.
    pub fn select(&mut self, groups: &Groups, i: usize) -> Result<()> {
        if i >= groups.n() {
            return Err(Error::Config(format!(
                "selection index {i} out of range for pool of {}",
                groups.n()
            )));
        }
        if self.is_selected[i] {
            return Err(Error::Config(format!("unit {i} selected twice")));
        }
        self.is_selected[i] = true;
        self.selected[groups.group_of(i).index()].push(i);
        Ok(())
    }

    /// Adds `i` to its group's proxy collection. Set semantics: repeats are
    /// absorbed.
    pub fn add_proxy(&mut self, groups: &Groups, i: usize) {
        if !self.is_proxy[i] {
            self.is_proxy[i] = true;
            self.proxies[groups.group_of(i).index()].push(i);
        }
    }

    /// Selected units of `g` in acquisition order.
    pub fn selected(&self, g: Group) -> &[usize] {
        &self.selected[g.index()]
    }

    pub fn proxies(&self, g: Group) -> &[usize] {
        &self.proxies[g.index()]
    }

    pub fn is_selected(&self, i: usize) -> bool {
        self.is_selected[i]
    }

    pub fn is_proxy(&self, i: usize) -> bool {
        self.is_proxy[i]
    }

    pub fn len(&self, g: Group) -> usize {
        self.selected[g.index()].len()
    }

    pub fn total_selected(&self) -> usize {
        self.selected[0].len() + self.selected[1].len()
    }

    /// All selected units, treated first, each group in acquisition order.
    pub fn all_selected(&self) -> Vec<usize> {
        let mut out = self.selected[Group::Treated.index()].clone();
        out.extend_from_slice(&self.selected[Group::Control.index()]);
        out
    }

    /// True when unit `i` is outside the quantified set of `kind`: selected
    /// for factual radii, proxy-marked for counterfactual ones.
    pub fn excluded_from(&self, kind: RadiusKind, i: usize) -> bool {
        if kind.is_factual() {
            self.is_selected[i]
        } else {
            self.is_proxy[i]
        }
    }
}

/// All four radii in absolute distance units, plus their sum and the pool
/// diameter for normalization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadiiReport<F> {
    pub delta_11: F,
    pub delta_10: F,
    pub delta_00: F,
    pub delta_01: F,
    pub sum: F,
    pub max_distance: F,
}

impl<F: Real> RadiiReport<F> {
    pub fn get(&self, kind: RadiusKind) -> F {
        match kind {
            RadiusKind::FactualTreated => self.delta_11,
            RadiusKind::CounterfactualTreated => self.delta_10,
            RadiusKind::FactualControl => self.delta_00,
            RadiusKind::CounterfactualControl => self.delta_01,
        }
    }

    pub fn normalized(&self, kind: RadiusKind) -> F {
        self.get(kind) / self.max_distance
    }

    pub fn normalized_sum(&self) -> F {
        self.sum / self.max_distance
    }

    /// Largest radius; ties go to the earliest kind in priority order.
    pub fn max_kind(&self) -> (RadiusKind, F) {
        let mut best = RadiusKind::ALL[0];
        let mut val = self.get(best);
        for kind in RadiusKind::ALL.into_iter().skip(1) {
            let v = self.get(kind);
            if v > val {
                best = kind;
                val = v;
            }
        }
        (best, val)
    }
}

/// Max-min radius of `kind` recomputed from scratch.
///
/// Empty quantified set yields 0 (everything covered); empty center set with
/// a non-empty quantified set is an error, since no ball exists yet.
pub fn radius<F: Real>(
    index: &DistanceIndex<F>,
    groups: &Groups,
    state: &SelectionState,
    kind: RadiusKind,
) -> Result<F> {
    let centers = state.selected(kind.centers_group());
    if centers.is_empty() {
        return Err(Error::EmptySelection {
            group: kind.centers_group().bit(),
        });
    }
    let mut worst = F::zero();
    for &i in groups.members(kind.target_group()) {
        if state.excluded_from(kind, i) {
            continue;
        }
        let mut best = F::infinity();
        for &j in centers {
            let d = index.dist(i, j);
            if d < best {
                best = d;
            }
        }
        if best > worst {
            worst = best;
        }
    }
    Ok(worst)
}

/// Factual radius of `g`: its own unlabeled points against its own centers.
pub fn factual_radius<F: Real>(
    index: &DistanceIndex<F>,
    groups: &Groups,
    state: &SelectionState,
    g: Group,
) -> Result<F> {
    let kind = match g {
        Group::Treated => RadiusKind::FactualTreated,
        Group::Control => RadiusKind::FactualControl,
    };
    radius(index, groups, state, kind)
}

/// Counterfactual radius with centers in `source`: opposite-group points not
/// yet proxy-marked against `source`'s centers.
pub fn counterfactual_radius<F: Real>(
    index: &DistanceIndex<F>,
    groups: &Groups,
    state: &SelectionState,
    source: Group,
) -> Result<F> {
    let kind = match source {
        Group::Treated => RadiusKind::CounterfactualTreated,
        Group::Control => RadiusKind::CounterfactualControl,
    };
    radius(index, groups, state, kind)
}

/// All four radii from scratch. Requires both selected sets non-empty.
pub fn radii_report<F: Real>(
    index: &DistanceIndex<F>,
    groups: &Groups,
    state: &SelectionState,
) -> Result<RadiiReport<F>> {
    let delta_11 = radius(index, groups, state, RadiusKind::FactualTreated)?;
    let delta_10 = radius(index, groups, state, RadiusKind::CounterfactualTreated)?;
    let delta_00 = radius(index, groups, state, RadiusKind::FactualControl)?;
    let delta_01 = radius(index, groups, state, RadiusKind::CounterfactualControl)?;
    Ok(RadiiReport {
        delta_11,
        delta_10,
        delta_00,
        delta_01,
        sum: delta_11 + delta_10 + delta_00 + delta_01,
        max_distance: index.max_distance(),
    })
}

/// Per-unit distance to the nearest selected center of each group,
/// maintained incrementally in O(n) per acquisition. Infinity while a group
/// has no centers.
#[derive(Clone, Debug)]
pub struct NearestCache<F> {
    nearest: [Vec<F>; 2],
}

impl<F: Real> NearestCache<F> {
    pub fn new(n: usize) -> NearestCache<F> {
        NearestCache {
            nearest: [vec![F::infinity(); n], vec![F::infinity(); n]],
        }
    }

    /// Cache warmed with an existing selection.
    pub fn from_state(
        index: &DistanceIndex<F>,
        groups: &Groups,
        state: &SelectionState,
    ) -> NearestCache<F> {
        let mut cache = NearestCache::new(groups.n());
        for g in Group::BOTH {
            for &j in state.selected(g) {
                cache.note_selection(index, groups, j);
            }
        }
        cache
    }

    /// Folds a new center into the per-unit minima.
    pub fn note_selection(&mut self, index: &DistanceIndex<F>, groups: &Groups, j: usize) {
        let slot = groups.group_of(j).index();
        let row = &mut self.nearest[slot];
        for (i, v) in row.iter_mut().enumerate() {
            let d = index.dist(i, j);
            if d < *v {
                *v = d;
            }
        }
    }

    /// Distance from `i` to its nearest selected center of `g`.
    pub fn nearest_to(&self, g: Group, i: usize) -> F {
        self.nearest[g.index()][i]
    }

    /// Radius of `kind` from the cache. Empty quantified set yields 0; empty
    /// center set propagates as infinity rather than an error, which is the
    /// convention greedy loops want.
    pub fn radius_or_inf(&self, groups: &Groups, state: &SelectionState, kind: RadiusKind) -> F {
        let centers = kind.centers_group().index();
        let mut worst = F::zero();
        let mut any = false;
        for &i in groups.members(kind.target_group()) {
            if state.excluded_from(kind, i) {
                continue;
            }
            any = true;
            let v = self.nearest[centers][i];
            if v > worst {
                worst = v;
            }
        }
        if any {
            worst
        } else {
            F::zero()
        }
    }
}
