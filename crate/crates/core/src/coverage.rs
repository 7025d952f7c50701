//! Covering balls over the pool, coverage flags, and mean coverage.
//!
//! Every node owns two balls: a factual one holding same-group nodes within
//! its group's factual radius, and a counterfactual one holding opposite-group
//! nodes within its group's counterfactual radius. Selecting a center marks
//! everything inside its balls covered. Coverage is tracked with flags rather
//! than by deleting edges, so a candidate's marginal value is simply its count
//! of edges into still-uncovered targets.

use rayon::prelude::*;

use crate::dataset::{DistanceIndex, Group, Groups};
use crate::error::{Error, Result};
use crate::radii::RadiusKind;
use crate::scalar::{real_usize, Real};

/// Which groups an acquisition strategy may label from.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum GroupFilter {
    Both,
    Only(Group),
}

impl GroupFilter {
    pub fn admits(self, g: Group) -> bool {
        match self {
            GroupFilter::Both => true,
            GroupFilter::Only(only) => only == g,
        }
    }
}

/// Normalized ball radii (fractions of the pool diameter) plus the
/// counterfactual edge weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoverageConfig<F> {
    pub delta_11: F,
    pub delta_10: F,
    pub delta_00: F,
    pub delta_01: F,
    pub alpha: F,
}

impl<F: Real> CoverageConfig<F> {
    pub fn uniform(delta: F, alpha: F) -> CoverageConfig<F> {
        CoverageConfig {
            delta_11: delta,
            delta_10: delta,
            delta_00: delta,
            delta_01: delta,
            alpha,
        }
    }

    /// Same factual radii with both counterfactual radii forced to zero.
    pub fn counterfactual_zeroed(&self) -> CoverageConfig<F> {
        CoverageConfig {
            delta_10: F::zero(),
            delta_01: F::zero(),
            ..*self
        }
    }

    pub fn get(&self, kind: RadiusKind) -> F {
        match kind {
            RadiusKind::FactualTreated => self.delta_11,
            RadiusKind::CounterfactualTreated => self.delta_10,
            RadiusKind::FactualControl => self.delta_00,
            RadiusKind::CounterfactualControl => self.delta_01,
        }
    }

    // The negated comparison is load-bearing: a NaN alpha compares false
    // either way and must land in the error branch.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        for kind in RadiusKind::ALL {
            let v = self.get(kind);
            if !(v >= F::zero() && v <= F::one()) {
                return Err(Error::Config(format!(
                    "normalized radius {} = {v:?} outside [0, 1]",
                    kind.tag()
                )));
            }
        }
        if !(self.alpha > F::zero()) {
            return Err(Error::Config(format!(
                "alpha must be positive, got {:?}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Newly covered nodes from one `mark_covered` call.
#[derive(Clone, Debug, Default)]
pub struct MarkDelta {
    pub newly_factual: Vec<usize>,
    pub newly_counterfactual: Vec<usize>,
}

/// Four coverage fractions and their arithmetic mean.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoverageReport<F> {
    /// Treated nodes inside a selected treated center's factual ball.
    pub p_f_t1: F,
    /// Control nodes inside a selected treated center's counterfactual ball.
    pub p_cf_t1: F,
    pub p_f_t0: F,
    pub p_cf_t0: F,
    pub mean: F,
}

impl<F: Real> CoverageReport<F> {
    /// The coverage fraction the given radius drives: each radius has exactly
    /// one component that depends on it.
    pub fn component(&self, kind: RadiusKind) -> F {
        match kind {
            RadiusKind::FactualTreated => self.p_f_t1,
            RadiusKind::CounterfactualTreated => self.p_cf_t1,
            RadiusKind::FactualControl => self.p_f_t0,
            RadiusKind::CounterfactualControl => self.p_cf_t0,
        }
    }
}

/// Immutable ball adjacency plus mutable coverage flags.
#[derive(Clone, Debug)]
pub struct BallGraph<F> {
    config: CoverageConfig<F>,
    groups: Groups,
    factual_adj: Vec<Vec<usize>>,
    counterfactual_adj: Vec<Vec<usize>>,
    /// Incoming counterfactual edges: centers whose counterfactual ball holds
    /// this node. Needed to update candidate degrees when a node gets covered.
    counterfactual_in: Vec<Vec<usize>>,
    covered_factual: Vec<bool>,
    covered_counterfactual: Vec<bool>,
    covered_f_count: [usize; 2],
    covered_cf_count: [usize; 2],
}

/// Builds the ball adjacency in O(n^2). Deterministic: neighbor lists are in
/// ascending index order.
pub fn build_ball_graph<F: Real>(
    index: &DistanceIndex<F>,
    groups: &Groups,
    config: &CoverageConfig<F>,
) -> Result<BallGraph<F>> {
    config.validate()?;
    let n = groups.n();
    let abs = |norm: F| norm * index.max_distance();
    let (abs_f, abs_cf) = (
        [abs(config.delta_00), abs(config.delta_11)],
        [abs(config.delta_01), abs(config.delta_10)],
    );
    let balls: Vec<(Vec<usize>, Vec<usize>)> = (0..n)
        .into_par_iter()
        .map(|v| {
            let g = groups.group_of(v);
            let fr = abs_f[g.index()];
            let cr = abs_cf[g.index()];
            let factual = groups
                .members(g)
                .iter()
                .copied()
                .filter(|&u| index.dist(v, u) <= fr)
                .collect();
            let counterfactual = groups
                .members(g.other())
                .iter()
                .copied()
                .filter(|&u| index.dist(v, u) <= cr)
                .collect();
            (factual, counterfactual)
        })
        .collect();
    let mut factual_adj = Vec::with_capacity(n);
    let mut counterfactual_adj = Vec::with_capacity(n);
    let mut counterfactual_in = vec![Vec::new(); n];
    for (v, (f, c)) in balls.into_iter().enumerate() {
        for &u in &c {
            counterfactual_in[u].push(v);
        }
        factual_adj.push(f);
        counterfactual_adj.push(c);
    }
    Ok(BallGraph {
        config: *config,
        groups: groups.clone(),
        factual_adj,
        counterfactual_adj,
        counterfactual_in,
        covered_factual: vec![false; n],
        covered_counterfactual: vec![false; n],
        covered_f_count: [0, 0],
        covered_cf_count: [0, 0],
    })
}

impl<F: Real> BallGraph<F> {
    pub fn n(&self) -> usize {
        self.factual_adj.len()
    }

    pub fn config(&self) -> &CoverageConfig<F> {
        &self.config
    }

    pub fn groups(&self) -> &Groups {
        &self.groups
    }

    /// Same-group nodes within the factual radius, self included.
    pub fn factual_ball(&self, v: usize) -> &[usize] {
        &self.factual_adj[v]
    }

    /// Opposite-group nodes within this node's counterfactual radius.
    pub fn counterfactual_ball(&self, v: usize) -> &[usize] {
        &self.counterfactual_adj[v]
    }

    /// Opposite-group centers whose counterfactual ball contains `v`.
    pub fn incoming_counterfactual(&self, v: usize) -> &[usize] {
        &self.counterfactual_in[v]
    }

    pub fn is_covered_factual(&self, v: usize) -> bool {
        self.covered_factual[v]
    }

    pub fn is_covered_counterfactual(&self, v: usize) -> bool {
        self.covered_counterfactual[v]
    }

    /// Marks everything in `center`'s balls covered. Idempotent; returns the
    /// nodes whose flags flipped on this call.
    pub fn mark_covered(&mut self, center: usize) -> Result<MarkDelta> {
        if center >= self.n() {
            return Err(Error::Config(format!(
                "center index {center} out of range for pool of {}",
                self.n()
            )));
        }
        let mut delta = MarkDelta::default();
        for k in 0..self.factual_adj[center].len() {
            let u = self.factual_adj[center][k];
            if !self.covered_factual[u] {
                self.covered_factual[u] = true;
                self.covered_f_count[self.groups.group_of(u).index()] += 1;
                delta.newly_factual.push(u);
            }
        }
        for k in 0..self.counterfactual_adj[center].len() {
            let u = self.counterfactual_adj[center][k];
            if !self.covered_counterfactual[u] {
                self.covered_counterfactual[u] = true;
                self.covered_cf_count[self.groups.group_of(u).index()] += 1;
                delta.newly_counterfactual.push(u);
            }
        }
        Ok(delta)
    }

    /// Clears all coverage flags, keeping the adjacency.
    pub fn reset_coverage(&mut self) {
        self.covered_factual.iter_mut().for_each(|b| *b = false);
        self.covered_counterfactual
            .iter_mut()
            .for_each(|b| *b = false);
        self.covered_f_count = [0, 0];
        self.covered_cf_count = [0, 0];
    }

    /// Count of set coverage flags, factual and counterfactual together.
    /// This is the objective the unweighted max-coverage oracle maximizes.
    pub fn covered_marks(&self) -> usize {
        self.covered_f_count[0]
            + self.covered_f_count[1]
            + self.covered_cf_count[0]
            + self.covered_cf_count[1]
    }

    /// The four coverage fractions. An empty selection reports all zeros.
    pub fn coverage_report(&self) -> CoverageReport<F> {
        let frac = |count: usize, of: usize| real_usize::<F>(count) / real_usize::<F>(of);
        let t1 = Group::Treated.index();
        let t0 = Group::Control.index();
        let p_f_t1 = frac(self.covered_f_count[t1], self.groups.len_of(Group::Treated));
        let p_f_t0 = frac(self.covered_f_count[t0], self.groups.len_of(Group::Control));
        // Counterfactual coverage by treated centers lands on control nodes
        // and vice versa.
        let p_cf_t1 = frac(
            self.covered_cf_count[t0],
            self.groups.len_of(Group::Control),
        );
        let p_cf_t0 = frac(
            self.covered_cf_count[t1],
            self.groups.len_of(Group::Treated),
        );
        let four = real_usize::<F>(4);
        CoverageReport {
            p_f_t1,
            p_cf_t1,
            p_f_t0,
            p_cf_t0,
            mean: (p_f_t1 + p_cf_t1 + p_f_t0 + p_cf_t0) / four,
        }
    }
}
