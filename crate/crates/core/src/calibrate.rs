//! Radius calibration: sweep a uniform normalized radius, run coverage
//! selection to a plateau, and keep the smallest radius whose converged mean
//! coverage clears a threshold. A second pass can refine each of the four
//! radii separately around the chosen base.

use rayon::prelude::*;
use std::path::Path;

use crate::coverage::{build_ball_graph, CoverageConfig, CoverageReport, GroupFilter};
use crate::dataset::{DistanceIndex, Groups};
use crate::error::{Error, Result};
use crate::fccm::{fccm_select_while, ScoreMode};
use crate::io_util::write_atomic;
use crate::radii::{RadiusKind, SelectionState};
use crate::scalar::{real, Real};

/// A plateau counts as converged when the mean coverage moves less than this
/// per acquisition...
const CONVERGENCE_EPS: f64 = 1e-4;
/// ...for this many acquisitions in a row.
const QUIET_WINDOW: usize = 5;

/// One sweep point: the radius, the mean coverage at the plateau, and how
/// many acquisitions it took to get there.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvePoint<F> {
    pub delta: F,
    pub coverage: F,
    pub steps: usize,
}

/// Sweep results in ascending radius order.
#[derive(Clone, Debug, Default)]
pub struct CalibrationCurve<F> {
    pub entries: Vec<CurvePoint<F>>,
}

impl<F: Real> CalibrationCurve<F> {
    /// True when converged coverage never drops along the grid. Larger balls
    /// cover at least as much, so a violation points at a non-converged run.
    pub fn is_monotone(&self) -> bool {
        self.entries
            .windows(2)
            .all(|w| w[1].coverage >= w[0].coverage)
    }
}

// The negated comparison is load-bearing: a NaN grid entry compares false
// either way and must land in the error branch.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
fn validate_grid<F: Real>(grid: &[F]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Config("calibration grid is empty".into()));
    }
    for w in grid.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::Config(format!(
                "calibration grid must be strictly ascending, got {:?} then {:?}",
                w[0], w[1]
            )));
        }
    }
    for &g in grid {
        if !(g >= F::zero() && g <= F::one()) {
            return Err(Error::Config(format!("grid radius {g:?} outside [0, 1]")));
        }
    }
    Ok(())
}

fn validate_threshold<F: Real>(threshold: F) -> Result<()> {
    if !(threshold > F::zero() && threshold <= F::one()) {
        return Err(Error::Config(format!(
            "threshold must lie in (0, 1], got {threshold:?}"
        )));
    }
    Ok(())
}

/// Runs coverage selection from an empty labeled set, both groups eligible,
/// until the mean plateaus, the step cap is hit, or candidates run out.
/// Returns the plateau report and the number of acquisitions made.
fn converge<F: Real>(
    index: &DistanceIndex<F>,
    groups: &Groups,
    config: &CoverageConfig<F>,
    max_steps: usize,
) -> Result<(CoverageReport<F>, usize)> {
    let mut graph = build_ball_graph(index, groups, config)?;
    let init = SelectionState::new(groups.n());
    let eps = real::<F>(CONVERGENCE_EPS);
    let mut prev: Option<F> = None;
    let mut quiet = 0usize;
    let run = fccm_select_while(
        &mut graph,
        &init,
        max_steps,
        GroupFilter::Both,
        ScoreMode::Scaled,
        |report, _| {
            let moved = match prev {
                Some(p) => (report.mean - p).abs() >= eps,
                None => true,
            };
            prev = Some(report.mean);
            quiet = if moved { 0 } else { quiet + 1 };
            quiet < QUIET_WINDOW
        },
    )?;
    let report = run.coverage.last().copied().unwrap_or(run.initial_coverage);
    Ok((report, run.order.len()))
}

/// Sweeps the grid with all four radii tied to one value and returns the
/// curve plus the smallest radius whose plateau clears `threshold` (`None`
/// when no grid point does; that is an answer, not an error).
///
/// Grid points are independent runs and execute in parallel; the curve is
/// assembled in grid order regardless.
pub fn calibrate_uniform<F: Real>(
    index: &DistanceIndex<F>,
    groups: &Groups,
    grid: &[F],
    threshold: F,
    alpha: F,
    max_steps: usize,
) -> Result<(CalibrationCurve<F>, Option<F>)> {
    validate_grid(grid)?;
    validate_threshold(threshold)?;
    let points = grid
        .par_iter()
        .map(|&delta| {
            let config = CoverageConfig::uniform(delta, alpha);
            config.validate()?;
            let (report, steps) = converge(index, groups, &config, max_steps)?;
            Ok(CurvePoint {
                delta,
                coverage: report.mean,
                steps,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let chosen = points
        .iter()
        .find(|p| p.coverage >= threshold)
        .map(|p| p.delta);
    Ok((CalibrationCurve { entries: points }, chosen))
}

/// Refined values for the four radii, in [`RadiusKind::ALL`] order. `None`
/// means no grid value cleared the threshold for that radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RefinedRadii<F> {
    per_kind: [Option<F>; 4],
}

impl<F: Real> RefinedRadii<F> {
    pub fn get(&self, kind: RadiusKind) -> Option<F> {
        self.per_kind[kind_slot(kind)]
    }

    /// Full config when every radius was found.
    pub fn config(&self, alpha: F) -> Option<CoverageConfig<F>> {
        Some(CoverageConfig {
            delta_11: self.per_kind[0]?,
            delta_10: self.per_kind[1]?,
            delta_00: self.per_kind[2]?,
            delta_01: self.per_kind[3]?,
            alpha,
        })
    }

    /// Config with unfound radii falling back to the base value.
    pub fn config_or(&self, base: F, alpha: F) -> CoverageConfig<F> {
        CoverageConfig {
            delta_11: self.per_kind[0].unwrap_or(base),
            delta_10: self.per_kind[1].unwrap_or(base),
            delta_00: self.per_kind[2].unwrap_or(base),
            delta_01: self.per_kind[3].unwrap_or(base),
            alpha,
        }
    }
}

fn kind_slot(kind: RadiusKind) -> usize {
    match kind {
        RadiusKind::FactualTreated => 0,
        RadiusKind::CounterfactualTreated => 1,
        RadiusKind::FactualControl => 2,
        RadiusKind::CounterfactualControl => 3,
    }
}

/// Per-radius refinement around a calibrated base: for each radius in turn,
/// hold the other three at `base` and take the smallest grid value whose
/// plateau pushes that radius's own coverage component past the threshold.
/// Each component depends on its radius alone, so the four searches are
/// independent and each is linear in the grid.
pub fn refine_per_radius<F: Real>(
    index: &DistanceIndex<F>,
    groups: &Groups,
    base: F,
    grid: &[F],
    threshold: F,
    alpha: F,
    max_steps: usize,
) -> Result<RefinedRadii<F>> {
    validate_grid(grid)?;
    validate_threshold(threshold)?;
    CoverageConfig::uniform(base, alpha).validate()?;
    let found = RadiusKind::ALL
        .par_iter()
        .map(|&kind| {
            for &g in grid {
                let mut config = CoverageConfig::uniform(base, alpha);
                match kind {
                    RadiusKind::FactualTreated => config.delta_11 = g,
                    RadiusKind::CounterfactualTreated => config.delta_10 = g,
                    RadiusKind::FactualControl => config.delta_00 = g,
                    RadiusKind::CounterfactualControl => config.delta_01 = g,
                }
                let (report, _) = converge(index, groups, &config, max_steps)?;
                if report.component(kind) >= threshold {
                    return Ok(Some(g));
                }
            }
            Ok(None)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RefinedRadii {
        per_kind: [found[0], found[1], found[2], found[3]],
    })
}

/// Writes the sweep as CSV with header `delta,coverage,steps`.
pub fn write_curve_csv<F: Real>(curve: &CalibrationCurve<F>, path: &Path) -> Result<()> {
    let mut out = String::from("delta,coverage,steps\n");
    for p in &curve.entries {
        out.push_str(&format!(
            "{},{},{}\n",
            p.delta.to_f64().unwrap_or(f64::NAN),
            p.coverage.to_f64().unwrap_or(f64::NAN),
            p.steps
        ));
    }
    write_atomic(path, out.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{
        build_distance_index, generate_identical, generate_toy, Group, PoolSet, ToyParams,
    };
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_pool(seed: u64, n: usize) -> PoolSet<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cov = Array2::zeros((n, 2));
        for i in 0..n {
            cov[(i, 0)] = rng.random_range(-3.0..3.0);
            cov[(i, 1)] = rng.random_range(-3.0..3.0);
        }
        let ts = (0..n)
            .map(|i| Group::from_bit((i % 2) as u8).unwrap())
            .collect();
        PoolSet::new(cov, ts, None).unwrap()
    }

    #[test]
    fn unit_radius_converges_to_full_coverage() {
        let pool = random_pool(5, 20);
        let idx = build_distance_index(&pool).unwrap();
        let (curve, chosen) =
            calibrate_uniform(&idx, pool.groups(), &[1.0], 0.95, 2.5, pool.n()).unwrap();
        assert_eq!(curve.entries.len(), 1);
        assert_eq!(curve.entries[0].coverage, 1.0);
        assert!(curve.entries[0].steps <= pool.n());
        assert_eq!(chosen, Some(1.0));
    }

    #[test]
    fn zero_radius_never_meets_the_threshold() {
        // No coincident cross-group pairs, so counterfactual coverage is
        // stuck at zero and the mean cannot pass 1/2.
        let pool = random_pool(6, 12);
        let idx = build_distance_index(&pool).unwrap();
        let (curve, chosen) =
            calibrate_uniform(&idx, pool.groups(), &[0.0], 0.95, 2.5, pool.n()).unwrap();
        assert!(curve.entries[0].coverage <= 0.5);
        assert_eq!(chosen, None);
    }

    #[test]
    fn bad_inputs_are_rejected() {
        let pool = random_pool(7, 10);
        let idx = build_distance_index(&pool).unwrap();
        let g = pool.groups();
        assert!(calibrate_uniform(&idx, g, &[], 0.95, 2.5, 10).is_err());
        assert!(calibrate_uniform(&idx, g, &[0.3, 0.2], 0.95, 2.5, 10).is_err());
        assert!(calibrate_uniform(&idx, g, &[0.2, 0.2], 0.95, 2.5, 10).is_err());
        assert!(calibrate_uniform(&idx, g, &[0.2, 1.5], 0.95, 2.5, 10).is_err());
        assert!(calibrate_uniform(&idx, g, &[0.2], 0.0, 2.5, 10).is_err());
        assert!(calibrate_uniform(&idx, g, &[0.2], 1.1, 2.5, 10).is_err());
        assert!(refine_per_radius(&idx, g, 0.2, &[], 0.95, 2.5, 10).is_err());
    }

    #[test]
    fn curve_is_monotone_and_chosen_is_minimal() {
        let pool = random_pool(8, 40);
        let idx = build_distance_index(&pool).unwrap();
        let grid = [0.05, 0.15, 0.3, 0.5, 0.8];
        let (curve, chosen) =
            calibrate_uniform(&idx, pool.groups(), &grid, 0.9, 2.5, pool.n()).unwrap();
        assert!(curve.is_monotone());
        if let Some(c) = chosen {
            for p in &curve.entries {
                if p.delta < c {
                    assert!(p.coverage < 0.9);
                }
                if p.delta == c {
                    assert!(p.coverage >= 0.9);
                }
            }
        }
    }

    /// The tuned-grid pick on the synthetic benchmark.
    #[test]
    fn toy_grid_chooses_the_smallest_passing_radius() {
        let params = ToyParams {
            per_cluster: 25,
            ..ToyParams::new(7)
        };
        let pool: PoolSet<f64> = generate_toy(&params);
        let idx = build_distance_index(&pool).unwrap();
        let (curve, chosen) = calibrate_uniform(
            &idx,
            pool.groups(),
            &[0.11, 0.12, 0.13],
            0.95,
            2.5,
            pool.n(),
        )
        .unwrap();
        assert!(curve.is_monotone());
        assert_eq!(chosen, Some(0.11));
    }

    #[test]
    fn refinement_is_symmetric_on_identical_groups() {
        // Twin groups make counterfactual coverage behave exactly like
        // factual coverage, so the refined radii pair up.
        let pool: PoolSet<f64> = generate_identical(11, 3, 8);
        let idx = build_distance_index(&pool).unwrap();
        let grid = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7];
        let refined =
            refine_per_radius(&idx, pool.groups(), 0.3, &grid, 0.95, 1.0, pool.n()).unwrap();
        assert_eq!(
            refined.get(RadiusKind::FactualTreated),
            refined.get(RadiusKind::CounterfactualTreated)
        );
        assert_eq!(
            refined.get(RadiusKind::FactualControl),
            refined.get(RadiusKind::CounterfactualControl)
        );
    }

    #[test]
    fn refinement_splits_factual_and_counterfactual_on_separated_groups() {
        // Two tight clusters far apart: factual coverage needs only the
        // cluster spread, counterfactual coverage must bridge the gap.
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let n = 40;
        let mut cov = Array2::zeros((n, 2));
        let mut ts = Vec::with_capacity(n);
        for i in 0..n {
            let treated = i < n / 2;
            let center = if treated { 0.0 } else { 8.0 };
            cov[(i, 0)] = center + rng.random_range(-0.5..0.5);
            cov[(i, 1)] = rng.random_range(-0.5..0.5);
            ts.push(Group::from_bit(treated as u8).unwrap());
        }
        let pool = PoolSet::new(cov, ts, None).unwrap();
        let idx = build_distance_index(&pool).unwrap();
        let grid: Vec<f64> = (1..=20).map(|k| k as f64 * 0.05).collect();
        let refined =
            refine_per_radius(&idx, pool.groups(), 0.15, &grid, 0.95, 1.0, pool.n()).unwrap();
        let f11 = refined.get(RadiusKind::FactualTreated).unwrap();
        let f10 = refined.get(RadiusKind::CounterfactualTreated).unwrap();
        let f00 = refined.get(RadiusKind::FactualControl).unwrap();
        let f01 = refined.get(RadiusKind::CounterfactualControl).unwrap();
        assert!(f10 > f11, "counterfactual {f10} vs factual {f11}");
        assert!(f01 > f00, "counterfactual {f01} vs factual {f00}");
    }

    #[test]
    fn single_value_grid_returns_it_or_nothing() {
        let pool = random_pool(9, 16);
        let idx = build_distance_index(&pool).unwrap();
        let refined =
            refine_per_radius(&idx, pool.groups(), 0.3, &[1.0], 0.95, 1.0, pool.n()).unwrap();
        for kind in RadiusKind::ALL {
            assert_eq!(refined.get(kind), Some(1.0));
        }
        // At radius zero, factual coverage still reaches 1.0 at pool
        // exhaustion via self-coverage; counterfactual coverage cannot move
        // without coincident cross-group pairs.
        let partial =
            refine_per_radius(&idx, pool.groups(), 0.3, &[0.0], 0.95, 1.0, pool.n()).unwrap();
        for kind in RadiusKind::ALL {
            let expect = if kind.is_factual() { Some(0.0) } else { None };
            assert_eq!(partial.get(kind), expect);
        }
        assert_eq!(partial.config(1.0), None);
        let fallback = partial.config_or(0.3, 1.0);
        assert_eq!(fallback.delta_11, 0.0);
        assert_eq!(fallback.delta_10, 0.3);
    }

    #[test]
    fn curve_csv_round_trip_layout() {
        let curve = CalibrationCurve {
            entries: vec![
                CurvePoint {
                    delta: 0.1,
                    coverage: 0.5,
                    steps: 7,
                },
                CurvePoint {
                    delta: 0.2,
                    coverage: 0.9,
                    steps: 5,
                },
            ],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("curve.csv");
        write_curve_csv(&curve, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "delta,coverage,steps");
        assert_eq!(lines[1], "0.1,0.5,7");
        assert_eq!(lines.len(), 3);
    }
}
