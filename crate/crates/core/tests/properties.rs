//! Property-based checks of the geometric and reporting invariants.

use cfcover::coverage::{build_ball_graph, CoverageConfig, GroupFilter};
use cfcover::dataset::{build_distance_index, Group, PoolSet};
use cfcover::fccm::{fccm_select, ScoreMode};
use cfcover::harness::{read_report_csv, read_report_json, render_report, ReportFormat, ReportRow};
use cfcover::radii::{radii_report, RadiusKind, SelectionState};
use ndarray::Array2;
use proptest::prelude::*;

/// Random pool with both arms non-empty: the first unit is treated, the
/// second is control, the rest follow the generated bits.
#[derive(Clone, Debug)]
struct RawPool {
    xs: Vec<Vec<f64>>,
    bits: Vec<bool>,
}

impl RawPool {
    fn build(&self) -> Option<PoolSet<f64>> {
        let n = self.xs.len();
        let d = self.xs[0].len();
        let flat: Vec<f64> = self.xs.iter().flatten().copied().collect();
        let covariates = Array2::from_shape_vec((n, d), flat).unwrap();
        let treatment = self
            .bits
            .iter()
            .enumerate()
            .map(|(i, &b)| match i {
                0 => Group::Treated,
                1 => Group::Control,
                _ => {
                    if b {
                        Group::Treated
                    } else {
                        Group::Control
                    }
                }
            })
            .collect();
        // Coincident points make the pool degenerate (diameter 0); the
        // generator's continuous draws make that vanishingly rare, skip it.
        PoolSet::new(covariates, treatment, None).ok()
    }

    fn scaled(&self, s: f64) -> RawPool {
        RawPool {
            xs: self
                .xs
                .iter()
                .map(|row| row.iter().map(|v| v * s).collect())
                .collect(),
            bits: self.bits.clone(),
        }
    }
}

fn raw_pool(max_n: usize) -> impl Strategy<Value = RawPool> {
    (4..=max_n, 1..=3usize).prop_flat_map(|(n, d)| {
        (
            prop::collection::vec(prop::collection::vec(-50.0..50.0f64, d), n),
            prop::collection::vec(any::<bool>(), n),
        )
            .prop_map(|(xs, bits)| RawPool { xs, bits })
    })
}

/// One labeled unit per arm plus a random subset of everything else.
fn seeded_selection(pool: &PoolSet<f64>, extra_mask: &[bool]) -> SelectionState {
    let groups = pool.groups();
    let mut state = SelectionState::new(pool.n());
    for g in Group::BOTH {
        state.select(groups, groups.members(g)[0]).unwrap();
    }
    for (i, &take) in extra_mask.iter().enumerate() {
        if take && i < pool.n() && !state.is_selected(i) {
            state.select(groups, i).unwrap();
        }
    }
    state
}

proptest! {
    #[test]
    fn distances_are_symmetric_with_zero_diagonal_and_triangle(raw in raw_pool(14)) {
        let Some(pool) = raw.build() else { return Ok(()) };
        let index = build_distance_index(&pool).unwrap();
        let n = pool.n();
        for i in 0..n {
            prop_assert_eq!(index.dist(i, i), 0.0);
            for j in 0..n {
                prop_assert_eq!(index.dist(i, j), index.dist(j, i));
                for k in 0..n {
                    prop_assert!(index.dist(i, k) <= index.dist(i, j) + index.dist(j, k) + 1e-9);
                }
            }
        }
    }

    #[test]
    fn radii_never_grow_when_the_selection_grows(
        raw in raw_pool(20),
        mask in prop::collection::vec(any::<bool>(), 20),
    ) {
        let Some(pool) = raw.build() else { return Ok(()) };
        let index = build_distance_index(&pool).unwrap();
        let groups = pool.groups();
        let mut state = seeded_selection(&pool, &mask);
        let mut before = radii_report(&index, groups, &state).unwrap();
        for i in 0..pool.n() {
            if state.is_selected(i) {
                continue;
            }
            state.select(groups, i).unwrap();
            let after = radii_report(&index, groups, &state).unwrap();
            for kind in RadiusKind::ALL {
                prop_assert!(
                    after.get(kind) <= before.get(kind),
                    "radius {:?} grew after selecting {}", kind, i
                );
            }
            before = after;
        }
    }

    #[test]
    fn radii_scale_with_the_pool_and_normalized_radii_do_not(
        raw in raw_pool(16),
        mask in prop::collection::vec(any::<bool>(), 16),
        s in 0.01..100.0f64,
    ) {
        let Some(pool) = raw.build() else { return Ok(()) };
        let Some(scaled) = raw.scaled(s).build() else { return Ok(()) };
        let index = build_distance_index(&pool).unwrap();
        let index_s = build_distance_index(&scaled).unwrap();
        let state = seeded_selection(&pool, &mask);
        let a = radii_report(&index, pool.groups(), &state).unwrap();
        let b = radii_report(&index_s, scaled.groups(), &state).unwrap();
        for kind in RadiusKind::ALL {
            let (r, rs) = (a.get(kind), b.get(kind));
            prop_assert!((rs - r * s).abs() <= 1e-12 * (1.0 + rs.abs()));
            prop_assert!((b.normalized(kind) - a.normalized(kind)).abs() <= 1e-12);
        }
    }

    #[test]
    fn mean_coverage_is_monotone_under_marking(
        raw in raw_pool(16),
        delta in 0.0..=1.0f64,
        alpha in 0.1..5.0f64,
    ) {
        let Some(pool) = raw.build() else { return Ok(()) };
        let index = build_distance_index(&pool).unwrap();
        let mut graph =
            build_ball_graph(&index, pool.groups(), &CoverageConfig::uniform(delta, alpha))
                .unwrap();
        let mut last = graph.coverage_report().mean;
        for v in 0..pool.n() {
            graph.mark_covered(v).unwrap();
            let now = graph.coverage_report().mean;
            prop_assert!(now >= last);
            last = now;
        }
        prop_assert!(graph.coverage_report().p_f_t1 == 1.0);
        prop_assert!(graph.coverage_report().p_f_t0 == 1.0);
    }

    #[test]
    fn a_shorter_selection_run_is_a_prefix_of_a_longer_one(
        raw in raw_pool(14),
        delta in 0.05..0.9f64,
        short in 1..4usize,
    ) {
        let Some(pool) = raw.build() else { return Ok(()) };
        let index = build_distance_index(&pool).unwrap();
        let groups = pool.groups();
        let config = CoverageConfig::uniform(delta, 2.5);
        let init = SelectionState::new(pool.n());
        let mut graph = build_ball_graph(&index, groups, &config).unwrap();
        let long = fccm_select(&mut graph, &init, short + 3, GroupFilter::Both, ScoreMode::Scaled)
            .unwrap();
        let brief = fccm_select(&mut graph, &init, short, GroupFilter::Both, ScoreMode::Scaled)
            .unwrap();
        let take = brief.order.len().min(long.order.len());
        prop_assert_eq!(&brief.order[..take], &long.order[..take]);
    }
}

fn report_float() -> impl Strategy<Value = f64> {
    prop_oneof![
        4 => -1e6..1e6f64,
        1 => Just(f64::NAN),
        1 => Just(0.0f64),
        1 => Just(1.0f64),
    ]
}

fn report_row() -> impl Strategy<Value = ReportRow<f64>> {
    (
        (any::<u64>(), 0..1000usize, 0..100_000usize),
        prop::collection::vec(report_float(), 11),
    )
        .prop_map(|((seed, step, labeled_count), f)| ReportRow {
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
        })
}

proptest! {
    #[test]
    fn report_files_round_trip_bit_for_bit(rows in prop::collection::vec(report_row(), 0..20)) {
        let dir = tempfile::tempdir().unwrap();

        let csv_path = dir.path().join("rt.csv");
        let csv = render_report(&rows, ReportFormat::Csv);
        std::fs::write(&csv_path, &csv).unwrap();
        let back: Vec<ReportRow<f64>> = read_report_csv(&csv_path).unwrap();
        prop_assert_eq!(render_report(&back, ReportFormat::Csv), csv.clone());

        let json_path = dir.path().join("rt.json");
        let json = render_report(&rows, ReportFormat::Json);
        std::fs::write(&json_path, &json).unwrap();
        let back: Vec<ReportRow<f64>> = read_report_json(&json_path).unwrap();
        prop_assert_eq!(render_report(&back, ReportFormat::Json), json);

        // Cross-format: the row multiset survives the json -> csv hop.
        prop_assert_eq!(render_report(&back, ReportFormat::Csv), csv);
    }
}
