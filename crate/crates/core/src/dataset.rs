//! Pool data model, Euclidean distance index, toy benchmark generator, and
//! CSV ingestion.

use std::fmt;
use std::path::Path;

use ndarray::{Array2, ArrayView1};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io_util::write_atomic;
use crate::scalar::{real, Real};

/// Binary treatment indicator.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Group {
    Control,
    Treated,
}

impl Group {
    pub fn other(self) -> Group {
        match self {
            Group::Control => Group::Treated,
            Group::Treated => Group::Control,
        }
    }

    /// Array slot: control = 0, treated = 1.
    pub fn index(self) -> usize {
        match self {
            Group::Control => 0,
            Group::Treated => 1,
        }
    }

    pub fn bit(self) -> u8 {
        self.index() as u8
    }

    pub fn from_bit(b: u8) -> Option<Group> {
        match b {
            0 => Some(Group::Control),
            1 => Some(Group::Treated),
            _ => None,
        }
    }

    pub const BOTH: [Group; 2] = [Group::Control, Group::Treated];
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.bit())
    }
}

/// Treatment assignment plus per-group member lists.
///
/// Selection algorithms take `&Groups` and a distance index only, so outcome
/// data cannot flow into acquisition decisions by construction.
#[derive(Clone, Debug)]
pub struct Groups {
    assignment: Vec<Group>,
    members: [Vec<usize>; 2],
}

impl Groups {
    pub fn new(assignment: Vec<Group>) -> Groups {
        let mut members = [Vec::new(), Vec::new()];
        for (i, g) in assignment.iter().enumerate() {
            members[g.index()].push(i);
        }
        Groups {
            assignment,
            members,
        }
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn group_of(&self, i: usize) -> Group {
        self.assignment[i]
    }

    /// Member indices of `g` in ascending order.
    pub fn members(&self, g: Group) -> &[usize] {
        &self.members[g.index()]
    }

    pub fn len_of(&self, g: Group) -> usize {
        self.members[g.index()].len()
    }

    pub fn assignment(&self) -> &[Group] {
        &self.assignment
    }
}

/// Both potential outcomes of every unit (synthetic ground-truth mode).
#[derive(Clone, Debug)]
pub struct Outcomes<F> {
    pub y1: Vec<F>,
    pub y0: Vec<F>,
}

/// The candidate pool: covariates, treatment assignment, and (for synthetic
/// data) both potential outcomes.
#[derive(Clone, Debug)]
pub struct PoolSet<F> {
    covariates: Array2<F>,
    groups: Groups,
    outcomes: Option<Outcomes<F>>,
}

impl<F: Real> PoolSet<F> {
    /// Validates shapes and finiteness. Outcomes are all-or-nothing: either
    /// both potential outcome vectors are present or the pool is
    /// covariates-only.
    pub fn new(
        covariates: Array2<F>,
        treatment: Vec<Group>,
        outcomes: Option<Outcomes<F>>,
    ) -> Result<PoolSet<F>> {
        let n = covariates.nrows();
        if n < 2 {
            return Err(Error::PoolTooSmall);
        }
        if treatment.len() != n {
            return Err(Error::Config(format!(
                "treatment length {} does not match {} covariate rows",
                treatment.len(),
                n
            )));
        }
        for (i, row) in covariates.rows().into_iter().enumerate() {
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteCovariate { row: i });
            }
        }
        if let Some(o) = &outcomes {
            if o.y1.len() != n || o.y0.len() != n {
                return Err(Error::Config(format!(
                    "outcome vectors must have length {n}"
                )));
            }
        }
        Ok(PoolSet {
            covariates,
            groups: Groups::new(treatment),
            outcomes,
        })
    }

    pub fn n(&self) -> usize {
        self.covariates.nrows()
    }

    pub fn dim(&self) -> usize {
        self.covariates.ncols()
    }

    pub fn covariates(&self) -> &Array2<F> {
        &self.covariates
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, F> {
        self.covariates.row(i)
    }

    pub fn groups(&self) -> &Groups {
        &self.groups
    }

    pub fn group_of(&self, i: usize) -> Group {
        self.groups.group_of(i)
    }

    pub fn outcomes(&self) -> Option<&Outcomes<F>> {
        self.outcomes.as_ref()
    }

    /// The outcome a labeling oracle would reveal: y under the unit's own
    /// treatment. This is the only outcome the estimator ever sees.
    pub fn observed_outcome(&self, i: usize) -> Option<F> {
        self.outcomes.as_ref().map(|o| match self.group_of(i) {
            Group::Treated => o.y1[i],
            Group::Control => o.y0[i],
        })
    }

    /// True treatment effect of unit `i` (ground-truth mode only).
    pub fn tau(&self, i: usize) -> Option<F> {
        self.outcomes.as_ref().map(|o| o.y1[i] - o.y0[i])
    }

    /// New pool containing `indices`' rows in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<PoolSet<F>> {
        let mut cov = Array2::zeros((indices.len(), self.dim()));
        for (r, &i) in indices.iter().enumerate() {
            cov.row_mut(r).assign(&self.covariates.row(i));
        }
        let treatment = indices.iter().map(|&i| self.group_of(i)).collect();
        let outcomes = self.outcomes.as_ref().map(|o| Outcomes {
            y1: indices.iter().map(|&i| o.y1[i]).collect(),
            y0: indices.iter().map(|&i| o.y0[i]).collect(),
        });
        PoolSet::new(cov, treatment, outcomes)
    }

    /// Same covariates and assignment with outcomes swapped out. Exists so
    /// tests can poison labels and assert selections do not move.
    pub fn with_outcomes(&self, outcomes: Option<Outcomes<F>>) -> Result<PoolSet<F>> {
        PoolSet::new(
            self.covariates.clone(),
            self.groups.assignment().to_vec(),
            outcomes,
        )
    }
}

/// Full pairwise Euclidean distance matrix plus the normalization constant.
#[derive(Clone, Debug)]
pub struct DistanceIndex<F> {
    pairwise: Array2<F>,
    max_distance: F,
}

impl<F: Real> DistanceIndex<F> {
    pub fn n(&self) -> usize {
        self.pairwise.nrows()
    }

    pub fn dist(&self, i: usize, j: usize) -> F {
        self.pairwise[(i, j)]
    }

    pub fn max_distance(&self) -> F {
        self.max_distance
    }

    /// Absolute radius for a normalized one.
    pub fn absolute(&self, normalized: F) -> F {
        normalized * self.max_distance
    }

    /// Normalized radius for an absolute one.
    pub fn normalized(&self, absolute: F) -> F {
        absolute / self.max_distance
    }
}

/// Precomputes the O(n^2) distance matrix.
///
/// Squared differences accumulate in column order per pair, so the result is
/// reproducible bit-for-bit regardless of parallelism.
pub fn build_distance_index<F: Real>(pool: &PoolSet<F>) -> Result<DistanceIndex<F>> {
    let n = pool.n();
    let cov = pool.covariates();
    let rows: Vec<Vec<F>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = cov.row(i);
            (0..n)
                .map(|j| {
                    let xj = cov.row(j);
                    let mut acc = F::zero();
                    for c in 0..cov.ncols() {
                        let diff = xi[c] - xj[c];
                        acc = acc + diff * diff;
                    }
                    acc.sqrt()
                })
                .collect()
        })
        .collect();
    let mut pairwise = Array2::zeros((n, n));
    let mut max_distance = F::zero();
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            pairwise[(i, j)] = v;
            if v > max_distance {
                max_distance = v;
            }
        }
    }
    if max_distance <= F::zero() {
        return Err(Error::DegeneratePool);
    }
    Ok(DistanceIndex {
        pairwise,
        max_distance,
    })
}

/// Parameters of the synthetic two-group benchmark.
///
/// Cluster centers are drawn uniformly from `[-9 + offset, 9 + offset]^2`
/// with a minimum separation of `1.5 * 0.9^j`, where `j` grows after every
/// 100 consecutive rejections; unit points are isotropic Gaussians around
/// their centers. The response is `sin(1.5 x1) + cos(1.5 x2) + 5 t`, so the
/// true effect is the constant 5.
#[derive(Clone, Debug)]
pub struct ToyParams {
    pub seed: u64,
    pub clusters_t1: usize,
    pub clusters_t0: usize,
    pub per_cluster: usize,
    pub offset_t1: f64,
    pub offset_t0: f64,
}

impl ToyParams {
    pub fn new(seed: u64) -> ToyParams {
        ToyParams {
            seed,
            clusters_t1: 50,
            clusters_t0: 30,
            per_cluster: 200,
            offset_t1: 2.0,
            offset_t0: -2.0,
        }
    }

    pub fn n(&self) -> usize {
        (self.clusters_t1 + self.clusters_t0) * self.per_cluster
    }
}

/// Response surface without the treatment term.
pub fn toy_response(x1: f64, x2: f64) -> f64 {
    (1.5 * x1).sin() + (1.5 * x2).cos()
}

/// Full potential outcome for one covariate vector.
pub fn toy_outcome(x1: f64, x2: f64, treated: bool) -> f64 {
    toy_response(x1, x2) + if treated { 5.0 } else { 0.0 }
}

// Center draws are keyed by the group's own parameters rather than its label,
// so two groups configured identically reproduce the same center set (the
// identical-distribution mode below relies on this). Point draws use fixed
// per-group streams. The high bit keeps center streams clear of those.
fn center_stream(clusters: usize, offset: f64) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in (clusters as u64)
        .to_le_bytes()
        .iter()
        .chain(offset.to_bits().to_le_bytes().iter())
    {
        h = (h ^ *b as u64).wrapping_mul(0x0000_0100_0000_01b3);
    }
    h | 0x8000_0000_0000_0000
}

fn draw_centers(seed: u64, clusters: usize, offset: f64) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(center_stream(clusters, offset));
    let (lo, hi) = (-9.0 + offset, 9.0 + offset);
    let mut centers: Vec<[f64; 2]> = Vec::with_capacity(clusters);
    let mut shrink = 0i32;
    let mut consecutive = 0u32;
    while centers.len() < clusters {
        let c = [rng.random_range(lo..hi), rng.random_range(lo..hi)];
        let min_sep = 1.5 * 0.9f64.powi(shrink);
        let ok = centers
            .iter()
            .all(|a| ((a[0] - c[0]).powi(2) + (a[1] - c[1]).powi(2)).sqrt() >= min_sep);
        if ok {
            centers.push(c);
            consecutive = 0;
        } else {
            consecutive += 1;
            if consecutive == 100 {
                shrink += 1;
                consecutive = 0;
            }
        }
    }
    centers
}

fn draw_points(seed: u64, stream: u64, centers: &[[f64; 2]], per_cluster: usize) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut pts = Vec::with_capacity(centers.len() * per_cluster);
    for c in centers {
        for _ in 0..per_cluster {
            let dx: f64 = normal.sample(&mut rng);
            let dy: f64 = normal.sample(&mut rng);
            pts.push([c[0] + dx, c[1] + dy]);
        }
    }
    pts
}

/// Center sets the generator would use, exposed for inspection and tests.
pub fn toy_centers(params: &ToyParams) -> [Vec<[f64; 2]>; 2] {
    [
        draw_centers(params.seed, params.clusters_t0, params.offset_t0),
        draw_centers(params.seed, params.clusters_t1, params.offset_t1),
    ]
}

fn assemble_pool<F: Real>(points: Vec<([f64; 2], Group)>) -> PoolSet<F> {
    let n = points.len();
    let mut cov = Array2::zeros((n, 2));
    let mut treatment = Vec::with_capacity(n);
    let mut y1 = Vec::with_capacity(n);
    let mut y0 = Vec::with_capacity(n);
    for (i, (p, g)) in points.iter().enumerate() {
        cov[(i, 0)] = real::<F>(p[0]);
        cov[(i, 1)] = real::<F>(p[1]);
        treatment.push(*g);
        let base = real::<F>(toy_response(p[0], p[1]));
        y0.push(base);
        y1.push(base + real::<F>(5.0));
    }
    PoolSet::new(cov, treatment, Some(Outcomes { y1, y0 }))
        .expect("generated pool is valid by construction")
}

/// Synthetic two-group benchmark. Treated rows come first, then control, so
/// group sizes are `clusters_t1 * per_cluster` and `clusters_t0 * per_cluster`.
/// Deterministic for a fixed seed.
pub fn generate_toy<F: Real>(params: &ToyParams) -> PoolSet<F> {
    assert!(
        params.clusters_t1 >= 1 && params.clusters_t0 >= 1 && params.per_cluster >= 1,
        "cluster counts must be at least 1"
    );
    let centers_t1 = draw_centers(params.seed, params.clusters_t1, params.offset_t1);
    let centers_t0 = draw_centers(params.seed, params.clusters_t0, params.offset_t0);
    let pts_t1 = draw_points(params.seed, 1, &centers_t1, params.per_cluster);
    let pts_t0 = draw_points(params.seed, 2, &centers_t0, params.per_cluster);
    let points = pts_t1
        .into_iter()
        .map(|p| (p, Group::Treated))
        .chain(pts_t0.into_iter().map(|p| (p, Group::Control)))
        .collect();
    assemble_pool(points)
}

/// Identical-distribution pool: one sampled point set appears under both
/// labels (treated copy first). Cross-group geometry then mirrors within-group
/// geometry exactly, which is what the overlapping-radii reproduction needs.
pub fn generate_identical<F: Real>(seed: u64, clusters: usize, per_cluster: usize) -> PoolSet<F> {
    assert!(clusters >= 1 && per_cluster >= 1);
    let centers = draw_centers(seed, clusters, 0.0);
    let pts = draw_points(seed, 1, &centers, per_cluster);
    let points = pts
        .iter()
        .map(|p| (*p, Group::Treated))
        .chain(pts.iter().map(|p| (*p, Group::Control)))
        .collect();
    assemble_pool(points)
}

/// Writes a pool as CSV: `x_0..x_{d-1},t[,y1,y0]`. Float formatting is
/// shortest-round-trip, so `load_pool_csv` reproduces the matrix exactly.
pub fn save_pool_csv(pool: &PoolSet<f64>, path: &Path) -> Result<()> {
    let mut out = String::new();
    for c in 0..pool.dim() {
        out.push_str(&format!("x_{c},"));
    }
    out.push('t');
    if pool.outcomes().is_some() {
        out.push_str(",y1,y0");
    }
    out.push('\n');
    for i in 0..pool.n() {
        for c in 0..pool.dim() {
            out.push_str(&format!("{},", pool.covariates()[(i, c)]));
        }
        out.push_str(&format!("{}", pool.group_of(i)));
        if let Some(o) = pool.outcomes() {
            out.push_str(&format!(",{},{}", o.y1[i], o.y0[i]));
        }
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Parses the CSV pool format written by [`save_pool_csv`].
pub fn load_pool_csv(path: &Path) -> Result<PoolSet<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::CsvFormat {
            line: 1,
            msg: e.to_string(),
        })?;
    let headers = reader
        .headers()
        .map_err(|e| Error::CsvFormat {
            line: 1,
            msg: e.to_string(),
        })?
        .clone();
    let names: Vec<&str> = headers.iter().collect();
    let d = names.iter().take_while(|h| h.starts_with("x_")).count();
    if d == 0 {
        return Err(Error::CsvFormat {
            line: 1,
            msg: "expected covariate columns named x_0, x_1, ...".into(),
        });
    }
    let rest: Vec<&str> = names[d..].to_vec();
    let has_outcomes = match rest.as_slice() {
        ["t"] => false,
        ["t", "y1", "y0"] => true,
        ["t", "y1"] | ["t", "y0"] => return Err(Error::MixedOutcomes),
        _ => {
            return Err(Error::CsvFormat {
                line: 1,
                msg: format!("unexpected columns after covariates: {rest:?}"),
            })
        }
    };

    let mut cov_rows: Vec<f64> = Vec::new();
    let mut treatment = Vec::new();
    let mut y1 = Vec::new();
    let mut y0 = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::CsvFormat {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            msg: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != names.len() {
            return Err(Error::CsvFormat {
                line,
                msg: format!("expected {} fields, found {}", names.len(), record.len()),
            });
        }
        let field = |idx: usize| -> Result<f64> {
            record[idx]
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::CsvFormat {
                    line,
                    msg: format!("field {:?} is not a number", &record[idx]),
                })
        };
        for c in 0..d {
            cov_rows.push(field(c)?);
        }
        let t_raw = record[d].trim();
        let group = match t_raw {
            "0" => Group::Control,
            "1" => Group::Treated,
            _ => {
                return Err(Error::BadTreatment {
                    line,
                    value: t_raw.to_string(),
                })
            }
        };
        treatment.push(group);
        if has_outcomes {
            y1.push(field(d + 1)?);
            y0.push(field(d + 2)?);
        }
    }
    let n = treatment.len();
    let cov = Array2::from_shape_vec((n, d), cov_rows).expect("row-major fill");
    let outcomes = has_outcomes.then_some(Outcomes { y1, y0 });
    PoolSet::new(cov, treatment, outcomes)
}
