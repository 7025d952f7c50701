//! Outcome estimation and evaluation. Selection never consults the
//! estimator, so a small deterministic regressor is enough to score labeled
//! sets: one distance-weighted k-nearest-neighbor head per treatment arm,
//! each fit only on outcomes revealed under that arm.

use crate::dataset::{Group, PoolSet};
use crate::error::{Error, Result};
use crate::radii::SelectionState;
use crate::scalar::{real, Real};

/// Added to every neighbor distance before inversion, so a zero-distance
/// neighbor dominates without dividing by zero.
const WEIGHT_EPS: f64 = 1e-9;
const MAX_NEIGHBORS: usize = 5;

#[derive(Clone, Debug)]
struct Head<F> {
    xs: Vec<Vec<F>>,
    ys: Vec<F>,
    k: usize,
}

impl<F: Real> Head<F> {
    fn predict(&self, x: &[F]) -> F {
        debug_assert_eq!(x.len(), self.xs[0].len());
        let mut order: Vec<(F, usize)> = self
            .xs
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let mut acc = F::zero();
                for (a, b) in p.iter().zip(x) {
                    let d = *a - *b;
                    acc = acc + d * d;
                }
                (acc.sqrt(), i)
            })
            .collect();
        order.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
        let eps = real::<F>(WEIGHT_EPS);
        let mut num = F::zero();
        let mut den = F::zero();
        for &(d, i) in order.iter().take(self.k) {
            let w = F::one() / (d + eps);
            num = num + w * self.ys[i];
            den = den + w;
        }
        num / den
    }
}

/// One regressor per treatment arm. Queries against head `t` answer "what
/// outcome would a unit at `x` have under treatment `t`".
#[derive(Clone, Debug)]
pub struct TwoHeadedEstimator<F> {
    heads: [Head<F>; 2],
}

impl<F: Real> TwoHeadedEstimator<F> {
    /// Fits from explicit labeled examples `(covariates, arm, outcome)`.
    /// Examples keep their given order; neighbor ties resolve to the earlier
    /// example, so fitting is deterministic.
    pub fn fit(examples: &[(Vec<F>, Group, F)]) -> Result<TwoHeadedEstimator<F>> {
        let mut heads = [
            Head {
                xs: Vec::new(),
                ys: Vec::new(),
                k: 0,
            },
            Head {
                xs: Vec::new(),
                ys: Vec::new(),
                k: 0,
            },
        ];
        for (x, g, y) in examples {
            let h = &mut heads[g.index()];
            h.xs.push(x.clone());
            h.ys.push(*y);
        }
        for (gi, h) in heads.iter_mut().enumerate() {
            if h.xs.is_empty() {
                return Err(Error::EmptyHead { group: gi as u8 });
            }
            h.k = h.xs.len().min(MAX_NEIGHBORS);
        }
        let dim = heads[0].xs[0].len();
        if heads.iter().flat_map(|h| &h.xs).any(|x| x.len() != dim) {
            return Err(Error::Config(
                "labeled examples disagree on covariate dimension".into(),
            ));
        }
        Ok(TwoHeadedEstimator { heads })
    }

    /// Fits on the labeled subset of a ground-truth pool. Each selected unit
    /// reveals only the outcome under its own treatment; units enter in
    /// index order.
    pub fn fit_from_pool(
        pool: &PoolSet<F>,
        labeled: &SelectionState,
    ) -> Result<TwoHeadedEstimator<F>> {
        if pool.outcomes().is_none() {
            return Err(Error::MissingOutcomes);
        }
        let examples: Vec<(Vec<F>, Group, F)> = (0..pool.n())
            .filter(|&i| labeled.is_selected(i))
            .map(|i| {
                let y = pool.observed_outcome(i).expect("outcomes checked above");
                (pool.row(i).to_vec(), pool.group_of(i), y)
            })
            .collect();
        TwoHeadedEstimator::fit(&examples)
    }

    pub fn head_len(&self, g: Group) -> usize {
        self.heads[g.index()].xs.len()
    }

    pub fn neighbors(&self, g: Group) -> usize {
        self.heads[g.index()].k
    }

    pub fn predict_head(&self, g: Group, x: &[F]) -> F {
        self.heads[g.index()].predict(x)
    }

    /// Estimated effect at `x`: treated-head prediction minus control-head
    /// prediction.
    pub fn predict_effect(&self, x: &[F]) -> F {
        self.predict_head(Group::Treated, x) - self.predict_head(Group::Control, x)
    }
}

/// Evaluation result: root mean squared deviation between estimated and true
/// effects, plus how many units it averaged over.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeheResult<F> {
    pub sqrt_pehe: F,
    pub n_eval: usize,
}

/// Scores the estimator against a ground-truth pool:
/// `sqrt(mean((tau_hat(x_i) - tau_i)^2))` over every unit.
pub fn sqrt_pehe<F: Real>(
    est: &TwoHeadedEstimator<F>,
    eval_pool: &PoolSet<F>,
) -> Result<PeheResult<F>> {
    if eval_pool.outcomes().is_none() {
        return Err(Error::MissingOutcomes);
    }
    let n = eval_pool.n();
    let mut acc = F::zero();
    for i in 0..n {
        let x = eval_pool.row(i);
        let tau_hat = est.predict_effect(x.as_slice().expect("rows are contiguous"));
        let tau = eval_pool.tau(i).expect("outcomes checked above");
        let d = tau_hat - tau;
        acc = acc + d * d;
    }
    Ok(PeheResult {
        sqrt_pehe: (acc / real_n::<F>(n)).sqrt(),
        n_eval: n,
    })
}

fn real_n<F: Real>(n: usize) -> F {
    crate::scalar::real_usize(n)
}
