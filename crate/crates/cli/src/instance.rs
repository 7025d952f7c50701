//! Small random instances for oracle cross-checks.
//!
//! Both groups draw covariates from the same uniform square, so their
//! supports overlap and every counterfactual radius is reducible. The first
//! four units alternate groups, guaranteeing at least two members per arm
//! regardless of the later coin flips; sizes stay within the exhaustive
//! oracle's enumeration guards only when the caller keeps `n` small.

use cfcover::dataset::{Group, PoolSet};
use cfcover::{Error, PoolSet64, Result};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Uniform two-dimensional pool of `n` units in `[-2, 2]^2`, deterministic
/// in `seed`. No outcomes: these instances exist to compare selection
/// geometry against brute force, never to fit estimators.
pub fn random_instance(n: usize, seed: u64) -> Result<PoolSet64> {
    if n < 4 {
        return Err(Error::Config(format!(
            "oracle instances need at least 4 units so every arm holds two, got {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cov = Array2::zeros((n, 2));
    for i in 0..n {
        cov[(i, 0)] = rng.random_range(-2.0..2.0);
        cov[(i, 1)] = rng.random_range(-2.0..2.0);
    }
    let groups: Vec<Group> = (0..n)
        .map(|i| {
            if i < 4 {
                Group::from_bit((i % 2) as u8).expect("bit is 0 or 1")
            } else if rng.random_bool(0.5) {
                Group::Treated
            } else {
                Group::Control
            }
        })
        .collect();
    PoolSet::new(cov, groups, None)
}
