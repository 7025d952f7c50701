//! Covering-based active sample selection for treatment effect estimation.
//!
//! The library models a pool of units with binary treatment assignments and
//! asks which units to label next so that both the factual outcome surface
//! (each group covered by its own labeled points) and the counterfactual one
//! (each group covered by the *other* group's labeled points) are well
//! approximated. Two acquisition strategies are provided:
//!
//! * [`greedy_radius`] shrinks the largest of the four covering radii one
//!   acquisition at a time;
//! * [`fccm`] fixes the radii up front and greedily maximizes mean ball
//!   coverage by scaled weighted out-degree.
//!
//! Supporting modules handle radius calibration ([`calibrate`]), a toy
//! benchmark generator and CSV ingestion ([`dataset`]), a two-headed
//! nearest-neighbor effect estimator ([`estimate`]), exhaustive small-instance
//! oracles for the approximation guarantees ([`oracle`]), and a seeded
//! experiment driver ([`harness`]).
//!
//! All geometry is generic over the scalar type via [`scalar::Real`]; the
//! crate-root aliases fix `f64`, which is what the CLI and the harness use.

pub mod calibrate;
pub mod coverage;
pub mod dataset;
pub mod error;
pub mod estimate;
pub mod fccm;
pub mod greedy_radius;
pub mod harness;
pub mod oracle;
pub mod radii;
pub mod scalar;

pub mod io_util;

pub use error::{Error, Result};
pub use scalar::Real;

/// Default-precision aliases. Generic code lives in the modules; anything
/// user-facing (CLI, harness configs) speaks these.
pub type PoolSet64 = dataset::PoolSet<f64>;
pub type DistanceIndex64 = dataset::DistanceIndex<f64>;
pub type RadiiReport64 = radii::RadiiReport<f64>;
pub type GreedyTrace64 = greedy_radius::GreedyTrace<f64>;
pub type CoverageConfig64 = coverage::CoverageConfig<f64>;
pub type BallGraph64 = coverage::BallGraph<f64>;
pub type FccmRun64 = fccm::FccmRun<f64>;
pub type CalibrationCurve64 = calibrate::CalibrationCurve<f64>;
pub type TwoHeadedEstimator64 = estimate::TwoHeadedEstimator<f64>;
pub type ExperimentConfig64 = harness::ExperimentConfig<f64>;
pub type RunReport64 = harness::RunReport<f64>;
