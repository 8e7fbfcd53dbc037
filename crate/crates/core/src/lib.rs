//! Hit-and-run Markov chain Monte Carlo for `∫ f ρ / ∫ ρ` with ρ log-concave
//! on a convex body, plus calculators for the explicit error bounds and
//! schedules of the multi-run and single-run estimators.

pub mod cli;
pub mod densities;
pub mod error;
pub mod estimators;
pub mod geometry;
pub mod hit_and_run;
pub mod integrand;
pub mod line_sampler;
pub mod linalg;
pub mod quadrature;
pub mod rng;
pub mod schedules;
pub mod special;
pub mod validation;

pub use densities::{gaussian_class_params, ClassParams, ClassVariant, Density};
pub use error::{Error, Result};
pub use estimators::{empirical_mse, multi_run, single_run, EstimateResult, EstimatorSpec, Mode};
pub use geometry::{ConvexBody, Interval};
pub use hit_and_run::{har_step, run_chain, transition_log_density};
pub use integrand::Integrand;
pub use rng::RandomStream;
pub use special::r_star;
