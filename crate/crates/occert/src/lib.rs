//! Certification of first- and second-order optimality conditions for
//! control-affine optimal control problems with a scalar control, bound
//! control constraints and a scalar first-order state constraint.
//!
//! Candidate trajectories are grid-sampled with a declared bang/constrained/
//! singular arc structure. The crate validates the structure, constructs
//! Lagrange multipliers (costate, endpoint multipliers and the
//! state-constraint measure with its density and atoms), checks the pointwise
//! first-order conditions and jump identities, and evaluates the transformed
//! second-order quadratic form on discretized critical cones to produce
//! necessary and sufficient verdicts with numerical evidence.
//!
//! Entry points:
//! - [`registry::registry_get`] for the builtin instances,
//! - [`pipeline::run_certify`] for the full certification pipeline,
//! - [`selftest::run`] for the deterministic property suites,
//! - the `examples/` directory for one runnable walkthrough per capability.

pub mod error;
pub mod files;
pub mod instances;
pub mod linalg;
pub mod multiplier;
pub mod pipeline;
pub mod poly;
pub mod problem;
pub mod registry;
pub mod report;
pub mod second_order;
pub mod selftest;
pub mod stages;
pub mod tolerances;
pub mod trajectory;

pub use error::{Error, Result};
pub use tolerances::Tolerances;
