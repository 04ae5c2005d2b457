//! Goh transformation, the transformed quadratic form, discretized critical
//! cones and the second-order necessary/sufficient verdicts.

pub mod coeffs;
pub mod cone;
pub mod forms;
pub mod verdicts;

pub use coeffs::{BracketFields, StageCoeffs};
pub use cone::{build_cone, ConeBasis, ConeKind};
pub use forms::{goh_transform, xi_propagation_defect, FormContext, GohDirection, NodeCoefficients};
pub use verdicts::{necessary_test, sufficient_test, NecessaryOutcome, SufficientOutcome};

#[cfg(test)]
mod tests;
