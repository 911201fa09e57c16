//! Generalized proportional Hadamard fractional integrals.
//!
//! * [`numcore`]: strictly positive functions on `[1, X]` in log-log spline form
//! * [`quadrature`]: Gauss–Jacobi rules for the weight `s^(α−1)` and adaptive integration
//! * [`operators`]: the fractional integral operators and their closed-form identities
//! * [`generators`]: seeded random functions satisfying inequality hypotheses by construction
//! * [`harness`]: one checker per Minkowski-type inequality, suite runner and reports
//! * [`identity`]: closed-form, semigroup and β = 1 reduction checks

// `!(x >= a)` comparisons are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod generators;
pub mod harness;
pub mod identity;
pub mod numcore;
pub mod operators;
pub mod quadrature;
pub mod special;

pub use numcore::{DomainSpec, FunctionError, FunctionKind, PositiveFunction};
pub use operators::{FracParams, OperatorError, OperatorOptions, PowerImageSpec};
pub use quadrature::{OperatorValue, QuadratureRule};
