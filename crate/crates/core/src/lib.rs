//! Driven two-level atom coupled to a squeezed thermal reservoir.
//!
//! * [`params`]: physical inputs, dressed rates and damping regime.
//! * [`analytic`]: closed-form Bloch dynamics checked against `expm(G t)`.
//! * [`oracle`]: adaptive Runge–Kutta integration of the full master equation.
//! * [`lgti`]: two-time correlators, K₃, K±, unsharp measurements and
//!   violation scans.
//! * [`export`]: deterministic CSV/JSON formatting.

// `!(x <= tol)` is used on purpose so NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod export;
pub mod lgti;
pub mod oracle;
pub mod params;

pub use analytic::{BlochDynamics, BlochVector};
pub use lgti::{LgModel, LgQuantity, ViolationReport};
pub use oracle::{DensityMatrix, StepControl, Trajectory};
pub use params::{DerivedRates, Regime, SystemParams, Temperature};
