//! Inverse identification of the internal boundary of an annular domain.
//!
//! Given Dirichlet data `u_o` on an unknown inner curve `r(θ)`, Dirichlet data
//! `u_f` on the outer circle `r = R` and a target outward flux `w` on that
//! circle, the crate searches for the curve for which the Laplace solution
//! matches all three conditions.
//!
//! * [`geometry`]: boundary-fitted transform `t = (r - r(θ)) / (R - r(θ))` and
//!   the coefficients of the transformed operator.
//! * [`solver`]: generalized method of lines forward solve and the truncated
//!   per-line ansatz.
//! * [`residuals`]: Laplacian residual, boundary flux and the penalized cost.
//! * [`optimizer`]: projected gradient descent over shape and ansatz
//!   coefficients.
//! * [`oracle`]: closed-form annulus harmonics and a relaxation reference
//!   solver.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below fix the double precision types used by the command line
//! driver.

// `!(a < b)` checks deliberately reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod linalg;
pub mod lines;
pub mod optimizer;
pub mod oracle;
pub mod residuals;
pub mod scalar;
pub mod solver;

pub use error::{GmolError, Result};
pub use geometry::{
    metric_coefficients, periodic_derivative, uniform_lines, AngularGrid, BoundaryData, DerivativeOrder,
    MetricField, ShapeCurve,
};
pub use lines::{rotate_periodic, LineArray};
pub use optimizer::{
    finite_difference_gradient, minimize, solve_inverse, Bounds, InverseMode, InverseOptions, MinimizeOptions,
    MinimizeResult, OptResult, ParamVector, SobolevMetric, Termination, WarmStart, FAILED_OBJECTIVE,
};
pub use oracle::{analytic_annulus, dense_reference_solve, HarmonicMode, RelaxationOptions, RelaxationReport, Trig};
pub use residuals::{cost, laplacian_residual, neumann_flux, CostBreakdown, NormMode};
pub use scalar::{sup_diff, sup_norm, Scalar};
pub use solver::{
    ansatz_field, ansatz_field_with_metric, fit_ansatz, fixed_point_solve, gmol_sweep, gmol_sweep_with_metric,
    line_update, AnsatzCoeffs, AnsatzTerm, FixedPointOptions, FixedPointReport, LineField,
};

pub type ShapeCurve64 = ShapeCurve<f64>;
pub type BoundaryData64 = BoundaryData<f64>;
pub type MetricField64 = MetricField<f64>;
pub type LineField64 = LineField<f64>;
pub type AnsatzCoeffs64 = AnsatzCoeffs<f64>;
pub type CostBreakdown64 = CostBreakdown<f64>;
pub type OptResult64 = OptResult<f64>;
pub type InverseOptions64 = InverseOptions<f64>;

pub type ShapeCurve32 = ShapeCurve<f32>;
pub type BoundaryData32 = BoundaryData<f32>;
pub type LineField32 = LineField<f32>;
