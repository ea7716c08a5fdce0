//! Laplacian residual, outer-boundary flux and the penalized cost
//! `J = ||lap||² + K ||flux - w||²`.

use crate::error::{GmolError, Result};
use crate::geometry::{d2_theta_into, d_theta_into, metric_coefficients, uniform_lines, MetricField, ShapeCurve};
use crate::lines::LineArray;
use crate::scalar::{sup_norm, Scalar};
use crate::solver::LineField;

/// Quadrature used for the discrete L² norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormMode {
    /// Area element `ρ (R - r) d (2π/M)` inside, arc element `R (2π/M)` on the boundary.
    #[default]
    Geometric,
    /// Plain sums of squares.
    PlainSum,
}

/// Squared L² norms, their penalized total and the matching ∞-norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostBreakdown<T> {
    pub lap_l2_sq: T,
    pub neumann_l2_sq: T,
    /// `lap_l2_sq + penalty * neumann_l2_sq`
    pub total: T,
    pub lap_inf: T,
    pub neumann_inf: T,
    pub penalty: T,
}

fn check_sizes<T: Scalar>(field: &LineField<T>, shape: &ShapeCurve<T>) -> Result<()> {
    if field.grid() != shape.grid() {
        return Err(GmolError::InvalidInput(
            "field and shape use different grids".into(),
        ));
    }
    Ok(())
}

/// Transformed Laplacian `u_tt + f7 u_t + f8 u_tθ + f9 u_θθ` on interior lines.
pub fn laplacian_residual<T: Scalar>(field: &LineField<T>, shape: &ShapeCurve<T>) -> Result<LineArray<T>> {
    check_sizes(field, shape)?;
    if field.intervals() < 2 {
        return Err(GmolError::InvalidInput(
            "the residual needs at least 2 line intervals".into(),
        ));
    }
    let metric = metric_coefficients(shape, &uniform_lines(field.intervals()))?;
    Ok(laplacian_residual_with_metric(field.values(), &metric))
}

/// Residual on an `(N + 1) × M` array with precomputed coefficients.
pub fn laplacian_residual_with_metric<T: Scalar>(values: &LineArray<T>, metric: &MetricField<T>) -> LineArray<T> {
    let intervals = values.rows() - 1;
    let m = values.cols();
    let inv_d2 = T::from_count(intervals * intervals);
    let half_inv_d = T::from_count(intervals) / T::lit(2.0);
    let mut out = LineArray::filled(intervals.saturating_sub(1), m, T::zero());
    let mut ut = vec![T::zero(); m];
    let mut ut_theta = vec![T::zero(); m];
    let mut u_thth = vec![T::zero(); m];
    for n in 1..intervals {
        let up = values.row(n + 1);
        let uc = values.row(n);
        let um = values.row(n - 1);
        for j in 0..m {
            ut[j] = (up[j] - um[j]) * half_inv_d;
        }
        d_theta_into(&ut, &mut ut_theta);
        d2_theta_into(uc, &mut u_thth);
        let (f7, f8, f9) = (metric.f7.row(n), metric.f8.row(n), metric.f9.row(n));
        let row = out.row_mut(n - 1);
        for j in 0..m {
            let utt = (up[j] - T::lit(2.0) * uc[j] + um[j]) * inv_d2;
            row[j] = utt + f7[j] * ut[j] + f8[j] * ut_theta[j] + f9[j] * u_thth[j];
        }
    }
    out
}

/// Outward normal derivative `∂u/∂r` at `r = R`, from a second-order
/// one-sided difference over the three outermost lines.
pub fn neumann_flux<T: Scalar>(field: &LineField<T>, shape: &ShapeCurve<T>) -> Result<Vec<T>> {
    check_sizes(field, shape)?;
    if field.intervals() < 3 {
        return Err(GmolError::InvalidInput(format!(
            "the flux stencil needs at least 3 line intervals, got {}",
            field.intervals()
        )));
    }
    Ok(neumann_flux_values(field.values(), shape))
}

pub(crate) fn neumann_flux_values<T: Scalar>(values: &LineArray<T>, shape: &ShapeCurve<T>) -> Vec<T> {
    let n = values.rows() - 1;
    let half_inv_d = T::from_count(n) / T::lit(2.0);
    let big_r = shape.outer_radius();
    let (un, un1, un2) = (values.row(n), values.row(n - 1), values.row(n - 2));
    shape
        .radii()
        .iter()
        .enumerate()
        .map(|(j, &r)| {
            let du_dt = (T::lit(3.0) * un[j] - T::lit(4.0) * un1[j] + un2[j]) * half_inv_d;
            du_dt / (big_r - r)
        })
        .collect()
}

/// Quadrature weights of the two norms.
struct Weights<T> {
    /// Per interior node, `(N - 1) × M` row-major.
    area: Vec<T>,
    arc: T,
}

fn weights<T: Scalar>(metric: &MetricField<T>, shape: &ShapeCurve<T>, mode: NormMode) -> Weights<T> {
    let lines = metric.lines();
    let m = metric.angles();
    match mode {
        NormMode::PlainSum => Weights {
            area: vec![T::one(); (lines - 2) * m],
            arc: T::one(),
        },
        NormMode::Geometric => {
            let d = T::from_count(lines - 1).recip();
            let dtheta = shape.grid().theta_step::<T>();
            let big_r = shape.outer_radius();
            let mut area = Vec::with_capacity((lines - 2) * m);
            for n in 1..lines - 1 {
                for (j, &r) in shape.radii().iter().enumerate() {
                    area.push(metric.radius[(n, j)] * (big_r - r) * d * dtheta);
                }
            }
            Weights {
                area,
                arc: big_r * dtheta,
            }
        }
    }
}

/// `J` and its parts for a field on `shape` against the flux target `w`.
pub fn cost<T: Scalar>(
    field: &LineField<T>,
    shape: &ShapeCurve<T>,
    w: &[T],
    penalty: T,
    mode: NormMode,
) -> Result<CostBreakdown<T>> {
    check_sizes(field, shape)?;
    if w.len() != shape.grid().len() {
        return Err(GmolError::InvalidInput(
            "flux target length differs from the grid".into(),
        ));
    }
    if !(penalty >= T::zero()) {
        return Err(GmolError::InvalidInput(format!(
            "penalty weight must be non-negative, got {penalty}"
        )));
    }
    if field.intervals() < 3 {
        return Err(GmolError::InvalidInput(
            "the cost needs at least 3 line intervals".into(),
        ));
    }
    let metric = metric_coefficients(shape, &uniform_lines(field.intervals()))?;
    Ok(cost_with_metric(field.values(), &metric, shape, w, penalty, mode))
}

pub(crate) fn cost_with_metric<T: Scalar>(
    values: &LineArray<T>,
    metric: &MetricField<T>,
    shape: &ShapeCurve<T>,
    w: &[T],
    penalty: T,
    mode: NormMode,
) -> CostBreakdown<T> {
    let lap = laplacian_residual_with_metric(values, metric);
    let mismatch: Vec<T> = neumann_flux_values(values, shape)
        .into_iter()
        .zip(w)
        .map(|(f, &wj)| f - wj)
        .collect();
    let wts = weights(metric, shape, mode);
    let lap_l2_sq: T = lap
        .as_slice()
        .iter()
        .zip(&wts.area)
        .map(|(&r, &a)| r * r * a)
        .sum();
    let neumann_l2_sq: T = mismatch.iter().map(|&e| e * e).sum::<T>() * wts.arc;
    CostBreakdown {
        lap_l2_sq,
        neumann_l2_sq,
        total: lap_l2_sq + penalty * neumann_l2_sq,
        lap_inf: sup_norm(lap.as_slice()),
        neumann_inf: sup_norm(&mismatch),
        penalty,
    }
}

/// Residual vector whose sum of squares is `J`: weighted Laplacian entries
/// followed by weighted flux mismatches.
pub(crate) fn weighted_residuals<T: Scalar>(
    values: &LineArray<T>,
    metric: &MetricField<T>,
    shape: &ShapeCurve<T>,
    w: &[T],
    penalty: T,
    mode: NormMode,
) -> Vec<T> {
    let lap = laplacian_residual_with_metric(values, metric);
    let wts = weights(metric, shape, mode);
    let flux_scale = (penalty * wts.arc).sqrt();
    lap.as_slice()
        .iter()
        .zip(&wts.area)
        .map(|(&r, &a)| r * a.sqrt())
        .chain(
            neumann_flux_values(values, shape)
                .into_iter()
                .zip(w)
                .map(|(f, &wj)| (f - wj) * flux_scale),
        )
        .collect()
}
