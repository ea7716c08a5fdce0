//! Generalized method of lines for the transformed Laplace equation.
//!
//! The `t`-direction is cut into `N` lines `t_n = n / N`. On line `n` the
//! partial finite difference equation
//!
//! ```text
//! (u_{n+1} - 2u_n + u_{n-1})/d^2 + f7 (u_n - u_{n-1})/d
//!     + f8 ∂θ(u_n - u_{n-1})/d + f9 ∂θθ u_n = 0
//! ```
//!
//! is rewritten as the fixed point `u_n = T_n(u_{n+1}, u_n, u_0)` and solved by
//! Banach iteration started from `u_n = u_{n+1}`. Inductively `u_{n-1} =
//! F_{n-1}(u_n, u_0)` is substituted into `T_n`, so each `F_n` maps the next
//! line to the current one. The line equations are linear, so every `F_n` is an
//! affine map `u_n = A_n u_{n+1} + b_n`; the sweep iterates `T_n` on the
//! columns of `[A_n | b_n]`, which is the same Banach iteration applied to
//! every basis direction of `u_{n+1}` at once. Once all `F_n` are built, the
//! lines are recovered from `u_N = u_f` downwards.

use rayon::prelude::*;

use crate::error::{GmolError, Result};
use crate::geometry::{
    d2_theta, d2_theta_into, d_theta, d_theta_into, metric_coefficients, uniform_lines, AngularGrid,
    BoundaryData, MetricField, ShapeCurve,
};
use crate::linalg::least_squares;
use crate::lines::LineArray;
use crate::scalar::{sup_diff, Scalar};

/// Solution values `u_n(x_j)` on every line `n = 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct LineField<T> {
    grid: AngularGrid,
    values: LineArray<T>,
}

impl<T: Scalar> LineField<T> {
    /// Field from an `(N + 1) × M` array; requires `N ≥ 1` and finite entries.
    pub fn new(grid: AngularGrid, values: LineArray<T>) -> Result<Self> {
        if values.cols() != grid.len() {
            return Err(GmolError::InvalidInput(format!(
                "field has {} columns for a grid of {}",
                values.cols(),
                grid.len()
            )));
        }
        if values.rows() < 2 {
            return Err(GmolError::InvalidInput(
                "a line field needs at least two lines".into(),
            ));
        }
        if values.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(GmolError::NonFinite("line field"));
        }
        Ok(Self { grid, values })
    }

    #[inline]
    pub fn grid(&self) -> AngularGrid {
        self.grid
    }

    /// Number of line intervals `N`.
    #[inline]
    pub fn intervals(&self) -> usize {
        self.values.rows() - 1
    }

    /// Line spacing `d = 1 / N`.
    #[inline]
    pub fn spacing(&self) -> T {
        T::from_count(self.intervals()).recip()
    }

    #[inline]
    pub fn t(&self, n: usize) -> T {
        T::from_count(n) / T::from_count(self.intervals())
    }

    #[inline]
    pub fn row(&self, n: usize) -> &[T] {
        self.values.row(n)
    }

    #[inline]
    pub fn values(&self) -> &LineArray<T> {
        &self.values
    }

    pub fn into_values(self) -> LineArray<T> {
        self.values
    }
}

/// Terms of the truncated line ansatz, labelled by their coefficient index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AnsatzTerm {
    /// `a[1] u_f`
    Outer,
    /// `a[2] u_0`
    Inner,
    /// `a[3] f7 u_f`
    OuterTransport,
    /// `a[4] f7 u_0`
    InnerTransport,
    /// `a[5] f8 u_f'`
    OuterMixed,
    /// `a[6] f8 u_0'`
    InnerMixed,
    /// `a[9] f9 u_f''`
    OuterCurvature,
    /// `a[10] f9 u_0''`
    InnerCurvature,
}

impl AnsatzTerm {
    pub const ALL: [AnsatzTerm; 8] = [
        AnsatzTerm::Outer,
        AnsatzTerm::Inner,
        AnsatzTerm::OuterTransport,
        AnsatzTerm::InnerTransport,
        AnsatzTerm::OuterMixed,
        AnsatzTerm::InnerMixed,
        AnsatzTerm::OuterCurvature,
        AnsatzTerm::InnerCurvature,
    ];

    /// Storage slot `0..8`.
    #[inline]
    pub fn slot(self) -> usize {
        self as usize
    }

    /// Coefficient label `k` in `a_n[k]`.
    pub fn label(self) -> usize {
        [1, 2, 3, 4, 5, 6, 9, 10][self.slot()]
    }
}

/// Per-line ansatz coefficients `a_n[k]` for interior lines `n = 1..N`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnsatzCoeffs<T> {
    values: Vec<[T; 8]>,
}

impl<T: Scalar> AnsatzCoeffs<T> {
    pub const TERMS: usize = 8;

    /// All-zero coefficients for a field with `intervals` line intervals.
    pub fn zeros(intervals: usize) -> Self {
        Self {
            values: vec![[T::zero(); 8]; intervals.saturating_sub(1)],
        }
    }

    /// Linear blend `a_n[1] = t_n`, `a_n[2] = 1 - t_n`.
    pub fn affine(intervals: usize) -> Self {
        let mut c = Self::zeros(intervals);
        for n in 1..intervals {
            let t = T::from_count(n) / T::from_count(intervals);
            c.set(n, AnsatzTerm::Outer, t);
            c.set(n, AnsatzTerm::Inner, T::one() - t);
        }
        c
    }

    /// Coefficients from a flat slice ordered line by line.
    pub fn from_flat(flat: &[T]) -> Result<Self> {
        if !flat.len().is_multiple_of(8) {
            return Err(GmolError::InvalidInput(format!(
                "flat coefficient length {} is not a multiple of 8",
                flat.len()
            )));
        }
        if flat.iter().any(|v| !v.is_finite()) {
            return Err(GmolError::NonFinite("ansatz coefficients"));
        }
        Ok(Self {
            values: flat
                .chunks_exact(8)
                .map(|c| [c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]])
                .collect(),
        })
    }

    pub fn to_flat(&self) -> Vec<T> {
        self.values.iter().flatten().copied().collect()
    }

    /// Number of interior lines `N - 1`.
    #[inline]
    pub fn lines(&self) -> usize {
        self.values.len()
    }

    /// `a_n[term]` for interior line `n` (1-based).
    #[inline]
    pub fn get(&self, n: usize, term: AnsatzTerm) -> T {
        self.values[n - 1][term.slot()]
    }

    #[inline]
    pub fn set(&mut self, n: usize, term: AnsatzTerm, value: T) {
        self.values[n - 1][term.slot()] = value;
    }

    #[inline]
    pub fn line(&self, n: usize) -> &[T; 8] {
        &self.values[n - 1]
    }
}

/// Outcome of one Banach iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointReport<T> {
    pub iterations: usize,
    pub final_change: T,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointOptions<T> {
    /// Sup-norm change that ends the iteration.
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Scalar> Default for FixedPointOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::lit(1e-10).max(T::epsilon() * T::lit(100.0)),
            max_iter: 10_000,
        }
    }
}

/// Iterates `u ← map(u)` from `init` until the sup-norm change drops to `tol`
/// or `max_iter` maps have been applied. A non-finite change stops early.
pub fn fixed_point_solve<T, F>(
    mut map: F,
    init: Vec<T>,
    tol: T,
    max_iter: usize,
) -> (Vec<T>, FixedPointReport<T>)
where
    T: Scalar,
    F: FnMut(&[T]) -> Vec<T>,
{
    let mut current = init;
    let mut report = FixedPointReport {
        iterations: 0,
        final_change: T::infinity(),
        converged: false,
    };
    while report.iterations < max_iter.max(1) {
        let next = map(&current);
        let change = sup_diff(&next, &current);
        current = next;
        report.iterations += 1;
        report.final_change = change;
        if !change.is_finite() {
            break;
        }
        if change <= tol {
            report.converged = true;
            break;
        }
    }
    (current, report)
}

/// Coefficients of the line operator at one line.
#[derive(Clone, Copy)]
struct LineCoeffs<'a, T> {
    f7: &'a [T],
    f8: &'a [T],
    f9: &'a [T],
    d: T,
}

impl<'a, T: Scalar> LineCoeffs<'a, T> {
    fn at(metric: &'a MetricField<T>, n: usize, d: T) -> Self {
        Self {
            f7: metric.f7.row(n),
            f8: metric.f8.row(n),
            f9: metric.f9.row(n),
            d,
        }
    }

    /// `T_n` applied to one set of arrays; `u_next = None` stands for zero.
    fn apply(
        &self,
        u_next: Option<&[T]>,
        u_curr: &[T],
        u_inner: &[T],
        scratch: &mut [T],
        ddiff: &mut [T],
        out: &mut [T],
    ) {
        let m = u_curr.len();
        let third = T::lit(3.0).recip();
        let d = self.d;
        let d2 = d * d;
        // scratch = u_curr - u_inner, out = ∂θθ u_curr
        for j in 0..m {
            scratch[j] = u_curr[j] - u_inner[j];
        }
        d2_theta_into(u_curr, out);
        d_theta_into(scratch, ddiff);
        for j in 0..m {
            let next = u_next.map_or(T::zero(), |v| v[j]);
            out[j] = (next
                + u_curr[j]
                + u_inner[j]
                + self.f7[j] * scratch[j] * d
                + self.f8[j] * ddiff[j] * d
                + self.f9[j] * out[j] * d2)
                * third;
        }
    }
}

/// One application of the line operator `T_n(u_{n+1}, u_n, u_0)`.
///
/// `u_inner_image` is `F_{n-1}(u_curr, u_0)`, or `u_0` itself on the first line.
pub fn line_update<T: Scalar>(
    n: usize,
    u_next: &[T],
    u_curr: &[T],
    u_inner_image: &[T],
    metric: &MetricField<T>,
    d: T,
) -> Result<Vec<T>> {
    let m = metric.angles();
    if n == 0 || n + 1 >= metric.lines() {
        return Err(GmolError::InvalidInput(format!(
            "line index {n} outside the metric's interior lines"
        )));
    }
    if u_next.len() != m || u_curr.len() != m || u_inner_image.len() != m {
        return Err(GmolError::InvalidInput(
            "line update arrays must match the angular grid".into(),
        ));
    }
    let mut scratch = vec![T::zero(); m];
    let mut ddiff = vec![T::zero(); m];
    let mut out = vec![T::zero(); m];
    LineCoeffs::at(metric, n, d).apply(
        Some(u_next),
        u_curr,
        u_inner_image,
        &mut scratch,
        &mut ddiff,
        &mut out,
    );
    if out.iter().any(|v| !v.is_finite()) {
        return Err(GmolError::NonFinite("line update"));
    }
    Ok(out)
}

/// Affine line map `u_n = A u_{n+1} + b`, stored as `M + 1` columns of length
/// `M` (the columns of `A`, then `b`).
struct AffineLineMap<T> {
    m: usize,
    cols: Vec<T>,
}

impl<T: Scalar> AffineLineMap<T> {
    /// `F_0`: the inner Dirichlet data, independent of the next line.
    fn dirichlet(inner: &[T]) -> Self {
        let m = inner.len();
        let mut cols = vec![T::zero(); (m + 1) * m];
        cols[m * m..].copy_from_slice(inner);
        Self { m, cols }
    }

    #[inline]
    fn col(&self, c: usize) -> &[T] {
        &self.cols[c * self.m..(c + 1) * self.m]
    }

    /// `A v` (+ `b` when `affine`) into `out`.
    fn apply_into(&self, v: &[T], affine: bool, out: &mut [T]) {
        if affine {
            out.copy_from_slice(self.col(self.m));
        } else {
            out.fill(T::zero());
        }
        for (k, &vk) in v.iter().enumerate() {
            if vk == T::zero() {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.col(k)) {
                *o += a * vk;
            }
        }
    }

    fn apply(&self, v: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.m];
        self.apply_into(v, true, &mut out);
        out
    }
}

/// Builds `F_n` from `F_{n-1}` by Banach iteration of `T_n` on `[A | b]`.
fn build_line_map<T: Scalar>(
    coeffs: LineCoeffs<'_, T>,
    prev: &AffineLineMap<T>,
    opts: &FixedPointOptions<T>,
) -> (AffineLineMap<T>, FixedPointReport<T>) {
    let m = prev.m;
    // step 1: u_n = u_{n+1}, i.e. A = I, b = 0
    let mut init = vec![T::zero(); (m + 1) * m];
    for k in 0..m {
        init[k * m + k] = T::one();
    }
    let map = |state: &[T]| -> Vec<T> {
        let mut next = vec![T::zero(); state.len()];
        next.par_chunks_mut(m)
            .enumerate()
            .for_each_init(
                || {
                    (
                        vec![T::zero(); m],
                        vec![T::zero(); m],
                        vec![T::zero(); m],
                        vec![T::zero(); m],
                    )
                },
                |(inner, scratch, ddiff, unit), (c, out)| {
                    let curr = &state[c * m..(c + 1) * m];
                    let affine = c == m;
                    prev.apply_into(curr, affine, inner);
                    let u_next = if affine {
                        None
                    } else {
                        unit.fill(T::zero());
                        unit[c] = T::one();
                        Some(&unit[..])
                    };
                    coeffs.apply(u_next, curr, inner, scratch, ddiff, out);
                },
            );
        next
    };
    let (cols, report) = fixed_point_solve(map, init, opts.tol, opts.max_iter);
    (AffineLineMap { m, cols }, report)
}

/// Method-of-lines solution of the transformed Laplace equation with Dirichlet
/// rows `u_0 = u_o` and `u_N = u_f`.
pub fn gmol_sweep<T: Scalar>(
    boundary: &BoundaryData<T>,
    shape: &ShapeCurve<T>,
    intervals: usize,
    opts: &FixedPointOptions<T>,
) -> Result<(LineField<T>, Vec<FixedPointReport<T>>)> {
    if boundary.grid() != shape.grid() {
        return Err(GmolError::InvalidInput(
            "boundary data and shape use different grids".into(),
        ));
    }
    if intervals < 2 {
        return Err(GmolError::InvalidInput(format!(
            "the sweep needs at least 2 line intervals, got {intervals}"
        )));
    }
    let metric = metric_coefficients(shape, &uniform_lines(intervals))?;
    gmol_sweep_with_metric(boundary, &metric, opts)
}

/// [`gmol_sweep`] with caller-supplied operator coefficients.
pub fn gmol_sweep_with_metric<T: Scalar>(
    boundary: &BoundaryData<T>,
    metric: &MetricField<T>,
    opts: &FixedPointOptions<T>,
) -> Result<(LineField<T>, Vec<FixedPointReport<T>>)> {
    let grid = boundary.grid();
    let m = grid.len();
    if metric.angles() != m {
        return Err(GmolError::InvalidInput(
            "metric and boundary data use different grids".into(),
        ));
    }
    let intervals = metric.lines() - 1;
    if intervals < 2 {
        return Err(GmolError::InvalidInput(
            "the sweep needs at least 2 line intervals".into(),
        ));
    }
    let d = T::from_count(intervals).recip();

    let mut maps = Vec::with_capacity(intervals - 1);
    let mut reports = Vec::with_capacity(intervals - 1);
    let dirichlet = AffineLineMap::dirichlet(boundary.inner());
    for n in 1..intervals {
        let prev = maps.last().unwrap_or(&dirichlet);
        let (map, report) = build_line_map(LineCoeffs::at(metric, n, d), prev, opts);
        if !report.converged {
            return Err(GmolError::LineNotConverged {
                line: n,
                iterations: report.iterations,
                change: report.final_change.to_f64_lossy(),
            });
        }
        reports.push(report);
        maps.push(map);
    }

    let mut values = LineArray::filled(intervals + 1, m, T::zero());
    values.row_mut(0).copy_from_slice(boundary.inner());
    values.row_mut(intervals).copy_from_slice(boundary.outer());
    for n in (1..intervals).rev() {
        let u = maps[n - 1].apply(values.row(n + 1));
        values.row_mut(n).copy_from_slice(&u);
    }
    Ok((LineField::new(grid, values)?, reports))
}

/// Basis arrays of the ansatz on one line, in [`AnsatzTerm::ALL`] order.
pub(crate) struct AnsatzBasis<T> {
    pub(crate) rows: Vec<[Vec<T>; 8]>,
}

impl<T: Scalar> AnsatzBasis<T> {
    pub(crate) fn new(boundary: &BoundaryData<T>, metric: &MetricField<T>) -> Self {
        let uf = boundary.outer();
        let u0 = boundary.inner();
        let uf1 = d_theta(uf);
        let u01 = d_theta(u0);
        let uf2 = d2_theta(uf);
        let u02 = d2_theta(u0);
        let intervals = metric.lines() - 1;
        let rows = (1..intervals)
            .map(|n| {
                let f7 = metric.f7.row(n);
                let f8 = metric.f8.row(n);
                let f9 = metric.f9.row(n);
                let prod = |c: &[T], v: &[T]| c.iter().zip(v).map(|(&a, &b)| a * b).collect();
                [
                    uf.to_vec(),
                    u0.to_vec(),
                    prod(f7, uf),
                    prod(f7, u0),
                    prod(f8, &uf1),
                    prod(f8, &u01),
                    prod(f9, &uf2),
                    prod(f9, &u02),
                ]
            })
            .collect();
        Self { rows }
    }

    /// Field with interior rows from `coeffs` and Dirichlet rows from `boundary`.
    pub(crate) fn field(&self, coeffs: &AnsatzCoeffs<T>, boundary: &BoundaryData<T>) -> LineArray<T> {
        let m = boundary.grid().len();
        let intervals = self.rows.len() + 1;
        let mut values = LineArray::filled(intervals + 1, m, T::zero());
        values.row_mut(0).copy_from_slice(boundary.inner());
        values.row_mut(intervals).copy_from_slice(boundary.outer());
        for n in 1..intervals {
            let a = coeffs.line(n);
            let row = values.row_mut(n);
            for (k, basis) in self.rows[n - 1].iter().enumerate() {
                let ak = a[k];
                if ak == T::zero() {
                    continue;
                }
                for (o, &b) in row.iter_mut().zip(basis) {
                    *o += ak * b;
                }
            }
        }
        values
    }
}

/// Evaluates the truncated line ansatz
///
/// ```text
/// u_n = a[1] u_f + a[2] u_0 + a[3] f7 u_f + a[4] f7 u_0
///     + a[5] f8 u_f' + a[6] f8 u_0' + a[9] f9 u_f'' + a[10] f9 u_0''
/// ```
///
/// with `f7..f9` taken at each line's own `t_n`.
pub fn ansatz_field<T: Scalar>(
    coeffs: &AnsatzCoeffs<T>,
    boundary: &BoundaryData<T>,
    shape: &ShapeCurve<T>,
    intervals: usize,
) -> Result<LineField<T>> {
    if boundary.grid() != shape.grid() {
        return Err(GmolError::InvalidInput(
            "boundary data and shape use different grids".into(),
        ));
    }
    if intervals < 2 {
        return Err(GmolError::InvalidInput(format!(
            "the ansatz needs at least 2 line intervals, got {intervals}"
        )));
    }
    let metric = metric_coefficients(shape, &uniform_lines(intervals))?;
    ansatz_field_with_metric(coeffs, boundary, &metric)
}

pub fn ansatz_field_with_metric<T: Scalar>(
    coeffs: &AnsatzCoeffs<T>,
    boundary: &BoundaryData<T>,
    metric: &MetricField<T>,
) -> Result<LineField<T>> {
    let intervals = metric.lines() - 1;
    if coeffs.lines() != intervals - 1 {
        return Err(GmolError::InvalidInput(format!(
            "coefficients cover {} lines, the field has {} interior lines",
            coeffs.lines(),
            intervals - 1
        )));
    }
    let basis = AnsatzBasis::new(boundary, metric);
    LineField::new(boundary.grid(), basis.field(coeffs, boundary))
}

/// Per-line least-squares fit of the ansatz to an existing field.
pub fn fit_ansatz<T: Scalar>(
    field: &LineField<T>,
    boundary: &BoundaryData<T>,
    metric: &MetricField<T>,
) -> Result<AnsatzCoeffs<T>> {
    let intervals = field.intervals();
    if metric.lines() != intervals + 1 || metric.angles() != field.grid().len() {
        return Err(GmolError::InvalidInput(
            "field and metric sizes differ".into(),
        ));
    }
    let m = field.grid().len();
    let basis = AnsatzBasis::new(boundary, metric);
    let mut coeffs = AnsatzCoeffs::zeros(intervals);
    for n in 1..intervals {
        let mut design = LineArray::filled(m, 8, T::zero());
        for (k, b) in basis.rows[n - 1].iter().enumerate() {
            for j in 0..m {
                design[(j, k)] = b[j];
            }
        }
        let a = least_squares(&design, field.row(n));
        for (term, v) in AnsatzTerm::ALL.iter().zip(a) {
            coeffs.set(n, *term, v);
        }
    }
    Ok(coeffs)
}
