//! Annular domain, the boundary-fitted radial transform and the metric
//! coefficients of the transformed Laplace operator.
//!
//! The angular coordinate is the normalized angle `x ∈ [0, 1)` sampled at
//! `x_j = j / M`; the physical angle is `θ = 2πx`. Every angular derivative
//! exposed here is a derivative with respect to `θ`.
//!
//! With `t = (r - r(θ)) / (R - r(θ))` the Laplacian in polar coordinates
//! becomes, after dividing by `f0`,
//!
//! ```text
//! u_tt + f7 u_t + f8 u_tθ + f9 u_θθ = 0,    0 ≤ t ≤ 1,
//! ```
//!
//! with
//!
//! ```text
//! f1 = -r'/(R - r)          f2 = r'/(R - r)          f3 = 1/(R - r)^2
//! f4 = (f1 + t f2)^2        f5 = f1' + t f2' + f2 (f1 + t f2)
//! f6 = 2 (f1 + t f2)        ρ  = t (R - r) + r       (physical radius)
//! f0 = f3 + f4/ρ^2
//! f7 = (1/(ρ (R - r)) + f5/ρ^2) / f0
//! f8 = (f6/ρ^2) / f0
//! f9 = (1/ρ^2) / f0
//! ```

use crate::error::{GmolError, Result};
use crate::lines::{rotate_periodic, LineArray};
use crate::scalar::Scalar;

/// Uniform periodic grid over the normalized angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AngularGrid {
    len: usize,
}

impl AngularGrid {
    pub const MIN_NODES: usize = 8;

    /// Grid with `len` nodes; `len` must be even and at least 8.
    pub fn new(len: usize) -> Result<Self> {
        if len < Self::MIN_NODES {
            return Err(GmolError::InvalidGrid(format!(
                "angular node count {len} is below {}",
                Self::MIN_NODES
            )));
        }
        if !len.is_multiple_of(2) {
            return Err(GmolError::InvalidGrid(format!(
                "angular node count {len} must be even"
            )));
        }
        Ok(Self { len })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Normalized angle `x_j = j / M`.
    #[inline]
    pub fn x<T: Scalar>(&self, j: usize) -> T {
        T::from_count(j) / T::from_count(self.len)
    }

    /// Physical angle `θ_j = 2π j / M`.
    #[inline]
    pub fn theta<T: Scalar>(&self, j: usize) -> T {
        T::TAU() * self.x::<T>(j)
    }

    /// Spacing in `θ`.
    #[inline]
    pub fn theta_step<T: Scalar>(&self) -> T {
        T::TAU() / T::from_count(self.len)
    }

    /// Samples `f(x)` at every node.
    pub fn sample<T: Scalar>(&self, f: impl Fn(T) -> T) -> Vec<T> {
        (0..self.len).map(|j| f(self.x(j))).collect()
    }
}

/// Order of an angular derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeOrder {
    First,
    Second,
}

/// Second-order central derivative with respect to `θ` on the periodic grid.
///
/// `samples[j]` is the value at `x_j = j / M`; `∂/∂θ = (1/2π) ∂/∂x`.
pub fn periodic_derivative<T: Scalar>(samples: &[T], order: DerivativeOrder) -> Result<Vec<T>> {
    if samples.len() < 4 {
        return Err(GmolError::InvalidInput(format!(
            "periodic derivative needs at least 4 samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(GmolError::NonFinite("derivative samples"));
    }
    let mut out = vec![T::zero(); samples.len()];
    match order {
        DerivativeOrder::First => d_theta_into(samples, &mut out),
        DerivativeOrder::Second => d2_theta_into(samples, &mut out),
    }
    Ok(out)
}

/// Unchecked first `θ`-derivative into `out`.
#[inline]
pub(crate) fn d_theta_into<T: Scalar>(u: &[T], out: &mut [T]) {
    let m = u.len();
    let scale = T::from_count(m) / (T::lit(2.0) * T::TAU());
    for j in 0..m {
        let next = u[(j + 1) % m];
        let prev = u[(j + m - 1) % m];
        out[j] = (next - prev) * scale;
    }
}

/// Unchecked second `θ`-derivative into `out`.
#[inline]
pub(crate) fn d2_theta_into<T: Scalar>(u: &[T], out: &mut [T]) {
    let m = u.len();
    let h = T::TAU() / T::from_count(m);
    let scale = (h * h).recip();
    for j in 0..m {
        let next = u[(j + 1) % m];
        let prev = u[(j + m - 1) % m];
        out[j] = (next - T::lit(2.0) * u[j] + prev) * scale;
    }
}

pub(crate) fn d_theta<T: Scalar>(u: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); u.len()];
    d_theta_into(u, &mut out);
    out
}

pub(crate) fn d2_theta<T: Scalar>(u: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); u.len()];
    d2_theta_into(u, &mut out);
    out
}

/// Internal boundary `r(θ)` sampled on the angular grid, together with the
/// fixed external radius `R`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeCurve<T> {
    grid: AngularGrid,
    radii: Vec<T>,
    outer_radius: T,
    margin: T,
}

impl<T: Scalar> ShapeCurve<T> {
    /// Fraction of `R` used as the default minimum gap `R - r`.
    pub const DEFAULT_MARGIN_FRACTION: f64 = 0.02;

    pub fn new(grid: AngularGrid, radii: Vec<T>, outer_radius: T, margin: T) -> Result<Self> {
        if radii.len() != grid.len() {
            return Err(GmolError::InvalidInput(format!(
                "shape has {} samples for a grid of {}",
                radii.len(),
                grid.len()
            )));
        }
        if !outer_radius.is_finite() || outer_radius <= T::zero() {
            return Err(GmolError::InvalidInput(format!(
                "outer radius must be positive, got {outer_radius}"
            )));
        }
        if !margin.is_finite() || margin <= T::zero() || margin >= outer_radius {
            return Err(GmolError::InvalidInput(format!(
                "margin must lie in (0, R), got {margin}"
            )));
        }
        for (j, &r) in radii.iter().enumerate() {
            if !r.is_finite() {
                return Err(GmolError::NonFinite("shape radii"));
            }
            if r <= T::zero() {
                return Err(GmolError::InvalidInput(format!(
                    "shape radius at node {j} is not positive: {r}"
                )));
            }
            if outer_radius - r < margin {
                return Err(GmolError::DegenerateTransform {
                    node: j,
                    gap: (outer_radius - r).to_f64_lossy(),
                    margin: margin.to_f64_lossy(),
                });
            }
        }
        Ok(Self {
            grid,
            radii,
            outer_radius,
            margin,
        })
    }

    /// Shape with the default margin `0.02 R`.
    pub fn with_default_margin(grid: AngularGrid, radii: Vec<T>, outer_radius: T) -> Result<Self> {
        let margin = T::lit(Self::DEFAULT_MARGIN_FRACTION) * outer_radius;
        Self::new(grid, radii, outer_radius, margin)
    }

    pub fn circle(grid: AngularGrid, radius: T, outer_radius: T) -> Result<Self> {
        Self::with_default_margin(grid, vec![radius; grid.len()], outer_radius)
    }

    /// Shape from `r(x)` evaluated at the grid nodes.
    pub fn from_fn(grid: AngularGrid, outer_radius: T, f: impl Fn(T) -> T) -> Result<Self> {
        Self::with_default_margin(grid, grid.sample(f), outer_radius)
    }

    #[inline]
    pub fn grid(&self) -> AngularGrid {
        self.grid
    }

    #[inline]
    pub fn radii(&self) -> &[T] {
        &self.radii
    }

    #[inline]
    pub fn outer_radius(&self) -> T {
        self.outer_radius
    }

    #[inline]
    pub fn margin(&self) -> T {
        self.margin
    }

    /// Largest admissible internal radius, `R - margin`.
    #[inline]
    pub fn max_radius(&self) -> T {
        self.outer_radius - self.margin
    }

    /// Same curve with a replaced set of radii, re-validated.
    pub fn with_radii(&self, radii: Vec<T>) -> Result<Self> {
        Self::new(self.grid, radii, self.outer_radius, self.margin)
    }

    /// Cyclic rotation by `shift` nodes.
    pub fn rotated(&self, shift: usize) -> Self {
        Self {
            radii: rotate_periodic(&self.radii, shift),
            ..self.clone()
        }
    }

    /// True when every sample equals the first one within `tol`.
    pub fn is_circle(&self, tol: T) -> bool {
        let r0 = self.radii[0];
        self.radii.iter().all(|&r| (r - r0).abs() <= tol)
    }
}

/// Prescribed boundary samples: inner Dirichlet `u_o`, outer Dirichlet `u_f`
/// and the outer Neumann target `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData<T> {
    grid: AngularGrid,
    inner: Vec<T>,
    outer: Vec<T>,
    flux: Vec<T>,
}

impl<T: Scalar> BoundaryData<T> {
    pub fn new(grid: AngularGrid, inner: Vec<T>, outer: Vec<T>, flux: Vec<T>) -> Result<Self> {
        for (name, v) in [("inner", &inner), ("outer", &outer), ("flux", &flux)] {
            if v.len() != grid.len() {
                return Err(GmolError::InvalidInput(format!(
                    "{name} boundary data has {} samples for a grid of {}",
                    v.len(),
                    grid.len()
                )));
            }
        }
        if inner
            .iter()
            .chain(&outer)
            .chain(&flux)
            .any(|v| !v.is_finite())
        {
            return Err(GmolError::NonFinite("boundary data"));
        }
        Ok(Self {
            grid,
            inner,
            outer,
            flux,
        })
    }

    /// Boundary data from three functions of the normalized angle `x`.
    pub fn from_fns(
        grid: AngularGrid,
        inner: impl Fn(T) -> T,
        outer: impl Fn(T) -> T,
        flux: impl Fn(T) -> T,
    ) -> Result<Self> {
        Self::new(
            grid,
            grid.sample(inner),
            grid.sample(outer),
            grid.sample(flux),
        )
    }

    #[inline]
    pub fn grid(&self) -> AngularGrid {
        self.grid
    }

    /// Inner Dirichlet samples `u_o`.
    #[inline]
    pub fn inner(&self) -> &[T] {
        &self.inner
    }

    /// Outer Dirichlet samples `u_f`.
    #[inline]
    pub fn outer(&self) -> &[T] {
        &self.outer
    }

    /// Outer Neumann target `w`.
    #[inline]
    pub fn flux(&self) -> &[T] {
        &self.flux
    }

    pub fn with_flux(&self, flux: Vec<T>) -> Result<Self> {
        Self::new(self.grid, self.inner.clone(), self.outer.clone(), flux)
    }

    pub fn rotated(&self, shift: usize) -> Self {
        Self {
            grid: self.grid,
            inner: rotate_periodic(&self.inner, shift),
            outer: rotate_periodic(&self.outer, shift),
            flux: rotate_periodic(&self.flux, shift),
        }
    }
}

/// Coefficients of the transformed operator at every `(t_n, x_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricField<T> {
    pub t: Vec<T>,
    pub f1: Vec<T>,
    pub f2: Vec<T>,
    pub f3: Vec<T>,
    /// `θ`-derivatives of `f1` and `f2`.
    pub f1_prime: Vec<T>,
    pub f2_prime: Vec<T>,
    pub f0: LineArray<T>,
    pub f4: LineArray<T>,
    pub f5: LineArray<T>,
    pub f6: LineArray<T>,
    pub f7_tilde: LineArray<T>,
    pub f8_tilde: LineArray<T>,
    pub f9_tilde: LineArray<T>,
    pub f7: LineArray<T>,
    pub f8: LineArray<T>,
    pub f9: LineArray<T>,
    /// Physical radius `ρ(t_n, x_j) = t_n (R - r_j) + r_j`.
    pub radius: LineArray<T>,
}

impl<T: Scalar> MetricField<T> {
    #[inline]
    pub fn lines(&self) -> usize {
        self.t.len()
    }

    #[inline]
    pub fn angles(&self) -> usize {
        self.f1.len()
    }
}

/// Uniform line positions `t_n = n / N`, `n = 0..=N`.
pub fn uniform_lines<T: Scalar>(intervals: usize) -> Vec<T> {
    (0..=intervals)
        .map(|n| T::from_count(n) / T::from_count(intervals))
        .collect()
}

/// Evaluates every coefficient of the transformed Laplace operator.
///
/// `t_values` must be sorted with `t_0 = 0` and `t_N = 1`.
pub fn metric_coefficients<T: Scalar>(shape: &ShapeCurve<T>, t_values: &[T]) -> Result<MetricField<T>> {
    if t_values.len() < 2 {
        return Err(GmolError::InvalidInput(
            "at least two line positions are required".into(),
        ));
    }
    if t_values[0] != T::zero() || t_values[t_values.len() - 1] != T::one() {
        return Err(GmolError::InvalidInput(
            "line positions must start at 0 and end at 1".into(),
        ));
    }
    if t_values.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(GmolError::InvalidInput(
            "line positions must be strictly increasing".into(),
        ));
    }

    let m = shape.grid().len();
    let big_r = shape.outer_radius();
    let r = shape.radii();
    for (j, &rj) in r.iter().enumerate() {
        if big_r - rj < shape.margin() {
            return Err(GmolError::DegenerateTransform {
                node: j,
                gap: (big_r - rj).to_f64_lossy(),
                margin: shape.margin().to_f64_lossy(),
            });
        }
    }

    let r1 = d_theta(r);
    let r2 = d2_theta(r);
    let mut f1 = Vec::with_capacity(m);
    let mut f2 = Vec::with_capacity(m);
    let mut f3 = Vec::with_capacity(m);
    let mut f1_prime = Vec::with_capacity(m);
    let mut f2_prime = Vec::with_capacity(m);
    for j in 0..m {
        let gap = big_r - r[j];
        f1.push(-r1[j] / gap);
        f2.push(r1[j] / gap);
        f3.push((gap * gap).recip());
        // d/dθ [r'/(R - r)] = (r''(R - r) + r'^2) / (R - r)^2
        let dp = (r2[j] * gap + r1[j] * r1[j]) / (gap * gap);
        f2_prime.push(dp);
        f1_prime.push(-dp);
    }

    let rows = t_values.len();
    let zero = LineArray::filled(rows, m, T::zero());
    let mut f0 = zero.clone();
    let mut f4 = zero.clone();
    let mut f5 = zero.clone();
    let mut f6 = zero.clone();
    let mut f7_tilde = zero.clone();
    let mut f8_tilde = zero.clone();
    let mut f9_tilde = zero.clone();
    let mut f7 = zero.clone();
    let mut f8 = zero.clone();
    let mut f9 = zero.clone();
    let mut radius = zero;
    let two = T::lit(2.0);
    for (n, &t) in t_values.iter().enumerate() {
        for j in 0..m {
            let gap = big_r - r[j];
            let rho = t * gap + r[j];
            if !(rho > T::zero()) {
                return Err(GmolError::InvalidInput(format!(
                    "physical radius is not positive at line {n}, node {j}"
                )));
            }
            let s = f1[j] + t * f2[j];
            let c4 = s * s;
            let c5 = f1_prime[j] + t * f2_prime[j] + f2[j] * s;
            let c6 = two * s;
            let inv_rho2 = (rho * rho).recip();
            let c0 = f3[j] + c4 * inv_rho2;
            let t7 = (rho * gap).recip() + c5 * inv_rho2;
            let t8 = c6 * inv_rho2;
            let t9 = inv_rho2;
            f0[(n, j)] = c0;
            f4[(n, j)] = c4;
            f5[(n, j)] = c5;
            f6[(n, j)] = c6;
            f7_tilde[(n, j)] = t7;
            f8_tilde[(n, j)] = t8;
            f9_tilde[(n, j)] = t9;
            f7[(n, j)] = t7 / c0;
            f8[(n, j)] = t8 / c0;
            f9[(n, j)] = t9 / c0;
            radius[(n, j)] = rho;
        }
    }

    Ok(MetricField {
        t: t_values.to_vec(),
        f1,
        f2,
        f3,
        f1_prime,
        f2_prime,
        f0,
        f4,
        f5,
        f6,
        f7_tilde,
        f8_tilde,
        f9_tilde,
        f7,
        f8,
        f9,
        radius,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid(m: usize) -> AngularGrid {
        AngularGrid::new(m).unwrap()
    }

    #[test]
    fn grid_rejects_small_or_odd() {
        assert!(AngularGrid::new(6).is_err());
        assert!(AngularGrid::new(9).is_err());
        assert!(AngularGrid::new(8).is_ok());
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        let c = vec![3.25_f64; 16];
        for order in [DerivativeOrder::First, DerivativeOrder::Second] {
            let d = periodic_derivative(&c, order).unwrap();
            assert!(d.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn derivative_of_sine_matches_analytic() {
        let g = grid(64);
        let s: Vec<f64> = g.sample(|x: f64| (std::f64::consts::TAU * x).sin());
        let d1 = periodic_derivative(&s, DerivativeOrder::First).unwrap();
        let d2 = periodic_derivative(&s, DerivativeOrder::Second).unwrap();
        for j in 0..64 {
            let th: f64 = g.theta(j);
            assert!((d1[j] - th.cos()).abs() <= 2e-3);
            assert!((d2[j] + th.sin()).abs() <= 2e-3);
        }
    }

    #[test]
    fn derivative_rejects_short_or_nonfinite() {
        assert!(periodic_derivative(&[1.0_f64, 2.0, 3.0], DerivativeOrder::First).is_err());
        let bad = [1.0, f64::NAN, 0.0, 1.0];
        assert!(matches!(
            periodic_derivative(&bad, DerivativeOrder::Second),
            Err(GmolError::NonFinite(_))
        ));
    }

    #[test]
    fn shape_validation() {
        let g = grid(8);
        assert!(ShapeCurve::circle(g, 1.0_f64, 2.0).is_ok());
        assert!(matches!(
            ShapeCurve::circle(g, 1.99_f64, 2.0),
            Err(GmolError::DegenerateTransform { .. })
        ));
        assert!(ShapeCurve::circle(g, -0.5_f64, 2.0).is_err());
        assert!(ShapeCurve::new(g, vec![1.0_f64; 7], 2.0, 0.04).is_err());
        let mut r = vec![1.0_f64; 8];
        r[3] = f64::INFINITY;
        assert!(ShapeCurve::new(g, r, 2.0, 0.04).is_err());
    }

    #[test]
    fn boundary_validation() {
        let g = grid(8);
        assert!(BoundaryData::new(g, vec![0.0_f64; 8], vec![1.0; 8], vec![0.0; 7]).is_err());
        assert!(BoundaryData::new(g, vec![f64::NAN; 8], vec![1.0; 8], vec![0.0; 8]).is_err());
    }

    #[test]
    fn constant_circle_trivial_coefficients() {
        let shape = ShapeCurve::circle(grid(16), 1.0_f64, 2.0).unwrap();
        let t = uniform_lines(4);
        let mf = metric_coefficients(&shape, &t).unwrap();
        for j in 0..16 {
            assert_eq!(mf.f1[j], 0.0);
            assert_eq!(mf.f2[j], 0.0);
            assert_eq!(mf.f3[j], 1.0);
        }
        for arr in [&mf.f4, &mf.f5, &mf.f6, &mf.f8] {
            assert!(arr.as_slice().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn constant_circle_mid_line_values() {
        let shape = ShapeCurve::circle(grid(16), 1.0_f64, 2.0).unwrap();
        let mf = metric_coefficients(&shape, &[0.0, 0.5, 1.0]).unwrap();
        for j in 0..16 {
            assert_abs_diff_eq!(mf.radius[(1, j)], 1.5, epsilon = 1e-15);
            assert_abs_diff_eq!(mf.f0[(1, j)], 1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(mf.f7[(1, j)], 1.0 / 1.5, epsilon = 1e-15);
            assert_abs_diff_eq!(mf.f9[(1, j)], 1.0 / 2.25, epsilon = 1e-15);
        }
    }

    #[test]
    fn sinusoidal_shape_slope_at_origin() {
        let shape =
            ShapeCurve::from_fn(grid(64), 2.0_f64, |x| 1.0 + 0.1 * (std::f64::consts::TAU * x).sin())
                .unwrap();
        let mf = metric_coefficients(&shape, &uniform_lines(4)).unwrap();
        assert_abs_diff_eq!(mf.f1[0], -0.1, epsilon = 1e-3);
        assert_abs_diff_eq!(mf.f2[0], 0.1, epsilon = 1e-3);
    }

    #[test]
    fn metric_rejects_bad_line_positions() {
        let shape = ShapeCurve::circle(grid(8), 1.0_f64, 2.0).unwrap();
        assert!(metric_coefficients(&shape, &[0.0, 0.5]).is_err());
        assert!(metric_coefficients(&shape, &[0.0, 0.6, 0.4, 1.0]).is_err());
        assert!(metric_coefficients(&shape, &[0.0]).is_err());
    }

    #[test]
    fn single_precision_agrees_with_double() {
        let s64 = ShapeCurve::from_fn(grid(32), 3.0_f64, |x| 1.0 + 0.2 * (std::f64::consts::TAU * x).cos())
            .unwrap();
        let s32 = ShapeCurve::from_fn(grid(32), 3.0_f32, |x| 1.0 + 0.2 * (std::f32::consts::TAU * x).cos())
            .unwrap();
        let m64 = metric_coefficients(&s64, &uniform_lines(8)).unwrap();
        let m32 = metric_coefficients(&s32, &uniform_lines(8)).unwrap();
        for (a, b) in m64.f7.as_slice().iter().zip(m32.f7.as_slice()) {
            assert!((a - *b as f64).abs() < 1e-4);
        }
    }
}
