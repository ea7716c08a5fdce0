//! Independent references: closed-form harmonics on concentric annuli and a
//! relaxation solver for the full second-order discretization of the
//! transformed equation.

use crate::error::{GmolError, Result};
use crate::geometry::{metric_coefficients, uniform_lines, BoundaryData, ShapeCurve};
use crate::lines::LineArray;
use crate::scalar::Scalar;
use crate::solver::LineField;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trig {
    Cos,
    Sin,
}

/// Separable harmonic in polar coordinates:
/// `a + b ln r` for `k = 0`, `(a r^k + b r^-k) trig(kθ)` otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicMode<T> {
    pub k: u32,
    pub a: T,
    pub b: T,
    pub phase: Trig,
}

impl<T: Scalar> HarmonicMode<T> {
    pub fn radial(a: T, b: T) -> Self {
        Self {
            k: 0,
            a,
            b,
            phase: Trig::Cos,
        }
    }

    fn trig(&self, theta: T) -> T {
        let arg = T::from_count(self.k as usize) * theta;
        match self.phase {
            Trig::Cos => arg.cos(),
            Trig::Sin => arg.sin(),
        }
    }

    pub fn value(&self, r: T, theta: T) -> T {
        if self.k == 0 {
            return self.a + self.b * r.ln();
        }
        let k = self.k as i32;
        (self.a * r.powi(k) + self.b * r.powi(-k)) * self.trig(theta)
    }

    /// `∂u/∂r`.
    pub fn radial_derivative(&self, r: T, theta: T) -> T {
        if self.k == 0 {
            return self.b / r;
        }
        let k = self.k as i32;
        T::from_count(self.k as usize)
            * (self.a * r.powi(k - 1) - self.b * r.powi(-k - 1))
            * self.trig(theta)
    }
}

/// Samples `mode` on the `(t, x)` grid of a concentric annulus and returns the
/// field with the exact outward flux at `r = R`.
pub fn analytic_annulus<T: Scalar>(
    mode: &HarmonicMode<T>,
    shape: &ShapeCurve<T>,
    intervals: usize,
) -> Result<(LineField<T>, Vec<T>)> {
    let r0 = shape.radii()[0];
    if !shape.is_circle(T::lit(1e-12) * r0) {
        return Err(GmolError::InvalidInput(
            "analytic annulus solutions need a circular inner boundary".into(),
        ));
    }
    if intervals < 1 {
        return Err(GmolError::InvalidInput("at least one line interval is required".into()));
    }
    let g = shape.grid();
    let m = g.len();
    let big_r = shape.outer_radius();
    let mut values = LineArray::filled(intervals + 1, m, T::zero());
    for n in 0..=intervals {
        let t = T::from_count(n) / T::from_count(intervals);
        let rho = t * (big_r - r0) + r0;
        for j in 0..m {
            values[(n, j)] = mode.value(rho, g.theta(j));
        }
    }
    let flux = (0..m)
        .map(|j| mode.radial_derivative(big_r, g.theta(j)))
        .collect();
    Ok((LineField::new(g, values)?, flux))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxationOptions<T> {
    /// Over-relaxation factor in `(0, 2)`.
    pub omega: T,
    /// Bound on the diagonally scaled residual.
    pub tol: T,
    pub max_sweeps: usize,
}

impl<T: Scalar> Default for RelaxationOptions<T> {
    fn default() -> Self {
        Self {
            omega: T::lit(1.8),
            tol: T::lit(1e-10).max(T::epsilon() * T::lit(100.0)),
            max_sweeps: 200_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxationReport<T> {
    pub sweeps: usize,
    /// Sup-norm of the diagonally scaled residual at exit.
    pub residual: T,
}

/// Solves `u_tt + f7 u_t + f8 u_tθ + f9 u_θθ = 0` with central differences in
/// both directions (four-point cross stencil for the mixed term) by successive
/// over-relaxation in lexicographic order. Rows 0 and `N` hold the Dirichlet
/// data.
pub fn dense_reference_solve<T: Scalar>(
    boundary: &BoundaryData<T>,
    shape: &ShapeCurve<T>,
    intervals: usize,
    opts: &RelaxationOptions<T>,
) -> Result<(LineField<T>, RelaxationReport<T>)> {
    if boundary.grid() != shape.grid() {
        return Err(GmolError::InvalidInput(
            "boundary data and shape use different grids".into(),
        ));
    }
    if intervals < 2 {
        return Err(GmolError::InvalidInput(
            "the reference solver needs at least 2 line intervals".into(),
        ));
    }
    if !(opts.omega > T::zero() && opts.omega < T::lit(2.0)) {
        return Err(GmolError::InvalidInput(format!(
            "relaxation factor must lie in (0, 2), got {}",
            opts.omega
        )));
    }
    let metric = metric_coefficients(shape, &uniform_lines(intervals))?;
    let g = shape.grid();
    let m = g.len();
    let n_int = T::from_count(intervals);
    let inv_d2 = n_int * n_int;
    let half_inv_d = n_int / T::lit(2.0);
    let h = g.theta_step::<T>();
    let inv_h2 = (h * h).recip();
    let cross = n_int / (T::lit(4.0) * h);
    let two = T::lit(2.0);

    // stencil weights per node: [north, south, east, west, NE, NW, SE, SW, centre]
    // north = n + 1, east = j + 1
    let mut stencil = Vec::with_capacity((intervals - 1) * m);
    for n in 1..intervals {
        for j in 0..m {
            let f7 = metric.f7[(n, j)];
            let f8 = metric.f8[(n, j)] * cross;
            let f9 = metric.f9[(n, j)] * inv_h2;
            stencil.push([
                inv_d2 + f7 * half_inv_d,
                inv_d2 - f7 * half_inv_d,
                f9,
                f9,
                f8,
                -f8,
                -f8,
                f8,
                -two * inv_d2 - two * f9,
            ]);
        }
    }

    let mut u = LineArray::filled(intervals + 1, m, T::zero());
    for n in 0..=intervals {
        let t = T::from_count(n) / n_int;
        for j in 0..m {
            u[(n, j)] = (T::one() - t) * boundary.inner()[j] + t * boundary.outer()[j];
        }
    }

    let mut sweeps = 0;
    let mut residual = T::infinity();
    while sweeps < opts.max_sweeps {
        let mut max_corr = T::zero();
        for n in 1..intervals {
            for j in 0..m {
                let e = (j + 1) % m;
                let wst = (j + m - 1) % m;
                let s = &stencil[(n - 1) * m + j];
                let off = s[0] * u[(n + 1, j)]
                    + s[1] * u[(n - 1, j)]
                    + s[2] * u[(n, e)]
                    + s[3] * u[(n, wst)]
                    + s[4] * u[(n + 1, e)]
                    + s[5] * u[(n + 1, wst)]
                    + s[6] * u[(n - 1, e)]
                    + s[7] * u[(n - 1, wst)];
                let gs = -off / s[8];
                let corr = gs - u[(n, j)];
                max_corr = max_corr.max(corr.abs());
                u[(n, j)] += opts.omega * corr;
            }
        }
        sweeps += 1;
        if !max_corr.is_finite() {
            break;
        }
        if max_corr <= opts.tol {
            residual = scaled_residual(&u, &stencil, m);
            if residual <= opts.tol {
                break;
            }
        }
    }
    if !(residual <= opts.tol) {
        residual = scaled_residual(&u, &stencil, m);
        if !(residual <= opts.tol) {
            return Err(GmolError::RelaxationNotConverged {
                iterations: sweeps,
                residual: residual.to_f64_lossy(),
            });
        }
    }
    Ok((LineField::new(g, u)?, RelaxationReport { sweeps, residual }))
}

fn scaled_residual<T: Scalar>(u: &LineArray<T>, stencil: &[[T; 9]], m: usize) -> T {
    let intervals = u.rows() - 1;
    let mut worst = T::zero();
    for n in 1..intervals {
        for j in 0..m {
            let e = (j + 1) % m;
            let wst = (j + m - 1) % m;
            let s = &stencil[(n - 1) * m + j];
            let r = s[0] * u[(n + 1, j)]
                + s[1] * u[(n - 1, j)]
                + s[2] * u[(n, e)]
                + s[3] * u[(n, wst)]
                + s[4] * u[(n + 1, e)]
                + s[5] * u[(n + 1, wst)]
                + s[6] * u[(n - 1, e)]
                + s[7] * u[(n - 1, wst)]
                + s[8] * u[(n, j)];
            let r = (r / s[8]).abs();
            if r.is_nan() {
                return T::nan();
            }
            worst = worst.max(r);
        }
    }
    worst
}
