//! Projected gradient descent with Armijo backtracking and central
//! finite-difference gradients, and the inverse shape driver built on it.

use rayon::prelude::*;

use crate::error::{GmolError, Result};
use crate::geometry::{metric_coefficients, uniform_lines, BoundaryData, MetricField, ShapeCurve};
use crate::linalg::least_squares;
use crate::lines::LineArray;
use crate::residuals::{cost_with_metric, weighted_residuals, CostBreakdown, NormMode};
use crate::scalar::{sup_norm, Scalar};
use crate::solver::{fit_ansatz, gmol_sweep, AnsatzBasis, AnsatzCoeffs, FixedPointOptions};

/// Objective value substituted for failed evaluations (degenerate trial
/// shapes, non-finite results), so that line searches retreat instead of
/// aborting.
pub const FAILED_OBJECTIVE: f64 = 1e30;

#[inline]
fn sanitize<T: Scalar>(v: T) -> T {
    if v.is_finite() {
        v
    } else {
        T::lit(FAILED_OBJECTIVE)
    }
}

/// Central-difference gradient with steps `δ_i = max(rel_step |p_i|, 1e-8)`.
pub fn finite_difference_gradient<T, F>(objective: &F, p: &[T], rel_step: T) -> Vec<T>
where
    T: Scalar,
    F: Fn(&[T]) -> T + Sync,
{
    finite_difference_gradient_with_floor(objective, p, rel_step, T::lit(1e-8))
}

pub fn finite_difference_gradient_with_floor<T, F>(objective: &F, p: &[T], rel_step: T, floor: T) -> Vec<T>
where
    T: Scalar,
    F: Fn(&[T]) -> T + Sync,
{
    (0..p.len())
        .into_par_iter()
        .map_init(
            || p.to_vec(),
            |q, i| {
                let delta = (rel_step * p[i].abs()).max(floor);
                q[i] = p[i] + delta;
                let up = sanitize(objective(q));
                q[i] = p[i] - delta;
                let down = sanitize(objective(q));
                q[i] = p[i];
                (up - down) / (T::lit(2.0) * delta)
            },
        )
        .collect()
}

/// Box constraints; infinite entries leave a side unconstrained.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds<T> {
    pub lower: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Scalar> Bounds<T> {
    pub fn unbounded(len: usize) -> Self {
        Self {
            lower: vec![T::neg_infinity(); len],
            upper: vec![T::infinity(); len],
        }
    }

    pub fn project(&self, p: &mut [T]) {
        for ((v, &lo), &hi) in p.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.max(lo).min(hi);
        }
    }

    fn len(&self) -> usize {
        self.lower.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizeOptions<T> {
    pub max_iters: usize,
    /// Bound on the sup-norm of the projected gradient step `P(p - g) - p`.
    pub grad_tol: T,
    pub armijo_c: T,
    pub backtrack: T,
    /// First trial step, scaled by `1 / max(1, |g|∞)`. Later iterations start
    /// from twice the previously accepted step.
    pub initial_step: T,
    /// Consecutive rejected trial steps that end the run as stalled.
    pub max_rejections: usize,
    pub rel_step: T,
}

impl<T: Scalar> Default for MinimizeOptions<T> {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            grad_tol: T::lit(1e-8),
            armijo_c: T::lit(1e-4),
            backtrack: T::lit(0.5),
            initial_step: T::one(),
            max_rejections: 10,
            rel_step: T::lit(1e-6),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Tolerance,
    MaxIters,
    Stalled,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Tolerance => "tolerance",
            Termination::MaxIters => "max-iters",
            Termination::Stalled => "stalled",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeResult<T> {
    pub params: Vec<T>,
    pub value: T,
    /// Objective after the start and after every accepted step.
    pub history: Vec<T>,
    pub iterations: usize,
    pub termination: Termination,
}

enum StepOutcome {
    Accepted,
    Converged,
    Stalled,
}

/// Periodic Sobolev metric on the leading `m` parameters (the shape block):
/// Fourier mode `k` of the gradient is scaled by `1 / (1 + (ℓ σ_k)²)` with
/// `σ_k = (m sin(πk/m) / π)²`, the normalized eigenvalue of the periodic
/// second difference. Remaining parameters are left unscaled.
#[derive(Debug, Clone, PartialEq)]
pub struct SobolevMetric<T> {
    kernel: Vec<T>,
    inverse_kernel: Vec<T>,
}

impl<T: Scalar> SobolevMetric<T> {
    pub fn new(m: usize, length: T) -> Self {
        let weights: Vec<T> = (0..m)
            .map(|k| {
                let s = T::from_count(m) * (T::PI() * T::from_count(k) / T::from_count(m)).sin() / T::PI();
                let sigma = s * s;
                T::one() + length * length * sigma * sigma
            })
            .collect();
        let circulant = |f: &dyn Fn(T) -> T| -> Vec<T> {
            (0..m)
                .map(|d| {
                    let s: T = weights
                        .iter()
                        .enumerate()
                        .map(|(k, &w)| {
                            f(w) * (T::TAU() * T::from_count(k * d % m) / T::from_count(m)).cos()
                        })
                        .sum();
                    s / T::from_count(m)
                })
                .collect()
        };
        Self {
            kernel: circulant(&|w| w.recip()),
            inverse_kernel: circulant(&|w| w),
        }
    }

    pub fn len(&self) -> usize {
        self.kernel.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernel.is_empty()
    }

    fn convolve(kernel: &[T], v: &[T]) -> Vec<T> {
        let m = kernel.len();
        let mut out = v.to_vec();
        for (i, o) in out.iter_mut().take(m).enumerate() {
            *o = (0..m).map(|j| kernel[(i + m - j) % m] * v[j]).sum();
        }
        out
    }

    /// Preconditioned gradient.
    pub fn apply(&self, g: &[T]) -> Vec<T> {
        Self::convolve(&self.kernel, g)
    }

    pub fn apply_inverse(&self, v: &[T]) -> Vec<T> {
        Self::convolve(&self.inverse_kernel, v)
    }
}

/// State of a projected Armijo descent.
struct Descent<'a, T> {
    p: Vec<T>,
    value: T,
    grad: Vec<T>,
    /// Last accepted step length.
    step: Option<T>,
    /// Barzilai-Borwein estimate from the last two iterates.
    spectral: Option<T>,
    rejections: usize,
    metric: Option<&'a SobolevMetric<T>>,
}

impl<'a, T: Scalar> Descent<'a, T> {
    fn new<F, G>(
        objective: &F,
        gradient: &G,
        p0: &[T],
        bounds: &Bounds<T>,
        metric: Option<&'a SobolevMetric<T>>,
    ) -> Result<Self>
    where
        F: Fn(&[T]) -> T + Sync,
        G: Fn(&[T]) -> Vec<T>,
    {
        let mut p = p0.to_vec();
        bounds.project(&mut p);
        let value = objective(&p);
        if !value.is_finite() || value >= T::lit(FAILED_OBJECTIVE) {
            return Err(GmolError::NonFiniteStart);
        }
        let grad = gradient(&p);
        Ok(Self {
            p,
            value,
            grad,
            step: None,
            spectral: None,
            rejections: 0,
            metric,
        })
    }

    fn projected_gradient_norm(&self, bounds: &Bounds<T>) -> T {
        let mut q: Vec<T> = self.p.iter().zip(&self.grad).map(|(&p, &g)| p - g).collect();
        bounds.project(&mut q);
        q.iter()
            .zip(&self.p)
            .fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs()))
    }

    fn direction(&self) -> Vec<T> {
        match self.metric {
            Some(m) => m.apply(&self.grad),
            None => self.grad.clone(),
        }
    }

    fn first_trial(&self, direction: &[T], opts: &MinimizeOptions<T>) -> T {
        match (self.spectral, self.step) {
            (Some(s), _) => s,
            (None, Some(a)) => a * T::lit(2.0),
            (None, None) => opts.initial_step / T::one().max(sup_norm(direction)),
        }
    }

    fn step<F, G>(&mut self, objective: &F, gradient: &G, bounds: &Bounds<T>, opts: &MinimizeOptions<T>) -> StepOutcome
    where
        F: Fn(&[T]) -> T + Sync,
        G: Fn(&[T]) -> Vec<T>,
    {
        if self.projected_gradient_norm(bounds) <= opts.grad_tol {
            return StepOutcome::Converged;
        }
        let dir = self.direction();
        let mut alpha = self.first_trial(&dir, opts);
        loop {
            let mut cand: Vec<T> = self.p.iter().zip(&dir).map(|(&p, &d)| p - alpha * d).collect();
            bounds.project(&mut cand);
            let decrease: T = cand
                .iter()
                .zip(&self.p)
                .zip(&self.grad)
                .map(|((&c, &p), &g)| g * (c - p))
                .sum();
            let value = sanitize(objective(&cand));
            if value <= self.value + opts.armijo_c * decrease && value <= self.value {
                let grad = gradient(&cand);
                let s: Vec<T> = cand.iter().zip(&self.p).map(|(&c, &p)| c - p).collect();
                let scaled = match self.metric {
                    Some(m) => m.apply_inverse(&s),
                    None => s.clone(),
                };
                let ss: T = s.iter().zip(&scaled).map(|(&a, &b)| a * b).sum();
                let sy: T = s
                    .iter()
                    .zip(grad.iter().zip(&self.grad))
                    .map(|(&si, (&g1, &g0))| si * (g1 - g0))
                    .sum();
                self.spectral = (sy > T::zero() && ss > T::zero()).then(|| ss / sy);
                self.p = cand;
                self.value = value;
                self.grad = grad;
                self.step = Some(alpha);
                self.rejections = 0;
                return StepOutcome::Accepted;
            }
            self.rejections += 1;
            if self.rejections >= opts.max_rejections {
                return StepOutcome::Stalled;
            }
            // minimizer of the quadratic through the value, slope and trial,
            // kept within [0.1, backtrack] of the current step
            let excess = value - self.value - decrease;
            let model = if excess > T::zero() {
                -decrease * alpha / (T::lit(2.0) * excess)
            } else {
                alpha * opts.backtrack
            };
            alpha = model.max(alpha * T::lit(0.1)).min(alpha * opts.backtrack);
        }
    }
}

fn descend<T, F, G>(
    objective: &F,
    gradient: &G,
    p0: &[T],
    bounds: &Bounds<T>,
    opts: &MinimizeOptions<T>,
    metric: Option<&SobolevMetric<T>>,
) -> Result<MinimizeResult<T>>
where
    T: Scalar,
    F: Fn(&[T]) -> T + Sync,
    G: Fn(&[T]) -> Vec<T>,
{
    if bounds.len() != p0.len() {
        return Err(GmolError::InvalidInput(
            "bounds and starting point differ in length".into(),
        ));
    }
    let mut descent = Descent::new(objective, gradient, p0, bounds, metric)?;
    let mut history = vec![descent.value];
    let mut iterations = 0;
    let termination = loop {
        if iterations >= opts.max_iters {
            break Termination::MaxIters;
        }
        match descent.step(objective, gradient, bounds, opts) {
            StepOutcome::Accepted => {
                iterations += 1;
                history.push(descent.value);
            }
            StepOutcome::Converged => break Termination::Tolerance,
            StepOutcome::Stalled => break Termination::Stalled,
        }
    };
    Ok(MinimizeResult {
        params: descent.p,
        value: descent.value,
        history,
        iterations,
        termination,
    })
}

/// Projected gradient descent with Armijo backtracking.
pub fn minimize<T, F>(objective: &F, p0: &[T], bounds: &Bounds<T>, opts: &MinimizeOptions<T>) -> Result<MinimizeResult<T>>
where
    T: Scalar,
    F: Fn(&[T]) -> T + Sync,
{
    let gradient = |p: &[T]| finite_difference_gradient(objective, p, opts.rel_step);
    descend(objective, &gradient, p0, bounds, opts, None)
}

/// Shape samples followed by the flattened ansatz coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector<T> {
    values: Vec<T>,
    shape_len: usize,
}

impl<T: Scalar> ParamVector<T> {
    pub fn new(radii: &[T], coeffs: &AnsatzCoeffs<T>) -> Self {
        let mut values = radii.to_vec();
        values.extend(coeffs.to_flat());
        Self {
            values,
            shape_len: radii.len(),
        }
    }

    pub fn from_parts(values: Vec<T>, shape_len: usize) -> Result<Self> {
        if shape_len > values.len() || !(values.len() - shape_len).is_multiple_of(AnsatzCoeffs::<T>::TERMS) {
            return Err(GmolError::InvalidInput(
                "parameter vector does not split into shape and coefficient blocks".into(),
            ));
        }
        Ok(Self { values, shape_len })
    }

    pub fn shape(&self) -> &[T] {
        &self.values[..self.shape_len]
    }

    pub fn coeffs(&self) -> &[T] {
        &self.values[self.shape_len..]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.values
    }

    pub fn shape_len(&self) -> usize {
        self.shape_len
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// How shape and coefficients are updated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InverseMode {
    /// One descent over the concatenated parameter vector.
    #[default]
    Joint,
    /// Exact least-squares refit of the coefficients before every shape step.
    Alternating,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseOptions<T> {
    /// Penalty weight `K` on the flux mismatch.
    pub penalty: T,
    pub norm: NormMode,
    pub mode: InverseMode,
    pub minimize: MinimizeOptions<T>,
    /// Weight of `Σ (r_{j+1} - 2 r_j + r_{j-1})²`; zero disables smoothing.
    pub smoothing: T,
    /// Lower bound on the shape samples; defaults to the shape margin.
    pub min_radius: Option<T>,
    /// Length of the Sobolev metric applied to shape gradients; `None` uses
    /// the plain Euclidean gradient.
    pub sobolev_length: Option<T>,
    pub sweep: FixedPointOptions<T>,
}

impl<T: Scalar> Default for InverseOptions<T> {
    fn default() -> Self {
        Self {
            penalty: T::lit(250.0),
            norm: NormMode::Geometric,
            mode: InverseMode::Joint,
            minimize: MinimizeOptions::default(),
            smoothing: T::zero(),
            min_radius: None,
            sobolev_length: Some(T::lit(0.5)),
            sweep: FixedPointOptions::default(),
        }
    }
}

/// Source of the starting coefficients.
#[derive(Debug, Clone, PartialEq)]
pub enum WarmStart {
    /// Per-line fit to a method-of-lines sweep on the starting shape.
    Sweep,
    /// Linear blend fallback after the sweep failed.
    Affine(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult<T> {
    pub params: ParamVector<T>,
    pub shape: ShapeCurve<T>,
    pub coeffs: AnsatzCoeffs<T>,
    pub cost: CostBreakdown<T>,
    pub initial_cost: CostBreakdown<T>,
    /// Penalized objective (including smoothing) after every accepted step.
    pub history: Vec<T>,
    pub iterations: usize,
    pub termination: Termination,
    pub warm_start: WarmStart,
}

/// Fixed inputs of the inverse objective.
struct InverseProblem<'a, T> {
    boundary: &'a BoundaryData<T>,
    template: &'a ShapeCurve<T>,
    t: Vec<T>,
    penalty: T,
    norm: NormMode,
    smoothing: T,
}

impl<T: Scalar> InverseProblem<'_, T> {
    fn shape(&self, radii: &[T]) -> Option<(ShapeCurve<T>, MetricField<T>)> {
        let shape = self.template.with_radii(radii.to_vec()).ok()?;
        let metric = metric_coefficients(&shape, &self.t).ok()?;
        Some((shape, metric))
    }

    fn roughness(&self, r: &[T]) -> T {
        if self.smoothing == T::zero() {
            return T::zero();
        }
        let m = r.len();
        let s: T = (0..m)
            .map(|j| {
                let c = r[(j + 1) % m] - T::lit(2.0) * r[j] + r[(j + m - 1) % m];
                c * c
            })
            .sum();
        self.smoothing * s
    }

    fn breakdown(&self, radii: &[T], coeffs: &AnsatzCoeffs<T>) -> Option<CostBreakdown<T>> {
        let (shape, metric) = self.shape(radii)?;
        let values = AnsatzBasis::new(self.boundary, &metric).field(coeffs, self.boundary);
        Some(cost_with_metric(
            &values,
            &metric,
            &shape,
            self.boundary.flux(),
            self.penalty,
            self.norm,
        ))
    }

    fn objective(&self, radii: &[T], coeffs: &AnsatzCoeffs<T>) -> T {
        match self.breakdown(radii, coeffs) {
            Some(c) => sanitize(c.total + self.roughness(radii)),
            None => T::lit(FAILED_OBJECTIVE),
        }
    }

    fn joint_objective(&self, p: &[T]) -> T {
        let m = self.template.grid().len();
        match AnsatzCoeffs::from_flat(&p[m..]) {
            Ok(c) => self.objective(&p[..m], &c),
            Err(_) => T::lit(FAILED_OBJECTIVE),
        }
    }

    /// Coefficients minimizing `J` at fixed shape; `J` is quadratic in them.
    /// A coefficient on line `n` only reaches the residual rows of lines
    /// `n - 1 ..= n + 1` and, near the outer circle, the flux rows, so the
    /// normal equations are assembled over those supports.
    fn refit(&self, radii: &[T]) -> Option<AnsatzCoeffs<T>> {
        let (shape, metric) = self.shape(radii)?;
        let intervals = self.t.len() - 1;
        let m = shape.grid().len();
        let terms = AnsatzCoeffs::<T>::TERMS;
        let basis = AnsatzBasis::new(self.boundary, &metric);
        let w = self.boundary.flux();
        let residual = |c: &AnsatzCoeffs<T>| {
            let values = basis.field(c, self.boundary);
            weighted_residuals(&values, &metric, &shape, w, self.penalty, self.norm)
        };
        let base = residual(&AnsatzCoeffs::zeros(intervals));
        let unknowns = (intervals - 1) * terms;
        let columns: Vec<Vec<T>> = (0..unknowns)
            .into_par_iter()
            .map(|q| {
                let mut flat = vec![T::zero(); unknowns];
                flat[q] = T::one();
                let c = AnsatzCoeffs::from_flat(&flat).expect("finite unit coefficients");
                residual(&c).iter().zip(&base).map(|(&a, &b)| a - b).collect()
            })
            .collect();
        let flux_rows = (intervals - 1) * m..intervals * m;
        let support = |q: usize| {
            let n = q / terms + 1;
            let lap = (n.max(2) - 2) * m..n.min(intervals - 2) * m + m;
            let flux = if n + 2 >= intervals { flux_rows.clone() } else { 0..0 };
            [lap, flux]
        };
        let overlap = |a: &std::ops::Range<usize>, b: &std::ops::Range<usize>| a.start.max(b.start)..a.end.min(b.end);
        let dot = |x: &[T], y: &[T], ranges: &[std::ops::Range<usize>]| -> T {
            ranges
                .iter()
                .flat_map(|r| r.clone())
                .map(|i| x[i] * y[i])
                .sum()
        };
        let mut normal = LineArray::filled(unknowns, unknowns, T::zero());
        let mut rhs = vec![T::zero(); unknowns];
        for p in 0..unknowns {
            let sp = support(p);
            rhs[p] = -dot(&columns[p], &base, &sp);
            for q in p..unknowns {
                let sq = support(q);
                let shared: Vec<_> = sp
                    .iter()
                    .flat_map(|a| sq.iter().map(move |b| (a.clone(), b.clone())))
                    .map(|(a, b)| overlap(&a, &b))
                    .filter(|r| r.start < r.end)
                    .collect();
                let v = dot(&columns[p], &columns[q], &shared);
                normal[(p, q)] = v;
                normal[(q, p)] = v;
            }
        }
        // symmetric diagonal scaling before the pivoted solve
        let scale: Vec<T> = (0..unknowns)
            .map(|q| {
                let d = normal[(q, q)];
                if d > T::zero() { d.sqrt().recip() } else { T::zero() }
            })
            .collect();
        for p in 0..unknowns {
            rhs[p] *= scale[p];
            for q in 0..unknowns {
                normal[(p, q)] *= scale[p] * scale[q];
            }
        }
        let y = least_squares(&normal, &rhs);
        let a: Vec<T> = y.iter().zip(&scale).map(|(&v, &s)| v * s).collect();
        AnsatzCoeffs::from_flat(&a).ok()
    }
}

/// Recovers the internal boundary by minimizing `J` over the shape samples and
/// the ansatz coefficients, starting from `shape0`.
pub fn solve_inverse<T: Scalar>(
    boundary: &BoundaryData<T>,
    shape0: &ShapeCurve<T>,
    intervals: usize,
    opts: &InverseOptions<T>,
) -> Result<OptResult<T>> {
    if boundary.grid() != shape0.grid() {
        return Err(GmolError::InvalidInput(
            "boundary data and shape use different grids".into(),
        ));
    }
    if intervals < 3 {
        return Err(GmolError::InvalidInput(format!(
            "the inverse problem needs at least 3 line intervals, got {intervals}"
        )));
    }
    if !(opts.penalty >= T::zero()) || !(opts.smoothing >= T::zero()) {
        return Err(GmolError::InvalidInput(
            "penalty and smoothing weights must be non-negative".into(),
        ));
    }
    let m = shape0.grid().len();
    let r_min = opts.min_radius.unwrap_or(shape0.margin());
    if !(r_min > T::zero() && r_min <= shape0.max_radius()) {
        return Err(GmolError::InvalidInput(format!(
            "minimum radius {r_min} outside (0, R - margin]"
        )));
    }
    let problem = InverseProblem {
        boundary,
        template: shape0,
        t: uniform_lines(intervals),
        penalty: opts.penalty,
        norm: opts.norm,
        smoothing: opts.smoothing,
    };

    let (coeffs0, warm_start) = match gmol_sweep(boundary, shape0, intervals, &opts.sweep) {
        Ok((field, _)) => {
            let metric = metric_coefficients(shape0, &problem.t)?;
            (fit_ansatz(&field, boundary, &metric)?, WarmStart::Sweep)
        }
        Err(e) => (AnsatzCoeffs::affine(intervals), WarmStart::Affine(e.to_string())),
    };
    let initial_cost = problem
        .breakdown(shape0.radii(), &coeffs0)
        .ok_or(GmolError::NonFiniteStart)?;

    let shape_bounds = Bounds {
        lower: vec![r_min; m],
        upper: vec![shape0.max_radius(); m],
    };

    let metric = opts.sobolev_length.map(|l| SobolevMetric::new(m, l));
    let (radii, coeffs, history, iterations, termination) = match opts.mode {
        InverseMode::Joint => {
            let p0 = ParamVector::new(shape0.radii(), &coeffs0);
            let mut bounds = Bounds::unbounded(p0.len());
            bounds.lower[..m].copy_from_slice(&shape_bounds.lower);
            bounds.upper[..m].copy_from_slice(&shape_bounds.upper);
            let f = |p: &[T]| problem.joint_objective(p);
            let g = |p: &[T]| finite_difference_gradient(&f, p, opts.minimize.rel_step);
            let res = descend(&f, &g, p0.as_slice(), &bounds, &opts.minimize, metric.as_ref())?;
            let coeffs = AnsatzCoeffs::from_flat(&res.params[m..])?;
            (res.params[..m].to_vec(), coeffs, res.history, res.iterations, res.termination)
        }
        InverseMode::Alternating => alternating(
            &problem,
            shape0.radii(),
            coeffs0,
            &shape_bounds,
            &opts.minimize,
            metric.as_ref(),
        )?,
    };

    let shape = shape0.with_radii(radii)?;
    let cost = problem
        .breakdown(shape.radii(), &coeffs)
        .ok_or(GmolError::NonFinite("final cost"))?;
    Ok(OptResult {
        params: ParamVector::new(shape.radii(), &coeffs),
        shape,
        coeffs,
        cost,
        initial_cost,
        history,
        iterations,
        termination,
        warm_start,
    })
}

type Alternated<T> = (Vec<T>, AnsatzCoeffs<T>, Vec<T>, usize, Termination);

fn alternating<T: Scalar>(
    problem: &InverseProblem<'_, T>,
    radii0: &[T],
    coeffs0: AnsatzCoeffs<T>,
    bounds: &Bounds<T>,
    opts: &MinimizeOptions<T>,
    metric: Option<&SobolevMetric<T>>,
) -> Result<Alternated<T>> {
    let start = problem.objective(radii0, &coeffs0);
    if !(start < T::lit(FAILED_OBJECTIVE)) {
        return Err(GmolError::NonFiniteStart);
    }
    // Descend on min_a J(r, a). Trial shapes are scored after a refit; since
    // the refit is an exact minimizer, the gradient at frozen coefficients is
    // the gradient of the reduced objective.
    let reduced = |r: &[T]| match problem.refit(r) {
        Some(c) => problem.objective(r, &c),
        None => T::lit(FAILED_OBJECTIVE),
    };
    let gradient = |r: &[T]| match problem.refit(r) {
        Some(c) => finite_difference_gradient(&|q: &[T]| problem.objective(q, &c), r, opts.rel_step),
        None => vec![T::zero(); r.len()],
    };
    let res = descend(&reduced, &gradient, radii0, bounds, opts, metric)?;
    let mut history = vec![start];
    history.extend(res.history.iter().copied().skip_while(|&v| v >= start));
    let coeffs = match problem.refit(&res.params) {
        Some(c) if problem.objective(&res.params, &c) <= start => c,
        _ => coeffs0,
    };
    Ok((res.params, coeffs, history, res.iterations, res.termination))
}
