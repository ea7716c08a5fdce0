//! Mode dispatch: forward sweep, inverse recovery and the oracle checks.

use std::f64::consts::{LN_2, TAU};

use gmol_core::{
    analytic_annulus, ansatz_field, cost, dense_reference_solve, gmol_sweep, neumann_flux, solve_inverse, sup_diff,
    AngularGrid, BoundaryData64, FixedPointOptions, GmolError, HarmonicMode, InverseMode, InverseOptions,
    LineField64, MinimizeOptions, NormMode, RelaxationOptions, ShapeCurve64, Trig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, FluxSource, FunctionSpec, Mode, OptimizerMode, RunConfig};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Solver(#[from] GmolError),
}

impl RunError {
    /// Process exit code: 2 for configuration problems, 3 for solver failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Solver(GmolError::InvalidGrid(_) | GmolError::InvalidInput(_) | GmolError::DegenerateTransform { .. }) => 2,
            RunError::Solver(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            2 => "configuration",
            _ => "solver",
        }
    }
}

/// One oracle comparison of the validate mode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    /// `"<="` or `">="`.
    pub relation: &'static str,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            bound,
            relation: "<=",
            passed: value <= bound,
        }
    }

    fn at_least(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            bound,
            relation: ">=",
            passed: value >= bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub mode: Mode,
    #[serde(rename = "R")]
    pub outer_radius: f64,
    #[serde(rename = "K")]
    pub penalty: f64,
    #[serde(rename = "N")]
    pub lines: usize,
    #[serde(rename = "M")]
    pub angles: usize,
    #[serde(rename = "J")]
    pub total: f64,
    pub lap_l2_sq: f64,
    pub neumann_l2_sq: f64,
    pub lap_inf: f64,
    pub neumann_inf: f64,
    pub iterations: usize,
    pub termination: String,
    #[serde(rename = "initial_J", skip_serializing_if = "Option::is_none")]
    pub initial_total: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shape_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flux_max_rel_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warm_start: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<Check>,
}

impl Summary {
    fn empty(config: &RunConfig) -> Self {
        Self {
            mode: config.mode,
            outer_radius: config.outer_radius,
            penalty: config.penalty,
            lines: config.lines,
            angles: config.angles,
            total: f64::NAN,
            lap_l2_sq: f64::NAN,
            neumann_l2_sq: f64::NAN,
            lap_inf: f64::NAN,
            neumann_inf: f64::NAN,
            iterations: 0,
            termination: String::new(),
            initial_total: None,
            shape_error: None,
            flux_max_rel_error: None,
            warm_start: None,
            checks: Vec::new(),
        }
    }

    pub fn all_checks_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Plain-data results of a run, ready to be written out.
#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub outer_radius: f64,
    /// Inner boundary samples at `x_j = j / M`.
    pub radii: Vec<f64>,
    /// Field rows `n = 0..=N`, each with `M` samples; empty in validate mode.
    pub field: Vec<Vec<f64>>,
    pub summary: Summary,
}

fn grid(config: &RunConfig) -> Result<AngularGrid, RunError> {
    Ok(AngularGrid::new(config.angles)?)
}

fn shape(config: &RunConfig, spec: &FunctionSpec, field: &'static str) -> Result<ShapeCurve64, RunError> {
    let g = grid(config)?;
    let radii = spec.sample(config.angles, field)?;
    Ok(ShapeCurve64::new(g, radii, config.outer_radius, config.margin)?)
}

fn norm_mode(config: &RunConfig) -> NormMode {
    if config.paper_faithful_norms {
        NormMode::PlainSum
    } else {
        NormMode::Geometric
    }
}

fn sweep_options(config: &RunConfig) -> FixedPointOptions<f64> {
    FixedPointOptions {
        tol: config.tol,
        ..Default::default()
    }
}

fn require_flux_lines(config: &RunConfig) -> Result<(), RunError> {
    if config.lines < 3 {
        return Err(ConfigError::Invalid {
            field: "N",
            reason: "flux evaluation needs at least 3 line intervals".into(),
        }
        .into());
    }
    Ok(())
}

fn field_rows(field: &LineField64) -> Vec<Vec<f64>> {
    field.values().iter_rows().map(|r| r.to_vec()).collect()
}

fn relative_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

/// Target flux from the configuration, or synthesized on the true shape.
fn boundary_data(config: &RunConfig, require_flux: bool) -> Result<BoundaryData64, RunError> {
    let g = grid(config)?;
    let m = config.angles;
    let inner = config.boundary.inner.sample(m, "boundary.inner")?;
    let outer = config.boundary.outer.sample(m, "boundary.outer")?;
    let flux = match (&config.boundary.flux, &config.truth) {
        (Some(f), _) => f.sample(m, "boundary.flux")?,
        (None, Some(truth)) => {
            let truth = shape(config, truth, "truth")?;
            let b = BoundaryData64::new(g, inner.clone(), outer.clone(), vec![0.0; m])?;
            let field = match config.flux_source {
                FluxSource::Sweep => gmol_sweep(&b, &truth, config.lines, &sweep_options(config))?.0,
                FluxSource::Relaxation => {
                    let opts = RelaxationOptions {
                        tol: config.tol,
                        ..Default::default()
                    };
                    dense_reference_solve(&b, &truth, config.lines, &opts)?.0
                }
            };
            let mut w = neumann_flux(&field, &truth)?;
            if config.flux_noise > 0.0 {
                let scale = config.flux_noise * w.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                for v in &mut w {
                    *v += scale * rng.gen_range(-1.0..=1.0);
                }
            }
            w
        }
        (None, None) if require_flux => return Err(ConfigError::MissingField("boundary.flux").into()),
        (None, None) => vec![0.0; m],
    };
    Ok(BoundaryData64::new(g, inner, outer, flux)?)
}

pub fn run(config: &RunConfig) -> Result<RunArtifacts, RunError> {
    match config.mode {
        Mode::Forward => forward(config),
        Mode::Inverse => inverse(config),
        Mode::Validate => Ok(validate(config)),
    }
}

fn forward(config: &RunConfig) -> Result<RunArtifacts, RunError> {
    require_flux_lines(config)?;
    let has_flux = config.boundary.flux.is_some() || config.truth.is_some();
    let boundary = boundary_data(config, false)?;
    let shape = shape(config, &config.shape0, "shape0")?;
    let (field, reports) = gmol_sweep(&boundary, &shape, config.lines, &sweep_options(config))?;
    let c = cost(&field, &shape, boundary.flux(), config.penalty, norm_mode(config))?;
    let mut summary = Summary::empty(config);
    summary.total = c.total;
    summary.lap_l2_sq = c.lap_l2_sq;
    summary.neumann_l2_sq = c.neumann_l2_sq;
    summary.lap_inf = c.lap_inf;
    summary.neumann_inf = c.neumann_inf;
    summary.iterations = reports.iter().map(|r| r.iterations).sum();
    summary.termination = "converged".into();
    if has_flux {
        let scale = boundary.flux().iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        if scale > 0.0 {
            summary.flux_max_rel_error = Some(c.neumann_inf / scale);
        }
    }
    Ok(RunArtifacts {
        outer_radius: config.outer_radius,
        radii: shape.radii().to_vec(),
        field: field_rows(&field),
        summary,
    })
}

fn inverse(config: &RunConfig) -> Result<RunArtifacts, RunError> {
    require_flux_lines(config)?;
    let boundary = boundary_data(config, true)?;
    let shape0 = shape(config, &config.shape0, "shape0")?;
    let o = &config.optimizer;
    let opts = InverseOptions {
        penalty: config.penalty,
        norm: norm_mode(config),
        mode: match o.mode {
            OptimizerMode::Joint => InverseMode::Joint,
            OptimizerMode::Alternating => InverseMode::Alternating,
        },
        minimize: MinimizeOptions {
            max_iters: o.max_iters,
            grad_tol: o.grad_tol,
            armijo_c: o.armijo_c,
            backtrack: o.backtrack,
            initial_step: o.initial_step,
            max_rejections: o.max_rejections,
            rel_step: o.rel_step,
        },
        smoothing: o.smoothing,
        min_radius: o.min_radius,
        sobolev_length: o.sobolev_length,
        sweep: sweep_options(config),
    };
    let res = solve_inverse(&boundary, &shape0, config.lines, &opts)?;
    let field = ansatz_field(&res.coeffs, &boundary, &res.shape, config.lines)?;
    let mut summary = Summary::empty(config);
    summary.total = res.cost.total;
    summary.lap_l2_sq = res.cost.lap_l2_sq;
    summary.neumann_l2_sq = res.cost.neumann_l2_sq;
    summary.lap_inf = res.cost.lap_inf;
    summary.neumann_inf = res.cost.neumann_inf;
    summary.iterations = res.iterations;
    summary.termination = res.termination.as_str().into();
    summary.initial_total = Some(res.initial_cost.total);
    summary.warm_start = Some(match &res.warm_start {
        gmol_core::WarmStart::Sweep => "sweep".into(),
        gmol_core::WarmStart::Affine(_) => "affine".into(),
    });
    if let Some(truth) = &config.truth {
        let truth = truth.sample(config.angles, "truth")?;
        summary.shape_error = Some(relative_l2(res.shape.radii(), &truth));
    }
    Ok(RunArtifacts {
        outer_radius: config.outer_radius,
        radii: res.shape.radii().to_vec(),
        field: field_rows(&field),
        summary,
    })
}

/// Oracle suite on fixed scenarios; solver failures count as failed checks.
fn validate(config: &RunConfig) -> RunArtifacts {
    let checks = vec![
        check_or_fail("annulus-log flux relative error (N=40, M=64)", 0.01, true, annulus_flux_error),
        check_or_fail("sweep error ratio per doubling N=10,20,40", 0.6, true, sweep_convergence_ratio),
        check_or_fail("relaxation vs ln profile (N=M=64)", 1e-3, true, relaxation_log_error),
        check_or_fail("relaxation order ratio, modes k=0,1,2", 3.0, false, relaxation_order),
        check_or_fail("sweep vs relaxation, r=1+0.1sin(2πx) (N=40, M=64)", 0.03, true, cross_oracle_gap),
    ];
    let mut summary = Summary::empty(config);
    summary.termination = if checks.iter().all(|c| c.passed) { "passed" } else { "failed" }.into();
    summary.checks = checks;
    RunArtifacts {
        outer_radius: config.outer_radius,
        radii: Vec::new(),
        field: Vec::new(),
        summary,
    }
}

fn check_or_fail(name: &str, bound: f64, upper: bool, f: fn() -> Result<f64, GmolError>) -> Check {
    let value = f().unwrap_or(f64::NAN);
    if upper {
        Check::at_most(name, value, bound)
    } else {
        Check::at_least(name, value, bound)
    }
}

fn annulus(m: usize, r0: f64, r: f64) -> Result<ShapeCurve64, GmolError> {
    ShapeCurve64::circle(AngularGrid::new(m)?, r0, r)
}

fn log_mode() -> HarmonicMode<f64> {
    HarmonicMode::radial(0.0, 1.0 / LN_2)
}

fn mode_boundary(mode: &HarmonicMode<f64>, shape: &ShapeCurve64, n: usize) -> Result<(LineField64, BoundaryData64), GmolError> {
    let (exact, flux) = analytic_annulus(mode, shape, n)?;
    let b = BoundaryData64::new(shape.grid(), exact.row(0).to_vec(), exact.row(n).to_vec(), flux)?;
    Ok((exact, b))
}

pub(crate) fn annulus_flux_error() -> Result<f64, GmolError> {
    let shape = annulus(64, 1.0, 2.0)?;
    let (_, b) = mode_boundary(&log_mode(), &shape, 40)?;
    let (field, _) = gmol_sweep(&b, &shape, 40, &FixedPointOptions::default())?;
    let flux = neumann_flux(&field, &shape)?;
    Ok(flux
        .iter()
        .zip(b.flux())
        .map(|(f, w)| ((f - w) / w).abs())
        .fold(0.0, f64::max))
}

pub(crate) fn sweep_convergence_ratio() -> Result<f64, GmolError> {
    let shape = annulus(64, 1.0, 2.0)?;
    let mut errors = Vec::new();
    for n in [10, 20, 40] {
        let (exact, b) = mode_boundary(&log_mode(), &shape, n)?;
        let (field, _) = gmol_sweep(&b, &shape, n, &FixedPointOptions::default())?;
        errors.push(sup_diff(field.values().as_slice(), exact.values().as_slice()));
    }
    Ok(errors.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max))
}

pub(crate) fn relaxation_log_error() -> Result<f64, GmolError> {
    let shape = annulus(64, 1.0, 2.0)?;
    let (exact, b) = mode_boundary(&log_mode(), &shape, 64)?;
    let (field, _) = dense_reference_solve(&b, &shape, 64, &RelaxationOptions::default())?;
    Ok(sup_diff(field.values().as_slice(), exact.values().as_slice()))
}

/// Smallest error ratio over modes `k = 0, 1, 2` when doubling from 16 to 32.
pub(crate) fn relaxation_order() -> Result<f64, GmolError> {
    let modes = [
        log_mode(),
        HarmonicMode { k: 1, a: 0.5, b: 0.5, phase: Trig::Cos },
        HarmonicMode { k: 2, a: 0.25, b: 0.5, phase: Trig::Sin },
    ];
    let mut worst = f64::INFINITY;
    for mode in &modes {
        let mut errors = Vec::new();
        for n in [16, 32] {
            let shape = annulus(n, 1.0, 2.0)?;
            let (exact, b) = mode_boundary(mode, &shape, n)?;
            let (field, _) = dense_reference_solve(&b, &shape, n, &RelaxationOptions::default())?;
            errors.push(sup_diff(field.values().as_slice(), exact.values().as_slice()));
        }
        worst = worst.min(errors[0] / errors[1]);
    }
    Ok(worst)
}

pub(crate) fn cross_oracle_gap() -> Result<f64, GmolError> {
    let g = AngularGrid::new(64)?;
    let shape = ShapeCurve64::from_fn(g, 3.0, |x| 1.0 + 0.1 * (TAU * x).sin())?;
    let b = BoundaryData64::from_fns(g, |x| 0.5 * (TAU * x).cos(), |x| 1.0 + 0.3 * (TAU * x).sin(), |_| 0.0)?;
    let (sweep, _) = gmol_sweep(&b, &shape, 40, &FixedPointOptions::default())?;
    let (dense, _) = dense_reference_solve(&b, &shape, 40, &RelaxationOptions::default())?;
    Ok(sup_diff(sweep.values().as_slice(), dense.values().as_slice()))
}
