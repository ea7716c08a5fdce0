//! Run configuration: a JSON document, optionally seeded from a named preset.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{Expr, ExprError};

pub const PRESETS: [&str; 3] = ["paper-3.1", "annulus-log", "synthetic-recovery"];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("missing field {0}")]
    MissingField(&'static str),
    #[error("unknown preset {name:?}; available presets: {}", PRESETS.join(", "))]
    UnknownPreset { name: String },
    #[error("invalid value for {field}: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("{field}: {source}")]
    Expression {
        field: &'static str,
        #[source]
        source: ExprError,
    },
    #[error("malformed configuration document: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Forward,
    Inverse,
    Validate,
}

/// A function of `x ∈ [0, 1)`: a constant, an expression, or `M` samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FunctionSpec {
    Constant(f64),
    Expression(String),
    Samples(Vec<f64>),
}

impl FunctionSpec {
    fn check(&self, field: &'static str) -> Result<(), ConfigError> {
        match self {
            FunctionSpec::Constant(v) if !v.is_finite() => Err(ConfigError::Invalid {
                field,
                reason: "constant must be finite".into(),
            }),
            FunctionSpec::Expression(s) => Expr::parse(s)
                .map(|_| ())
                .map_err(|source| ConfigError::Expression { field, source }),
            FunctionSpec::Samples(v) if v.iter().any(|s| !s.is_finite()) => Err(ConfigError::Invalid {
                field,
                reason: "samples must be finite".into(),
            }),
            _ => Ok(()),
        }
    }

    /// Values at `x_j = j / m`.
    pub fn sample(&self, m: usize, field: &'static str) -> Result<Vec<f64>, ConfigError> {
        match self {
            FunctionSpec::Constant(v) => Ok(vec![*v; m]),
            FunctionSpec::Expression(s) => {
                let e = Expr::parse(s).map_err(|source| ConfigError::Expression { field, source })?;
                Ok((0..m).map(|j| e.eval(j as f64 / m as f64)).collect())
            }
            FunctionSpec::Samples(v) if v.len() == m => Ok(v.clone()),
            FunctionSpec::Samples(v) => Err(ConfigError::Invalid {
                field,
                reason: format!("{} samples given for {m} angles", v.len()),
            }),
        }
    }
}

/// How the target flux is obtained when `truth` is given instead of `flux`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FluxSource {
    /// Method-of-lines sweep on the true shape.
    #[default]
    Sweep,
    /// Relaxation solve of the full second-order discretization.
    Relaxation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySpec {
    pub inner: FunctionSpec,
    pub outer: FunctionSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flux: Option<FunctionSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerMode {
    #[default]
    Joint,
    Alternating,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub mode: OptimizerMode,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub armijo_c: f64,
    pub backtrack: f64,
    pub initial_step: f64,
    pub max_rejections: usize,
    pub rel_step: f64,
    pub smoothing: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_radius: Option<f64>,
    /// Sobolev metric length for shape gradients; `null` for the plain gradient.
    pub sobolev_length: Option<f64>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            mode: OptimizerMode::Joint,
            max_iters: 2000,
            grad_tol: 1e-8,
            armijo_c: 1e-4,
            backtrack: 0.5,
            initial_step: 1.0,
            max_rejections: 10,
            rel_step: 1e-6,
            smoothing: 0.0,
            min_radius: None,
            sobolev_length: Some(0.5),
        }
    }
}

/// Fully resolved and validated configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub mode: Mode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(rename = "R")]
    pub outer_radius: f64,
    #[serde(rename = "K")]
    pub penalty: f64,
    #[serde(rename = "N")]
    pub lines: usize,
    #[serde(rename = "M")]
    pub angles: usize,
    pub tol: f64,
    pub margin: f64,
    pub boundary: BoundarySpec,
    pub shape0: FunctionSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<FunctionSpec>,
    pub flux_source: FluxSource,
    /// Relative amplitude of uniform noise added to a synthesized flux.
    pub flux_noise: f64,
    pub optimizer: OptimizerConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub paper_faithful_norms: bool,
    pub seed: u64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundaryDoc {
    preset: Option<String>,
    inner: Option<FunctionSpec>,
    outer: Option<FunctionSpec>,
    flux: Option<FunctionSpec>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    mode: Option<Mode>,
    preset: Option<String>,
    #[serde(rename = "R")]
    outer_radius: Option<f64>,
    #[serde(rename = "K")]
    penalty: Option<f64>,
    #[serde(rename = "N")]
    lines: Option<usize>,
    #[serde(rename = "M")]
    angles: Option<usize>,
    tol: Option<f64>,
    margin: Option<f64>,
    boundary: Option<BoundaryDoc>,
    shape0: Option<FunctionSpec>,
    truth: Option<FunctionSpec>,
    flux_source: Option<FluxSource>,
    flux_noise: Option<f64>,
    optimizer: Option<serde_json::Map<String, serde_json::Value>>,
    #[serde(skip)]
    optimizer_defaults: Option<OptimizerConfig>,
    out: Option<PathBuf>,
    paper_faithful_norms: Option<bool>,
    seed: Option<u64>,
}

fn expr(s: &str) -> FunctionSpec {
    FunctionSpec::Expression(s.to_string())
}

/// Boundary functions of a preset; `r` is the outer radius in effect.
fn preset_boundary(name: &str, r: Option<f64>) -> Result<BoundaryDoc, ConfigError> {
    match name {
        "paper-3.1" => Ok(BoundaryDoc {
            preset: None,
            inner: Some(expr("0.5*cos(pi*x) + 0.8")),
            outer: Some(expr("0.5*sin(2*pi*x) + 1.0")),
            flux: Some(expr("0.3*(cos(2*pi*x)/2 + 1.0)")),
        }),
        // u = ln(r / r0) / ln 2 between r0 = R/2 and R
        "annulus-log" => Ok(BoundaryDoc {
            preset: None,
            inner: Some(FunctionSpec::Constant(0.0)),
            outer: Some(FunctionSpec::Constant(1.0)),
            flux: r.map(|r| FunctionSpec::Constant(1.0 / (r * std::f64::consts::LN_2))),
        }),
        "synthetic-recovery" => Ok(BoundaryDoc {
            preset: None,
            inner: Some(expr("0.3*sin(2*pi*x)")),
            outer: Some(expr("1 + 0.3*cos(2*pi*x)")),
            flux: None,
        }),
        _ => Err(ConfigError::UnknownPreset { name: name.to_string() }),
    }
}

/// Scenario defaults of a preset, overridden field by field by the document.
fn apply_preset(name: &str, doc: &mut Document) -> Result<(), ConfigError> {
    fn fill<T>(slot: &mut Option<T>, v: T) {
        if slot.is_none() {
            *slot = Some(v);
        }
    }
    match name {
        "paper-3.1" => {
            fill(&mut doc.mode, Mode::Inverse);
            fill(&mut doc.outer_radius, 30.0);
            fill(&mut doc.penalty, 250.0);
            doc.optimizer_defaults = Some(OptimizerConfig {
                mode: OptimizerMode::Alternating,
                ..Default::default()
            });
        }
        "annulus-log" => {
            fill(&mut doc.mode, Mode::Forward);
            fill(&mut doc.outer_radius, 2.0);
            fill(&mut doc.lines, 40);
        }
        "synthetic-recovery" => {
            fill(&mut doc.mode, Mode::Inverse);
            fill(&mut doc.outer_radius, 3.0);
            fill(&mut doc.penalty, 250.0);
            fill(&mut doc.angles, 32);
            fill(&mut doc.shape0, FunctionSpec::Constant(1.0));
            fill(&mut doc.truth, expr("1 + 0.1*cos(4*pi*x)"));
            doc.optimizer_defaults = Some(OptimizerConfig {
                mode: OptimizerMode::Alternating,
                ..Default::default()
            });
        }
        _ => return Err(ConfigError::UnknownPreset { name: name.to_string() }),
    }
    let boundary = doc.boundary.get_or_insert_with(BoundaryDoc::default);
    if boundary.preset.is_none() && boundary.inner.is_none() && boundary.outer.is_none() {
        boundary.preset = Some(name.to_string());
    }
    Ok(())
}

fn positive(field: &'static str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(ConfigError::Invalid {
            field,
            reason: format!("must be positive and finite, got {v}"),
        })
    }
}

fn non_negative(field: &'static str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(ConfigError::Invalid {
            field,
            reason: format!("must be non-negative and finite, got {v}"),
        })
    }
}

/// Parses and validates a configuration document, filling defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut doc: Document = serde_json::from_str(text)?;
    if let Some(name) = doc.preset.clone() {
        apply_preset(&name, &mut doc)?;
    }
    resolve(doc)
}

pub fn read_config(path: &std::path::Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

fn resolve(doc: Document) -> Result<RunConfig, ConfigError> {
    let outer_radius = positive("R", doc.outer_radius.ok_or(ConfigError::MissingField("R"))?)?;
    let penalty = non_negative("K", doc.penalty.unwrap_or(250.0))?;
    let lines = doc.lines.unwrap_or(10);
    if lines < 2 {
        return Err(ConfigError::Invalid {
            field: "N",
            reason: format!("at least 2 line intervals are required, got {lines}"),
        });
    }
    let angles = doc.angles.unwrap_or(64);
    if angles < 8 || !angles.is_multiple_of(2) {
        return Err(ConfigError::Invalid {
            field: "M",
            reason: format!("must be even and at least 8, got {angles}"),
        });
    }
    let tol = positive("tol", doc.tol.unwrap_or(1e-10))?;
    let margin = positive("margin", doc.margin.unwrap_or(0.02 * outer_radius))?;

    let mut bdoc = doc.boundary.ok_or(ConfigError::MissingField("boundary"))?;
    if let Some(name) = bdoc.preset.take() {
        let p = preset_boundary(&name, Some(outer_radius))?;
        bdoc.inner = bdoc.inner.or(p.inner);
        bdoc.outer = bdoc.outer.or(p.outer);
        bdoc.flux = bdoc.flux.or(p.flux);
    }
    let boundary = BoundarySpec {
        inner: bdoc.inner.ok_or(ConfigError::MissingField("boundary.inner"))?,
        outer: bdoc.outer.ok_or(ConfigError::MissingField("boundary.outer"))?,
        flux: bdoc.flux,
    };
    boundary.inner.check("boundary.inner")?;
    boundary.outer.check("boundary.outer")?;
    if let Some(f) = &boundary.flux {
        f.check("boundary.flux")?;
    }
    let shape0 = doc.shape0.unwrap_or(FunctionSpec::Constant(outer_radius / 2.0));
    shape0.check("shape0")?;
    if let Some(t) = &doc.truth {
        t.check("truth")?;
    }

    // explicit optimizer keys override the preset's optimizer block
    let mut merged = match serde_json::to_value(doc.optimizer_defaults.unwrap_or_default())? {
        serde_json::Value::Object(m) => m,
        _ => unreachable!("optimizer options serialize to an object"),
    };
    merged.extend(doc.optimizer.unwrap_or_default());
    let optimizer: OptimizerConfig = serde_json::from_value(serde_json::Value::Object(merged))?;
    non_negative("optimizer.grad_tol", optimizer.grad_tol)?;
    positive("optimizer.rel_step", optimizer.rel_step)?;
    positive("optimizer.initial_step", optimizer.initial_step)?;
    non_negative("optimizer.smoothing", optimizer.smoothing)?;
    if !(optimizer.armijo_c > 0.0 && optimizer.armijo_c < 1.0) {
        return Err(ConfigError::Invalid {
            field: "optimizer.armijo_c",
            reason: "must lie in (0, 1)".into(),
        });
    }
    if !(optimizer.backtrack > 0.1 && optimizer.backtrack < 1.0) {
        return Err(ConfigError::Invalid {
            field: "optimizer.backtrack",
            reason: "must lie in (0.1, 1)".into(),
        });
    }
    if optimizer.max_rejections == 0 {
        return Err(ConfigError::Invalid {
            field: "optimizer.max_rejections",
            reason: "must be at least 1".into(),
        });
    }
    if let Some(r) = optimizer.min_radius {
        positive("optimizer.min_radius", r)?;
    }
    if let Some(l) = optimizer.sobolev_length {
        positive("optimizer.sobolev_length", l)?;
    }

    Ok(RunConfig {
        mode: doc.mode.unwrap_or(Mode::Forward),
        preset: doc.preset,
        outer_radius,
        penalty,
        lines,
        angles,
        tol,
        margin,
        boundary,
        shape0,
        truth: doc.truth,
        flux_source: doc.flux_source.unwrap_or_default(),
        flux_noise: non_negative("flux_noise", doc.flux_noise.unwrap_or(0.0))?,
        optimizer,
        out: doc.out,
        paper_faithful_norms: doc.paper_faithful_norms.unwrap_or(false),
        seed: doc.seed.unwrap_or(0),
    })
}

/// Scalar fields that command-line flags may replace.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub lines: Option<usize>,
    pub angles: Option<usize>,
    pub penalty: Option<f64>,
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    /// JSON document that parses back to this configuration.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }

    /// Applies flag overrides and validates the result again.
    pub fn with_overrides(&self, o: &Overrides) -> Result<RunConfig, ConfigError> {
        let mut cfg = self.clone();
        if let Some(mode) = o.mode {
            cfg.mode = mode;
        }
        if let Some(n) = o.lines {
            cfg.lines = n;
        }
        if let Some(m) = o.angles {
            cfg.angles = m;
        }
        if let Some(k) = o.penalty {
            cfg.penalty = k;
        }
        if let Some(t) = o.tol {
            cfg.tol = t;
        }
        if let Some(i) = o.max_iters {
            cfg.optimizer.max_iters = i;
        }
        if let Some(dir) = &o.out {
            cfg.out = Some(dir.clone());
        }
        parse_config(&cfg.to_json())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_document_gets_defaults() {
        let c = parse_config(r#"{"mode": "forward", "R": 2, "boundary": {"preset": "annulus-log"}}"#).unwrap();
        assert_eq!((c.lines, c.angles), (10, 64));
        assert_eq!(c.tol, 1e-10);
        assert_eq!(c.margin, 0.04);
        assert_eq!(c.penalty, 250.0);
        assert_eq!(c.shape0, FunctionSpec::Constant(1.0));
        assert_eq!(c.boundary.inner, FunctionSpec::Constant(0.0));
    }

    #[test]
    fn missing_radius_is_named() {
        let e = parse_config(r#"{"mode": "forward", "boundary": {"preset": "annulus-log"}}"#).unwrap_err();
        assert_eq!(e.to_string(), "missing field R");
    }

    #[test]
    fn r30_preset_expands() {
        let c = parse_config(r#"{"preset": "paper-3.1"}"#).unwrap();
        assert_eq!((c.outer_radius, c.penalty), (30.0, 250.0));
        assert_eq!(c.mode, Mode::Inverse);
        assert_eq!(c.boundary.inner, expr("0.5*cos(pi*x) + 0.8"));
        assert_eq!(c.boundary.outer, expr("0.5*sin(2*pi*x) + 1.0"));
        assert_eq!(c.boundary.flux, Some(expr("0.3*(cos(2*pi*x)/2 + 1.0)")));
        let w = c.boundary.flux.unwrap().sample(4, "flux").unwrap();
        assert!((w[0] - 0.45).abs() < 1e-15);
        assert!((w[2] - 0.15).abs() < 1e-15);
    }

    #[test]
    fn unknown_preset_lists_presets() {
        let e = parse_config(r#"{"preset": "nope"}"#).unwrap_err().to_string();
        for p in PRESETS {
            assert!(e.contains(p), "{e}");
        }
    }

    #[test]
    fn bad_expression_reports_position() {
        let e = parse_config(r#"{"R": 2, "boundary": {"inner": "1 + sin(", "outer": 1}}"#).unwrap_err();
        match e {
            ConfigError::Expression { field, source } => {
                assert_eq!(field, "boundary.inner");
                assert_eq!(source.position, 9);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn rejects_invalid_numbers() {
        for doc in [
            r#"{"R": -1, "boundary": {"preset": "annulus-log"}}"#,
            r#"{"R": 2, "K": -1, "boundary": {"preset": "annulus-log"}}"#,
            r#"{"R": 2, "N": 1, "boundary": {"preset": "annulus-log"}}"#,
            r#"{"R": 2, "M": 6, "boundary": {"preset": "annulus-log"}}"#,
            r#"{"R": 2, "M": 9, "boundary": {"preset": "annulus-log"}}"#,
            r#"{"R": 2, "boundary": {"preset": "annulus-log"}, "bogus": 1}"#,
            r#"{"R": 2}"#,
        ] {
            assert!(parse_config(doc).is_err(), "{doc}");
        }
    }

    #[test]
    fn explicit_fields_override_preset() {
        let c = parse_config(r#"{"preset": "paper-3.1", "K": 10, "N": 12}"#).unwrap();
        assert_eq!((c.penalty, c.lines, c.outer_radius), (10.0, 12, 30.0));
    }

    #[test]
    fn optimizer_keys_merge_over_preset() {
        let c = parse_config(r#"{"preset": "synthetic-recovery", "optimizer": {"max_iters": 7}}"#).unwrap();
        assert_eq!(c.optimizer.max_iters, 7);
        assert_eq!(c.optimizer.mode, OptimizerMode::Alternating);
        assert!(parse_config(r#"{"preset": "paper-3.1", "optimizer": {"bogus": 1}}"#).is_err());
    }

    #[test]
    fn samples_must_match_grid() {
        let f = FunctionSpec::Samples(vec![1.0; 4]);
        assert!(f.sample(8, "inner").is_err());
        assert_eq!(f.sample(4, "inner").unwrap(), vec![1.0; 4]);
    }

    #[test]
    fn presets_round_trip() {
        for p in PRESETS {
            let c = parse_config(&format!(r#"{{"preset": "{p}"}}"#)).unwrap();
            assert_eq!(parse_config(&c.to_json()).unwrap(), c, "{p}");
        }
    }

    #[test]
    fn overrides_are_validated() {
        let cfg = parse_config(r#"{"preset": "annulus-log"}"#).unwrap();
        let o = Overrides {
            lines: Some(12),
            penalty: Some(5.0),
            max_iters: Some(7),
            ..Overrides::default()
        };
        let c2 = cfg.with_overrides(&o).unwrap();
        assert_eq!((c2.lines, c2.penalty, c2.optimizer.max_iters), (12, 5.0, 7));
        assert_eq!(c2.outer_radius, cfg.outer_radius);
        let bad = Overrides {
            angles: Some(9),
            ..Overrides::default()
        };
        assert!(matches!(cfg.with_overrides(&bad), Err(ConfigError::Invalid { field: "M", .. })));
    }
}
