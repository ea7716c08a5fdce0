use std::path::Path;
use std::process::Command;

use gmol_shape::config::parse_config;
use proptest::prelude::*;
use serde_json::json;

fn function_spec() -> impl Strategy<Value = serde_json::Value> {
    prop_oneof![
        (-3.0..3.0f64).prop_map(|v| json!(v)),
        (0.0..1.0f64, 1u32..4).prop_map(|(a, k)| json!(format!("{a}*cos({k}*2*pi*x) + 1"))),
        Just(json!("0.5*sin(2*pi*x) - x*0")),
    ]
}

fn document() -> impl Strategy<Value = serde_json::Value> {
    (
        prop::sample::select(vec!["forward", "inverse", "validate"]),
        2.0..40.0f64,
        prop::option::of(0.0..1e3f64),
        2usize..30,
        (4usize..40).prop_map(|h| 2 * h),
        prop::option::of(1e-12..1e-6f64),
        (function_spec(), function_spec(), function_spec()),
        prop::option::of((1usize..500, prop::bool::ANY, 0.0..1.0f64)),
        prop::option::of(0u64..1000),
    )
        .prop_map(|(mode, r, k, n, m, tol, (inner, outer, flux), opt, seed)| {
            let mut doc = json!({
                "mode": mode, "R": r, "N": n, "M": m,
                "boundary": {"inner": inner, "outer": outer, "flux": flux},
            });
            if let Some(k) = k {
                doc["K"] = json!(k);
            }
            if let Some(t) = tol {
                doc["tol"] = json!(t);
            }
            if let Some((iters, alt, smooth)) = opt {
                doc["optimizer"] = json!({
                    "max_iters": iters,
                    "mode": if alt { "alternating" } else { "joint" },
                    "smoothing": smooth,
                });
            }
            if let Some(s) = seed {
                doc["seed"] = json!(s);
            }
            doc
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn config_round_trips(doc in document()) {
        let config = parse_config(&doc.to_string()).unwrap();
        let again = parse_config(&config.to_json()).unwrap();
        prop_assert_eq!(&again, &config);
        prop_assert_eq!(again.to_json(), config.to_json());
    }
}

#[test]
fn presets_round_trip_with_overrides() {
    for preset in ["paper-3.1", "annulus-log", "synthetic-recovery"] {
        let config = parse_config(&format!(r#"{{"preset": "{preset}", "N": 12}}"#)).unwrap();
        assert_eq!(parse_config(&config.to_json()).unwrap(), config, "{preset}");
    }
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gmol-shape"))
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn forward_run_is_byte_stable() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), r#"{"preset": "annulus-log"}"#);
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let out = tmp.path().join(name);
        let status = binary()
            .args(["forward", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .args(["--lines", "20", "--angles", "32"])
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        outputs.push(out);
    }
    for file in ["shape.csv", "field.csv", "summary.json", "shape.svg"] {
        let a = std::fs::read(outputs[0].join(file)).unwrap();
        let b = std::fs::read(outputs[1].join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }
    let field = std::fs::read_to_string(outputs[0].join("field.csv")).unwrap();
    assert_eq!(field.lines().count(), 1 + 21 * 32);
    let shape = std::fs::read_to_string(outputs[0].join("shape.csv")).unwrap();
    assert_eq!(shape.lines().count(), 1 + 32);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(outputs[0].join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["N"], 20);
    assert!(summary["J"].as_f64().unwrap() > 0.0);
}

#[test]
fn configuration_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        (r#"{"mode": "forward", "boundary": {"inner": 0, "outer": 1}}"#, "missing field R"),
        (r#"{"preset": "nope"}"#, "paper-3.1"),
        (r#"{"R": 2, "boundary": {"inner": "sin(", "outer": 1}}"#, "position"),
    ];
    for (text, needle) in cases {
        let config = write_config(tmp.path(), text);
        let out = binary().args(["forward", "--config"]).arg(&config).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{text}");
        let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
        assert_eq!(err["error"], "configuration");
        assert!(err["message"].as_str().unwrap().contains(needle), "{err}");
    }
    let config = write_config(tmp.path(), r#"{"preset": "annulus-log"}"#);
    let out = binary().args(["forward", "--config"]).arg(&config).args(["--angles", "9"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_config_file_is_reported() {
    let out = binary().args(["validate", "--config", "/nonexistent/config.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(err["message"].as_str().unwrap().contains("/nonexistent/config.json"));
}

#[test]
fn validate_passes_and_exits_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), r#"{"preset": "annulus-log"}"#);
    let out = binary().args(["validate", "--config"]).arg(&config).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let checks = summary["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 5);
    assert!(checks.iter().all(|c| c["passed"] == true));
}
