//! CSV, JSON and SVG emission. Floats are written with 17 significant digits
//! and LF line endings so that identical runs produce identical bytes.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use thiserror::Error;

use crate::run::RunArtifacts;

#[derive(Debug, Error)]
#[error("cannot write {path}: {source}")]
pub struct OutputError {
    pub path: PathBuf,
    #[source]
    pub source: io::Error,
}

/// `{:.16e}`, i.e. 17 significant digits.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Pretty JSON whose floats carry 17 significant digits.
struct FixedDigits(PrettyFormatter<'static>);

impl Formatter for FixedDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(format_float(value).as_bytes())
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedDigits(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("in-memory JSON serialization");
    buf.push(b'\n');
    String::from_utf8(buf).expect("JSON output is UTF-8")
}

fn csv_writer(buf: &mut Vec<u8>) -> csv::Writer<&mut Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(buf)
}

pub fn shape_csv(radii: &[f64]) -> String {
    let m = radii.len();
    let mut buf = Vec::new();
    {
        let mut w = csv_writer(&mut buf);
        w.write_record(["x", "theta", "r"]).expect("in-memory CSV");
        for (j, &r) in radii.iter().enumerate() {
            let x = j as f64 / m as f64;
            w.write_record([format_float(x), format_float(TAU * x), format_float(r)])
                .expect("in-memory CSV");
        }
        w.flush().expect("in-memory CSV");
    }
    String::from_utf8(buf).expect("CSV output is UTF-8")
}

pub fn field_csv(field: &[Vec<f64>]) -> String {
    let intervals = field.len().saturating_sub(1).max(1);
    let mut buf = Vec::new();
    {
        let mut w = csv_writer(&mut buf);
        w.write_record(["n", "j", "t", "x", "u"]).expect("in-memory CSV");
        for (n, row) in field.iter().enumerate() {
            let m = row.len();
            for (j, &u) in row.iter().enumerate() {
                w.write_record([
                    n.to_string(),
                    j.to_string(),
                    format_float(n as f64 / intervals as f64),
                    format_float(j as f64 / m as f64),
                    format_float(u),
                ])
                .expect("in-memory CSV");
            }
        }
        w.flush().expect("in-memory CSV");
    }
    String::from_utf8(buf).expect("CSV output is UTF-8")
}

/// Closed polygon through the inner boundary samples, with the outer circle.
pub fn shape_svg(radii: &[f64], outer_radius: f64) -> String {
    const HALF: f64 = 220.0;
    const SCALE: f64 = 200.0;
    let s = SCALE / outer_radius;
    let m = radii.len();
    let mut path = String::new();
    for (j, &r) in radii.iter().enumerate() {
        let theta = TAU * j as f64 / m as f64;
        let (x, y) = (HALF + s * r * theta.cos(), HALF - s * r * theta.sin());
        let cmd = if j == 0 { 'M' } else { 'L' };
        let _ = write!(path, "{cmd}{x:.6},{y:.6} ");
    }
    path.push('Z');
    let size = 2.0 * HALF;
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{size:.0}\" height=\"{size:.0}\" viewBox=\"0 0 {size:.0} {size:.0}\">\n\
         <title>Inner boundary (M = {m}) inside the outer circle R = {outer_radius}</title>\n\
         <circle cx=\"{HALF:.6}\" cy=\"{HALF:.6}\" r=\"{SCALE:.6}\" fill=\"none\" stroke=\"#888888\" stroke-dasharray=\"6 4\"/>\n\
         <path d=\"{path}\" fill=\"#dce9f5\" stroke=\"#1f4e79\" stroke-width=\"1.5\"/>\n\
         </svg>\n"
    )
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, OutputError> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|source| OutputError {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Writes `summary.json` and, when the run produced a shape, `shape.csv`,
/// `field.csv` and `shape.svg`. Returns the written paths.
pub fn emit_outputs(artifacts: &RunArtifacts, dir: &Path) -> Result<Vec<PathBuf>, OutputError> {
    std::fs::create_dir_all(dir).map_err(|source| OutputError {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    if !artifacts.radii.is_empty() {
        written.push(write_file(dir, "shape.csv", &shape_csv(&artifacts.radii))?);
        written.push(write_file(dir, "shape.svg", &shape_svg(&artifacts.radii, artifacts.outer_radius))?);
    }
    if !artifacts.field.is_empty() {
        written.push(write_file(dir, "field.csv", &field_csv(&artifacts.field))?);
    }
    written.push(write_file(dir, "summary.json", &to_json(&artifacts.summary))?);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_rows(csv: &str) -> Vec<Vec<f64>> {
        csv.lines()
            .skip(1)
            .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
            .collect()
    }

    #[test]
    fn circle_shape_rows() {
        let csv = shape_csv(&[1.0; 4]);
        assert!(csv.starts_with("x,theta,r\n"));
        assert!(!csv.contains('\r'));
        let rows = parse_rows(&csv);
        let pi = std::f64::consts::PI;
        let expected = [[0.0, 0.0, 1.0], [0.25, pi / 2.0, 1.0], [0.5, pi, 1.0], [0.75, 1.5 * pi, 1.0]];
        assert_eq!(rows.len(), 4);
        for (row, want) in rows.iter().zip(expected) {
            for (a, b) in row.iter().zip(want) {
                assert!((a - b).abs() <= 1e-15 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(1.0), "1.0000000000000000e0");
        let v: f64 = format_float(std::f64::consts::PI).parse().unwrap();
        assert_eq!(v, std::f64::consts::PI);
    }

    #[test]
    fn field_rows_and_coordinates() {
        let field = vec![vec![0.0, 1.0], vec![2.0, 3.0], vec![4.0, 5.0]];
        let csv = field_csv(&field);
        let rows = parse_rows(&csv);
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[3], vec![1.0, 1.0, 0.5, 0.5, 3.0]);
    }

    #[test]
    fn json_floats_and_nulls() {
        #[derive(Serialize)]
        struct S {
            a: f64,
            b: f64,
            c: usize,
        }
        let s = to_json(&S { a: 0.5, b: f64::NAN, c: 3 });
        assert!(s.contains("\"a\": 5.0000000000000000e-1"));
        assert!(s.contains("\"b\": null"));
        assert!(s.contains("\"c\": 3"));
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["a"], 0.5);
    }

    #[test]
    fn svg_has_one_closed_path_and_circle() {
        let svg = shape_svg(&[1.0, 1.2, 1.1, 0.9, 1.0, 1.3, 1.0, 0.8], 3.0);
        assert_eq!(svg.matches("<path").count(), 1);
        assert_eq!(svg.matches("<circle").count(), 1);
        let d = svg.split("d=\"").nth(1).unwrap().split('"').next().unwrap();
        assert_eq!(d.matches(['M', 'L']).count(), 8);
        assert!(d.ends_with('Z'));
    }
}
