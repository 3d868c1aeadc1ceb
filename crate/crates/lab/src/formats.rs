//! On-disk formats: curve JSON, driving-function CSV, conformal-map JSON and
//! the packed binary path batch.
//!
//! Curve JSON:
//! `{"chart": "H"|"D", "points": [[re, im], ...], "marked": {"start": [re, im] | "inf", "end": ..., "target": [re, im]}}`.
//!
//! Driving CSV: comment lines `# kind=chordal|radial` and `# config=<json>`,
//! then a `t,value` header and one row per grid point.
//!
//! Packed batch: little-endian `f64`, the grid (`grid_len` values) followed by
//! the values of each path in order. Lengths live in the manifest.

use std::path::Path;

use loewner_lab_core::conformal::{Chart, CurvePath, ExtPoint, MapChain, Marked, Primitive};
use loewner_lab_core::loewner::{DrivingFunction, DrivingKind};
use loewner_lab_core::verifier::{chordal_perturbation, polynomial_deformation, radial_perturbation};
use loewner_lab_core::C64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, LabResult};

pub fn read_text(path: &Path) -> LabResult<String> {
    std::fs::read_to_string(path).map_err(|e| LabError::io(path.display().to_string(), e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> LabResult<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|source| LabError::Json {
        path: path.display().to_string(),
        source,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointJson {
    Finite([f64; 2]),
    /// `"inf"` or `"infinity"`.
    Named(String),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MarkedJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<PointJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<PointJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveJson {
    pub chart: String,
    pub points: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marked: Option<MarkedJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
}

fn c64(p: [f64; 2]) -> C64 {
    C64::new(p[0], p[1])
}

fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

fn ext_from_json(p: &PointJson, what: &str) -> Result<ExtPoint, String> {
    match p {
        PointJson::Finite(z) => Ok(ExtPoint::Finite(c64(*z))),
        PointJson::Named(s) if s == "inf" || s == "infinity" => Ok(ExtPoint::Infinity),
        PointJson::Named(s) => Err(format!("{what}: unknown point {s:?}")),
    }
}

fn ext_to_json(p: ExtPoint) -> PointJson {
    match p {
        ExtPoint::Finite(z) => PointJson::Finite(pair(z)),
        ExtPoint::Infinity => PointJson::Named("inf".into()),
    }
}

pub fn parse_chart(s: &str) -> Result<Chart, String> {
    match s {
        "H" | "h" => Ok(Chart::H),
        "D" | "d" => Ok(Chart::D),
        _ => Err(format!("unknown chart {s:?} (expected \"H\" or \"D\")")),
    }
}

impl CurveJson {
    pub fn to_curve(&self) -> Result<CurvePath, String> {
        let chart = parse_chart(&self.chart)?;
        if self.points.is_empty() {
            return Err("curve has no points".into());
        }
        if self.points.iter().flatten().any(|x| !x.is_finite()) {
            return Err("curve points must be finite".into());
        }
        let mut c = CurvePath::new(chart, self.points.iter().map(|&p| c64(p)).collect());
        if let Some(m) = &self.marked {
            let mut marked = c.marked;
            if let Some(s) = &m.start {
                marked.start = Some(ext_from_json(s, "marked.start")?);
            }
            if let Some(e) = &m.end {
                marked.end = Some(ext_from_json(e, "marked.end")?);
            }
            marked.target = m.target.map(c64);
            if marked.target.is_some() && m.end.is_none() {
                marked.end = None;
            }
            c = c.with_marked(marked);
        }
        if let Some(t) = &self.times {
            if t.len() != c.len() {
                return Err("times and points differ in length".into());
            }
            c = c.with_times(t.clone());
        }
        Ok(c)
    }

    pub fn from_curve(c: &CurvePath) -> Self {
        let Marked { start, end, target } = c.marked;
        CurveJson {
            chart: c.chart.as_str().into(),
            points: c.points.iter().map(|&z| pair(z)).collect(),
            marked: Some(MarkedJson {
                start: start.map(ext_to_json),
                end: end.map(ext_to_json),
                target: target.map(pair),
            }),
            times: c.times.clone(),
        }
    }
}

pub fn read_curve(path: &Path) -> LabResult<CurvePath> {
    let j: CurveJson = read_json(path)?;
    j.to_curve().map_err(|m| LabError::format(path.display().to_string(), m))
}

pub fn parse_kind(s: &str) -> Result<DrivingKind, String> {
    match s.trim() {
        "chordal" => Ok(DrivingKind::Chordal),
        "radial" => Ok(DrivingKind::Radial),
        other => Err(format!("unknown driving kind {other:?}")),
    }
}

/// Parses driving CSV text; `name` is used in error messages.
pub fn parse_driving(text: &str, name: &str) -> LabResult<DrivingFunction> {
    let bad = |m: String| LabError::format(name, m);
    let mut kind = None;
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        if let Some(k) = line.trim_start_matches('#').trim().strip_prefix("kind=") {
            kind = Some(parse_kind(k).map_err(bad)?);
        }
    }
    let kind = kind.ok_or_else(|| bad("missing '# kind=chordal|radial' header".into()))?;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    if headers.len() != 2 || &headers[0] != "t" || &headers[1] != "value" {
        return Err(bad("expected header 't,value'".into()));
    }
    let (mut grid, mut values) = (Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let num = |j: usize| -> LabResult<f64> {
            rec[j]
                .parse::<f64>()
                .map_err(|e| bad(format!("row {}: {e}", i + 1)))
        };
        grid.push(num(0)?);
        values.push(num(1)?);
    }
    DrivingFunction::new(kind, grid, values).map_err(|e| bad(e.to_string()))
}

pub fn read_driving(path: &Path) -> LabResult<DrivingFunction> {
    parse_driving(&read_text(path)?, &path.display().to_string())
}

/// Driving CSV with the run configuration in a comment line.
pub fn driving_csv(d: &DrivingFunction, config: &serde_json::Value) -> String {
    let mut out = format!("# kind={}\n# config={}\n", d.kind.as_str(), config);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "value"]).expect("in-memory write");
    for (t, v) in d.grid.iter().zip(&d.values) {
        w.write_record([t.to_string(), v.to_string()]).expect("in-memory write");
    }
    out.push_str(&String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii csv"));
    out
}

pub fn pack_paths(grid: &[f64], paths: &[DrivingFunction]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 * grid.len() * (paths.len() + 1));
    for x in grid.iter().chain(paths.iter().flat_map(|p| p.values.iter())) {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

/// Inverse of [`pack_paths`]: the grid and one value vector per path.
pub fn unpack_paths(bytes: &[u8], grid_len: usize, paths: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>), String> {
    if bytes.len() != 8 * grid_len * (paths + 1) {
        return Err(format!("expected {} bytes, found {}", 8 * grid_len * (paths + 1), bytes.len()));
    }
    let xs: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let grid = xs[..grid_len].to_vec();
    let values = xs[grid_len..].chunks(grid_len).map(|c| c.to_vec()).collect();
    Ok((grid, values))
}

/// Conformal map description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MapJson {
    Identity,
    Rotation {
        theta: f64,
    },
    /// `(a z + b) / (c z + d)` with complex `[re, im]` coefficients.
    Mobius {
        a: [f64; 2],
        b: [f64; 2],
        c: [f64; 2],
        d: [f64; 2],
    },
    /// `sum_k c_k z^k` acting on the disk directly.
    Polynomial {
        coeffs: Vec<[f64; 2]>,
    },
    /// A real polynomial conjugated into the disk through `(z + i) / (1 + i z)`.
    HalfPlanePolynomial {
        coeffs: Vec<f64>,
    },
    /// `w + delta (w^2 - 1)` in half-plane coordinates.
    ChordalPerturbation {
        delta: f64,
    },
    /// `w + delta (w^2 + 1)(a + b w)` in half-plane coordinates.
    RadialPerturbation {
        delta: f64,
        a: f64,
        #[serde(default)]
        b: f64,
    },
    /// Applied first to last.
    Chain {
        steps: Vec<MapJson>,
    },
}

impl MapJson {
    pub fn to_chain(&self) -> MapChain {
        match self {
            MapJson::Identity => MapChain::identity(),
            MapJson::Rotation { theta } => MapChain::single(Primitive::rotation(*theta)),
            MapJson::Mobius { a, b, c, d } => MapChain::single(Primitive::mobius(c64(*a), c64(*b), c64(*c), c64(*d))),
            MapJson::Polynomial { coeffs } => MapChain::single(Primitive::Polynomial {
                coeffs: coeffs.iter().map(|&c| c64(c)).collect(),
            }),
            MapJson::HalfPlanePolynomial { coeffs } => polynomial_deformation(coeffs),
            MapJson::ChordalPerturbation { delta } => chordal_perturbation(*delta),
            MapJson::RadialPerturbation { delta, a, b } => radial_perturbation(*delta, *a, *b),
            MapJson::Chain { steps } => steps
                .iter()
                .fold(MapChain::identity(), |acc, s| acc.then(&s.to_chain())),
        }
    }
}

pub fn read_map(path: &Path) -> LabResult<MapChain> {
    Ok(read_json::<MapJson>(path)?.to_chain())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn driving_csv_roundtrip() {
        let d = DrivingFunction::from_fn(DrivingKind::Radial, 1.0, 10, |t| 0.3 * t.sin()).unwrap();
        let text = driving_csv(&d, &serde_json::json!({"seed": 1}));
        assert!(text.starts_with("# kind=radial\n"));
        assert_eq!(parse_driving(&text, "x").unwrap(), d);
    }

    #[test]
    fn driving_csv_requires_kind() {
        assert!(parse_driving("t,value\n0,0\n", "x").is_err());
        assert!(parse_driving("# kind=spiral\nt,value\n0,0\n", "x").is_err());
        assert!(parse_driving("# kind=chordal\nt,value\n0,abc\n", "x").is_err());
    }

    #[test]
    fn curve_json_roundtrip() {
        let text = r#"{"chart": "H", "points": [[0, 0], [0, 1]], "marked": {"start": [0, 0], "end": "inf"}}"#;
        let c = serde_json::from_str::<CurveJson>(text).unwrap().to_curve().unwrap();
        assert_eq!(c.marked.end, Some(ExtPoint::Infinity));
        let back = CurveJson::from_curve(&c).to_curve().unwrap();
        assert_eq!(back, c);
        assert!(serde_json::from_str::<CurveJson>(r#"{"chart": "Q", "points": [[0, 0]]}"#)
            .unwrap()
            .to_curve()
            .is_err());
    }

    #[test]
    fn packed_roundtrip() {
        let grid = vec![0.0, 0.5, 1.0];
        let p: Vec<DrivingFunction> = (0..2)
            .map(|k| DrivingFunction::new(DrivingKind::Chordal, grid.clone(), vec![0.0, k as f64, -1.0]).unwrap())
            .collect();
        let bytes = pack_paths(&grid, &p);
        let (g, v) = unpack_paths(&bytes, 3, 2).unwrap();
        assert_eq!(g, grid);
        assert_eq!(v[1], p[1].values);
        assert!(unpack_paths(&bytes[1..], 3, 2).is_err());
    }

    #[test]
    fn map_json_identity() {
        let m: MapJson = serde_json::from_str(r#"{"kind": "identity"}"#).unwrap();
        assert!(m.to_chain().is_empty());
        let m: MapJson = serde_json::from_str(r#"{"kind": "chordal-perturbation", "delta": 0.1}"#).unwrap();
        let z = C64::new(1.0, 0.0);
        assert!((m.to_chain().eval(z).unwrap() - z).norm() < 1e-12);
    }
}
