//! JSON and CSV formats for points, states, invariants and trajectories.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{Sample, Snapshot, Space};
use crate::linalg::{self, Mat};
use crate::phase::PhasePoint;

/// `{"n": int, "A": [[...]], "B": [[...]]}` with row-major matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePointJson {
    pub n: usize,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
}

impl From<&PhasePoint> for PhasePointJson {
    fn from(p: &PhasePoint) -> Self {
        Self {
            n: p.n(),
            a: linalg::to_rows(p.a()),
            b: linalg::to_rows(p.b()),
        }
    }
}

impl TryFrom<PhasePointJson> for PhasePoint {
    type Error = Error;

    fn try_from(j: PhasePointJson) -> Result<Self> {
        let parse = |rows: &[Vec<f64>], name: &str| -> Result<Mat> {
            if rows.len() != j.n || rows.iter().any(|r| r.len() != j.n) {
                return Err(Error::Parse(format!("{name} must be {0}x{0}", j.n)));
            }
            linalg::from_rows(rows).ok_or_else(|| Error::Parse(format!("{name} is ragged")))
        };
        PhasePoint::new(parse(&j.a, "A")?, parse(&j.b, "B")?)
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

/// Pretty JSON with a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json_string(value)?).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn read_phase_point(path: &Path) -> Result<PhasePoint> {
    read_json::<PhasePointJson>(path)?.try_into()
}

/// Shortest decimal string that parses back to the same double.
pub fn format_float(v: f64) -> String {
    format!("{v:?}")
}

pub fn trajectory_header(space: Space, n: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    match space {
        Space::Locus => {
            h.extend((1..=n).map(|i| format!("x{i}")));
            h.extend((1..=n).map(|i| format!("y{i}")));
        }
        Space::Section => {
            for m in ["A", "B"] {
                for i in 1..=n {
                    h.extend((1..=n).map(|j| format!("{m}{i}_{j}")));
                }
            }
        }
    }
    h.extend((1..=n).map(|i| format!("I{i}")));
    h
}

pub fn write_trajectory_csv<W: Write>(out: W, space: Space, n: usize, samples: &[Sample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trajectory_header(space, n))?;
    for s in samples {
        let mut row = vec![format_float(s.t)];
        match &s.state {
            Snapshot::Locus { x, y } => row.extend(x.iter().chain(y).map(|v| format_float(*v))),
            Snapshot::Section { a, b } => {
                for m in [a, b] {
                    for i in 0..n {
                        row.extend((0..n).map(|j| format_float(m[(i, j)])));
                    }
                }
            }
        }
        row.extend(s.i.iter().map(|v| format_float(*v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `<dir>/<stem>.drift.json` next to the trajectory file.
pub fn sidecar_path(output: &Path) -> PathBuf {
    let stem = output
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "trajectory".into());
    output.with_file_name(format!("{stem}.drift.json"))
}
