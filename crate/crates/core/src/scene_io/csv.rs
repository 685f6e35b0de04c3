//! Per-step diagnostics as CSV.
//!
//! The first line is the format tag `# vortexflow diagnostics v1`, the
//! second the column header, then one row per step:
//!
//! - `step`, `t`
//! - `circulation` (2D) or `circulation_x/_y/_z` (3D): `Σ ω h^d`
//! - `enstrophy` (`Σ |ω|² h^d`), `liquid_volume` (`Σ H(φ/ε) h^d`),
//!   `particles`, `penalization_residual`
//! - per body `k`: position `body{k}_x,_y[,_z]`, rotation `body{k}_angle`
//!   (2D) or quaternion `body{k}_qw,_qx,_qy,_qz` (3D), velocity
//!   `body{k}_ux,_uy[,_uz]`, angular velocity `body{k}_omega` (2D) or
//!   `body{k}_wx,_wy,_wz` (3D)
//! - optionally `time_<category>` wall-clock seconds for the step
//!
//! Numbers use the shortest representation that reads back exactly.
//! Timing columns are off by default because they differ between runs.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::solver::{Category, Diagnostics};

pub const CSV_TAG: &str = "# vortexflow diagnostics v1";

/// Column set of a run; fixed for all its rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CsvLayout {
    pub dim: usize,
    pub bodies: usize,
    pub timings: bool,
}

const AXES: [&str; 3] = ["x", "y", "z"];

impl CsvLayout {
    pub fn header(&self) -> Vec<String> {
        let d = self.dim;
        let mut h: Vec<String> = vec!["step".into(), "t".into()];
        if d == 2 {
            h.push("circulation".into());
        } else {
            h.extend(AXES.iter().map(|a| format!("circulation_{a}")));
        }
        for c in ["enstrophy", "liquid_volume", "particles", "penalization_residual"] {
            h.push(c.into());
        }
        for k in 0..self.bodies {
            h.extend(AXES[..d].iter().map(|a| format!("body{k}_{a}")));
            if d == 2 {
                h.push(format!("body{k}_angle"));
            } else {
                h.extend(["qw", "qx", "qy", "qz"].iter().map(|q| format!("body{k}_{q}")));
            }
            h.extend(AXES[..d].iter().map(|a| format!("body{k}_u{a}")));
            if d == 2 {
                h.push(format!("body{k}_omega"));
            } else {
                h.extend(AXES.iter().map(|a| format!("body{k}_w{a}")));
            }
        }
        if self.timings {
            h.extend(Category::ALL.iter().map(|c| format!("time_{}", c.key())));
        }
        h
    }

    pub fn row(&self, d: &Diagnostics) -> String {
        let dim = self.dim;
        let mut v: Vec<String> = vec![d.step.to_string(), format!("{:?}", d.t)];
        v.extend(d.circulation.iter().map(|c| format!("{c:?}")));
        v.push(format!("{:?}", d.enstrophy));
        v.push(format!("{:?}", d.liquid_volume));
        v.push(d.particles.to_string());
        v.push(format!("{:?}", d.penalization_residual));
        for b in d.bodies.iter().take(self.bodies) {
            v.extend(b.position[..dim].iter().map(|x| format!("{x:?}")));
            if dim == 2 {
                // Rotation about z: q = (cos θ/2, 0, 0, sin θ/2).
                let angle = 2.0 * b.rotation[3].atan2(b.rotation[0]);
                v.push(format!("{angle:?}"));
            } else {
                v.extend(b.rotation.iter().map(|x| format!("{x:?}")));
            }
            v.extend(b.velocity[..dim].iter().map(|x| format!("{x:?}")));
            if dim == 2 {
                v.push(format!("{:?}", b.omega[2]));
            } else {
                v.extend(b.omega.iter().map(|x| format!("{x:?}")));
            }
        }
        if self.timings {
            v.extend(Category::ALL.iter().map(|&c| format!("{:?}", d.timers.get(c))));
        }
        v.join(",")
    }
}

/// Streams rows to a file as the run progresses.
pub struct DiagnosticsWriter {
    path: PathBuf,
    out: BufWriter<File>,
    layout: CsvLayout,
}

impl DiagnosticsWriter {
    pub fn create(path: &Path, layout: CsvLayout) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = DiagnosticsWriter {
            path: path.to_path_buf(),
            out: BufWriter::new(file),
            layout,
        };
        let header = layout.header().join(",");
        w.line(&format!("{CSV_TAG}\n{header}"))?;
        Ok(w)
    }

    fn line(&mut self, s: &str) -> Result<()> {
        writeln!(self.out, "{s}").map_err(|e| Error::io(&self.path, e))
    }

    pub fn write(&mut self, d: &Diagnostics) -> Result<()> {
        let row = self.layout.row(d);
        self.line(&row)
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))
    }
}

/// Whole CSV text for `rows`.
pub fn diagnostics_csv(rows: &[Diagnostics], layout: CsvLayout) -> String {
    let mut s = format!("{CSV_TAG}\n{}\n", layout.header().join(","));
    for r in rows {
        s.push_str(&layout.row(r));
        s.push('\n');
    }
    s
}

pub fn write_diagnostics(rows: &[Diagnostics], layout: CsvLayout, path: &Path) -> Result<()> {
    std::fs::write(path, diagnostics_csv(rows, layout)).map_err(|e| Error::io(path, e))
}

/// Parsed diagnostics file.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl DiagnosticsTable {
    pub fn parse(text: &str) -> Result<Self> {
        let bad = |message: String| Error::Parse {
            what: "diagnostics CSV".into(),
            message,
        };
        let mut lines = text.lines();
        if lines.next() != Some(CSV_TAG) {
            return Err(bad(format!("first line must be `{CSV_TAG}`")));
        }
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| bad("missing header".into()))?
            .split(',')
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let row: Vec<f64> = line
                .split(',')
                .map(|w| w.parse::<f64>().map_err(|_| bad(format!("row {}: bad number `{w}`", i + 1))))
                .collect::<Result<_>>()?;
            if row.len() != header.len() {
                return Err(bad(format!("row {} has {} columns, header has {}", i + 1, row.len(), header.len())));
            }
            rows.push(row);
        }
        Ok(DiagnosticsTable { header, rows })
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[c]).collect())
    }
}
