//! Legacy VTK (ASCII, `STRUCTURED_POINTS`) frames.
//!
//! Layout, one item per line:
//!
//! ```text
//! # vtk DataFile Version 3.0
//! vortexflow step 12 t 0.12
//! ASCII
//! DATASET STRUCTURED_POINTS
//! DIMENSIONS nx ny nz
//! ORIGIN ox oy oz
//! SPACING h h h
//! POINT_DATA nx*ny*nz
//! SCALARS phi double 1
//! LOOKUP_TABLE default
//! <one value per line>
//! VECTORS u double
//! <three values per line>
//! ```
//!
//! Nodes are listed with x varying fastest; `nz = 1` in 2D, where vectors
//! get a zero third component. Values are written with 17 significant
//! digits, so reading a frame back returns the exact `f64`s.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};
use crate::solver::SimulationState;

use super::scene::FrameField;

/// One named node field: 1 component (scalar) or 3 (vector).
#[derive(Clone, Debug, PartialEq)]
pub struct FrameData {
    pub name: String,
    pub ncomp: usize,
    /// Node-major, components interleaved.
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VtkFrame {
    pub title: String,
    pub dims: [usize; 3],
    pub origin: [f64; 3],
    pub spacing: [f64; 3],
    pub fields: Vec<FrameData>,
}

impl VtkFrame {
    pub fn field(&self, name: &str) -> Option<&FrameData> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn points(&self) -> usize {
        self.dims.iter().product()
    }
}

/// `frame_{step:06}.vtk` inside `dir`.
pub fn frame_path(dir: &Path, step: usize) -> PathBuf {
    dir.join(format!("frame_{step:06}.vtk"))
}

fn scalar(name: &str, f: &ScalarField) -> FrameData {
    FrameData {
        name: name.into(),
        ncomp: 1,
        values: f.data().to_vec(),
    }
}

fn vector(name: &str, comps: &[&ScalarField], len: usize) -> FrameData {
    let mut values = vec![0.0; 3 * len];
    for (c, f) in comps.iter().enumerate() {
        for (i, v) in f.data().iter().enumerate() {
            values[3 * i + c] = *v;
        }
    }
    FrameData {
        name: name.into(),
        ncomp: 3,
        values,
    }
}

/// Collects the requested fields of a state. With several bodies `phi_s`
/// is their union (pointwise minimum); without bodies it is omitted.
pub fn frame_fields(state: &SimulationState, fields: &[FrameField]) -> Vec<FrameData> {
    let spec = state.spec();
    let len = spec.len();
    let mut out = Vec::new();
    for f in fields {
        match f {
            FrameField::Omega => {
                let w = state.omega();
                if w.ncomp() == 1 {
                    out.push(scalar("omega", w.comp(0)));
                } else {
                    let comps: Vec<&ScalarField> = w.components().iter().collect();
                    out.push(vector("omega", &comps, len));
                }
            }
            FrameField::Velocity => {
                let u = state.velocity();
                let comps: Vec<&ScalarField> = u.components().iter().collect();
                out.push(vector("u", &comps, len));
            }
            FrameField::Phi => out.push(scalar("phi", &state.interface().phi)),
            FrameField::PhiS => {
                let phis = state.body_level_sets();
                if let Some(first) = phis.first() {
                    let mut union = first.data().to_vec();
                    for p in &phis[1..] {
                        for (u, v) in union.iter_mut().zip(p.data()) {
                            *u = u.min(*v);
                        }
                    }
                    out.push(FrameData {
                        name: "phi_s".into(),
                        ncomp: 1,
                        values: union,
                    });
                }
            }
            FrameField::Rho => out.push(scalar("rho", &state.density())),
        }
    }
    out
}

/// Renders a frame as legacy VTK text.
pub fn frame_text(spec: &GridSpec, title: &str, fields: &[FrameData]) -> String {
    let n = spec.n();
    let o = spec.origin();
    let h = spec.h();
    let len = spec.len();
    let mut s = String::with_capacity(64 + len * 26 * fields.len());
    s.push_str("# vtk DataFile Version 3.0\n");
    let title = title.replace('\n', " ");
    let _ = writeln!(s, "{title}");
    s.push_str("ASCII\nDATASET STRUCTURED_POINTS\n");
    let _ = writeln!(s, "DIMENSIONS {} {} {}", n[0], n[1], n[2]);
    let _ = writeln!(s, "ORIGIN {:.16e} {:.16e} {:.16e}", o[0], o[1], o[2]);
    let _ = writeln!(s, "SPACING {h:.16e} {h:.16e} {h:.16e}");
    let _ = writeln!(s, "POINT_DATA {len}");
    for f in fields {
        if f.ncomp == 1 {
            let _ = writeln!(s, "SCALARS {} double 1\nLOOKUP_TABLE default", f.name);
            for v in &f.values {
                let _ = writeln!(s, "{v:.16e}");
            }
        } else {
            let _ = writeln!(s, "VECTORS {} double", f.name);
            for v in f.values.chunks_exact(3) {
                let _ = writeln!(s, "{:.16e} {:.16e} {:.16e}", v[0], v[1], v[2]);
            }
        }
    }
    s
}

/// Writes `frame_{step:06}.vtk` for the current state into `dir`.
pub fn write_frame(state: &SimulationState, fields: &[FrameField], dir: &Path) -> Result<PathBuf> {
    let path = frame_path(dir, state.step_index());
    let title = format!("vortexflow step {} t {}", state.step_index(), state.t());
    let text = frame_text(state.spec(), &title, &frame_fields(state, fields));
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

fn bad(message: impl Into<String>) -> Error {
    Error::Parse {
        what: "VTK frame".into(),
        message: message.into(),
    }
}

fn numbers<const K: usize>(line: Option<&str>, tag: &str) -> Result<[f64; K]> {
    let line = line.ok_or_else(|| bad(format!("missing {tag}")))?;
    let mut words = line.split_whitespace();
    if words.next() != Some(tag) {
        return Err(bad(format!("expected {tag}, got `{line}`")));
    }
    let mut out = [0.0; K];
    for o in &mut out {
        *o = words
            .next()
            .and_then(|w| w.parse().ok())
            .ok_or_else(|| bad(format!("bad {tag} line `{line}`")))?;
    }
    Ok(out)
}

/// Parses a frame written by [`frame_text`].
pub fn read_frame(text: &str) -> Result<VtkFrame> {
    let mut lines = text.lines();
    if !lines.next().unwrap_or("").starts_with("# vtk DataFile") {
        return Err(bad("missing VTK signature"));
    }
    let title = lines.next().ok_or_else(|| bad("missing title"))?.to_string();
    if lines.next() != Some("ASCII") {
        return Err(bad("only ASCII frames are supported"));
    }
    if lines.next() != Some("DATASET STRUCTURED_POINTS") {
        return Err(bad("only STRUCTURED_POINTS datasets are supported"));
    }
    let d: [f64; 3] = numbers(lines.next(), "DIMENSIONS")?;
    let dims = d.map(|v| v as usize);
    let origin = numbers(lines.next(), "ORIGIN")?;
    let spacing = numbers(lines.next(), "SPACING")?;
    let [points] = numbers::<1>(lines.next(), "POINT_DATA")?;
    let points = points as usize;
    if points != dims.iter().product::<usize>() {
        return Err(bad("POINT_DATA does not match DIMENSIONS"));
    }
    let mut fields = Vec::new();
    while let Some(header) = lines.next() {
        if header.trim().is_empty() {
            continue;
        }
        let words: Vec<&str> = header.split_whitespace().collect();
        let (name, ncomp) = match words.as_slice() {
            ["SCALARS", name, "double", "1"] => {
                if lines.next() != Some("LOOKUP_TABLE default") {
                    return Err(bad("expected LOOKUP_TABLE default"));
                }
                (*name, 1)
            }
            ["VECTORS", name, "double"] => (*name, 3),
            _ => return Err(bad(format!("unexpected line `{header}`"))),
        };
        let mut values = Vec::with_capacity(points * ncomp);
        for _ in 0..points {
            let line = lines.next().ok_or_else(|| bad(format!("field {name} is truncated")))?;
            let before = values.len();
            for w in line.split_whitespace() {
                values.push(w.parse::<f64>().map_err(|_| bad(format!("bad number `{w}`")))?);
            }
            if values.len() - before != ncomp {
                return Err(bad(format!("field {name}: expected {ncomp} values per line")));
            }
        }
        fields.push(FrameData {
            name: name.to_string(),
            ncomp,
            values,
        });
    }
    Ok(VtkFrame {
        title,
        dims,
        origin,
        spacing,
        fields,
    })
}
