//! Scene files: a sectioned `key = value` text format.
//!
//! ```text
//! format = 1
//!
//! [domain]
//! dim = 2
//! n = 128 128
//! extent = 1.0 1.0
//!
//! [fluids]
//! rho1 = 1.0
//! nu1 = 0.001
//!
//! [body.0]
//! shape = ball
//! radius = 0.1
//! density = 2.0
//! position = 0.5 0.5
//!
//! [numerics]
//! dt = 0.01
//! duration = 2.5
//! ```
//!
//! `#` starts a comment. Vectors are whitespace-separated and have one
//! entry per domain axis. Unknown sections or keys are errors.
//!
//! Sections and keys (defaults in parentheses):
//!
//! - `[domain]`: `dim` (2 or 3), `n` cells per axis, `extent` per axis
//!   (`extent / n` must be the same on every axis), `origin` (0),
//!   `bc` per axis, `periodic` or `dirichlet` (periodic).
//! - `[fluids]`: `rho1`, `nu1` for fluid 1 (where φ < 0); `rho2`, `nu2`
//!   (same as fluid 1), `tau` (0), `epsilon_factor` (2, in cells), and the
//!   initial level set `phi` (`none`):
//!   - `half_space`: `phi_normal`, `phi_offset`, optional cosine ripple
//!     `phi_amplitude` (0) and `phi_wavenumber` (1) along the first axis.
//!     Fluid 1 lies where `normal·x < offset`.
//!   - `sphere`: `phi_center`, `phi_radius`.
//!   - `box`: `phi_center`, `phi_half`.
//!   - `column`: `phi_center`, `phi_radius`, `phi_height`; a vertical
//!     column (last axis is up) rising from the domain floor.
//!
//!   `phi_invert = true` swaps the two fluids.
//! - `[gravity]`: `g` (0).
//! - `[body.N]`, numbered from 0: `shape` (`ball`, `box`, `cup`, `mesh`,
//!   `tank`), then `radius` (ball, cup), `half` (box, tank), `height` and
//!   `wall` (cup), `mesh` (OBJ path, relative to the scene file); `density`,
//!   `position` (required except for tanks), `rotation` (angle in 2D,
//!   rotation vector in 3D; 0) and `fixed` (false). Tanks are fixed and
//!   solid outside the box.
//! - `[numerics]`: `dt`, `duration`, `rk_order` (2), `creation_threshold_rel`
//!   (1e-5), `reinit_every` (10), `reinit_iterations` (20), `deterministic`
//!   (false), `threads` (0 = all cores).
//! - `[output]`: `directory` (out), `dump_every` (0 = initial frame only),
//!   `fields` (omega u phi phi_s rho), `particles` (false), `timings`
//!   (false; adds wall-time columns to the diagnostics).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{UnitQuaternion, Vector3};

use crate::error::{Error, Result};
use crate::grid::{Boundary, GridSpec, ScalarField, VectorField};
use crate::interface::FluidInterface;
use crate::particles::RkOrder;
use crate::rigid::{RigidBody, RigidShape};
use crate::solver::{diffusion_limit, SimulationState, SolverParams};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct DomainConfig {
    pub dim: usize,
    pub n: [usize; 3],
    pub extent: [f64; 3],
    pub origin: [f64; 3],
    pub bc: [Boundary; 3],
}

impl DomainConfig {
    pub fn h(&self) -> f64 {
        self.extent[0] / self.n[0] as f64
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        let d = self.dim;
        GridSpec::new(&self.n[..d], self.h(), &self.origin[..d], &self.bc[..d])
    }
}

/// Initial level set of the fluid interface.
#[derive(Clone, Debug, PartialEq)]
pub enum PhiShape {
    None,
    HalfSpace {
        normal: [f64; 3],
        offset: f64,
        amplitude: f64,
        wavenumber: f64,
    },
    Sphere { center: [f64; 3], radius: f64 },
    Box { center: [f64; 3], half: [f64; 3] },
    Column { center: [f64; 3], radius: f64, height: f64 },
}

impl PhiShape {
    fn name(&self) -> &'static str {
        match self {
            PhiShape::None => "none",
            PhiShape::HalfSpace { .. } => "half_space",
            PhiShape::Sphere { .. } => "sphere",
            PhiShape::Box { .. } => "box",
            PhiShape::Column { .. } => "column",
        }
    }

    /// Signed distance (exact for all but the column corners and the
    /// rippled plane) at `x`, negative in fluid 1.
    fn eval(&self, x: &[f64; 3], domain: &DomainConfig) -> f64 {
        let d = domain.dim;
        let dist = |c: &[f64; 3]| (0..d).map(|a| (x[a] - c[a]).powi(2)).sum::<f64>().sqrt();
        match self {
            PhiShape::None => f64::NAN,
            PhiShape::HalfSpace { normal, offset, amplitude, wavenumber } => {
                let len = (0..d).map(|a| normal[a] * normal[a]).sum::<f64>().sqrt();
                let s = (0..d).map(|a| normal[a] * x[a]).sum::<f64>() / len;
                let phase = 2.0 * std::f64::consts::PI * wavenumber * (x[0] - domain.origin[0]) / domain.extent[0];
                s - offset - amplitude * phase.cos()
            }
            PhiShape::Sphere { center, radius } => dist(center) - radius,
            PhiShape::Box { center, half } => {
                let mut outside = 0.0;
                let mut inside = f64::NEG_INFINITY;
                for a in 0..d {
                    let q = (x[a] - center[a]).abs() - half[a];
                    outside += q.max(0.0).powi(2);
                    inside = inside.max(q);
                }
                outside.sqrt() + inside.min(0.0)
            }
            PhiShape::Column { center, radius, height } => {
                let up = d - 1;
                let r = (0..up).map(|a| (x[a] - center[a]).powi(2)).sum::<f64>().sqrt();
                let top = domain.origin[up] + height;
                (r - radius).max(x[up] - top)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FluidConfig {
    pub rho1: f64,
    pub rho2: f64,
    pub nu1: f64,
    pub nu2: f64,
    pub tau: f64,
    pub epsilon_factor: f64,
    pub phi: PhiShape,
    pub phi_invert: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum BodyShape {
    Ball { radius: f64 },
    Box { half: [f64; 3] },
    Cup { radius: f64, height: f64, wall: f64 },
    Mesh { path: String },
    Tank { half: [f64; 3] },
}

impl BodyShape {
    fn name(&self) -> &'static str {
        match self {
            BodyShape::Ball { .. } => "ball",
            BodyShape::Box { .. } => "box",
            BodyShape::Cup { .. } => "cup",
            BodyShape::Mesh { .. } => "mesh",
            BodyShape::Tank { .. } => "tank",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BodyConfig {
    pub shape: BodyShape,
    pub density: f64,
    pub position: [f64; 3],
    /// Angle (2D, first entry) or rotation vector (3D).
    pub rotation: [f64; 3],
    pub fixed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NumericsConfig {
    pub dt: f64,
    pub duration: f64,
    pub rk_order: usize,
    pub creation_threshold_rel: f64,
    pub reinit_every: usize,
    pub reinit_iterations: usize,
    pub deterministic: bool,
    pub threads: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrameField {
    Omega,
    Velocity,
    Phi,
    PhiS,
    Rho,
}

impl FrameField {
    pub const ALL: [FrameField; 5] = [
        FrameField::Omega,
        FrameField::Velocity,
        FrameField::Phi,
        FrameField::PhiS,
        FrameField::Rho,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FrameField::Omega => "omega",
            FrameField::Velocity => "u",
            FrameField::Phi => "phi",
            FrameField::PhiS => "phi_s",
            FrameField::Rho => "rho",
        }
    }
}

impl FromStr for FrameField {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        FrameField::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| format!("unknown field `{s}`"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputConfig {
    pub directory: String,
    pub dump_every: usize,
    pub fields: Vec<FrameField>,
    pub particles: bool,
    pub timings: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneConfig {
    pub domain: DomainConfig,
    pub fluids: FluidConfig,
    pub gravity: [f64; 3],
    pub bodies: Vec<BodyConfig>,
    pub numerics: NumericsConfig,
    pub output: OutputConfig,
}

/// One `[section]` of raw entries, consumed key by key.
struct Section {
    name: String,
    line: usize,
    entries: BTreeMap<String, (String, usize)>,
}

fn scene_err(line: usize, message: impl Into<String>) -> Error {
    Error::Scene {
        line,
        message: message.into(),
    }
}

impl Section {
    fn take_raw(&mut self, key: &str) -> Option<(String, usize)> {
        self.entries.remove(key)
    }

    fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.take_raw(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse()
                .map(Some)
                .map_err(|_| scene_err(line, format!("bad value `{v}` for `{key}`"))),
        }
    }

    fn require<T: FromStr>(&mut self, key: &str) -> Result<T> {
        self.take(key)?.ok_or_else(|| self.missing(key))
    }

    fn missing(&self, key: &str) -> Error {
        scene_err(self.line, format!("missing required key `{key}` in [{}]", self.name))
    }

    fn take_f64(&mut self, key: &str) -> Result<Option<f64>> {
        match self.take_raw(key) {
            None => Ok(None),
            Some((v, line)) => parse_f64(&v, line, key).map(Some),
        }
    }

    fn require_f64(&mut self, key: &str) -> Result<f64> {
        self.take_f64(key)?.ok_or_else(|| self.missing(key))
    }

    fn take_vec(&mut self, key: &str, len: usize) -> Result<Option<[f64; 3]>> {
        let Some((v, line)) = self.take_raw(key) else {
            return Ok(None);
        };
        let words: Vec<&str> = v.split_whitespace().collect();
        if words.len() != len {
            return Err(scene_err(
                line,
                format!("`{key}` needs {len} values, got {}", words.len()),
            ));
        }
        let mut out = [0.0; 3];
        for (o, w) in out.iter_mut().zip(&words) {
            *o = parse_f64(w, line, key)?;
        }
        Ok(Some(out))
    }

    fn require_vec(&mut self, key: &str, len: usize) -> Result<[f64; 3]> {
        self.take_vec(key, len)?.ok_or_else(|| self.missing(key))
    }

    fn take_words(&mut self, key: &str) -> Option<(Vec<String>, usize)> {
        self.take_raw(key)
            .map(|(v, line)| (v.split_whitespace().map(str::to_string).collect(), line))
    }

    /// Errors on the first key nobody consumed.
    fn finish(self) -> Result<()> {
        match self.entries.into_iter().min_by_key(|(_, (_, line))| *line) {
            None => Ok(()),
            Some((key, (_, line))) => Err(scene_err(
                line,
                format!("unknown key `{key}` in [{}]", self.name),
            )),
        }
    }
}

fn parse_f64(v: &str, line: usize, key: &str) -> Result<f64> {
    match v.trim().parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(scene_err(line, format!("`{key}` must be a finite number, got `{v}`"))),
    }
}

fn split_sections(text: &str) -> Result<(Section, Vec<Section>)> {
    let mut top = Section {
        name: "top level".into(),
        line: 1,
        entries: BTreeMap::new(),
    };
    let mut sections: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| scene_err(line, "unterminated section header"))?
                .trim();
            if sections.iter().any(|s| s.name == name) {
                return Err(scene_err(line, format!("duplicate section [{name}]")));
            }
            sections.push(Section {
                name: name.to_string(),
                line,
                entries: BTreeMap::new(),
            });
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| scene_err(line, "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(scene_err(line, "empty key"));
        }
        let target = sections.last_mut().unwrap_or(&mut top);
        if target
            .entries
            .insert(key.to_string(), (value.to_string(), line))
            .is_some()
        {
            return Err(scene_err(line, format!("duplicate key `{key}`")));
        }
    }
    Ok((top, sections))
}

fn parse_bool(words: (Vec<String>, usize), key: &str) -> Result<bool> {
    match words.0.as_slice() {
        [w] if w == "true" => Ok(true),
        [w] if w == "false" => Ok(false),
        _ => Err(scene_err(words.1, format!("`{key}` must be true or false"))),
    }
}

fn parse_domain(s: &mut Section) -> Result<DomainConfig> {
    let dim: usize = s.require("dim")?;
    if dim != 2 && dim != 3 {
        return Err(scene_err(s.line, format!("dim must be 2 or 3, got {dim}")));
    }
    let (words, line) = s.take_words("n").ok_or_else(|| s.missing("n"))?;
    if words.len() != dim {
        return Err(scene_err(line, format!("`n` needs {dim} values")));
    }
    let mut n = [1usize; 3];
    for (a, w) in words.iter().enumerate() {
        n[a] = w
            .parse()
            .map_err(|_| scene_err(line, format!("bad cell count `{w}`")))?;
    }
    let extent = s.require_vec("extent", dim)?;
    let origin = s.take_vec("origin", dim)?.unwrap_or([0.0; 3]);
    let mut bc = [Boundary::Periodic; 3];
    if let Some((words, line)) = s.take_words("bc") {
        if words.len() != dim {
            return Err(scene_err(line, format!("`bc` needs {dim} values")));
        }
        for (a, w) in words.iter().enumerate() {
            bc[a] = match w.as_str() {
                "periodic" => Boundary::Periodic,
                "dirichlet" => Boundary::Dirichlet,
                _ => return Err(scene_err(line, format!("unknown boundary `{w}`"))),
            };
        }
    }
    Ok(DomainConfig {
        dim,
        n,
        extent,
        origin,
        bc,
    })
}

fn parse_fluids(s: &mut Section, dim: usize) -> Result<FluidConfig> {
    let rho1 = s.require_f64("rho1")?;
    let nu1 = s.require_f64("nu1")?;
    let rho2 = s.take_f64("rho2")?.unwrap_or(rho1);
    let nu2 = s.take_f64("nu2")?.unwrap_or(nu1);
    let tau = s.take_f64("tau")?.unwrap_or(0.0);
    let epsilon_factor = s.take_f64("epsilon_factor")?.unwrap_or(2.0);
    let kind: String = s.take("phi")?.unwrap_or_else(|| "none".into());
    let phi = match kind.as_str() {
        "none" => PhiShape::None,
        "half_space" => PhiShape::HalfSpace {
            normal: s.require_vec("phi_normal", dim)?,
            offset: s.require_f64("phi_offset")?,
            amplitude: s.take_f64("phi_amplitude")?.unwrap_or(0.0),
            wavenumber: s.take_f64("phi_wavenumber")?.unwrap_or(1.0),
        },
        "sphere" => PhiShape::Sphere {
            center: s.require_vec("phi_center", dim)?,
            radius: s.require_f64("phi_radius")?,
        },
        "box" => PhiShape::Box {
            center: s.require_vec("phi_center", dim)?,
            half: s.require_vec("phi_half", dim)?,
        },
        "column" => PhiShape::Column {
            center: s.require_vec("phi_center", dim)?,
            radius: s.require_f64("phi_radius")?,
            height: s.require_f64("phi_height")?,
        },
        other => return Err(scene_err(s.line, format!("unknown phi shape `{other}`"))),
    };
    let phi_invert = match s.take_words("phi_invert") {
        Some(w) => parse_bool(w, "phi_invert")?,
        None => false,
    };
    Ok(FluidConfig {
        rho1,
        rho2,
        nu1,
        nu2,
        tau,
        epsilon_factor,
        phi,
        phi_invert,
    })
}

fn parse_body(s: &mut Section, dim: usize) -> Result<BodyConfig> {
    let kind: String = s.require("shape")?;
    let shape = match kind.as_str() {
        "ball" => BodyShape::Ball {
            radius: s.require_f64("radius")?,
        },
        "box" => BodyShape::Box {
            half: s.require_vec("half", dim)?,
        },
        "cup" => BodyShape::Cup {
            radius: s.require_f64("radius")?,
            height: s.require_f64("height")?,
            wall: s.require_f64("wall")?,
        },
        "mesh" => BodyShape::Mesh {
            path: s.require("mesh")?,
        },
        "tank" => BodyShape::Tank {
            half: s.require_vec("half", dim)?,
        },
        other => return Err(scene_err(s.line, format!("unknown body shape `{other}`"))),
    };
    let tank = matches!(shape, BodyShape::Tank { .. });
    let density = match s.take_f64("density")? {
        Some(d) => d,
        None if tank => 1.0,
        None => return Err(s.missing("density")),
    };
    let position = match s.take_vec("position", dim)? {
        Some(p) => p,
        None if tank => [0.0; 3],
        None => return Err(s.missing("position")),
    };
    let rotation = s
        .take_vec("rotation", if dim == 2 { 1 } else { 3 })?
        .unwrap_or([0.0; 3]);
    let fixed = match s.take_words("fixed") {
        Some(w) => parse_bool(w, "fixed")?,
        None => tank,
    };
    Ok(BodyConfig {
        shape,
        density,
        position,
        rotation,
        fixed,
    })
}

fn parse_numerics(s: &mut Section) -> Result<NumericsConfig> {
    let bool_key = |s: &mut Section, key: &str| -> Result<bool> {
        match s.take_words(key) {
            Some(w) => parse_bool(w, key),
            None => Ok(false),
        }
    };
    Ok(NumericsConfig {
        dt: s.require_f64("dt")?,
        duration: s.require_f64("duration")?,
        rk_order: s.take("rk_order")?.unwrap_or(2),
        creation_threshold_rel: s.take_f64("creation_threshold_rel")?.unwrap_or(1e-5),
        reinit_every: s.take("reinit_every")?.unwrap_or(10),
        reinit_iterations: s.take("reinit_iterations")?.unwrap_or(20),
        deterministic: bool_key(s, "deterministic")?,
        threads: s.take("threads")?.unwrap_or(0),
    })
}

fn parse_output(s: Option<&mut Section>) -> Result<OutputConfig> {
    let mut out = OutputConfig {
        directory: "out".into(),
        dump_every: 0,
        fields: FrameField::ALL.to_vec(),
        particles: false,
        timings: false,
    };
    let Some(s) = s else {
        return Ok(out);
    };
    if let Some((words, line)) = s.take_words("directory") {
        out.directory = words.join(" ");
        if out.directory.is_empty() {
            return Err(scene_err(line, "empty output directory"));
        }
    }
    out.dump_every = s.take("dump_every")?.unwrap_or(0);
    if let Some((words, line)) = s.take_words("fields") {
        out.fields = words
            .iter()
            .map(|w| w.parse().map_err(|e: String| scene_err(line, e)))
            .collect::<Result<_>>()?;
    }
    if let Some(w) = s.take_words("particles") {
        out.particles = parse_bool(w, "particles")?;
    }
    if let Some(w) = s.take_words("timings") {
        out.timings = parse_bool(w, "timings")?;
    }
    Ok(out)
}

impl SceneConfig {
    /// Parses and validates a scene.
    pub fn parse(text: &str) -> Result<SceneConfig> {
        let (mut top, sections) = split_sections(text)?;
        let version: u32 = top.require("format")?;
        if version != FORMAT_VERSION {
            return Err(scene_err(1, format!("unsupported scene format {version}")));
        }
        top.finish()?;

        let mut by_name: BTreeMap<String, Section> = BTreeMap::new();
        for s in sections {
            by_name.insert(s.name.clone(), s);
        }
        let mut need = |name: &str| {
            by_name
                .remove(name)
                .ok_or_else(|| Error::InvalidScene(format!("missing section [{name}]")))
        };
        let mut domain_s = need("domain")?;
        let domain = parse_domain(&mut domain_s)?;
        domain_s.finish()?;
        let dim = domain.dim;

        let mut fluids_s = need("fluids")?;
        let fluids = parse_fluids(&mut fluids_s, dim)?;
        fluids_s.finish()?;

        let mut numerics_s = need("numerics")?;
        let numerics = parse_numerics(&mut numerics_s)?;
        numerics_s.finish()?;

        let gravity = match by_name.remove("gravity") {
            Some(mut s) => {
                let g = s.take_vec("g", dim)?.unwrap_or([0.0; 3]);
                s.finish()?;
                g
            }
            None => [0.0; 3],
        };

        let mut output_s = by_name.remove("output");
        let output = parse_output(output_s.as_mut())?;
        if let Some(s) = output_s {
            s.finish()?;
        }

        let mut bodies = Vec::new();
        while let Some(mut s) = by_name.remove(&format!("body.{}", bodies.len())) {
            bodies.push(parse_body(&mut s, dim)?);
            s.finish()?;
        }
        if let Some(s) = by_name.values().next() {
            let hint = if s.name.starts_with("body.") {
                " (bodies must be numbered 0, 1, 2, ...)"
            } else {
                ""
            };
            return Err(scene_err(s.line, format!("unknown section [{}]{hint}", s.name)));
        }

        let scene = SceneConfig {
            domain,
            fluids,
            gravity,
            bodies,
            numerics,
            output,
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        self.domain.grid_spec()
    }

    pub fn epsilon(&self) -> f64 {
        self.fluids.epsilon_factor * self.domain.h()
    }

    /// Largest viscosity present in the initial state.
    pub fn nu_max(&self) -> f64 {
        match self.fluids.phi {
            PhiShape::None if !self.fluids.phi_invert => self.fluids.nu1,
            PhiShape::None => self.fluids.nu2,
            _ => self.fluids.nu1.max(self.fluids.nu2),
        }
    }

    /// Checks everything that does not need external files.
    pub fn validate(&self) -> Result<()> {
        let d = &self.domain;
        let spec = d.grid_spec()?;
        let h = spec.h();
        for a in 0..d.dim {
            if !(d.extent[a] > 0.0) {
                return Err(Error::InvalidScene(format!("extent must be positive on axis {a}")));
            }
            let ha = d.extent[a] / d.n[a] as f64;
            if ((ha - h) / h).abs() > 1e-9 {
                return Err(Error::InvalidScene(format!(
                    "cells must be square: spacing {ha} on axis {a} vs {h} on axis 0"
                )));
            }
        }
        let f = &self.fluids;
        if !(f.rho1 > 0.0 && f.rho2 > 0.0) {
            return Err(Error::InvalidScene("fluid densities must be positive".into()));
        }
        if !(f.nu1 >= 0.0 && f.nu2 >= 0.0 && f.tau >= 0.0) {
            return Err(Error::InvalidScene("viscosities and tau must be non-negative".into()));
        }
        if !(f.epsilon_factor > 0.0) {
            return Err(Error::InvalidScene("epsilon_factor must be positive".into()));
        }
        match &f.phi {
            PhiShape::Sphere { radius, .. } | PhiShape::Column { radius, .. } if !(*radius > 0.0) => {
                return Err(Error::InvalidScene("phi_radius must be positive".into()));
            }
            PhiShape::HalfSpace { normal, .. } if normal.iter().all(|v| *v == 0.0) => {
                return Err(Error::InvalidScene("phi_normal must be non-zero".into()));
            }
            _ => {}
        }

        let n = &self.numerics;
        if !(n.dt > 0.0) {
            return Err(Error::InvalidScene(format!("dt must be positive, got {}", n.dt)));
        }
        if !(n.duration >= 0.0) {
            return Err(Error::InvalidScene("duration must be non-negative".into()));
        }
        if n.rk_order != 2 && n.rk_order != 4 {
            return Err(Error::InvalidScene(format!("rk_order must be 2 or 4, got {}", n.rk_order)));
        }
        if !(n.creation_threshold_rel >= 0.0) {
            return Err(Error::InvalidScene("creation_threshold_rel must be non-negative".into()));
        }
        let limit = diffusion_limit(&spec, self.nu_max());
        if n.dt > limit {
            return Err(Error::Unstable { dt: n.dt, limit });
        }

        for (k, b) in self.bodies.iter().enumerate() {
            if !(b.density > 0.0) {
                return Err(Error::InvalidScene(format!("body {k}: density must be positive")));
            }
            let bad = match &b.shape {
                BodyShape::Ball { radius } => !(*radius > 0.0),
                BodyShape::Box { half } | BodyShape::Tank { half } => half[..d.dim].iter().any(|v| !(*v > 0.0)),
                BodyShape::Cup { radius, height, wall } => {
                    !(*wall > 0.0 && wall < radius && wall < height)
                }
                BodyShape::Mesh { path } => path.is_empty(),
            };
            if bad {
                return Err(Error::InvalidScene(format!(
                    "body {k}: bad {} dimensions",
                    b.shape.name()
                )));
            }
            if let BodyShape::Cup { radius, height, .. } = b.shape {
                let mut lo = [-radius; 3];
                let mut hi = [radius; 3];
                lo[d.dim - 1] = 0.0;
                hi[d.dim - 1] = height;
                self.check_fit(k, b, lo, hi)?;
            } else if let Some((lo, hi)) = analytic_bounds(&b.shape, d.dim) {
                self.check_fit(k, b, lo, hi)?;
            }
        }
        Ok(())
    }

    /// A body's rotated bounding box must lie inside the domain on wall
    /// axes and be shorter than the period on periodic ones.
    fn check_fit(&self, k: usize, b: &BodyConfig, lo: [f64; 3], hi: [f64; 3]) -> Result<()> {
        let d = &self.domain;
        let rot = body_rotation(b, d.dim);
        let mut wlo = [f64::INFINITY; 3];
        let mut whi = [f64::NEG_INFINITY; 3];
        for corner in 0..8 {
            let c = Vector3::new(
                if corner & 1 == 0 { lo[0] } else { hi[0] },
                if corner & 2 == 0 { lo[1] } else { hi[1] },
                if corner & 4 == 0 { lo[2] } else { hi[2] },
            );
            let w = rot * c;
            for a in 0..3 {
                wlo[a] = wlo[a].min(w[a] + b.position[a]);
                whi[a] = whi[a].max(w[a] + b.position[a]);
            }
        }
        for a in 0..d.dim {
            let fits = match d.bc[a] {
                Boundary::Periodic => whi[a] - wlo[a] < d.extent[a],
                Boundary::Dirichlet => {
                    let tol = 1e-9 * d.extent[a];
                    wlo[a] >= d.origin[a] - tol && whi[a] <= d.origin[a] + d.extent[a] + tol
                }
            };
            if !fits {
                return Err(Error::InvalidScene(format!(
                    "body {k} ({}) does not fit inside the domain along axis {a}",
                    b.shape.name()
                )));
            }
        }
        Ok(())
    }

    fn solver_params(&self) -> SolverParams {
        let n = &self.numerics;
        let mut p = SolverParams::new(n.dt);
        p.gravity = self.gravity;
        p.rk_order = if n.rk_order == 4 { RkOrder::Rk4 } else { RkOrder::Rk2 };
        p.creation_threshold_rel = n.creation_threshold_rel;
        p.reinit_every = n.reinit_every;
        p.reinit_iterations = n.reinit_iterations;
        p.deterministic = n.deterministic;
        p
    }

    /// Initial fluid interface on the scene grid.
    pub fn interface(&self) -> Result<FluidInterface> {
        let spec = self.grid_spec()?;
        let f = &self.fluids;
        let eps = self.epsilon();
        if f.phi == PhiShape::None {
            let (rho, nu) = if f.phi_invert { (f.rho2, f.nu2) } else { (f.rho1, f.nu1) };
            return FluidInterface::uniform(spec, rho, nu, eps);
        }
        let sign = if f.phi_invert { -1.0 } else { 1.0 };
        let phi = ScalarField::from_fn(spec, |x| sign * f.phi.eval(&x, &self.domain));
        FluidInterface::new(phi, (f.rho1, f.rho2), (f.nu1, f.nu2), f.tau, eps)
    }

    /// Builds the rigid bodies. Mesh paths are read relative to `base`,
    /// falling back to the bundled assets.
    pub fn build_bodies(&self, base: Option<&Path>) -> Result<Vec<RigidBody>> {
        let dim = self.domain.dim;
        let h = self.domain.h();
        let mut out = Vec::with_capacity(self.bodies.len());
        for (k, b) in self.bodies.iter().enumerate() {
            let shape = match &b.shape {
                BodyShape::Ball { radius } => RigidShape::Ball { radius: *radius },
                BodyShape::Box { half } => RigidShape::Box { half: *half },
                BodyShape::Cup { radius, height, wall } => RigidShape::cup(dim, *radius, *height, *wall, h)?,
                BodyShape::Tank { half } => RigidShape::Complement(Box::new(RigidShape::Box { half: *half })),
                BodyShape::Mesh { path } => {
                    let text = load_mesh(path, base)?;
                    if dim != 3 {
                        return Err(Error::InvalidScene(format!("body {k}: meshes need a 3D domain")));
                    }
                    let shape = RigidShape::from_obj(&text, h)?;
                    if let Some((lo, hi)) = shape.local_bounds(dim) {
                        self.check_fit(k, b, lo, hi)?;
                    }
                    shape
                }
            };
            let mut body = RigidBody::new(shape, b.density, b.position)?;
            body.rotation = body_rotation(b, dim);
            if b.fixed {
                body = body.fixed();
            }
            out.push(body);
        }
        Ok(out)
    }

    /// Initial simulation state: zero vorticity, the scene's fluids and
    /// bodies.
    pub fn build_state(&self, base: Option<&Path>) -> Result<SimulationState> {
        let spec = self.grid_spec()?;
        let omega = VectorField::zeros(spec, spec.vorticity_components());
        SimulationState::new(omega, self.interface()?, self.build_bodies(base)?, self.solver_params())
    }

    /// Canonical text form; `parse(to_text())` gives back `self`.
    pub fn to_text(&self) -> String {
        let d = &self.domain;
        let dim = d.dim;
        let v = |x: &[f64; 3], len: usize| {
            x[..len].iter().map(|c| format!("{c:?}")).collect::<Vec<_>>().join(" ")
        };
        let mut s = String::new();
        let _ = writeln!(s, "format = {FORMAT_VERSION}\n");
        let _ = writeln!(s, "[domain]");
        let _ = writeln!(s, "dim = {dim}");
        let ns: Vec<String> = d.n[..dim].iter().map(|c| c.to_string()).collect();
        let _ = writeln!(s, "n = {}", ns.join(" "));
        let _ = writeln!(s, "extent = {}", v(&d.extent, dim));
        let _ = writeln!(s, "origin = {}", v(&d.origin, dim));
        let bcs: Vec<&str> = d.bc[..dim].iter().map(|b| b.name()).collect();
        let _ = writeln!(s, "bc = {}\n", bcs.join(" "));

        let f = &self.fluids;
        let _ = writeln!(s, "[fluids]");
        let _ = writeln!(s, "rho1 = {:?}\nrho2 = {:?}", f.rho1, f.rho2);
        let _ = writeln!(s, "nu1 = {:?}\nnu2 = {:?}", f.nu1, f.nu2);
        let _ = writeln!(s, "tau = {:?}\nepsilon_factor = {:?}", f.tau, f.epsilon_factor);
        let _ = writeln!(s, "phi = {}", f.phi.name());
        match &f.phi {
            PhiShape::None => {}
            PhiShape::HalfSpace { normal, offset, amplitude, wavenumber } => {
                let _ = writeln!(s, "phi_normal = {}", v(normal, dim));
                let _ = writeln!(s, "phi_offset = {offset:?}");
                let _ = writeln!(s, "phi_amplitude = {amplitude:?}");
                let _ = writeln!(s, "phi_wavenumber = {wavenumber:?}");
            }
            PhiShape::Sphere { center, radius } => {
                let _ = writeln!(s, "phi_center = {}\nphi_radius = {radius:?}", v(center, dim));
            }
            PhiShape::Box { center, half } => {
                let _ = writeln!(s, "phi_center = {}\nphi_half = {}", v(center, dim), v(half, dim));
            }
            PhiShape::Column { center, radius, height } => {
                let _ = writeln!(s, "phi_center = {}", v(center, dim));
                let _ = writeln!(s, "phi_radius = {radius:?}\nphi_height = {height:?}");
            }
        }
        let _ = writeln!(s, "phi_invert = {}\n", f.phi_invert);

        let _ = writeln!(s, "[gravity]\ng = {}\n", v(&self.gravity, dim));

        for (k, b) in self.bodies.iter().enumerate() {
            let _ = writeln!(s, "[body.{k}]\nshape = {}", b.shape.name());
            match &b.shape {
                BodyShape::Ball { radius } => {
                    let _ = writeln!(s, "radius = {radius:?}");
                }
                BodyShape::Box { half } | BodyShape::Tank { half } => {
                    let _ = writeln!(s, "half = {}", v(half, dim));
                }
                BodyShape::Cup { radius, height, wall } => {
                    let _ = writeln!(s, "radius = {radius:?}\nheight = {height:?}\nwall = {wall:?}");
                }
                BodyShape::Mesh { path } => {
                    let _ = writeln!(s, "mesh = {path}");
                }
            }
            let _ = writeln!(s, "density = {:?}", b.density);
            let _ = writeln!(s, "position = {}", v(&b.position, dim));
            let _ = writeln!(s, "rotation = {}", v(&b.rotation, if dim == 2 { 1 } else { 3 }));
            let _ = writeln!(s, "fixed = {}\n", b.fixed);
        }

        let n = &self.numerics;
        let _ = writeln!(s, "[numerics]");
        let _ = writeln!(s, "dt = {:?}\nduration = {:?}", n.dt, n.duration);
        let _ = writeln!(s, "rk_order = {}", n.rk_order);
        let _ = writeln!(s, "creation_threshold_rel = {:?}", n.creation_threshold_rel);
        let _ = writeln!(s, "reinit_every = {}\nreinit_iterations = {}", n.reinit_every, n.reinit_iterations);
        let _ = writeln!(s, "deterministic = {}\nthreads = {}\n", n.deterministic, n.threads);

        let o = &self.output;
        let fields: Vec<&str> = o.fields.iter().map(|f| f.name()).collect();
        let _ = writeln!(s, "[output]");
        let _ = writeln!(s, "directory = {}\ndump_every = {}", o.directory, o.dump_every);
        let _ = writeln!(s, "fields = {}", fields.join(" "));
        let _ = writeln!(s, "particles = {}\ntimings = {}", o.particles, o.timings);
        s
    }
}

fn analytic_bounds(shape: &BodyShape, dim: usize) -> Option<([f64; 3], [f64; 3])> {
    let local = match shape {
        BodyShape::Ball { radius } => RigidShape::Ball { radius: *radius },
        BodyShape::Box { half } => RigidShape::Box { half: *half },
        _ => return None,
    };
    local.local_bounds(dim)
}

fn body_rotation(b: &BodyConfig, dim: usize) -> UnitQuaternion<f64> {
    if dim == 2 {
        UnitQuaternion::from_axis_angle(&Vector3::z_axis(), b.rotation[0])
    } else {
        UnitQuaternion::from_scaled_axis(Vector3::from(b.rotation))
    }
}

fn load_mesh(path: &str, base: Option<&Path>) -> Result<String> {
    let full = match base {
        Some(dir) => dir.join(path),
        None => Path::new(path).to_path_buf(),
    };
    match std::fs::read_to_string(&full) {
        Ok(text) => Ok(text),
        Err(e) => super::bundled_asset(path).map(str::to_string).ok_or_else(|| Error::io(full, e)),
    }
}
