//! Built-in experiments: the falling-cylinder validation, smoke runs of
//! the 3D scenes and interface-localization checks.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::scene_io::{self, PhiShape, SceneConfig};
use crate::solver::{run_with, RunOptions, SimulationState, TimingReport};

/// Terminal velocity of the disk reported for the reference computation.
pub const REFERENCE_VELOCITY: f64 = -0.47;

/// Resolutions with published time steps.
pub const CYLINDER_RESOLUTIONS: [usize; 3] = [128, 256, 300];

/// Accepted plateau range at a resolution. The coarse grid gets a wider
/// band; 300 shares the 256 band.
pub fn acceptance_band(resolution: usize) -> (f64, f64) {
    if resolution < 256 {
        (-0.55, -0.38)
    } else {
        (-0.52, -0.42)
    }
}

/// The coarse plateau should be no closer to the reference than the fine
/// one, unless the two agree to within `0.02`.
pub fn convergence_trend(coarse: f64, fine: f64) -> bool {
    (coarse - REFERENCE_VELOCITY).abs() >= (fine - REFERENCE_VELOCITY).abs() || (coarse - fine).abs() <= 0.02
}

/// Mean of `v` over the samples with `t ≥ 0.8·t_end`.
pub fn plateau(times: &[f64], v: &[f64]) -> f64 {
    let Some(&t_end) = times.last() else {
        return f64::NAN;
    };
    let start = 0.8 * t_end - 1e-9;
    let window: Vec<f64> = times
        .iter()
        .zip(v)
        .filter(|(t, _)| **t >= start)
        .map(|(_, v)| *v)
        .collect();
    window.iter().sum::<f64>() / window.len() as f64
}

#[derive(Clone, Debug, PartialEq)]
pub struct CylinderConfig {
    pub resolution: usize,
    pub body_density: f64,
    pub duration: f64,
    /// Snapshots, diagnostics and the report go here when set.
    pub out_dir: Option<PathBuf>,
}

impl CylinderConfig {
    pub fn paper(resolution: usize) -> Result<Self> {
        if !CYLINDER_RESOLUTIONS.contains(&resolution) {
            return Err(Error::InvalidScene(format!(
                "cylinder resolution must be 128, 256 or 300, got {resolution}"
            )));
        }
        Ok(CylinderConfig {
            resolution,
            body_density: 2.0,
            duration: 2.5,
            out_dir: None,
        })
    }

    pub fn scene(&self) -> Result<SceneConfig> {
        let mut scene = scene_io::load_builtin(&format!("cylinder_{}", self.resolution))?;
        scene.bodies[0].density = self.body_density;
        scene.numerics.duration = self.duration;
        scene.validate()?;
        Ok(scene)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationResult {
    pub resolution: usize,
    pub times: Vec<f64>,
    pub v_y: Vec<f64>,
    /// Mean `v_y` over the final 20% of the run.
    pub plateau: f64,
    pub band: (f64, f64),
    pub pass: bool,
    /// Worst mirror defect of `ω` about the initial vertical axis of the
    /// disk, over `t ≤ 0.5`, relative to `max|ω|`.
    pub symmetry_defect: f64,
    /// Share of enstrophy within distance 0.3 of the body at `t ≈ 0.5`.
    pub near_body_enstrophy: f64,
    /// Largest `|ω − ω̄|` inside the body over all steps.
    pub penalization_residual: f64,
    pub wall_seconds: f64,
    pub files: Vec<PathBuf>,
}

impl ValidationResult {
    /// One-page text summary.
    pub fn report(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "falling cylinder, {0}x{0}", self.resolution);
        let _ = writeln!(s, "plateau v_y          {:.4}", self.plateau);
        let _ = writeln!(s, "reference            {REFERENCE_VELOCITY:.2}");
        let _ = writeln!(s, "band                 [{:.2}, {:.2}]", self.band.0, self.band.1);
        let _ = writeln!(s, "symmetry defect      {:.2e} (t <= 0.5)", self.symmetry_defect);
        let _ = writeln!(s, "near-body enstrophy  {:.3} (t = 0.5)", self.near_body_enstrophy);
        let _ = writeln!(s, "penalization resid.  {:.2e}", self.penalization_residual);
        let _ = writeln!(s, "wall time            {:.1} s", self.wall_seconds);
        let _ = writeln!(s, "result               {}", if self.pass { "PASS" } else { "FAIL" });
        let _ = writeln!(s, "\n     t       v_y");
        let stride = (self.times.len() / 25).max(1);
        for (k, (t, v)) in self.times.iter().zip(&self.v_y).enumerate() {
            if k % stride == stride - 1 || k + 1 == self.times.len() {
                let _ = writeln!(s, "{t:6.3}  {v:8.4}");
            }
        }
        s
    }
}

/// Mirror defect `max|ω(x) + ω(x')| / max|ω|` with `x'` the reflection of
/// `x` across the vertical line `x = axis` (2D, `axis` on a node or half
/// node of a periodic axis).
pub fn mirror_defect(omega: &ScalarField, axis: f64) -> f64 {
    let spec = omega.spec();
    let n = spec.n();
    let h = spec.h();
    let m = 2.0 * (axis - spec.origin()[0]) / h;
    let shift = m.round() as i64;
    let d = omega.data();
    let scale = omega.max_abs();
    if scale == 0.0 {
        return 0.0;
    }
    let mut worst = 0.0f64;
    for j in 0..n[1] {
        for i in 0..n[0] {
            let im = (shift - i as i64).rem_euclid(n[0] as i64) as usize;
            let a = d[spec.index(i, j, 0)];
            let b = d[spec.index(im, j, 0)];
            worst = worst.max((a + b).abs());
        }
    }
    worst / scale
}

/// Fraction of enstrophy at nodes where `weight(node)` holds.
pub fn enstrophy_fraction(state: &SimulationState, inside: impl Fn(usize) -> bool) -> f64 {
    let w = state.omega();
    let (mut total, mut part) = (0.0, 0.0);
    for idx in 0..state.spec().len() {
        let e: f64 = w.components().iter().map(|c| c.data()[idx].powi(2)).sum();
        total += e;
        if inside(idx) {
            part += e;
        }
    }
    if total > 0.0 {
        part / total
    } else {
        1.0
    }
}

/// Share of enstrophy within `distance` of any body surface (inside
/// included).
pub fn near_body_enstrophy(state: &SimulationState, distance: f64) -> f64 {
    let phis = state.body_level_sets();
    enstrophy_fraction(state, |i| phis.iter().any(|p| p.data()[i] <= distance))
}

/// Share of enstrophy in the band `|φ| ≤ width` of the fluid interface.
pub fn interface_enstrophy(state: &SimulationState, width: f64) -> f64 {
    let phi = state.interface().phi.data();
    enstrophy_fraction(state, |i| phi[i].abs() <= width)
}

fn write_snapshot(state: &SimulationState, dir: &Path, label: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    files.push(scene_io::write_frame(state, &scene_io::FrameField::ALL, dir)?);
    let ppm = dir.join(format!("omega_{label}.ppm"));
    scene_io::vorticity_image(state, 8).write_ppm(&ppm)?;
    files.push(ppm);
    Ok(())
}

/// The falling-cylinder validation at one of the published resolutions.
pub fn run_falling_cylinder(resolution: usize) -> Result<ValidationResult> {
    run_cylinder(&CylinderConfig::paper(resolution)?)
}

pub fn run_cylinder(cfg: &CylinderConfig) -> Result<ValidationResult> {
    let scene = cfg.scene()?;
    let dt = scene.numerics.dt;
    let axis = scene.bodies[0].position[0];
    let snap_early = (0.5 / dt).round() as usize;
    let snap_late = crate::solver::step_count(cfg.duration, dt);
    if let Some(dir) = &cfg.out_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }

    let mut times = Vec::new();
    let mut v_y = Vec::new();
    let mut symmetry_defect = 0.0f64;
    let mut near_body = f64::NAN;
    let mut residual = 0.0f64;
    let mut files = Vec::new();
    let started = crate::solver::Stopwatch::start();
    let opts = RunOptions {
        out_dir: cfg.out_dir.clone(),
        dump_every: Some(0),
        ..RunOptions::default()
    };
    let outcome = run_with(&scene, &opts, |state| {
        let step = state.step_index();
        if step == 0 {
            return Ok(());
        }
        let body = &state.bodies()[0];
        times.push(state.t());
        v_y.push(body.velocity[1]);
        residual = residual.max(state.diagnostics().penalization_residual);
        if state.t() <= 0.5 + 1e-9 {
            symmetry_defect = symmetry_defect.max(mirror_defect(state.omega().comp(0), axis));
        }
        if step == snap_early || step == snap_late {
            if step == snap_early {
                near_body = near_body_enstrophy(state, 0.3);
            }
            if let Some(dir) = &cfg.out_dir {
                let label = if step == snap_early { "t0.5" } else { "final" };
                write_snapshot(state, dir, label, &mut files)?;
            }
        }
        Ok(())
    })?;
    let plateau = plateau(&times, &v_y);
    let band = acceptance_band(cfg.resolution);
    let mut result = ValidationResult {
        resolution: cfg.resolution,
        times,
        v_y,
        plateau,
        band,
        pass: plateau >= band.0 && plateau <= band.1,
        symmetry_defect,
        near_body_enstrophy: near_body,
        penalization_residual: residual,
        wall_seconds: started.seconds(),
        files: [outcome.files, files].concat(),
    };
    if let Some(dir) = &cfg.out_dir {
        let path = dir.join("report.txt");
        std::fs::write(&path, result.report()).map_err(|e| Error::io(&path, e))?;
        result.files.push(path);
    }
    Ok(result)
}

/// Names accepted by [`run_scene_smoke`].
pub const SMOKE_SCENES: [&str; 3] = ["two_spheres_small", "water_wall_small", "cup_small"];

#[derive(Clone, Debug, PartialEq)]
pub struct SmokeCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmokeSummary {
    pub name: String,
    pub steps: usize,
    pub initial_positions: Vec<[f64; 3]>,
    pub final_positions: Vec<[f64; 3]>,
    pub liquid_volume_drift: f64,
    pub max_enstrophy: f64,
    pub max_velocity: f64,
    pub checks: Vec<SmokeCheck>,
    /// Stage timing breakdown of the run.
    pub report: TimingReport,
    pub wall_seconds: f64,
}

impl SmokeSummary {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Largest body displacement.
    pub fn max_displacement(&self) -> f64 {
        self.initial_positions
            .iter()
            .zip(&self.final_positions)
            .map(|(a, b)| (0..3).map(|k| (a[k] - b[k]).powi(2)).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}

/// Runs a bundled small 3D scene and checks it for sanity.
pub fn run_scene_smoke(name: &str) -> Result<SmokeSummary> {
    if !SMOKE_SCENES.contains(&name) {
        return Err(Error::InvalidScene(format!(
            "smoke scene must be one of {}, got `{name}`",
            SMOKE_SCENES.join(", ")
        )));
    }
    run_smoke(name, &scene_io::load_builtin(name)?)
}

/// Runs `scene` and applies the smoke checks (sinking is checked for
/// scenes named `two_spheres*`).
pub fn run_smoke(name: &str, scene: &SceneConfig) -> Result<SmokeSummary> {
    let started = crate::solver::Stopwatch::start();
    let mut initial_positions = Vec::new();
    let mut v0 = f64::NAN;
    let mut max_velocity = 0.0f64;
    let mut finite = true;
    let outcome = run_with(scene, &RunOptions::default(), |state| {
        if state.step_index() == 0 {
            initial_positions = state.bodies().iter().map(|b| b.translation).collect();
            v0 = state.interface().liquid_volume(true);
        }
        max_velocity = max_velocity.max(state.velocity().max_norm());
        finite &= state.omega().all_finite() && state.velocity().all_finite();
        Ok(())
    })?;
    let state = &outcome.state;
    let final_positions: Vec<[f64; 3]> = state.bodies().iter().map(|b| b.translation).collect();
    let v1 = state.interface().liquid_volume(true);
    let drift = if v0 > 0.0 { (v1 - v0).abs() / v0 } else { 0.0 };
    let max_enstrophy = outcome.rows.iter().map(|r| r.enstrophy).fold(0.0, f64::max);
    let rows_finite = outcome.rows.iter().all(|r| {
        r.enstrophy.is_finite() && r.liquid_volume.is_finite() && r.circulation.iter().all(|c| c.is_finite())
    });

    let mut checks = vec![
        SmokeCheck {
            name: "no NaN".into(),
            passed: finite && rows_finite,
            detail: format!("fields finite: {finite}, diagnostics finite: {rows_finite}"),
        },
        SmokeCheck {
            name: "enstrophy finite".into(),
            passed: max_enstrophy.is_finite(),
            detail: format!("max {max_enstrophy:.3e}"),
        },
        SmokeCheck {
            name: "velocity finite".into(),
            passed: max_velocity.is_finite(),
            detail: format!("max |u| {max_velocity:.3e}"),
        },
    ];
    if scene.fluids.phi != PhiShape::None {
        checks.push(SmokeCheck {
            name: "liquid volume drift < 5%".into(),
            passed: drift < 0.05,
            detail: format!("{:.3}%", 100.0 * drift),
        });
    }
    if name.starts_with("two_spheres") {
        let up = scene.domain.dim - 1;
        for (k, (a, b)) in initial_positions.iter().zip(&final_positions).enumerate() {
            let dz = b[up] - a[up];
            checks.push(SmokeCheck {
                name: format!("sphere {k} sinks"),
                passed: dz < 0.0,
                detail: format!("dz = {dz:.4e}"),
            });
        }
    }
    Ok(SmokeSummary {
        name: name.to_string(),
        steps: outcome.rows.len(),
        initial_positions,
        final_positions,
        liquid_volume_drift: drift,
        max_enstrophy,
        max_velocity,
        checks,
        report: outcome.report,
        wall_seconds: started.seconds(),
    })
}

/// Heavy fluid over light in a 2D channel (periodic in x, walls in y),
/// with a small cosine ripple on the interface so that buoyancy produces
/// vorticity from the first step.
pub fn stratified_scene(n: usize) -> Result<SceneConfig> {
    let dt = 0.01f64.min(0.25 / n as f64);
    SceneConfig::parse(&format!(
        "format = 1
[domain]
dim = 2
n = {n} {n}
extent = 1.0 1.0
bc = periodic dirichlet
[fluids]
rho1 = 1.0
rho2 = 0.5
nu1 = 0.001
phi = half_space
phi_normal = 0.0 -1.0
phi_offset = -0.5
phi_amplitude = 0.02
[gravity]
g = 0.0 -1.0
[numerics]
dt = {dt:?}
duration = {:?}
",
        20.0 * dt
    ))
}

/// Interface share of enstrophy (band `|φ| ≤ 4ε`) after each of the
/// stratified scene's steps.
pub fn run_stratified(n: usize) -> Result<Vec<f64>> {
    let scene = stratified_scene(n)?;
    let width = 4.0 * scene.epsilon();
    let mut fractions = Vec::new();
    run_with(&scene, &RunOptions::default(), |state| {
        if state.step_index() > 0 {
            fractions.push(interface_enstrophy(state, width));
        }
        Ok(())
    })?;
    Ok(fractions)
}
