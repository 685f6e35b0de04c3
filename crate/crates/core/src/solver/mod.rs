//! One time step of the hybrid particle/grid scheme, with the level-set
//! interface and immersed rigid bodies.
//!
//! A step runs, in order: stream solve, velocity, rigid projection and
//! blending, grid sources, source kick on the particles, advection (particles,
//! level set, bodies), remeshing, grid diffusion and particle creation.
//! Particles are recreated on grid nodes at the end of every step, so at the
//! start of the next one each particle sits on a node and the frozen grid
//! sources are read there exactly.

mod run;
mod timing;

pub use run::{run, run_with, RunOptions, RunOutcome};
pub use timing::{Category, Stopwatch, Timers, TimingReport};

use crate::error::{Error, Result};
use crate::grid::{self, smoothed_heaviside, GridSpec, ScalarField, VectorField};
use crate::interface::{self, FluidInterface};
use crate::par;
use crate::particles::{self, ParticleSet, RkOrder, Sampler};
use crate::poisson::{self, PoissonPlan};
use crate::rigid::{self, RigidBody};

/// Named stages, recorded in execution order for each step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    StreamSolve,
    Velocity,
    RigidCoupling,
    Sources,
    Interpolate,
    Advect,
    Reinitialize,
    Remesh,
    Diffusion,
    Create,
}

impl Stage {
    /// Stage sequence of a step without redistancing.
    pub const CANONICAL: [Stage; 9] = [
        Stage::StreamSolve,
        Stage::Velocity,
        Stage::RigidCoupling,
        Stage::Sources,
        Stage::Interpolate,
        Stage::Advect,
        Stage::Remesh,
        Stage::Diffusion,
        Stage::Create,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::StreamSolve => "stream solve",
            Stage::Velocity => "velocity",
            Stage::RigidCoupling => "rigid coupling",
            Stage::Sources => "sources",
            Stage::Interpolate => "interpolate",
            Stage::Advect => "advect",
            Stage::Reinitialize => "reinitialize",
            Stage::Remesh => "remesh",
            Stage::Diffusion => "diffusion",
            Stage::Create => "create",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverParams {
    pub dt: f64,
    pub gravity: [f64; 3],
    pub rk_order: RkOrder,
    /// Particles are created where `|ω| > threshold · max|ω|`.
    pub creation_threshold_rel: f64,
    /// Redistance φ every this many steps (0 disables).
    pub reinit_every: usize,
    pub reinit_iterations: usize,
    /// Serial, index-ordered reductions: bit-identical results for any
    /// thread count.
    pub deterministic: bool,
}

impl SolverParams {
    pub fn new(dt: f64) -> Self {
        SolverParams {
            dt,
            gravity: [0.0; 3],
            rk_order: RkOrder::Rk2,
            creation_threshold_rel: 1e-5,
            reinit_every: 10,
            reinit_iterations: 20,
            deterministic: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StabilityReport {
    /// `h² / (2·dim·ν_max)`; infinite for inviscid runs.
    pub diffusion_limit: f64,
    /// `h / max|u|`, informational only (particles are not CFL bound).
    pub advection_cfl: f64,
    pub dt_ok: bool,
}

/// Explicit-diffusion time-step bound.
pub fn diffusion_limit(spec: &GridSpec, nu_max: f64) -> f64 {
    if nu_max > 0.0 {
        spec.h() * spec.h() / (2.0 * spec.dim() as f64 * nu_max)
    } else {
        f64::INFINITY
    }
}

pub fn stability(spec: &GridSpec, dt: f64, nu_max: f64, u_max: f64) -> StabilityReport {
    let diffusion_limit = diffusion_limit(spec, nu_max);
    StabilityReport {
        diffusion_limit,
        advection_cfl: if u_max > 0.0 { spec.h() / u_max } else { f64::INFINITY },
        dt_ok: dt <= diffusion_limit,
    }
}

/// Pose and rigid velocity of one body.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BodyDiagnostics {
    pub position: [f64; 3],
    /// Unit quaternion `(w, x, y, z)`.
    pub rotation: [f64; 4],
    pub velocity: [f64; 3],
    pub omega: [f64; 3],
}

/// Scalar monitors for one step.
#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostics {
    pub t: f64,
    pub step: usize,
    /// `Σ ω h^d` per vorticity component.
    pub circulation: Vec<f64>,
    /// `Σ |ω|² h^d`.
    pub enstrophy: f64,
    /// `Σ H(φ/ε) h^d`.
    pub liquid_volume: f64,
    pub particles: usize,
    /// Max `|ω − ω̄|` at nodes with `H(φ_s/ε) = 1` right after penalization.
    pub penalization_residual: f64,
    pub bodies: Vec<BodyDiagnostics>,
    /// Wall time of the last step by category.
    pub timers: Timers,
}

#[derive(Clone, Debug)]
pub struct SimulationState {
    spec: GridSpec,
    params: SolverParams,
    plan: PoissonPlan,
    particles: ParticleSet,
    omega: VectorField,
    psi: VectorField,
    u: VectorField,
    iface: FluidInterface,
    bodies: Vec<RigidBody>,
    body_phis: Vec<ScalarField>,
    step_index: usize,
    timers: Timers,
    last_timers: Timers,
    trace: Vec<Stage>,
    penalization_residual: f64,
}

/// `(ω·∇)u` on the grid (3D only).
fn stretching(omega: &VectorField, u: &VectorField) -> VectorField {
    let spec = *omega.spec();
    let grads: Vec<VectorField> = (0..3).map(|i| grid::gradient(u.comp(i))).collect();
    let comps = (0..3)
        .map(|i| {
            let g = &grads[i];
            let mut f = ScalarField::zeros(spec);
            par::fill(f.data_mut(), |n| {
                (0..3)
                    .map(|j| omega.comp(j).data()[n] * g.comp(j).data()[n])
                    .sum()
            });
            f
        })
        .collect();
    VectorField::from_components(comps).expect("same grid")
}

fn ensure_finite(f: &VectorField, stage: &str) -> Result<()> {
    if f.all_finite() {
        Ok(())
    } else {
        Err(Error::non_finite(stage))
    }
}

impl SimulationState {
    pub fn new(
        omega: VectorField,
        iface: FluidInterface,
        bodies: Vec<RigidBody>,
        params: SolverParams,
    ) -> Result<Self> {
        let spec = *iface.spec();
        omega.check_spec(&spec)?;
        if omega.ncomp() != spec.vorticity_components() {
            return Err(Error::SpecMismatch(format!(
                "{} vorticity components on a {}D grid",
                omega.ncomp(),
                spec.dim()
            )));
        }
        ensure_finite(&omega, "initial vorticity")?;
        let dt = params.dt;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidScene(format!("time step must be positive, got {dt}")));
        }
        let nu = iface.viscosity_field();
        let limit = diffusion_limit(&spec, nu.max_abs());
        if dt > limit {
            return Err(Error::Unstable { dt, limit });
        }
        for (k, b) in bodies.iter().enumerate() {
            if let Some(s) = b.shape.sampling() {
                if s > spec.h() * (1.0 + 1e-12) {
                    return Err(Error::InvalidScene(format!(
                        "body {k} is sampled at spacing {s}, coarser than the grid ({})",
                        spec.h()
                    )));
                }
            }
        }
        let body_phis: Vec<_> = bodies.iter().map(|b| rigid::body_level_set(b, &spec)).collect();
        rigid::check_overlap(&bodies, &body_phis, spec.h())?;
        let plan = PoissonPlan::new(&spec);
        let psi = poisson::solve_stream(&omega, &plan)?.psi;
        let u = poisson::velocity_from_stream(&psi)?;
        let particles = particles::create_particles(&omega, params.creation_threshold_rel);
        Ok(SimulationState {
            spec,
            params,
            plan,
            particles,
            omega,
            psi,
            u,
            iface,
            bodies,
            body_phis,
            step_index: 0,
            timers: Timers::default(),
            last_timers: Timers::default(),
            trace: Vec::new(),
            penalization_residual: 0.0,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn params(&self) -> &SolverParams {
        &self.params
    }

    pub fn dt(&self) -> f64 {
        self.params.dt
    }

    pub fn t(&self) -> f64 {
        self.step_index as f64 * self.params.dt
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    pub fn omega(&self) -> &VectorField {
        &self.omega
    }

    /// Stream function of the last step's stream solve.
    pub fn psi(&self) -> &VectorField {
        &self.psi
    }

    /// Blended velocity used by the last advection.
    pub fn velocity(&self) -> &VectorField {
        &self.u
    }

    pub fn particles(&self) -> &ParticleSet {
        &self.particles
    }

    pub fn interface(&self) -> &FluidInterface {
        &self.iface
    }

    pub fn bodies(&self) -> &[RigidBody] {
        &self.bodies
    }

    pub fn body_level_sets(&self) -> &[ScalarField] {
        &self.body_phis
    }

    /// Stages executed by the last step.
    pub fn trace(&self) -> &[Stage] {
        &self.trace
    }

    /// Accumulated wall time over all steps.
    pub fn timers(&self) -> &Timers {
        &self.timers
    }

    pub fn timing_report(&self) -> TimingReport {
        self.timers.report()
    }

    /// Fluid plus moving-body density.
    pub fn density(&self) -> ScalarField {
        rigid::composite_density(
            &self.iface.density_field(),
            &self.bodies,
            &self.body_phis,
            self.iface.epsilon,
        )
    }

    pub fn check_stability(&self) -> StabilityReport {
        let nu = self.iface.viscosity_field();
        stability(&self.spec, self.params.dt, nu.max_abs(), self.u.max_norm())
    }

    pub fn diagnostics(&self) -> Diagnostics {
        let det = self.params.deterministic;
        let dv = self.spec.cell_volume();
        let circulation = self
            .omega
            .components()
            .iter()
            .map(|c| {
                let d = c.data();
                par::sum(d.len(), det, |i| d[i]) * dv
            })
            .collect();
        let nc = self.omega.ncomp();
        let enstrophy = par::sum(self.spec.len(), det, |i| {
            (0..nc).map(|c| self.omega.comp(c).data()[i].powi(2)).sum::<f64>()
        }) * dv;
        let bodies = self
            .bodies
            .iter()
            .map(|b| {
                let q = b.rotation.quaternion();
                BodyDiagnostics {
                    position: b.translation,
                    rotation: [q.w, q.i, q.j, q.k],
                    velocity: b.velocity,
                    omega: b.omega,
                }
            })
            .collect();
        Diagnostics {
            t: self.t(),
            step: self.step_index,
            circulation,
            enstrophy,
            liquid_volume: self.iface.liquid_volume(det),
            particles: self.particles.len(),
            penalization_residual: self.penalization_residual,
            bodies,
            timers: self.last_timers,
        }
    }

    /// Advances one time step.
    pub fn step(&mut self) -> Result<()> {
        let started = Stopwatch::start();
        let mut timers = Timers::default();
        self.trace.clear();
        let spec = self.spec;
        let dim = spec.dim();
        let dt = self.params.dt;
        let det = self.params.deterministic;
        let eps = self.iface.epsilon;

        // 1. Stream function.
        let sw = Stopwatch::start();
        let stream = poisson::solve_stream(&self.omega, &self.plan)?;
        timers.add(Category::StreamSolve, sw.seconds());
        self.trace.push(Stage::StreamSolve);

        // 2. Velocity.
        let sw = Stopwatch::start();
        let u_tilde = poisson::velocity_from_stream(&stream.psi)?;
        ensure_finite(&u_tilde, "velocity")?;
        timers.add(Category::Grid, sw.seconds());
        self.trace.push(Stage::Velocity);

        // 2b. Rigid projection and blending.
        let sw = Stopwatch::start();
        let mut u = u_tilde.clone();
        let mut w = self.omega.clone();
        for (k, body) in self.bodies.iter_mut().enumerate() {
            if body.fixed {
                body.velocity = [0.0; 3];
                body.omega = [0.0; 3];
            } else {
                let p = rigid::project_rigid(&u_tilde, &self.omega, &self.body_phis[k], eps, k, det)?;
                body.velocity = p.velocity;
                body.omega = if dim == 2 { [0.0, 0.0, p.omega[2]] } else { p.omega };
            }
            let (ub, wb) = rigid::blend_fields(&u, &w, body, &self.body_phis[k], eps)?;
            u = ub;
            w = wb;
        }
        timers.add(Category::RigidCoupling, sw.seconds());
        self.trace.push(Stage::RigidCoupling);

        // 3. Frozen grid sources and the stretching term.
        let sw = Stopwatch::start();
        let nc = spec.vorticity_components();
        let mut sources = VectorField::zeros(spec, nc);
        if self.params.gravity.iter().any(|&g| g != 0.0) {
            let rho = self.density();
            sources.axpy(1.0, &interface::buoyancy_curl(&rho, self.params.gravity)?);
        }
        let stretch = (dim == 3).then(|| stretching(&w, &u));
        timers.add(Category::Grid, sw.seconds());
        if self.iface.tau > 0.0 {
            let sw = Stopwatch::start();
            sources.axpy(1.0, &self.iface.surface_tension_source()?);
            timers.add(Category::SurfaceTension, sw.seconds());
        }
        ensure_finite(&sources, "vorticity sources")?;
        if let Some(s) = &stretch {
            ensure_finite(s, "stretching")?;
        }
        self.trace.push(Stage::Sources);

        // 4. Sources onto the particles. Particles sit on nodes, so their
        // strengths are the remeshed node values and the kick is nodal.
        let sw = Stopwatch::start();
        let mut occupied = vec![false; spec.len()];
        let h = spec.h();
        let origin = spec.origin();
        for p in self.particles.positions() {
            let mut c = [0usize; 3];
            for a in 0..dim {
                c[a] = ((p[a] - origin[a]) / h).round() as usize % spec.n()[a];
            }
            occupied[spec.index(c[0], c[1], c[2])] = true;
        }
        let mut wp = particles::remesh(&self.particles, &spec)?;
        timers.add(Category::Particles, sw.seconds());
        // Penalization is the curl of the penalty force on the projected
        // velocity, summed with the other sources.
        let sw = Stopwatch::start();
        let lambda = 1.0 / dt;
        let mut rhs_total = sources;
        let mut relaxed = Vec::with_capacity(self.bodies.len());
        for (body, phi) in self.bodies.iter().zip(&self.body_phis) {
            let pen = rigid::penalization_source(&u_tilde, &wp, body, phi, eps, lambda)?;
            rhs_total.axpy(1.0, &pen);
            relaxed.push(pen);
        }
        timers.add(Category::RigidCoupling, sw.seconds());
        let before = wp.clone();
        wp.axpy(dt, &rhs_total);
        let mut residual: f64 = 0.0;
        for ((body, phi), pen) in self.bodies.iter().zip(&self.body_phis).zip(&relaxed) {
            let target = body.rigid_vorticity();
            let ph = phi.data();
            for i in 0..spec.len() {
                if smoothed_heaviside(ph[i] / eps) == 1.0 {
                    for c in 0..nc {
                        let t = if nc == 1 { target[2] } else { target[c] };
                        let relaxed = before.comp(c).data()[i] + dt * pen.comp(c).data()[i];
                        residual = residual.max((relaxed - t).abs());
                    }
                }
            }
        }
        self.penalization_residual = residual;
        ensure_finite(&wp, "particle strengths")?;
        let sw = Stopwatch::start();
        let nodes: Vec<usize> = (0..spec.len())
            .filter(|&i| occupied[i] || (0..nc).any(|c| wp.comp(c).data()[i] != 0.0))
            .collect();
        let mut moving = ParticleSet::new(&spec);
        particles::push_node_particles(&mut moving, &wp, &nodes);
        timers.add(Category::Particles, sw.seconds());
        self.trace.push(Stage::Interpolate);

        // 5. Advection of particles, level set and bodies.
        let sw = Stopwatch::start();
        let rhs = stretch.as_ref().map(|s| s as &dyn Sampler);
        particles::advect(&mut moving, &spec, &u, rhs, dt, self.params.rk_order)?;
        timers.add(Category::Particles, sw.seconds());
        let reinit = self.params.reinit_every > 0 && (self.step_index + 1) % self.params.reinit_every == 0;
        let sw = Stopwatch::start();
        let active = !self.iface.is_passive();
        if active {
            self.iface.phi = interface::advect_phi_semi_lagrangian(&self.iface.phi, &u, dt);
            if !self.iface.phi.all_finite() {
                return Err(Error::non_finite("level set"));
            }
        }
        timers.add(Category::LevelSet, sw.seconds());
        let sw = Stopwatch::start();
        for (body, phi) in self.bodies.iter_mut().zip(self.body_phis.iter_mut()) {
            if body.fixed {
                continue;
            }
            let mut next = rigid::advance_body(body, dt);
            let mut c = next.translation;
            spec.confine(&mut c);
            for a in 0..dim {
                if spec.is_periodic(a) {
                    next.translation[a] = c[a];
                }
            }
            *body = next;
            *phi = rigid::body_level_set(body, &spec);
        }
        rigid::check_overlap(&self.bodies, &self.body_phis, spec.h())?;
        timers.add(Category::RigidSolver, sw.seconds());
        self.trace.push(Stage::Advect);
        if reinit && active {
            let sw = Stopwatch::start();
            self.iface.phi = interface::reinitialize(&self.iface.phi, self.params.reinit_iterations);
            timers.add(Category::LevelSet, sw.seconds());
            self.trace.push(Stage::Reinitialize);
        }

        // 6. Remesh.
        let sw = Stopwatch::start();
        let mut omega = particles::remesh(&moving, &spec)?;
        timers.add(Category::Particles, sw.seconds());
        self.trace.push(Stage::Remesh);

        // 7. Viscous diffusion.
        let sw = Stopwatch::start();
        let nu = self.iface.viscosity_field();
        if nu.max_abs() > 0.0 {
            for c in 0..nc {
                let d = grid::diffusion(omega.comp(c), &nu)?;
                omega.comp_mut(c).axpy(dt, &d);
            }
        }
        ensure_finite(&omega, "diffusion")?;
        timers.add(Category::Grid, sw.seconds());
        self.trace.push(Stage::Diffusion);

        // 8. Fresh particles.
        let sw = Stopwatch::start();
        self.particles = particles::create_particles(&omega, self.params.creation_threshold_rel);
        timers.add(Category::Particles, sw.seconds());
        self.trace.push(Stage::Create);

        self.omega = omega;
        self.psi = stream.psi;
        self.u = u;
        self.step_index += 1;
        let other = (started.seconds() - timers.total()).max(0.0);
        timers.add(Category::Other, other);
        self.last_timers = timers;
        self.timers.merge(&timers);
        Ok(())
    }

    /// Runs `steps` steps, calling `observe` after each one.
    pub fn run_steps(
        &mut self,
        steps: usize,
        mut observe: impl FnMut(&SimulationState) -> Result<()>,
    ) -> Result<()> {
        for _ in 0..steps {
            self.step()?;
            observe(self)?;
        }
        Ok(())
    }
}

/// Number of steps of size `dt` covering `duration` (nearest integer).
pub fn step_count(duration: f64, dt: f64) -> usize {
    if duration <= 0.0 {
        0
    } else {
        (duration / dt).round() as usize
    }
}
