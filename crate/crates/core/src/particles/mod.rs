//! Vortex particles: grid-to-particle interpolation, particle-to-grid
//! remeshing, Runge–Kutta advection and thresholded creation.
//!
//! Interpolation and remeshing share the tensor-product M4′ stencil, so
//! remeshing is exactly the transpose of interpolation. All particles have
//! the cell volume `h^dim`; strengths are point values of vorticity and a
//! remeshed node value is `Σ_p ω_p W(node − x_p)`.

mod kernel;

use std::io::Write;

pub use kernel::{m4_prime, m4_weights};
pub(crate) use kernel::Stencil;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField, VectorField};
use crate::par;

/// Something that can be evaluated at arbitrary positions.
pub trait Sampler: Sync {
    fn ncomp(&self) -> usize;
    fn sample(&self, p: &[f64; 3], out: &mut [f64]);
}

impl Sampler for VectorField {
    fn ncomp(&self) -> usize {
        VectorField::ncomp(self)
    }

    fn sample(&self, p: &[f64; 3], out: &mut [f64]) {
        let st = Stencil::new(self.spec(), p);
        for (o, c) in out.iter_mut().zip(self.components()) {
            *o = st.gather(c.data());
        }
    }
}

/// Adapts a closure `f(position, out)` into a [`Sampler`].
pub struct FnSampler<F> {
    ncomp: usize,
    f: F,
}

impl<F: Fn(&[f64; 3], &mut [f64]) + Sync> FnSampler<F> {
    pub fn new(ncomp: usize, f: F) -> Self {
        FnSampler { ncomp, f }
    }
}

impl<F: Fn(&[f64; 3], &mut [f64]) + Sync> Sampler for FnSampler<F> {
    fn ncomp(&self) -> usize {
        self.ncomp
    }

    fn sample(&self, p: &[f64; 3], out: &mut [f64]) {
        (self.f)(p, out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RkOrder {
    Rk2,
    Rk4,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParticleSet {
    ncomp: usize,
    volume: f64,
    positions: Vec<[f64; 3]>,
    strengths: Vec<f64>,
    clamped: usize,
}

impl ParticleSet {
    pub fn new(spec: &GridSpec) -> Self {
        ParticleSet {
            ncomp: spec.vorticity_components(),
            volume: spec.cell_volume(),
            positions: Vec::new(),
            strengths: Vec::new(),
            clamped: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn ncomp(&self) -> usize {
        self.ncomp
    }

    /// Per-particle volume, `h^dim`.
    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    /// Flat strengths, `ncomp` values per particle.
    pub fn strengths(&self) -> &[f64] {
        &self.strengths
    }

    pub fn strengths_mut(&mut self) -> &mut [f64] {
        &mut self.strengths
    }

    pub fn strength(&self, p: usize) -> &[f64] {
        &self.strengths[p * self.ncomp..(p + 1) * self.ncomp]
    }

    /// Particles clamped against a Dirichlet wall during the last advection.
    pub fn clamped(&self) -> usize {
        self.clamped
    }

    pub fn push(&mut self, position: [f64; 3], strength: &[f64]) {
        assert_eq!(strength.len(), self.ncomp);
        self.positions.push(position);
        self.strengths.extend_from_slice(strength);
    }

    pub fn clear(&mut self) {
        self.positions.clear();
        self.strengths.clear();
        self.clamped = 0;
    }

    /// Writes `x,y[,z],w..` rows with a one-line header.
    pub fn write_csv<W: Write>(&self, dim: usize, mut out: W) -> std::io::Result<()> {
        let axes = ["x", "y", "z"];
        let mut header: Vec<String> = axes[..dim].iter().map(|s| s.to_string()).collect();
        if self.ncomp == 1 {
            header.push("wz".into());
        } else {
            header.extend(["wx", "wy", "wz"].iter().map(|s| s.to_string()));
        }
        writeln!(out, "{}", header.join(","))?;
        for (p, pos) in self.positions.iter().enumerate() {
            let mut cols: Vec<String> = pos[..dim].iter().map(|v| format!("{v:.17e}")).collect();
            cols.extend(self.strength(p).iter().map(|v| format!("{v:.17e}")));
            writeln!(out, "{}", cols.join(","))?;
        }
        Ok(())
    }
}

/// M4′ interpolation of `field` at `positions`; `ncomp` values per position.
pub fn interpolate_to_particles(field: &VectorField, positions: &[[f64; 3]]) -> Result<Vec<f64>> {
    if positions.iter().any(|p| p.iter().any(|v| !v.is_finite())) {
        return Err(Error::non_finite("particle position"));
    }
    let nc = field.ncomp();
    let mut out = vec![0.0; positions.len() * nc];
    par::for_each_chunk(&mut out, nc, |p, chunk| field.sample(&positions[p], chunk));
    Ok(out)
}

/// Scatters particle strengths onto the grid with the M4′ kernel.
///
/// The scatter runs in particle order, so the result is independent of the
/// thread count.
pub fn remesh(particles: &ParticleSet, spec: &GridSpec) -> Result<VectorField> {
    if particles.ncomp != spec.vorticity_components() {
        return Err(Error::SpecMismatch(format!(
            "{} strength components on a {}D grid",
            particles.ncomp,
            spec.dim()
        )));
    }
    let nc = particles.ncomp;
    let mut data: Vec<Vec<f64>> = vec![vec![0.0; spec.len()]; nc];
    for (p, pos) in particles.positions.iter().enumerate() {
        if pos.iter().any(|v| !v.is_finite()) {
            return Err(Error::non_finite("particle position"));
        }
        let st = Stencil::new(spec, pos);
        for (c, d) in data.iter_mut().enumerate() {
            let s = particles.strengths[p * nc + c];
            if s != 0.0 {
                st.scatter(d, s);
            }
        }
    }
    let comps = data
        .into_iter()
        .map(|d| ScalarField::from_vec(*spec, d))
        .collect::<Result<Vec<_>>>()?;
    VectorField::from_components(comps)
}

/// Advances positions with `dx/dt = u(x)` and strengths with
/// `dω/dt = rhs(x)` using the midpoint rule (RK2) or classical RK4.
/// Positions are wrapped on periodic axes and clamped on Dirichlet axes.
pub fn advect(
    particles: &mut ParticleSet,
    spec: &GridSpec,
    velocity: &dyn Sampler,
    rhs: Option<&dyn Sampler>,
    dt: f64,
    order: RkOrder,
) -> Result<()> {
    let nc = particles.ncomp;
    if let Some(r) = rhs {
        if r.ncomp() != nc {
            return Err(Error::SpecMismatch("strength right-hand side components".into()));
        }
    }
    struct Moved {
        pos: [f64; 3],
        strength: [f64; 3],
        clamped: bool,
        finite: bool,
    }
    let dim = spec.dim();
    let positions = &particles.positions;
    let strengths = &particles.strengths;
    let mut moved: Vec<Moved> = (0..positions.len())
        .map(|_| Moved {
            pos: [0.0; 3],
            strength: [0.0; 3],
            clamped: false,
            finite: true,
        })
        .collect();
    let eval = |x: &[f64; 3], u: &mut [f64; 3], r: &mut [f64; 3]| {
        velocity.sample(x, &mut u[..dim]);
        if let Some(rs) = rhs {
            rs.sample(x, &mut r[..nc]);
        }
    };
    let offset = |x: &[f64; 3], u: &[f64; 3], s: f64| {
        let mut y = *x;
        for a in 0..dim {
            y[a] += s * u[a];
        }
        y
    };
    par::fill(&mut moved, |p| {
        let x0 = positions[p];
        let (mut du, mut dr) = ([0.0; 3], [0.0; 3]);
        match order {
            RkOrder::Rk2 => {
                let (mut u1, mut r1) = ([0.0; 3], [0.0; 3]);
                eval(&x0, &mut u1, &mut r1);
                let xm = offset(&x0, &u1, 0.5 * dt);
                eval(&xm, &mut du, &mut dr);
                let _ = r1;
            }
            RkOrder::Rk4 => {
                let (mut u1, mut r1) = ([0.0; 3], [0.0; 3]);
                let (mut u2, mut r2) = ([0.0; 3], [0.0; 3]);
                let (mut u3, mut r3) = ([0.0; 3], [0.0; 3]);
                let (mut u4, mut r4) = ([0.0; 3], [0.0; 3]);
                eval(&x0, &mut u1, &mut r1);
                eval(&offset(&x0, &u1, 0.5 * dt), &mut u2, &mut r2);
                eval(&offset(&x0, &u2, 0.5 * dt), &mut u3, &mut r3);
                eval(&offset(&x0, &u3, dt), &mut u4, &mut r4);
                for a in 0..3 {
                    du[a] = (u1[a] + 2.0 * u2[a] + 2.0 * u3[a] + u4[a]) / 6.0;
                    dr[a] = (r1[a] + 2.0 * r2[a] + 2.0 * r3[a] + r4[a]) / 6.0;
                }
            }
        }
        let mut pos = offset(&x0, &du, dt);
        let mut strength = [0.0; 3];
        for c in 0..nc {
            strength[c] = strengths[p * nc + c] + dt * dr[c];
        }
        let finite = du.iter().chain(&dr).all(|v| v.is_finite());
        let clamped = finite && spec.confine(&mut pos);
        Moved {
            pos,
            strength,
            clamped,
            finite,
        }
    });
    if moved.iter().any(|m| !m.finite) {
        return Err(Error::non_finite("particle advection"));
    }
    particles.clamped = moved.iter().filter(|m| m.clamped).count();
    for (p, m) in moved.into_iter().enumerate() {
        particles.positions[p] = m.pos;
        particles.strengths[p * nc..(p + 1) * nc].copy_from_slice(&m.strength[..nc]);
    }
    Ok(())
}

/// Midpoint-rule advection; see [`advect`].
pub fn advect_rk2(
    particles: &mut ParticleSet,
    spec: &GridSpec,
    velocity: &dyn Sampler,
    rhs: Option<&dyn Sampler>,
    dt: f64,
) -> Result<()> {
    advect(particles, spec, velocity, rhs, dt, RkOrder::Rk2)
}

/// Nodes where `|ω| > threshold_rel · max|ω|`, in index order. Empty when
/// `ω ≡ 0`.
pub fn select_nodes(omega: &VectorField, threshold_rel: f64) -> Vec<usize> {
    let max = omega.max_norm();
    if max == 0.0 {
        return Vec::new();
    }
    let cut = threshold_rel * max;
    (0..omega.spec().len())
        .filter(|&i| omega.norm_at(i) > cut)
        .collect()
}

/// Appends one particle per listed node, carrying the node's vorticity.
pub fn push_node_particles(particles: &mut ParticleSet, omega: &VectorField, nodes: &[usize]) {
    let mut w = [0.0; 3];
    let nc = omega.ncomp();
    for &idx in nodes {
        omega.at(idx, &mut w[..nc]);
        particles.push(omega.spec().node_position(idx), &w[..nc]);
    }
}

/// One particle per node with `|ω| > threshold_rel · max|ω|`, placed on the
/// node with the node's vorticity.
pub fn create_particles(omega: &VectorField, threshold_rel: f64) -> ParticleSet {
    let mut set = ParticleSet::new(omega.spec());
    push_node_particles(&mut set, omega, &select_nodes(omega, threshold_rel));
    set
}
