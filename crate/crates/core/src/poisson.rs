//! Stream-function Poisson solver, `Δψ = −ω`, and the velocity `u = ∇×ψ`.
//!
//! The solve diagonalizes the compact second-order Laplacian of
//! [`crate::grid::laplacian`] exactly: complex FFTs on periodic axes and
//! type-I sine transforms on Dirichlet axes (ψ = 0 on the virtual wall nodes
//! one spacing outside the domain). The symbol is the discrete eigenvalue
//! `(2 − 2cos θ)/h²`, so `laplacian(solve(ω)) = −ω` holds to round-off.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{self, Boundary, GridSpec, ScalarField, VectorField};
use crate::par;

type C64 = Complex<f64>;

#[derive(Clone)]
struct AxisTransform {
    bc: Boundary,
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// Eigenvalues of −∂² along this axis, one per mode.
    eigen: Vec<f64>,
}

impl AxisTransform {
    fn new(planner: &mut FftPlanner<f64>, bc: Boundary, n: usize, h: f64) -> Self {
        let h2 = h * h;
        match bc {
            Boundary::Periodic => AxisTransform {
                bc,
                n,
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
                eigen: (0..n)
                    .map(|k| (2.0 - 2.0 * (2.0 * PI * k as f64 / n as f64).cos()) / h2)
                    .collect(),
            },
            Boundary::Dirichlet => {
                let len = 2 * (n + 1);
                let fwd = planner.plan_fft_forward(len);
                AxisTransform {
                    bc,
                    n,
                    inverse: fwd.clone(),
                    forward: fwd,
                    eigen: (0..n)
                        .map(|k| (2.0 - 2.0 * (PI * (k + 1) as f64 / (n + 1) as f64).cos()) / h2)
                        .collect(),
                }
            }
        }
    }

    fn scratch_len(&self) -> usize {
        self.forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len())
    }

    /// Transforms one line in place. `work` holds at least `2(n+1)` entries.
    fn apply(&self, line: &mut [C64], work: &mut Vec<C64>, scratch: &mut [C64], inverse: bool) {
        match self.bc {
            Boundary::Periodic => {
                if inverse {
                    self.inverse.process_with_scratch(line, scratch);
                    let s = 1.0 / self.n as f64;
                    line.iter_mut().for_each(|v| *v *= s);
                } else {
                    self.forward.process_with_scratch(line, scratch);
                }
            }
            Boundary::Dirichlet => {
                // DST-I through an odd extension of length 2(n+1):
                // X_k = (i/2) Y_{k+1}. The transform is its own inverse up to
                // a factor 2/(n+1).
                let n = self.n;
                let len = 2 * (n + 1);
                work.clear();
                work.resize(len, C64::new(0.0, 0.0));
                for (j, v) in line.iter().enumerate() {
                    work[j + 1] = *v;
                    work[len - 1 - j] = -*v;
                }
                self.forward.process_with_scratch(work, scratch);
                let s = if inverse { 1.0 / (n + 1) as f64 } else { 0.5 };
                for (k, v) in line.iter_mut().enumerate() {
                    let y = work[k + 1];
                    *v = C64::new(-y.im * s, y.re * s);
                }
            }
        }
    }
}

/// Raw pointer shared by tiles that write disjoint entries.
#[derive(Clone, Copy)]
struct SharedBuf(*mut C64);
unsafe impl Send for SharedBuf {}
unsafe impl Sync for SharedBuf {}

impl SharedBuf {
    fn get(self) -> *mut C64 {
        self.0
    }
}

/// Precomputed transforms and symbol for one grid. Immutable once built;
/// scratch space is allocated per solve.
#[derive(Clone)]
pub struct PoissonPlan {
    spec: GridSpec,
    axes: Vec<AxisTransform>,
}

impl std::fmt::Debug for PoissonPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PoissonPlan").field("spec", &self.spec).finish()
    }
}

/// Stream function plus the mean removed from each vorticity component
/// (non-zero only on fully periodic grids).
#[derive(Clone, Debug)]
pub struct StreamSolution {
    pub psi: VectorField,
    pub subtracted_mean: Vec<f64>,
}

impl PoissonPlan {
    pub fn new(spec: &GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        let axes = (0..spec.dim())
            .map(|a| AxisTransform::new(&mut planner, spec.bc(a), spec.n()[a], spec.h()))
            .collect();
        PoissonPlan { spec: *spec, axes }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    fn transform(&self, buf: &mut [C64], inverse: bool) {
        const BLOCK: usize = 16;
        let n = self.spec.n();
        let strides = self.spec.strides();
        let total = buf.len();
        for (axis, tr) in self.axes.iter().enumerate() {
            let len = n[axis];
            let st = strides[axis];
            let scratch_len = tr.scratch_len();
            if st == 1 {
                par::for_each_chunk(buf, BLOCK * len, |_, block| {
                    let mut work = Vec::with_capacity(2 * (len + 1));
                    let mut scratch = vec![C64::new(0.0, 0.0); scratch_len];
                    for line in block.chunks_mut(len) {
                        tr.apply(line, &mut work, &mut scratch, inverse);
                    }
                });
                continue;
            }
            // Lines along a strided axis are handled in tiles of BLOCK
            // neighbours so that gathers and scatters touch contiguous runs.
            let outer = total / (st * len);
            let tiles_per_outer = st.div_ceil(BLOCK);
            let out = SharedBuf(buf.as_mut_ptr());
            par::for_each_index(outer * tiles_per_outer, |t| {
                let base = (t / tiles_per_outer) * st * len;
                let i0 = (t % tiles_per_outer) * BLOCK;
                let width = BLOCK.min(st - i0);
                let mut tile = vec![C64::new(0.0, 0.0); width * len];
                let mut work = Vec::with_capacity(2 * (len + 1));
                let mut scratch = vec![C64::new(0.0, 0.0); scratch_len];
                for j in 0..len {
                    let row = base + j * st + i0;
                    for k in 0..width {
                        // SAFETY: index < total; this tile only reads the
                        // entries it later writes.
                        tile[k * len + j] = unsafe { *out.get().add(row + k) };
                    }
                }
                for line in tile.chunks_mut(len) {
                    tr.apply(line, &mut work, &mut scratch, inverse);
                }
                for j in 0..len {
                    let row = base + j * st + i0;
                    for k in 0..width {
                        // SAFETY: tiles cover disjoint index sets.
                        unsafe { *out.get().add(row + k) = tile[k * len + j] };
                    }
                }
            });
        }
    }

    /// Solves `Δψ = −rhs` for one component; returns ψ and the subtracted mean.
    pub fn solve_component(&self, rhs: &ScalarField) -> Result<(ScalarField, f64)> {
        self.spec.check_same(rhs.spec())?;
        if !rhs.all_finite() {
            return Err(Error::non_finite("poisson input"));
        }
        let periodic = self.spec.fully_periodic();
        let mean = if periodic {
            rhs.sum() / self.spec.len() as f64
        } else {
            0.0
        };
        let mut buf: Vec<C64> = rhs.data().iter().map(|&v| C64::new(v - mean, 0.0)).collect();
        self.transform(&mut buf, false);
        let row = self.spec.n()[0];
        par::for_each_chunk(&mut buf, row, |r, chunk| {
            let c = self.spec.coords(r * row);
            let rest: f64 = self.axes[1..].iter().enumerate().map(|(a, t)| t.eigen[c[a + 1]]).sum();
            for (i, v) in chunk.iter_mut().enumerate() {
                let lambda = self.axes[0].eigen[i] + rest;
                *v = if lambda == 0.0 { C64::new(0.0, 0.0) } else { *v / lambda };
            }
        });
        self.transform(&mut buf, true);
        let psi = ScalarField::from_vec(self.spec, buf.iter().map(|v| v.re).collect())?;
        Ok((psi, mean))
    }
}

/// Solves `Δψ = −ω` componentwise.
pub fn solve_stream(omega: &VectorField, plan: &PoissonPlan) -> Result<StreamSolution> {
    omega.check_spec(plan.spec())?;
    let mut comps = Vec::with_capacity(omega.ncomp());
    let mut means = Vec::with_capacity(omega.ncomp());
    for c in omega.components() {
        let (psi, mean) = plan.solve_component(c)?;
        comps.push(psi);
        means.push(mean);
    }
    Ok(StreamSolution {
        psi: VectorField::from_components(comps)?,
        subtracted_mean: means,
    })
}

/// `u = ∇×ψ`: `(∂yψ, −∂xψ)` in 2D, the vector curl in 3D.
pub fn velocity_from_stream(psi: &VectorField) -> Result<VectorField> {
    let spec = *psi.spec();
    match (spec.dim(), psi.ncomp()) {
        (2, 1) => {
            let ux = grid::derivative(psi.comp(0), 1);
            let mut uy = grid::derivative(psi.comp(0), 0);
            uy.scale(-1.0);
            VectorField::from_components(vec![ux, uy])
        }
        (3, 3) => grid::curl(psi),
        (d, c) => Err(Error::SpecMismatch(format!(
            "stream function with {c} components on a {d}D grid"
        ))),
    }
}
