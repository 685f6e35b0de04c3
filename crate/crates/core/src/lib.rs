//! Vortex-in-cell simulation of bi-phase (liquid/gas) incompressible flow
//! two-way coupled with rigid solids.
//!
//! Vorticity is carried by particles that are remeshed onto a uniform grid
//! every step. The grid hosts the stream-function Poisson solve, all finite
//! differences, the liquid/gas level set and the penalization terms that tie
//! the fluid to immersed rigid bodies.
//!
//! Module map:
//! - [`grid`]: uniform grid containers, second-order stencils, smoothed
//!   Heaviside and delta profiles.
//! - [`poisson`]: FFT / sine-transform stream-function solver.
//! - [`particles`]: M4′ interpolation, remeshing, Runge–Kutta advection.
//! - [`interface`]: level-set transport, reinitialization, density and
//!   surface-tension sources.
//! - [`rigid`]: signed-distance bodies, rigid projection, blending and
//!   penalization.
//! - [`solver`]: the per-step orchestration and stability checks.
//! - [`scene_io`]: scene files, VTK frames, diagnostics CSV.
//! - [`experiments`]: built-in falling-cylinder validation and 3D smoke scenes.

pub mod error;
pub mod experiments;
pub mod grid;
pub mod interface;
pub mod par;
pub mod particles;
pub mod poisson;
pub mod rigid;
pub mod scene_io;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{Boundary, GridSpec, ScalarField, VectorField};
