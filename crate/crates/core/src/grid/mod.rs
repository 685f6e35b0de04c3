//! Uniform Cartesian grids and node-centered fields.
//!
//! Storage is row-major with x fastest: node `(i, j, k)` lives at
//! `i + n_x * (j + n_y * k)`. Two-dimensional grids use `n_z = 1`. Node
//! `i` along an axis sits at `origin + i * h`; on periodic axes node `n`
//! wraps to node `0`, on Dirichlet axes the virtual nodes `-1` and `n` are
//! the walls.

mod ops;
mod smoothing;

pub use ops::{
    curl, curvature, derivative, diffusion, divergence, gradient, laplacian, second_derivative,
};
pub use smoothing::{smoothed_heaviside, smoothing_delta};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    Dirichlet,
}

impl Boundary {
    pub fn name(self) -> &'static str {
        match self {
            Boundary::Periodic => "periodic",
            Boundary::Dirichlet => "dirichlet",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    dim: usize,
    n: [usize; 3],
    h: f64,
    origin: [f64; 3],
    bc: [Boundary; 3],
}

impl GridSpec {
    /// Builds a grid of `n.len()` dimensions (2 or 3). `origin` and `bc`
    /// must have the same length as `n`.
    pub fn new(n: &[usize], h: f64, origin: &[f64], bc: &[Boundary]) -> Result<Self> {
        let dim = n.len();
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidGrid(format!("dimension must be 2 or 3, got {dim}")));
        }
        if origin.len() != dim || bc.len() != dim {
            return Err(Error::InvalidGrid(
                "origin and boundary lists must match the dimension".into(),
            ));
        }
        if let Some(&bad) = n.iter().find(|&&c| c < 8) {
            return Err(Error::InvalidGrid(format!("need at least 8 cells per axis, got {bad}")));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidGrid(format!("cell spacing must be positive, got {h}")));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        let mut spec = GridSpec {
            dim,
            n: [1; 3],
            h,
            origin: [0.0; 3],
            bc: [Boundary::Periodic; 3],
        };
        spec.n[..dim].copy_from_slice(n);
        spec.origin[..dim].copy_from_slice(origin);
        spec.bc[..dim].copy_from_slice(bc);
        Ok(spec)
    }

    /// Fully periodic box `[0, extent)^dim` with `n` cells per axis.
    pub fn periodic(dim: usize, n: usize, extent: f64) -> Result<Self> {
        Self::new(
            &vec![n; dim],
            extent / n as f64,
            &vec![0.0; dim],
            &vec![Boundary::Periodic; dim],
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Cells per axis; the unused third entry of a 2D grid is 1.
    pub fn n(&self) -> [usize; 3] {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    pub fn bc(&self, axis: usize) -> Boundary {
        self.bc[axis]
    }

    pub fn is_periodic(&self, axis: usize) -> bool {
        self.bc[axis] == Boundary::Periodic
    }

    pub fn fully_periodic(&self) -> bool {
        (0..self.dim).all(|a| self.is_periodic(a))
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.n[axis] as f64 * self.h
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Volume of one cell, `h^dim`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    /// Number of vorticity components: 1 in 2D (the out-of-plane part), 3 in 3D.
    pub fn vorticity_components(&self) -> usize {
        if self.dim == 2 {
            1
        } else {
            3
        }
    }

    pub fn strides(&self) -> [usize; 3] {
        [1, self.n[0], self.n[0] * self.n[1]]
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n[0] * (j + self.n[1] * k)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.n[0];
        let r = idx / self.n[0];
        [i, r % self.n[1], r / self.n[1]]
    }

    #[inline]
    pub fn node_position(&self, idx: usize) -> [f64; 3] {
        let c = self.coords(idx);
        let mut p = [0.0; 3];
        for a in 0..self.dim {
            p[a] = self.origin[a] + c[a] as f64 * self.h;
        }
        p
    }

    /// Neighbour of `idx` (whose coordinate along `axis` is `coord`) shifted by
    /// `offset` nodes; `None` when the shift leaves a Dirichlet axis.
    #[inline]
    pub fn neighbor(&self, idx: usize, coord: usize, axis: usize, offset: isize) -> Option<usize> {
        let n = self.n[axis] as isize;
        let target = coord as isize + offset;
        let stride = self.strides()[axis] as isize;
        let wrapped = if (0..n).contains(&target) {
            target
        } else if self.bc[axis] == Boundary::Periodic {
            target.rem_euclid(n)
        } else {
            return None;
        };
        Some((idx as isize + (wrapped - coord as isize) * stride) as usize)
    }

    /// Minimum-image displacement on periodic axes.
    pub fn wrap_displacement(&self, mut d: [f64; 3]) -> [f64; 3] {
        for (a, da) in d.iter_mut().enumerate().take(self.dim) {
            if self.bc[a] == Boundary::Periodic {
                let l = self.extent(a);
                *da -= l * (*da / l).round();
            }
        }
        d
    }

    /// Maps a position back into the domain: wraps periodic axes, clamps
    /// Dirichlet axes to the node range. Returns whether any clamp happened.
    pub fn confine(&self, p: &mut [f64; 3]) -> bool {
        let mut clamped = false;
        for a in 0..self.dim {
            let lo = self.origin[a];
            match self.bc[a] {
                Boundary::Periodic => {
                    let l = self.extent(a);
                    let mut x = (p[a] - lo).rem_euclid(l);
                    if x >= l {
                        x = 0.0;
                    }
                    p[a] = lo + x;
                }
                Boundary::Dirichlet => {
                    let hi = lo + (self.n[a] - 1) as f64 * self.h;
                    if p[a] < lo {
                        p[a] = lo;
                        clamped = true;
                    } else if p[a] > hi {
                        p[a] = hi;
                        clamped = true;
                    }
                }
            }
        }
        clamped
    }

    pub(crate) fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::SpecMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    spec: GridSpec,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(spec: GridSpec) -> Self {
        Self::constant(spec, 0.0)
    }

    pub fn constant(spec: GridSpec, value: f64) -> Self {
        ScalarField {
            data: vec![value; spec.len()],
            spec,
        }
    }

    pub fn from_vec(spec: GridSpec, data: Vec<f64>) -> Result<Self> {
        if data.len() != spec.len() {
            return Err(Error::SpecMismatch(format!(
                "field has {} values, grid has {} nodes",
                data.len(),
                spec.len()
            )));
        }
        Ok(ScalarField { spec, data })
    }

    /// Samples `f(position)` at every node.
    pub fn from_fn(spec: GridSpec, f: impl Fn([f64; 3]) -> f64 + Sync + Send) -> Self {
        let mut data = vec![0.0; spec.len()];
        crate::par::fill(&mut data, |idx| f(spec.node_position(idx)));
        ScalarField { spec, data }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync + Send) -> ScalarField {
        let mut data = vec![0.0; self.data.len()];
        crate::par::fill(&mut data, |i| f(self.data[i]));
        ScalarField {
            spec: self.spec,
            data,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Plain node sum in index order.
    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &ScalarField) {
        debug_assert_eq!(self.spec, other.spec);
        for (s, o) in self.data.iter_mut().zip(&other.data) {
            *s += a * o;
        }
    }

    pub fn scale(&mut self, a: f64) {
        self.data.iter_mut().for_each(|v| *v *= a);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    spec: GridSpec,
    comps: Vec<ScalarField>,
}

impl VectorField {
    pub fn zeros(spec: GridSpec, ncomp: usize) -> Self {
        VectorField {
            spec,
            comps: (0..ncomp).map(|_| ScalarField::zeros(spec)).collect(),
        }
    }

    pub fn from_components(comps: Vec<ScalarField>) -> Result<Self> {
        let Some(first) = comps.first() else {
            return Err(Error::SpecMismatch("vector field needs at least one component".into()));
        };
        let spec = *first.spec();
        for c in &comps[1..] {
            spec.check_same(c.spec())?;
        }
        Ok(VectorField { spec, comps })
    }

    /// A one-component field wrapping a scalar (2D vorticity and stream function).
    pub fn from_scalar(s: ScalarField) -> Self {
        VectorField {
            spec: *s.spec(),
            comps: vec![s],
        }
    }

    pub fn from_fn(
        spec: GridSpec,
        ncomp: usize,
        f: impl Fn([f64; 3], usize) -> f64 + Sync + Send,
    ) -> Self {
        let comps = (0..ncomp)
            .map(|c| ScalarField::from_fn(spec, |p| f(p, c)))
            .collect();
        VectorField { spec, comps }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn ncomp(&self) -> usize {
        self.comps.len()
    }

    pub fn comp(&self, c: usize) -> &ScalarField {
        &self.comps[c]
    }

    pub fn comp_mut(&mut self, c: usize) -> &mut ScalarField {
        &mut self.comps[c]
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.comps
    }

    pub fn into_components(self) -> Vec<ScalarField> {
        self.comps
    }

    /// Components at node `idx`, written into `out[..ncomp]`.
    #[inline]
    pub fn at(&self, idx: usize, out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.comps) {
            *o = c.data[idx];
        }
    }

    /// Euclidean norm of the node vector.
    pub fn norm_at(&self, idx: usize) -> f64 {
        self.comps
            .iter()
            .map(|c| c.data[idx] * c.data[idx])
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_norm(&self) -> f64 {
        (0..self.spec.len()).fold(0.0, |m, i| m.max(self.norm_at(i)))
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().fold(0.0, |m, c| m.max(c.max_abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.comps.iter().all(ScalarField::all_finite)
    }

    pub fn axpy(&mut self, a: f64, other: &VectorField) {
        for (s, o) in self.comps.iter_mut().zip(&other.comps) {
            s.axpy(a, o);
        }
    }

    pub(crate) fn check_spec(&self, other: &GridSpec) -> Result<()> {
        self.spec.check_same(other)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_grids() {
        assert!(GridSpec::new(&[4, 8], 0.1, &[0.0, 0.0], &[Boundary::Periodic; 2]).is_err());
        assert!(GridSpec::new(&[8, 8], 0.0, &[0.0, 0.0], &[Boundary::Periodic; 2]).is_err());
        assert!(GridSpec::new(&[8], 0.1, &[0.0], &[Boundary::Periodic]).is_err());
        assert!(GridSpec::new(&[8, 8], 0.1, &[0.0], &[Boundary::Periodic; 2]).is_err());
    }

    #[test]
    fn layout_is_x_fastest() {
        let spec = GridSpec::new(&[8, 9, 10], 0.5, &[1.0, 2.0, 3.0], &[Boundary::Periodic; 3])
            .unwrap();
        assert_eq!(spec.len(), 720);
        assert_eq!(spec.index(1, 0, 0), 1);
        assert_eq!(spec.index(0, 1, 0), 8);
        assert_eq!(spec.index(0, 0, 1), 72);
        assert_eq!(spec.coords(spec.index(3, 4, 5)), [3, 4, 5]);
        assert_eq!(spec.node_position(spec.index(2, 0, 1)), [2.0, 2.0, 3.5]);
        assert!((spec.extent(1) - 4.5).abs() < 1e-15);
    }

    #[test]
    fn neighbors_wrap_or_stop() {
        let spec = GridSpec::new(
            &[8, 8],
            1.0,
            &[0.0, 0.0],
            &[Boundary::Periodic, Boundary::Dirichlet],
        )
        .unwrap();
        let idx = spec.index(0, 0, 0);
        assert_eq!(spec.neighbor(idx, 0, 0, -1), Some(spec.index(7, 0, 0)));
        assert_eq!(spec.neighbor(idx, 0, 1, -1), None);
        assert_eq!(spec.neighbor(idx, 0, 1, 2), Some(spec.index(0, 2, 0)));
    }

    #[test]
    fn confine_wraps_and_clamps() {
        let spec = GridSpec::new(
            &[8, 8],
            0.125,
            &[0.0, 0.0],
            &[Boundary::Periodic, Boundary::Dirichlet],
        )
        .unwrap();
        let mut p = [1.25, 2.0, 0.0];
        assert!(spec.confine(&mut p));
        assert!((p[0] - 0.25).abs() < 1e-15);
        assert_eq!(p[1], 0.875);
        let d = spec.wrap_displacement([0.9, 0.9, 0.0]);
        assert!((d[0] + 0.1).abs() < 1e-12);
        assert_eq!(d[1], 0.9);
    }
}
