//! Second-order finite-difference operators on node-centered fields.
//!
//! Periodic axes use centered stencils with wrap-around. Dirichlet axes use
//! centered stencils in the interior and second-order one-sided stencils on
//! the first and last node.

use super::{GridSpec, ScalarField, VectorField};
use crate::error::{Error, Result};
use crate::par;

/// Evaluates `f(idx, coords)` at every node, row-parallel.
pub(crate) fn map_nodes<F>(spec: &GridSpec, f: F) -> ScalarField
where
    F: Fn(usize, [usize; 3]) -> f64 + Sync + Send,
{
    let [nx, ny, _] = spec.n();
    let mut data = vec![0.0; spec.len()];
    par::for_each_row(&mut data, nx, |r, row| {
        let (j, k) = (r % ny, r / ny);
        let base = r * nx;
        for (i, v) in row.iter_mut().enumerate() {
            *v = f(base + i, [i, j, k]);
        }
    });
    ScalarField { spec: *spec, data }
}

/// First derivative along `axis`.
pub fn derivative(s: &ScalarField, axis: usize) -> ScalarField {
    let spec = s.spec();
    assert!(axis < spec.dim(), "axis {axis} out of range");
    let f = s.data();
    let n = spec.n()[axis];
    let st = spec.strides()[axis];
    let inv = 0.5 / spec.h();
    let periodic = spec.is_periodic(axis);
    map_nodes(spec, |idx, c| {
        let i = c[axis];
        if i > 0 && i + 1 < n {
            (f[idx + st] - f[idx - st]) * inv
        } else if periodic {
            let ip = if i + 1 == n { idx + st - n * st } else { idx + st };
            let im = if i == 0 { idx + (n - 1) * st } else { idx - st };
            (f[ip] - f[im]) * inv
        } else if i == 0 {
            (-3.0 * f[idx] + 4.0 * f[idx + st] - f[idx + 2 * st]) * inv
        } else {
            (3.0 * f[idx] - 4.0 * f[idx - st] + f[idx - 2 * st]) * inv
        }
    })
}

/// Second derivative along `axis`.
pub fn second_derivative(s: &ScalarField, axis: usize) -> ScalarField {
    let spec = s.spec();
    assert!(axis < spec.dim(), "axis {axis} out of range");
    let f = s.data();
    let n = spec.n()[axis];
    let st = spec.strides()[axis];
    let inv = 1.0 / (spec.h() * spec.h());
    let periodic = spec.is_periodic(axis);
    map_nodes(spec, |idx, c| {
        let i = c[axis];
        if i > 0 && i + 1 < n {
            (f[idx + st] - 2.0 * f[idx] + f[idx - st]) * inv
        } else if periodic {
            let ip = if i + 1 == n { idx + st - n * st } else { idx + st };
            let im = if i == 0 { idx + (n - 1) * st } else { idx - st };
            (f[ip] - 2.0 * f[idx] + f[im]) * inv
        } else if i == 0 {
            (2.0 * f[idx] - 5.0 * f[idx + st] + 4.0 * f[idx + 2 * st] - f[idx + 3 * st]) * inv
        } else {
            (2.0 * f[idx] - 5.0 * f[idx - st] + 4.0 * f[idx - 2 * st] - f[idx - 3 * st]) * inv
        }
    })
}

pub fn gradient(s: &ScalarField) -> VectorField {
    let comps = (0..s.spec().dim()).map(|a| derivative(s, a)).collect();
    VectorField {
        spec: *s.spec(),
        comps,
    }
}

pub fn divergence(v: &VectorField) -> Result<ScalarField> {
    let dim = v.spec().dim();
    if v.ncomp() != dim {
        return Err(Error::SpecMismatch(format!(
            "divergence needs {dim} components, got {}",
            v.ncomp()
        )));
    }
    let mut out = derivative(v.comp(0), 0);
    for a in 1..dim {
        out.axpy(1.0, &derivative(v.comp(a), a));
    }
    Ok(out)
}

/// Curl of a velocity-like field. In 2D the result has a single component,
/// `∂x v_y − ∂y v_x`; in 3D it is the usual vector curl.
pub fn curl(v: &VectorField) -> Result<VectorField> {
    let spec = *v.spec();
    let dim = spec.dim();
    if v.ncomp() != dim {
        return Err(Error::SpecMismatch(format!(
            "curl needs {dim} components, got {}",
            v.ncomp()
        )));
    }
    let d = |c: usize, a: usize| derivative(v.comp(c), a);
    let comps = if dim == 2 {
        let mut w = d(1, 0);
        w.axpy(-1.0, &d(0, 1));
        vec![w]
    } else {
        let mut wx = d(2, 1);
        wx.axpy(-1.0, &d(1, 2));
        let mut wy = d(0, 2);
        wy.axpy(-1.0, &d(2, 0));
        let mut wz = d(1, 0);
        wz.axpy(-1.0, &d(0, 1));
        vec![wx, wy, wz]
    };
    Ok(VectorField { spec, comps })
}

/// Compact (2·dim+1)-point Laplacian.
pub fn laplacian(s: &ScalarField) -> ScalarField {
    let mut out = second_derivative(s, 0);
    for a in 1..s.spec().dim() {
        out.axpy(1.0, &second_derivative(s, a));
    }
    out
}

/// Mean curvature `∇·(∇φ/|∇φ|)`, expanded into first and second derivatives.
///
/// Nodes with `|∇φ| < 1e-8` get 0 and the result is clamped to `|κ| ≤ 1/h`.
pub fn curvature(phi: &ScalarField) -> ScalarField {
    let spec = *phi.spec();
    let dim = spec.dim();
    let d1: Vec<ScalarField> = (0..dim).map(|a| derivative(phi, a)).collect();
    let d2: Vec<ScalarField> = (0..dim).map(|a| second_derivative(phi, a)).collect();
    let mut mixed = Vec::new();
    for a in 0..dim {
        for b in a + 1..dim {
            mixed.push((a, b, derivative(&d1[a], b)));
        }
    }
    let limit = 1.0 / spec.h();
    map_nodes(&spec, |idx, _| {
        let g2: f64 = d1.iter().map(|g| g.data[idx] * g.data[idx]).sum();
        let g = g2.sqrt();
        if g < 1e-8 {
            return 0.0;
        }
        let mut num = 0.0;
        for a in 0..dim {
            let ga = d1[a].data[idx];
            num += d2[a].data[idx] * (g2 - ga * ga);
        }
        for (a, b, m) in &mixed {
            num -= 2.0 * d1[*a].data[idx] * d1[*b].data[idx] * m.data[idx];
        }
        (num / (g2 * g)).clamp(-limit, limit)
    })
}

/// Conservative variable-coefficient diffusion `∇·(ν∇ω)`.
///
/// Face viscosities are arithmetic means of the adjacent nodes. On Dirichlet
/// axes the field is taken as zero one node beyond the wall. On periodic
/// grids the node sum of the result telescopes to zero.
pub fn diffusion(omega: &ScalarField, nu: &ScalarField) -> Result<ScalarField> {
    let spec = *omega.spec();
    spec.check_same(nu.spec())?;
    let w = omega.data();
    let v = nu.data();
    let inv = 1.0 / (spec.h() * spec.h());
    let dim = spec.dim();
    Ok(map_nodes(&spec, |idx, c| {
        let mut acc = 0.0;
        for a in 0..dim {
            let (wp, vp) = match spec.neighbor(idx, c[a], a, 1) {
                Some(j) => (w[j], v[j]),
                None => (0.0, v[idx]),
            };
            let (wm, vm) = match spec.neighbor(idx, c[a], a, -1) {
                Some(j) => (w[j], v[j]),
                None => (0.0, v[idx]),
            };
            let fp = 0.5 * (v[idx] + vp) * (wp - w[idx]);
            let fm = 0.5 * (v[idx] + vm) * (w[idx] - wm);
            acc += fp - fm;
        }
        acc * inv
    }))
}
