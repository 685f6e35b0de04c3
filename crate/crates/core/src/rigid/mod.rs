//! Rigid solids immersed through their own level sets.
//!
//! A body's level set is never transported by a PDE: it is re-evaluated
//! from the body-frame shape at the current pose. The fluid velocity inside
//! the solid is projected onto a rigid motion, blended back with the
//! smoothed Heaviside, and the mismatch is penalized in the vorticity
//! equation.

mod shape;

pub use shape::{RigidShape, SdfGrid};

use nalgebra::{UnitQuaternion, Vector3};

use crate::error::{Error, Result};
use crate::grid::{self, smoothed_heaviside, GridSpec, ScalarField, VectorField};
use crate::par;

#[derive(Clone, Debug, PartialEq)]
pub struct RigidBody {
    pub shape: RigidShape,
    pub density: f64,
    /// Static bodies (tank walls, fixed obstacles) never move.
    pub fixed: bool,
    /// World position of the body-frame origin.
    pub translation: [f64; 3],
    /// Body-to-world rotation; 2D bodies rotate about z.
    pub rotation: UnitQuaternion<f64>,
    pub velocity: [f64; 3],
    /// Angular velocity; only the z component is used in 2D.
    pub omega: [f64; 3],
}

impl RigidBody {
    pub fn new(shape: RigidShape, density: f64, translation: [f64; 3]) -> Result<Self> {
        if !(density > 0.0) {
            return Err(Error::InvalidScene(format!("body density must be positive, got {density}")));
        }
        Ok(RigidBody {
            shape,
            density,
            fixed: false,
            translation,
            rotation: UnitQuaternion::identity(),
            velocity: [0.0; 3],
            omega: [0.0; 3],
        })
    }

    pub fn fixed(mut self) -> Self {
        self.fixed = true;
        self
    }

    /// In-plane rotation angle (2D bodies).
    pub fn angle(&self) -> f64 {
        let (_, _, yaw) = self.rotation.euler_angles();
        yaw
    }

    /// Vorticity of the rigid motion, `2Ω`.
    pub fn rigid_vorticity(&self) -> [f64; 3] {
        self.omega.map(|w| 2.0 * w)
    }

    /// Displacement from the body origin, minimum image on periodic axes.
    fn arm(&self, spec: &GridSpec, x: &[f64; 3]) -> [f64; 3] {
        let mut d = [0.0; 3];
        for a in 0..spec.dim() {
            d[a] = x[a] - self.translation[a];
        }
        spec.wrap_displacement(d)
    }

    /// Rigid velocity `U + Ω×r` at `x`.
    pub fn rigid_velocity(&self, spec: &GridSpec, x: &[f64; 3]) -> [f64; 3] {
        let r = self.arm(spec, x);
        let w = &self.omega;
        let mut u = self.velocity;
        if spec.dim() == 2 {
            u[0] -= w[2] * r[1];
            u[1] += w[2] * r[0];
            u[2] = 0.0;
        } else {
            u[0] += w[1] * r[2] - w[2] * r[1];
            u[1] += w[2] * r[0] - w[0] * r[2];
            u[2] += w[0] * r[1] - w[1] * r[0];
        }
        u
    }
}

/// Level set of the body at its current pose.
pub fn body_level_set(body: &RigidBody, spec: &GridSpec) -> ScalarField {
    let dim = spec.dim();
    let inv = body.rotation.inverse();
    ScalarField::from_fn(*spec, |x| {
        let d = body.arm(spec, &x);
        let local = inv * Vector3::new(d[0], d[1], d[2]);
        body.shape.signed_distance(&[local.x, local.y, local.z], dim)
    })
}

/// Result of projecting a velocity field onto a rigid motion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidProjection {
    pub velocity: [f64; 3],
    /// H-weighted mean vorticity; only z in 2D.
    pub mean_vorticity: [f64; 3],
    /// `ω̄ / 2`.
    pub omega: [f64; 3],
}

/// H-weighted means of `u` and `ω` over the solid. `body` is only used to
/// label the error when the solid does not meet the grid.
pub fn project_rigid(
    u: &VectorField,
    omega: &VectorField,
    phi_s: &ScalarField,
    epsilon: f64,
    body: usize,
    deterministic: bool,
) -> Result<RigidProjection> {
    let spec = phi_s.spec();
    u.check_spec(spec)?;
    omega.check_spec(spec)?;
    let phi = phi_s.data();
    let weight = |i: usize| smoothed_heaviside(phi[i] / epsilon);
    let total = par::sum(phi.len(), deterministic, weight);
    if !(total > 1e-12) {
        return Err(Error::EmptySolidSupport { body });
    }
    let mean = |f: &ScalarField| {
        let d = f.data();
        par::sum(d.len(), deterministic, |i| weight(i) * d[i]) / total
    };
    let mut velocity = [0.0; 3];
    for (c, v) in velocity.iter_mut().enumerate().take(u.ncomp()) {
        *v = mean(u.comp(c));
    }
    let mut mean_vorticity = [0.0; 3];
    if omega.ncomp() == 1 {
        mean_vorticity[2] = mean(omega.comp(0));
    } else {
        for (c, w) in mean_vorticity.iter_mut().enumerate() {
            *w = mean(omega.comp(c));
        }
    }
    Ok(RigidProjection {
        velocity,
        mean_vorticity,
        omega: mean_vorticity.map(|w| 0.5 * w),
    })
}

fn vorticity_components(body: &RigidBody, ncomp: usize) -> Vec<f64> {
    let w = body.rigid_vorticity();
    if ncomp == 1 {
        vec![w[2]]
    } else {
        w.to_vec()
    }
}

/// `u = ū H + ũ (1−H)` and `ω = 2Ω H + ω̃ (1−H)` with `ū = U + Ω×r`.
pub fn blend_fields(
    u: &VectorField,
    omega: &VectorField,
    body: &RigidBody,
    phi_s: &ScalarField,
    epsilon: f64,
) -> Result<(VectorField, VectorField)> {
    let spec = *phi_s.spec();
    u.check_spec(&spec)?;
    omega.check_spec(&spec)?;
    let phi = phi_s.data();
    let mut ub = u.clone();
    for c in 0..u.ncomp() {
        let src = u.comp(c).data();
        par::fill(ub.comp_mut(c).data_mut(), |i| {
            let hv = smoothed_heaviside(phi[i] / epsilon);
            if hv == 0.0 {
                return src[i];
            }
            let rigid = body.rigid_velocity(&spec, &spec.node_position(i))[c];
            rigid * hv + src[i] * (1.0 - hv)
        });
    }
    let wbar = vorticity_components(body, omega.ncomp());
    let mut wb = omega.clone();
    for (c, &target) in wbar.iter().enumerate() {
        let src = omega.comp(c).data();
        par::fill(wb.comp_mut(c).data_mut(), |i| {
            let hv = smoothed_heaviside(phi[i] / epsilon);
            target * hv + src[i] * (1.0 - hv)
        });
    }
    Ok((ub, wb))
}

/// Vorticity form of the penalization `λH(ū − u)`: its discrete curl
/// `λ∇_h×(H(ū − u))`, which expands to `λH(ω̄ − ∇_h×u) − λ(ζ/ε)∇φ_s×(ū − u)`
/// up to the product rule. `omega` only fixes the component layout.
pub fn penalization_source(
    u: &VectorField,
    omega: &VectorField,
    body: &RigidBody,
    phi_s: &ScalarField,
    epsilon: f64,
    lambda: f64,
) -> Result<VectorField> {
    let spec = *phi_s.spec();
    u.check_spec(&spec)?;
    omega.check_spec(&spec)?;
    let dim = spec.dim();
    let phi = phi_s.data();
    let mut force = VectorField::zeros(spec, dim);
    for a in 0..dim {
        let ua = u.comp(a).data();
        par::fill(force.comp_mut(a).data_mut(), |i| {
            let h = smoothed_heaviside(phi[i] / epsilon);
            if h == 0.0 {
                0.0
            } else {
                lambda * h * (body.rigid_velocity(&spec, &spec.node_position(i))[a] - ua[i])
            }
        });
    }
    let out = grid::curl(&force)?;
    debug_assert_eq!(out.ncomp(), omega.ncomp());
    Ok(out)
}

/// Applies the rigid transformation over `dt`.
pub fn advance_body(body: &RigidBody, dt: f64) -> RigidBody {
    let mut next = body.clone();
    if body.fixed {
        return next;
    }
    for a in 0..3 {
        next.translation[a] += body.velocity[a] * dt;
    }
    let w = Vector3::new(body.omega[0], body.omega[1], body.omega[2]) * dt;
    let step = UnitQuaternion::from_scaled_axis(w);
    next.rotation = UnitQuaternion::new_normalize((step * body.rotation).into_inner());
    next
}

/// Composite density: each moving body overrides the fluid density inside
/// its level set, `ρ ← ρ_s H + (1−H) ρ`, in declaration order.
pub fn composite_density(
    fluid: &ScalarField,
    bodies: &[RigidBody],
    phis: &[ScalarField],
    epsilon: f64,
) -> ScalarField {
    let mut rho = fluid.clone();
    for (body, phi) in bodies.iter().zip(phis) {
        if body.fixed {
            continue;
        }
        let p = phi.data();
        let rs = body.density;
        for (i, r) in rho.data_mut().iter_mut().enumerate() {
            let hv = smoothed_heaviside(p[i] / epsilon);
            if hv != 0.0 {
                *r = rs * hv + (1.0 - hv) * *r;
            }
        }
    }
    rho
}

/// Fails when two bodies (not both static) interpenetrate by more than
/// `tolerance`, measured as `min(φa + φb)`.
pub fn check_overlap(bodies: &[RigidBody], phis: &[ScalarField], tolerance: f64) -> Result<()> {
    for a in 0..bodies.len() {
        for b in a + 1..bodies.len() {
            if bodies[a].fixed && bodies[b].fixed {
                continue;
            }
            let (pa, pb) = (phis[a].data(), phis[b].data());
            let depth = pa.iter().zip(pb).map(|(x, y)| x + y).fold(f64::INFINITY, f64::min);
            if depth < -tolerance {
                return Err(Error::BodyOverlap { a, b, depth });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;
    use std::f64::consts::PI;

    fn disk(r: f64, c: [f64; 3]) -> RigidBody {
        RigidBody::new(RigidShape::Ball { radius: r }, 2.0, c).unwrap()
    }

    fn unit(n: usize) -> GridSpec {
        GridSpec::periodic(2, n, 1.0).unwrap()
    }

    #[test]
    fn rejects_bad_density() {
        assert!(RigidBody::new(RigidShape::Ball { radius: 0.1 }, 0.0, [0.0; 3]).is_err());
    }

    #[test]
    fn level_set_of_disk_and_translation() {
        let spec = unit(32);
        let c = [0.5, 0.5, 0.0];
        let phi = body_level_set(&disk(0.1, c), &spec);
        for idx in 0..spec.len() {
            let x = spec.node_position(idx);
            assert!((phi.data()[idx] - ((x[0] - c[0]).hypot(x[1] - c[1]) - 0.1)).abs() < 1e-15);
        }
        let t = [0.125, -0.25, 0.0];
        let moved = body_level_set(&disk(0.1, [c[0] + t[0], c[1] + t[1], 0.0]), &spec);
        for idx in 0..spec.len() {
            let x = spec.node_position(idx);
            let d = spec.wrap_displacement([x[0] - t[0] - c[0], x[1] - t[1] - c[1], 0.0]);
            let expect = d[0].hypot(d[1]) - 0.1;
            assert!((moved.data()[idx] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn periodic_level_set_wraps() {
        let spec = unit(32);
        let phi = body_level_set(&disk(0.1, [0.0, 0.5, 0.0]), &spec);
        let right = spec.index(31, 16, 0);
        assert!((phi.data()[right] - (1.0 / 32.0 - 0.1)).abs() < 1e-12);
    }

    #[test]
    fn rotated_sampled_box_matches_analytic() {
        let spec = unit(64);
        let h = spec.h();
        let half = [0.2, 0.08, 0.0];
        let exact = RigidShape::Box { half };
        let sampled = RigidShape::Sampled(std::sync::Arc::new(
            SdfGrid::from_fn(2, [-0.3, -0.3, 0.0], [0.3, 0.3, 0.0], h, |p| exact.signed_distance(&p, 2)).unwrap(),
        ));
        let mut body = RigidBody::new(sampled, 1.0, [0.5, 0.5, 0.0]).unwrap();
        body.rotation = UnitQuaternion::from_euler_angles(0.0, 0.0, PI / 2.0);
        let phi = body_level_set(&body, &spec);
        let rotated = RigidShape::Box { half: [0.08, 0.2, 0.0] };
        for idx in 0..spec.len() {
            let x = spec.node_position(idx);
            let e = rotated.signed_distance(&[x[0] - 0.5, x[1] - 0.5, 0.0], 2);
            if e.abs() < 2.0 * h {
                assert!((phi.data()[idx] - e).abs() < h);
            }
        }
    }

    #[test]
    fn projection_of_constant_and_rotation() {
        let spec = unit(128);
        let eps = 2.0 * spec.h();
        let c = [0.5, 0.5, 0.0];
        let phi = body_level_set(&disk(0.1, c), &spec);
        let u = VectorField::from_fn(spec, 2, |_, k| [0.3, -0.7][k]);
        let w = VectorField::zeros(spec, 1);
        let p = project_rigid(&u, &w, &phi, eps, 0, true).unwrap();
        assert!((p.velocity[0] - 0.3).abs() < 1e-14 && (p.velocity[1] + 0.7).abs() < 1e-14);

        let u = VectorField::from_fn(spec, 2, |x, k| if k == 0 { -(x[1] - c[1]) } else { x[0] - c[0] });
        let w = grid::curl(&u).unwrap();
        let p = project_rigid(&u, &w, &phi, eps, 0, true).unwrap();
        assert!(p.velocity[0].hypot(p.velocity[1]) < 1e-3);
        assert!((p.mean_vorticity[2] - 2.0).abs() < 0.04);
        assert!((p.omega[2] - 1.0).abs() < 0.02);
    }

    #[test]
    fn projection_is_an_arithmetic_mean_for_unit_weights() {
        let spec = unit(8);
        let eps = 2.0 * spec.h();
        let mut phi = ScalarField::constant(spec, 10.0);
        phi.data_mut()[3] = -10.0;
        phi.data_mut()[4] = -10.0;
        let mut u = VectorField::zeros(spec, 2);
        u.comp_mut(0).data_mut()[4] = 2.0;
        let p = project_rigid(&u, &VectorField::zeros(spec, 1), &phi, eps, 0, true).unwrap();
        assert!((p.velocity[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn empty_support_is_an_error() {
        let spec = GridSpec::new(&[16, 16], 1.0 / 16.0, &[0.0, 0.0], &[Boundary::Dirichlet; 2]).unwrap();
        let phi = body_level_set(&disk(0.1, [5.0, 5.0, 0.0]), &spec);
        let u = VectorField::zeros(spec, 2);
        let err = project_rigid(&u, &VectorField::zeros(spec, 1), &phi, 0.1, 3, true).unwrap_err();
        assert!(matches!(err, Error::EmptySolidSupport { body: 3 }));
    }

    #[test]
    fn blending_limits_and_idempotence() {
        let spec = unit(64);
        let eps = 2.0 * spec.h();
        let mut body = disk(0.15, [0.5, 0.5, 0.0]);
        body.velocity = [0.2, 0.1, 0.0];
        body.omega = [0.0, 0.0, 0.5];
        let phi = body_level_set(&body, &spec);
        let u = VectorField::from_fn(spec, 2, |x, k| (x[k] * 7.0).sin());
        let w = VectorField::from_fn(spec, 1, |x, _| x[0] - x[1]);
        let (ub, wb) = blend_fields(&u, &w, &body, &phi, eps).unwrap();
        for idx in 0..spec.len() {
            let x = spec.node_position(idx);
            if phi.data()[idx] > eps {
                assert_eq!(ub.comp(0).data()[idx], u.comp(0).data()[idx]);
                assert_eq!(wb.comp(0).data()[idx], w.comp(0).data()[idx]);
            } else if phi.data()[idx] < -eps {
                let r = body.rigid_velocity(&spec, &x);
                assert!((ub.comp(0).data()[idx] - r[0]).abs() < 1e-15);
                assert!((ub.comp(1).data()[idx] - r[1]).abs() < 1e-15);
                assert_eq!(wb.comp(0).data()[idx], 1.0);
            }
        }
        let (u2, w2) = blend_fields(&ub, &wb, &body, &phi, eps).unwrap();
        // A second pass moves values further toward the rigid field only
        // where 0 < H < 1; saturated regions are fixed points.
        for idx in 0..spec.len() {
            if phi.data()[idx].abs() > eps {
                assert!((u2.comp(0).data()[idx] - ub.comp(0).data()[idx]).abs() < 1e-15);
                assert!((w2.comp(0).data()[idx] - wb.comp(0).data()[idx]).abs() < 1e-15);
            }
        }
        // Ω = 0 and ũ = U: identity.
        body.omega = [0.0; 3];
        let u = VectorField::from_fn(spec, 2, |_, k| body.velocity[k]);
        let (ub, _) = blend_fields(&u, &VectorField::zeros(spec, 1), &body, &phi, eps).unwrap();
        for c in 0..2 {
            for (a, b) in ub.comp(c).data().iter().zip(u.comp(c).data()) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn penalization_vanishes_when_rigid_and_outside_band() {
        let spec = unit(64);
        let eps = 2.0 * spec.h();
        let mut body = disk(0.15, [0.5, 0.5, 0.0]);
        body.velocity = [0.2, 0.0, 0.0];
        body.omega = [0.0, 0.0, 0.3];
        let phi = body_level_set(&body, &spec);
        let u = VectorField::from_fn(spec, 2, |x, k| body.rigid_velocity(&spec, &x)[k]);
        let w = VectorField::from_fn(spec, 1, |_, _| 0.6);
        let s = penalization_source(&u, &w, &body, &phi, eps, 100.0).unwrap();
        assert!(s.max_abs() < 1e-12);

        let u = VectorField::from_fn(spec, 2, |x, k| (x[k] * 5.0).cos());
        let s = penalization_source(&u, &VectorField::zeros(spec, 1), &body, &phi, eps, 100.0).unwrap();
        // The discrete curl reaches one node past the band.
        for idx in 0..spec.len() {
            if phi.data()[idx] > eps + spec.h() {
                assert_eq!(s.comp(0).data()[idx], 0.0);
            }
        }
    }

    #[test]
    fn static_disk_in_stream_makes_opposite_sheets() {
        let spec = unit(64);
        let eps = 2.0 * spec.h();
        let body = disk(0.15, [0.5, 0.5, 0.0]).fixed();
        let phi = body_level_set(&body, &spec);
        let u = VectorField::from_fn(spec, 2, |_, k| if k == 0 { 1.0 } else { 0.0 });
        let w = VectorField::zeros(spec, 1);
        let s = penalization_source(&u, &w, &body, &phi, eps, 1.0).unwrap();
        let mut seen = (0, 0);
        for idx in 0..spec.len() {
            let x = spec.node_position(idx);
            let p = phi.data()[idx];
            if p > -eps && p < eps && (x[1] - 0.5).abs() > 0.05 {
                let v = s.comp(0).data()[idx];
                // Flow to the right over the top makes clockwise vorticity.
                if x[1] > 0.5 {
                    assert!(v < 0.0, "top {x:?} {v}");
                    seen.0 += 1;
                } else {
                    assert!(v > 0.0, "bottom {x:?} {v}");
                    seen.1 += 1;
                }
                // Mirror symmetry about the horizontal diameter.
                let [i, j, _] = spec.coords(idx);
                let m = spec.index(i, (64 - j) % 64, 0);
                assert!((s.comp(0).data()[m] + v).abs() < 1e-12);
            }
        }
        assert!(seen.0 > 10 && seen.1 > 10);
    }

    fn curl_mismatch(n: usize, eps: f64) -> (f64, f64) {
        // With ω the discrete curl of u the source is exactly the curl of
        // the penalty force.
        let spec = unit(n);
        let mut body = disk(0.2, [0.5, 0.5, 0.0]);
        body.velocity = [0.1, -0.2, 0.0];
        body.omega = [0.0, 0.0, 0.7];
        let phi = body_level_set(&body, &spec);
        let u = VectorField::from_fn(spec, 2, |x, k| {
            if k == 0 {
                (2.0 * PI * x[1]).sin()
            } else {
                0.3 * (2.0 * PI * x[0]).cos()
            }
        });
        let w = grid::curl(&u).unwrap();
        let lambda = 2.0;
        let s = penalization_source(&u, &w, &body, &phi, eps, lambda).unwrap();
        let mut force = VectorField::zeros(spec, 2);
        for k in 0..2 {
            par::fill(force.comp_mut(k).data_mut(), |i| {
                let hv = smoothed_heaviside(phi.data()[i] / eps);
                let x = spec.node_position(i);
                lambda * hv * (body.rigid_velocity(&spec, &x)[k] - u.comp(k).data()[i])
            });
        }
        let curl = grid::curl(&force).unwrap();
        let worst = s
            .comp(0)
            .data()
            .iter()
            .zip(curl.comp(0).data())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        (worst, s.max_abs())
    }

    #[test]
    fn penalization_is_the_curl_of_the_penalty_force() {
        let eps = 1.0 / 16.0;
        for n in [64, 128] {
            let (worst, scale) = curl_mismatch(n, eps);
            assert!(worst < 1e-12 * scale, "{worst} vs {scale}");
        }
    }

    #[test]
    fn advancing_bodies() {
        let mut body = disk(0.1, [0.5, 0.5, 0.0]);
        assert_eq!(advance_body(&body, 0.1), body);
        body.velocity = [1.0, 0.0, 0.0];
        let moved = advance_body(&body, 0.01);
        assert!((moved.translation[0] - 0.51).abs() < 1e-15);
        assert_eq!(moved.translation[1], 0.5);

        let spec = unit(32);
        let mut b = RigidBody::new(RigidShape::Box { half: [0.2, 0.05, 0.0] }, 1.0, [0.5, 0.5, 0.0]).unwrap();
        let before = body_level_set(&b, &spec);
        b.omega = [0.0, 0.0, PI];
        let b = advance_body(&advance_body(&b, 1.0), 1.0);
        let after = body_level_set(&b, &spec);
        for (x, y) in before.data().iter().zip(after.data()) {
            assert!((x - y).abs() < 1e-12);
        }
        let mut f = disk(0.1, [0.5; 3]).fixed();
        f.velocity = [1.0; 3];
        assert_eq!(advance_body(&f, 1.0).translation, [0.5; 3]);
    }

    #[test]
    fn quarter_turn_in_3d_stays_normalized() {
        let mut b = RigidBody::new(RigidShape::Box { half: [0.2, 0.1, 0.05] }, 1.0, [0.0; 3]).unwrap();
        b.omega = [0.3, -0.2, 0.9];
        for _ in 0..1000 {
            b = advance_body(&b, 0.01);
        }
        assert!((b.rotation.into_inner().norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn composite_density_and_overlap() {
        let spec = unit(64);
        let eps = 2.0 * spec.h();
        let a = disk(0.1, [0.3, 0.5, 0.0]);
        let b = disk(0.1, [0.7, 0.5, 0.0]);
        let walls = RigidBody::new(RigidShape::Ball { radius: 0.45 }, 5.0, [0.5, 0.5, 0.0]).unwrap().fixed();
        let bodies = vec![a.clone(), b, walls];
        let phis: Vec<_> = bodies.iter().map(|b| body_level_set(b, &spec)).collect();
        let fluid = ScalarField::constant(spec, 1.0);
        let rho = composite_density(&fluid, &bodies, &phis, eps);
        let centre = spec.index(19, 32, 0);
        assert!((rho.data()[centre] - 2.0).abs() < 1e-12);
        assert_eq!(rho.data()[spec.index(32, 0, 0)], 1.0);
        assert!(check_overlap(&bodies[..2], &phis[..2], spec.h()).is_ok());

        let c = disk(0.1, [0.38, 0.5, 0.0]);
        let pc = body_level_set(&c, &spec);
        let err = check_overlap(&[a, c], &[phis[0].clone(), pc], spec.h()).unwrap_err();
        assert!(matches!(err, Error::BodyOverlap { a: 0, b: 1, .. }));
    }
}
