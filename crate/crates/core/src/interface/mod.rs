//! Liquid/gas interface: level-set transport and the bi-phase source terms.
//!
//! `φ < 0` is fluid 1 and `φ > 0` fluid 2. Material properties are blended
//! with the smoothed Heaviside, `ρ = ρ₁H(φ/ε) + ρ₂(1−H(φ/ε))`, and likewise
//! for viscosity.

mod levelset;

pub use levelset::{advect_phi_semi_lagrangian, reinitialize, sample_multilinear};

use crate::error::{Error, Result};
use crate::grid::{self, smoothed_heaviside, smoothing_delta, GridSpec, ScalarField, VectorField};
use crate::par;

#[derive(Clone, Debug, PartialEq)]
pub struct FluidInterface {
    pub phi: ScalarField,
    pub rho1: f64,
    pub rho2: f64,
    pub nu1: f64,
    pub nu2: f64,
    /// Surface-tension coefficient.
    pub tau: f64,
    /// Interface half-width.
    pub epsilon: f64,
}

impl FluidInterface {
    pub fn new(
        phi: ScalarField,
        (rho1, rho2): (f64, f64),
        (nu1, nu2): (f64, f64),
        tau: f64,
        epsilon: f64,
    ) -> Result<Self> {
        if !(rho1 > 0.0 && rho2 > 0.0) {
            return Err(Error::InvalidScene(format!("densities must be positive: {rho1}, {rho2}")));
        }
        if !(nu1 >= 0.0 && nu2 >= 0.0) {
            return Err(Error::InvalidScene("viscosities must be non-negative".into()));
        }
        if !(epsilon > 0.0) || !(tau >= 0.0) {
            return Err(Error::InvalidScene("epsilon must be positive and tau non-negative".into()));
        }
        Ok(FluidInterface {
            phi,
            rho1,
            rho2,
            nu1,
            nu2,
            tau,
            epsilon,
        })
    }

    /// A single fluid filling the grid (no zero level).
    pub fn uniform(spec: GridSpec, rho: f64, nu: f64, epsilon: f64) -> Result<Self> {
        let far = -(0..spec.dim()).map(|a| spec.extent(a)).sum::<f64>() - 10.0 * epsilon;
        Self::new(ScalarField::constant(spec, far), (rho, rho), (nu, nu), 0.0, epsilon)
    }

    pub fn spec(&self) -> &GridSpec {
        self.phi.spec()
    }

    /// True when the level set has no zero crossing within reach of the
    /// smoothing band, so transport and redistancing can be skipped.
    pub fn is_passive(&self) -> bool {
        let lim = self.epsilon;
        let d = self.phi.data();
        d.iter().all(|&v| v < -lim) || d.iter().all(|&v| v > lim)
    }

    pub fn heaviside(&self) -> ScalarField {
        let e = self.epsilon;
        self.phi.map(|v| smoothed_heaviside(v / e))
    }

    pub fn density_field(&self) -> ScalarField {
        let (e, r1, r2) = (self.epsilon, self.rho1, self.rho2);
        self.phi.map(|v| {
            let hv = smoothed_heaviside(v / e);
            r1 * hv + r2 * (1.0 - hv)
        })
    }

    pub fn viscosity_field(&self) -> ScalarField {
        let (e, n1, n2) = (self.epsilon, self.nu1, self.nu2);
        self.phi.map(|v| {
            let hv = smoothed_heaviside(v / e);
            n1 * hv + n2 * (1.0 - hv)
        })
    }

    /// Closed-form `∇ρ = −(ρ₁−ρ₂) ζ(φ/ε) ∇φ / ε` with `∇φ` from centered
    /// differences. The minus sign comes from `H' = −ζ`.
    pub fn density_gradient(&self) -> VectorField {
        let spec = *self.spec();
        let grad = grid::gradient(&self.phi);
        let e = self.epsilon;
        let jump = self.rho1 - self.rho2;
        let phi = self.phi.data();
        let comps = (0..spec.dim())
            .map(|a| {
                let ga = grad.comp(a).data();
                let mut f = ScalarField::zeros(spec);
                par::fill(f.data_mut(), |i| -jump * smoothing_delta(phi[i] / e) * ga[i] / e);
                f
            })
            .collect();
        VectorField::from_components(comps).expect("same grid")
    }

    /// `Σ H(φ/ε) h^d`, the liquid (fluid 1) volume proxy.
    pub fn liquid_volume(&self, deterministic: bool) -> f64 {
        let e = self.epsilon;
        let d = self.phi.data();
        par::sum(d.len(), deterministic, |i| smoothed_heaviside(d[i] / e)) * self.spec().cell_volume()
    }

    /// Vorticity source of surface tension: the curl of
    /// `F = −τ κ ζ(φ/ε) ∇φ / ε`, with `κ = ∇·(∇φ/|∇φ|)` positive on convex
    /// fluid-1 regions so that `F` points toward the centre of curvature.
    pub fn surface_tension_source(&self) -> Result<VectorField> {
        let spec = *self.spec();
        if self.tau == 0.0 {
            return Ok(VectorField::zeros(spec, spec.vorticity_components()));
        }
        let kappa = grid::curvature(&self.phi);
        let grad = grid::gradient(&self.phi);
        let (e, tau) = (self.epsilon, self.tau);
        let phi = self.phi.data();
        let k = kappa.data();
        let comps = (0..spec.dim())
            .map(|a| {
                let ga = grad.comp(a).data();
                let mut f = ScalarField::zeros(spec);
                par::fill(f.data_mut(), |i| {
                    -tau * k[i] * smoothing_delta(phi[i] / e) * ga[i] / e
                });
                f
            })
            .collect();
        grid::curl(&VectorField::from_components(comps)?)
    }
}

/// Boussinesq buoyancy source `∇×(ρg) = ∇ρ × g` for constant `g`, with `∇ρ`
/// from centered differences of the density field. Being a discrete curl it
/// sums to zero on periodic grids.
pub fn buoyancy_curl(density: &ScalarField, g: [f64; 3]) -> Result<VectorField> {
    let spec = *density.spec();
    if g.iter().all(|&c| c == 0.0) {
        return Ok(VectorField::zeros(spec, spec.vorticity_components()));
    }
    let grad = grid::gradient(density);
    let d = |a: usize| grad.comp(a).data();
    let cross = |a: usize, b: usize, ga: f64, gb: f64| {
        // (∇ρ × g) component from axes a, b: ∂aρ·g_b − ∂bρ·g_a
        let (da, db) = (d(a), d(b));
        let mut f = ScalarField::zeros(spec);
        par::fill(f.data_mut(), |i| da[i] * gb - db[i] * ga);
        f
    };
    let comps = if spec.dim() == 2 {
        vec![cross(0, 1, g[0], g[1])]
    } else {
        vec![
            cross(1, 2, g[1], g[2]),
            cross(2, 0, g[2], g[0]),
            cross(0, 1, g[0], g[1]),
        ]
    };
    VectorField::from_components(comps).map_err(|e| Error::SpecMismatch(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;

    fn iface(spec: GridSpec, phi: impl Fn([f64; 3]) -> f64 + Sync + Send, rho: (f64, f64)) -> FluidInterface {
        let eps = 2.0 * spec.h();
        FluidInterface::new(ScalarField::from_fn(spec, phi), rho, (1e-3, 2e-3), 0.0, eps).unwrap()
    }

    fn box_2d(n: usize) -> GridSpec {
        GridSpec::new(&[n, n], 1.0 / n as f64, &[0.0, 0.0], &[Boundary::Dirichlet; 2]).unwrap()
    }

    #[test]
    fn validates_parameters() {
        let spec = box_2d(8);
        let phi = ScalarField::zeros(spec);
        assert!(FluidInterface::new(phi.clone(), (0.0, 1.0), (0.0, 0.0), 0.0, 0.1).is_err());
        assert!(FluidInterface::new(phi.clone(), (1.0, 1.0), (-1.0, 0.0), 0.0, 0.1).is_err());
        assert!(FluidInterface::new(phi, (1.0, 1.0), (0.0, 0.0), 0.0, 0.0).is_err());
    }

    #[test]
    fn saturated_and_interface_densities() {
        let spec = box_2d(16);
        let eps = 2.0 * spec.h();
        let f = iface(spec, |_| -10.0 * eps, (1.0, 0.001));
        assert!(f.density_field().data().iter().all(|&r| r == 1.0));
        let f = iface(spec, |_| 10.0 * eps, (1.0, 0.001));
        assert!(f.density_field().data().iter().all(|&r| r == 0.001));
        let f = iface(spec, |p| p[1] - 0.5, (1.0, 0.001));
        let rho = f.density_field();
        for idx in 0..spec.len() {
            if (spec.node_position(idx)[1] - 0.5).abs() < 1e-12 {
                assert!((rho.data()[idx] - 0.5005).abs() < 1e-12);
            }
        }
        let nu = f.viscosity_field();
        assert!(nu.data().iter().all(|&v| (1e-3..=2e-3).contains(&v)));
    }

    #[test]
    fn density_gradient_cases() {
        let spec = box_2d(64);
        let eps = 2.0 * spec.h();
        let f = iface(spec, |p| p[1] - 0.5, (1.0, 1.0));
        assert_eq!(f.density_gradient().max_abs(), 0.0);

        let f = iface(spec, |p| p[1] - 0.5, (1.0, 0.001));
        let g = f.density_gradient();
        for idx in 0..spec.len() {
            if f.phi.data()[idx].abs() > eps {
                assert_eq!(g.norm_at(idx), 0.0);
            }
        }
        let peak = g.max_norm();
        let expected = (1.0 - 0.001) * smoothing_delta(0.0) / eps;
        assert!((peak - expected).abs() / expected < 0.02, "{peak} vs {expected}");
        // Points from light to heavy: fluid 1 (heavy) lies below y = 0.5.
        let idx = spec.index(10, 32, 0);
        assert!(g.comp(1).data()[idx] < 0.0);
        // Agrees in sign and rough size with differentiating the density field.
        let fd = grid::gradient(&f.density_field());
        assert!((fd.comp(1).data()[idx] - g.comp(1).data()[idx]).abs() < 0.25 * peak);
    }

    #[test]
    fn flat_interface_under_vertical_gravity_makes_no_vorticity() {
        let spec = box_2d(32);
        let f = iface(spec, |p| p[1] - 0.5, (1.0, 0.1));
        let b = buoyancy_curl(&f.density_field(), [0.0, -1.0, 0.0]).unwrap();
        assert!(b.max_abs() < 1e-12);
        let f = iface(spec, |p| p[0] - p[1], (1.0, 1.0));
        assert_eq!(buoyancy_curl(&f.density_field(), [0.0, -1.0, 0.0]).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn tilted_interface_buoyancy_peak() {
        // Heavy fluid in the lower-left half, interface x + y = 1 at 45°.
        let spec = box_2d(128);
        let h = spec.h();
        let eps = 4.0 * h;
        let phi = ScalarField::from_fn(spec, |p| (p[0] + p[1] - 1.0) / 2f64.sqrt());
        let f = FluidInterface::new(phi, (1.0, 0.5), (0.0, 0.0), 0.0, eps).unwrap();
        let b = buoyancy_curl(&f.density_field(), [0.0, -1.0, 0.0]).unwrap();
        let grad_peak = 0.5 * smoothing_delta(0.0) / eps;
        let expected = grad_peak / 2f64.sqrt();
        // Away from the walls, where one-sided stencils take over.
        let n = spec.n()[0];
        let inner: Vec<f64> = (0..spec.len())
            .filter(|&i| spec.coords(i)[..2].iter().all(|&c| c >= 2 && c + 2 < n))
            .map(|i| b.comp(0).data()[i])
            .collect();
        let got = inner.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((got - expected).abs() / expected < 0.03, "{got} vs {expected}");
        // ∂xρ < 0 across the band and g_y < 0: one-signed, positive source.
        assert!(inner.iter().all(|&v| v >= -1e-12));
        // Support is the band.
        for idx in 0..spec.len() {
            if f.phi.data()[idx].abs() > eps + 2.0 * h {
                assert_eq!(b.comp(0).data()[idx], 0.0);
            }
        }
    }

    #[test]
    fn periodic_buoyancy_has_zero_circulation() {
        let spec = GridSpec::periodic(2, 64, 1.0).unwrap();
        let f = iface(spec, |p| (p[0] - 0.4).hypot(p[1] - 0.6) - 0.2, (1.0, 0.1));
        let b = buoyancy_curl(&f.density_field(), [0.3, -1.0, 0.0]).unwrap();
        let total: f64 = b.comp(0).sum();
        let scale: f64 = b.comp(0).data().iter().map(|v| v.abs()).sum();
        assert!(total.abs() < 1e-8 * scale, "{total} / {scale}");

        let spec = GridSpec::periodic(3, 24, 1.0).unwrap();
        let f = iface(spec, |p| ((p[0] - 0.5).powi(2) + (p[1] - 0.5).powi(2) + (p[2] - 0.4).powi(2)).sqrt() - 0.2, (1.0, 0.1));
        let b = buoyancy_curl(&f.density_field(), [0.0, 0.0, -10.0]).unwrap();
        assert_eq!(b.ncomp(), 3);
        assert_eq!(b.comp(2).max_abs(), 0.0);
        for c in 0..3 {
            let scale: f64 = b.comp(c).data().iter().map(|v| v.abs()).sum::<f64>().max(1.0);
            assert!(b.comp(c).sum().abs() < 1e-8 * scale);
        }
    }

    #[test]
    fn surface_tension_cases() {
        let spec = box_2d(64);
        let h = spec.h();
        let f = iface(spec, |p| (p[0] - 0.5).hypot(p[1] - 0.5) - 0.2, (1.0, 1.0));
        assert_eq!(f.surface_tension_source().unwrap().max_abs(), 0.0);

        let mut flat = iface(spec, |p| p[1] - 0.5, (1.0, 1.0));
        flat.tau = 0.01;
        let s = flat.surface_tension_source().unwrap();
        assert!(s.max_abs() < 1e-6 * flat.tau / (h * h));

        let mut drop = iface(GridSpec::periodic(2, 64, 1.0).unwrap(), |p| (p[0] - 0.5).hypot((p[1] - 0.5) * 1.3) - 0.2, (1.0, 1.0));
        drop.tau = 0.01;
        let s = drop.surface_tension_source().unwrap();
        assert!(s.max_abs() > 0.0);
        for idx in 0..spec.len() {
            if drop.phi.data()[idx].abs() > drop.epsilon + 2.0 * h {
                assert_eq!(s.comp(0).data()[idx], 0.0);
            }
        }
    }

    #[test]
    fn liquid_volume_of_circle() {
        let spec = GridSpec::periodic(2, 128, 1.0).unwrap();
        let f = iface(spec, |p| (p[0] - 0.5).hypot(p[1] - 0.5) - 0.25, (1.0, 1.0));
        let area = std::f64::consts::PI * 0.0625;
        assert!((f.liquid_volume(true) - area).abs() / area < 1e-3);
        assert!(!f.is_passive());
        assert!(FluidInterface::uniform(spec, 1.0, 0.0, 0.01).unwrap().is_passive());
    }
}
