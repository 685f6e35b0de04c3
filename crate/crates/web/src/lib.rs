//! Browser bindings: a live falling-disk simulation, a level-set rotation
//! check and the diffusion time-step limit.

use wasm_bindgen::prelude::*;

use vortexflow::grid::{smoothed_heaviside, GridSpec, ScalarField, VectorField};
use vortexflow::interface::advect_phi_semi_lagrangian;
use vortexflow::scene_io::{self, isoline_image, Image};
use vortexflow::solver::{self, SimulationState};

fn js_err(e: vortexflow::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn rgba(img: &Image) -> Vec<u8> {
    img.rgb.chunks(3).flat_map(|p| [p[0], p[1], p[2], 255]).collect()
}

/// The falling disk of the validation case on an `n × n` periodic box.
#[wasm_bindgen]
pub struct CylinderSim {
    state: SimulationState,
    n: usize,
}

#[wasm_bindgen]
impl CylinderSim {
    #[wasm_bindgen(constructor)]
    pub fn new(n: usize, body_density: f64) -> Result<CylinderSim, JsError> {
        let mut scene = scene_io::load_builtin("cylinder_128").map_err(js_err)?;
        scene.domain.n = [n, n, 1];
        scene.bodies[0].density = body_density;
        scene.numerics.deterministic = true;
        scene.validate().map_err(js_err)?;
        let state = scene.build_state(None).map_err(js_err)?;
        Ok(CylinderSim { state, n })
    }

    /// Advances `steps` steps.
    pub fn step(&mut self, steps: usize) -> Result<(), JsError> {
        for _ in 0..steps {
            self.state.step().map_err(js_err)?;
        }
        Ok(())
    }

    pub fn time(&self) -> f64 {
        self.state.t()
    }

    pub fn velocity_y(&self) -> f64 {
        self.state.bodies()[0].velocity[1]
    }

    pub fn body_x(&self) -> f64 {
        self.state.bodies()[0].translation[0]
    }

    pub fn body_y(&self) -> f64 {
        self.state.bodies()[0].translation[1]
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Vorticity with isolines as RGBA rows, top row first.
    pub fn vorticity_rgba(&self) -> Vec<u8> {
        rgba(&scene_io::vorticity_image(&self.state, 8))
    }
}

/// Outcome of rotating a circle once around the box centre.
#[wasm_bindgen]
pub struct RotationResult {
    area_drift: f64,
    image: Vec<u8>,
    n: usize,
}

#[wasm_bindgen]
impl RotationResult {
    /// Relative change of the enclosed area.
    pub fn area_drift(&self) -> f64 {
        self.area_drift
    }

    /// The final level set as RGBA, top row first.
    pub fn rgba(&self) -> Vec<u8> {
        self.image.clone()
    }

    pub fn size(&self) -> usize {
        self.n
    }
}

/// Transports a circle of radius 0.2 through one full revolution in
/// `steps` semi-Lagrangian steps on an `n × n` grid.
#[wasm_bindgen]
pub fn rotate_circle(n: usize, steps: usize) -> Result<RotationResult, JsError> {
    let spec = GridSpec::periodic(2, n, 1.0).map_err(js_err)?;
    let steps = steps.max(1);
    let eps = 2.0 * spec.h();
    let area = |phi: &ScalarField| {
        phi.data().iter().map(|&v| smoothed_heaviside(v / eps)).sum::<f64>() * spec.cell_volume()
    };
    let mut phi = ScalarField::from_fn(spec, |p| (p[0] - 0.5).hypot(p[1] - 0.7) - 0.2);
    let u = VectorField::from_fn(spec, 2, |p, c| if c == 0 { -(p[1] - 0.5) } else { p[0] - 0.5 });
    let a0 = area(&phi);
    let dt = 2.0 * std::f64::consts::PI / steps as f64;
    for _ in 0..steps {
        phi = advect_phi_semi_lagrangian(&phi, &u, dt);
    }
    Ok(RotationResult {
        area_drift: (area(&phi) - a0) / a0,
        image: rgba(&isoline_image(phi.data(), n, n, 6)),
        n,
    })
}

/// Largest stable time step `h²/(2·dim·ν)` on a unit box with `n` cells
/// per axis.
#[wasm_bindgen]
pub fn diffusion_limit(n: usize, dim: usize, nu: f64) -> Result<f64, JsError> {
    let spec = GridSpec::periodic(dim, n, 1.0).map_err(js_err)?;
    Ok(solver::diffusion_limit(&spec, nu))
}
