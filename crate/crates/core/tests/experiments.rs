use vortexflow::experiments::{
    self, acceptance_band, run_cylinder, run_smoke, CylinderConfig, REFERENCE_VELOCITY,
};
use vortexflow::scene_io::{self, PhiShape};

#[test]
fn cylinder_128_wake_is_symmetric_and_local() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = CylinderConfig {
        out_dir: Some(dir.path().to_path_buf()),
        ..CylinderConfig::paper(128).unwrap()
    };
    let r = run_cylinder(&cfg).unwrap();
    assert_eq!(r.v_y.len(), 250);
    assert!(r.symmetry_defect < 0.05, "symmetry defect {}", r.symmetry_defect);
    assert!(r.near_body_enstrophy >= 0.9, "near-body share {}", r.near_body_enstrophy);
    assert!(r.penalization_residual.is_finite());
    assert!(r.plateau < -0.3, "the disk falls: {}", r.plateau);
    assert_eq!(r.band, acceptance_band(128));

    for name in ["frame_000000.vtk", "omega_t0.5.ppm", "omega_final.ppm", "report.txt", "diagnostics.csv"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let report = std::fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(report.contains("plateau v_y"), "{report}");
}

#[test]
fn neutral_cylinder_stays_put() {
    let cfg = CylinderConfig {
        body_density: 1.0,
        ..CylinderConfig::paper(128).unwrap()
    };
    let r = run_cylinder(&cfg).unwrap();
    assert!(r.plateau.abs() < 0.01, "plateau {}", r.plateau);
    assert!(r.v_y.iter().all(|v| v.abs() < 1e-8));
}

#[test]
fn cylinder_plateau_moves_toward_the_reference_with_resolution() {
    let plateaus: Vec<f64> = experiments::CYLINDER_RESOLUTIONS
        .iter()
        .map(|&res| experiments::run_falling_cylinder(res).unwrap().plateau)
        .collect();
    let dist: Vec<f64> = plateaus.iter().map(|p| (p - REFERENCE_VELOCITY).abs()).collect();
    // Monotone toward the reference, allowing 0.02 of noise per refinement.
    assert!(
        dist.windows(2).all(|w| w[1] <= w[0] + 0.02),
        "plateaus {plateaus:?}, distances {dist:?}"
    );
}

#[test]
fn cup_without_forcing_does_not_move() {
    let mut scene = scene_io::load_builtin("cup_small").unwrap();
    scene.gravity = [0.0; 3];
    scene.fluids.rho2 = scene.fluids.rho1;
    scene.bodies[0].density = scene.fluids.rho1;
    scene.numerics.duration = 40.0 * scene.numerics.dt;
    let s = run_smoke("cup_small", &scene).unwrap();
    assert_eq!(s.steps, 40);
    assert!(s.passed(), "{:?}", s.checks);
    assert!(s.max_displacement() < 1e-6, "moved {}", s.max_displacement());
}

#[test]
fn water_wall_keeps_its_volume() {
    let s = experiments::run_scene_smoke("water_wall_small").unwrap();
    assert!(s.steps >= 100);
    assert!(s.max_velocity.is_finite());
    assert!(s.liquid_volume_drift < 0.05, "drift {}", s.liquid_volume_drift);
    assert!(s.passed(), "{:?}", s.checks);
}

#[test]
fn smoke_rejects_unknown_scenes() {
    assert!(experiments::run_scene_smoke("cylinder_128").is_err());
}

#[test]
fn stratified_scene_is_a_ripple_between_two_fluids() {
    let scene = experiments::stratified_scene(64).unwrap();
    assert!(matches!(scene.fluids.phi, PhiShape::HalfSpace { .. }));
    assert!(scene.fluids.rho1 > scene.fluids.rho2);
    let f = experiments::run_stratified(64).unwrap();
    assert_eq!(f.len(), 20);
    assert!(f.iter().all(|&x| x >= 0.9), "{f:?}");
}
