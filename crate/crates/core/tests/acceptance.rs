//! Acceptance checks. Each test prints one `PASS`/`FAIL` line to the real
//! stdout (not the captured test output) before asserting.

use std::f64::consts::PI;
use std::io::Write;

use rand::{Rng, SeedableRng};

use vortexflow::experiments::{self, acceptance_band, convergence_trend, REFERENCE_VELOCITY};
use vortexflow::grid::{self, smoothed_heaviside, GridSpec, ScalarField, VectorField};
use vortexflow::interface::advect_phi_semi_lagrangian;
use vortexflow::particles::{remesh, ParticleSet};
use vortexflow::poisson::{solve_stream, velocity_from_stream, PoissonPlan};
use vortexflow::scene_io::SceneConfig;
use vortexflow::solver::{self, run, run_with, RunOptions};

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!("criterion {id:>2} {verdict}  {name}: {detail}\n");
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
}

#[test]
fn criterion_01_and_06_falling_cylinder() {
    let fine = experiments::run_falling_cylinder(256).expect("256 run");
    let coarse = experiments::run_falling_cylinder(128).expect("128 run");
    let (lo_f, hi_f) = acceptance_band(256);
    let (lo_c, hi_c) = acceptance_band(128);
    let fine_ok = (lo_f..=hi_f).contains(&fine.plateau);
    let coarse_ok = (lo_c..=hi_c).contains(&coarse.plateau);
    let trend = convergence_trend(coarse.plateau, fine.plateau);
    let pass1 = fine_ok && coarse_ok && trend;
    report(
        1,
        "falling-cylinder plateau",
        pass1,
        &format!(
            "256: {:.4} in [{lo_f}, {hi_f}] {}; 128: {:.4} in [{lo_c}, {hi_c}] {}; \
             |128 - ref| = {:.4}, |256 - ref| = {:.4}, |128 - 256| = {:.4}, trend {} ({:.1} s + {:.1} s)",
            fine.plateau,
            fine_ok,
            coarse.plateau,
            coarse_ok,
            (coarse.plateau - REFERENCE_VELOCITY).abs(),
            (fine.plateau - REFERENCE_VELOCITY).abs(),
            (coarse.plateau - fine.plateau).abs(),
            trend,
            fine.wall_seconds,
            coarse.wall_seconds,
        ),
    );

    let residual = fine.penalization_residual.max(coarse.penalization_residual);
    let pass6 = residual < 1e-10;
    report(
        6,
        "penalization fixed point",
        pass6,
        &format!("max |w - w_bar| inside the body over both runs = {residual:.2e}"),
    );
    assert!(
        pass1 && pass6,
        "plateaus 256: {} 128: {}, penalization residual {residual:e}",
        fine.plateau,
        coarse.plateau
    );
}

#[test]
fn criterion_02_stability_limits() {
    let nu = 0.001;
    let check = |n: usize, dt: f64| {
        let spec = GridSpec::periodic(2, n, 1.0).unwrap();
        let h = spec.h();
        let r = solver::stability(&spec, dt, nu, 0.0);
        let exact = h * h / (4.0 * nu);
        (r.dt_ok, r.diffusion_limit, (r.diffusion_limit - exact).abs() <= 1e-15 * exact)
    };
    let cases = [(256, 0.0038, true), (300, 0.0027, true), (300, 0.01, false)];
    let mut pass = true;
    let mut detail = Vec::new();
    for (n, dt, expect) in cases {
        let (ok, limit, formula) = check(n, dt);
        pass &= ok == expect && formula;
        detail.push(format!("n={n} dt={dt}: limit {limit:.6e}, dt_ok {ok}"));
    }
    report(2, "stability-limit arithmetic", pass, &detail.join("; "));
    assert!(pass);
}

#[test]
fn criterion_03_poisson_oracle() {
    let spec = GridSpec::periodic(2, 128, 1.0).unwrap();
    let h = spec.h();
    let plan = PoissonPlan::new(&spec);

    // A sum of Fourier modes: each is an eigenfunction of the discrete
    // Laplacian.
    let modes = [(1.0, 1, 1), (0.5, 3, 2), (-0.25, 7, 11), (0.125, 30, 5)];
    let w = ScalarField::from_fn(spec, |p| {
        modes
            .iter()
            .map(|&(a, kx, ky)| a * (2.0 * PI * (kx as f64 * p[0] + 0.3)).sin() * (2.0 * PI * ky as f64 * p[1]).cos())
            .sum()
    });
    let omega = VectorField::from_scalar(w.clone());
    let sol = solve_stream(&omega, &plan).unwrap();
    let lap = grid::laplacian(sol.psi.comp(0));
    let residual = lap
        .data()
        .iter()
        .zip(w.data())
        .map(|(l, o)| (l + o).abs())
        .fold(0.0, f64::max);
    let rel = residual / w.max_abs();

    let u = velocity_from_stream(&sol.psi).unwrap();
    let div = grid::divergence(&u).unwrap().max_abs();
    let div_rel = div / u.max_abs();
    let pass = rel < 1e-10 && div_rel < 1e-10;
    report(
        3,
        "Poisson oracle",
        pass,
        &format!("|lap psi + w| / |w| = {rel:.2e}, |div u| / |u| = {div_rel:.2e} on 128^2 (h = {h})"),
    );
    assert!(pass);
}

#[test]
fn criterion_04_remesh_moments() {
    let spec = GridSpec::periodic(2, 128, 1.0).unwrap();
    let mut rng = rand::rngs::StdRng::seed_from_u64(2024);
    let mut set = ParticleSet::new(&spec);
    // Kept away from the periodic seam so that moments of order 1 and 2 are
    // not affected by wrapping.
    for _ in 0..10_000 {
        set.push([rng.gen_range(0.1..0.9), rng.gen_range(0.1..0.9), 0.0], &[rng.gen_range(-1.0..1.0)]);
    }
    let w = remesh(&set, &spec).unwrap();
    let mono = |p: [f64; 3]| [1.0, p[0], p[1], p[0] * p[0], p[0] * p[1], p[1] * p[1]];
    let mut mp = [0.0; 6];
    for (i, x) in set.positions().iter().enumerate() {
        for (m, v) in mp.iter_mut().zip(mono(*x)) {
            *m += set.strength(i)[0] * v;
        }
    }
    let mut mg = [0.0; 6];
    for idx in 0..spec.len() {
        for (m, v) in mg.iter_mut().zip(mono(spec.node_position(idx))) {
            *m += w.comp(0).data()[idx] * v;
        }
    }
    let scale: f64 = set.strengths().iter().map(|s| s.abs()).sum();
    let worst = (0..6).map(|k| (mp[k] - mg[k]).abs() / scale).fold(0.0, f64::max);
    let pass = worst < 1e-10;
    report(
        4,
        "remeshing moments",
        pass,
        &format!("10^4 particles, worst moment error (orders 0-2) / sum|w_p| = {worst:.2e}"),
    );
    assert!(pass);
}

#[test]
fn criterion_05_circulation() {
    let scene = SceneConfig::parse(
        "format = 1
[domain]
dim = 2
n = 128 128
extent = 1.0 1.0
[fluids]
rho1 = 1.0
rho2 = 0.1
nu1 = 0.001
nu2 = 0.0005
phi = sphere
phi_center = 0.5 0.55
phi_radius = 0.15
[gravity]
g = 0.0 -1.0
[numerics]
dt = 0.01
duration = 1.0
",
    )
    .unwrap();
    let h2 = scene.domain.h().powi(2);
    let mut initial = None;
    let mut worst = 0.0f64;
    let mut finite = true;
    let outcome = run_with(&scene, &RunOptions::default(), |state| {
        let w = state.omega().comp(0);
        finite &= w.all_finite();
        let circ = w.sum() * h2;
        match initial {
            None => {
                let abs: f64 = w.data().iter().map(|v| v.abs()).sum::<f64>() * h2;
                initial = Some((circ, abs));
            }
            Some((c0, _)) => worst = worst.max((circ - c0).abs()),
        }
        Ok(())
    })
    .unwrap();
    let (_, abs0) = initial.unwrap();
    let tol = 1e-8 * abs0.max(1.0);
    let steps = outcome.rows.len();
    let enstrophy = outcome.rows.last().unwrap().enstrophy;
    let pass = finite && steps == 100 && worst <= tol && enstrophy > 0.0;
    report(
        5,
        "circulation conservation",
        pass,
        &format!("{steps} steps at 128^2, max |sum w h^2 - initial| = {worst:.2e} (tol {tol:.0e}), final enstrophy {enstrophy:.3e}"),
    );
    assert!(pass);
}

#[test]
fn criterion_07_level_set_rotation() {
    let spec = GridSpec::periodic(2, 256, 1.0).unwrap();
    let eps = 2.0 * spec.h();
    let area = |phi: &ScalarField| {
        phi.data().iter().map(|&v| smoothed_heaviside(v / eps)).sum::<f64>() * spec.cell_volume()
    };
    let mut phi = ScalarField::from_fn(spec, |p| (p[0] - 0.5).hypot(p[1] - 0.7) - 0.2);
    let u = VectorField::from_fn(spec, 2, |p, c| if c == 0 { -(p[1] - 0.5) } else { p[0] - 0.5 });
    let a0 = area(&phi);
    let steps = 400;
    let dt = 2.0 * PI / steps as f64;
    for _ in 0..steps {
        phi = advect_phi_semi_lagrangian(&phi, &u, dt);
    }
    let drift = (area(&phi) - a0).abs() / a0;
    let pass = drift < 0.05;
    report(
        7,
        "level-set rotation",
        pass,
        &format!("circle r = 0.2 on 256^2, one revolution in {steps} steps, area drift {:.2}%", 100.0 * drift),
    );
    assert!(pass);
}

#[test]
fn criterion_08_interface_localized_vorticity() {
    let fractions = experiments::run_stratified(128).unwrap();
    let min = fractions.iter().copied().fold(f64::INFINITY, f64::min);
    let pass = fractions.len() == 20 && min >= 0.9;
    report(
        8,
        "interface-localized vorticity",
        pass,
        &format!("{} steps, smallest enstrophy share in |phi| <= 4 eps = {min:.4}", fractions.len()),
    );
    assert!(pass);
}

const DETERMINISM_SCENE: &str = "format = 1
[domain]
dim = 2
n = 64 64
extent = 1.0 1.0
bc = periodic dirichlet
[fluids]
rho1 = 1.0
rho2 = 0.2
nu1 = 0.001
tau = 0.0005
phi = half_space
phi_normal = 0.0 1.0
phi_offset = 0.6
phi_amplitude = 0.03
[gravity]
g = 0.0 -1.0
[body.0]
shape = ball
radius = 0.08
density = 1.6
position = 0.45 0.75
[body.1]
shape = box
half = 0.06 0.04
density = 0.6
position = 0.7 0.3
rotation = 0.3
[numerics]
dt = 0.005
duration = 0.2
deterministic = true
";

#[test]
fn criterion_09_determinism() {
    let scene = SceneConfig::parse(DETERMINISM_SCENE).unwrap();
    let mut csvs = Vec::new();
    for threads in [1, 2, 8] {
        let dir = tempfile::tempdir().unwrap();
        let opts = RunOptions {
            out_dir: Some(dir.path().to_path_buf()),
            threads: Some(threads),
            deterministic: true,
            ..RunOptions::default()
        };
        run(&scene, &opts).unwrap();
        csvs.push(std::fs::read(dir.path().join("diagnostics.csv")).unwrap());
    }
    let rows = csvs[0].iter().filter(|&&b| b == b'\n').count();
    let pass = rows > 40 && csvs.iter().all(|c| *c == csvs[0]);
    report(
        9,
        "determinism",
        pass,
        &format!(
            "diagnostics CSV ({} bytes, {rows} lines) identical across 1, 2, 8 threads: {}",
            csvs[0].len(),
            csvs.iter().all(|c| *c == csvs[0])
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_10_two_spheres_smoke() {
    let summary = experiments::run_scene_smoke("two_spheres_small").unwrap();
    let n = vortexflow::scene_io::load_builtin("two_spheres_small").unwrap().domain.n;
    let size_ok = n[0] <= 68 && n[1] <= 24 && n[2] <= 64;
    let pass = summary.passed() && size_ok && summary.steps >= 100;
    let checks: Vec<String> = summary
        .checks
        .iter()
        .map(|c| format!("{} {}", c.name, if c.passed { "ok" } else { "FAILED" }))
        .collect();
    report(
        10,
        "3D smoke (two_spheres_small)",
        pass,
        &format!(
            "{}x{}x{}, {} steps, {} ({:.1} s)",
            n[0],
            n[1],
            n[2],
            summary.steps,
            checks.join(", "),
            summary.wall_seconds
        ),
    );
    let total: f64 = summary.report.percent.iter().sum();
    let timing_ok = (total - 100.0).abs() <= 0.5;
    report(0, "stage timing report", timing_ok, &format!("percentages sum to {total:.3}"));
    assert!(pass);
    assert!(timing_ok);
}
