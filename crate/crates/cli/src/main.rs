use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use vortexflow::experiments::{run_cylinder, CylinderConfig};
use vortexflow::grid::{laplacian, GridSpec, ScalarField};
use vortexflow::poisson::PoissonPlan;
use vortexflow::scene_io::{self, SceneConfig};
use vortexflow::solver::{run, RunOptions};
use vortexflow::{par, Error};

const THREADS_ENV: &str = "VORTEXFLOW_THREADS";

/// Vortex-in-cell simulation of bi-phase flow with rigid bodies.
#[derive(Parser, Debug)]
#[command(name = "vortexflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scene file or a built-in scene by name.
    Run {
        /// Path to a `.scene` file, or the name of a built-in scene.
        scene: String,
        /// Output directory (defaults to the scene's `[output] directory`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write a frame every K steps (0 = initial frame only).
        #[arg(long, value_name = "K")]
        dump_every: Option<usize>,
        /// Worker threads; overrides VORTEXFLOW_THREADS.
        #[arg(long, value_name = "T")]
        threads: Option<usize>,
        /// Thread-count independent reductions.
        #[arg(long)]
        deterministic: bool,
    },
    /// Run a validation experiment.
    Validate {
        #[command(subcommand)]
        experiment: Experiment,
    },
    /// Micro-benchmarks.
    Bench {
        #[command(subcommand)]
        target: BenchTarget,
    },
}

#[derive(Subcommand, Debug)]
enum Experiment {
    /// Falling disk in a periodic box; checks the terminal velocity.
    Cylinder {
        #[arg(long, value_parser = parse_resolution)]
        resolution: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_name = "T")]
        threads: Option<usize>,
    },
}

#[derive(Subcommand, Debug)]
enum BenchTarget {
    /// Times the stream-function solve on a periodic N^dim grid.
    Poisson {
        #[arg(long, value_name = "N", value_parser = clap::value_parser!(u32).range(8..=1024))]
        n: u32,
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u8).range(2..=3))]
        dim: u8,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        #[arg(long, value_name = "T")]
        threads: Option<usize>,
    },
}

fn parse_resolution(s: &str) -> Result<usize, String> {
    match s {
        "128" | "256" | "300" => Ok(s.parse().unwrap()),
        _ => Err(format!("expected 128, 256 or 300, got `{s}`")),
    }
}

fn threads(flag: Option<usize>) -> Result<usize, Error> {
    if let Some(t) = flag {
        return Ok(t);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidScene(format!("{THREADS_ENV} must be a thread count, got `{v}`"))),
        Err(_) => Ok(0),
    }
}

fn load(scene: &str) -> Result<(SceneConfig, Option<PathBuf>), Error> {
    let path = Path::new(scene);
    if !path.exists() && scene_io::builtin_scene(scene).is_some() {
        return Ok((scene_io::load_builtin(scene)?, None));
    }
    let config = scene_io::load_scene(path)?;
    Ok((config, path.parent().map(Path::to_path_buf)))
}

fn run_scene(
    scene: &str,
    out: Option<PathBuf>,
    dump_every: Option<usize>,
    threads_flag: Option<usize>,
    deterministic: bool,
) -> Result<ExitCode, Error> {
    let (config, base_dir) = load(scene)?;
    let out_dir = out.unwrap_or_else(|| PathBuf::from(&config.output.directory));
    let opts = RunOptions {
        out_dir: Some(out_dir.clone()),
        dump_every,
        threads: Some(threads(threads_flag)?),
        deterministic,
        base_dir,
    };
    let started = Instant::now();
    let outcome = run(&config, &opts)?;
    let state = &outcome.state;
    println!(
        "{} steps to t = {:.4} in {:.1} s",
        outcome.rows.len(),
        state.t(),
        started.elapsed().as_secs_f64()
    );
    if let Some(last) = outcome.rows.last() {
        println!(
            "enstrophy {:.4e}, liquid volume {:.6e}, particles {}",
            last.enstrophy, last.liquid_volume, last.particles
        );
    }
    let dim = config.domain.dim;
    for (k, body) in state.bodies().iter().enumerate() {
        println!(
            "body {k}: position {:?}, velocity {:?}",
            &body.translation[..dim],
            &body.velocity[..dim]
        );
    }
    println!("{}", outcome.report);
    println!("{} files written to {}", outcome.files.len(), out_dir.display());
    Ok(ExitCode::SUCCESS)
}

fn validate_cylinder(resolution: usize, out: Option<PathBuf>, threads_flag: Option<usize>) -> Result<ExitCode, Error> {
    let cfg = CylinderConfig {
        out_dir: out,
        ..CylinderConfig::paper(resolution)?
    };
    let result = par::with_threads(threads(threads_flag)?, || run_cylinder(&cfg))?;
    print!("{}", result.report());
    if let Some(dir) = &cfg.out_dir {
        println!("files in {}", dir.display());
    }
    println!("plateau v_y = {:.4}: {}", result.plateau, if result.pass { "PASS" } else { "FAIL" });
    Ok(if result.pass { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn bench_poisson(n: usize, dim: usize, repeats: usize, threads_flag: Option<usize>) -> Result<ExitCode, Error> {
    let spec = GridSpec::periodic(dim, n, 1.0)?;
    let rhs = ScalarField::from_fn(spec, |p| {
        (2.0 * std::f64::consts::PI * p[0]).sin() * (6.0 * std::f64::consts::PI * p[1]).cos()
            + (4.0 * std::f64::consts::PI * (p[0] + p[2])).cos()
    });
    let (best, psi) = par::with_threads(threads(threads_flag)?, || -> Result<_, Error> {
        let plan = PoissonPlan::new(&spec);
        let mut best = f64::INFINITY;
        let mut psi = None;
        for _ in 0..repeats.max(1) {
            let t = Instant::now();
            let (p, _) = plan.solve_component(&rhs)?;
            best = best.min(t.elapsed().as_secs_f64());
            psi = Some(p);
        }
        Ok((best, psi.unwrap()))
    })?;
    let residual = laplacian(&psi)
        .data()
        .iter()
        .zip(rhs.data())
        .map(|(l, r)| (l + r).abs())
        .fold(0.0, f64::max)
        / rhs.max_abs();
    let nodes = spec.len();
    println!(
        "poisson {dim}D n={n}: {nodes} nodes, best of {} solves {:.3} ms ({:.1} ns/node), relative residual {residual:.2e}",
        repeats.max(1),
        best * 1e3,
        best * 1e9 / nodes as f64
    );
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match cli.command {
        Command::Run {
            scene,
            out,
            dump_every,
            threads,
            deterministic,
        } => run_scene(&scene, out, dump_every, threads, deterministic),
        Command::Validate {
            experiment: Experiment::Cylinder { resolution, out, threads },
        } => validate_cylinder(resolution, out, threads),
        Command::Bench {
            target: BenchTarget::Poisson { n, dim, repeats, threads },
        } => bench_poisson(n as usize, dim as usize, repeats, threads),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
