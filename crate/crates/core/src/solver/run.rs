//! Running a scene to completion with frame and diagnostics output.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::par;
use crate::scene_io::{self, CsvLayout, DiagnosticsWriter, SceneConfig};

use super::{step_count, Diagnostics, SimulationState, TimingReport};

/// Overrides applied on top of a scene.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Output directory; nothing is written when `None`.
    pub out_dir: Option<PathBuf>,
    pub dump_every: Option<usize>,
    pub threads: Option<usize>,
    /// Forces deterministic reductions on.
    pub deterministic: bool,
    /// Directory that relative mesh paths are resolved against.
    pub base_dir: Option<PathBuf>,
}

pub struct RunOutcome {
    pub state: SimulationState,
    /// One entry per step.
    pub rows: Vec<Diagnostics>,
    pub report: TimingReport,
    pub files: Vec<PathBuf>,
}

struct Output<'a> {
    dir: &'a Path,
    scene: &'a SceneConfig,
    dump_every: usize,
    csv: DiagnosticsWriter,
    files: Vec<PathBuf>,
}

impl Output<'_> {
    fn dump(&mut self, state: &SimulationState) -> Result<()> {
        let step = state.step_index();
        let due = step == 0 || (self.dump_every > 0 && step % self.dump_every == 0);
        if !due {
            return Ok(());
        }
        self.files
            .push(scene_io::write_frame(state, &self.scene.output.fields, self.dir)?);
        let ppm = self.dir.join(format!("omega_{step:06}.ppm"));
        scene_io::vorticity_image(state, 8).write_ppm(&ppm)?;
        self.files.push(ppm);
        if self.scene.output.particles {
            let path = self.dir.join(format!("particles_{step:06}.csv"));
            let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            state
                .particles()
                .write_csv(state.spec().dim(), std::io::BufWriter::new(file))
                .map_err(|e| Error::io(&path, e))?;
            self.files.push(path);
        }
        Ok(())
    }
}

/// Runs `scene` for its full duration.
pub fn run(scene: &SceneConfig, opts: &RunOptions) -> Result<RunOutcome> {
    run_with(scene, opts, |_| Ok(()))
}

/// Like [`run`], calling `observe` on the initial state and after every
/// step.
pub fn run_with(
    scene: &SceneConfig,
    opts: &RunOptions,
    observe: impl FnMut(&SimulationState) -> Result<()> + Send,
) -> Result<RunOutcome> {
    let threads = opts.threads.unwrap_or(scene.numerics.threads);
    par::with_threads(threads, || run_inner(scene, opts, observe))
}

fn run_inner(
    scene: &SceneConfig,
    opts: &RunOptions,
    mut observe: impl FnMut(&SimulationState) -> Result<()>,
) -> Result<RunOutcome> {
    let mut scene = scene.clone();
    if opts.deterministic {
        scene.numerics.deterministic = true;
    }
    let mut state = scene.build_state(opts.base_dir.as_deref())?;
    let steps = step_count(scene.numerics.duration, scene.numerics.dt);

    let mut output = match &opts.out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            let layout = CsvLayout {
                dim: scene.domain.dim,
                bodies: scene.bodies.len(),
                timings: scene.output.timings,
            };
            let csv_path = dir.join("diagnostics.csv");
            Some(Output {
                dir,
                scene: &scene,
                dump_every: opts.dump_every.unwrap_or(scene.output.dump_every),
                csv: DiagnosticsWriter::create(&csv_path, layout)?,
                files: vec![csv_path],
            })
        }
        None => None,
    };

    if let Some(out) = output.as_mut() {
        out.dump(&state)?;
    }
    observe(&state)?;
    let mut rows = Vec::with_capacity(steps);
    for _ in 0..steps {
        state.step()?;
        let d = state.diagnostics();
        if let Some(out) = output.as_mut() {
            out.csv.write(&d)?;
            out.dump(&state)?;
        }
        rows.push(d);
        observe(&state)?;
    }

    let report = state.timing_report();
    let mut files = Vec::new();
    if let Some(out) = output {
        out.csv.finish()?;
        files = out.files;
        let path = out.dir.join("timing.txt");
        std::fs::write(&path, report.to_string()).map_err(|e| Error::io(&path, e))?;
        files.push(path);
    }
    Ok(RunOutcome {
        state,
        rows,
        report,
        files,
    })
}
