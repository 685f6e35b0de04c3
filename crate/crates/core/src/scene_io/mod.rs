//! Scene files, frame dumps and diagnostics output.
//!
//! Scenes use the sectioned `key = value` format described in [`scene`].
//! Frames are legacy VTK text ([`vtk`]), per-step monitors go to a CSV file
//! ([`csv`]) and vorticity snapshots to PPM pictures ([`image`]).
//!
//! A handful of scenes ship with the library; see [`BUILTIN_SCENES`].

pub mod csv;
pub mod image;
pub mod scene;
pub mod vtk;

pub use csv::{diagnostics_csv, write_diagnostics, CsvLayout, DiagnosticsTable, DiagnosticsWriter};
pub use image::{isoline_image, vorticity_image, Image};
pub use scene::{
    BodyConfig, BodyShape, DomainConfig, FluidConfig, FrameField, NumericsConfig, OutputConfig,
    PhiShape, SceneConfig,
};
pub use vtk::{frame_path, read_frame, write_frame, FrameData, VtkFrame};

use std::path::Path;

use crate::error::{Error, Result};

/// Scenes bundled with the library, by name.
pub const BUILTIN_SCENES: [(&str, &str); 9] = [
    ("cylinder_128", include_str!("../../scenes/cylinder_128.scene")),
    ("cylinder_256", include_str!("../../scenes/cylinder_256.scene")),
    ("cylinder_300", include_str!("../../scenes/cylinder_300.scene")),
    ("two_spheres", include_str!("../../scenes/two_spheres.scene")),
    ("two_spheres_small", include_str!("../../scenes/two_spheres_small.scene")),
    ("water_wall_pyramid", include_str!("../../scenes/water_wall_pyramid.scene")),
    ("water_wall_small", include_str!("../../scenes/water_wall_small.scene")),
    ("falling_cup", include_str!("../../scenes/falling_cup.scene")),
    ("cup_small", include_str!("../../scenes/cup_small.scene")),
];

const ASSETS: [(&str, &str); 1] = [("pyramid.obj", include_str!("../../scenes/pyramid.obj"))];

/// Text of a bundled scene.
pub fn builtin_scene(name: &str) -> Option<&'static str> {
    BUILTIN_SCENES.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// Bundled mesh files, found by file name.
pub(crate) fn bundled_asset(path: &str) -> Option<&'static str> {
    let name = Path::new(path).file_name()?.to_str()?;
    ASSETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// Parses a bundled scene.
pub fn load_builtin(name: &str) -> Result<SceneConfig> {
    let text = builtin_scene(name).ok_or_else(|| {
        let names: Vec<&str> = BUILTIN_SCENES.iter().map(|(n, _)| *n).collect();
        Error::InvalidScene(format!("no built-in scene `{name}` (have: {})", names.join(", ")))
    })?;
    SceneConfig::parse(text)
}

/// Reads and parses a scene file.
pub fn load_scene(path: &Path) -> Result<SceneConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    SceneConfig::parse(&text)
}
