//! Binary PPM snapshots of the vorticity with isolines, for quick looks
//! without a VTK viewer.

use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::solver::SimulationState;

/// An RGB raster, rows top to bottom.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub rgb: Vec<u8>,
}

impl Image {
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.rgb);
        out
    }

    pub fn write_ppm(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_ppm()).map_err(|e| Error::io(path, e))
    }
}

/// Blue–white–red map of `values` (a `width × height` array, x fastest,
/// y up) scaled by `max|v|`, with dark isolines at `levels` evenly spaced
/// values on each side of zero.
pub fn isoline_image(values: &[f64], width: usize, height: usize, levels: usize) -> Image {
    let vmax = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let step = if vmax > 0.0 { vmax / (levels.max(1) as f64 + 0.5) } else { 1.0 };
    let band = |v: f64| (v / step).floor() as i64;
    let mut rgb = Vec::with_capacity(3 * width * height);
    for row in 0..height {
        let j = height - 1 - row;
        for i in 0..width {
            let v = values[i + width * j];
            let b = band(v);
            let edge = (i + 1 < width && band(values[i + 1 + width * j]) != b)
                || (j + 1 < height && band(values[i + width * (j + 1)]) != b);
            if edge && vmax > 0.0 {
                rgb.extend_from_slice(&[30, 30, 30]);
                continue;
            }
            let s = if vmax > 0.0 { (v / vmax).clamp(-1.0, 1.0) } else { 0.0 };
            let fade = (255.0 * (1.0 - s.abs())) as u8;
            if s >= 0.0 {
                rgb.extend_from_slice(&[255, fade, fade]);
            } else {
                rgb.extend_from_slice(&[fade, fade, 255]);
            }
        }
    }
    Image { width, height, rgb }
}

/// Vorticity picture of a state: the field itself in 2D, the magnitude on
/// the vertical mid-plane `y = const` in 3D.
pub fn vorticity_image(state: &SimulationState, levels: usize) -> Image {
    let w = state.omega();
    let spec = state.spec();
    let n = spec.n();
    if spec.dim() == 2 {
        return isoline_image(w.comp(0).data(), n[0], n[1], levels);
    }
    let j = n[1] / 2;
    let mut slice = Vec::with_capacity(n[0] * n[2]);
    for k in 0..n[2] {
        for i in 0..n[0] {
            slice.push(w.norm_at(spec.index(i, j, k)));
        }
    }
    isoline_image(&slice, n[0], n[2], levels)
}

/// Writes `field` of a 2D grid as an isoline picture.
pub fn write_field_ppm(field: &ScalarField, levels: usize, path: &Path) -> Result<()> {
    let n = field.spec().n();
    isoline_image(field.data(), n[0], n[1] * n[2], levels).write_ppm(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn colours_follow_the_sign() {
        // A 2×1 field: left negative, right positive.
        let img = isoline_image(&[-1.0, 1.0], 2, 1, 0);
        assert_eq!(img.to_ppm()[..11], *b"P6\n2 1\n255\n");
        // The left pixel sits on a band change and is drawn as a line.
        assert_eq!(img.rgb[..3], [30, 30, 30]);
        assert_eq!(img.rgb[3..], [255, 0, 0]);
        let flat = isoline_image(&[0.0; 4], 2, 2, 4);
        assert!(flat.rgb.iter().all(|&c| c == 255));
    }

    #[test]
    fn rows_run_top_down() {
        // The bottom row (j = 0) holds the maximum and must appear last.
        let img = isoline_image(&[1.0, 1.0, 0.9, 0.9], 2, 2, 1);
        assert_eq!(img.rgb[..3], [255, 25, 25]);
        assert_eq!(img.rgb[9..], [255, 0, 0]);
    }
}
