//! PNG dumps of the intermediate pipeline products.

use std::path::{Path, PathBuf};

use image::{Rgb, RgbImage};

use crate::error::{PithError, Result};
use crate::imageprep::{GrayImage, PreparedImage};
use crate::orientation::{analyze_patch, Spectrum, SpectrumPlanner};
use crate::patchgrid::split_image_in_blocks;
use crate::pipeline::{Detection, PithParams};

pub const MASKED_INPUT_FILE: &str = "1_masked_input.png";
pub const LINES_FILE: &str = "2_filtered_lines.png";
pub const ACCUMULATOR_FILE: &str = "3_accumulator.png";
pub const PEAK_FILE: &str = "4_peak.png";

const RED: Rgb<u8> = Rgb([255, 0, 0]);
const BLUE: Rgb<u8> = Rgb([0, 0, 255]);
const GREEN: Rgb<u8> = Rgb([0, 200, 0]);

fn save(img: &RgbImage, path: PathBuf) -> Result<PathBuf> {
    img.save(&path)
        .map_err(|source| PithError::ImageWrite { path: path.clone(), source })?;
    Ok(path)
}

fn gray_to_rgb(gray: &GrayImage) -> RgbImage {
    RgbImage::from_fn(gray.width() as u32, gray.height() as u32, |x, y| {
        let v = (gray.get(x as usize, y as usize).clamp(0.0, 1.0) * 255.0).round() as u8;
        Rgb([v, v, v])
    })
}

/// Linear gray ramp from 0 to the maximum value.
fn heatmap(values: &[f64], width: usize, height: usize) -> RgbImage {
    let max = values.iter().copied().fold(0.0, f64::max);
    let scale = if max > 0.0 { 255.0 / max } else { 0.0 };
    RgbImage::from_fn(width as u32, height as u32, |x, y| {
        let v = (values[y as usize * width + x as usize] * scale).round() as u8;
        Rgb([v, v, v])
    })
}

fn mark(img: &mut RgbImage, x: f64, y: f64, radius: i64, color: Rgb<u8>) {
    let (cx, cy) = (x.round() as i64, y.round() as i64);
    for dy in -radius..=radius {
        for dx in -radius..=radius {
            let (px, py) = (cx + dx, cy + dy);
            if px >= 0 && py >= 0 && (px as u32) < img.width() && (py as u32) < img.height() {
                img.put_pixel(px as u32, py as u32, color);
            }
        }
    }
}

/// Write the four pipeline panels into `dir` and return their paths.
pub fn write_pipeline_images(dir: &Path, prepared: &PreparedImage, detection: &Detection) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let (w, h) = (prepared.gray.width(), prepared.gray.height());
    let input = gray_to_rgb(&prepared.gray);
    let mut out = vec![save(&input, dir.join(MASKED_INPUT_FILE))?];

    let mut lines = input.clone();
    for line in &detection.lines {
        for (x, y) in line.raster(w, h) {
            lines.put_pixel(x as u32, y as u32, GREEN);
        }
    }
    out.push(save(&lines, dir.join(LINES_FILE))?);

    let votes: Vec<f64> = detection.accumulator.votes().iter().map(|&v| v as f64).collect();
    out.push(save(&heatmap(&votes, w, h), dir.join(ACCUMULATOR_FILE))?);

    let mut peak = heatmap(&detection.peak.smoothed, w, h);
    for &(x, y) in &detection.peak.maxima {
        mark(&mut peak, x as f64, y as f64, 2, RED);
    }
    mark(&mut peak, detection.pith.x, detection.pith.y, 1, BLUE);
    out.push(save(&peak, dir.join(PEAK_FILE))?);
    Ok(out)
}

/// Log-magnitude rendering of a spectrum.
fn spectrum_panel(s: &Spectrum) -> RgbImage {
    let logged: Vec<f64> = s.magnitude().iter().map(|m| m.ln_1p()).collect();
    heatmap(&logged, s.width(), s.height())
}

/// For each of the first `limit` retained patches, write a panel with the
/// patch, its raw spectrum, and the preprocessed spectrum overlaid with the
/// fitted direction.
pub fn write_patch_spectra(
    dir: &Path,
    prepared: &PreparedImage,
    params: &PithParams,
    limit: usize,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let patches = split_image_in_blocks(
        &prepared.gray,
        &prepared.mask,
        params.block_overlap,
        params.block_width_size,
        params.block_height_size,
    )?;
    let planner = SpectrumPlanner::new(params.block_width_size, params.block_height_size)?;
    let (pw, ph) = (params.block_width_size as u32, params.block_height_size as u32);
    let mut out = Vec::new();
    for (i, patch) in patches.iter().take(limit).enumerate() {
        let a = analyze_patch(&planner, patch, params)?;
        let mut panel = RgbImage::new(3 * pw, ph);
        image::imageops::replace(&mut panel, &gray_to_rgb(&patch.pixels), 0, 0);
        image::imageops::replace(&mut panel, &spectrum_panel(&a.raw), pw as i64, 0);
        if let Some(pre) = &a.preprocessed {
            let mut right = spectrum_panel(pre);
            if let Some(est) = &a.estimate {
                let (cx, cy) = pre.center();
                let (dy, dx) = est.angle.sin_cos();
                let reach = pw.max(ph) as f64;
                let mut t = -reach;
                while t <= reach {
                    let (x, y) = (cx as f64 + t * dx, cy as f64 + t * dy);
                    if x >= 0.0 && y >= 0.0 && x < pw as f64 && y < ph as f64 {
                        right.put_pixel(x as u32, y as u32, RED);
                    }
                    t += 0.5;
                }
            }
            image::imageops::replace(&mut panel, &right, 2 * pw as i64, 0);
        }
        out.push(save(&panel, dir.join(format!("patch_{i:04}.png")))?);
    }
    Ok(out)
}
