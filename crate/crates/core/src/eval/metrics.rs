//! Distance, diameter, precision and summary statistics.

use serde::Serialize;

use crate::error::{PithError, Result};
use crate::geometry::Point;
use crate::imageprep::MaskImage;

/// Scale factor of the normalized distance.
pub const NORMALIZATION_FACTOR: f64 = 1000.0;

/// Number of chords traced through the ground truth, 2° apart.
pub const DIAMETER_LINES: usize = 180;
pub const DIAMETER_STEP_DEG: f64 = 2.0;

/// Step used when walking a chord to the mask border.
pub const CHORD_STEP: f64 = 0.5;

pub fn euclidean_dist(dt: Point, gt: Point) -> f64 {
    ((dt.x - gt.x).powi(2) + (dt.y - gt.y).powi(2)).sqrt()
}

pub fn normalized_dist(dist: f64, diameter: f64) -> Result<f64> {
    if !(diameter > 0.0) {
        return Err(PithError::InvalidParameter(format!(
            "diameter must be positive, got {diameter}"
        )));
    }
    Ok(NORMALIZATION_FACTOR * dist / diameter)
}

/// Distance walked from `p` along `(dx, dy)` before leaving the mask.
fn half_chord(mask: &MaskImage, p: Point, dx: f64, dy: f64) -> f64 {
    let mut t = 0.0;
    loop {
        let next = t + CHORD_STEP;
        if !mask.contains(Point::new(p.x + next * dx, p.y + next * dy)) {
            return t;
        }
        t = next;
    }
}

/// Length of the foreground chord through `p` at `angle` radians.
pub fn chord_length(mask: &MaskImage, p: Point, angle: f64) -> f64 {
    let (dy, dx) = angle.sin_cos();
    half_chord(mask, p, dx, dy) + half_chord(mask, p, -dx, -dy)
}

/// Longest of the [`DIAMETER_LINES`] chords through `gt`.
pub fn max_diameter(mask: &MaskImage, gt: Point) -> Result<f64> {
    if !mask.contains(gt) {
        return Err(PithError::OutsideMask { x: gt.x, y: gt.y });
    }
    Ok((0..DIAMETER_LINES)
        .map(|k| chord_length(mask, gt, (k as f64 * DIAMETER_STEP_DEG).to_radians()))
        .fold(0.0, f64::max))
}

/// `TP / (TP + FP)`.
pub fn precision_from_counts(tp: usize, fp: usize) -> Result<f64> {
    if tp + fp == 0 {
        return Err(PithError::NoRecords);
    }
    Ok(tp as f64 / (tp + fp) as f64)
}

/// Ratio as an integer percentage, rounded half up.
pub fn percent(ratio: f64) -> u32 {
    (ratio * 100.0 + 0.5).floor() as u32
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Stats {
    pub mean: f64,
    pub std: f64,
    pub median: f64,
    pub p90: f64,
    pub p95: f64,
    pub max: f64,
}

/// Quantile of sorted data, linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Mean, population standard deviation, median, P90, P95 and maximum.
pub fn summarize(values: &[f64]) -> Result<Stats> {
    if values.is_empty() {
        return Err(PithError::NoRecords);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let var = sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Ok(Stats {
        mean,
        std: var.sqrt(),
        median: quantile(&sorted, 0.5),
        p90: quantile(&sorted, 0.9),
        p95: quantile(&sorted, 0.95),
        max: sorted[sorted.len() - 1],
    })
}
