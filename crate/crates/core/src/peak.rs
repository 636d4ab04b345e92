//! Gaussian smoothing of the vote matrix and global-maximum extraction.

use crate::accumulator::AccumulatorSpace;
use crate::error::{PithError, Result};
use crate::geometry::Point;

/// Smoothed accumulator and the location of its global maximum.
#[derive(Clone, Debug)]
pub struct PeakResult {
    pub location: Point,
    /// Every cell holding the global maximum, as `(x, y)`.
    pub maxima: Vec<(usize, usize)>,
    pub smoothed: Vec<f64>,
}

/// Normalized kernel truncated at `ceil(3σ)` on each side.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let radius = (3.0 * sigma).ceil() as i64;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Separable convolution; samples outside the raster count as zero.
pub fn gaussian_blur(values: &[f64], width: usize, height: usize, sigma: f64) -> Vec<f64> {
    let kernel = gaussian_kernel(sigma);
    if kernel.len() == 1 {
        return values.to_vec();
    }
    let r = (kernel.len() / 2) as i64;

    let mut horizontal = vec![0.0; values.len()];
    for y in 0..height {
        let row = &values[y * width..(y + 1) * width];
        for x in 0..width {
            let mut acc = 0.0;
            for (k, w) in kernel.iter().enumerate() {
                let sx = x as i64 + k as i64 - r;
                if sx >= 0 && (sx as usize) < width {
                    acc += w * row[sx as usize];
                }
            }
            horizontal[y * width + x] = acc;
        }
    }

    let mut out = vec![0.0; values.len()];
    for y in 0..height {
        for (k, w) in kernel.iter().enumerate() {
            let sy = y as i64 + k as i64 - r;
            if sy < 0 || sy as usize >= height {
                continue;
            }
            let src = &horizontal[sy as usize * width..(sy as usize + 1) * width];
            let dst = &mut out[y * width..(y + 1) * width];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += w * s;
            }
        }
    }
    out
}

/// Blur the votes with standard deviation `peak_blur_sigma` and return the
/// global maximum. Exact ties are averaged.
pub fn find_peak(acc: &AccumulatorSpace, peak_blur_sigma: f64) -> Result<PeakResult> {
    if !(peak_blur_sigma >= 0.0) || !peak_blur_sigma.is_finite() {
        return Err(PithError::InvalidParameter(format!(
            "peak_blur_sigma must be a finite value >= 0, got {peak_blur_sigma}"
        )));
    }
    if acc.max() == 0 {
        return Err(PithError::NoEvidence);
    }
    let (w, h) = (acc.width(), acc.height());
    let votes: Vec<f64> = acc.votes().iter().map(|&v| v as f64).collect();
    let smoothed = gaussian_blur(&votes, w, h, peak_blur_sigma);

    let best = smoothed.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let maxima: Vec<(usize, usize)> = smoothed
        .iter()
        .enumerate()
        .filter(|(_, &v)| v == best)
        .map(|(i, _)| (i % w, i / w))
        .collect();
    let n = maxima.len() as f64;
    let (sx, sy) = maxima
        .iter()
        .fold((0.0, 0.0), |(sx, sy), &(x, y)| (sx + x as f64, sy + y as f64));
    Ok(PeakResult {
        location: Point::new(sx / n, sy / n),
        maxima,
        smoothed,
    })
}
