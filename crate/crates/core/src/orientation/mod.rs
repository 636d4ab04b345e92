//! Local ring orientation from patch Fourier spectra.
//!
//! For every patch: magnitude spectrum of the mean-subtracted pixels,
//! annular band-pass `[H/64, H/3]`, relative magnitude threshold, then one of
//! four line fits through the spectrum center. The fitted direction is the
//! ring normal in image space. Estimates at or below `lo_certainty_th` are
//! dropped.

mod estimate;
mod spectrum;

use rayon::prelude::*;

pub use estimate::{lo_estimate, LoMethod, OrientationEstimate, PcaCertainty, STEEP_SLOPE};
pub use spectrum::{
    compute_fourier_spectrum, passband, preprocess_fourier_spectrum, Spectrum, SpectrumPlanner,
    MIN_PATCH_SIDE,
};

use crate::error::{PithError, Result};
use crate::imageprep::{GrayImage, MaskImage};
use crate::patchgrid::{split_image_in_blocks, Patch};
use crate::pipeline::PithParams;

/// Every intermediate product for one patch.
#[derive(Clone, Debug)]
pub struct PatchAnalysis {
    pub raw: Spectrum,
    /// `None` when the band-passed spectrum is empty.
    pub preprocessed: Option<Spectrum>,
    pub estimate: Option<OrientationEstimate>,
}

pub fn analyze_patch(
    planner: &SpectrumPlanner,
    patch: &Patch,
    params: &PithParams,
) -> Result<PatchAnalysis> {
    let raw = planner.compute(patch)?;
    let preprocessed = match preprocess_fourier_spectrum(&raw, params.fft_peak_th) {
        Ok(s) => Some(s),
        Err(PithError::EmptySpectrum) => None,
        Err(e) => return Err(e),
    };
    let estimate = preprocessed
        .as_ref()
        .map(|s| lo_estimate(s, params.lo_method, patch.center, params.pca_certainty));
    Ok(PatchAnalysis {
        raw,
        preprocessed,
        estimate,
    })
}

/// Keep estimates whose certainty is strictly greater than `threshold`.
pub fn filter_lo_by_certainty(
    estimates: Vec<OrientationEstimate>,
    threshold: f64,
) -> Vec<OrientationEstimate> {
    estimates
        .into_iter()
        .filter(|e| e.certainty > threshold)
        .collect()
}

/// Unfiltered estimates for every non-degenerate patch, in grid order.
pub fn estimate_all(img: &GrayImage, mask: &MaskImage, params: &PithParams) -> Result<Vec<OrientationEstimate>> {
    let patches = split_image_in_blocks(
        img,
        mask,
        params.block_overlap,
        params.block_width_size,
        params.block_height_size,
    )?;
    let planner = SpectrumPlanner::new(params.block_width_size, params.block_height_size)?;
    let analyses: Result<Vec<_>> = patches
        .par_iter()
        .map(|p| analyze_patch(&planner, p, params).map(|a| a.estimate))
        .collect();
    Ok(analyses?.into_iter().flatten().collect())
}

/// Split, transform, preprocess, fit and filter.
pub fn local_orientation_estimation(
    img: &GrayImage,
    mask: &MaskImage,
    params: &PithParams,
) -> Result<Vec<OrientationEstimate>> {
    params.validate()?;
    let all = estimate_all(img, mask, params)?;
    Ok(filter_lo_by_certainty(all, params.lo_certainty_th))
}
