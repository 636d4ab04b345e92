//! End-to-end detection: orientations, voting, peak.

use serde::{Deserialize, Serialize};

use crate::accumulator::{accumulation_space, to_line, AccType, AccumulatorSpace, Line};
use crate::error::{PithError, Result};
use crate::geometry::Point;
use crate::imageprep::PreparedImage;
use crate::orientation::{local_orientation_estimation, LoMethod, OrientationEstimate, PcaCertainty};
use crate::peak::{find_peak, PeakResult};

/// Detector parameters. Defaults follow the reference command-line tool.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PithParams {
    pub new_shape: u32,
    pub block_width_size: usize,
    pub block_height_size: usize,
    pub block_overlap: f64,
    pub fft_peak_th: f64,
    pub lo_method: LoMethod,
    pub lo_certainty_th: f64,
    pub acc_type: AccType,
    pub peak_blur_sigma: f64,
    #[serde(default)]
    pub pca_certainty: PcaCertainty,
}

impl Default for PithParams {
    fn default() -> Self {
        Self {
            new_shape: 1000,
            block_width_size: 100,
            block_height_size: 100,
            block_overlap: 0.2,
            fft_peak_th: 0.8,
            lo_method: LoMethod::Pca,
            lo_certainty_th: 0.9,
            acc_type: AccType::PassThrough,
            peak_blur_sigma: 3.0,
            pca_certainty: PcaCertainty::Normalized,
        }
    }
}

impl PithParams {
    /// Fixed settings used for the dataset experiments (`fft_peak_th = 0.6`,
    /// additive accumulation, `σ = 3`, 1000 px images). Patch size, overlap,
    /// method and threshold are the searched dimensions.
    pub fn experiment_base() -> Self {
        Self {
            fft_peak_th: 0.6,
            ..Self::default()
        }
    }

    /// Best configuration reported for the UruDendro collection.
    pub fn urudendro_best() -> Self {
        Self {
            block_width_size: 50,
            block_height_size: 50,
            block_overlap: 0.5,
            lo_method: LoMethod::Peak,
            lo_certainty_th: 0.75,
            ..Self::experiment_base()
        }
    }

    /// Best configuration reported for the Kennel collection.
    pub fn kennel_best() -> Self {
        Self {
            block_width_size: 25,
            block_height_size: 25,
            block_overlap: 0.5,
            lo_method: LoMethod::Pca,
            lo_certainty_th: 0.75,
            ..Self::experiment_base()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(PithError::InvalidParameter(m));
        if self.new_shape < crate::imageprep::MIN_SHAPE {
            return bad(format!("new_shape must be >= {}", crate::imageprep::MIN_SHAPE));
        }
        if self.block_width_size < crate::orientation::MIN_PATCH_SIDE
            || self.block_height_size < crate::orientation::MIN_PATCH_SIDE
        {
            return bad(format!(
                "block sizes must be >= {}",
                crate::orientation::MIN_PATCH_SIDE
            ));
        }
        if !(0.0..1.0).contains(&self.block_overlap) {
            return bad(format!("block_overlap must lie in [0, 1), got {}", self.block_overlap));
        }
        if !(0.0..=1.0).contains(&self.fft_peak_th) {
            return bad(format!("fft_peak_th must lie in [0, 1], got {}", self.fft_peak_th));
        }
        if !self.lo_certainty_th.is_finite() {
            return bad("lo_certainty_th must be finite".into());
        }
        if !(self.peak_blur_sigma >= 0.0) || !self.peak_blur_sigma.is_finite() {
            return bad(format!("peak_blur_sigma must be >= 0, got {}", self.peak_blur_sigma));
        }
        Ok(())
    }
}

/// Detection output with the intermediate products used for debugging.
#[derive(Clone, Debug)]
pub struct Detection {
    /// Pith in resized-image coordinates.
    pub pith: Point,
    /// Pith in original-image coordinates.
    pub pith_original: Point,
    pub estimates: Vec<OrientationEstimate>,
    pub lines: Vec<Line>,
    pub accumulator: AccumulatorSpace,
    pub peak: PeakResult,
}

pub fn detect_pith(prepared: &PreparedImage, params: &PithParams) -> Result<Detection> {
    params.validate()?;
    let (w, h) = (prepared.gray.width(), prepared.gray.height());
    let estimates = local_orientation_estimation(&prepared.gray, &prepared.mask, params)?;
    if estimates.is_empty() {
        return Err(PithError::NoOrientations);
    }
    let lines: Vec<Line> = estimates.iter().map(to_line).collect();
    let accumulator = accumulation_space(&lines, params.acc_type, w, h);
    let peak = find_peak(&accumulator, params.peak_blur_sigma)?;
    Ok(Detection {
        pith: peak.location,
        pith_original: prepared.to_original(peak.location),
        estimates,
        lines,
        accumulator,
        peak,
    })
}
