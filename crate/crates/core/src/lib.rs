//! Pith localisation for tree cross-section photographs.
//!
//! The detector follows the classic "spider web" reasoning: ring normals
//! meet at the pith. The pipeline is
//!
//! - [`imageprep`]: load, grayscale, square resize and masking.
//! - [`patchgrid`]: split the disk into (optionally overlapping) patches.
//! - [`orientation`]: per-patch Fourier spectrum, band-pass and magnitude
//!   threshold, then a dominant-direction fit (`peak`, `lsr`, `wlsr`, `pca`)
//!   with a certainty score.
//! - [`accumulator`]: ring-normal lines vote into an image-sized matrix,
//!   either by pairwise intersections or by the pixels each line crosses.
//! - [`peak`]: Gaussian smoothing and global-maximum extraction.
//!
//! [`pipeline::detect_pith`] chains all of the above. [`eval`] holds the
//! dataset harness (distance metrics, ring-region precision, grid search)
//! and [`synth`] generates spider-web images with known centers.

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod accumulator;
pub mod debug;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod imageprep;
pub mod orientation;
pub mod patchgrid;
pub mod peak;
pub mod pipeline;
pub mod synth;

pub use accumulator::{AccType, AccumulatorSpace, Line};
pub use error::{PithError, Result};
pub use geometry::Point;
pub use imageprep::{GrayImage, MaskImage, PreparedImage};
pub use orientation::{LoMethod, OrientationEstimate, PcaCertainty, Spectrum};
pub use patchgrid::Patch;
pub use pipeline::{detect_pith, Detection, PithParams};
