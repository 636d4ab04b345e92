use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the detection pipeline and the evaluation harness.
#[derive(Debug, Error)]
pub enum PithError {
    #[error("cannot read image {path}: {source}")]
    ImageRead {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error("cannot write image {path}: {source}")]
    ImageWrite {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error("mask is {mask_width}x{mask_height} but image is {image_width}x{image_height}")]
    MaskMismatch {
        image_width: u32,
        image_height: u32,
        mask_width: u32,
        mask_height: u32,
    },
    #[error("mask has no foreground pixels")]
    EmptyForeground,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("spectrum is empty after filtering")]
    EmptySpectrum,
    #[error("no orientation estimate survived the certainty filter")]
    NoOrientations,
    #[error("accumulator holds no votes")]
    NoEvidence,
    #[error("point ({x}, {y}) lies outside the foreground mask")]
    OutsideMask { x: f64, y: f64 },
    #[error("malformed polygon: {0}")]
    MalformedPolygon(String),
    #[error("invalid annotation: {0}")]
    InvalidAnnotation(String),
    #[error("no records to aggregate")]
    NoRecords,
    #[error("invalid manifest: {0}")]
    Manifest(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl PithError {
    /// Short stable identifier, used in machine-readable error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            PithError::ImageRead { .. } => "image_read",
            PithError::ImageWrite { .. } => "image_write",
            PithError::MaskMismatch { .. } => "mask_mismatch",
            PithError::EmptyForeground => "empty_foreground",
            PithError::InvalidParameter(_) => "invalid_parameter",
            PithError::EmptySpectrum => "empty_spectrum",
            PithError::NoOrientations => "empty_line_set",
            PithError::NoEvidence => "no_evidence",
            PithError::OutsideMask { .. } => "outside_mask",
            PithError::MalformedPolygon(_) => "malformed_polygon",
            PithError::InvalidAnnotation(_) => "invalid_annotation",
            PithError::NoRecords => "no_records",
            PithError::Manifest(_) => "manifest",
            PithError::Io(_) => "io",
            PithError::Json(_) => "json",
            PithError::Csv(_) => "csv",
        }
    }
}

pub type Result<T, E = PithError> = std::result::Result<T, E>;
