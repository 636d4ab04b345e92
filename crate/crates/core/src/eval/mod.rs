//! Dataset evaluation: distances, ring-based precision, grid search.

pub mod dataset;
pub mod grid;
pub mod harness;
pub mod metrics;
pub mod rings;

pub use dataset::{load_annotation, load_manifest, save_annotation, write_manifest, DatasetEntry, ManifestRow};
pub use grid::{grid_search, grid_search_contexts, rank_rows, write_grid_csv, GridRow, GridSpec};
pub use harness::{
    evaluate_dataset, precision, summarize_records, write_reports, EntryOutcome, EvalContext, EvaluationRecord,
    PrecisionSummary,
};
pub use metrics::{euclidean_dist, max_diameter, normalized_dist, percent, precision_from_counts, summarize, Stats};
pub use rings::{ring_index, Polygon};
