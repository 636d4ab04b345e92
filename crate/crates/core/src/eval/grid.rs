//! Exhaustive parameter search over a dataset.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{PithError, Result};
use crate::orientation::LoMethod;
use crate::pipeline::PithParams;

use super::dataset::DatasetEntry;
use super::harness::{precision, summarize_records, with_jobs, EvalContext, EvaluationRecord};
use super::metrics::Stats;

/// Cartesian product of searched values on top of a fixed base.
#[derive(Clone, Debug)]
pub struct GridSpec {
    /// Square patch sides.
    pub patch_sizes: Vec<usize>,
    pub overlaps: Vec<f64>,
    pub methods: Vec<LoMethod>,
    pub thresholds: Vec<f64>,
    pub base: PithParams,
}

impl GridSpec {
    /// The 96-point grid used in the dataset experiments.
    pub fn experiment() -> Self {
        Self {
            patch_sizes: vec![20, 30, 50, 100],
            overlaps: vec![0.0, 0.2, 0.4, 0.5],
            methods: vec![LoMethod::Pca, LoMethod::Peak],
            thresholds: vec![0.75, 0.85, 0.95],
            base: PithParams::experiment_base(),
        }
    }

    pub fn configurations(&self) -> Vec<PithParams> {
        let mut out = Vec::new();
        for &size in &self.patch_sizes {
            for &overlap in &self.overlaps {
                for &method in &self.methods {
                    for &th in &self.thresholds {
                        out.push(PithParams {
                            block_width_size: size,
                            block_height_size: size,
                            block_overlap: overlap,
                            lo_method: method,
                            lo_certainty_th: th,
                            ..self.base.clone()
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GridRow {
    pub params: PithParams,
    /// Images that produced a prediction.
    pub evaluated: usize,
    pub failed: usize,
    pub dist: Option<Stats>,
    pub norm_dist: Option<Stats>,
    pub precision: Option<f64>,
}

impl GridRow {
    fn from_records(params: PithParams, records: &[EvaluationRecord], failed: usize) -> Self {
        let stats = summarize_records(records).ok();
        Self {
            params,
            evaluated: records.len(),
            failed,
            dist: stats.map(|s| s.0),
            norm_dist: stats.map(|s| s.1),
            precision: precision(records).ok().map(|p| p.precision),
        }
    }

    pub fn mean_dist(&self) -> Option<f64> {
        self.dist.map(|s| s.mean)
    }
}

/// Sort by ascending mean distance, then mean normalized distance.
/// Configurations without any prediction go last; ties keep their order.
pub fn rank_rows(rows: &mut [GridRow]) {
    rows.sort_by(|a, b| match (a.dist, b.dist) {
        (Some(x), Some(y)) => x
            .mean
            .total_cmp(&y.mean)
            .then(a.norm_dist.unwrap().mean.total_cmp(&b.norm_dist.unwrap().mean)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
}

/// Load each image once, then evaluate every configuration of `spec`.
/// Images that cannot be loaded are skipped with a warning; per-configuration
/// failures are counted in [`GridRow::failed`]. Rows come back ranked.
pub fn grid_search(entries: &[DatasetEntry], spec: &GridSpec, jobs: usize) -> Result<Vec<GridRow>> {
    let contexts: Vec<EvalContext> = with_jobs(jobs, || {
        entries
            .par_iter()
            .filter_map(|e| match EvalContext::load(e, spec.base.new_shape) {
                Ok(ctx) => Some(ctx),
                Err(err) => {
                    log::warn!("{}: {err}", e.id);
                    None
                }
            })
            .collect()
    });
    grid_search_contexts(&contexts, spec, jobs)
}

/// Grid search over already loaded images.
pub fn grid_search_contexts(contexts: &[EvalContext], spec: &GridSpec, jobs: usize) -> Result<Vec<GridRow>> {
    if contexts.is_empty() {
        return Err(PithError::NoRecords);
    }
    let configs = spec.configurations();
    for c in &configs {
        c.validate()?;
    }
    let mut rows: Vec<GridRow> = with_jobs(jobs, || {
        configs
            .into_par_iter()
            .map(|params| {
                let mut records = Vec::new();
                let mut failed = 0;
                for ctx in contexts {
                    match ctx.evaluate(&params) {
                        Ok(r) => records.push(r),
                        Err(e) => {
                            log::warn!("{}: {e}", ctx.id);
                            failed += 1;
                        }
                    }
                }
                GridRow::from_records(params, &records, failed)
            })
            .collect()
    });
    rank_rows(&mut rows);
    Ok(rows)
}

fn fmt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.3}")).unwrap_or_default()
}

pub fn write_grid_csv(path: &Path, rows: &[GridRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "rank", "block_size", "block_overlap", "lo_method", "lo_certainty_th", "evaluated", "failed",
        "mean_dist", "median_dist", "mean_norm_dist", "median_norm_dist", "precision",
    ])?;
    for (i, r) in rows.iter().enumerate() {
        w.write_record([
            (i + 1).to_string(),
            r.params.block_width_size.to_string(),
            r.params.block_overlap.to_string(),
            r.params.lo_method.to_string(),
            r.params.lo_certainty_th.to_string(),
            r.evaluated.to_string(),
            r.failed.to_string(),
            fmt(r.dist.map(|s| s.mean)),
            fmt(r.dist.map(|s| s.median)),
            fmt(r.norm_dist.map(|s| s.mean)),
            fmt(r.norm_dist.map(|s| s.median)),
            fmt(r.precision),
        ])?;
    }
    w.flush()?;
    Ok(())
}
