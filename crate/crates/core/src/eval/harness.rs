//! Per-image evaluation and report files.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{PithError, Result};
use crate::geometry::Point;
use crate::imageprep::{derive_mask, load_mask, load_rgb, prepare_gray, rgb_to_gray, GrayImage, MaskImage, PreparedImage};
use crate::pipeline::{detect_pith, PithParams};

use super::dataset::DatasetEntry;
use super::metrics::{euclidean_dist, max_diameter, normalized_dist, percent, precision_from_counts, summarize, Stats};
use super::rings::{ring_index, Polygon};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvaluationRecord {
    pub id: String,
    /// Prediction in original-image pixels.
    pub prediction: Point,
    pub gt: Point,
    pub dist: f64,
    pub norm_dist: f64,
    pub diameter: f64,
    /// Ring region holding the prediction; `None` without ring annotations.
    pub ring_index: Option<usize>,
    pub is_tp: Option<bool>,
}

/// Evaluation result for one manifest row.
#[derive(Clone, Debug)]
pub struct EntryOutcome {
    pub id: String,
    pub result: std::result::Result<EvaluationRecord, String>,
}

/// An image loaded once and reusable across parameter settings.
#[derive(Clone, Debug)]
pub struct EvalContext {
    pub id: String,
    pub gt: Point,
    pub rings: Vec<Polygon>,
    pub diameter: f64,
    gray: GrayImage,
    mask: MaskImage,
    prepared: PreparedImage,
}

impl EvalContext {
    pub fn load(entry: &DatasetEntry, new_shape: u32) -> Result<Self> {
        let rgb = load_rgb(&entry.image_path)?;
        let mask = match &entry.mask_path {
            Some(p) => load_mask(p, rgb.width(), rgb.height())?,
            None => derive_mask(&rgb)?,
        };
        Self::from_parts(entry, rgb_to_gray(&rgb), mask, new_shape)
    }

    /// Build from an in-memory image at original resolution.
    pub fn from_parts(entry: &DatasetEntry, gray: GrayImage, mask: MaskImage, new_shape: u32) -> Result<Self> {
        let diameter = max_diameter(&mask, entry.gt_pith)?;
        let prepared = prepare_gray(&gray, &mask, new_shape)?;
        Ok(Self {
            id: entry.id.clone(),
            gt: entry.gt_pith,
            rings: entry.rings.clone(),
            diameter,
            gray,
            mask,
            prepared,
        })
    }

    pub fn prepared(&self) -> &PreparedImage {
        &self.prepared
    }

    pub fn evaluate(&self, params: &PithParams) -> Result<EvaluationRecord> {
        let reprepared;
        let prepared = if params.new_shape as usize == self.prepared.gray.width() {
            &self.prepared
        } else {
            reprepared = prepare_gray(&self.gray, &self.mask, params.new_shape)?;
            &reprepared
        };
        let detection = detect_pith(prepared, params)?;
        self.record(detection.pith_original)
    }

    /// Score a prediction given in original-image pixels.
    pub fn record(&self, prediction: Point) -> Result<EvaluationRecord> {
        let dist = euclidean_dist(prediction, self.gt);
        let (ring_index, is_tp) = if self.rings.is_empty() {
            (None, None)
        } else {
            let idx = ring_index(prediction, &self.rings)?;
            (Some(idx), Some(idx == 0))
        };
        Ok(EvaluationRecord {
            id: self.id.clone(),
            prediction,
            gt: self.gt,
            dist,
            norm_dist: normalized_dist(dist, self.diameter)?,
            diameter: self.diameter,
            ring_index,
            is_tp,
        })
    }
}

pub(crate) fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

/// Evaluate every entry with one parameter set, using up to `jobs` workers.
/// Outcomes keep the input order.
pub fn evaluate_dataset(
    entries: &[(String, Result<DatasetEntry>)],
    params: &PithParams,
    jobs: usize,
) -> Vec<EntryOutcome> {
    with_jobs(jobs, || {
        entries
            .par_iter()
            .map(|(id, entry)| {
                let result = match entry {
                    Ok(e) => EvalContext::load(e, params.new_shape).and_then(|ctx| ctx.evaluate(params)),
                    Err(err) => Err(PithError::Manifest(err.to_string())),
                };
                if let Err(e) = &result {
                    log::warn!("{id}: {e}");
                }
                EntryOutcome {
                    id: id.clone(),
                    result: result.map_err(|e| e.to_string()),
                }
            })
            .collect()
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PrecisionSummary {
    pub tp: usize,
    pub fp: usize,
    pub precision: f64,
}

impl PrecisionSummary {
    pub fn percent(&self) -> u32 {
        percent(self.precision)
    }
}

/// Precision over the records that carry a TP/FP label.
pub fn precision(records: &[EvaluationRecord]) -> Result<PrecisionSummary> {
    let labelled: Vec<bool> = records.iter().filter_map(|r| r.is_tp).collect();
    let tp = labelled.iter().filter(|&&t| t).count();
    let fp = labelled.len() - tp;
    Ok(PrecisionSummary {
        tp,
        fp,
        precision: precision_from_counts(tp, fp)?,
    })
}

/// Statistics of `dist` and `norm_dist`.
pub fn summarize_records(records: &[EvaluationRecord]) -> Result<(Stats, Stats)> {
    let d: Vec<f64> = records.iter().map(|r| r.dist).collect();
    let n: Vec<f64> = records.iter().map(|r| r.norm_dist).collect();
    Ok((summarize(&d)?, summarize(&n)?))
}

/// Count of predictions per ring region.
pub fn ring_histogram(records: &[EvaluationRecord]) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for idx in records.iter().filter_map(|r| r.ring_index) {
        *h.entry(idx).or_insert(0) += 1;
    }
    h
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Per-image CSV, one row per manifest entry including failures.
pub fn write_records_csv(path: &Path, outcomes: &[EntryOutcome]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "id", "status", "pred_x", "pred_y", "gt_x", "gt_y", "dist", "norm_dist", "diameter",
        "ring_index", "is_tp", "error",
    ])?;
    for o in outcomes {
        match &o.result {
            Ok(r) => w.write_record([
                r.id.clone(),
                "ok".into(),
                format!("{:.3}", r.prediction.x),
                format!("{:.3}", r.prediction.y),
                format!("{:.3}", r.gt.x),
                format!("{:.3}", r.gt.y),
                format!("{:.3}", r.dist),
                format!("{:.3}", r.norm_dist),
                format!("{:.3}", r.diameter),
                opt(r.ring_index),
                opt(r.is_tp),
                String::new(),
            ])?,
            Err(e) => {
                let mut row = vec![o.id.clone(), "failed".to_string()];
                row.extend(std::iter::repeat_n(String::new(), 9));
                row.push(e.clone());
                w.write_record(row)?
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Summary table with rows Mean, Std, Median, P90, P95, Max.
pub fn write_summary_csv(path: &Path, records: &[EvaluationRecord]) -> Result<()> {
    let (d, n) = summarize_records(records)?;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["statistic", "distance", "normalized_distance"])?;
    for (name, a, b) in [
        ("Mean", d.mean, n.mean),
        ("Std", d.std, n.std),
        ("Median", d.median, n.median),
        ("P90", d.p90, n.p90),
        ("P95", d.p95, n.p95),
        ("Max", d.max, n.max),
    ] {
        w.write_record([name.to_string(), format!("{a:.3}"), format!("{b:.3}")])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_precision_csv(path: &Path, p: &PrecisionSummary) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["TP", "FP", "precision_percent"])?;
    w.write_record([p.tp.to_string(), p.fp.to_string(), p.percent().to_string()])?;
    w.flush()?;
    Ok(())
}

pub fn write_ring_histogram_csv(path: &Path, records: &[EvaluationRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["ring_index", "count"])?;
    for (idx, count) in ring_histogram(records) {
        w.write_record([idx.to_string(), count.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Files written by [`write_reports`].
pub const RECORDS_FILE: &str = "records.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const PRECISION_FILE: &str = "precision.csv";
pub const HISTOGRAM_FILE: &str = "ring_histogram.csv";

/// Write every report that the successful records allow.
pub fn write_reports(dir: &Path, outcomes: &[EntryOutcome]) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_records_csv(&dir.join(RECORDS_FILE), outcomes)?;
    let records: Vec<EvaluationRecord> = outcomes
        .iter()
        .filter_map(|o| o.result.as_ref().ok().cloned())
        .collect();
    if records.is_empty() {
        return Ok(());
    }
    write_summary_csv(&dir.join(SUMMARY_FILE), &records)?;
    if let Ok(p) = precision(&records) {
        write_precision_csv(&dir.join(PRECISION_FILE), &p)?;
        write_ring_histogram_csv(&dir.join(HISTOGRAM_FILE), &records)?;
    }
    Ok(())
}
