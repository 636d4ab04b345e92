//! Dataset manifests and ring annotations.
//!
//! A manifest lists one image per row with the columns
//! `id, image_path, mask_path, gt_x, gt_y, annotation_path`, either as CSV
//! (with header) or as a JSON array of objects with the same keys. Relative
//! paths are resolved against the manifest's directory. `mask_path` and
//! `annotation_path` may be empty.
//!
//! An annotation file is JSON:
//!
//! ```json
//! { "rings": [ { "name": "ring_0", "points": [[x, y], ...] }, ... ] }
//! ```
//!
//! Rings are listed innermost first in original-image pixel coordinates.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{PithError, Result};
use crate::geometry::Point;

use super::rings::{validate_nesting, Polygon};

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetEntry {
    pub id: String,
    pub image_path: PathBuf,
    pub mask_path: Option<PathBuf>,
    /// Ground-truth pith in original-image pixels.
    pub gt_pith: Point,
    /// Innermost first; ring 0 bounds the medulla. Empty when not annotated.
    pub rings: Vec<Polygon>,
}

impl DatasetEntry {
    pub fn validate(&self) -> Result<()> {
        validate_nesting(&self.rings)?;
        if let Some(r0) = self.rings.first() {
            if !r0.contains(self.gt_pith) {
                return Err(PithError::InvalidAnnotation(format!(
                    "{}: ground-truth pith lies outside ring 0",
                    self.id
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RingAnnotation {
    pub name: String,
    pub points: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct AnnotationFile {
    pub rings: Vec<RingAnnotation>,
}

impl AnnotationFile {
    pub fn from_polygons(rings: &[Polygon]) -> Self {
        Self {
            rings: rings
                .iter()
                .enumerate()
                .map(|(i, r)| RingAnnotation {
                    name: format!("ring_{i}"),
                    points: r.points.iter().map(|p| [p.x, p.y]).collect(),
                })
                .collect(),
        }
    }

    pub fn to_polygons(&self) -> Result<Vec<Polygon>> {
        self.rings
            .iter()
            .map(|r| Polygon::new(r.points.iter().map(|&[x, y]| Point::new(x, y)).collect()))
            .collect()
    }
}

/// Load and validate the rings of an annotation file.
pub fn load_annotation(path: &Path) -> Result<Vec<Polygon>> {
    let file: AnnotationFile = serde_json::from_str(&fs::read_to_string(path)?)?;
    let rings = file.to_polygons()?;
    validate_nesting(&rings)?;
    Ok(rings)
}

pub fn save_annotation(path: &Path, rings: &[Polygon]) -> Result<()> {
    let json = serde_json::to_string_pretty(&AnnotationFile::from_polygons(rings))?;
    fs::write(path, json)?;
    Ok(())
}

/// One manifest row as written on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub id: String,
    pub image_path: String,
    #[serde(default)]
    pub mask_path: Option<String>,
    pub gt_x: f64,
    pub gt_y: f64,
    #[serde(default)]
    pub annotation_path: Option<String>,
}

fn resolve(base: &Path, p: &Option<String>) -> Option<PathBuf> {
    p.as_deref()
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| base.join(s))
}

pub fn read_manifest_rows(path: &Path) -> Result<Vec<ManifestRow>> {
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let rows: Vec<ManifestRow> = if is_json {
        serde_json::from_str(&fs::read_to_string(path)?)?
    } else {
        csv::Reader::from_path(path)?
            .deserialize()
            .collect::<std::result::Result<_, _>>()?
    };
    Ok(rows)
}

/// Manifest rows resolved to entries. A row whose annotation cannot be read
/// becomes an `Err` for that row only.
pub fn load_manifest(path: &Path) -> Result<Vec<(String, Result<DatasetEntry>)>> {
    let base = path.parent().unwrap_or(Path::new("."));
    let rows = read_manifest_rows(path)?;
    if rows.is_empty() {
        return Err(PithError::Manifest(format!("{} lists no images", path.display())));
    }
    Ok(rows
        .into_iter()
        .map(|row| {
            let id = row.id.clone();
            let entry = (|| {
                let rings = match resolve(base, &row.annotation_path) {
                    Some(p) => load_annotation(&p)?,
                    None => Vec::new(),
                };
                let entry = DatasetEntry {
                    id: row.id,
                    image_path: base.join(&row.image_path),
                    mask_path: resolve(base, &row.mask_path),
                    gt_pith: Point::new(row.gt_x, row.gt_y),
                    rings,
                };
                entry.validate()?;
                Ok(entry)
            })();
            (id, entry)
        })
        .collect())
}

/// Write rows as a CSV manifest with header.
pub fn write_manifest(path: &Path, rows: &[ManifestRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rings() -> Vec<Polygon> {
        (1..4)
            .map(|k| Polygon::circle(Point::new(50.0, 50.0), 8.0 * k as f64, 64))
            .collect()
    }

    #[test]
    fn annotation_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.json");
        save_annotation(&p, &rings()).unwrap();
        assert_eq!(load_annotation(&p).unwrap(), rings());
    }

    #[test]
    fn crossing_rings_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.json");
        let mut r = rings();
        r.swap(0, 2);
        save_annotation(&p, &r).unwrap();
        assert!(matches!(load_annotation(&p), Err(PithError::InvalidAnnotation(_))));
    }

    #[test]
    fn csv_and_json_manifests() {
        let dir = tempfile::tempdir().unwrap();
        save_annotation(&dir.path().join("a.json"), &rings()).unwrap();
        let rows = vec![
            ManifestRow {
                id: "one".into(),
                image_path: "one.png".into(),
                mask_path: None,
                gt_x: 50.0,
                gt_y: 50.0,
                annotation_path: Some("a.json".into()),
            },
            ManifestRow {
                id: "two".into(),
                image_path: "two.png".into(),
                mask_path: Some("two_mask.png".into()),
                gt_x: 1.0,
                gt_y: 2.0,
                annotation_path: None,
            },
        ];
        let csv_path = dir.path().join("m.csv");
        write_manifest(&csv_path, &rows).unwrap();
        assert_eq!(read_manifest_rows(&csv_path).unwrap(), rows);

        let json_path = dir.path().join("m.json");
        fs::write(&json_path, serde_json::to_string(&rows).unwrap()).unwrap();
        let entries = load_manifest(&json_path).unwrap();
        assert_eq!(entries.len(), 2);
        let one = entries[0].1.as_ref().unwrap();
        assert_eq!(one.rings.len(), 3);
        assert_eq!(one.image_path, dir.path().join("one.png"));
        let two = entries[1].1.as_ref().unwrap();
        assert_eq!(two.mask_path.as_deref(), Some(dir.path().join("two_mask.png").as_path()));
        assert!(two.rings.is_empty());
    }

    #[test]
    fn gt_outside_ring_zero_is_invalid() {
        let e = DatasetEntry {
            id: "x".into(),
            image_path: "x.png".into(),
            mask_path: None,
            gt_pith: Point::new(90.0, 90.0),
            rings: rings(),
        };
        assert!(e.validate().is_err());
    }
}
