use std::fs;

use pith_core::eval::{
    evaluate_dataset, grid_search, load_manifest, write_grid_csv, write_manifest, write_reports, GridSpec,
};
use pith_core::orientation::LoMethod;
use pith_core::synth::{write_case, SpiderWeb};
use pith_core::{PithParams, Point};

fn small_web(seed: u64) -> SpiderWeb {
    SpiderWeb {
        center: Point::new(140.0 + 15.0 * seed as f64, 170.0),
        noise_sigma: 0.05,
        seed,
        ..SpiderWeb::new(320, 7.0 + seed as f64)
    }
}

fn dataset(dir: &std::path::Path) -> std::path::PathBuf {
    let rows: Vec<_> = (0..2)
        .map(|s| write_case(dir, &small_web(s), &format!("web{s}")).unwrap())
        .collect();
    let manifest = dir.join("manifest.csv");
    write_manifest(&manifest, &rows).unwrap();
    manifest
}

fn params() -> PithParams {
    PithParams {
        new_shape: 320,
        block_width_size: 40,
        block_height_size: 40,
        ..PithParams::default()
    }
}

#[test]
fn two_image_manifest_gives_two_records_and_one_summary() {
    let dir = tempfile::tempdir().unwrap();
    let entries = load_manifest(&dataset(dir.path())).unwrap();
    let outcomes = evaluate_dataset(&entries, &params(), 2);
    assert_eq!(outcomes.len(), 2);
    for (o, s) in outcomes.iter().zip(0..) {
        let r = o.result.as_ref().unwrap();
        assert_eq!(r.id, format!("web{s}"));
        assert!(r.dist < 10.0, "{}: {}", r.id, r.dist);
        assert!(r.is_tp.is_some());
        // Disk radius is 0.48·320.
        assert!((r.diameter - 0.96 * 320.0).abs() < 4.0, "{}", r.diameter);
    }

    let out = dir.path().join("report");
    write_reports(&out, &outcomes).unwrap();
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines[0], "statistic,distance,normalized_distance");
    assert_eq!(lines.len(), 7);
    assert!(lines[1].starts_with("Mean,"));
    assert_eq!(fs::read_to_string(out.join("records.csv")).unwrap().lines().count(), 3);
}

#[test]
fn unreadable_images_are_reported_per_row() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dataset(dir.path());
    fs::remove_file(dir.path().join("web1.png")).unwrap();
    let entries = load_manifest(&manifest).unwrap();
    let outcomes = evaluate_dataset(&entries, &params(), 1);
    assert!(outcomes[0].result.is_ok());
    assert!(outcomes[1].result.as_ref().unwrap_err().contains("web1.png"));
}

#[test]
fn grid_search_on_toy_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let entries: Vec<_> = load_manifest(&dataset(dir.path()))
        .unwrap()
        .into_iter()
        .map(|(_, e)| e.unwrap())
        .collect();
    let spec = GridSpec {
        patch_sizes: vec![30, 50],
        overlaps: vec![0.0, 0.5],
        methods: vec![LoMethod::Pca, LoMethod::Peak],
        thresholds: vec![0.75, 0.95],
        base: PithParams { new_shape: 320, ..PithParams::experiment_base() },
    };
    let rows = grid_search(&entries, &spec, 1).unwrap();
    assert_eq!(rows.len(), 16);
    let best = rows[0].mean_dist().unwrap();
    assert!(best < 10.0, "{best}");
    assert!(rows.windows(2).all(|w| match (w[0].mean_dist(), w[1].mean_dist()) {
        (Some(a), Some(b)) => a <= b,
        (_, None) => true,
        (None, Some(_)) => false,
    }));
    let csv = dir.path().join("grid.csv");
    write_grid_csv(&csv, &rows).unwrap();
    assert_eq!(fs::read_to_string(csv).unwrap().lines().count(), 17);
}
