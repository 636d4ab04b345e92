//! Synthetic cross-sections and sinusoid patches with known geometry.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{PithError, Result};
use crate::eval::dataset::{save_annotation, DatasetEntry, ManifestRow};
use crate::eval::rings::Polygon;
use crate::geometry::{angle_diff, normalize_angle, Point};
use crate::imageprep::{GrayImage, MaskImage};
use crate::patchgrid::Patch;

/// Vertices per annotated ring.
const RING_VERTICES: usize = 256;

/// Dark wedge cut from the center outwards.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Crack {
    /// Bisector direction in radians.
    pub direction: f64,
    /// Full opening angle in radians.
    pub width: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpiderWeb {
    pub size: usize,
    pub center: Point,
    /// Period of the radial profile in pixels.
    pub ring_spacing: f64,
    /// Peak-to-peak amplitude of the rings, in `[0, 1]`.
    pub contrast: f64,
    pub noise_sigma: f64,
    pub crack: Option<Crack>,
    /// Number of dark radial rays; 0 disables them.
    pub rays: usize,
    /// Radius of the disk; pixels outside are white background.
    pub disk_radius: f64,
    pub seed: u64,
}

impl SpiderWeb {
    /// Noise-free web centered in a square image, disk filling 96% of it.
    pub fn new(size: usize, ring_spacing: f64) -> Self {
        let c = (size as f64 - 1.0) / 2.0;
        Self {
            size,
            center: Point::new(c, c),
            ring_spacing,
            contrast: 0.8,
            noise_sigma: 0.0,
            crack: None,
            rays: 0,
            disk_radius: 0.48 * size as f64,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(PithError::InvalidParameter(m));
        let s = self.size as f64;
        if self.size < 8 {
            return bad(format!("size {} too small", self.size));
        }
        if !(self.center.x >= 0.0 && self.center.x <= s - 1.0 && self.center.y >= 0.0 && self.center.y <= s - 1.0) {
            return bad(format!("center ({}, {}) outside the image", self.center.x, self.center.y));
        }
        if !(self.ring_spacing >= 3.0) {
            return bad(format!("ring_spacing must be >= 3, got {}", self.ring_spacing));
        }
        if !(0.0..=1.0).contains(&self.contrast) {
            return bad(format!("contrast must lie in [0, 1], got {}", self.contrast));
        }
        if !(self.noise_sigma >= 0.0) {
            return bad(format!("noise_sigma must be >= 0, got {}", self.noise_sigma));
        }
        if !(self.disk_radius > self.ring_spacing) {
            return bad("disk_radius must exceed ring_spacing".into());
        }
        Ok(())
    }

    fn in_crack(&self, dx: f64, dy: f64) -> bool {
        self.crack.is_some_and(|c| {
            let a = dy.atan2(dx);
            let d = (a - c.direction).rem_euclid(TAU);
            d.min(TAU - d) <= c.width / 2.0
        })
    }

    fn in_ray(&self, dx: f64, dy: f64, r: f64) -> bool {
        if self.rays == 0 || r < 2.0 * self.ring_spacing {
            return false;
        }
        let period = TAU / self.rays as f64;
        let a = dy.atan2(dx).rem_euclid(period);
        // Rays are about 1.5 px wide.
        a.min(period - a) * r <= 0.75
    }

    fn intensity(&self, x: usize, y: usize) -> f64 {
        let (dx, dy) = (x as f64 - self.center.x, y as f64 - self.center.y);
        let r = dx.hypot(dy);
        if r > self.disk_radius {
            return 1.0;
        }
        if self.in_crack(dx, dy) {
            return 0.05;
        }
        let v = 0.5 + 0.5 * self.contrast * (TAU * r / self.ring_spacing).cos();
        if self.in_ray(dx, dy, r) {
            v * 0.6
        } else {
            v
        }
    }

    /// Circles at the intensity minima `(k + 0.5) * ring_spacing`.
    pub fn rings(&self) -> Vec<Polygon> {
        (0..)
            .map(|k| (k as f64 + 0.5) * self.ring_spacing)
            .take_while(|&r| r < self.disk_radius)
            .map(|r| Polygon::circle(self.center, r, RING_VERTICES))
            .collect()
    }

    pub fn mask(&self) -> MaskImage {
        MaskImage::from_fn(self.size, self.size, |x, y| {
            Point::new(x as f64, y as f64).distance(&self.center) <= self.disk_radius
        })
    }

    pub fn image(&self) -> GrayImage {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let noise = (self.noise_sigma > 0.0).then(|| Normal::new(0.0, self.noise_sigma).unwrap());
        GrayImage::from_fn(self.size, self.size, |x, y| {
            let mut v = self.intensity(x, y);
            if let Some(n) = &noise {
                v += n.sample(&mut rng);
            }
            v.clamp(0.0, 1.0) as f32
        })
    }
}

/// Generate image, mask and ground-truth entry for `web`.
pub fn make_spiderweb(web: &SpiderWeb, id: &str) -> Result<(GrayImage, MaskImage, DatasetEntry)> {
    web.validate()?;
    let entry = DatasetEntry {
        id: id.to_string(),
        image_path: format!("{id}.png").into(),
        mask_path: Some(format!("{id}_mask.png").into()),
        gt_pith: web.center,
        rings: web.rings(),
    };
    Ok((web.image(), web.mask(), entry))
}

/// Write `<id>.png`, `<id>_mask.png` and `<id>_rings.json` into `dir` and
/// return the manifest row with paths relative to `dir`.
pub fn write_case(dir: &Path, web: &SpiderWeb, id: &str) -> Result<ManifestRow> {
    let (img, mask, entry) = make_spiderweb(web, id)?;
    std::fs::create_dir_all(dir)?;
    let image_name = format!("{id}.png");
    let mask_name = format!("{id}_mask.png");
    let rings_name = format!("{id}_rings.json");
    let save = |im: image::GrayImage, name: &str| {
        let path = dir.join(name);
        im.save(&path).map_err(|source| PithError::ImageWrite { path, source })
    };
    save(img.to_luma8(), &image_name)?;
    save(mask.to_luma8(), &mask_name)?;
    save_annotation(&dir.join(&rings_name), &entry.rings)?;
    Ok(ManifestRow {
        id: id.to_string(),
        image_path: image_name,
        mask_path: Some(mask_name),
        gt_x: web.center.x,
        gt_y: web.center.y,
        annotation_path: Some(rings_name),
    })
}

fn sinusoid(size: usize, fx: f64, fy: f64) -> Patch {
    let pixels = GrayImage::from_fn(size, size, |x, y| {
        (0.5 + 0.5 * (TAU * (fx * x as f64 + fy * y as f64) / size as f64).cos()) as f32
    });
    let c = (size as f64 - 1.0) / 2.0;
    Patch {
        pixels,
        center: Point::new(c, c),
        foreground_fraction: 1.0,
    }
}

/// Square patch whose gray level varies along `angle` with `cycles` periods
/// across the patch. Its spectrum peaks at `±cycles·(cos, sin)(angle)`.
pub fn make_sinusoid_patch(size: usize, angle: f64, cycles: f64) -> Patch {
    sinusoid(size, cycles * angle.cos(), cycles * angle.sin())
}

/// Exactly periodic sinusoid with frequency `(u, v)` bins, at angle
/// `atan2(v, u)`.
pub fn make_lattice_sinusoid_patch(size: usize, u: i64, v: i64) -> (Patch, f64) {
    (
        sinusoid(size, u as f64, v as f64),
        normalize_angle((v as f64).atan2(u as f64)),
    )
}

/// Angle from `p` to the web center, folded into `[0, π)`.
pub fn radial_angle(center: Point, p: Point) -> f64 {
    normalize_angle((p.y - center.y).atan2(p.x - center.x))
}

/// Angular error modulo π, in degrees.
pub fn angle_error_deg(a: f64, b: f64) -> f64 {
    angle_diff(a, b) * 180.0 / PI
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::rings::validate_nesting;
    use crate::orientation::compute_fourier_spectrum;

    #[test]
    fn rings_nest_and_contain_center() {
        let web = SpiderWeb::new(200, 9.0);
        let (_, _, entry) = make_spiderweb(&web, "w").unwrap();
        validate_nesting(&entry.rings).unwrap();
        entry.validate().unwrap();
        assert_eq!(entry.rings.len(), 11);
    }

    #[test]
    fn rings_lie_on_dark_minima() {
        let web = SpiderWeb::new(200, 10.0);
        let img = web.image();
        let c = web.center;
        // Pixel row through the center at the first minimum radius.
        let x = (c.x + 15.0).round() as usize;
        let y = c.y.round() as usize;
        let r = Point::new(x as f64, y as f64).distance(&c);
        let expected = 0.5 + 0.5 * 0.8 * (TAU * r / 10.0).cos();
        assert!((img.get(x, y) as f64 - expected).abs() < 1e-6);
        assert!(img.get(x, y) < 0.2);
    }

    #[test]
    fn background_is_white_and_mask_circular() {
        let web = SpiderWeb::new(100, 6.0);
        let (img, mask, _) = make_spiderweb(&web, "w").unwrap();
        assert_eq!(img.get(0, 0), 1.0);
        assert!(!mask.get(0, 0));
        assert!(mask.get(50, 50));
        let area = mask.foreground_count() as f64;
        let expected = PI * web.disk_radius.powi(2);
        assert!((area - expected).abs() / expected < 0.02);
    }

    #[test]
    fn generator_is_seed_deterministic() {
        let web = SpiderWeb { noise_sigma: 0.05, seed: 7, ..SpiderWeb::new(64, 5.0) };
        assert_eq!(web.image(), web.image());
        let other = SpiderWeb { seed: 8, ..web.clone() };
        assert_ne!(web.image(), other.image());
    }

    #[test]
    fn invalid_geometry_is_rejected() {
        let ok = SpiderWeb::new(100, 6.0);
        for bad in [
            SpiderWeb { ring_spacing: 2.0, ..ok.clone() },
            SpiderWeb { center: Point::new(120.0, 5.0), ..ok.clone() },
            SpiderWeb { contrast: 1.5, ..ok.clone() },
        ] {
            assert!(make_spiderweb(&bad, "x").is_err());
        }
    }

    #[test]
    fn crack_is_dark() {
        let web = SpiderWeb {
            crack: Some(Crack { direction: 0.0, width: 20f64.to_radians() }),
            ..SpiderWeb::new(200, 8.0)
        };
        let img = web.image();
        assert_eq!(img.get(180, 100), 0.05f32);
        assert_ne!(img.get(20, 100), 0.05f32);
    }

    #[test]
    fn sinusoid_spectrum_peaks() {
        let peak_of = |p: &Patch| {
            let s = compute_fourier_spectrum(p).unwrap();
            let mut bins: Vec<_> = s.nonzero_bins().collect();
            bins.sort_by(|a, b| b.2.total_cmp(&a.2));
            let mut top: Vec<(i64, i64)> = bins[..2].iter().map(|b| (b.0, b.1)).collect();
            top.sort();
            top
        };
        assert_eq!(peak_of(&make_sinusoid_patch(100, 0.0, 10.0)), vec![(-10, 0), (10, 0)]);
        assert_eq!(peak_of(&make_sinusoid_patch(100, PI / 2.0, 10.0)), vec![(0, -10), (0, 10)]);
        let (p, a) = make_lattice_sinusoid_patch(64, 3, -4);
        assert_eq!(peak_of(&p), vec![(-3, 4), (3, -4)]);
        assert!((a - normalize_angle((-4f64).atan2(3.0))).abs() < 1e-12);
    }
}
