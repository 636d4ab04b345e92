//! Image loading, grayscale conversion, square resizing and masking.

use std::collections::VecDeque;
use std::path::Path;

use image::RgbImage;

use crate::error::{PithError, Result};
use crate::geometry::Point;

/// Channels at or above this value (on `[0, 1]`) mark near-white background.
pub const BACKGROUND_WHITE_LEVEL: f32 = 0.92;

/// Smallest accepted square side after resizing.
pub const MIN_SHAPE: u32 = 64;

const LUMA_WEIGHTS: [f32; 3] = [0.299, 0.587, 0.114];

/// Luminance raster, row-major, values in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(PithError::InvalidParameter(
                "image dimensions must be positive".into(),
            ));
        }
        if data.len() != width * height {
            return Err(PithError::InvalidParameter(format!(
                "expected {} pixels, got {}",
                width * height,
                data.len()
            )));
        }
        if data.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(PithError::InvalidParameter(
                "luminance values must lie in [0, 1]".into(),
            ));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Self {
        assert!(width > 0 && height > 0);
        Self {
            width,
            height,
            data: vec![value.clamp(0.0, 1.0); width * height],
        }
    }

    /// Build from a closure evaluated at every pixel; results are clamped to `[0, 1]`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        assert!(width > 0 && height > 0);
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y).clamp(0.0, 1.0));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    /// Copy a `w × h` window starting at `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> GrayImage {
        assert!(x0 + w <= self.width && y0 + h <= self.height);
        let mut data = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            let row = y * self.width;
            data.extend_from_slice(&self.data[row + x0..row + x0 + w]);
        }
        GrayImage {
            width: w,
            height: h,
            data,
        }
    }

    pub fn to_luma8(&self) -> image::GrayImage {
        image::GrayImage::from_fn(self.width as u32, self.height as u32, |x, y| {
            image::Luma([(self.get(x as usize, y as usize) * 255.0).round() as u8])
        })
    }
}

/// Foreground flags, row-major. `true` marks wood.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskImage {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl MaskImage {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(PithError::InvalidParameter(format!(
                "mask buffer of {} flags does not match {width}x{height}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        assert!(width > 0 && height > 0);
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn full(width: usize, height: usize) -> Self {
        Self::from_fn(width, height, |_, _| true)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    /// Foreground test at a real-valued position; positions are rounded to the
    /// nearest pixel and anything outside the raster is background.
    pub fn contains(&self, p: Point) -> bool {
        let x = crate::geometry::round_half_up(p.x);
        let y = crate::geometry::round_half_up(p.y);
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.get(x as usize, y as usize)
    }

    pub fn foreground_count(&self) -> usize {
        self.data.iter().filter(|&&f| f).count()
    }

    pub fn to_luma8(&self) -> image::GrayImage {
        image::GrayImage::from_fn(self.width as u32, self.height as u32, |x, y| {
            image::Luma([if self.get(x as usize, y as usize) { 255 } else { 0 }])
        })
    }
}

/// A gray image and mask resized to a square, together with the original
/// dimensions needed to map coordinates back.
#[derive(Clone, Debug)]
pub struct PreparedImage {
    pub gray: GrayImage,
    pub mask: MaskImage,
    pub original_width: usize,
    pub original_height: usize,
}

impl PreparedImage {
    fn scale(&self) -> (f64, f64) {
        (
            self.original_width as f64 / self.gray.width() as f64,
            self.original_height as f64 / self.gray.height() as f64,
        )
    }

    /// Map a resized-space coordinate to original-image pixels.
    pub fn to_original(&self, p: Point) -> Point {
        let (sx, sy) = self.scale();
        Point::new((p.x + 0.5) * sx - 0.5, (p.y + 0.5) * sy - 0.5)
    }

    /// Map an original-image coordinate into resized space.
    pub fn to_resized(&self, p: Point) -> Point {
        let (sx, sy) = self.scale();
        Point::new((p.x + 0.5) / sx - 0.5, (p.y + 0.5) / sy - 0.5)
    }
}

pub fn rgb_to_gray(rgb: &RgbImage) -> GrayImage {
    let (w, h) = rgb.dimensions();
    let data = rgb
        .pixels()
        .map(|p| {
            let v = LUMA_WEIGHTS[0] * p[0] as f32
                + LUMA_WEIGHTS[1] * p[1] as f32
                + LUMA_WEIGHTS[2] * p[2] as f32;
            (v / 255.0).clamp(0.0, 1.0)
        })
        .collect();
    GrayImage {
        width: w as usize,
        height: h as usize,
        data,
    }
}

pub fn load_rgb(path: &Path) -> Result<RgbImage> {
    let img = image::open(path).map_err(|source| PithError::ImageRead {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(img.to_rgb8())
}

/// Load a single-channel mask; any nonzero value is foreground.
pub fn load_mask(path: &Path, expected_width: u32, expected_height: u32) -> Result<MaskImage> {
    let img = image::open(path)
        .map_err(|source| PithError::ImageRead {
            path: path.to_path_buf(),
            source,
        })?
        .to_luma8();
    let (w, h) = img.dimensions();
    if (w, h) != (expected_width, expected_height) {
        return Err(PithError::MaskMismatch {
            image_width: expected_width,
            image_height: expected_height,
            mask_width: w,
            mask_height: h,
        });
    }
    let data = img.pixels().map(|p| p[0] != 0).collect();
    MaskImage::new(w as usize, h as usize, data)
}

/// Derive a foreground mask from a photograph on a near-white background.
///
/// Pixels whose channels are all at least [`BACKGROUND_WHITE_LEVEL`] are
/// background. The largest 4-connected foreground component is kept and
/// background pockets that do not reach the image border are filled.
pub fn derive_mask(rgb: &RgbImage) -> Result<MaskImage> {
    let (w, h) = rgb.dimensions();
    let (w, h) = (w as usize, h as usize);
    let level = (BACKGROUND_WHITE_LEVEL * 255.0).ceil() as u8;
    let raw: Vec<bool> = rgb
        .pixels()
        .map(|p| !(p[0] >= level && p[1] >= level && p[2] >= level))
        .collect();

    let labels = label_components(&raw, w, h, true);
    let mut sizes = vec![0usize; labels.count];
    for l in labels.labels.iter().flatten() {
        sizes[*l] += 1;
    }
    let Some((largest, _)) = sizes.iter().enumerate().max_by_key(|&(i, s)| (*s, usize::MAX - i))
    else {
        return Err(PithError::EmptyForeground);
    };
    let mut data: Vec<bool> = labels.labels.iter().map(|l| *l == Some(largest)).collect();

    // Fill background pockets enclosed by the disk.
    let holes = label_components(&data, w, h, false);
    let mut touches_border = vec![false; holes.count];
    for y in 0..h {
        for x in 0..w {
            if x == 0 || y == 0 || x == w - 1 || y == h - 1 {
                if let Some(l) = holes.labels[y * w + x] {
                    touches_border[l] = true;
                }
            }
        }
    }
    for (flag, l) in data.iter_mut().zip(&holes.labels) {
        if let Some(l) = l {
            if !touches_border[*l] {
                *flag = true;
            }
        }
    }
    MaskImage::new(w, h, data)
}

struct Components {
    labels: Vec<Option<usize>>,
    count: usize,
}

/// 4-connected labelling of the pixels equal to `value`.
fn label_components(flags: &[bool], w: usize, h: usize, value: bool) -> Components {
    let mut labels = vec![None; w * h];
    let mut count = 0;
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if flags[start] != value || labels[start].is_some() {
            continue;
        }
        labels[start] = Some(count);
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            let (x, y) = (i % w, i / w);
            let mut visit = |j: usize| {
                if flags[j] == value && labels[j].is_none() {
                    labels[j] = Some(count);
                    queue.push_back(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        count += 1;
    }
    Components { labels, count }
}

/// Bilinear resampling with pixel-center alignment.
pub fn resize_bilinear(img: &GrayImage, new_w: usize, new_h: usize) -> GrayImage {
    if (new_w, new_h) == (img.width, img.height) {
        return img.clone();
    }
    let sx = img.width as f64 / new_w as f64;
    let sy = img.height as f64 / new_h as f64;
    let max_x = (img.width - 1) as f64;
    let max_y = (img.height - 1) as f64;
    GrayImage::from_fn(new_w, new_h, |x, y| {
        let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, max_x);
        let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, max_y);
        let x0 = fx.floor() as usize;
        let y0 = fy.floor() as usize;
        let x1 = (x0 + 1).min(img.width - 1);
        let y1 = (y0 + 1).min(img.height - 1);
        let tx = (fx - x0 as f64) as f32;
        let ty = (fy - y0 as f64) as f32;
        let top = img.get(x0, y0) * (1.0 - tx) + img.get(x1, y0) * tx;
        let bottom = img.get(x0, y1) * (1.0 - tx) + img.get(x1, y1) * tx;
        top * (1.0 - ty) + bottom * ty
    })
}

pub fn resize_nearest(mask: &MaskImage, new_w: usize, new_h: usize) -> MaskImage {
    if (new_w, new_h) == (mask.width, mask.height) {
        return mask.clone();
    }
    let sx = mask.width as f64 / new_w as f64;
    let sy = mask.height as f64 / new_h as f64;
    MaskImage::from_fn(new_w, new_h, |x, y| {
        let src_x = (((x as f64 + 0.5) * sx).floor() as usize).min(mask.width - 1);
        let src_y = (((y as f64 + 0.5) * sy).floor() as usize).min(mask.height - 1);
        mask.get(src_x, src_y)
    })
}

/// Replace background pixels with the mean foreground luminance.
pub fn apply_mask(gray: &GrayImage, mask: &MaskImage) -> Result<GrayImage> {
    let (sum, count) = gray
        .data
        .iter()
        .zip(&mask.data)
        .filter(|(_, &m)| m)
        .fold((0.0f64, 0usize), |(s, n), (&v, _)| (s + v as f64, n + 1));
    if count == 0 {
        return Err(PithError::EmptyForeground);
    }
    let fill = (sum / count as f64) as f32;
    let data = gray
        .data
        .iter()
        .zip(&mask.data)
        .map(|(&v, &m)| if m { v } else { fill })
        .collect();
    Ok(GrayImage {
        width: gray.width,
        height: gray.height,
        data,
    })
}

/// Resize gray image and mask to `new_shape × new_shape` and apply the mask.
pub fn prepare_gray(gray: &GrayImage, mask: &MaskImage, new_shape: u32) -> Result<PreparedImage> {
    if new_shape < MIN_SHAPE {
        return Err(PithError::InvalidParameter(format!(
            "new_shape must be at least {MIN_SHAPE}, got {new_shape}"
        )));
    }
    if (mask.width, mask.height) != (gray.width, gray.height) {
        return Err(PithError::MaskMismatch {
            image_width: gray.width as u32,
            image_height: gray.height as u32,
            mask_width: mask.width as u32,
            mask_height: mask.height as u32,
        });
    }
    let n = new_shape as usize;
    let resized_mask = resize_nearest(mask, n, n);
    if resized_mask.foreground_count() == 0 {
        return Err(PithError::EmptyForeground);
    }
    let resized = resize_bilinear(gray, n, n);
    let masked = apply_mask(&resized, &resized_mask)?;
    Ok(PreparedImage {
        gray: masked,
        mask: resized_mask,
        original_width: gray.width,
        original_height: gray.height,
    })
}

/// Prepare an RGB raster. Without a mask, one is derived from the white background.
pub fn prepare_rgb(rgb: &RgbImage, mask: Option<MaskImage>, new_shape: u32) -> Result<PreparedImage> {
    let mask = match mask {
        Some(m) => m,
        None => derive_mask(rgb)?,
    };
    prepare_gray(&rgb_to_gray(rgb), &mask, new_shape)
}

pub fn load_and_prepare(
    image_path: &Path,
    mask_path: Option<&Path>,
    new_shape: u32,
) -> Result<PreparedImage> {
    let rgb = load_rgb(image_path)?;
    let mask = mask_path
        .map(|p| load_mask(p, rgb.width(), rgb.height()))
        .transpose()?;
    prepare_rgb(&rgb, mask, new_shape)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk_rgb(size: u32, cx: f64, cy: f64, r: f64) -> RgbImage {
        RgbImage::from_fn(size, size, |x, y| {
            if (x as f64 - cx).hypot(y as f64 - cy) <= r {
                image::Rgb([90, 60, 30])
            } else {
                image::Rgb([255, 255, 255])
            }
        })
    }

    #[test]
    fn grayscale_uses_fixed_luma_weights() {
        let rgb = RgbImage::from_pixel(2, 1, image::Rgb([255, 0, 0]));
        let g = rgb_to_gray(&rgb);
        assert!((g.get(0, 0) - 0.299).abs() < 1e-6);
        let white = RgbImage::from_pixel(1, 1, image::Rgb([255, 255, 255]));
        assert!((rgb_to_gray(&white).get(0, 0) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn grayscale_is_monotone_per_channel() {
        for c in 0..3 {
            let mut prev = -1.0;
            for v in (0..=255).step_by(15) {
                let mut px = [40u8, 80, 120];
                px[c] = v;
                let g = rgb_to_gray(&RgbImage::from_pixel(1, 1, image::Rgb(px))).get(0, 0);
                assert!(g >= prev);
                prev = g;
            }
        }
    }

    #[test]
    fn identity_resize_preserves_pixels() {
        let g = GrayImage::from_fn(100, 100, |x, y| ((x * 7 + y * 3) % 255) as f32 / 255.0);
        assert_eq!(resize_bilinear(&g, 100, 100), g);
        let m = MaskImage::from_fn(100, 100, |x, _| x > 30);
        assert_eq!(resize_nearest(&m, 100, 100), m);
    }

    #[test]
    fn resizing_is_always_square() {
        let rgb = RgbImage::from_fn(300, 180, |x, y| {
            if (x as f64 - 150.0).hypot(y as f64 - 90.0) < 80.0 {
                image::Rgb([100, 70, 40])
            } else {
                image::Rgb([250, 250, 250])
            }
        });
        let prep = prepare_rgb(&rgb, None, 128).unwrap();
        assert_eq!((prep.gray.width(), prep.gray.height()), (128, 128));
        assert_eq!((prep.mask.width(), prep.mask.height()), (128, 128));
        assert!(prep.mask.foreground_count() > 0);
    }

    #[test]
    fn derived_mask_matches_dark_disk_area() {
        let (size, cx, cy, r) = (400u32, 200.0, 190.0, 120.0);
        let rgb = disk_rgb(size, cx, cy, r);
        let mask = derive_mask(&rgb).unwrap();
        // Exact-threshold reference from the generator geometry.
        let expected = (0..size * size)
            .filter(|i| {
                let (x, y) = ((i % size) as f64, (i / size) as f64);
                (x - cx).hypot(y - cy) <= r
            })
            .count() as f64;
        let got = mask.foreground_count() as f64;
        assert!((got - expected).abs() / expected < 0.02, "{got} vs {expected}");
    }

    #[test]
    fn derived_mask_drops_specks_and_fills_holes() {
        let mut rgb = disk_rgb(200, 100.0, 100.0, 60.0);
        // A dark speck on the background and a white hole inside the disk.
        rgb.put_pixel(5, 5, image::Rgb([0, 0, 0]));
        for y in 95..105 {
            for x in 95..105 {
                rgb.put_pixel(x, y, image::Rgb([255, 255, 255]));
            }
        }
        let mask = derive_mask(&rgb).unwrap();
        assert!(!mask.get(5, 5));
        assert!(mask.get(100, 100));
    }

    #[test]
    fn all_white_image_has_no_foreground() {
        let rgb = RgbImage::from_pixel(80, 80, image::Rgb([255, 255, 255]));
        assert!(matches!(derive_mask(&rgb), Err(PithError::EmptyForeground)));
    }

    #[test]
    fn background_is_filled_with_mean_foreground() {
        let g = GrayImage::from_fn(64, 64, |x, _| if x < 32 { 0.2 } else { 0.9 });
        let m = MaskImage::from_fn(64, 64, |x, _| x < 32);
        let prep = prepare_gray(&g, &m, 64).unwrap();
        assert!((prep.gray.get(50, 10) - 0.2).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = GrayImage::filled(64, 64, 0.5);
        let m = MaskImage::from_fn(64, 64, |_, _| false);
        assert!(matches!(
            prepare_gray(&g, &m, 64),
            Err(PithError::EmptyForeground)
        ));
        let m = MaskImage::full(32, 64);
        assert!(matches!(
            prepare_gray(&g, &m, 64),
            Err(PithError::MaskMismatch { .. })
        ));
        assert!(prepare_gray(&g, &MaskImage::full(64, 64), 32).is_err());
        assert!(GrayImage::new(2, 2, vec![0.0, 0.5, 1.5, 0.1]).is_err());
    }

    #[test]
    fn unreadable_image_is_reported() {
        let err = load_and_prepare(Path::new("/nonexistent/x.png"), None, 100).unwrap_err();
        assert!(matches!(err, PithError::ImageRead { .. }));
    }

    #[test]
    fn coordinate_mapping_round_trips() {
        let prep = PreparedImage {
            gray: GrayImage::filled(1000, 1000, 0.5),
            mask: MaskImage::full(1000, 1000),
            original_width: 2877,
            original_height: 2736,
        };
        for p in [Point::new(0.0, 0.0), Point::new(512.3, 77.9), Point::new(999.0, 999.0)] {
            let back = prep.to_resized(prep.to_original(p));
            assert!(back.distance(&p) < 1e-9);
        }
        let c = prep.to_original(Point::new(499.5, 499.5));
        assert!((c.x - 1438.0).abs() < 1e-9 && (c.y - 1367.5).abs() < 1e-9);
    }
}
