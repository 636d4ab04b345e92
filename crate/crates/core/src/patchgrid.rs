//! Regular (optionally overlapping) patch grid over the masked image.

use crate::error::{PithError, Result};
use crate::geometry::{round_half_up, Point};
use crate::imageprep::{GrayImage, MaskImage};

/// Patches with a smaller share of foreground pixels are dropped.
pub const RETENTION_THRESHOLD: f64 = 0.7;

/// Square-ish sub-image with its footprint center in image coordinates.
#[derive(Clone, Debug)]
pub struct Patch {
    pub pixels: GrayImage,
    pub center: Point,
    pub foreground_fraction: f64,
}

impl Patch {
    pub fn width(&self) -> usize {
        self.pixels.width()
    }

    pub fn height(&self) -> usize {
        self.pixels.height()
    }
}

/// Step between consecutive patch origins along one axis.
pub fn stride(block_size: usize, block_overlap: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&block_overlap) {
        return Err(PithError::InvalidParameter(format!(
            "block_overlap must lie in [0, 1), got {block_overlap}"
        )));
    }
    let s = round_half_up(block_size as f64 * (1.0 - block_overlap));
    if s <= 0 {
        return Err(PithError::InvalidParameter(format!(
            "stride rounds to 0 for block {block_size} and overlap {block_overlap}"
        )));
    }
    Ok(s as usize)
}

/// Patch origins along one axis; partial blocks at the far edge are discarded.
pub fn axis_origins(len: usize, block_size: usize, stride: usize) -> impl Iterator<Item = usize> {
    (0..)
        .map(move |i| i * stride)
        .take_while(move |&o| o + block_size <= len)
}

/// Number of grid cells before mask filtering.
pub fn candidate_count(
    width: usize,
    height: usize,
    block_overlap: f64,
    block_width_size: usize,
    block_height_size: usize,
) -> Result<usize> {
    check_block(width, height, block_width_size, block_height_size)?;
    let sx = stride(block_width_size, block_overlap)?;
    let sy = stride(block_height_size, block_overlap)?;
    Ok(axis_origins(width, block_width_size, sx).count()
        * axis_origins(height, block_height_size, sy).count())
}

fn check_block(width: usize, height: usize, bw: usize, bh: usize) -> Result<()> {
    if bw == 0 || bh == 0 {
        return Err(PithError::InvalidParameter("block sizes must be positive".into()));
    }
    if bw > width || bh > height {
        return Err(PithError::InvalidParameter(format!(
            "block {bw}x{bh} exceeds image {width}x{height}"
        )));
    }
    Ok(())
}

/// Split `img` into blocks anchored at the image origin, keeping blocks whose
/// foreground fraction reaches [`RETENTION_THRESHOLD`]. Patches are returned in
/// row-major grid order.
pub fn split_image_in_blocks(
    img: &GrayImage,
    mask: &MaskImage,
    block_overlap: f64,
    block_width_size: usize,
    block_height_size: usize,
) -> Result<Vec<Patch>> {
    let (w, h) = (img.width(), img.height());
    if (mask.width(), mask.height()) != (w, h) {
        return Err(PithError::MaskMismatch {
            image_width: w as u32,
            image_height: h as u32,
            mask_width: mask.width() as u32,
            mask_height: mask.height() as u32,
        });
    }
    check_block(w, h, block_width_size, block_height_size)?;
    let sx = stride(block_width_size, block_overlap)?;
    let sy = stride(block_height_size, block_overlap)?;
    let area = (block_width_size * block_height_size) as f64;

    let mut patches = Vec::new();
    for y0 in axis_origins(h, block_height_size, sy) {
        for x0 in axis_origins(w, block_width_size, sx) {
            let fg = (y0..y0 + block_height_size)
                .map(|y| {
                    (x0..x0 + block_width_size)
                        .filter(|&x| mask.get(x, y))
                        .count()
                })
                .sum::<usize>();
            let foreground_fraction = fg as f64 / area;
            if foreground_fraction < RETENTION_THRESHOLD {
                continue;
            }
            patches.push(Patch {
                pixels: img.crop(x0, y0, block_width_size, block_height_size),
                center: Point::new(
                    x0 as f64 + (block_width_size as f64 - 1.0) / 2.0,
                    y0 as f64 + (block_height_size as f64 - 1.0) / 2.0,
                ),
                foreground_fraction,
            });
        }
    }
    Ok(patches)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn blank(n: usize) -> (GrayImage, MaskImage) {
        (GrayImage::filled(n, n, 0.5), MaskImage::full(n, n))
    }

    #[test]
    fn non_overlapping_grid_count() {
        let (g, m) = blank(1000);
        assert_eq!(split_image_in_blocks(&g, &m, 0.0, 100, 100).unwrap().len(), 100);
    }

    #[test]
    fn overlapping_grid_count() {
        assert_eq!(stride(100, 0.2).unwrap(), 80);
        let (g, m) = blank(1000);
        assert_eq!(split_image_in_blocks(&g, &m, 0.2, 100, 100).unwrap().len(), 144);
        assert_eq!(candidate_count(1000, 1000, 0.2, 100, 100).unwrap(), 144);
    }

    #[test]
    fn stride_rounds_half_up() {
        // 25 * 0.5 = 12.5 -> 13
        assert_eq!(stride(25, 0.5).unwrap(), 13);
        assert_eq!(stride(30, 0.5).unwrap(), 15);
        assert!(stride(1, 0.9).is_err());
        assert!(stride(10, 1.0).is_err());
        assert!(stride(10, -0.1).is_err());
    }

    #[test]
    fn background_mask_yields_no_patches() {
        let g = GrayImage::filled(200, 200, 0.5);
        let m = MaskImage::from_fn(200, 200, |_, _| false);
        assert!(split_image_in_blocks(&g, &m, 0.0, 50, 50).unwrap().is_empty());
    }

    #[test]
    fn retention_threshold_filters_edge_patches() {
        let g = GrayImage::filled(100, 100, 0.5);
        // Left 35 columns are foreground: the first 50-wide block holds 70%.
        let m = MaskImage::from_fn(100, 100, |x, _| x < 35);
        let p = split_image_in_blocks(&g, &m, 0.0, 50, 50).unwrap();
        assert_eq!(p.len(), 2);
        assert!(p.iter().all(|p| (p.foreground_fraction - 0.7).abs() < 1e-12));
        let m = MaskImage::from_fn(100, 100, |x, _| x < 34);
        assert!(split_image_in_blocks(&g, &m, 0.0, 50, 50).unwrap().is_empty());
    }

    #[test]
    fn patch_centers_and_pixels() {
        let g = GrayImage::from_fn(40, 30, |x, y| (x + 40 * y) as f32 / 1200.0);
        let m = MaskImage::full(40, 30);
        let p = split_image_in_blocks(&g, &m, 0.0, 10, 10).unwrap();
        assert_eq!(p.len(), 12);
        assert_eq!(p[0].center, Point::new(4.5, 4.5));
        assert_eq!(p[5].center, Point::new(14.5, 14.5));
        assert_eq!(p[5].pixels.get(0, 0), g.get(10, 10));
    }

    #[test]
    fn oversized_block_is_rejected() {
        let (g, m) = blank(64);
        assert!(split_image_in_blocks(&g, &m, 0.0, 65, 10).is_err());
    }

    proptest! {
        #[test]
        fn zero_overlap_tiles_without_double_coverage(
            w in 16usize..120, h in 16usize..120, bw in 4usize..16, bh in 4usize..16,
        ) {
            let g = GrayImage::filled(w, h, 0.3);
            let m = MaskImage::full(w, h);
            let patches = split_image_in_blocks(&g, &m, 0.0, bw, bh).unwrap();
            let mut cover = vec![0u8; w * h];
            for p in &patches {
                let x0 = (p.center.x - (bw as f64 - 1.0) / 2.0) as usize;
                let y0 = (p.center.y - (bh as f64 - 1.0) / 2.0) as usize;
                for y in y0..y0 + bh {
                    for x in x0..x0 + bw {
                        cover[y * w + x] += 1;
                    }
                }
            }
            for y in 0..h {
                for x in 0..w {
                    let inside = x < (w / bw) * bw && y < (h / bh) * bh;
                    prop_assert_eq!(cover[y * w + x], inside as u8);
                }
            }
        }

        #[test]
        fn retained_patches_meet_threshold(seed in 0u64..1000, overlap in 0.0f64..0.9) {
            let m = MaskImage::from_fn(90, 90, |x, y| (x * 31 + y * 17 + seed as usize) % 7 != 0 && x + y > 40);
            let g = GrayImage::filled(90, 90, 0.5);
            for p in split_image_in_blocks(&g, &m, overlap, 12, 12).unwrap() {
                prop_assert!(p.foreground_fraction >= RETENTION_THRESHOLD);
                prop_assert!(p.foreground_fraction <= 1.0);
            }
        }
    }
}
