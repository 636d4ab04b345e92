use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{PithError, Result};
use crate::patchgrid::Patch;

/// Smallest patch side accepted by the spectrum stage.
pub const MIN_PATCH_SIDE: usize = 8;

/// DC-centered magnitude spectrum. Bin `(col, row)` sits at frequency offset
/// `(col - width/2, row - height/2)` from the center bin.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    width: usize,
    height: usize,
    magnitude: Vec<f64>,
}

impl Spectrum {
    pub fn new(width: usize, height: usize, magnitude: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || magnitude.len() != width * height {
            return Err(PithError::InvalidParameter(
                "spectrum buffer does not match its dimensions".into(),
            ));
        }
        if magnitude.iter().any(|m| !(*m >= 0.0)) {
            return Err(PithError::InvalidParameter(
                "spectrum magnitudes must be nonnegative".into(),
            ));
        }
        Ok(Self {
            width,
            height,
            magnitude,
        })
    }

    /// All-zero spectrum with a few bins set, addressed by center offsets.
    pub fn from_bins(width: usize, height: usize, bins: &[((i64, i64), f64)]) -> Result<Self> {
        let mut s = Self::new(width, height, vec![0.0; width * height])?;
        for &((u, v), m) in bins {
            let idx = s.index(u, v).ok_or_else(|| {
                PithError::InvalidParameter(format!("bin ({u}, {v}) outside spectrum"))
            })?;
            s.magnitude[idx] = m;
        }
        Ok(s)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn magnitude(&self) -> &[f64] {
        &self.magnitude
    }

    pub fn center(&self) -> (usize, usize) {
        (self.width / 2, self.height / 2)
    }

    fn index(&self, u: i64, v: i64) -> Option<usize> {
        let (cx, cy) = self.center();
        let col = cx as i64 + u;
        let row = cy as i64 + v;
        (col >= 0 && row >= 0 && (col as usize) < self.width && (row as usize) < self.height)
            .then(|| row as usize * self.width + col as usize)
    }

    /// Magnitude at center offset `(u, v)`; zero outside the spectrum.
    pub fn at(&self, u: i64, v: i64) -> f64 {
        self.index(u, v).map_or(0.0, |i| self.magnitude[i])
    }

    pub fn max(&self) -> f64 {
        self.magnitude.iter().copied().fold(0.0, f64::max)
    }

    /// Nonzero bins as `(u, v, magnitude)`.
    pub fn nonzero_bins(&self) -> impl Iterator<Item = (i64, i64, f64)> + '_ {
        let (cx, cy) = self.center();
        self.magnitude
            .iter()
            .enumerate()
            .filter(|(_, m)| **m > 0.0)
            .map(move |(i, &m)| {
                let (col, row) = (i % self.width, i / self.width);
                (col as i64 - cx as i64, row as i64 - cy as i64, m)
            })
    }

    /// Keep only bins with `v > 0`, or `v == 0 && u > 0`.
    pub fn half_plane(&self) -> Spectrum {
        let (cx, cy) = self.center();
        let magnitude = self
            .magnitude
            .iter()
            .enumerate()
            .map(|(i, &m)| {
                let u = (i % self.width) as i64 - cx as i64;
                let v = (i / self.width) as i64 - cy as i64;
                if v > 0 || (v == 0 && u > 0) {
                    m
                } else {
                    0.0
                }
            })
            .collect();
        Spectrum {
            width: self.width,
            height: self.height,
            magnitude,
        }
    }
}

/// Cached FFT plans for one patch shape.
#[derive(Clone)]
pub struct SpectrumPlanner {
    width: usize,
    height: usize,
    row_fft: Arc<dyn Fft<f64>>,
    col_fft: Arc<dyn Fft<f64>>,
}

impl SpectrumPlanner {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width < MIN_PATCH_SIDE || height < MIN_PATCH_SIDE {
            return Err(PithError::InvalidParameter(format!(
                "patch {width}x{height} is smaller than {MIN_PATCH_SIDE}x{MIN_PATCH_SIDE}"
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            width,
            height,
            row_fft: planner.plan_fft_forward(width),
            col_fft: planner.plan_fft_forward(height),
        })
    }

    /// Magnitude spectrum of the mean-subtracted patch, DC moved to the center.
    pub fn compute(&self, patch: &Patch) -> Result<Spectrum> {
        let (w, h) = (self.width, self.height);
        if (patch.width(), patch.height()) != (w, h) {
            return Err(PithError::InvalidParameter(format!(
                "planner built for {w}x{h}, patch is {}x{}",
                patch.width(),
                patch.height()
            )));
        }
        let pixels = patch.pixels.data();
        let mean = pixels.iter().map(|&v| v as f64).sum::<f64>() / (w * h) as f64;
        let mut rows: Vec<Complex<f64>> = pixels
            .iter()
            .map(|&v| Complex::new(v as f64 - mean, 0.0))
            .collect();
        self.row_fft.process(&mut rows);

        let mut cols = vec![Complex::new(0.0, 0.0); w * h];
        for r in 0..h {
            for c in 0..w {
                cols[c * h + r] = rows[r * w + c];
            }
        }
        self.col_fft.process(&mut cols);

        let mut magnitude = vec![0.0; w * h];
        for row in 0..h {
            let ky = (row + h - h / 2) % h;
            for col in 0..w {
                let kx = (col + w - w / 2) % w;
                magnitude[row * w + col] = cols[kx * h + ky].norm();
            }
        }
        Spectrum::new(w, h, magnitude)
    }
}

pub fn compute_fourier_spectrum(patch: &Patch) -> Result<Spectrum> {
    SpectrumPlanner::new(patch.width(), patch.height())?.compute(patch)
}

/// In-band maxima at or below this fraction of `W·H` count as an empty
/// spectrum. Gray levels are `f32` in `[0, 1]`, so the rounding noise of a
/// pure out-of-band signal sits a few orders of magnitude below it, while
/// one 8-bit gray step of real structure sits far above.
const EMPTY_BAND_FLOOR: f64 = 1e-6;

/// Radial pass band `[H/64, H/3]` in frequency bins for a patch of height `H`.
pub fn passband(height: usize) -> (f64, f64) {
    (height as f64 / 64.0, height as f64 / 3.0)
}

/// Band-pass the spectrum to the annulus [`passband`], then zero bins below
/// `fft_peak_th` times the largest remaining magnitude.
pub fn preprocess_fourier_spectrum(spec: &Spectrum, fft_peak_th: f64) -> Result<Spectrum> {
    if !(0.0..=1.0).contains(&fft_peak_th) {
        return Err(PithError::InvalidParameter(format!(
            "fft_peak_th must lie in [0, 1], got {fft_peak_th}"
        )));
    }
    let (low, high) = passband(spec.height);
    let (cx, cy) = spec.center();
    let mut magnitude: Vec<f64> = spec
        .magnitude
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let u = (i % spec.width) as f64 - cx as f64;
            let v = (i / spec.width) as f64 - cy as f64;
            let r = u.hypot(v);
            if r >= low && r <= high {
                m
            } else {
                0.0
            }
        })
        .collect();
    let max = magnitude.iter().copied().fold(0.0, f64::max);
    if max <= EMPTY_BAND_FLOOR * (spec.width * spec.height) as f64 {
        return Err(PithError::EmptySpectrum);
    }
    let cut = fft_peak_th * max;
    for m in magnitude.iter_mut() {
        if *m < cut {
            *m = 0.0;
        }
    }
    Ok(Spectrum {
        width: spec.width,
        height: spec.height,
        magnitude,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{angle_diff, Point};
    use crate::imageprep::GrayImage;
    use std::f64::consts::PI;

    fn patch_from(img: GrayImage) -> Patch {
        Patch {
            center: Point::new(0.0, 0.0),
            foreground_fraction: 1.0,
            pixels: img,
        }
    }

    fn argmax(spec: &Spectrum) -> (i64, i64) {
        let (u, v, _) = spec
            .nonzero_bins()
            .fold((0, 0, -1.0), |best, b| if b.2 > best.2 { b } else { best });
        (u, v)
    }

    #[test]
    fn constant_patch_has_zero_spectrum() {
        let s = compute_fourier_spectrum(&patch_from(GrayImage::filled(32, 32, 0.4))).unwrap();
        assert!(s.magnitude().iter().all(|&m| m < 1e-9));
        assert!(matches!(
            preprocess_fourier_spectrum(&s, 0.5),
            Err(PithError::EmptySpectrum)
        ));
    }

    #[test]
    fn horizontal_sinusoid_peaks_at_its_frequency() {
        let n = 64;
        let k = 10.0;
        let img = GrayImage::from_fn(n, n, |x, _| {
            (0.5 + 0.4 * (2.0 * PI * k * x as f64 / n as f64).cos()) as f32
        });
        let s = compute_fourier_spectrum(&patch_from(img)).unwrap();
        let max = s.max();
        assert!((s.at(10, 0) - max).abs() < 1e-9 * max);
        assert!((s.at(-10, 0) - max).abs() < 1e-9 * max);
        let others = s
            .nonzero_bins()
            .filter(|&(u, v, _)| !(v == 0 && u.abs() == 10))
            .map(|b| b.2)
            .fold(0.0, f64::max);
        assert!(others < 1e-6 * max);
    }

    #[test]
    fn diagonal_stripes_concentrate_on_the_diagonal() {
        let n = 64;
        // 8 cycles along (1,1)/√2 over the patch diagonal spacing.
        let img = GrayImage::from_fn(n, n, |x, y| {
            (0.5 + 0.4 * (2.0 * PI * 8.0 * (x + y) as f64 / n as f64).cos()) as f32
        });
        let s = compute_fourier_spectrum(&patch_from(img)).unwrap();
        let (u, v) = argmax(&s);
        let angle = (v as f64).atan2(u as f64);
        // Within one bin of the 45° line.
        assert!(angle_diff(angle, PI / 4.0) <= (1.0 / (u as f64).hypot(v as f64)).atan());
    }

    #[test]
    fn spectrum_is_center_symmetric_for_real_input() {
        let img = GrayImage::from_fn(33, 40, |x, y| ((x * 13 + y * 7) % 17) as f32 / 17.0);
        let s = compute_fourier_spectrum(&patch_from(img)).unwrap();
        for (u, v, m) in s.nonzero_bins() {
            if s.index(-u, -v).is_some() {
                assert!((s.at(-u, -v) - m).abs() < 1e-9 * (1.0 + m));
            }
        }
    }

    #[test]
    fn passband_for_height_100() {
        let (lo, hi) = passband(100);
        assert_eq!(lo, 1.5625);
        assert!((hi - 100.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn band_pass_keeps_the_annulus_only() {
        let s = Spectrum::new(100, 100, vec![1.0; 100 * 100]).unwrap();
        let p = preprocess_fourier_spectrum(&s, 0.0).unwrap();
        assert_eq!(p.at(0, 0), 0.0);
        assert_eq!(p.at(1, 0), 0.0);
        assert_eq!(p.at(1, 1), 0.0);
        assert_eq!(p.at(2, 0), 1.0);
        assert_eq!(p.at(33, 0), 1.0);
        assert_eq!(p.at(34, 0), 0.0);
        assert_eq!(p.at(24, 23), 1.0); // r ≈ 33.24
        assert_eq!(p.at(24, 24), 0.0); // r ≈ 33.94
    }

    #[test]
    fn magnitude_threshold_is_relative_to_passband_max() {
        let s = Spectrum::from_bins(
            100,
            100,
            &[((10, 0), 10.0), ((20, 0), 7.0), ((5, 0), 3.0), ((0, 0), 50.0)],
        )
        .unwrap();
        let p = preprocess_fourier_spectrum(&s, 0.8).unwrap();
        let bins: Vec<_> = p.nonzero_bins().collect();
        assert_eq!(bins, vec![(10, 0, 10.0)]);
    }

    #[test]
    fn unit_threshold_keeps_global_maxima() {
        let s = Spectrum::from_bins(
            64,
            64,
            &[((4, 3), 9.0), ((-4, -3), 9.0), ((6, 0), 8.999)],
        )
        .unwrap();
        let p = preprocess_fourier_spectrum(&s, 1.0).unwrap();
        assert_eq!(p.nonzero_bins().count(), 2);
        assert!(preprocess_fourier_spectrum(&s, 1.5).is_err());
    }

    #[test]
    fn small_patches_are_rejected() {
        assert!(SpectrumPlanner::new(7, 32).is_err());
        assert!(SpectrumPlanner::new(8, 8).is_ok());
    }
}
