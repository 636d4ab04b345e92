use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::PithError;
use crate::geometry::{normalize_angle, Point};

use super::spectrum::Spectrum;

/// Slope magnitude above which the regression switches to the swapped axes.
pub const STEEP_SLOPE: f64 = 5.0;

/// Dominant-direction estimator applied to the preprocessed spectrum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoMethod {
    /// Line from the center to the strongest bin. Certainty is always 1.
    Peak,
    /// Least-squares line through the center; certainty is |R²|.
    Lsr,
    /// As [`LoMethod::Lsr`] with weights `sqrt(magnitude)`.
    Wlsr,
    /// Principal axis of the magnitude-weighted bins.
    Pca,
}

impl LoMethod {
    pub const ALL: [LoMethod; 4] = [LoMethod::Peak, LoMethod::Lsr, LoMethod::Wlsr, LoMethod::Pca];

    pub fn as_str(&self) -> &'static str {
        match self {
            LoMethod::Peak => "peak",
            LoMethod::Lsr => "lsr",
            LoMethod::Wlsr => "wlsr",
            LoMethod::Pca => "pca",
        }
    }
}

impl fmt::Display for LoMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LoMethod {
    type Err = PithError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "peak" => Ok(LoMethod::Peak),
            "lsr" => Ok(LoMethod::Lsr),
            "wlsr" => Ok(LoMethod::Wlsr),
            "pca" => Ok(LoMethod::Pca),
            other => Err(PithError::InvalidParameter(format!(
                "unknown lo_method '{other}' (expected peak, lsr, wlsr or pca)"
            ))),
        }
    }
}

/// How the PCA eigenvalues become a certainty score.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PcaCertainty {
    /// `(λ1 − λ2) / (λ1 + λ2)`, in `[0, 1]`.
    #[default]
    Normalized,
    /// Raw `λ1 / λ2`. Unbounded (`≥ 1`, infinite for collinear bins), so it is
    /// exempt from the `[0, 1]` certainty range.
    EigenRatio,
}

/// A ring-normal line through a patch center.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrientationEstimate {
    pub center: Point,
    /// Direction of the ring normal, from +x towards +y, in `[0, π)`.
    pub angle: f64,
    pub certainty: f64,
}

struct Bin {
    x: f64,
    y: f64,
    magnitude: f64,
}

/// Surviving bins in frequency units scaled to the patch height, so that
/// angles are correct for non-square patches too.
fn bins(spec: &Spectrum) -> Vec<Bin> {
    let sx = spec.height() as f64 / spec.width() as f64;
    spec.nonzero_bins()
        .map(|(u, v, m)| Bin {
            x: u as f64 * sx,
            y: v as f64,
            magnitude: m,
        })
        .collect()
}

/// Estimate the dominant orientation of a preprocessed spectrum.
pub fn lo_estimate(
    spec: &Spectrum,
    method: LoMethod,
    patch_center: Point,
    pca_certainty: PcaCertainty,
) -> OrientationEstimate {
    let bins = bins(spec);
    let (angle, certainty) = match method {
        LoMethod::Peak => peak(&bins),
        LoMethod::Lsr => regression(&bins, |_| 1.0),
        LoMethod::Wlsr => regression(&bins, |b| b.magnitude.sqrt()),
        LoMethod::Pca => pca(&bins, pca_certainty),
    };
    OrientationEstimate {
        center: patch_center,
        angle: normalize_angle(angle),
        certainty,
    }
}

fn peak(bins: &[Bin]) -> (f64, f64) {
    let key = |b: &Bin| (b.magnitude, b.x.hypot(b.y), normalize_angle(b.y.atan2(b.x)));
    let best = bins.iter().map(key).reduce(|best, k| {
        // Larger magnitude wins; ties go to the lower radius, then the lower angle.
        if k.0 > best.0 || (k.0 == best.0 && (k.1, k.2) < (best.1, best.2)) {
            k
        } else {
            best
        }
    });
    match best {
        Some((_, _, angle)) => (angle, 1.0),
        None => (0.0, 0.0),
    }
}

struct Moments {
    xx: f64,
    yy: f64,
    xy: f64,
}

/// Weighted second moments about the spectrum center.
fn moments(bins: &[Bin], weight: impl Fn(&Bin) -> f64) -> Moments {
    bins.iter().fold(
        Moments {
            xx: 0.0,
            yy: 0.0,
            xy: 0.0,
        },
        |m, b| {
            let w = weight(b);
            Moments {
                xx: m.xx + w * b.x * b.x,
                yy: m.yy + w * b.y * b.y,
                xy: m.xy + w * b.x * b.y,
            }
        },
    )
}

/// Least-squares line through the center. Steep spreads regress `x` on `y`.
/// Returns `(angle, |R²|)`, with R² measured about the center along the
/// response axis.
fn regression(bins: &[Bin], weight: impl Fn(&Bin) -> f64) -> (f64, f64) {
    if bins.len() < 2 {
        return (0.0, 0.0);
    }
    let m = moments(bins, weight);
    let steep = m.xx <= 0.0 || (m.xy / m.xx).abs() > STEEP_SLOPE;
    let (angle, ss_tot, ss_res) = if steep {
        let slope = m.xy / m.yy;
        (FRAC_PI_2 - slope.atan(), m.xx, m.xx - m.xy * slope)
    } else {
        let slope = m.xy / m.xx;
        (slope.atan(), m.yy, m.yy - m.xy * slope)
    };
    let r2 = if ss_tot <= 0.0 {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    (angle, r2.abs())
}

fn pca(bins: &[Bin], mode: PcaCertainty) -> (f64, f64) {
    if bins.len() < 2 {
        return (0.0, 0.0);
    }
    let m = moments(bins, |b| b.magnitude);
    let trace = m.xx + m.yy;
    if trace <= 0.0 {
        return (0.0, 0.0);
    }
    let gap = ((m.xx - m.yy).powi(2) + 4.0 * m.xy * m.xy).sqrt();
    let angle = 0.5 * (2.0 * m.xy).atan2(m.xx - m.yy);
    let certainty = match mode {
        PcaCertainty::Normalized => (gap / trace).clamp(0.0, 1.0),
        PcaCertainty::EigenRatio => {
            let (l1, l2) = ((trace + gap) / 2.0, (trace - gap) / 2.0);
            if l2 <= l1 * f64::EPSILON {
                f64::INFINITY
            } else {
                l1 / l2
            }
        }
    };
    (angle, certainty)
}
