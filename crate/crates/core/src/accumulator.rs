//! Hough-style voting of ring-normal lines into an image-sized matrix.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PithError, Result};
use crate::geometry::{round_half_up, Point};
use crate::orientation::OrientationEstimate;

/// Pairs whose normals have a cross product below this are treated as parallel.
const PARALLEL_EPS: f64 = 1e-12;

/// Lines per worker shard in the parallel accumulators.
const SHARD: usize = 64;

/// `a·x + b·y + c = 0` with `a² + b² = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Line {
    /// Normalized line from raw coefficients.
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        let n = a.hypot(b);
        if !(n > 0.0) || !c.is_finite() {
            return Err(PithError::InvalidParameter(
                "line normal must be nonzero and finite".into(),
            ));
        }
        Ok(Self {
            a: a / n,
            b: b / n,
            c: c / n,
        })
    }

    /// Line through `p` with direction angle `theta`.
    pub fn through(p: Point, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        // Normal is the direction rotated by 90°.
        let (a, b) = (-s, c);
        Self {
            a,
            b,
            c: -(a * p.x + b * p.y),
        }
    }

    /// Signed distance of `p` to the line.
    pub fn signed_distance(&self, p: Point) -> f64 {
        self.a * p.x + self.b * p.y + self.c
    }

    pub fn intersection(&self, other: &Line) -> Option<Point> {
        let det = self.a * other.b - other.a * self.b;
        if det.abs() < PARALLEL_EPS {
            return None;
        }
        Some(Point::new(
            (self.b * other.c - other.b * self.c) / det,
            (other.a * self.c - self.a * other.c) / det,
        ))
    }

    /// Segment of the line inside the pixel rectangle `[-0.5, w-0.5] × [-0.5, h-0.5]`.
    pub fn clip(&self, width: usize, height: usize) -> Option<(Point, Point)> {
        let origin = Point::new(-self.a * self.c, -self.b * self.c);
        let dir = (-self.b, self.a);
        let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
        for (p, d, lo, hi) in [
            (origin.x, dir.0, -0.5, width as f64 - 0.5),
            (origin.y, dir.1, -0.5, height as f64 - 0.5),
        ] {
            if d.abs() < 1e-15 {
                if p < lo || p > hi {
                    return None;
                }
                continue;
            }
            let (ta, tb) = ((lo - p) / d, (hi - p) / d);
            t0 = t0.max(ta.min(tb));
            t1 = t1.min(ta.max(tb));
        }
        (t0 <= t1).then(|| {
            (
                Point::new(origin.x + t0 * dir.0, origin.y + t0 * dir.1),
                Point::new(origin.x + t1 * dir.0, origin.y + t1 * dir.1),
            )
        })
    }

    /// Pixels covered by the clipped line: one pixel per step along the major
    /// axis, minor coordinate rounded half up. The result is 8-connected.
    pub fn raster(&self, width: usize, height: usize) -> Vec<(usize, usize)> {
        let Some((p0, p1)) = self.clip(width, height) else {
            return Vec::new();
        };
        let x_major = self.b.abs() >= self.a.abs();
        let (lo, hi, major_len, minor_len) = if x_major {
            (p0.x.min(p1.x), p0.x.max(p1.x), width, height)
        } else {
            (p0.y.min(p1.y), p0.y.max(p1.y), height, width)
        };
        let first = lo.ceil().max(0.0) as i64;
        let last = (hi.floor() as i64).min(major_len as i64 - 1);
        let mut out = Vec::with_capacity((last - first + 1).max(0) as usize);
        for i in first..=last {
            let minor = if x_major {
                -(self.a * i as f64 + self.c) / self.b
            } else {
                -(self.b * i as f64 + self.c) / self.a
            };
            let j = round_half_up(minor);
            if j < 0 || j >= minor_len as i64 {
                continue;
            }
            out.push(if x_major {
                (i as usize, j as usize)
            } else {
                (j as usize, i as usize)
            });
        }
        out
    }
}

pub fn to_line(est: &OrientationEstimate) -> Line {
    Line::through(est.center, est.angle)
}

/// Vote matrix with the dimensions of the resized image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AccumulatorSpace {
    width: usize,
    height: usize,
    votes: Vec<u32>,
}

impl AccumulatorSpace {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            votes: vec![0; width * height],
        }
    }

    pub fn from_votes(width: usize, height: usize, votes: Vec<u32>) -> Result<Self> {
        if width == 0 || height == 0 || votes.len() != width * height {
            return Err(PithError::InvalidParameter(
                "vote buffer does not match its dimensions".into(),
            ));
        }
        Ok(Self {
            width,
            height,
            votes,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn votes(&self) -> &[u32] {
        &self.votes
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.votes[y * self.width + x]
    }

    #[inline]
    pub fn increment(&mut self, x: usize, y: usize) {
        self.votes[y * self.width + x] += 1;
    }

    pub fn total(&self) -> u64 {
        self.votes.iter().map(|&v| v as u64).sum()
    }

    pub fn max(&self) -> u32 {
        self.votes.iter().copied().max().unwrap_or(0)
    }

    fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.votes.iter_mut().zip(other.votes) {
            *a += b;
        }
        self
    }
}

/// Accumulation strategy.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccType {
    /// `acc_type = 0`: each pixel a line passes through gets one vote.
    #[default]
    PassThrough,
    /// `acc_type = 1`: each pairwise intersection pixel gets one vote.
    Intersection,
}

impl AccType {
    pub fn from_code(code: i64) -> Result<Self> {
        match code {
            0 => Ok(AccType::PassThrough),
            1 => Ok(AccType::Intersection),
            other => Err(PithError::InvalidParameter(format!(
                "acc_type must be 0 or 1, got {other}"
            ))),
        }
    }

    pub fn code(&self) -> u8 {
        match self {
            AccType::PassThrough => 0,
            AccType::Intersection => 1,
        }
    }
}

impl fmt::Display for AccType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

/// Every unordered pair of non-parallel lines votes once at its rounded
/// intersection pixel, if that pixel is in bounds.
pub fn lines_intersection_accumulation(lines: &[Line], width: usize, height: usize) -> AccumulatorSpace {
    let n = lines.len();
    (0..n)
        .into_par_iter()
        .fold(
            || AccumulatorSpace::zeros(width, height),
            |mut acc, i| {
                for j in i + 1..n {
                    if let Some(p) = lines[i].intersection(&lines[j]) {
                        let (x, y) = (round_half_up(p.x), round_half_up(p.y));
                        if x >= 0 && y >= 0 && (x as usize) < width && (y as usize) < height {
                            acc.increment(x as usize, y as usize);
                        }
                    }
                }
                acc
            },
        )
        .reduce(|| AccumulatorSpace::zeros(width, height), AccumulatorSpace::merge)
}

/// Each line adds one vote to every pixel of its clipped raster.
pub fn lines_pass_through_accumulation(lines: &[Line], width: usize, height: usize) -> AccumulatorSpace {
    lines
        .par_chunks(SHARD)
        .map(|chunk| {
            let mut acc = AccumulatorSpace::zeros(width, height);
            for line in chunk {
                for (x, y) in line.raster(width, height) {
                    acc.increment(x, y);
                }
            }
            acc
        })
        .reduce(|| AccumulatorSpace::zeros(width, height), AccumulatorSpace::merge)
}

pub fn accumulation_space(lines: &[Line], acc_type: AccType, width: usize, height: usize) -> AccumulatorSpace {
    match acc_type {
        AccType::Intersection => lines_intersection_accumulation(lines, width, height),
        AccType::PassThrough => lines_pass_through_accumulation(lines, width, height),
    }
}
