//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use pith_core::imageprep::{prepare_gray, MaskImage, PreparedImage};
use pith_core::synth::SpiderWeb;
use pith_core::Point;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A line given by a point and a direction angle, kept in that form so the
/// oracles never touch the implicit `a·x + b·y + c` representation.
#[derive(Clone, Copy, Debug)]
pub struct PointAngle {
    pub p: Point,
    pub theta: f64,
}

impl PointAngle {
    pub fn dir(&self) -> (f64, f64) {
        (self.theta.cos(), self.theta.sin())
    }

    /// Perpendicular distance via the 2-D cross product.
    pub fn distance(&self, q: Point) -> f64 {
        let (dx, dy) = self.dir();
        ((q.x - self.p.x) * dy - (q.y - self.p.y) * dx).abs()
    }
}

pub fn random_lines(rng: &mut ChaCha8Rng, n: usize, w: f64, h: f64) -> Vec<PointAngle> {
    (0..n)
        .map(|_| PointAngle {
            p: Point::new(rng.random_range(-0.5..w - 0.5), rng.random_range(-0.5..h - 0.5)),
            theta: rng.random_range(0.0..std::f64::consts::PI),
        })
        .collect()
}

/// Solve `p1 + t·d1 = p2 + s·d2` for every pair and vote at the nearest
/// pixel, halves rounded up.
pub fn brute_intersections(lines: &[PointAngle], w: usize, h: usize) -> Vec<u32> {
    let mut votes = vec![0; w * h];
    for i in 0..lines.len() {
        for j in i + 1..lines.len() {
            let (d1, d2) = (lines[i].dir(), lines[j].dir());
            let denom = d1.0 * d2.1 - d1.1 * d2.0;
            if denom.abs() < 1e-12 {
                continue;
            }
            let (rx, ry) = (lines[j].p.x - lines[i].p.x, lines[j].p.y - lines[i].p.y);
            let t = (rx * d2.1 - ry * d2.0) / denom;
            let (x, y) = (lines[i].p.x + t * d1.0, lines[i].p.y + t * d1.1);
            let (cx, cy) = ((x + 0.5).floor(), (y + 0.5).floor());
            if cx >= 0.0 && cy >= 0.0 && cx < w as f64 && cy < h as f64 {
                votes[cy as usize * w + cx as usize] += 1;
            }
        }
    }
    votes
}

/// One vote per line for every pixel center within half a pixel of it.
pub fn distance_band(lines: &[PointAngle], w: usize, h: usize) -> Vec<u32> {
    let mut votes = vec![0; w * h];
    for y in 0..h {
        for x in 0..w {
            let q = Point::new(x as f64, y as f64);
            votes[y * w + x] = lines.iter().filter(|l| l.distance(q) <= 0.5).count() as u32;
        }
    }
    votes
}

/// Longest chord through `gt` over `rays` evenly spaced directions, each
/// half walked outwards in 0.1 px steps.
pub fn brute_diameter(mask: &MaskImage, gt: Point, rays: usize) -> f64 {
    let reach = |dx: f64, dy: f64| {
        let mut t = 0.0;
        while mask.contains(Point::new(gt.x + (t + 0.1) * dx, gt.y + (t + 0.1) * dy)) {
            t += 0.1;
        }
        t
    };
    (0..rays)
        .map(|k| {
            let a = k as f64 * std::f64::consts::PI / rays as f64;
            let (dy, dx) = a.sin_cos();
            reach(dx, dy) + reach(-dx, -dy)
        })
        .fold(0.0, f64::max)
}

/// Seed-varied spider-web used for the end-to-end checks: center within
/// 100 px of the middle, ring spacing 6 to 10 px, noise σ = 0.05.
pub fn web_for_seed(seed: u64) -> SpiderWeb {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let center = Point::new(rng.random_range(400.0..600.0), rng.random_range(400.0..600.0));
    let spacing = rng.random_range(6.0..10.0);
    SpiderWeb {
        center,
        noise_sigma: 0.05,
        seed,
        ..SpiderWeb::new(1000, spacing)
    }
}

pub fn prepared(web: &SpiderWeb) -> PreparedImage {
    prepare_gray(&web.image(), &web.mask(), web.size as u32).unwrap()
}

/// Direction from `center` to `p`, folded into `[0, π)`.
pub fn radial(center: Point, p: Point) -> f64 {
    (p.y - center.y).atan2(p.x - center.x).rem_euclid(std::f64::consts::PI)
}

/// Smallest angle between two undirected directions, in degrees.
pub fn undirected_error_deg(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(std::f64::consts::PI);
    d.min(std::f64::consts::PI - d).to_degrees()
}
