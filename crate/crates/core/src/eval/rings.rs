//! Ring polygons and ring-region lookup.

use serde::{Deserialize, Serialize};

use crate::error::{PithError, Result};
use crate::geometry::Point;

/// Closed polygon; the last vertex connects back to the first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub points: Vec<Point>,
}

impl Polygon {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        let p = Self { points };
        p.check()?;
        Ok(p)
    }

    /// Regular `n`-gon inscribed in the circle of radius `r` around `c`.
    pub fn circle(c: Point, r: f64, n: usize) -> Self {
        let points = (0..n)
            .map(|i| {
                let t = i as f64 * std::f64::consts::TAU / n as f64;
                Point::new(c.x + r * t.cos(), c.y + r * t.sin())
            })
            .collect();
        Self { points }
    }

    pub fn check(&self) -> Result<()> {
        if self.points.len() < 3 {
            return Err(PithError::MalformedPolygon(format!(
                "{} vertices, need at least 3",
                self.points.len()
            )));
        }
        if self.points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(PithError::MalformedPolygon("non-finite vertex".into()));
        }
        Ok(())
    }

    fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.points.len();
        (0..n).map(move |i| (self.points[i], self.points[(i + 1) % n]))
    }

    /// Even-odd crossing test.
    pub fn contains(&self, p: Point) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    fn bbox(&self) -> (Point, Point) {
        self.points.iter().fold(
            (
                Point::new(f64::INFINITY, f64::INFINITY),
                Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
            ),
            |(lo, hi), p| {
                (
                    Point::new(lo.x.min(p.x), lo.y.min(p.y)),
                    Point::new(hi.x.max(p.x), hi.y.max(p.y)),
                )
            },
        )
    }
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    ((d1 > 0.0) != (d2 > 0.0) || d1 == 0.0 || d2 == 0.0)
        && ((d3 > 0.0) != (d4 > 0.0) || d3 == 0.0 || d4 == 0.0)
        && {
            let (lo_p, hi_p) = (p1.x.min(p2.x), p1.x.max(p2.x));
            let (lo_q, hi_q) = (q1.x.min(q2.x), q1.x.max(q2.x));
            let (lo_py, hi_py) = (p1.y.min(p2.y), p1.y.max(p2.y));
            let (lo_qy, hi_qy) = (q1.y.min(q2.y), q1.y.max(q2.y));
            hi_p >= lo_q && hi_q >= lo_p && hi_py >= lo_qy && hi_qy >= lo_py
        }
}

/// `true` when `inner` lies strictly inside `outer` with no touching edges.
pub fn strictly_inside(inner: &Polygon, outer: &Polygon) -> bool {
    if !inner.points.iter().all(|&p| outer.contains(p)) {
        return false;
    }
    let (ilo, ihi) = inner.bbox();
    for (q1, q2) in outer.edges() {
        // Outer edges away from the inner bounding box cannot cross it.
        if q1.x.max(q2.x) < ilo.x || q1.x.min(q2.x) > ihi.x || q1.y.max(q2.y) < ilo.y || q1.y.min(q2.y) > ihi.y {
            continue;
        }
        if inner.edges().any(|(p1, p2)| segments_intersect(p1, p2, q1, q2)) {
            return false;
        }
    }
    true
}

/// Check that ring `i` is strictly inside ring `i + 1` for every `i`.
pub fn validate_nesting(rings: &[Polygon]) -> Result<()> {
    for r in rings {
        r.check()?;
    }
    for (i, pair) in rings.windows(2).enumerate() {
        if !strictly_inside(&pair[0], &pair[1]) {
            return Err(PithError::InvalidAnnotation(format!(
                "ring {i} is not strictly inside ring {}",
                i + 1
            )));
        }
    }
    Ok(())
}

/// Index of the innermost ring containing `p`; `rings.len()` when outside all.
pub fn ring_index(p: Point, rings: &[Polygon]) -> Result<usize> {
    for r in rings {
        r.check()?;
    }
    Ok(rings.iter().position(|r| r.contains(p)).unwrap_or(rings.len()))
}
