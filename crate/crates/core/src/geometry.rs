use serde::{Deserialize, Serialize};

/// A point in pixel coordinates. Integer values address pixel centers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Self { x, y }
    }
}

/// Round half up, i.e. `floor(v + 0.5)`.
#[inline]
pub fn round_half_up(v: f64) -> i64 {
    (v + 0.5).floor() as i64
}

/// Normalize an undirected angle to `[0, π)`.
#[inline]
pub fn normalize_angle(theta: f64) -> f64 {
    let a = theta.rem_euclid(std::f64::consts::PI);
    if a >= std::f64::consts::PI {
        0.0
    } else {
        a
    }
}

/// Smallest difference between two undirected angles, in `[0, π/2]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(std::f64::consts::PI);
    d.min(std::f64::consts::PI - d)
}
