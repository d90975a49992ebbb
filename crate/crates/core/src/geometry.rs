//! Planar positions, distances, bearings and angular sector classification.

use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum GeometryError {
    #[error("bearing is undefined for coincident points")]
    CoincidentPoints,
    #[error("angle {0} is outside [0, 2π)")]
    AngleOutOfRange(f64),
    #[error("sector count must be at least 1")]
    ZeroSectors,
}

/// A point on the simulation plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: &Position) -> f64 {
        distance(*self, *other)
    }

    /// Point reached by travelling `len` meters from `self` along `theta`.
    pub fn offset_polar(&self, len: f64, theta: f64) -> Position {
        Position::new(self.x + len * theta.cos(), self.y + len * theta.sin())
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.3}, {:.3})", self.x, self.y)
    }
}

/// 1-based index of an angular sector around the base station.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AreaId(pub u32);

impl AreaId {
    pub fn index(self) -> u32 {
        self.0
    }
}

impl fmt::Display for AreaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Euclidean distance between two points.
pub fn distance(a: Position, b: Position) -> f64 {
    (b.x - a.x).hypot(b.y - a.y)
}

/// Angle of `p` as seen from `origin`, measured counter-clockwise from the
/// positive x-axis and normalized to `[0, 2π)`.
pub fn bearing(origin: Position, p: Position) -> Result<f64, GeometryError> {
    let dx = p.x - origin.x;
    let dy = p.y - origin.y;
    if dx == 0.0 && dy == 0.0 {
        return Err(GeometryError::CoincidentPoints);
    }
    let mut theta = dy.atan2(dx);
    if theta < 0.0 {
        theta += TAU;
    }
    // -tiny + 2π rounds to exactly 2π
    if theta >= TAU {
        theta = 0.0;
    }
    Ok(theta)
}

/// Sector containing `theta` when the full turn is split into `k` equal
/// half-open wedges `[2π(i-1)/k, 2πi/k)`.
pub fn area_of(theta: f64, k: u32) -> Result<AreaId, GeometryError> {
    if k == 0 {
        return Err(GeometryError::ZeroSectors);
    }
    if !(0.0..TAU).contains(&theta) {
        return Err(GeometryError::AngleOutOfRange(theta));
    }
    let idx = (theta * f64::from(k) / TAU).floor() as u32;
    // theta*k/2π can round up to k for theta just below 2π
    Ok(AreaId(idx.min(k - 1) + 1))
}

/// Sector of `p` relative to `center`. A point exactly at the center has no
/// bearing and is assigned sector 1.
pub fn area_of_position(center: Position, p: Position, k: u32) -> Result<AreaId, GeometryError> {
    match bearing(center, p) {
        Ok(theta) => area_of(theta, k),
        Err(GeometryError::CoincidentPoints) if k >= 1 => Ok(AreaId(1)),
        Err(e) => Err(e),
    }
}

/// Axis-aligned rectangle `[x_min, x_max] × [y_min, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn contains(&self, p: Position) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    /// Smallest rectangle containing both `self` and `p`.
    pub fn including(self, p: Position) -> Rect {
        Rect {
            x_min: self.x_min.min(p.x),
            x_max: self.x_max.max(p.x),
            y_min: self.y_min.min(p.y),
            y_max: self.y_max.max(p.y),
        }
    }

    pub fn around_disk(center: Position, radius: f64) -> Rect {
        Rect {
            x_min: center.x - radius,
            x_max: center.x + radius,
            y_min: center.y - radius,
            y_max: center.y + radius,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI, SQRT_2};

    #[test]
    fn distance_examples() {
        assert_eq!(distance(Position::new(0.0, 0.0), Position::new(3.0, 4.0)), 5.0);
        assert_eq!(distance(Position::new(7.0, 7.0), Position::new(7.0, 7.0)), 0.0);
        let diag = distance(Position::new(0.0, 0.0), Position::new(1500.0, 1500.0));
        assert!((diag - 1500.0 * SQRT_2).abs() < 1e-9);
        assert!((diag - 2121.3203).abs() < 1e-4);
    }

    #[test]
    fn bearing_examples() {
        let o = Position::new(0.0, 0.0);
        assert_eq!(bearing(o, Position::new(1.0, 0.0)).unwrap(), 0.0);
        assert!((bearing(o, Position::new(0.0, 5.0)).unwrap() - FRAC_PI_2).abs() < 1e-15);
        assert!((bearing(o, Position::new(1.0, -1.0)).unwrap() - 7.0 * FRAC_PI_4).abs() < 1e-12);
        assert!((bearing(o, Position::new(-1.0, 0.0)).unwrap() - PI).abs() < 1e-15);
    }

    #[test]
    fn bearing_of_coincident_points_is_an_error() {
        let p = Position::new(3.0, 3.0);
        assert_eq!(bearing(p, p), Err(GeometryError::CoincidentPoints));
    }

    #[test]
    fn bearing_never_returns_full_turn() {
        let o = Position::new(0.0, 0.0);
        let theta = bearing(o, Position::new(1.0, -1e-300)).unwrap();
        assert!((0.0..TAU).contains(&theta));
    }

    #[test]
    fn area_examples_six_sectors() {
        assert_eq!(area_of(FRAC_PI_4, 6).unwrap(), AreaId(1));
        assert_eq!(area_of(FRAC_PI_3, 6).unwrap(), AreaId(2));
        assert_eq!(area_of(11.0 * PI / 6.0, 6).unwrap(), AreaId(6));
        assert_eq!(area_of(0.0, 6).unwrap(), AreaId(1));
        assert_eq!(area_of(PI, 6).unwrap(), AreaId(4));
    }

    #[test]
    fn area_example_four_sectors() {
        assert_eq!(area_of(FRAC_PI_2, 4).unwrap(), AreaId(2));
    }

    #[test]
    fn area_just_below_full_turn_is_last_sector() {
        let theta = TAU - f64::EPSILON * 4.0;
        for k in 1..=20 {
            assert_eq!(area_of(theta, k).unwrap(), AreaId(k));
        }
    }

    #[test]
    fn area_domain_errors() {
        assert!(matches!(area_of(TAU, 6), Err(GeometryError::AngleOutOfRange(_))));
        assert!(matches!(area_of(-0.1, 6), Err(GeometryError::AngleOutOfRange(_))));
        assert!(matches!(area_of(f64::NAN, 6), Err(GeometryError::AngleOutOfRange(_))));
        assert_eq!(area_of(1.0, 0), Err(GeometryError::ZeroSectors));
    }

    #[test]
    fn position_at_center_is_sector_one() {
        let c = Position::new(750.0, 750.0);
        assert_eq!(area_of_position(c, c, 6).unwrap(), AreaId(1));
        assert_eq!(area_of_position(c, Position::new(1000.0, 750.0), 6).unwrap(), AreaId(1));
        assert_eq!(area_of_position(c, Position::new(750.0, 1000.0), 6).unwrap(), AreaId(2));
    }

    #[test]
    fn rect_containment() {
        let r = Rect::around_disk(Position::new(50.0, 50.0), 10.0);
        assert!(r.contains(Position::new(40.0, 60.0)));
        assert!(!r.contains(Position::new(200.0, 200.0)));
        let r = r.including(Position::new(0.0, 0.0));
        assert_eq!((r.x_min, r.x_max, r.y_min, r.y_max), (0.0, 60.0, 0.0, 60.0));
    }
}
