//! 3D primitives used by the planner: points, coverage spheres, segments,
//! segment/sphere crossings, Heron point-to-line distance and the centre of
//! the overlap between two spheres.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum GeometryError {
    #[error("degenerate segment: endpoints coincide")]
    DegenerateSegment,
    #[error("spheres do not overlap")]
    NotOverlapping,
    #[error("sphere centres coincide")]
    CoincidentCenters,
    #[error("sphere radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("coordinate is not finite")]
    NonFinite,
}

/// Boundary tolerance for a sphere of the given radius.
pub fn eps_geo(radius: f64) -> f64 {
    1e-9 * radius.max(1.0)
}

/// Position in metres.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn dot(self, other: Point3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Point3) -> Point3 {
        Point3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Point at parameter `t` on the line `self + t (other - self)`.
    pub fn lerp(self, other: Point3, t: f64) -> Point3 {
        self + (other - self) * t
    }

    pub fn midpoint(self, other: Point3) -> Point3 {
        self.lerp(other, 0.5)
    }
}

impl From<[f64; 3]> for Point3 {
    fn from(v: [f64; 3]) -> Self {
        Point3::new(v[0], v[1], v[2])
    }
}

impl From<Point3> for [f64; 3] {
    fn from(p: Point3) -> Self {
        [p.x, p.y, p.z]
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, rhs: Point3) -> Point3 {
        Point3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, rhs: Point3) -> Point3 {
        Point3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, k: f64) -> Point3 {
        Point3::new(self.x * k, self.y * k, self.z * k)
    }
}

impl fmt::Display for Point3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

pub fn distance(p: Point3, q: Point3) -> f64 {
    (q - p).norm()
}

/// Closed ball; a UAV's referred transmission range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sphere {
    pub center: Point3,
    pub radius: f64,
}

impl Sphere {
    pub fn new(center: Point3, radius: f64) -> Result<Self, GeometryError> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(GeometryError::InvalidRadius(radius));
        }
        if !center.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        Ok(Self { center, radius })
    }

    /// Boundary-inclusive containment, with `eps_geo` slack.
    pub fn contains(&self, p: Point3) -> bool {
        distance(self.center, p) <= self.radius + eps_geo(self.radius)
    }

    /// Signed clearance: positive inside, negative outside.
    pub fn margin(&self, p: Point3) -> f64 {
        self.radius - distance(self.center, p)
    }
}

/// Straight-line trajectory from `a` to `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Point3,
    pub b: Point3,
}

impl Segment {
    pub fn new(a: Point3, b: Point3) -> Self {
        Self { a, b }
    }

    pub fn length(&self) -> f64 {
        distance(self.a, self.b)
    }

    pub fn is_degenerate(&self) -> bool {
        self.a == self.b
    }

    pub fn at(&self, t: f64) -> Point3 {
        self.a.lerp(self.b, t)
    }
}

/// A crossing of a segment with a sphere surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub t: f64,
    pub point: Point3,
}

/// Solves `|a + t (b - a) - c|² = r²` and keeps the roots with `t ∈ [0, 1]`
/// (up to tolerance, then clamped). Tangency yields a single crossing.
pub fn segment_sphere_intersections(
    seg: &Segment,
    s: &Sphere,
) -> Result<Vec<Crossing>, GeometryError> {
    if seg.is_degenerate() {
        return Err(GeometryError::DegenerateSegment);
    }
    let dir = seg.b - seg.a;
    let len2 = dir.norm_squared();
    let len = len2.sqrt();
    let rel = seg.a - s.center;

    // Foot of the perpendicular from the centre, then half-chord in t units.
    let t_foot = -dir.dot(rel) / len2;
    let foot = seg.at(t_foot);
    let h = distance(foot, s.center);
    let eps = eps_geo(s.radius);

    let roots: Vec<f64> = if (h - s.radius).abs() <= eps {
        vec![t_foot]
    } else if h > s.radius {
        Vec::new()
    } else {
        let half = ((s.radius - h) * (s.radius + h)).sqrt() / len;
        vec![t_foot - half, t_foot + half]
    };

    let t_eps = eps / len;
    Ok(roots
        .into_iter()
        .filter(|t| *t >= -t_eps && *t <= 1.0 + t_eps)
        .map(|t| {
            let t = t.clamp(0.0, 1.0);
            Crossing { t, point: seg.at(t) }
        })
        .collect())
}

/// Height of the triangle `(a, b, p)` over the base `ab`, computed with
/// Heron's formula. This is the distance from `p` to the infinite line
/// through `a` and `b`.
pub fn point_line_distance(seg: &Segment, p: Point3) -> Result<f64, GeometryError> {
    if seg.is_degenerate() {
        return Err(GeometryError::DegenerateSegment);
    }
    let base = seg.length();
    let area = heron_area(base, distance(seg.a, p), distance(p, seg.b));
    Ok(2.0 * area / base)
}

/// Heron's formula in the sorted-sides arrangement, which stays accurate
/// for needle-shaped triangles. A negative radicand from rounding on
/// collinear input clamps to zero.
fn heron_area(s1: f64, s2: f64, s3: f64) -> f64 {
    let mut sides = [s1, s2, s3];
    sides.sort_by(|x, y| y.total_cmp(x));
    let [a, b, c] = sides;
    let radicand = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c));
    0.25 * radicand.max(0.0).sqrt()
}

/// Centre of the overlap of two spheres: the centre of their intersection
/// circle. When one sphere lies inside the other the overlap is the smaller
/// sphere, and its centre is returned.
pub fn lens_center(s1: &Sphere, s2: &Sphere) -> Result<Point3, GeometryError> {
    let d = distance(s1.center, s2.center);
    if d == 0.0 {
        return Err(GeometryError::CoincidentCenters);
    }
    if d >= s1.radius + s2.radius {
        return Err(GeometryError::NotOverlapping);
    }
    if d <= (s1.radius - s2.radius).abs() {
        let inner = if s1.radius <= s2.radius { s1 } else { s2 };
        return Ok(inner.center);
    }
    let d2 = d * d;
    let k = (d2 + s1.radius * s1.radius - s2.radius * s2.radius) / (2.0 * d2);
    Ok(s1.center + (s2.center - s1.center) * k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64, z: f64) -> Point3 {
        Point3::new(x, y, z)
    }

    fn sphere(c: Point3, r: f64) -> Sphere {
        Sphere::new(c, r).unwrap()
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance(Point3::ORIGIN, Point3::ORIGIN), 0.0);
        assert_eq!(distance(Point3::ORIGIN, p(3.0, 4.0, 0.0)), 5.0);
        assert_eq!(distance(p(1.0, 2.0, 3.0), p(4.0, 6.0, 15.0)), 13.0);
    }

    #[test]
    fn two_crossings_on_diameter() {
        let seg = Segment::new(p(-20.0, 0.0, 0.0), p(20.0, 0.0, 0.0));
        let xs = segment_sphere_intersections(&seg, &sphere(Point3::ORIGIN, 10.0)).unwrap();
        assert_eq!(xs.len(), 2);
        assert!((xs[0].t - 0.25).abs() < 1e-12);
        assert!((xs[1].t - 0.75).abs() < 1e-12);
        assert!(distance(xs[0].point, p(-10.0, 0.0, 0.0)) < 1e-12);
        assert!(distance(xs[1].point, p(10.0, 0.0, 0.0)) < 1e-12);
    }

    #[test]
    fn tangent_segment_has_one_crossing() {
        let seg = Segment::new(p(0.0, 10.0, 0.0), p(20.0, 10.0, 0.0));
        let xs = segment_sphere_intersections(&seg, &sphere(Point3::ORIGIN, 10.0)).unwrap();
        assert_eq!(xs.len(), 1);
        assert_eq!(xs[0].t, 0.0);
        assert_eq!(xs[0].point, p(0.0, 10.0, 0.0));
    }

    #[test]
    fn segment_outside_sphere_misses() {
        let seg = Segment::new(p(0.0, 20.0, 0.0), p(20.0, 20.0, 0.0));
        let xs = segment_sphere_intersections(&seg, &sphere(Point3::ORIGIN, 10.0)).unwrap();
        assert!(xs.is_empty());
    }

    #[test]
    fn crossings_beyond_segment_are_dropped() {
        // Line crosses at x = ±10, but the segment stops at x = 5.
        let seg = Segment::new(p(-20.0, 0.0, 0.0), p(5.0, 0.0, 0.0));
        let xs = segment_sphere_intersections(&seg, &sphere(Point3::ORIGIN, 10.0)).unwrap();
        assert_eq!(xs.len(), 1);
        assert!((xs[0].point.x + 10.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_segment_is_rejected() {
        let seg = Segment::new(Point3::ORIGIN, Point3::ORIGIN);
        assert_eq!(
            segment_sphere_intersections(&seg, &sphere(Point3::ORIGIN, 1.0)),
            Err(GeometryError::DegenerateSegment)
        );
        assert_eq!(
            point_line_distance(&seg, p(1.0, 0.0, 0.0)),
            Err(GeometryError::DegenerateSegment)
        );
    }

    #[test]
    fn heron_distance_examples() {
        let seg = Segment::new(Point3::ORIGIN, p(10.0, 0.0, 0.0));
        assert!((point_line_distance(&seg, p(5.0, 3.0, 0.0)).unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(point_line_distance(&seg, p(7.0, 0.0, 0.0)).unwrap(), 0.0);
        // Foot of the perpendicular lies beyond b: still the line distance.
        assert!((point_line_distance(&seg, p(20.0, 5.0, 0.0)).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn lens_center_examples() {
        let c = lens_center(
            &sphere(Point3::ORIGIN, 10.0),
            &sphere(p(12.0, 0.0, 0.0), 10.0),
        )
        .unwrap();
        assert!(distance(c, p(6.0, 0.0, 0.0)) < 1e-12);

        let s1 = sphere(Point3::ORIGIN, 10.0);
        let s2 = sphere(p(12.0, 0.0, 0.0), 6.0);
        let c = lens_center(&s1, &s2).unwrap();
        // (144 + 100 - 36) / 24 = 26 / 3
        assert!(distance(c, p(26.0 / 3.0, 0.0, 0.0)) < 1e-12);
        let power1 = (c - s1.center).norm_squared() - 100.0;
        let power2 = (c - s2.center).norm_squared() - 36.0;
        assert!((power1 - power2).abs() < 1e-9);

        let c = lens_center(
            &sphere(Point3::ORIGIN, 10.0),
            &sphere(p(0.0, 0.0, 12.0), 10.0),
        )
        .unwrap();
        assert!(distance(c, p(0.0, 0.0, 6.0)) < 1e-12);
    }

    #[test]
    fn lens_center_errors_and_nesting() {
        let a = sphere(Point3::ORIGIN, 10.0);
        assert_eq!(
            lens_center(&a, &sphere(p(20.0, 0.0, 0.0), 10.0)),
            Err(GeometryError::NotOverlapping)
        );
        assert_eq!(
            lens_center(&a, &sphere(Point3::ORIGIN, 5.0)),
            Err(GeometryError::CoincidentCenters)
        );
        let inner = sphere(p(2.0, 0.0, 0.0), 3.0);
        assert_eq!(lens_center(&a, &inner), Ok(inner.center));
    }

    #[test]
    fn sphere_rejects_bad_radius() {
        assert!(Sphere::new(Point3::ORIGIN, 0.0).is_err());
        assert!(Sphere::new(Point3::ORIGIN, f64::NAN).is_err());
        assert!(Sphere::new(p(f64::INFINITY, 0.0, 0.0), 1.0).is_err());
    }

    #[test]
    fn point_serializes_as_triple() {
        let json = serde_json::to_string(&p(1.0, 2.5, -3.0)).unwrap();
        assert_eq!(json, "[1.0,2.5,-3.0]");
        let back: Point3 = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p(1.0, 2.5, -3.0));
    }
}
