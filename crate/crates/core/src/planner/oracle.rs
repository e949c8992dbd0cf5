use crate::geometry::{distance, Point3, Sphere};

/// Default arc-length sampling interval of the coverage oracle, in metres.
pub const DEFAULT_ORACLE_STEP: f64 = 0.01;

/// Brute-force coverage check: samples every leg of the polyline at
/// arc-length spacing no larger than `step` (both endpoints included) and
/// requires each sample to lie in at least one sphere.
///
/// Independent of the planner; only sphere containment is shared.
///
/// # Panics
///
/// If `step` is not strictly positive.
pub fn oracle_is_seamless(waypoints: &[Point3], spheres: &[Sphere], step: f64) -> bool {
    assert!(step > 0.0, "oracle step must be positive, got {step}");
    let covered = |p: Point3| spheres.iter().any(|s| s.contains(p));
    match waypoints {
        [] => true,
        [only] => covered(*only),
        _ => waypoints.windows(2).all(|leg| {
            let (a, b) = (leg[0], leg[1]);
            let n = (distance(a, b) / step).ceil().max(1.0) as u64;
            (0..=n).all(|k| covered(a.lerp(b, k as f64 / n as f64)))
        }),
    }
}
