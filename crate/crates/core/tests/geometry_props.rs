use etf_core::geometry::{
    eps_geo, lens_center, point_line_distance, segment_sphere_intersections, GeometryError, Segment,
};
use etf_core::{distance, Point3, Sphere};
use proptest::prelude::*;

fn coord() -> impl Strategy<Value = f64> {
    -500.0..500.0f64
}

fn point() -> impl Strategy<Value = Point3> {
    (coord(), coord(), coord()).prop_map(|(x, y, z)| Point3::new(x, y, z))
}

fn sphere() -> impl Strategy<Value = Sphere> {
    (point(), 1.0..200.0f64).prop_map(|(c, r)| Sphere::new(c, r).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn distance_is_a_metric(p in point(), q in point(), s in point()) {
        prop_assert_eq!(distance(p, q), distance(q, p));
        prop_assert!(distance(p, q) >= 0.0);
        prop_assert!(distance(p, s) <= distance(p, q) + distance(q, s) + 1e-9);
    }

    #[test]
    fn heron_matches_cross_product(a in point(), b in point(), p in point()) {
        prop_assume!(distance(a, b) > 1e-3);
        let seg = Segment::new(a, b);
        let ab = b - a;
        let expected = ab.cross(p - a).norm() / ab.norm();
        let got = point_line_distance(&seg, p).unwrap();
        let scale = expected.max(distance(a, p)).max(distance(b, p)).max(1.0);
        prop_assert!((got - expected).abs() <= 1e-9 * scale, "heron {got} vs cross {expected}");
    }

    #[test]
    fn crossings_lie_on_the_surface_in_order(a in point(), b in point(), s in sphere()) {
        prop_assume!(distance(a, b) > 1e-6);
        let seg = Segment::new(a, b);
        let xs = segment_sphere_intersections(&seg, &s).unwrap();
        prop_assert!(xs.len() <= 2);
        for x in &xs {
            prop_assert!((distance(x.point, s.center) - s.radius).abs() <= eps_geo(s.radius).max(1e-9 * seg.length()));
            prop_assert!((0.0..=1.0).contains(&x.t));
        }
        prop_assert!(xs.windows(2).all(|w| w[0].t <= w[1].t));
    }

    #[test]
    fn segment_through_centre_crosses_twice(s in sphere(), dir in point(), k in 1.5..4.0f64) {
        prop_assume!(dir.norm() > 1.0);
        let u = dir * (1.0 / dir.norm());
        let seg = Segment::new(s.center - u * (k * s.radius), s.center + u * (k * s.radius));
        let xs = segment_sphere_intersections(&seg, &s).unwrap();
        prop_assert_eq!(xs.len(), 2);
        prop_assert!((xs[0].t - (0.5 - 0.5 / k)).abs() < 1e-9);
    }

    #[test]
    fn lens_centre_on_axis_and_radical_plane(s1 in sphere(), dir in point(), r2 in 1.0..200.0f64, f in 0.05..0.95f64) {
        prop_assume!(dir.norm() > 1.0);
        let u = dir * (1.0 / dir.norm());
        // Centre distance strictly between |r1 - r2| and r1 + r2.
        let lo = (s1.radius - r2).abs();
        let hi = s1.radius + r2;
        let d = lo + f * (hi - lo);
        prop_assume!(d > 1e-6);
        let s2 = Sphere::new(s1.center + u * d, r2).unwrap();
        let p = lens_center(&s1, &s2).unwrap();
        let power1 = (p - s1.center).norm_squared() - s1.radius * s1.radius;
        let power2 = (p - s2.center).norm_squared() - s2.radius * s2.radius;
        let scale = (s1.radius + r2).powi(2);
        prop_assert!((power1 - power2).abs() <= 1e-9 * scale);
        let off_axis = (s2.center - s1.center).cross(p - s1.center).norm() / d;
        prop_assert!(off_axis <= 1e-9 * scale.sqrt());
        prop_assert!(s1.contains(p) && s2.contains(p));
    }

    #[test]
    fn separated_spheres_have_no_lens(s1 in sphere(), dir in point(), r2 in 1.0..200.0f64, gap in 0.0..100.0f64) {
        prop_assume!(dir.norm() > 1.0);
        let u = dir * (1.0 / dir.norm());
        let s2 = Sphere::new(s1.center + u * (s1.radius + r2 + gap + 1e-6), r2).unwrap();
        prop_assert_eq!(lens_center(&s1, &s2), Err(GeometryError::NotOverlapping));
    }
}
