use std::f64::consts::PI;

use droplet_core::diagnostics::{
    curve_csv, format_sci, parse_series_csv, read_curve_csv, series_csv, TimeSeriesRow,
};
use droplet_core::exact::{EdgeVelocityProfile, TriangleOracle};
use droplet_core::geometry::{
    is_convex, make_rounded_triangle, point_segment_distance, ClosedCurve, Point2, RoundedTriangleSpec,
};
use droplet_core::mobility::{check_assumption, MobilityLaw};
use proptest::prelude::*;

/// Star-shaped polygon about the origin: sorted angles, one radius each.
fn star(gaps: &[f64], radii: &[f64]) -> ClosedCurve {
    let total: f64 = gaps.iter().sum();
    let mut angle: f64 = 0.0;
    let points = gaps
        .iter()
        .zip(radii)
        .map(|(g, r)| {
            let p = Point2::new(r * angle.cos(), r * angle.sin());
            angle += 2.0 * PI * g / total;
            p
        })
        .collect();
    ClosedCurve::new(points).unwrap()
}

/// Every marker on or to the left of every edge's supporting line.
fn brute_force_convex(curve: &ClosedCurve) -> bool {
    curve
        .edges()
        .all(|(a, b)| curve.markers().iter().all(|&p| (b - a).cross(p - a) >= 0.0))
}

fn polygon() -> impl Strategy<Value = ClosedCurve> {
    (8usize..40).prop_flat_map(|n| {
        let gaps = prop::collection::vec(0.5f64..1.5, n);
        let convex = Just(vec![1.0; n]).boxed();
        let bumpy = prop::collection::vec(0.5f64..1.0, n).boxed();
        (gaps, prop_oneof![convex, bumpy]).prop_map(|(g, r)| star(&g, &r))
    })
}

fn row_value() -> impl Strategy<Value = f64> {
    // Values already on the 13-significant-digit grid of `%.12e`.
    (-9_999_999_999_999i64..=9_999_999_999_999, -20i32..20)
        .prop_map(|(m, e)| format!("{m}e{e}").parse().unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn convexity_matches_brute_force(curve in polygon()) {
        prop_assert_eq!(is_convex(&curve, 0.0), brute_force_convex(&curve));
    }

    #[test]
    fn rounded_triangle_invariants(a in 0.3f64..3.0, frac in 0.0f64..0.45, n in 60usize..400) {
        let inradius = a / 3f64.sqrt();
        let fillet = frac * inradius;
        let curve = make_rounded_triangle(&RoundedTriangleSpec::new(a, fillet, n).unwrap()).unwrap();
        prop_assert!(curve.is_simple());
        prop_assert!(curve.signed_area() > 0.0);

        let oracle = TriangleOracle::new(a).unwrap();
        let eps = 1e-12 * a;
        prop_assert!(curve.markers().iter().all(|&p| oracle.contains(p, eps)));

        let center = Point2::new(0.0, inradius);
        let shrunk = inradius - fillet;
        for (p, q) in curve.edges() {
            prop_assert!(point_segment_distance(center, p, q) >= shrunk - eps);
        }
    }

    #[test]
    fn oracle_scales_like_inverse_square(x in -1.0f64..1.0, y in 0.0f64..1.0, k in 0usize..3) {
        let a = [0.5, 1.0, 2.0][k];
        let unit = TriangleOracle::new(1.0).unwrap();
        // Map the unit square onto the unit-half-side triangle.
        let h = 3f64.sqrt() * y;
        let p = Point2::new(x * (1.0 - y), h);
        let v1 = unit.value(p);
        prop_assert!(v1 >= -1e-15);
        let va = TriangleOracle::new(a).unwrap().value(Point2::new(a * p.x, a * p.y));
        prop_assert!((va - v1 / (a * a)).abs() <= 1e-12 * (v1.abs() / (a * a)).max(1e-12));
    }

    #[test]
    fn edge_profile_is_even(x in 0.0f64..0.99, p2 in any::<bool>()) {
        let law = MobilityLaw::parse(if p2 { "p2" } else { "p3" }).unwrap();
        let profile = EdgeVelocityProfile::new(TriangleOracle::new(1.0).unwrap(), law);
        let (v, w) = (profile.velocity(x).unwrap(), profile.velocity(-x).unwrap());
        prop_assert!((v - w).abs() <= 1e-14 * v.abs().max(1.0));
        let (v2, w2) = (
            profile.velocity_second_derivative(x).unwrap(),
            profile.velocity_second_derivative(-x).unwrap(),
        );
        prop_assert!((v2 - w2).abs() <= 1e-12 * v2.abs().max(1.0));
    }

    #[test]
    fn power_law_is_increasing_with_closed_form_ratio(
        p in 1.1f64..6.0,
        mut grid in prop::collection::vec(1e-3f64..10.0, 2..30),
    ) {
        let law = MobilityLaw::power_minus_one(p).unwrap();
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        for w in grid.windows(2) {
            prop_assert!(law.velocity(w[0]).unwrap() < law.velocity(w[1]).unwrap());
        }
        let report = check_assumption(&law, f64::MIN_POSITIVE, &grid).unwrap();
        for (r, q) in report.ratios {
            let exact = (p - 1.0) / r;
            prop_assert!((q - exact).abs() <= 1e-10 * exact);
        }
    }

    #[test]
    fn series_csv_round_trips(
        rows in prop::collection::vec(
            (row_value(), row_value(), row_value(), row_value(), row_value(), any::<bool>(), prop::option::of(row_value())),
            0..20,
        ),
    ) {
        let rows: Vec<TimeSeriesRow> = rows
            .into_iter()
            .enumerate()
            .map(|(i, (area, lambda, min_flux, max_flux, min_curv, convex, gap))| TimeSeriesRow {
                t: i as f64 * 0.25,
                area,
                lambda,
                min_flux,
                max_flux,
                min_curv,
                convex,
                gap,
            })
            .collect();
        let text = series_csv(&rows).unwrap();
        let parsed = parse_series_csv(&text).unwrap();
        prop_assert_eq!(&parsed, &rows);
        prop_assert_eq!(series_csv(&parsed).unwrap(), text);
    }

    #[test]
    fn arbitrary_doubles_reemit_identically(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        let text = format_sci(x);
        let back: f64 = text.parse().unwrap();
        prop_assert_eq!(format_sci(back), text);
        prop_assert!((back - x).abs() <= 5e-13 * x.abs());
    }

    #[test]
    fn curve_csv_round_trips(curve in polygon()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("curve.csv");
        let text = curve_csv(&curve).unwrap();
        std::fs::write(&path, &text).unwrap();
        let back = ClosedCurve::new(read_curve_csv(&path).unwrap()).unwrap();
        prop_assert_eq!(curve_csv(&back).unwrap(), text);
        for (p, q) in curve.markers().iter().zip(back.markers()) {
            prop_assert!(p.distance(*q) <= 1e-12);
        }
    }
}
