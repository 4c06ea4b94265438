use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spindle_core::ballhull::{
    count_vertices, count_vertices_oracle, enumerate_facets, hull_contains, BallPolytope, EnumerationMode, HullSummary,
    SampleInstance,
};
use spindle_core::body::Body;
use spindle_core::geom::{radius_r_centers, Point};
use spindle_core::hull::ConvexHull;

fn ellipse() -> Body<2> {
    Body::ellipsoid(Point::origin(), [0.6, 0.5]).unwrap()
}

fn ellipsoid() -> Body<3> {
    Body::ellipsoid(Point::origin(), [0.6, 0.5, 0.55]).unwrap()
}

fn tight<const D: usize>(s: &SampleInstance<D>, h: &HullSummary<D>) -> Result<(), TestCaseError> {
    for f in &h.facets {
        for (j, x) in s.points.iter().enumerate() {
            let dist = f.support_center.dist(x);
            if f.indices.contains(&j) {
                prop_assert!((dist - s.r).abs() < 1e-9, "spanning point off the sphere: {dist}");
            } else {
                prop_assert!(dist <= s.r + 1e-9, "point {j} outside the supporting ball: {dist}");
            }
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn planar_modes_agree(seed in any::<u64>(), n in 2usize..40, ball in any::<bool>()) {
        let body = if ball { Body::ball(Point::origin(), 0.5).unwrap() } else { ellipse() };
        let s = SampleInstance::draw_seeded(body, 1.0, n, seed).unwrap();
        let slow = enumerate_facets(&s, EnumerationMode::Oracle).unwrap();
        let fast = enumerate_facets(&s, EnumerationMode::HullFiltered).unwrap();
        prop_assert_eq!(&slow.facets.len(), &fast.facets.len());
        for (a, b) in slow.facets.iter().zip(&fast.facets) {
            prop_assert_eq!((a.indices, a.side), (b.indices, b.side));
        }
        tight(&s, &slow)?;
        tight(&s, &fast)?;
    }

    #[test]
    fn spatial_modes_agree(seed in any::<u64>(), n in 3usize..30, ball in any::<bool>()) {
        let body = if ball { Body::ball(Point::origin(), 0.5).unwrap() } else { ellipsoid() };
        let s = SampleInstance::draw_seeded(body, 1.0, n, seed).unwrap();
        let slow = enumerate_facets(&s, EnumerationMode::Oracle).unwrap();
        let fast = enumerate_facets(&s, EnumerationMode::HullFiltered).unwrap();
        prop_assert_eq!(slow.facets.len(), fast.facets.len());
        for (a, b) in slow.facets.iter().zip(&fast.facets) {
            prop_assert_eq!((a.indices, a.side), (b.indices, b.side));
        }
        tight(&s, &fast)?;
    }

    #[test]
    fn vertices_are_euclidean_hull_vertices(seed in any::<u64>(), n in 2usize..60) {
        let s = SampleInstance::draw_seeded(ellipse(), 1.0, n, seed).unwrap();
        let euclid = Point::<2>::hull_vertices(&s.points);
        let v = count_vertices(&s).unwrap();
        prop_assert!(v.iter().all(|i| euclid.contains(i)));
        prop_assert_eq!(&v, &count_vertices_oracle(&s).unwrap());
        let s3 = SampleInstance::draw_seeded(ellipsoid(), 1.0, n.max(3), seed).unwrap();
        let euclid3 = Point::<3>::hull_vertices(&s3.points);
        prop_assert!(count_vertices(&s3).unwrap().iter().all(|i| euclid3.contains(i)));
    }

    #[test]
    fn hull_stays_inside_the_body(seed in any::<u64>(), n in 2usize..25) {
        let body = ellipse();
        let s = SampleInstance::draw_seeded(body, 1.0, n, seed).unwrap();
        let bp = BallPolytope::from_sample(&s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(!seed);
        for _ in 0..200 {
            let z = Point::new([rng.gen_range(-0.6..0.6), rng.gen_range(-0.5..0.5)]);
            let inside = bp.contains(&z);
            prop_assert_eq!(inside, hull_contains(&z, &s).unwrap());
            if inside {
                prop_assert!(body.contains(&z));
            }
        }
    }
}

#[test]
fn adding_points_never_shrinks_the_hull() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for inst in 0..100u64 {
        let (d2, body2, body3) = (inst % 2 == 0, ellipse(), ellipsoid());
        let n = rng.gen_range(3..20);
        if d2 {
            let s = SampleInstance::draw_seeded(body2, 1.0, n, inst).unwrap();
            let mut bigger = s.clone();
            bigger.points.push(body2.sample_one(&mut rng));
            let (a, b) = (
                BallPolytope::from_sample(&s).unwrap(),
                BallPolytope::from_sample(&bigger).unwrap(),
            );
            for _ in 0..200 {
                let z = body2.sample_one(&mut rng);
                assert!(!a.contains(&z) || b.contains(&z), "instance {inst}");
            }
        } else {
            let s = SampleInstance::draw_seeded(body3, 1.0, n, inst).unwrap();
            let mut bigger = s.clone();
            bigger.points.push(body3.sample_one(&mut rng));
            let (a, b) = (
                BallPolytope::from_sample(&s).unwrap(),
                BallPolytope::from_sample(&bigger).unwrap(),
            );
            for _ in 0..200 {
                let z = body3.sample_one(&mut rng);
                assert!(!a.contains(&z) || b.contains(&z), "instance {inst}");
            }
        }
    }
}

#[test]
fn planar_facets_equal_vertices() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for inst in 0..500u64 {
        let n = rng.gen_range(2..200);
        let body = if inst % 2 == 0 {
            ellipse()
        } else {
            Body::ball(Point::origin(), 1.0).unwrap()
        };
        let s = SampleInstance::draw_seeded(body, 1.0, n, inst).unwrap();
        let h = enumerate_facets(&s, EnumerationMode::HullFiltered).unwrap();
        let v = count_vertices(&s).unwrap();
        if v.len() >= 2 {
            assert_eq!(h.facet_count, v.len(), "instance {inst}, n = {n}");
        }
    }
}

/// The larger of the two caps `K \ B(p, 1)` cut by the unit circles
/// through a pair of points.
fn larger_cap(body: &Body<2>, pair: [Point<2>; 2], seed: u64) -> Option<f64> {
    let (a, b) = radius_r_centers(&pair, 1.0).ok()??;
    let m = 2000;
    let va = body
        .cap_volume_mc(&a, 1.0, &mut ChaCha8Rng::seed_from_u64(seed), m)
        .unwrap()
        .0;
    let vb = body
        .cap_volume_mc(&b, 1.0, &mut ChaCha8Rng::seed_from_u64(seed ^ 1), m)
        .unwrap()
        .0;
    Some(va.max(vb))
}

#[test]
fn larger_cap_has_a_floor() {
    let body = ellipse();
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let mut draw = |k: usize| -> Vec<f64> {
        (0..k)
            .filter_map(|i| larger_cap(&body, [body.sample_one(&mut rng), body.sample_one(&mut rng)], i as u64))
            .collect()
    };
    let pilot = draw(500).into_iter().fold(f64::INFINITY, f64::min);
    assert!(pilot > 0.0);
    let worst = draw(10_000).into_iter().fold(f64::INFINITY, f64::min);
    assert!(worst >= 0.5 * pilot, "worst {worst} against pilot minimum {pilot}");
}
