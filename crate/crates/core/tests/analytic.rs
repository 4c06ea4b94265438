use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spindle_core::analytic::{
    facet_count_limit, half_sphere_integral, phi_jacobian, phi_jacobian_sum, CurvatureProfile, HalfSphereMode,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn jacobian_of_a_ball_profile_telescopes(rho in 0.05f64..0.99, t in 0.0f64..2.0, d in 2usize..=5) {
        let p = CurvatureProfile::ball(d, rho).unwrap();
        let want = (1.0 + t - rho).powi(d as i32 - 1);
        // equal up to the rounding of 1 + t - rho, amplified by cancellation
        prop_assert!((phi_jacobian(&p, t).unwrap() - want).abs() <= 1e-12 * want);
        prop_assert!((phi_jacobian_sum(&p, t).unwrap() - want).abs() <= 1e-12 * want.max(1.0));
    }

    #[test]
    fn jacobian_forms_agree_on_mixed_radii(radii in prop::collection::vec(0.05f64..0.99, 1..=4), t in 0.0f64..2.0) {
        let p = CurvatureProfile::new(radii.len() + 1, radii).unwrap();
        let a = phi_jacobian(&p, t).unwrap();
        prop_assert!((phi_jacobian_sum(&p, t).unwrap() - a).abs() <= 1e-11 * a.max(1.0));
    }
}

#[test]
fn planar_limit_is_half_pi_squared() {
    let independent = std::f64::consts::PI * std::f64::consts::PI / 2.0;
    assert!((facet_count_limit(2, 1.0).unwrap() - independent).abs() <= f64::EPSILON * independent);
}

#[test]
fn half_sphere_monte_carlo_within_three_se() {
    for d in 2..=3 {
        let exact = half_sphere_integral(d, HalfSphereMode::Constant, &mut ChaCha8Rng::seed_from_u64(0), 1)
            .unwrap()
            .value;
        let mc = half_sphere_integral(
            d,
            HalfSphereMode::MonteCarlo,
            &mut ChaCha8Rng::seed_from_u64(d as u64),
            400_000,
        )
        .unwrap();
        assert!(
            (mc.value - exact).abs() <= 3.0 * mc.stderr,
            "d = {d}: {mc:?} vs {exact}"
        );
    }
}
