use std::f64::consts::TAU;

use proptest::prelude::*;

use circkde::bandwidth::{lcv_objective, rule_of_thumb};
use circkde::kde::KdeFit;
use circkde::models::{VonMisesComponent, VonMisesMixture};
use circkde::special::{inverse_mean_resultant_ratio, mean_resultant_ratio};
use circkde::AngleSample;

fn angles(max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..TAU, 2..max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kde_normalized(values in angles(60), nu in 0.0f64..500.0) {
        let s = AngleSample::from_radians(values).unwrap();
        let g = KdeFit::new(s, nu).unwrap().grid(1024).unwrap();
        prop_assert!((g.integral() - 1.0).abs() < 1e-6);
        prop_assert!(g.values().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn rule_of_thumb_rotation_invariant(values in angles(60), phi in -10.0f64..10.0) {
        let s = AngleSample::from_radians(values).unwrap();
        let a = rule_of_thumb(&s).unwrap().nu;
        let b = rule_of_thumb(&s.rotated(phi)).unwrap().nu;
        prop_assert!((a - b).abs() <= 1e-6 * a.max(1e-6));
    }

    #[test]
    fn lcv_objective_rotation_invariant(values in angles(30), phi in -10.0f64..10.0, nu in 0.01f64..100.0) {
        let s = AngleSample::from_radians(values).unwrap();
        let a = lcv_objective(&s, nu).unwrap();
        let b = lcv_objective(&s.rotated(phi), nu).unwrap();
        prop_assert!((a - b).abs() <= 1e-8 * a.abs().max(1.0));
    }

    #[test]
    fn kappa_round_trip(kappa in 0.01f64..100.0) {
        let back = inverse_mean_resultant_ratio(mean_resultant_ratio(kappa)).kappa;
        prop_assert!((back - kappa).abs() <= 1e-6 * kappa);
    }

    #[test]
    fn curvature_rotation_invariant(
        mu1 in 0.0..TAU, mu2 in 0.0..TAU,
        k1 in 0.1f64..30.0, k2 in 0.1f64..30.0,
        w in 0.05f64..0.95, phi in 0.0..TAU,
    ) {
        let mix = VonMisesMixture::new(
            vec![VonMisesComponent::new(mu1, k1).unwrap(), VonMisesComponent::new(mu2, k2).unwrap()],
            vec![w, 1.0 - w],
        ).unwrap();
        let a = mix.curvature_integral().unwrap();
        let b = mix.rotated(phi).curvature_integral().unwrap();
        prop_assert!((a - b).abs() <= 1e-7 * a);
    }
}
