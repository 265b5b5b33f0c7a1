use drrp_core::{
    divergence, project_ambiguity, risk_contributions, solve_portfolio, AmbiguitySpec, DistanceMeasure,
    ProbabilityDistribution, ProjectionConfig, RiskParityConfig,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn measure() -> impl Strategy<Value = DistanceMeasure> {
    prop_oneof![
        Just(DistanceMeasure::JensenShannon),
        Just(DistanceMeasure::Hellinger),
        Just(DistanceMeasure::TotalVariation),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_lands_in_the_ambiguity_set(
        m in measure(),
        omega in 0.05f64..0.9,
        u in prop::collection::vec(-2.0f64..2.0, 3..25),
    ) {
        let t = u.len();
        let q = ProbabilityDistribution::uniform(t);
        let spec = AmbiguitySpec::new(m, omega, t).unwrap();
        let p = project_ambiguity(&DVector::from_vec(u), &q, &spec, &ProjectionConfig::default()).unwrap();
        prop_assert!((p.as_vector().sum() - 1.0).abs() <= 1e-12);
        prop_assert!(p.as_slice().iter().all(|&v| v >= 0.0));
        prop_assert!(divergence(m, &p, &q).unwrap() <= spec.budget() * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn nominal_risk_parity_equalizes_contributions(
        raw in prop::collection::vec(-1.0f64..1.0, 16),
        diag in prop::collection::vec(0.1f64..2.0, 4),
    ) {
        let a = DMatrix::from_vec(4, 4, raw);
        let sigma = &a * a.transpose() + DMatrix::from_diagonal(&DVector::from_vec(diag));
        let x = solve_portfolio(&sigma, &RiskParityConfig::default()).unwrap();
        prop_assert!((x.weights().sum() - 1.0).abs() <= 1e-12);
        prop_assert!(risk_contributions(&x, &sigma).unwrap().cv <= 1e-8);
    }
}
