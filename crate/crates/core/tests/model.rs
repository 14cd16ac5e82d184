use cocycle_lab::model::{
    check_support_condition, freeze_sample, sample_realization, sample_realization_stream, support_of_potential_vector,
    BlockCode, FreezeScheme, PotentialModel, PotentialStream, SingleSiteDistribution,
};
use cocycle_lab::Error;
use proptest::prelude::*;

fn linear_model() -> PotentialModel {
    let nu = SingleSiteDistribution::atoms(&[(-1.0, 0.25), (0.5, 0.5), (2.0, 0.25)]).unwrap();
    PotentialModel::new(nu, BlockCode::linear(vec![1.0, -0.5, 0.25], 0.1, 4.0).unwrap()).unwrap()
}

#[test]
fn distribution_validation() {
    assert!(matches!(SingleSiteDistribution::atoms(&[]), Err(Error::InvalidDistribution(_))));
    assert!(SingleSiteDistribution::atoms(&[(0.0, 0.3), (1.0, 0.3)]).is_err());
    assert!(SingleSiteDistribution::atoms(&[(0.0, -0.5), (1.0, 1.5)]).is_err());
    assert!(SingleSiteDistribution::atoms(&[(1.0, 0.5), (1.0, 0.5)]).is_err());
    assert!(SingleSiteDistribution::atoms(&[(f64::NAN, 1.0)]).is_err());
}

#[test]
fn code_validation() {
    assert!(matches!(BlockCode::linear(vec![], 0.0, 1.0), Err(Error::InvalidCode(_))));
    assert!(BlockCode::linear(vec![1.0], 0.0, -1.0).is_err());
    assert!(BlockCode::expression("x1 + x2", 1, 2.0).is_err());
    let nu = SingleSiteDistribution::uniform_atoms(&[0.0, 1.0]).unwrap();
    // Table of the wrong size.
    assert!(PotentialModel::new(nu.clone(), BlockCode::table(2, vec![0.0; 3], 1.0).unwrap()).is_err());
    // Bound C_V too small for the code.
    assert!(PotentialModel::new(nu, BlockCode::linear(vec![3.0], 0.0, 1.0).unwrap()).is_err());
}

#[test]
fn difference_model_potential() {
    let model = PotentialModel::difference_example();
    let r = sample_realization(&model, 3, -50, 50).unwrap();
    assert_eq!(r.len(), 101);
    for n in -50..=50 {
        let v = r.v_at(n).unwrap();
        assert!([-1.0, 0.0, 1.0].contains(&v));
        assert_eq!(v, r.xi_at(n).unwrap() - r.xi_at(n + 1).unwrap());
    }
}

#[test]
fn table_and_expression_codes_agree_with_linear() {
    let nu = SingleSiteDistribution::uniform_atoms(&[0.0, 1.0]).unwrap();
    let lin = PotentialModel::new(nu.clone(), BlockCode::linear(vec![2.0, 1.0], 0.0, 3.0).unwrap()).unwrap();
    // Lexicographic over atom indices, first coordinate most significant.
    let tab = PotentialModel::new(nu.clone(), BlockCode::table(2, vec![0.0, 1.0, 2.0, 3.0], 3.0).unwrap()).unwrap();
    let expr = PotentialModel::new(nu, BlockCode::expression("2*x1 + x2", 2, 3.0).unwrap()).unwrap();
    let a = sample_realization(&lin, 9, 1, 300).unwrap();
    let b = sample_realization(&tab, 9, 1, 300).unwrap();
    let c = sample_realization(&expr, 9, 1, 300).unwrap();
    assert_eq!(a.v(), b.v());
    assert_eq!(a.v(), c.v());
}

#[test]
fn stream_matches_realization() {
    let model = linear_model();
    let r = sample_realization_stream(&model, 4, 2, 1, 500).unwrap();
    let streamed: Vec<f64> = PotentialStream::new(&model, 4, 2, 1).take(500).collect();
    assert_eq!(r.v(), &streamed[..]);
}

#[test]
fn recompute_matches_sample() {
    let model = linear_model();
    let r = sample_realization(&model, 5, -20, 80).unwrap();
    assert_eq!(model.recompute_potential(&r).unwrap(), r.v());
}

#[test]
fn frozen_sites_are_fixed() {
    let model = PotentialModel::difference_example();
    let scheme = FreezeScheme::new(2, vec![vec![1.0, 0.0], vec![0.0, 0.0]]);
    let r = freeze_sample(&model, &scheme, 6, 8).unwrap();
    for j in 0..8 {
        let want = &scheme.frozen[j % 2];
        for (o, site) in scheme.frozen_sites(j).enumerate() {
            assert_eq!(r.xi_at(site).unwrap(), want[o]);
        }
    }
    // Values outside the support are rejected.
    let bad = FreezeScheme::constant(2, vec![0.5, 0.0]);
    assert!(matches!(freeze_sample(&model, &bad, 6, 2), Err(Error::Scheme(_))));
}

#[test]
fn support_contains_every_sample() {
    let model = PotentialModel::difference_example();
    let support = support_of_potential_vector(&model, 4).unwrap();
    assert!(support.len() <= 32);
    let r = sample_realization(&model, 8, 1, 2000).unwrap();
    for w in r.v().windows(4) {
        assert!(support.iter().any(|s| s.as_slice() == w));
    }
    assert!(check_support_condition(&support_of_potential_vector(&model, 16).unwrap(), 10).holds());
}

#[test]
fn constant_code_fails_support_condition() {
    let nu = SingleSiteDistribution::uniform_atoms(&[0.0, 1.0]).unwrap();
    let model = PotentialModel::new(nu, BlockCode::constant(1, 0.5).unwrap()).unwrap();
    let support = support_of_potential_vector(&model, 8).unwrap();
    assert_eq!(support.len(), 1);
    assert!(!check_support_condition(&support, 5).holds());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn subranges_regenerate(seed in any::<u64>(), lo in -200i64..200, len in 1i64..200, cut in 0i64..200) {
        let model = linear_model();
        let full = sample_realization(&model, seed, lo, lo + len).unwrap();
        let inner_lo = lo + cut.min(len);
        let part = sample_realization(&model, seed, inner_lo, lo + len).unwrap();
        prop_assert_eq!(part.v(), full.v_range(inner_lo, lo + len).unwrap());
    }

    #[test]
    fn potential_within_bound(seed in any::<u64>()) {
        let model = linear_model();
        let r = sample_realization(&model, seed, 1, 256).unwrap();
        prop_assert!(r.v().iter().all(|v| v.abs() <= model.c_v()));
    }
}
