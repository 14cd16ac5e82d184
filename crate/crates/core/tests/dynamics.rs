use cocycle_lab::dynamics::{
    amplitude, amplitude_profile, default_t_grid, mass_beyond, n_of_t, sudl_statistic, transport_probe,
    transported_mass, transported_profile, TransportOptions,
};
use cocycle_lab::model::{sample_realization, PotentialModel};
use cocycle_lab::spectrum::{build_operator, diagonalize, EigenSystem, DEFAULT_EPS_GRID};
use proptest::prelude::*;

fn system(seed: u64, coupling: f64) -> EigenSystem {
    let model = PotentialModel::bernoulli_anderson(coupling);
    let r = sample_realization(&model, seed, -30, 30).unwrap();
    diagonalize(&build_operator(&r, -30, 30).unwrap()).unwrap()
}

const ALL: (f64, f64) = (-10.0, 10.0);

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn evolution_is_unitary(seed in 0u64..1000, t in 0.0f64..50.0, m in -30i64..=30) {
        let es = system(seed, 1.5);
        let p = amplitude_profile(&es, ALL, m, t).unwrap();
        let total: f64 = p.iter().map(|z| z.norm_sqr()).sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn kernel_is_symmetric(seed in 0u64..1000, t in 0.0f64..50.0, n in -30i64..=30, m in -30i64..=30) {
        let es = system(seed, 1.5);
        let a = amplitude(&es, (-1.0, 2.0), n, m, t).unwrap().value;
        let b = amplitude(&es, (-1.0, 2.0), m, n, t).unwrap().value;
        prop_assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn mass_is_monotone_and_bounded(seed in 0u64..1000, t in 0.1f64..1e3) {
        let es = system(seed, 2.0);
        let profile = transported_profile(&es, t).unwrap();
        let total: f64 = profile.iter().map(|(_, x)| x).sum();
        prop_assert!((total - 0.5).abs() < 1e-10);
        let masses: Vec<f64> = (0..=31).map(|n| mass_beyond(&profile, n)).collect();
        prop_assert!(masses.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        prop_assert!(masses.iter().all(|&x| x <= 0.5 + 1e-12));
    }
}

#[test]
fn amplitude_at_time_zero_is_identity() {
    let es = system(1, 1.0);
    let p = amplitude_profile(&es, ALL, 4, 0.0).unwrap();
    for (i, z) in p.iter().enumerate() {
        let want = if es.first_site() + i as i64 == 4 { 1.0 } else { 0.0 };
        assert!((z.re - want).abs() < 1e-12 && z.im.abs() < 1e-12);
    }
    assert!(amplitude(&es, ALL, 31, 0, 1.0).is_err());
}

#[test]
fn transported_mass_needs_site_one() {
    let model = PotentialModel::bernoulli_anderson(1.0);
    let r = sample_realization(&model, 1, 5, 20).unwrap();
    let es = diagonalize(&build_operator(&r, 5, 20).unwrap()).unwrap();
    assert!(transported_mass(&es, 10.0, 2).is_err());
    assert!(transported_mass(&system(1, 1.0), 0.0, 2).is_err());
}

#[test]
fn sudl_on_localized_system() {
    let es = system(2, 3.0);
    let grid = default_t_grid(100.0);
    assert_eq!(grid.len(), 512);
    assert_eq!(grid[0], 0.0);
    assert!((grid[511] - 1000.0).abs() < 1e-9);
    let rep = sudl_statistic(&es, ALL, 0, &grid, 0.1, &DEFAULT_EPS_GRID, 1e6).unwrap();
    assert_eq!(rep.sup_amplitude.len(), es.dim());
    assert!(rep.violations.is_empty());
    // Ĉ_ε is non-increasing in ε for m = 0 (the penalty vanishes), and at least the diagonal amplitude.
    assert!(rep.c_hat.iter().all(|&(_, c)| c >= 1.0 - 1e-12));
    let tight = sudl_statistic(&es, ALL, 0, &grid, 0.1, &DEFAULT_EPS_GRID, 0.5).unwrap();
    assert!(!tight.violations.is_empty());
}

#[test]
fn scale_function() {
    assert_eq!(n_of_t(2.0, 1.9), (1, true));
    assert_eq!(n_of_t(100.0, 1.9), (19, false));
    assert_eq!(n_of_t(1e4, 1.9), (68, false));
}

#[test]
fn probe_validates_and_is_deterministic() {
    let model = PotentialModel::bernoulli_anderson(3.0);
    let opts = TransportOptions::default();
    assert!(transport_probe(&model, &[], 1, &opts).is_err());
    assert!(transport_probe(&model, &[100.0, 10.0], 1, &opts).is_err());
    let small = TransportOptions { box_radius: Some(10), ..opts.clone() };
    assert!(transport_probe(&model, &[100.0], 1, &small).is_err());
    let a = transport_probe(&model, &[10.0, 100.0], 1, &opts).unwrap();
    let b = transport_probe(&model, &[10.0, 100.0], 1, &opts).unwrap();
    assert_eq!(a, b);
    assert_eq!(a[1].box_radius, 76);
    assert!(a.iter().all(|r| r.mass >= 0.0 && r.mass <= 0.5));
}
