use cocycle_lab::model::{sample_realization, sample_realization_stream, PotentialModel};
use cocycle_lab::spectrum::{
    build_operator, default_beta_floor, diagonalize, diagonalize_window, diagonalize_with, fit_decay, sule_report,
    FiniteVolumeOperator, DEFAULT_EPS_GRID, DEFAULT_FLOOR,
};
use cocycle_lab::Error;
use proptest::prelude::*;

fn random_op(seed: u64, n: i64, coupling: f64) -> FiniteVolumeOperator {
    let model = PotentialModel::bernoulli_anderson(coupling);
    build_operator(&sample_realization(&model, seed, 1, n).unwrap(), 1, n).unwrap()
}

#[test]
fn assembly() {
    let model = PotentialModel::bernoulli_anderson(0.0);
    let r = sample_realization(&model, 1, 1, 3).unwrap();
    let op = build_operator(&r, 1, 3).unwrap();
    assert_eq!(op.to_dense(), vec![vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]]);
    assert!(build_operator(&r, 0, 3).is_err());
    let diff = sample_realization(&PotentialModel::difference_example(), 2, 1, 200).unwrap();
    let op = build_operator(&diff, 1, 200).unwrap();
    assert!(op.diagonal().iter().all(|v| [-1.0, 0.0, 1.0].contains(v)));
}

#[test]
fn constant_potential_shifts_spectrum() {
    let a = diagonalize(&FiniteVolumeOperator::new(1, vec![0.0; 40]).unwrap()).unwrap();
    let b = diagonalize(&FiniteVolumeOperator::new(1, vec![0.7; 40]).unwrap()).unwrap();
    for (x, y) in a.values().iter().zip(b.values()) {
        assert!((y - x - 0.7).abs() < 1e-12);
    }
}

#[test]
fn invariants_on_random_operators() {
    for seed in 0..5 {
        let op = random_op(seed, 300, 2.5);
        let es = diagonalize(&op).unwrap();
        assert!(es.values().windows(2).all(|w| w[0] <= w[1]));
        let trace: f64 = op.diagonal().iter().sum();
        assert!((es.values().iter().sum::<f64>() - trace).abs() < 1e-8 * 300.0);
        let bound = 2.0 + op.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(es.values().iter().all(|e| e.abs() <= bound + 1e-12));
        assert!(es.max_residual(&op) <= 1e-10 * op.norm_bound());
        assert!(es.max_orthogonality_error() <= 1e-10);
        // Sturm counts agree with the computed spectrum.
        for &x in &[-1.0, 0.3, 2.0] {
            assert_eq!(op.count_below(x), es.values().iter().filter(|e| **e < x).count());
        }
    }
}

#[test]
fn window_matches_full() {
    let op = random_op(7, 400, 1.0);
    let full = diagonalize(&op).unwrap();
    let win = diagonalize_window(&op, -0.5, 0.7).unwrap();
    let range = full.indices_in((-0.5, 0.7));
    assert_eq!(win.len(), range.len());
    for (k, i) in range.enumerate() {
        assert!((win.values()[k] - full.values()[i]).abs() < 1e-12);
        let dot: f64 = win.vector(k).iter().zip(full.vector(i)).map(|(a, b)| a * b).sum();
        assert!((dot.abs() - 1.0).abs() < 1e-8);
    }
    assert!(win.max_residual(&op) <= 1e-10 * op.norm_bound());
    assert!(win.max_orthogonality_error() <= 1e-10);
}

#[test]
fn iteration_cap_is_reported() {
    let op = random_op(3, 100, 2.0);
    assert!(matches!(diagonalize_with(&op, 1), Err(Error::NoConvergence(_))));
}

#[test]
fn decay_fit_edge_cases() {
    let flat = vec![0.1; 100];
    assert!(fit_decay(&flat, 1, DEFAULT_FLOOR).unwrap().beta.abs() < 1e-12);
    let mut delta = vec![0.0; 50];
    delta[20] = 1.0;
    assert!(fit_decay(&delta, 1, DEFAULT_FLOOR).is_err());
    // Ties resolve to the smallest index.
    let tie = vec![0.5, 0.5, 0.5, 0.5];
    assert_eq!(fit_decay(&tie, -3, DEFAULT_FLOOR).unwrap().m_hat, -3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn decay_fit_recovers_rate(rate in 0.05f64..2.0, center in 1usize..100) {
        let psi: Vec<f64> = (1..=100).map(|m| (-rate * (m as f64 - center as f64).abs()).exp()).collect();
        let norm = psi.iter().map(|x| x * x).sum::<f64>().sqrt();
        let psi: Vec<f64> = psi.iter().map(|x| x / norm).collect();
        let fit = fit_decay(&psi, 1, DEFAULT_FLOOR).unwrap();
        prop_assert_eq!(fit.m_hat, center as i64);
        prop_assert!((fit.beta - rate).abs() < 1e-6);
        prop_assert!(fit.r2 > 1.0 - 1e-9);
    }
}

#[test]
fn free_states_are_extended() {
    let es = diagonalize(&FiniteVolumeOperator::new(1, vec![0.0; 400]).unwrap()).unwrap();
    let rep = sule_report(&es, (-1.0, 1.0), 0.1, &DEFAULT_EPS_GRID, DEFAULT_FLOOR);
    assert!(!rep.entries.is_empty());
    assert!(rep.fraction_above_floor < 0.05);
}

#[test]
fn strong_bernoulli_states_decay() {
    let model = PotentialModel::bernoulli_anderson(3.0);
    let r = sample_realization(&model, 11, 1, 1000).unwrap();
    let es = diagonalize(&build_operator(&r, 1, 1000).unwrap()).unwrap();
    let rep = sule_report(&es, (0.5, 1.5), 0.1, &DEFAULT_EPS_GRID, DEFAULT_FLOOR);
    assert!(rep.fraction_above_floor >= 0.95, "{}", rep.fraction_above_floor);
    assert!(sule_report(&es, (9.0, 10.0), 0.1, &DEFAULT_EPS_GRID, DEFAULT_FLOOR).entries.is_empty());
}

#[test]
fn decay_slows_near_exceptional_energy() {
    let model = PotentialModel::difference_example();
    let mean_beta = |j: (f64, f64)| {
        let mut betas = Vec::new();
        for s in 0..6 {
            let r = sample_realization_stream(&model, 4, s, 1, 1500).unwrap();
            let es = diagonalize_window(&build_operator(&r, 1, 1500).unwrap(), j.0, j.1).unwrap();
            let rep = sule_report(&es, j, 0.0, &DEFAULT_EPS_GRID, DEFAULT_FLOOR);
            betas.extend(rep.entries.iter().filter_map(|e| e.fit.as_ref().map(|f| f.beta)));
        }
        betas.iter().sum::<f64>() / betas.len() as f64
    };
    let near = mean_beta((-0.05, 0.05));
    let away = mean_beta((0.4, 0.6));
    assert!(near < away, "near {near} away {away}");
}

#[test]
fn beta_floor_is_positive_for_localized_model() {
    let b = default_beta_floor(&PotentialModel::bernoulli_anderson(3.0), (0.5, 1.5), 1).unwrap();
    assert!(b > 0.05, "{b}");
}
