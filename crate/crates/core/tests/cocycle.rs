use cocycle_lab::cocycle::{
    check_b2_b3, log_k_of_n, lyapunov_sweep, lyapunov_sweep_checkpoints, perturbation_bound_check, product,
    product_with_derivative, step_inverse, step_matrix, transfer_matrix, B2B3Options, Direction,
};
use cocycle_lab::model::{sample_realization, PotentialModel};
use cocycle_lab::Mat2;
use num_complex::Complex64;
use proptest::prelude::*;

fn naive(v: &[f64], e: f64) -> Mat2 {
    v.iter().fold(Mat2::IDENTITY, |acc, &x| step_matrix(x, e) * acc)
}

fn rel_diff(a: &Mat2, b: &Mat2) -> f64 {
    a.max_abs_diff(b) / b.frobenius().max(1.0)
}

fn potentials() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, 1..40)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn product_matches_naive(v in potentials(), e in -4.0f64..4.0) {
        let p = product(&v, e, Direction::Forward);
        prop_assert!(rel_diff(&p.matrix(), &naive(&v, e)) < 1e-10);
    }

    #[test]
    fn determinant_is_one(v in potentials(), e in -4.0f64..4.0) {
        let p = product(&v, e, Direction::Forward);
        // det(unit) = 1/‖T‖_F² carries an absolute error of a few ulps.
        let scale = (2.0 * p.log_norm()).exp();
        prop_assert!((p.determinant() - 1.0).abs() < 1e-13 * scale.max(1.0));
        prop_assert!(p.log_operator_norm() >= -1e-12);
    }

    #[test]
    fn cocycle_identity(v in potentials(), w in potentials(), e in -4.0f64..4.0) {
        let joined: Vec<f64> = v.iter().chain(&w).copied().collect();
        let whole = product(&joined, e, Direction::Forward);
        let split = product(&w, e, Direction::Forward).compose(&product(&v, e, Direction::Forward));
        prop_assert!(rel_diff(&split.unit(), &whole.unit()) < 1e-10);
        prop_assert!((split.log_norm() - whole.log_norm()).abs() < 1e-9 * (1.0 + whole.log_norm().abs()));
    }

    #[test]
    fn backward_inverts_forward(v in potentials(), e in -4.0f64..4.0) {
        let f = product(&v, e, Direction::Forward).matrix();
        let b = product(&v, e, Direction::Backward).matrix();
        prop_assert!(rel_diff(&(b * f), &Mat2::IDENTITY) < 1e-8 * f.frobenius().powi(2).max(1.0));
    }

    #[test]
    fn step_inverse_is_inverse(v in -5.0f64..5.0, e in -5.0f64..5.0) {
        prop_assert!(rel_diff(&(step_inverse(v, e) * step_matrix(v, e)), &Mat2::IDENTITY) < 1e-14);
    }

    #[test]
    fn derivative_matches_finite_difference(v in prop::collection::vec(-2.0f64..2.0, 1..15), e in -3.0f64..3.0) {
        let (_, d) = product_with_derivative(&v, e);
        let h = 1e-6;
        let fd = naive(&v, e + h).add(&naive(&v, e - h).scale(-1.0)).scale(0.5 / h);
        prop_assert!(rel_diff(&d.matrix(), &fd) < 1e-5 * fd.frobenius().max(1.0));
    }
}

#[test]
fn negative_index_transfer_matrix() {
    let model = PotentialModel::bernoulli_anderson(1.5);
    let r = sample_realization(&model, 1, -30, 30).unwrap();
    let e = 0.3;
    // T_{-10} = (Π_0 ⋯ Π_{-9})^{-1}.
    let tm = transfer_matrix(&r, e, -10).unwrap().matrix();
    let direct = naive(r.v_range(-9, 0).unwrap(), e).inverse();
    assert!(rel_diff(&tm, &direct) < 1e-10);
    assert!(transfer_matrix(&r, e, 40).is_err());
}

#[test]
fn lyapunov_deterministic_and_positive() {
    let model = PotentialModel::bernoulli_anderson(2.0);
    let a = lyapunov_sweep(&model, &[-1.0, 0.5, 2.0], 5000, 8, 3).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let b = pool.install(|| lyapunov_sweep(&model, &[-1.0, 0.5, 2.0], 5000, 8, 3).unwrap());
    assert_eq!(a, b);
    assert!(a.iter().all(|x| x.mean > 0.05));
    let cps = lyapunov_sweep_checkpoints(&model, &[0.5], &[1000, 5000], 8, 3).unwrap();
    assert_eq!(cps[1].mean, a[1].mean);
    assert!(lyapunov_sweep_checkpoints(&model, &[0.5], &[100, 100], 8, 3).is_err());
}

#[test]
fn free_lyapunov_vanishes_inside_band() {
    let model = PotentialModel::bernoulli_anderson(0.0);
    let est = lyapunov_sweep(&model, &[0.0, 1.0, 3.0], 20_000, 1, 1).unwrap();
    assert!(est[0].mean < 1e-3 && est[1].mean < 1e-3);
    // Outside the band: cosh γ = E/2.
    assert!((est[2].mean - (1.5f64).acosh()).abs() < 1e-3);
}

#[test]
fn b2_b3_monotone() {
    let model = PotentialModel::difference_example();
    let rep = check_b2_b3(&model, (-1.0, 1.0), 16, 2, &B2B3Options::default()).unwrap();
    assert!(rep.monotone());
    assert!(rep.m_hat >= 1.0);
    assert_eq!(rep.block_len, 20);
}

#[test]
fn perturbation_bound_holds() {
    let model = PotentialModel::bernoulli_anderson(1.0);
    for s in 0..20 {
        let r = sample_realization(&model, s, -40, 40).unwrap();
        let rep = perturbation_bound_check(&r, 0.7, 40, Complex64::new(0.05, 0.03)).unwrap();
        assert!(rep.holds, "{rep:?}");
        assert!(rep.log_k >= 0.0);
    }
    let r = sample_realization(&model, 0, -5, 5).unwrap();
    assert!(log_k_of_n(&r, 0.0, 6).is_err());
}

#[test]
fn perturbation_at_zero_matches_transfer_matrix() {
    let model = PotentialModel::difference_example();
    for s in 0..10 {
        let r = sample_realization(&model, s, -25, 25).unwrap();
        let rep = perturbation_bound_check(&r, 1.3, 25, Complex64::new(0.0, 0.0)).unwrap();
        let direct = transfer_matrix(&r, 1.3, rep.worst_n).unwrap().log_operator_norm();
        assert!((rep.log_lhs - direct).abs() < 1e-9, "{rep:?} vs {direct}");
    }
}
