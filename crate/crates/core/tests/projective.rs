use cocycle_lab::cocycle::step_matrix;
use cocycle_lab::model::{admissible_family, support_of_potential_vector, PotentialModel};
use cocycle_lab::projective::{
    certificate_radius, chart_step, common_image_points, common_invariant_pair, exceptional_energy_scan, fixed_points,
    golden_section, mobius_apply, FrozenFamilies, orbit_iterate, sym2, verify_no_common_point, ChartValue, CommonPairs, CommonPoints,
    ProjectivePoint, QuadraticForm, ScanOptions, Verdict,
};
use cocycle_lab::Mat2;
use num_complex::Complex64;
use proptest::prelude::*;

fn mat() -> impl Strategy<Value = Mat2> {
    (-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0)
        .prop_filter("invertible", |(a, b, c, d)| (a * d - b * c).abs() > 0.1)
        .prop_map(|(a, b, c, d)| Mat2::new(a, b, c, d))
}

fn point() -> impl Strategy<Value = ProjectivePoint> {
    (-3.0f64..3.0, -3.0f64..3.0).prop_map(|(x, y)| ProjectivePoint::from_chart(Complex64::new(x, y)))
}

fn mat_mul3(a: [[f64; 3]; 3], b: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

fn rotation(t: f64) -> Mat2 {
    Mat2::new(t.cos(), -t.sin(), t.sin(), t.cos())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn mobius_is_a_group_action(a in mat(), b in mat(), p in point()) {
        let lhs = mobius_apply(&(a * b), &p);
        let rhs = mobius_apply(&a, &mobius_apply(&b, &p));
        prop_assert!(lhs.distance(&rhs) < 1e-10);
    }

    #[test]
    fn sym2_is_multiplicative(a in mat(), b in mat()) {
        let lhs = sym2(&(a * b));
        let rhs = mat_mul3(sym2(&a), sym2(&b));
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!((lhs[i][j] - rhs[i][j]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn form_transform_moves_roots(a in mat(), p in point(), q in point()) {
        let form = QuadraticForm::from_pair(&p, &q).transform(&a);
        let roots = form.roots();
        let (pa, qa) = (mobius_apply(&a, &p), mobius_apply(&a, &q));
        let straight = roots[0].distance(&pa).max(roots[1].distance(&qa));
        let crossed = roots[0].distance(&qa).max(roots[1].distance(&pa));
        prop_assert!(straight.min(crossed) < 1e-6);
    }

    #[test]
    fn chart_step_matches_mobius(v in -3.0f64..3.0, e in -3.0f64..3.0, p in point()) {
        let via_chart = chart_step(v, e, ChartValue::from_point(&p)).to_point();
        let via_mobius = mobius_apply(&step_matrix(v, e), &p);
        prop_assert!(via_chart.distance(&via_mobius) < 1e-9);
    }

    #[test]
    fn fixed_points_are_fixed(a in mat()) {
        if let Some(fp) = fixed_points(&a) {
            for p in fp {
                prop_assert!(mobius_apply(&a, &p).distance(&p) < 1e-7);
            }
        }
    }

    #[test]
    fn planted_real_point_is_found(a in 0.0f64..3.1, b in 0.0f64..3.1, l in prop::collection::vec((0.5f64..2.0, 0.5f64..2.0, -1.0f64..1.0), 3)) {
        let (mp, mq) = (rotation(a), rotation(b));
        let ms: Vec<Mat2> = l.iter().map(|&(x, y, z)| mq * Mat2::new(x, z, 0.0, -y) * mp.inverse()).collect();
        let p = ProjectivePoint::real(a.cos(), a.sin()).unwrap();
        match common_image_points(&ms).unwrap() {
            CommonPoints::Points(v) => prop_assert!(v.iter().any(|(x, _)| x.distance(&p) < 1e-6)),
            CommonPoints::AllPoints => prop_assert!(false, "unexpected AllPoints"),
        }
    }
}

#[test]
fn orbit_consistency() {
    let v = [0.5, -1.0, 0.0, 2.0, 1.0];
    let orbit = orbit_iterate(&v, 0.3, ChartValue::Finite(Complex64::new(0.2, 0.1)));
    assert_eq!(orbit.len(), v.len() + 1);
    let mut p = orbit[0].z.to_point();
    for (i, &x) in v.iter().enumerate() {
        p = mobius_apply(&step_matrix(x, 0.3), &p);
        assert!(orbit[i + 1].z.to_point().distance(&p) < 1e-12);
    }
    // The pole maps to infinity and infinity to zero.
    assert_eq!(chart_step(1.0, 1.5, ChartValue::Finite(Complex64::new(0.5, 0.0))), ChartValue::Infinity);
    assert_eq!(chart_step(1.0, 1.5, ChartValue::Infinity), ChartValue::Finite(Complex64::new(0.0, 0.0)));
}

#[test]
fn conjugated_rotations_share_a_pair() {
    let b = Mat2::new(1.0, 0.3, -0.2, 0.8);
    let ms: Vec<Mat2> = [0.4, 1.1, 2.0].iter().map(|&t| b * rotation(t) * b.inverse()).collect();
    let points = common_image_points(&ms).unwrap();
    // b(i) and its conjugate are fixed by every map.
    assert!(matches!(&points, CommonPoints::Points(v) if v.len() == 2));
    assert!(matches!(common_invariant_pair(&ms).unwrap(), CommonPairs::Pairs(v) if !v.is_empty()));
}

#[test]
fn identical_maps_share_everything() {
    let a = Mat2::new(1.0, 2.0, 0.5, 3.0);
    assert_eq!(common_image_points(&[a, a.scale(2.0)]).unwrap(), CommonPoints::AllPoints);
    assert!(common_image_points(&[a]).is_err());
}

#[test]
fn generic_triple_has_no_common_point() {
    let ms = [Mat2::new(1.0, 2.0, 0.5, 3.0), Mat2::new(-1.0, 0.3, 0.7, 0.2), Mat2::new(0.4, -1.2, 1.5, 0.9)];
    assert!(common_image_points(&ms).unwrap().is_empty());
    assert!(common_invariant_pair(&ms).unwrap().is_empty());
}

#[test]
fn certificate_formula() {
    let vs = vec![
        vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        vec![1.0, 0.0, 0.0, 0.0, 0.0, 1.0],
        vec![0.5, 0.0, 0.0, 0.0, 0.0, -1.0],
    ];
    let c = certificate_radius(&vs, 3).unwrap();
    // Smallest end gap is 0.5, so ε = 1/6 and r₀ = 1 + max|v| + 12.
    assert!((c.epsilon_raw - 0.5 / 3.0).abs() < 1e-15);
    assert!((c.radius - 14.0).abs() < 1e-12);
    assert!(certificate_radius(&vs[..2], 3).is_err());
    // Pairs that agree before i0 violate the support condition.
    let bad = vec![vs[0].clone(), vs[1].clone(), vec![0.0, 0.0, 0.0, 0.0, 0.0, 2.0]];
    assert!(certificate_radius(&bad, 3).is_err());
}

#[test]
fn difference_model_has_structure_only_at_exceptional_energy() {
    let model = PotentialModel::difference_example();
    let fam = FrozenFamilies::build(&model, 16, 10, 8).unwrap();
    assert!(!fam.degenerate());
    for family in &fam.families {
        assert!(family.len() >= 5);
        assert!(matches!(verify_no_common_point(family, 0.0).unwrap(), Verdict::Structures { .. }));
        assert_eq!(verify_no_common_point(family, 0.5).unwrap(), Verdict::NoCommonStructure { exact: true });
    }
    assert!(fam.residual(0.0) < 1e-9 && fam.residual(0.5) > 1e-3);
    // Without frozen boundary letters the family has no shared structure at E = 0.
    let support = support_of_potential_vector(&model, 16).unwrap();
    let free = admissible_family(&support, 10, 8).unwrap();
    assert!(verify_no_common_point(&free, 0.0).unwrap().no_common_structure());
    assert_eq!(verify_no_common_point(&free[..1], 0.5).unwrap(), Verdict::Trivial);
}

#[test]
fn scan_refines_root_five() {
    let model = PotentialModel::difference_example();
    let energies: Vec<f64> = (0..8).map(|i| 2.20 + 0.01 * i as f64).collect();
    let rep = exceptional_energy_scan(&model, &energies, &ScanOptions::default()).unwrap();
    assert!(!rep.degenerate);
    assert!(rep.candidates.iter().any(|e| (e - 5f64.sqrt()).abs() < 1e-6), "{:?}", rep.candidates);
}

#[test]
fn golden_section_minimizes_parabola() {
    let (x, fx) = golden_section(|x| (x - 0.3).powi(2), -1.0, 2.0, 1e-10);
    assert!((x - 0.3).abs() < 1e-9);
    assert!(fx < 1e-18);
}
