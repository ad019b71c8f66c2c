use groupsync::state_evolution::{
    expected_trace, lemma_a_diagnostics, se_fixed_point, se_step, NoiseBank, SeConfig,
};
use groupsync::GroupModel;
use nalgebra::DMatrix;

/// Nodes and weights for E f(z), z ~ N(0,1), from the Jacobi matrix of the
/// probabilists' Hermite polynomials.
fn gauss_hermite(m: usize) -> Vec<(f64, f64)> {
    let jacobi = DMatrix::from_fn(m, m, |i, j| if i.abs_diff(j) == 1 { (i.max(j) as f64).sqrt() } else { 0.0 });
    let eig = jacobi.symmetric_eigen();
    (0..m).map(|k| (eig.eigenvalues[k], eig.eigenvectors[(0, k)].powi(2))).collect()
}

fn z2_oracle_step(gamma: f64, lambda: f64) -> f64 {
    let e: f64 = gauss_hermite(120).iter().map(|(z, w)| w * (gamma + gamma.sqrt() * z).tanh()).sum();
    lambda * lambda * e
}

fn z2_oracle_fixed_point(lambda: f64) -> f64 {
    let mut g = 1.0;
    for _ in 0..10_000 {
        g = z2_oracle_step(g, lambda);
    }
    g
}

#[test]
fn oracle_sanity() {
    let m1: f64 = gauss_hermite(40).iter().map(|(z, w)| w * z * z).sum();
    assert!((m1 - 1.0).abs() < 1e-12);
}

#[test]
fn zero_is_a_fixed_point() {
    for g in [GroupModel::cyclic(5, 2).unwrap(), GroupModel::so3(1, 512).unwrap(), GroupModel::a4()] {
        let k = g.stored().len();
        let bank = NoiseBank::draw(&g, 100, 0, "se").unwrap();
        assert_eq!(se_step(&vec![0.0; k], &vec![2.0; k], &g, &bank).unwrap(), vec![0.0; k]);
    }
}

#[test]
fn linear_response_at_small_gamma() {
    let groups = [GroupModel::cyclic(2, 1).unwrap(), GroupModel::u1(1, 256).unwrap(), GroupModel::a4(), GroupModel::so3(1, 4096).unwrap()];
    for g in &groups {
        let k = g.stored().len();
        let bank = NoiseBank::draw(g, 100_000, 1, "se").unwrap();
        let lambda = vec![1.3; k];
        let next = se_step(&vec![1e-3; k], &lambda, g, &bank).unwrap();
        for v in next {
            let target = 1.69 * 1e-3;
            assert!((v / target - 1.0).abs() <= 0.05, "{}: {v}", g.spec().label());
        }
    }
}

#[test]
fn parity_step_matches_quadrature() {
    let g = GroupModel::cyclic(2, 1).unwrap();
    let bank = NoiseBank::draw(&g, 20_000, 2, "se").unwrap();
    let (mean, se) = expected_trace(&[4.0], &g, &bank).unwrap()[0];
    let oracle = z2_oracle_step(4.0, 1.0);
    assert!((mean - oracle).abs() <= 3.0 * se, "{mean} ± {se} vs {oracle}");
    let step = se_step(&[4.0], &[2.0], &g, &bank).unwrap()[0];
    assert!((step - 4.0 * mean).abs() < 1e-12);
}

#[test]
fn parity_fixed_point_matches_quadrature() {
    let g = GroupModel::cyclic(2, 1).unwrap();
    let oracle = z2_oracle_fixed_point(1.5);
    let res = se_fixed_point(&[0.05], &[1.5], &g, &SeConfig::default()).unwrap();
    assert!(res.converged);
    assert!((res.fixed_point[0] / oracle - 1.0).abs() <= 0.02, "{:?} vs {oracle}", res.fixed_point);
}

#[test]
fn below_threshold_collapses_to_zero() {
    for g in [GroupModel::cyclic(2, 1).unwrap(), GroupModel::u1(1, 256).unwrap()] {
        let res = se_fixed_point(&[0.5], &[0.9], &g, &SeConfig::default()).unwrap();
        assert!(res.fixed_point[0] < 1e-4, "{}: {:?}", g.spec().label(), res.fixed_point);
    }
}

#[test]
fn escape_from_small_start_is_monotone() {
    let cfg = SeConfig::default();
    for g in [GroupModel::cyclic(2, 1).unwrap(), GroupModel::u1(1, 256).unwrap()] {
        for lambda in [1.2, 1.5, 2.0] {
            let res = se_fixed_point(&[1e-3], &[lambda], &g, &cfg).unwrap();
            let fp = res.fixed_point[0];
            assert!(fp > 0.1);
            for w in res.trajectory.windows(2) {
                let (a, b) = (w[0][0], w[1][0]);
                assert!(b >= a || (a - fp).abs() <= 10.0 * cfg.tol, "{}: λ={lambda} {a} → {b}", g.spec().label());
            }
        }
    }
}

#[test]
fn overlap_formulas_agree() {
    let groups = [GroupModel::cyclic(5, 2).unwrap(), GroupModel::u1(2, 128).unwrap(), GroupModel::so3(1, 2048).unwrap(), GroupModel::a4()];
    for g in &groups {
        for gamma in [0.1, 1.0, 10.0] {
            let k = g.stored().len();
            for diag in lemma_a_diagnostics(&vec![gamma; k], g, 10_000, 3).unwrap() {
                for p in &diag.pairs {
                    assert!(p.diff.abs() <= 4.0 * p.se, "{} γ={gamma} irrep {}: {p:?}", g.spec().label(), diag.irrep);
                }
            }
        }
    }
}

#[test]
fn parity_overlap_matches_quadrature() {
    let g = GroupModel::cyclic(2, 1).unwrap();
    let oracle = z2_oracle_step(1.0, 1.0);
    let diag = &lemma_a_diagnostics(&[1.0], &g, 10_000, 4).unwrap()[0];
    for f in [&diag.formulas[0], &diag.formulas[2]] {
        assert!((f.a.re - oracle).abs() <= 3.0 * f.a_se, "{} ± {} vs {oracle}", f.a.re, f.a_se);
    }
}

#[test]
fn rotation_overlaps_are_scalar() {
    let g = GroupModel::so3(1, 2048).unwrap();
    let diag = &lemma_a_diagnostics(&[1.0], &g, 10_000, 5).unwrap()[0];
    for f in &diag.formulas {
        assert!(f.off_diagonal <= 5.0 * f.off_diagonal_se, "{} vs {}", f.off_diagonal, f.off_diagonal_se);
        assert!(f.a.im.abs() <= 3.0 * f.a_im_se.max(1e-15));
    }
}
