use groupsync::free_energy::{classify_phase, global_minimum, Evaluator, Phase, ScanConfig};
use groupsync::state_evolution::SeConfig;
use groupsync::{GroupModel, GroupSpec};

fn a4_with(irreps: Vec<usize>) -> GroupModel {
    GroupSpec::Finite { source: "a4".into(), irreps: Some(irreps) }.build().unwrap()
}

#[test]
fn tetrahedral_minimum_moves_off_origin() {
    let g = GroupModel::a4();
    let ev = Evaluator::new(&g, 10_000, 1).unwrap();
    let scan = ScanConfig { gamma_max: Some(3.0), ..ScanConfig::default() };
    let low = global_minimum(&ev, &[0.8], &scan, &SeConfig::default()).unwrap();
    assert_eq!(low, vec![0.0]);
    let high = global_minimum(&ev, &[1.1], &scan, &SeConfig::default()).unwrap();
    assert!(high[0] > 0.5, "{high:?}");
}

#[test]
fn circle_minimum_grows_continuously_from_threshold() {
    let g = GroupModel::u1(1, 256).unwrap();
    let scan = ScanConfig::default();
    let se = SeConfig::default();
    let below = classify_phase(&[0.95], &g, &scan, &se).unwrap();
    assert_eq!(below.global_min, vec![0.0]);
    assert_eq!(below.phase, Phase::Impossible);
    let mut last = 0.0;
    for lambda in [1.2, 1.5, 2.0] {
        let r = classify_phase(&[lambda], &g, &scan, &se).unwrap();
        assert_eq!(r.phase, Phase::Easy, "λ={lambda}");
        let m = r.global_min[0];
        assert!(m > last, "λ={lambda}: {m} after {last}");
        // the minimizer is the fixed point reached from a small start
        assert!((m - r.amp_min[0]).abs() <= scan.step, "λ={lambda}: {m} vs {:?}", r.amp_min);
        last = m;
    }
}

#[test]
fn conjugate_partners_give_the_same_landscape() {
    let first = a4_with(vec![0]);
    let second = a4_with(vec![1]);
    let a = Evaluator::new(&first, 20_000, 2).unwrap();
    let b = Evaluator::new(&second, 20_000, 3).unwrap();
    for gamma in [0.3, 1.0, 2.5] {
        let (fa, sa) = a.free_energy(&[gamma], &[1.2]).unwrap();
        let (fb, sb) = b.free_energy(&[gamma], &[1.2]).unwrap();
        assert!((fa - fb).abs() <= 3.0 * sa.hypot(sb), "γ={gamma}: {fa} ± {sa} vs {fb} ± {sb}");
    }
}

/// γ = λ² E tanh(γ + √γ z) solved with 120-point Gauss–Hermite quadrature.
fn parity_fixed_point(lambda: f64) -> f64 {
    let m = 120;
    let jacobi = nalgebra::DMatrix::from_fn(m, m, |i, j| if i.abs_diff(j) == 1 { (i.max(j) as f64).sqrt() } else { 0.0 });
    let eig = jacobi.symmetric_eigen();
    let mut g: f64 = 1.0;
    for _ in 0..10_000 {
        let e: f64 = (0..m).map(|k| eig.eigenvectors[(0, k)].powi(2) * (g + g.sqrt() * eig.eigenvalues[k]).tanh()).sum();
        g = lambda * lambda * e;
    }
    g
}

#[test]
fn gradient_vanishes_at_fixed_point() {
    let g = GroupModel::cyclic(2, 1).unwrap();
    let fp = [parity_fixed_point(1.5)];
    let ev = Evaluator::new(&g, 20_000, 4).unwrap();
    let (d, se) = ev.gradient(&fp, &[1.5], 0.05).unwrap()[0];
    assert!(d.abs() <= 3.0 * se, "{d} ± {se}");
    let (away, away_se) = ev.gradient(&[fp[0] + 0.5], &[1.5], 0.05).unwrap()[0];
    assert!(away > 3.0 * away_se);
}

#[test]
fn marginal_origin_is_not_mistaken_for_a_fixed_point() {
    // at λ = 1 the origin is marginal and SE can settle on a shallow point no deeper than it
    let g = GroupSpec::Cyclic { order: 6, frequencies: 2 }.build().unwrap();
    let scan = ScanConfig { seed: 10, ..ScanConfig::default() };
    let r = classify_phase(&[1.0, 1.0], &g, &scan, &SeConfig::default()).unwrap();
    assert_eq!(r.global_min, vec![0.0, 0.0], "{r:?}");
    assert!(r.margin > -3.0 * r.margin_se);
}
