use groupsync::amp::{transform_e, transform_e_expanded};
use groupsync::observation::gaussian_noise_block;
use groupsync::rng::{normal, stream};
use groupsync::{CMat, GroupElement, GroupModel, C64};
use proptest::prelude::*;

fn bessel_i(k: u32, x: f64) -> f64 {
    let mut term = (x / 2.0).powi(k as i32) / (1..=k).map(f64::from).product::<f64>();
    let mut sum = term;
    for m in 1..300 {
        term *= (x / 2.0).powi(2) / (m as f64 * (m + k) as f64);
        sum += term;
        if term < sum * 1e-18 {
            break;
        }
    }
    sum
}

fn random_coefficients(g: &GroupModel, scale: f64, seed: u64) -> Vec<CMat> {
    let mut rng = stream(seed, "coeff", 0);
    g.stored_descriptors()
        .map(|d| gaussian_noise_block(d.rep_type, d.dim, &mut rng).unwrap().scale(scale))
        .collect()
}

#[test]
fn parity_transform_is_tanh() {
    let g = GroupModel::cyclic(2, 1).unwrap();
    let mut rng = stream(7, "tanh", 0);
    for _ in 0..100 {
        let c = 3.0 * normal(&mut rng);
        let v = transform_e(&g, &[CMat::scalar(C64::new(c, 0.0))]).unwrap();
        assert!((v[0][(0, 0)].re - c.tanh()).abs() <= 1e-12, "c = {c}");
        assert_eq!(v[0][(0, 0)].im, 0.0);
    }
}

#[test]
fn circle_transform_is_bessel_ratio() {
    let g = GroupModel::u1(1, 256).unwrap();
    let mut rng = stream(8, "bessel", 0);
    for _ in 0..100 {
        let c = C64::new(normal(&mut rng), normal(&mut rng));
        let v = transform_e(&g, &[CMat::scalar(c)]).unwrap()[0][(0, 0)];
        let t = c.norm();
        let oracle = C64::from_polar(bessel_i(1, 2.0 * t) / bessel_i(0, 2.0 * t), c.arg());
        assert!((v - oracle).norm() <= 1e-6, "c = {c}: {v} vs {oracle}");
    }
}

/// Σ_c ∂ℰ_cb/∂C_cf = (dI − ℰ*ℰ)_fb, by central differences on the transform
/// that treats every irrep (including conjugate partners) as its own input.
fn jacobian_error(g: &GroupModel, seed: u64) -> f64 {
    let stored = random_coefficients(g, 0.7, seed);
    let mut full: Vec<CMat> = Vec::new();
    for d in g.irreps() {
        let pos = g.stored_position(d.id).unwrap();
        let c = &stored[pos];
        full.push(if g.stored()[pos] == d.id { c.clone() } else { c.conj() });
    }
    let e = transform_e_expanded(g, &full).unwrap();
    let h = 1e-5;
    let mut worst = 0.0f64;
    for (r, d) in g.irreps().iter().enumerate() {
        let dim = d.dim;
        let target = &CMat::identity(dim).scale(dim as f64) - &e[r].adjoint().matmul(&e[r]);
        for f in 0..dim {
            for b in 0..dim {
                let mut sum = C64::new(0.0, 0.0);
                for c in 0..dim {
                    let mut up = full.clone();
                    let mut down = full.clone();
                    up[r][(c, f)] += h;
                    down[r][(c, f)] -= h;
                    let eu = transform_e_expanded(g, &up).unwrap();
                    let ed = transform_e_expanded(g, &down).unwrap();
                    sum += (eu[r][(c, b)] - ed[r][(c, b)]) / (2.0 * h);
                }
                worst = worst.max((sum - target[(f, b)]).norm());
            }
        }
    }
    worst
}

#[test]
fn jacobian_identity() {
    let groups = [
        GroupModel::cyclic(3, 1).unwrap(),
        GroupModel::u1(2, 256).unwrap(),
        GroupModel::so3(1, 4096).unwrap(),
    ];
    for g in &groups {
        let worst = (0..20).map(|s| jacobian_error(g, s)).fold(0.0, f64::max);
        assert!(worst <= 1e-4, "{}: {worst}", g.spec().label());
    }
}

fn translated(g: &GroupModel, h: &GroupElement, c: &[CMat]) -> Vec<CMat> {
    c.iter()
        .zip(g.stored())
        .map(|(b, &id)| g.irrep_evaluate(id, h).unwrap().matmul(b))
        .collect()
}

#[test]
fn equivariance_on_finite_and_circle_grids() {
    let q8 = groupsync::groups::FiniteGroup::parse(include_str!("data/q8.group")).unwrap();
    let spec = groupsync::GroupSpec::Finite { source: "q8".into(), irreps: None };
    let groups = [
        GroupModel::a4(),
        GroupModel::cyclic(7, 3).unwrap(),
        GroupModel::u1(3, 128).unwrap(),
        GroupModel::finite(std::sync::Arc::new(q8), None, spec).unwrap(),
    ];
    for g in &groups {
        for seed in 0..10 {
            let c = random_coefficients(g, 1.0, seed);
            let h = g.nodes()[(seed as usize * 5 + 3) % g.nodes().len()].clone();
            let lhs = transform_e(g, &translated(g, &h, &c)).unwrap();
            let rhs = translated(g, &h, &transform_e(g, &c).unwrap());
            for (a, b) in lhs.iter().zip(&rhs) {
                assert!(a.max_abs_diff(b) < 1e-12, "{}", g.spec().label());
            }
        }
    }
}

#[test]
fn rotation_equivariance_within_quadrature_error() {
    let g = GroupModel::so3(2, 4096).unwrap();
    for seed in 0..5 {
        let c = random_coefficients(&g, 0.5, seed);
        let h = g.haar_sample(&mut stream(seed, "h", 0));
        let lhs = transform_e(&g, &translated(&g, &h, &c)).unwrap();
        let rhs = translated(&g, &h, &transform_e(&g, &c).unwrap());
        for (a, b) in lhs.iter().zip(&rhs) {
            assert!(a.max_abs_diff(b) < 1e-3);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn outputs_keep_type_and_norm(seed in any::<u64>(), scale in 0.0f64..4.0, which in 0usize..4) {
        let g = match which {
            0 => GroupModel::cyclic(6, 3).unwrap(),
            1 => GroupModel::u1(2, 64).unwrap(),
            2 => GroupModel::a4(),
            _ => GroupModel::so3(2, 1024).unwrap(),
        };
        let c = random_coefficients(&g, scale, seed);
        let v = transform_e(&g, &c).unwrap();
        for (b, d) in v.iter().zip(g.stored_descriptors()) {
            prop_assert!(b.spectral_norm() <= (d.dim as f64).sqrt() + 1e-9);
            if d.rep_type == groupsync::RepType::Real {
                prop_assert!(b.max_imag() < 1e-12);
            }
        }
    }

    #[test]
    fn max_shift_handles_huge_inputs(c in -1e6f64..1e6) {
        let g = GroupModel::cyclic(2, 1).unwrap();
        let v = transform_e(&g, &[CMat::scalar(C64::new(c, 0.0))]).unwrap();
        prop_assert!(v[0][(0, 0)].re.is_finite());
        prop_assert!((v[0][(0, 0)].re - c.tanh()).abs() < 1e-12);
    }
}
