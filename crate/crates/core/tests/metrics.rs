use groupsync::metrics::{correlation_block, correlation_scalar};
use groupsync::rng::stream;
use groupsync::{GroupElement, GroupModel, C64};

fn draw(g: &GroupModel, n: usize, seed: u64, label: &str) -> Vec<GroupElement> {
    let mut rng = stream(seed, label, 0);
    (0..n).map(|_| g.haar_sample(&mut rng)).collect()
}

#[test]
fn independent_estimates_score_near_zero() {
    let z2 = GroupModel::cyclic(2, 1).unwrap();
    let so3 = GroupModel::so3(1, 512).unwrap();
    for seed in 0..100 {
        let c = correlation_block(&draw(&z2, 1000, seed, "x"), &draw(&z2, 1000, seed, "y"), &z2, 0).unwrap();
        assert!(c.correlation <= 0.1, "ℤ/2 seed {seed}: {}", c.correlation);
        let c = correlation_block(&draw(&so3, 100, seed, "x"), &draw(&so3, 100, seed, "y"), &so3, 0).unwrap();
        assert!(c.correlation <= 0.2, "SO(3) seed {seed}: {}", c.correlation);
    }
}

#[test]
fn score_ignores_global_shift() {
    let so3 = GroupModel::so3(1, 512).unwrap();
    let x = draw(&so3, 100, 1, "x");
    let noisy = draw(&so3, 100, 1, "y");
    let est: Vec<_> = x.iter().zip(&noisy).enumerate().map(|(u, (a, b))| if u % 3 == 0 { b.clone() } else { a.clone() }).collect();
    let h = so3.haar_sample(&mut stream(1, "h", 0));
    let shifted: Vec<_> = est.iter().map(|g| so3.compose(g, &h)).collect();
    let a = correlation_block(&x, &est, &so3, 0).unwrap().correlation;
    let b = correlation_block(&x, &shifted, &so3, 0).unwrap().correlation;
    assert!((a - b).abs() <= 1e-12);
    assert!((correlation_block(&x, &x, &so3, 0).unwrap().correlation - 1.0).abs() <= 1e-12);
}

#[test]
fn circle_block_score_is_scalar_score() {
    let u1 = GroupModel::u1(1, 64).unwrap();
    let x = draw(&u1, 500, 2, "x");
    let y = draw(&u1, 500, 2, "y");
    let phase = |g: &GroupElement| match g {
        GroupElement::Angle(t) => C64::from_polar(1.0, *t),
        _ => unreachable!(),
    };
    let xs: Vec<C64> = x.iter().map(phase).collect();
    let ys: Vec<C64> = y.iter().map(phase).collect();
    let block = correlation_block(&x, &y, &u1, 0).unwrap().correlation;
    let scalar = correlation_scalar(&xs, &ys).unwrap().correlation;
    assert!((block - scalar).abs() <= 1e-12);
}
