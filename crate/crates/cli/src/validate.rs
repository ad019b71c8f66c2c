//! Quick invariant suite behind `validate`.

use groupsync::amp::transform_e;
use groupsync::observation::{estimate_typ_norm, likelihood_coefficients, sample_instance};
use groupsync::state_evolution::{se_step, NoiseBank};
use groupsync::{CMat, GroupModel, C64};
use std::sync::Arc;

pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.value <= self.bound
    }
}

fn bessel_ratio(t: f64) -> f64 {
    // I1(2t)/I0(2t) from the power series; terms are (t^2)^m / (m! (m+k)!)
    let series = |k: u32| {
        let mut term = t.powi(k as i32) / (1..=k).map(f64::from).product::<f64>();
        let mut sum = term;
        for m in 1..400 {
            term *= t * t / (m as f64 * (m + k) as f64);
            sum += term;
        }
        sum
    };
    series(1) / series(0)
}

pub fn run_checks() -> groupsync::Result<Vec<Check>> {
    let mut out = Vec::new();
    let groups = [
        GroupModel::cyclic(5, 2)?,
        GroupModel::u1(3, 256)?,
        GroupModel::so3(2, 4096)?,
        groupsync::GroupSpec::Finite { source: "a4".into(), irreps: None }.build()?,
    ];
    for g in &groups {
        out.push(Check { name: format!("orthonormality {}", g.spec().label()), value: g.orthonormality_residual(), bound: 1e-8 });
    }

    let z2 = Arc::new(GroupModel::cyclic(2, 1)?);
    let mut worst = 0.0f64;
    for i in 0..50 {
        let c = -5.0 + 0.2 * i as f64;
        let v = transform_e(&z2, &[CMat::scalar(C64::new(c, 0.0))])?;
        worst = worst.max((v[0][(0, 0)].re - c.tanh()).abs());
    }
    out.push(Check { name: "parity transform vs tanh".into(), value: worst, bound: 1e-12 });

    let u1 = GroupModel::u1(1, 256)?;
    let mut worst = 0.0f64;
    for i in 1..40 {
        let t = 0.1 * i as f64;
        let v = transform_e(&u1, &[CMat::scalar(C64::new(t, 0.0))])?;
        worst = worst.max((v[0][(0, 0)].re - bessel_ratio(t)).abs());
    }
    out.push(Check { name: "circle transform vs Bessel ratio".into(), value: worst, bound: 1e-6 });

    let a = sample_instance(&z2, 400, &[1.5], 3)?;
    let b = sample_instance(&z2, 400, &[1.5], 3)?;
    let same = a.truth == b.truth && a.observations == b.observations;
    out.push(Check { name: "sampling is deterministic".into(), value: if same { 0.0 } else { 1.0 }, bound: 0.0 });

    let typ = estimate_typ_norm(&likelihood_coefficients(&a).mats[0]);
    out.push(Check { name: "typical entry size vs λ²/n".into(), value: (typ / (2.25 / 400.0) - 1.0).abs(), bound: 0.1 });

    let bank = NoiseBank::draw(&groups[0], 1000, 0, "se")?;
    let next = se_step(&[0.0, 0.0], &[2.0, 2.0], &groups[0], &bank)?;
    out.push(Check { name: "zero is a state-evolution fixed point".into(), value: next.iter().cloned().fold(0.0, f64::max), bound: 0.0 });
    Ok(out)
}
