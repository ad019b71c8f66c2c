//! Comparison estimators: spectral, projected power and soft-threshold power iteration.

use crate::amp::{self, AmpConfig, Estimate, EstimateMeta, Stacked};
use crate::error::{Error, Result};
use crate::groups::{GroupElement, GroupKind, GroupModel, IrrepLabel, RepType};
use crate::linalg::{orthonormalize_columns, project_to_so3, CMat, C64, ZERO};
use crate::observation::{likelihood_coefficients, BlockMatrix, SyncInstance};
use crate::rng::{complex_normal, normal, stream};
use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Spectral,
    ProjectedPower,
    SoftThreshold,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Spectral => "spectral",
            Method::ProjectedPower => "projected-power",
            Method::SoftThreshold => "soft-threshold",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub method: Method,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
}

impl BaselineConfig {
    pub fn new(method: Method) -> Self {
        BaselineConfig { method, max_iters: 500, tol: 1e-8, seed: 0 }
    }
}

/// Runs the configured baseline on the primary irrep of an instance.
pub fn run_baseline(instance: &SyncInstance, config: &BaselineConfig) -> Result<Estimate> {
    let group = &instance.group;
    let id = group.primary();
    match config.method {
        Method::Spectral => spectral_estimate(&instance.observations[0], group, id, config),
        Method::ProjectedPower => projected_power(&instance.observations[0], group, config),
        Method::SoftThreshold => {
            let y = likelihood_coefficients(instance);
            soft_threshold_power(&y, config)
        }
    }
}

/// Top d-dimensional invariant subspace of M by block power iteration,
/// rounded per vertex to the nearest group element.
pub fn spectral_estimate(m: &BlockMatrix, group: &GroupModel, irrep: usize, config: &BaselineConfig) -> Result<Estimate> {
    let desc = group.irrep(irrep)?;
    let d = desc.dim;
    if m.block_dim() != d {
        return Err(Error::Shape(format!("observation has blocks of size {}, irrep {} has {d}", m.block_dim(), desc.name())));
    }
    let n = m.n();
    let rows = n * d;
    let mut rng = stream(config.seed, "spectral", 0);
    let real = desc.rep_type == RepType::Real && m.is_real();
    let mut v: Vec<C64> = (0..rows * d)
        .map(|_| if real { C64::new(normal(&mut rng), 0.0) } else { complex_normal(&mut rng) })
        .collect();
    orthonormalize_columns(&mut v, rows, d);
    let mut meta = EstimateMeta::default();
    for _ in 0..config.max_iters {
        let mut w = m.mul_stacked(&v, d);
        if !orthonormalize_columns(&mut w, rows, d) {
            return Err(Error::Numerical("power iteration collapsed".into()));
        }
        // distance between successive subspaces: ‖W − V V* W‖_F
        let overlap = gram(&v, &w, rows, d);
        let mut change = 0.0;
        for i in 0..rows {
            for c in 0..d {
                let proj: C64 = (0..d).map(|k| v[i * d + k] * overlap[k * d + c]).sum();
                change += (w[i * d + c] - proj).norm_sqr();
            }
        }
        let change = change.sqrt();
        meta.residuals.push(change);
        meta.iterations += 1;
        v = w;
        if change < config.tol {
            meta.converged = true;
            break;
        }
    }
    let mut stacked = Stacked { n, d, data: v };
    if group.kind() == &GroupKind::SO3 || (real && d > 1) {
        fix_orientation(&mut stacked);
    }
    let rounded = (0..n).map(|u| round_block(group, irrep, &stacked.block(u))).collect::<Result<Vec<_>>>()?;
    Ok(Estimate { posteriors: vec![stacked], rounded, meta })
}

/// V* W for two (rows × d) blocks.
fn gram(v: &[C64], w: &[C64], rows: usize, d: usize) -> Vec<C64> {
    let mut g = vec![ZERO; d * d];
    for i in 0..rows {
        for a in 0..d {
            let va = v[i * d + a].conj();
            for b in 0..d {
                g[a * d + b] += va * w[i * d + b];
            }
        }
    }
    g
}

/// A real orthonormal basis is fixed only up to O(d); flip one column when
/// the blocks are mostly reflections.
fn fix_orientation(v: &mut Stacked) {
    let total: f64 = (0..v.n).map(|u| det_real(&v.block(u))).sum();
    if total < 0.0 {
        let d = v.d;
        for i in 0..v.n * d {
            v.data[i * d + d - 1] = -v.data[i * d + d - 1];
        }
    }
}

fn det_real(b: &CMat) -> f64 {
    b.real_part().determinant()
}

/// Rounds a d×d block: polar projection for SO(3), otherwise the quadrature
/// node nearest in Frobenius norm (U(1) keeps the exact phase).
fn round_block(group: &GroupModel, irrep: usize, b: &CMat) -> Result<GroupElement> {
    match group.kind() {
        GroupKind::SO3 if b.rows() == 3 => {
            let r = b.real_part();
            let q = project_to_so3(&Matrix3::from_fn(|i, j| r[(i, j)]));
            Ok(GroupElement::from_rotation(&q))
        }
        GroupKind::U1 if group.irrep(irrep)?.label == IrrepLabel::Frequency(1) => {
            Ok(GroupElement::Angle(b[(0, 0)].arg().rem_euclid(std::f64::consts::TAU)))
        }
        _ => {
            let pos = group.stored_position(irrep)?;
            let blocks: Vec<CMat> = group
                .stored_descriptors()
                .enumerate()
                .map(|(i, d)| if i == pos { b.clone() } else { CMat::zeros(d.dim, d.dim) })
                .collect();
            Ok(amp::round_map(group, &blocks))
        }
    }
}

/// v ← project(M v) with the entrywise projection onto ℤ/L or U(1) at frequency 1.
pub fn projected_power(m: &BlockMatrix, group: &GroupModel, config: &BaselineConfig) -> Result<Estimate> {
    let order = match group.kind() {
        GroupKind::Cyclic(l) => Some(*l),
        GroupKind::U1 => None,
        _ => return Err(Error::Unsupported("projected power needs a cyclic group or U(1)".into())),
    };
    if m.block_dim() != 1 {
        return Err(Error::Shape("projected power works on scalar entries".into()));
    }
    let n = m.n();
    let project = |z: C64| -> Option<(C64, GroupElement)> {
        if z.norm() < 1e-300 {
            return None;
        }
        Some(match order {
            Some(l) => {
                let step = std::f64::consts::TAU / l as f64;
                let k = (z.arg() / step).round().rem_euclid(l as f64) as usize % l;
                (C64::from_polar(1.0, k as f64 * step), GroupElement::Cyclic(k))
            }
            None => {
                let t = z.arg().rem_euclid(std::f64::consts::TAU);
                (z / z.norm(), GroupElement::Angle(t))
            }
        })
    };
    let mut rng = stream(config.seed, "projected-power", 0);
    let mut state: Vec<(C64, GroupElement)> = (0..n)
        .map(|_| project(C64::new(normal(&mut rng), normal(&mut rng))).expect("nonzero draw"))
        .collect();
    let mut meta = EstimateMeta::default();
    for _ in 0..config.max_iters {
        let v: Vec<C64> = state.iter().map(|s| s.0).collect();
        let mv = m.mul_stacked(&v, 1);
        let mut change = 0.0f64;
        for (s, z) in state.iter_mut().zip(mv) {
            // a zero entry keeps its previous value
            if let Some(next) = project(z) {
                change = change.max((next.0 - s.0).norm());
                *s = next;
            }
        }
        meta.residuals.push(change);
        meta.iterations += 1;
        if change < config.tol {
            meta.converged = true;
            break;
        }
    }
    let data = state.iter().map(|s| s.0).collect();
    let rounded = state.into_iter().map(|s| s.1).collect();
    Ok(Estimate { posteriors: vec![Stacked { n, d: 1, data }], rounded, meta })
}

/// Power iteration with the AMP nonlinearity and no Onsager correction
/// (tanh(λ M v) for ℤ/2, the Bessel-ratio magnitude map for U(1)).
pub fn soft_threshold_power(y: &crate::observation::LikelihoodCoefficients, config: &BaselineConfig) -> Result<Estimate> {
    let amp_config = AmpConfig { max_iters: config.max_iters, tol: config.tol, init_scale: 1e-3, seed: config.seed };
    amp::run(y, &amp_config, false)
}

/// Rounds arbitrary per-vertex blocks with the same rule as the spectral method.
pub fn round_blocks(group: &GroupModel, irrep: usize, v: &Stacked) -> Result<Vec<GroupElement>> {
    (0..v.n).map(|u| round_block(group, irrep, &v.block(u))).collect()
}
