//! The AMP iteration over a compact group.
//!
//! Each vertex carries, per stored irrep, the Peter–Weyl coefficients C of
//! its log-density and the coefficients V = ℰ(C) of the normalized density.
//! One step is a block matrix product with Y, minus the Onsager correction,
//! followed by ℰ at every vertex.

use crate::error::{Error, Result};
use crate::groups::{GroupElement, GroupModel, RepType};
use crate::linalg::{CMat, C64, ZERO};
use crate::observation::{
    estimate_typ_norm, gaussian_noise_block, likelihood_coefficients, LikelihoodCoefficients, SyncInstance,
};
use crate::par;
use crate::rng::stream;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmpConfig {
    pub max_iters: usize,
    pub tol: f64,
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for AmpConfig {
    fn default() -> Self {
        AmpConfig { max_iters: 200, tol: 1e-6, init_scale: 1e-3, seed: 0 }
    }
}

/// n blocks of size d×d stacked into an (n·d)×d row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Stacked {
    pub n: usize,
    pub d: usize,
    pub data: Vec<C64>,
}

impl Stacked {
    pub fn zeros(n: usize, d: usize) -> Self {
        Stacked { n, d, data: vec![ZERO; n * d * d] }
    }

    pub fn block(&self, u: usize) -> CMat {
        let s = self.d * self.d;
        CMat::from_vec(self.d, self.d, self.data[u * s..(u + 1) * s].to_vec())
    }

    pub fn set_block(&mut self, u: usize, b: &CMat) {
        let s = self.d * self.d;
        self.data[u * s..(u + 1) * s].copy_from_slice(b.as_slice());
    }

    pub fn from_blocks(d: usize, blocks: &[CMat]) -> Self {
        let mut out = Stacked::zeros(blocks.len(), d);
        for (u, b) in blocks.iter().enumerate() {
            out.set_block(u, b);
        }
        out
    }
}

/// AMP state at time t: C^{(t)}, V^{(t)} and V^{(t−1)}.
#[derive(Clone, Debug)]
pub struct AmpState {
    pub t: usize,
    pub c: Vec<Stacked>,
    pub v: Vec<Stacked>,
    pub v_prev: Option<Vec<Stacked>>,
    pub typ_norm: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EstimateMeta {
    pub iterations: usize,
    pub converged: bool,
    pub residuals: Vec<f64>,
}

/// Output of AMP or a baseline.
#[derive(Clone, Debug)]
pub struct Estimate {
    /// Final per-vertex coefficients (log-density coefficients for AMP).
    pub posteriors: Vec<Stacked>,
    pub rounded: Vec<GroupElement>,
    pub meta: EstimateMeta,
}

/// ℰ at one vertex: V_ρ = Σ_i w_i R_ρ(g_i) e^{S_i} / Σ_i w_i e^{S_i}, one block per stored irrep.
pub fn transform_e(group: &GroupModel, c: &[CMat]) -> Result<Vec<CMat>> {
    let table = group.table();
    if c.len() != table.slots().len() {
        return Err(Error::Shape(format!("expected {} coefficient blocks, got {}", table.slots().len(), c.len())));
    }
    let mut ws = table.workspace();
    table.encode(c, &mut ws.x);
    table.transform_features(&mut ws)?;
    Ok(table.decode(&ws.m))
}

/// ℰ with every irrep of the full list treated as an independent input
/// (complex-valued log-density). Agrees with [`transform_e`] when conjugate
/// partners carry conjugate coefficients; used for derivative checks.
pub fn transform_e_expanded(group: &GroupModel, c: &[CMat]) -> Result<Vec<CMat>> {
    let irreps = group.irreps();
    if c.len() != irreps.len() {
        return Err(Error::Shape(format!("expected {} coefficient blocks, got {}", irreps.len(), c.len())));
    }
    let nodes = group.nodes();
    let mut basis = Vec::with_capacity(nodes.len());
    let mut s = Vec::with_capacity(nodes.len());
    for g in nodes {
        let r: Vec<CMat> = irreps.iter().map(|d| group.peter_weyl_basis(d.id, g)).collect::<Result<_>>()?;
        s.push(c.iter().zip(&r).map(|(ci, ri)| ci.inner(ri)).sum::<C64>());
        basis.push(r);
    }
    let smax = s.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let mut z = ZERO;
    let mut acc: Vec<CMat> = irreps.iter().map(|d| CMat::zeros(d.dim, d.dim)).collect();
    for ((si, r), w) in s.iter().zip(&basis).zip(group.weights()) {
        let p = (si - smax).exp() * *w;
        z += p;
        for (a, ri) in acc.iter_mut().zip(r) {
            *a = &*a + &ri.scale_c(p);
        }
    }
    Ok(acc.into_iter().map(|a| a.scale_c(z.inv())).collect())
}

/// Per-vertex MAP: the quadrature node maximizing S; ties go to the lowest index.
pub fn round_map(group: &GroupModel, c: &[CMat]) -> GroupElement {
    let table = group.table();
    let mut x = vec![0.0; table.width()];
    table.encode(c, &mut x);
    group.nodes()[table.argmax(&x)].clone()
}

/// Σ_w (d I − V_w* V_w).
pub fn onsager_sum(v: &Stacked) -> CMat {
    let d = v.d;
    let mut acc = CMat::identity(d).scale((d * v.n) as f64);
    for u in 0..v.n {
        let b = v.block(u);
        acc = &acc - &b.adjoint().matmul(&b);
    }
    acc
}

/// d⁻² |Y_typ|² V_u^{(t−2)} Σ_w (d I − (V_w^{(t−1)})* V_w^{(t−1)}).
pub fn onsager_term(d: usize, v_all: &Stacked, v_u_prev: &CMat, typ_norm: f64) -> CMat {
    v_u_prev.matmul(&onsager_sum(v_all)).scale(typ_norm / (d * d) as f64)
}

/// Random start: C^{(0)} with i.i.d. type-respecting Gaussian entries of size `init_scale`.
pub fn init_state(y: &LikelihoodCoefficients, init_scale: f64, seed: u64) -> Result<AmpState> {
    let group = &y.group;
    let n = y.n();
    let mut c: Vec<Stacked> = group.stored_descriptors().map(|d| Stacked::zeros(n, d.dim)).collect();
    for u in 0..n {
        let mut rng = stream(seed, "amp-init", u as u64);
        for (r, d) in group.stored_descriptors().enumerate() {
            let z = gaussian_noise_block(d.rep_type, d.dim, &mut rng)?;
            c[r].set_block(u, &z.scale(init_scale));
        }
    }
    let v = apply_e(group, &c)?;
    let typ_norm = y.mats.iter().map(estimate_typ_norm).collect();
    Ok(AmpState { t: 0, c, v, v_prev: None, typ_norm })
}

fn apply_e(group: &GroupModel, c: &[Stacked]) -> Result<Vec<Stacked>> {
    let n = c.first().map(|s| s.n).unwrap_or(0);
    let table = group.table();
    let per_vertex: Vec<Result<Vec<CMat>>> = par::map_range(n, |u| {
        let blocks: Vec<CMat> = c.iter().map(|s| s.block(u)).collect();
        let mut ws = table.workspace();
        table.encode(&blocks, &mut ws.x);
        table.transform_features(&mut ws)?;
        Ok(table.decode(&ws.m))
    });
    let mut v: Vec<Stacked> = c.iter().map(|s| Stacked::zeros(s.n, s.d)).collect();
    for (u, blocks) in per_vertex.into_iter().enumerate() {
        for (r, b) in blocks?.iter().enumerate() {
            v[r].set_block(u, b);
        }
    }
    Ok(v)
}

/// One AMP step: C^{(t+1)} = d⁻¹ Y V^{(t)} − Onsager, V^{(t+1)} = ℰ(C^{(t+1)}).
pub fn amp_iterate(state: &AmpState, y: &LikelihoodCoefficients) -> Result<AmpState> {
    iterate(state, y, true)
}

pub(crate) fn iterate(state: &AmpState, y: &LikelihoodCoefficients, onsager: bool) -> Result<AmpState> {
    let group = &y.group;
    let mut c = Vec::with_capacity(state.v.len());
    for (r, (v, mat)) in state.v.iter().zip(&y.mats).enumerate() {
        let d = v.d;
        let prod = mat.mul_stacked(&v.data, d);
        let mut next = Stacked { n: v.n, d, data: prod.into_iter().map(|z| z / d as f64).collect() };
        if let (true, Some(prev)) = (onsager, &state.v_prev) {
            let sum = onsager_sum(v).scale(state.typ_norm[r] / (d * d) as f64);
            for u in 0..v.n {
                let corr = prev[r].block(u).matmul(&sum);
                let cur = next.block(u);
                next.set_block(u, &(&cur - &corr));
            }
        }
        c.push(next);
    }
    let v = apply_e(group, &c)?;
    Ok(AmpState { t: state.t + 1, c, v, v_prev: Some(state.v.clone()), typ_norm: state.typ_norm.clone() })
}

/// max over vertices and irreps of ‖V_u − V'_u‖_F / √d.
pub fn residual(a: &[Stacked], b: &[Stacked]) -> f64 {
    let mut worst = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        let s = x.d * x.d;
        let scale = (x.d as f64).sqrt();
        for u in 0..x.n {
            let diff: f64 = x.data[u * s..(u + 1) * s]
                .iter()
                .zip(&y.data[u * s..(u + 1) * s])
                .map(|(p, q)| (p - q).norm_sqr())
                .sum();
            worst = worst.max(diff.sqrt() / scale);
        }
    }
    worst
}

pub fn run_amp(instance: &SyncInstance, config: &AmpConfig) -> Result<Estimate> {
    run_amp_on(&likelihood_coefficients(instance), config)
}

/// AMP on arbitrary coefficient matrices.
pub fn run_amp_on(y: &LikelihoodCoefficients, config: &AmpConfig) -> Result<Estimate> {
    run(y, config, true)
}

pub(crate) fn run(y: &LikelihoodCoefficients, config: &AmpConfig, onsager: bool) -> Result<Estimate> {
    let mut state = init_state(y, config.init_scale, config.seed)?;
    let mut meta = EstimateMeta::default();
    for _ in 0..config.max_iters {
        let next = iterate(&state, y, onsager)?;
        let res = residual(&next.v, &state.v);
        meta.residuals.push(res);
        meta.iterations += 1;
        state = next;
        if res < config.tol {
            meta.converged = true;
            break;
        }
    }
    Ok(finish(&y.group, state.c, meta))
}

pub(crate) fn finish(group: &GroupModel, c: Vec<Stacked>, meta: EstimateMeta) -> Estimate {
    let n = c.first().map(|s| s.n).unwrap_or(0);
    let rounded = par::map_range(n, |u| {
        let blocks: Vec<CMat> = c.iter().map(|s| s.block(u)).collect();
        round_map(group, &blocks)
    });
    Estimate { posteriors: c, rounded, meta }
}

/// Largest violation of the reality, conjugate or quaternion pattern among the blocks.
pub fn type_defect(group: &GroupModel, blocks: &[Stacked]) -> f64 {
    let mut worst = 0.0f64;
    for (s, d) in blocks.iter().zip(group.stored_descriptors()) {
        for u in 0..s.n {
            let b = s.block(u);
            let defect = match d.rep_type {
                RepType::Real => b.max_imag(),
                RepType::Quaternionic => b.quaternion_defect(),
                RepType::Complex => 0.0,
            };
            worst = worst.max(defect);
        }
    }
    worst
}
