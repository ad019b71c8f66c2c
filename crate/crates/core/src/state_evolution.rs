//! The scalar Gaussian channel behind AMP: the MMSE transform ℱ, the
//! state-evolution recurrence γ' = λ² E Tr ℱ(γI + √γ z), and the
//! Monte Carlo checks that the overlap matrix is a real multiple of I.

use crate::error::{Error, Result};
use crate::groups::{GroupElement, GroupModel, RepType, Slot};
use crate::linalg::{CMat, C64};
use crate::metrics::log_error;
use crate::observation::gaussian_noise_block;
use crate::par;
use crate::rng::stream;
use serde::{Deserialize, Serialize};

/// One γ per stored irrep (a complex pair shares one value).
pub type GammaVector = Vec<f64>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeConfig {
    pub mc_samples: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for SeConfig {
    fn default() -> Self {
        SeConfig { mc_samples: 20_000, max_iters: 2000, tol: 1e-6, seed: 0 }
    }
}

pub const DEFAULT_GAMMA0: f64 = 1e-2;

const CHUNK: usize = 256;

/// Draws of {z_ρ} kept in the harmonic-table feature layout, together with
/// their standardized real coordinates.
#[derive(Clone, Debug)]
pub struct NoiseBank {
    samples: usize,
    width: usize,
    p: usize,
    features: Vec<f64>,
    coords: Vec<f64>,
}

impl NoiseBank {
    pub fn draw(group: &GroupModel, samples: usize, seed: u64, label: &str) -> Result<Self> {
        let table = group.table();
        let width = table.width();
        let p: usize = table.slots().iter().zip(group.stored_descriptors()).map(|(s, d)| coord_count(s, d.rep_type)).sum();
        let mut features = vec![0.0; samples * width];
        let mut coords = vec![0.0; samples * p];
        for s in 0..samples {
            let mut rng = stream(seed, label, s as u64);
            let blocks: Vec<CMat> = group
                .stored_descriptors()
                .map(|d| gaussian_noise_block(d.rep_type, d.dim, &mut rng))
                .collect::<Result<_>>()?;
            table.encode_mmse(&blocks, &mut features[s * width..(s + 1) * width]);
            let out = &mut coords[s * p..(s + 1) * p];
            let mut k = 0;
            for (b, d) in blocks.iter().zip(group.stored_descriptors()) {
                k += write_coords(b, d.rep_type, &mut out[k..]);
            }
        }
        Ok(NoiseBank { samples, width, p, features, coords })
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    /// Number of independent standard normal coordinates per draw.
    pub fn dimension(&self) -> usize {
        self.p
    }

    pub fn coords(&self, s: usize) -> &[f64] {
        &self.coords[s * self.p..(s + 1) * self.p]
    }

    /// Features of w = γ·base + √γ z_s, slot by slot.
    pub(crate) fn channel(&self, group: &GroupModel, s: usize, gamma: &[f64], base: &[f64], out: &mut [f64]) {
        self.channel_signed(group, s, gamma, base, 1.0, out)
    }

    /// Same with z_s replaced by sign·z_s.
    pub(crate) fn channel_signed(&self, group: &GroupModel, s: usize, gamma: &[f64], base: &[f64], sign: f64, out: &mut [f64]) {
        let z = &self.features[s * self.width..(s + 1) * self.width];
        for (slot, &g) in group.table().slots().iter().zip(gamma) {
            let r = slot.offset..slot.offset + slot.len();
            let sg = sign * g.sqrt();
            for ((o, b), zz) in out[r.clone()].iter_mut().zip(&base[r.clone()]).zip(&z[r]) {
                *o = g * b + sg * zz;
            }
        }
    }
}

fn coord_count(slot: &Slot, rep_type: RepType) -> usize {
    match rep_type {
        RepType::Complex => 2 * slot.dim * slot.dim,
        _ => slot.dim * slot.dim,
    }
}

/// Independent coordinates scaled to unit variance.
fn write_coords(b: &CMat, rep_type: RepType, out: &mut [f64]) -> usize {
    let s2 = std::f64::consts::SQRT_2;
    let d = b.rows();
    match rep_type {
        RepType::Real => {
            for (o, z) in out.iter_mut().zip(b.as_slice()) {
                *o = z.re;
            }
            d * d
        }
        RepType::Complex => {
            for (k, z) in b.as_slice().iter().enumerate() {
                out[2 * k] = z.re * s2;
                out[2 * k + 1] = z.im * s2;
            }
            2 * d * d
        }
        RepType::Quaternionic => {
            // [[p, q], [−q̄, p̄]] holds four coordinates per 2×2 block
            let mut k = 0;
            for bi in 0..d / 2 {
                for bj in 0..d / 2 {
                    let p = b[(2 * bi, 2 * bj)];
                    let q = b[(2 * bi, 2 * bj + 1)];
                    for v in [p.re, p.im, q.re, q.im] {
                        out[k] = v * s2;
                        k += 1;
                    }
                }
            }
            k
        }
    }
}

/// Features of the identity in every slot.
pub(crate) fn identity_features(group: &GroupModel) -> Vec<f64> {
    let eye: Vec<CMat> = group.stored_descriptors().map(|d| CMat::identity(d.dim)).collect();
    let mut x = vec![0.0; group.table().width()];
    group.table().encode_mmse(&eye, &mut x);
    x
}

fn element_features(group: &GroupModel, g: &GroupElement) -> Result<Vec<f64>> {
    let blocks: Vec<CMat> = group.stored().iter().map(|&id| group.irrep_evaluate(id, g)).collect::<Result<_>>()?;
    let mut x = vec![0.0; group.table().width()];
    group.table().encode_mmse(&blocks, &mut x);
    Ok(x)
}

/// Re Tr ℱ_ρ from posterior feature means.
fn trace_f(m: &[f64], slot: &Slot) -> f64 {
    let d = slot.dim;
    (0..d).map(|a| m[slot.offset + a * d + a]).sum::<f64>() / (d as f64).sqrt()
}

pub fn check_gamma(group: &GroupModel, gamma: &[f64]) -> Result<()> {
    if gamma.len() != group.stored().len() {
        return Err(Error::Shape(format!("expected {} γ values, got {}", group.stored().len(), gamma.len())));
    }
    if let Some(g) = gamma.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
        return Err(Error::Domain(format!("γ must be finite and nonnegative, got {g}")));
    }
    Ok(())
}

/// ℱ_ρ({w}) = ∫ ρ(h) e^{Σ⟨w_q, q(h)⟩} dh / ∫ e^{Σ⟨w_q, q(h)⟩} dh, one block per stored irrep.
pub fn mmse_transform_f(group: &GroupModel, w: &[CMat]) -> Result<Vec<CMat>> {
    let table = group.table();
    if w.len() != table.slots().len() {
        return Err(Error::Shape(format!("expected {} blocks, got {}", table.slots().len(), w.len())));
    }
    let mut ws = table.workspace();
    table.encode_mmse(w, &mut ws.x);
    table.transform_features(&mut ws)?;
    Ok(table
        .decode(&ws.m)
        .into_iter()
        .zip(table.slots())
        .map(|(e, s)| e.scale(1.0 / (s.dim as f64).sqrt()))
        .collect())
}

/// Per-draw Re Tr ℱ_ρ averaged over the antithetic pair ±z_s, laid out draws × irreps.
fn traces(gamma: &[f64], group: &GroupModel, bank: &NoiseBank) -> Result<Vec<f64>> {
    let table = group.table();
    let k = table.slots().len();
    let eye = identity_features(group);
    let mut out = vec![0.0; bank.samples * k];
    let failed = std::sync::atomic::AtomicBool::new(false);
    par::for_chunks_mut(&mut out, CHUNK * k, |c, dst| {
        let mut ws = table.workspace();
        for (i, row) in dst.chunks_mut(k).enumerate() {
            row.iter_mut().for_each(|v| *v = 0.0);
            for sign in [1.0, -1.0] {
                bank.channel_signed(group, c * CHUNK + i, gamma, &eye, sign, &mut ws.x);
                if table.transform_features(&mut ws).is_err() {
                    failed.store(true, std::sync::atomic::Ordering::Relaxed);
                    return;
                }
                for (o, slot) in row.iter_mut().zip(table.slots()) {
                    *o += 0.5 * trace_f(&ws.m, slot);
                }
            }
        }
    });
    if failed.into_inner() {
        return Err(Error::Numerical("degenerate scalar channel".into()));
    }
    Ok(out)
}

/// E_z Re Tr ℱ_ρ(γI + √γ z) per stored irrep, with Monte Carlo standard errors.
pub fn expected_trace(gamma: &[f64], group: &GroupModel, bank: &NoiseBank) -> Result<Vec<(f64, f64)>> {
    check_gamma(group, gamma)?;
    let k = gamma.len();
    if gamma.iter().all(|&g| g == 0.0) {
        return Ok(vec![(0.0, 0.0); k]);
    }
    let t = traces(gamma, group, bank)?;
    let n = bank.samples as f64;
    Ok((0..k)
        .map(|r| {
            let vals = t.iter().skip(r).step_by(k);
            let mean = vals.clone().sum::<f64>() / n;
            let var = vals.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0).max(1.0);
            (mean, (var / n).sqrt())
        })
        .collect())
}

/// One state-evolution step on a fixed noise bank; negative estimates are clipped to 0.
pub fn se_step(gamma: &[f64], lambda: &[f64], group: &GroupModel, bank: &NoiseBank) -> Result<GammaVector> {
    if lambda.len() != gamma.len() {
        return Err(Error::Shape("λ and γ lengths differ".into()));
    }
    Ok(expected_trace(gamma, group, bank)?
        .iter()
        .zip(lambda)
        .map(|((m, _), l)| (l * l * m).max(0.0))
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeResult {
    pub fixed_point: GammaVector,
    pub trajectory: Vec<GammaVector>,
    pub a_values: Vec<f64>,
    pub converged: bool,
}

/// a_ρ = γ_ρ / (d_ρ λ_ρ²).
pub fn overlaps(group: &GroupModel, gamma: &[f64], lambda: &[f64]) -> Vec<f64> {
    group
        .stored_descriptors()
        .zip(gamma.iter().zip(lambda))
        .map(|(d, (g, l))| if *l == 0.0 { 0.0 } else { g / (d.dim as f64 * l * l) })
        .collect()
}

/// Iterates [`se_step`] with common random numbers until the largest change is at most `tol`.
pub fn se_fixed_point(gamma0: &[f64], lambda: &[f64], group: &GroupModel, config: &SeConfig) -> Result<SeResult> {
    let bank = NoiseBank::draw(group, config.mc_samples, config.seed, "se")?;
    se_fixed_point_on(gamma0, lambda, group, &bank, config)
}

pub fn se_fixed_point_on(
    gamma0: &[f64],
    lambda: &[f64],
    group: &GroupModel,
    bank: &NoiseBank,
    config: &SeConfig,
) -> Result<SeResult> {
    check_gamma(group, gamma0)?;
    let mut gamma = gamma0.to_vec();
    let mut trajectory = vec![gamma.clone()];
    let mut converged = false;
    for _ in 0..config.max_iters {
        let next = se_step(&gamma, lambda, group, bank)?;
        let change = next.iter().zip(&gamma).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        gamma = next;
        trajectory.push(gamma.clone());
        if change <= config.tol {
            converged = true;
            break;
        }
    }
    let a_values = overlaps(group, &gamma, lambda);
    Ok(SeResult { fixed_point: gamma, trajectory, a_values, converged })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub a_values: Vec<f64>,
    /// Correlation of the per-vertex MAP estimate through the primary irrep.
    pub correlation: f64,
    pub log_error: f64,
}

/// Translates a fixed point into the score of the rounded estimate: the
/// MAP node of the scalar channel at the identity, averaged through the
/// primary irrep.
pub fn predict_performance(
    result: &SeResult,
    lambda: &[f64],
    group: &GroupModel,
    mc_samples: usize,
    seed: u64,
) -> Result<Prediction> {
    let gamma = &result.fixed_point;
    check_gamma(group, gamma)?;
    let a_values = overlaps(group, gamma, lambda);
    if gamma.iter().all(|&g| g == 0.0) {
        return Ok(Prediction { a_values, correlation: 0.0, log_error: log_error(0.0) });
    }
    let bank = NoiseBank::draw(group, mc_samples, seed, "predict")?;
    let table = group.table();
    let eye = identity_features(group);
    let primary = &table.slots()[0];
    let d = primary.dim;
    let mut winners = vec![0usize; mc_samples];
    par::for_chunks_mut(&mut winners, CHUNK, |c, dst| {
        let mut x = vec![0.0; table.width()];
        for (i, w) in dst.iter_mut().enumerate() {
            bank.channel(group, c * CHUNK + i, gamma, &eye, &mut x);
            *w = table.argmax(&x);
        }
    });
    let mut mean = CMat::zeros(d, d);
    for &node in &winners {
        mean = &mean + &group.irrep_evaluate(primary.irrep, &group.nodes()[node])?;
    }
    let correlation = (mean.frobenius() / (mc_samples as f64 * (d as f64).sqrt())).min(1.0);
    Ok(Prediction { a_values, correlation, log_error: log_error(correlation) })
}

/// Mean matrix of one overlap formula with per-entry standard errors.
#[derive(Clone, Debug)]
pub struct FormulaEstimate {
    pub matrix: CMat,
    pub entry_se: Vec<f64>,
    /// Tr A / d.
    pub a: C64,
    pub a_se: f64,
    pub a_im_se: f64,
    /// ‖A − aI‖_F / |a| and its standard error scale.
    pub off_diagonal: f64,
    pub off_diagonal_se: f64,
}

#[derive(Clone, Debug)]
pub struct PairDifference {
    pub first: usize,
    pub second: usize,
    pub diff: f64,
    pub se: f64,
}

#[derive(Clone, Debug)]
pub struct IrrepDiagnostics {
    pub irrep: usize,
    /// (i) E_{g,z} ρ(g)* ℱ(γq(g) + √γz), (ii) E_{g,z} ℱ*ℱ, (iii) E_z ℱ(γI + √γz), (iv) E_z ℱ*ℱ at the identity.
    pub formulas: [FormulaEstimate; 4],
    pub pairs: Vec<PairDifference>,
}

struct Moments {
    n: usize,
    d: usize,
    sum: Vec<C64>,
    sum_sq: Vec<(f64, f64)>,
    a: Vec<C64>,
}

impl Moments {
    fn new(d: usize) -> Self {
        Moments { n: 0, d, sum: vec![C64::new(0.0, 0.0); d * d], sum_sq: vec![(0.0, 0.0); d * d], a: Vec::new() }
    }

    fn push(&mut self, m: &CMat) {
        self.n += 1;
        for ((s, q), z) in self.sum.iter_mut().zip(self.sum_sq.iter_mut()).zip(m.as_slice()) {
            *s += z;
            q.0 += z.re * z.re;
            q.1 += z.im * z.im;
        }
        self.a.push(m.trace() / self.d as f64);
    }

    fn finish(&self) -> FormulaEstimate {
        let n = self.n as f64;
        let mean: Vec<C64> = self.sum.iter().map(|s| s / n).collect();
        let entry_se: Vec<f64> = self
            .sum_sq
            .iter()
            .zip(&mean)
            .map(|(q, m)| {
                let var = (q.0 / n - m.re * m.re) + (q.1 / n - m.im * m.im);
                (var.max(0.0) / (n - 1.0).max(1.0)).sqrt()
            })
            .collect();
        let matrix = CMat::from_vec(self.d, self.d, mean);
        let a = matrix.trace() / self.d as f64;
        let (a_se, a_im_se) = stderr_complex(&self.a);
        let dev = &matrix - &CMat::identity(self.d).scale_c(a);
        let (off_diagonal, off_diagonal_se) = if a.norm() > 0.0 {
            (dev.frobenius() / a.norm(), entry_se.iter().map(|s| s * s).sum::<f64>().sqrt() / a.norm())
        } else {
            (0.0, 0.0)
        };
        FormulaEstimate { matrix, entry_se, a, a_se, a_im_se, off_diagonal, off_diagonal_se }
    }
}

fn stderr_complex(v: &[C64]) -> (f64, f64) {
    let n = v.len() as f64;
    if v.len() < 2 {
        return (0.0, 0.0);
    }
    let mean: C64 = v.iter().sum::<C64>() / n;
    let (vr, vi) = v
        .iter()
        .fold((0.0, 0.0), |(r, i), z| (r + (z.re - mean.re).powi(2), i + (z.im - mean.im).powi(2)));
    ((vr / (n - 1.0) / n).sqrt(), (vi / (n - 1.0) / n).sqrt())
}

fn paired_se(x: &[C64], y: &[C64]) -> f64 {
    let d: Vec<C64> = x.iter().zip(y).map(|(a, b)| C64::new(a.re - b.re, 0.0)).collect();
    stderr_complex(&d).0
}

/// Monte Carlo estimates of the four overlap formulas for every stored irrep.
/// The (g, z) formulas share one set of draws and the identity formulas another.
pub fn lemma_a_diagnostics(gamma: &[f64], group: &GroupModel, mc_samples: usize, seed: u64) -> Result<Vec<IrrepDiagnostics>> {
    check_gamma(group, gamma)?;
    let table = group.table();
    let slots = table.slots();
    let bank_g = NoiseBank::draw(group, mc_samples, seed, "lemma-gz")?;
    let bank_z = NoiseBank::draw(group, mc_samples, seed, "lemma-z")?;
    let eye = identity_features(group);
    let mut moments: Vec<[Moments; 4]> =
        slots.iter().map(|s| std::array::from_fn(|_| Moments::new(s.dim))).collect();
    let mut ws = table.workspace();
    let f_blocks = |ws: &mut crate::groups::Workspace| -> Result<Vec<CMat>> {
        table.transform_features(ws)?;
        Ok(table
            .decode(&ws.m)
            .into_iter()
            .zip(slots)
            .map(|(e, s)| e.scale(1.0 / (s.dim as f64).sqrt()))
            .collect())
    };
    for s in 0..mc_samples {
        let mut rng = stream(seed, "lemma-haar", s as u64);
        let g = group.haar_sample(&mut rng);
        let base = element_features(group, &g)?;
        bank_g.channel(group, s, gamma, &base, &mut ws.x);
        let f = f_blocks(&mut ws)?;
        for ((m, fr), slot) in moments.iter_mut().zip(&f).zip(slots) {
            let rho = group.irrep_evaluate(slot.irrep, &g)?;
            m[0].push(&rho.adjoint().matmul(fr));
            m[1].push(&fr.adjoint().matmul(fr));
        }
        bank_z.channel(group, s, gamma, &eye, &mut ws.x);
        let f = f_blocks(&mut ws)?;
        for (m, fr) in moments.iter_mut().zip(&f) {
            m[2].push(fr);
            m[3].push(&fr.adjoint().matmul(fr));
        }
    }
    Ok(moments
        .iter()
        .zip(slots)
        .map(|(m, slot)| {
            let formulas: [FormulaEstimate; 4] = std::array::from_fn(|k| m[k].finish());
            let mut pairs = Vec::new();
            for i in 0..4 {
                for j in i + 1..4 {
                    let same_set = (i < 2) == (j < 2);
                    let se = if same_set {
                        paired_se(&m[i].a, &m[j].a)
                    } else {
                        formulas[i].a_se.hypot(formulas[j].a_se)
                    };
                    pairs.push(PairDifference { first: i, second: j, diff: formulas[i].a.re - formulas[j].a.re, se });
                }
            }
            IrrepDiagnostics { irrep: slot.irrep, formulas, pairs }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_relates_to_e() {
        let g = GroupModel::so3(2, 4096).unwrap();
        let mut rng = stream(4, "t", 0);
        let c: Vec<CMat> = g
            .stored_descriptors()
            .map(|d| gaussian_noise_block(d.rep_type, d.dim, &mut rng).unwrap().scale(0.4))
            .collect();
        let e = crate::amp::transform_e(&g, &c).unwrap();
        let w: Vec<CMat> = c.iter().zip(g.stored_descriptors()).map(|(b, d)| b.scale((d.dim as f64).sqrt())).collect();
        let f = mmse_transform_f(&g, &w).unwrap();
        for ((fe, ee), d) in f.iter().zip(&e).zip(g.stored_descriptors()) {
            assert!(fe.scale((d.dim as f64).sqrt()).max_abs_diff(ee) < 1e-12);
        }
    }

    #[test]
    fn parity_channel_is_tanh() {
        let g = GroupModel::cyclic(2, 1).unwrap();
        for w in [-1.3, 0.0, 0.4, 2.2] {
            let f = mmse_transform_f(&g, &[CMat::scalar(C64::new(w, 0.0))]).unwrap();
            assert!((f[0][(0, 0)].re - f64::tanh(w)).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_is_fixed() {
        let g = GroupModel::u1(2, 64).unwrap();
        let bank = NoiseBank::draw(&g, 100, 1, "t").unwrap();
        assert_eq!(se_step(&[0.0, 0.0], &[2.0, 2.0], &g, &bank).unwrap(), vec![0.0, 0.0]);
        assert!(se_step(&[-1.0, 0.0], &[2.0, 2.0], &g, &bank).is_err());
    }

    #[test]
    fn quaternion_coordinates_are_standard() {
        let b = gaussian_noise_block(RepType::Quaternionic, 2, &mut stream(1, "t", 0)).unwrap();
        let mut out = vec![0.0; 4];
        assert_eq!(write_coords(&b, RepType::Quaternionic, &mut out), 4);
        assert!(out.iter().all(|v| *v != 0.0));
    }
}
