//! The Gaussian observation model and the coefficient matrices AMP consumes.
//!
//! For each stored irrep ρ the observation is
//! M_ρ = (λ_ρ/n) X_ρ X_ρ* + W_ρ/√(n d_ρ), where X_ρ stacks ρ(g_u) and W_ρ
//! is GOE, GUE or GSE according to the irrep type. Off-diagonal entries of W
//! have unit expected squared norm; diagonal entries use the usual
//! (A + A*)/√2 convention (variance 2 for GOE, 1 for GUE and GSE).
//!
//! Random streams: vertex u draws its truth from `(seed, "truth", u)`; row
//! block b of the noise for stored irrep r uses `(seed, "noise", r << 32 | b)`.

use crate::error::{Error, Result};
use crate::groups::{GroupElement, GroupModel, GroupSpec, RepType};
use crate::linalg::{dot, CMat, C64, ZERO};
use crate::par;
use crate::rng::{complex_normal, normal, stream};
use serde::{Deserialize, Serialize};
use std::borrow::Cow;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

/// Dense entry storage; real irreps keep real matrices.
#[derive(Clone, Debug, PartialEq)]
pub enum Entries {
    Real(Vec<f64>),
    Complex(Vec<C64>),
}

/// A square (n·d)×(n·d) matrix viewed as n×n blocks of size d×d.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockMatrix {
    n: usize,
    d: usize,
    entries: Entries,
}

impl BlockMatrix {
    pub fn zeros(n: usize, d: usize, real: bool) -> Self {
        let size = n * d * n * d;
        let entries = if real { Entries::Real(vec![0.0; size]) } else { Entries::Complex(vec![ZERO; size]) };
        BlockMatrix { n, d, entries }
    }

    pub fn from_entries(n: usize, d: usize, entries: Entries) -> Result<Self> {
        let size = n * d * n * d;
        let len = match &entries {
            Entries::Real(v) => v.len(),
            Entries::Complex(v) => v.len(),
        };
        if len != size {
            return Err(Error::Shape(format!("expected {size} entries, got {len}")));
        }
        Ok(BlockMatrix { n, d, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn block_dim(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        self.n * self.d
    }

    pub fn entries(&self) -> &Entries {
        &self.entries
    }

    pub fn is_real(&self) -> bool {
        matches!(self.entries, Entries::Real(_))
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let k = i * self.dim() + j;
        match &self.entries {
            Entries::Real(v) => C64::new(v[k], 0.0),
            Entries::Complex(v) => v[k],
        }
    }

    pub fn block(&self, u: usize, v: usize) -> CMat {
        let d = self.d;
        CMat::from_fn(d, d, |a, b| self.get(u * d + a, v * d + b))
    }

    pub fn conj(&self) -> Self {
        let entries = match &self.entries {
            Entries::Real(v) => Entries::Real(v.clone()),
            Entries::Complex(v) => Entries::Complex(v.iter().map(|z| z.conj()).collect()),
        };
        BlockMatrix { n: self.n, d: self.d, entries }
    }

    /// s·A with the diagonal blocks set to zero.
    pub fn scaled_off_diagonal(&self, s: f64) -> Self {
        let dim = self.dim();
        let d = self.d;
        let mut out = self.clone();
        let keep = |i: usize, j: usize| i / d != j / d;
        match &mut out.entries {
            Entries::Real(v) => {
                for (k, x) in v.iter_mut().enumerate() {
                    *x = if keep(k / dim, k % dim) { *x * s } else { 0.0 };
                }
            }
            Entries::Complex(v) => {
                for (k, x) in v.iter_mut().enumerate() {
                    *x = if keep(k / dim, k % dim) { *x * s } else { ZERO };
                }
            }
        }
        out
    }

    /// Mean squared entry norm over the off-diagonal blocks.
    pub fn off_diagonal_mean_sqr(&self) -> f64 {
        let dim = self.dim();
        let d = self.d;
        if self.n < 2 {
            return 0.0;
        }
        let mut total = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                if i / d != j / d {
                    total += self.get(i, j).norm_sqr();
                }
            }
        }
        total / (self.n * (self.n - 1) * d * d) as f64
    }

    pub fn hermitian_defect(&self) -> f64 {
        let dim = self.dim();
        let mut worst = 0.0f64;
        for i in 0..dim {
            for j in i..dim {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    /// A·V for V of shape (dim × cols), row-major.
    pub fn mul_stacked(&self, v: &[C64], cols: usize) -> Vec<C64> {
        let dim = self.dim();
        assert_eq!(v.len(), dim * cols, "stacked vector has the wrong length");
        let mut out = vec![ZERO; dim * cols];
        match &self.entries {
            Entries::Real(a) => {
                // column-major real and imaginary parts
                let mut vre = vec![0.0; dim * cols];
                let mut vim = vec![0.0; dim * cols];
                for j in 0..dim {
                    for c in 0..cols {
                        vre[c * dim + j] = v[j * cols + c].re;
                        vim[c * dim + j] = v[j * cols + c].im;
                    }
                }
                let has_imag = vim.iter().any(|&x| x != 0.0);
                par::for_chunks_mut(&mut out, cols * ROW_CHUNK, |chunk, dst| {
                    for (r, row_out) in dst.chunks_mut(cols).enumerate() {
                        let i = chunk * ROW_CHUNK + r;
                        let row = &a[i * dim..(i + 1) * dim];
                        for c in 0..cols {
                            let re = dot(row, &vre[c * dim..(c + 1) * dim]);
                            let im = if has_imag { dot(row, &vim[c * dim..(c + 1) * dim]) } else { 0.0 };
                            row_out[c] = C64::new(re, im);
                        }
                    }
                });
            }
            Entries::Complex(a) => {
                let mut vt = vec![ZERO; dim * cols];
                for j in 0..dim {
                    for c in 0..cols {
                        vt[c * dim + j] = v[j * cols + c];
                    }
                }
                par::for_chunks_mut(&mut out, cols * ROW_CHUNK, |chunk, dst| {
                    for (r, row_out) in dst.chunks_mut(cols).enumerate() {
                        let i = chunk * ROW_CHUNK + r;
                        let row = &a[i * dim..(i + 1) * dim];
                        for c in 0..cols {
                            row_out[c] = complex_dot(row, &vt[c * dim..(c + 1) * dim]);
                        }
                    }
                });
            }
        }
        out
    }

    fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        match &self.entries {
            Entries::Real(v) => {
                w.write_all(&[0u8])?;
                for x in v {
                    w.write_all(&x.to_le_bytes())?;
                }
            }
            Entries::Complex(v) => {
                w.write_all(&[1u8])?;
                for z in v {
                    w.write_all(&z.re.to_le_bytes())?;
                    w.write_all(&z.im.to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    fn read_from(r: &mut impl Read, n: usize, d: usize) -> Result<Self> {
        let size = n * d * n * d;
        let mut tag = [0u8; 1];
        r.read_exact(&mut tag)?;
        let entries = match tag[0] {
            0 => Entries::Real((0..size).map(|_| read_f64(r)).collect::<std::io::Result<_>>()?),
            1 => Entries::Complex(
                (0..size)
                    .map(|_| Ok(C64::new(read_f64(r)?, read_f64(r)?)))
                    .collect::<std::io::Result<_>>()?,
            ),
            t => return Err(Error::Config(format!("bad matrix tag {t}"))),
        };
        BlockMatrix::from_entries(n, d, entries)
    }
}

const ROW_CHUNK: usize = 16;

#[inline]
fn complex_dot(a: &[C64], b: &[C64]) -> C64 {
    let (mut re0, mut im0, mut re1, mut im1) = (0.0, 0.0, 0.0, 0.0);
    let pairs = a.len() / 2;
    for p in 0..pairs {
        let (x0, y0) = (a[2 * p], b[2 * p]);
        let (x1, y1) = (a[2 * p + 1], b[2 * p + 1]);
        re0 += x0.re * y0.re - x0.im * y0.im;
        im0 += x0.re * y0.im + x0.im * y0.re;
        re1 += x1.re * y1.re - x1.im * y1.im;
        im1 += x1.re * y1.im + x1.im * y1.re;
    }
    if a.len() % 2 == 1 {
        let (x, y) = (a[a.len() - 1], b[a.len() - 1]);
        re0 += x.re * y.re - x.im * y.im;
        im0 += x.re * y.im + x.im * y.re;
    }
    C64::new(re0 + re1, im0 + im1)
}

/// Collapses a λ list over the full irrep list to one value per stored irrep,
/// checking that conjugate partners agree.
pub fn snr_from_full(group: &GroupModel, full: &[f64]) -> Result<Vec<f64>> {
    if full.len() != group.irreps().len() {
        return Err(Error::Config(format!("expected {} SNR values, got {}", group.irreps().len(), full.len())));
    }
    for d in group.irreps() {
        if let Some(c) = d.conjugate_id {
            if full[c] != full[d.id] {
                return Err(Error::Config(format!(
                    "conjugate irreps {} and {} have different SNRs",
                    d.name(),
                    group.irreps()[c].name()
                )));
            }
        }
    }
    Ok(group.stored().iter().map(|&id| full[id]).collect())
}

/// Off-diagonal noise block z_ρ: standard normal entries (real), complex
/// normal with variance 1/2 per part (complex) or 2×2 quaternion blocks with
/// N(0, 1/2) coefficients (quaternionic).
pub fn gaussian_noise_block(rep_type: RepType, d: usize, rng: &mut crate::rng::Stream) -> Result<CMat> {
    match rep_type {
        RepType::Real => Ok(CMat::from_fn(d, d, |_, _| C64::new(normal(rng), 0.0))),
        RepType::Complex => Ok(CMat::from_fn(d, d, |_, _| complex_normal(rng))),
        RepType::Quaternionic => {
            if d % 2 != 0 {
                return Err(Error::Domain(format!("quaternionic block needs even dimension, got {d}")));
            }
            let mut m = CMat::zeros(d, d);
            for bi in 0..d / 2 {
                for bj in 0..d / 2 {
                    let (p, q) = quaternion_pair(rng);
                    set_quaternion(&mut m, 2 * bi, 2 * bj, p, q);
                }
            }
            Ok(m)
        }
    }
}

fn quaternion_pair(rng: &mut crate::rng::Stream) -> (C64, C64) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (a, b, c, d) = (normal(rng) * s, normal(rng) * s, normal(rng) * s, normal(rng) * s);
    (C64::new(a, b), C64::new(c, d))
}

fn set_quaternion(m: &mut CMat, r: usize, c: usize, p: C64, q: C64) {
    m[(r, c)] = p;
    m[(r, c + 1)] = q;
    m[(r + 1, c)] = -q.conj();
    m[(r + 1, c + 1)] = p.conj();
}

/// A sampled synchronization problem.
#[derive(Clone, Debug)]
pub struct SyncInstance {
    pub n: usize,
    pub group: Arc<GroupModel>,
    pub truth: Vec<GroupElement>,
    /// λ per stored irrep.
    pub snr: Vec<f64>,
    /// M per stored irrep.
    pub observations: Vec<BlockMatrix>,
    pub seed: u64,
}

impl SyncInstance {
    /// M for any irrep id; a complex partner is conjugated on demand.
    pub fn observation(&self, id: usize) -> Result<Cow<'_, BlockMatrix>> {
        let pos = self.group.stored_position(id)?;
        if self.group.stored()[pos] == id {
            Ok(Cow::Borrowed(&self.observations[pos]))
        } else {
            Ok(Cow::Owned(self.observations[pos].conj()))
        }
    }

    pub fn snr_of(&self, id: usize) -> Result<f64> {
        Ok(self.snr[self.group.stored_position(id)?])
    }
}

/// Draws truth and observations.
pub fn sample_instance(group: &Arc<GroupModel>, n: usize, snr: &[f64], seed: u64) -> Result<SyncInstance> {
    if n < 2 {
        return Err(Error::Config(format!("need at least 2 vertices, got {n}")));
    }
    if snr.len() != group.stored().len() {
        return Err(Error::Config(format!("expected {} SNR values, got {}", group.stored().len(), snr.len())));
    }
    if let Some(bad) = snr.iter().find(|l| !(**l >= 0.0) || !l.is_finite()) {
        return Err(Error::Config(format!("SNR must be finite and nonnegative, got {bad}")));
    }
    let truth: Vec<GroupElement> = (0..n).map(|u| group.haar_sample(&mut stream(seed, "truth", u as u64))).collect();
    let mut observations = Vec::with_capacity(snr.len());
    for (r, (&id, &lambda)) in group.stored().iter().zip(snr).enumerate() {
        let desc = group.irrep(id)?;
        let x: Vec<CMat> = truth.iter().map(|g| group.irrep_evaluate(id, g)).collect::<Result<_>>()?;
        observations.push(sample_observation(n, desc.dim, desc.rep_type, lambda, &x, seed, r as u64));
    }
    Ok(SyncInstance { n, group: group.clone(), truth, snr: snr.to_vec(), observations, seed })
}

fn sample_observation(n: usize, d: usize, rep_type: RepType, lambda: f64, x: &[CMat], seed: u64, r: u64) -> BlockMatrix {
    let dim = n * d;
    let sig = lambda / n as f64;
    let noise = 1.0 / ((n * d) as f64).sqrt();
    let signal = |i: usize, j: usize| -> C64 {
        let (u, a) = (i / d, i % d);
        let (v, b) = (j / d, j % d);
        let mut s = ZERO;
        for c in 0..d {
            s += x[u][(a, c)] * x[v][(b, c)].conj();
        }
        s * sig
    };
    let label = "noise";
    match rep_type {
        RepType::Real => {
            let mut a = vec![0.0; dim * dim];
            par::for_chunks_mut(&mut a, dim, |i, row| {
                let mut rng = stream(seed, label, (r << 32) | i as u64);
                row[i] = signal(i, i).re + noise * std::f64::consts::SQRT_2 * normal(&mut rng);
                for j in i + 1..dim {
                    row[j] = signal(i, j).re + noise * normal(&mut rng);
                }
            });
            mirror(&mut a, dim, |x| x);
            BlockMatrix { n, d, entries: Entries::Real(a) }
        }
        RepType::Complex => {
            let mut a = vec![ZERO; dim * dim];
            par::for_chunks_mut(&mut a, dim, |i, row| {
                let mut rng = stream(seed, label, (r << 32) | i as u64);
                row[i] = C64::new(signal(i, i).re + noise * normal(&mut rng), 0.0);
                for j in i + 1..dim {
                    row[j] = signal(i, j) + complex_normal(&mut rng) * noise;
                }
            });
            mirror(&mut a, dim, |z| z.conj());
            BlockMatrix { n, d, entries: Entries::Complex(a) }
        }
        RepType::Quaternionic => {
            let mut a = vec![ZERO; dim * dim];
            par::for_chunks_mut(&mut a, 2 * dim, |bi, rows| {
                let mut rng = stream(seed, label, (r << 32) | bi as u64);
                let (i0, i1) = (2 * bi, 2 * bi + 1);
                let diag = noise * normal(&mut rng);
                rows[i0] = C64::new(signal(i0, i0).re + diag, 0.0);
                rows[dim + i1] = C64::new(signal(i1, i1).re + diag, 0.0);
                rows[i1] = signal(i0, i1);
                rows[dim + i0] = signal(i1, i0);
                for bj in bi + 1..dim / 2 {
                    let (p, q) = quaternion_pair(&mut rng);
                    let (j0, j1) = (2 * bj, 2 * bj + 1);
                    rows[j0] = signal(i0, j0) + p * noise;
                    rows[j1] = signal(i0, j1) + q * noise;
                    rows[dim + j0] = signal(i1, j0) - q.conj() * noise;
                    rows[dim + j1] = signal(i1, j1) + p.conj() * noise;
                }
            });
            mirror(&mut a, dim, |z| z.conj());
            BlockMatrix { n, d, entries: Entries::Complex(a) }
        }
    }
}

/// Copies the upper triangle into the lower one (strictly below the diagonal
/// and outside already-filled entries of 2×2 diagonal blocks).
fn mirror<T: Copy>(a: &mut [T], dim: usize, f: impl Fn(T) -> T) {
    const TILE: usize = 64;
    for ib in (0..dim).step_by(TILE) {
        for jb in (0..=ib).step_by(TILE) {
            for i in ib..(ib + TILE).min(dim) {
                for j in jb..(jb + TILE).min(i) {
                    a[i * dim + j] = f(a[j * dim + i]);
                }
            }
        }
    }
}

/// Y_ρ = d_ρ λ_ρ M_ρ with zero diagonal blocks, one per stored irrep.
#[derive(Clone, Debug)]
pub struct LikelihoodCoefficients {
    pub group: Arc<GroupModel>,
    pub mats: Vec<BlockMatrix>,
}

impl LikelihoodCoefficients {
    /// Wraps externally supplied Y matrices; diagonal blocks are zeroed.
    pub fn new(group: Arc<GroupModel>, mats: Vec<BlockMatrix>) -> Result<Self> {
        if mats.len() != group.stored().len() {
            return Err(Error::Config(format!("expected {} matrices, got {}", group.stored().len(), mats.len())));
        }
        let n = mats.first().map(|m| m.n()).unwrap_or(0);
        for (m, d) in mats.iter().zip(group.stored_descriptors()) {
            if m.block_dim() != d.dim || m.n() != n {
                return Err(Error::Shape(format!("matrix for {} has the wrong shape", d.name())));
            }
        }
        let mats = mats.into_iter().map(|m| m.scaled_off_diagonal(1.0)).collect();
        Ok(LikelihoodCoefficients { group, mats })
    }

    pub fn n(&self) -> usize {
        self.mats.first().map(|m| m.n()).unwrap_or(0)
    }
}

pub fn likelihood_coefficients(instance: &SyncInstance) -> LikelihoodCoefficients {
    let mats = instance
        .observations
        .iter()
        .zip(instance.group.stored_descriptors())
        .zip(&instance.snr)
        .map(|((m, desc), &lambda)| m.scaled_off_diagonal(desc.dim as f64 * lambda))
        .collect();
    LikelihoodCoefficients { group: instance.group.clone(), mats }
}

/// |Y_typ|²: mean squared entry norm over off-diagonal blocks.
pub fn estimate_typ_norm(y: &BlockMatrix) -> f64 {
    y.off_diagonal_mean_sqr()
}

const MAGIC: &[u8; 8] = b"GSYNCv01";

#[derive(Serialize, Deserialize)]
struct Sidecar {
    format: String,
    n: usize,
    group: GroupSpec,
    irreps: Vec<String>,
    snr: Option<Vec<f64>>,
    seed: Option<u64>,
    has_truth: bool,
}

fn paths(prefix: &Path) -> (PathBuf, PathBuf) {
    (prefix.with_extension("bin"), prefix.with_extension("json"))
}

fn read_f64(r: &mut impl Read) -> std::io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn write_element(w: &mut impl Write, g: &GroupElement) -> std::io::Result<()> {
    match g {
        GroupElement::Cyclic(i) | GroupElement::Finite(i) => w.write_all(&(*i as u64).to_le_bytes()),
        GroupElement::Angle(t) => w.write_all(&t.to_le_bytes()),
        GroupElement::Rotation(q) => {
            for row in q {
                for x in row {
                    w.write_all(&x.to_le_bytes())?;
                }
            }
            Ok(())
        }
    }
}

fn read_element(r: &mut impl Read, like: &GroupElement) -> std::io::Result<GroupElement> {
    Ok(match like {
        GroupElement::Cyclic(_) | GroupElement::Finite(_) => {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            let i = u64::from_le_bytes(b) as usize;
            if matches!(like, GroupElement::Cyclic(_)) {
                GroupElement::Cyclic(i)
            } else {
                GroupElement::Finite(i)
            }
        }
        GroupElement::Angle(_) => GroupElement::Angle(read_f64(r)?),
        GroupElement::Rotation(_) => {
            let mut q = [[0.0; 3]; 3];
            for row in q.iter_mut() {
                for x in row.iter_mut() {
                    *x = read_f64(r)?;
                }
            }
            GroupElement::Rotation(q)
        }
    })
}

fn write_bundle(
    prefix: &Path,
    group: &GroupModel,
    n: usize,
    truth: Option<&[GroupElement]>,
    mats: &[BlockMatrix],
    snr: Option<&[f64]>,
    seed: Option<u64>,
) -> Result<()> {
    let (bin, json) = paths(prefix);
    let sidecar = Sidecar {
        format: "groupsync-bundle-1".into(),
        n,
        group: group.spec().clone(),
        irreps: group.stored_descriptors().map(|d| d.name()).collect(),
        snr: snr.map(|s| s.to_vec()),
        seed,
        has_truth: truth.is_some(),
    };
    let mut w = std::io::BufWriter::new(std::fs::File::create(&bin)?);
    w.write_all(MAGIC)?;
    if let Some(t) = truth {
        for g in t {
            write_element(&mut w, g)?;
        }
    }
    for m in mats {
        m.write_to(&mut w)?;
    }
    w.flush()?;
    std::fs::write(json, serde_json::to_string_pretty(&sidecar)?)?;
    Ok(())
}

struct Bundle {
    group: Arc<GroupModel>,
    n: usize,
    truth: Option<Vec<GroupElement>>,
    mats: Vec<BlockMatrix>,
    snr: Option<Vec<f64>>,
    seed: Option<u64>,
}

fn read_bundle(prefix: &Path) -> Result<Bundle> {
    let (bin, json) = paths(prefix);
    let sidecar: Sidecar = serde_json::from_str(&std::fs::read_to_string(json)?)?;
    let group = Arc::new(sidecar.group.build()?);
    let mut r = std::io::BufReader::new(std::fs::File::open(bin)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Config("not a groupsync bundle".into()));
    }
    let truth = if sidecar.has_truth {
        let like = group.identity();
        Some((0..sidecar.n).map(|_| read_element(&mut r, &like)).collect::<std::io::Result<Vec<_>>>()?)
    } else {
        None
    };
    let mats = group
        .stored_descriptors()
        .map(|d| BlockMatrix::read_from(&mut r, sidecar.n, d.dim))
        .collect::<Result<Vec<_>>>()?;
    Ok(Bundle { group, n: sidecar.n, truth, mats, snr: sidecar.snr, seed: sidecar.seed })
}

/// Writes `<prefix>.bin` (raw little-endian payload) and `<prefix>.json` (metadata).
pub fn write_instance(instance: &SyncInstance, prefix: &Path) -> Result<()> {
    write_bundle(
        prefix,
        &instance.group,
        instance.n,
        Some(&instance.truth),
        &instance.observations,
        Some(&instance.snr),
        Some(instance.seed),
    )
}

pub fn read_instance(prefix: &Path) -> Result<SyncInstance> {
    let b = read_bundle(prefix)?;
    let truth = b.truth.ok_or_else(|| Error::Config("bundle holds no ground truth".into()))?;
    let snr = b.snr.ok_or_else(|| Error::Config("bundle holds no SNR values".into()))?;
    Ok(SyncInstance { n: b.n, group: b.group, truth, snr, observations: b.mats, seed: b.seed.unwrap_or(0) })
}

pub fn write_coefficients(y: &LikelihoodCoefficients, prefix: &Path) -> Result<()> {
    write_bundle(prefix, &y.group, y.n(), None, &y.mats, None, None)
}

pub fn read_coefficients(prefix: &Path) -> Result<LikelihoodCoefficients> {
    let b = read_bundle(prefix)?;
    LikelihoodCoefficients::new(b.group, b.mats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::FiniteGroup;
    use crate::rng::stream;

    fn q8() -> Arc<GroupModel> {
        let text = include_str!("../tests/data/q8.group");
        let g = FiniteGroup::parse(text).unwrap();
        Arc::new(GroupModel::finite(Arc::new(g), None, GroupSpec::Finite { source: "q8".into(), irreps: None }).unwrap())
    }

    #[test]
    fn hermitian_and_typed_blocks() {
        let groups = vec![
            Arc::new(GroupModel::cyclic(2, 1).unwrap()),
            Arc::new(GroupModel::u1(2, 64).unwrap()),
            Arc::new(GroupModel::so3(1, 4096).unwrap()),
            q8(),
        ];
        for g in groups {
            let snr = vec![1.3; g.stored().len()];
            let inst = sample_instance(&g, 12, &snr, 9).unwrap();
            for (m, d) in inst.observations.iter().zip(g.stored_descriptors()) {
                assert!(m.hermitian_defect() < 1e-12);
                for u in 0..12 {
                    for v in 0..12 {
                        let b = m.block(u, v);
                        match d.rep_type {
                            RepType::Real => assert!(b.is_real(0.0)),
                            RepType::Quaternionic => assert!(b.quaternion_defect() < 1e-12),
                            RepType::Complex => {}
                        }
                    }
                }
            }
            for d in g.irreps() {
                if let Some(c) = d.conjugate_id {
                    let a = inst.observation(d.id).unwrap();
                    let b = inst.observation(c).unwrap();
                    assert_eq!(*a, b.conj());
                }
            }
        }
    }

    #[test]
    fn noise_scale() {
        let g = Arc::new(GroupModel::u1(1, 64).unwrap());
        let inst = sample_instance(&g, 300, &[0.0], 4).unwrap();
        let ms = inst.observations[0].off_diagonal_mean_sqr();
        assert!((ms * 300.0 - 1.0).abs() < 0.05, "{ms}");
        let so3 = Arc::new(GroupModel::so3(1, 4096).unwrap());
        let inst = sample_instance(&so3, 100, &[0.0], 4).unwrap();
        let ms = inst.observations[0].off_diagonal_mean_sqr();
        assert!((ms * 300.0 - 1.0).abs() < 0.05, "{ms}");
    }

    #[test]
    fn noise_blocks() {
        let mut rng = stream(2, "z", 0);
        let m = 10_000;
        let v: f64 = (0..m).map(|_| gaussian_noise_block(RepType::Real, 1, &mut rng).unwrap()[(0, 0)].re.powi(2)).sum::<f64>() / m as f64;
        assert!((v - 1.0).abs() < 0.05);
        let v: f64 = (0..m).map(|_| gaussian_noise_block(RepType::Complex, 1, &mut rng).unwrap()[(0, 0)].norm_sqr()).sum::<f64>() / m as f64;
        assert!((v - 1.0).abs() < 0.05);
        let q = gaussian_noise_block(RepType::Quaternionic, 4, &mut rng).unwrap();
        assert_eq!(q.quaternion_defect(), 0.0);
        assert!(gaussian_noise_block(RepType::Quaternionic, 3, &mut rng).is_err());
    }

    #[test]
    fn coefficients_scale_and_zero_diagonal() {
        let g = Arc::new(GroupModel::so3(1, 4096).unwrap());
        let inst = sample_instance(&g, 6, &[2.0], 1).unwrap();
        let y = likelihood_coefficients(&inst);
        for u in 0..6 {
            for v in 0..6 {
                let b = y.mats[0].block(u, v);
                if u == v {
                    assert_eq!(b.frobenius(), 0.0);
                } else {
                    assert!(b.max_abs_diff(&inst.observations[0].block(u, v).scale(6.0)) < 1e-15);
                }
            }
        }
        let zero = sample_instance(&g, 6, &[0.0], 1).unwrap();
        assert_eq!(likelihood_coefficients(&zero).mats[0].off_diagonal_mean_sqr(), 0.0);
    }

    #[test]
    fn conjugate_snr_mismatch_is_rejected() {
        let g = GroupModel::u1(2, 64).unwrap();
        assert!(snr_from_full(&g, &[1.0, 1.0, 2.0, 2.0]).is_ok());
        assert!(matches!(snr_from_full(&g, &[1.0, 1.5, 2.0, 2.0]), Err(Error::Config(_))));
    }

    #[test]
    fn matvec_matches_naive() {
        for g in [Arc::new(GroupModel::cyclic(2, 1).unwrap()), Arc::new(GroupModel::u1(1, 16).unwrap()), q8()] {
            let inst = sample_instance(&g, 40, &vec![1.0; g.stored().len()], 3).unwrap();
            let m = &inst.observations[0];
            let d = m.block_dim();
            let mut rng = stream(1, "v", 0);
            let v: Vec<C64> = (0..m.dim() * d).map(|_| complex_normal(&mut rng)).collect();
            let fast = m.mul_stacked(&v, d);
            for i in 0..m.dim() {
                for c in 0..d {
                    let slow: C64 = (0..m.dim()).map(|j| m.get(i, j) * v[j * d + c]).sum();
                    assert!((slow - fast[i * d + c]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn bundle_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        for g in [Arc::new(GroupModel::u1(2, 64).unwrap()), Arc::new(GroupModel::so3(1, 4096).unwrap())] {
            let inst = sample_instance(&g, 10, &vec![1.7; g.stored().len()], 5).unwrap();
            let prefix = dir.path().join("inst");
            write_instance(&inst, &prefix).unwrap();
            let back = read_instance(&prefix).unwrap();
            assert_eq!(back.truth, inst.truth);
            assert_eq!(back.observations, inst.observations);
            assert_eq!(back.snr, inst.snr);
            let y = likelihood_coefficients(&inst);
            write_coefficients(&y, &prefix).unwrap();
            assert_eq!(read_coefficients(&prefix).unwrap().mats, y.mats);
        }
    }
}
