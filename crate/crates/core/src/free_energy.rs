//! Bethe free energy of the scalar channel and phase classification.
//!
//! f(γ) = −¼ Σ d²λ² + ½ Σ dγ + ¼ Σ γ²/λ² − E_z log E_g exp(Σ ⟨ρ(g), γI + √γ z⟩),
//! summed over the full irrep list (a complex pair counts twice). The last
//! term is a Monte Carlo average; it is evaluated on one shared bank of
//! draws and regressed on Hermite polynomials of the draws, whose means are
//! known to be zero.

use crate::error::{Error, Result};
use crate::groups::GroupModel;
use crate::par;
use crate::rng::child_seed;
use crate::state_evolution::{
    check_gamma, identity_features, se_fixed_point, GammaVector, NoiseBank, SeConfig, DEFAULT_GAMMA0,
};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::Mutex;

const CHUNK: usize = 256;
const MAX_CV_TERMS: usize = 80;
const MAX_CV_DEGREE: usize = 4;

/// The exact part: −¼ Σ m d²λ² + ½ Σ m dγ + ¼ Σ m γ²/λ².
pub fn polynomial_terms(gamma: &[f64], lambda: &[f64], group: &GroupModel) -> Result<f64> {
    check_gamma(group, gamma)?;
    if lambda.len() != gamma.len() {
        return Err(Error::Shape("λ and γ lengths differ".into()));
    }
    let mut f = 0.0;
    for (d, (&g, &l)) in group.stored_descriptors().zip(gamma.iter().zip(lambda)) {
        if l == 0.0 && g > 0.0 {
            return Err(Error::Domain(format!("γ = {g} on irrep {} with λ = 0", d.name())));
        }
        let m = group.multiplicity(d.id);
        let dim = d.dim as f64;
        f += m * (-0.25 * dim * dim * l * l + 0.5 * dim * g);
        if g > 0.0 {
            f += m * 0.25 * g * g / (l * l);
        }
    }
    Ok(f)
}

fn hermite(k: usize, x: f64) -> f64 {
    match k {
        0 => 1.0,
        1 => x,
        2 => x * x - 1.0,
        3 => x * x * x - 3.0 * x,
        _ => {
            let (mut a, mut b) = (x * x * x - 3.0 * x, x * x - 1.0);
            for j in 3..k {
                let c = x * a - j as f64 * b;
                b = a;
                a = c;
            }
            a
        }
    }
}

/// Multi-indices of the Hermite regressors for p standard normal coordinates.
fn cv_terms(p: usize) -> Vec<Vec<(usize, usize)>> {
    let binom = |n: usize, k: usize| (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1));
    let degree = (1..=MAX_CV_DEGREE).rev().find(|&d| binom(p + d, d) - 1 <= MAX_CV_TERMS).unwrap_or(0);
    if degree >= 2 {
        let mut out = Vec::new();
        let mut idx = vec![0usize; p];
        fn rec(pos: usize, left: usize, idx: &mut Vec<usize>, out: &mut Vec<Vec<(usize, usize)>>) {
            if pos == idx.len() {
                let term: Vec<(usize, usize)> =
                    idx.iter().enumerate().filter(|(_, &k)| k > 0).map(|(j, &k)| (j, k)).collect();
                if !term.is_empty() {
                    out.push(term);
                }
                return;
            }
            for k in 0..=left {
                idx[pos] = k;
                rec(pos + 1, left - k, idx, out);
            }
            idx[pos] = 0;
        }
        rec(0, degree, &mut idx, &mut out);
        out
    } else if 2 * p <= MAX_CV_TERMS {
        (0..p).flat_map(|j| [vec![(j, 1)], vec![(j, 2)]]).collect()
    } else if p <= MAX_CV_TERMS {
        (0..p).map(|j| vec![(j, 1)]).collect()
    } else {
        Vec::new()
    }
}

/// Least-squares control variates with intercept, factored once per bank.
#[derive(Debug)]
struct ControlVariates {
    x: DMatrix<f64>,
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

impl ControlVariates {
    fn new(bank: &NoiseBank) -> Result<Self> {
        let terms = cv_terms(bank.dimension());
        let m = bank.samples();
        let q = terms.len() + 1;
        let x = DMatrix::from_fn(m, q, |s, j| {
            if j == 0 {
                1.0
            } else {
                let z = bank.coords(s);
                terms[j - 1].iter().map(|&(v, k)| hermite(k, z[v])).product()
            }
        });
        let xtx = x.tr_mul(&x);
        let chol = xtx.cholesky().ok_or_else(|| Error::Numerical("control-variate design is singular".into()))?;
        Ok(ControlVariates { x, chol })
    }

    /// Intercept and its standard error.
    fn fit(&self, y: &[f64]) -> (f64, f64) {
        let m = y.len();
        let yv = DVector::from_column_slice(y);
        let beta = self.chol.solve(&self.x.tr_mul(&yv));
        let resid = &yv - &self.x * &beta;
        let dof = (m as f64 - self.x.ncols() as f64).max(1.0);
        let s = (resid.norm_squared() / dof).sqrt();
        (beta[0], s / (m as f64).sqrt())
    }
}

/// Free-energy evaluation on a fixed bank of draws (common random numbers).
#[derive(Debug)]
pub struct Evaluator<'g> {
    group: &'g GroupModel,
    bank: NoiseBank,
    cv: ControlVariates,
    eye: Vec<f64>,
    cache: Mutex<HashMap<Vec<u64>, (f64, f64)>>,
}

impl<'g> Evaluator<'g> {
    pub fn new(group: &'g GroupModel, mc_samples: usize, seed: u64) -> Result<Self> {
        if mc_samples < 2 * (MAX_CV_TERMS + 1) {
            return Err(Error::Config(format!("need at least {} Monte Carlo samples", 2 * (MAX_CV_TERMS + 1))));
        }
        let bank = NoiseBank::draw(group, mc_samples, seed, "free-energy")?;
        let cv = ControlVariates::new(&bank)?;
        Ok(Evaluator { group, bank, cv, eye: identity_features(group), cache: Mutex::new(HashMap::new()) })
    }

    pub fn group(&self) -> &GroupModel {
        self.group
    }

    /// log E_g exp(Σ ⟨ρ(g), w_s⟩) for every draw s.
    pub fn entropy_samples(&self, gamma: &[f64]) -> Result<Vec<f64>> {
        check_gamma(self.group, gamma)?;
        let table = self.group.table();
        let mut out = vec![0.0; self.bank.samples()];
        if gamma.iter().all(|&g| g == 0.0) {
            return Ok(out);
        }
        par::for_chunks_mut(&mut out, CHUNK, |c, dst| {
            let mut ws = table.workspace();
            for (i, o) in dst.iter_mut().enumerate() {
                self.bank.channel(self.group, c * CHUNK + i, gamma, &self.eye, &mut ws.x);
                *o = table.log_partition(&ws.x, &mut ws.s);
            }
        });
        Ok(out)
    }

    /// E_z log E_g exp(…) with its standard error; cached per γ.
    pub fn entropy(&self, gamma: &[f64]) -> Result<(f64, f64)> {
        let key: Vec<u64> = gamma.iter().map(|g| g.to_bits()).collect();
        if let Some(v) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(*v);
        }
        let v = if gamma.iter().all(|&g| g == 0.0) {
            check_gamma(self.group, gamma)?;
            (0.0, 0.0)
        } else {
            self.cv.fit(&self.entropy_samples(gamma)?)
        };
        self.cache.lock().expect("cache lock").insert(key, v);
        Ok(v)
    }

    pub fn free_energy(&self, gamma: &[f64], lambda: &[f64]) -> Result<(f64, f64)> {
        let poly = polynomial_terms(gamma, lambda, self.group)?;
        let (h, se) = self.entropy(gamma)?;
        Ok((poly - h, se))
    }

    /// f(a) − f(b) with a paired standard error.
    pub fn difference(&self, a: &[f64], b: &[f64], lambda: &[f64]) -> Result<(f64, f64)> {
        let poly = polynomial_terms(a, lambda, self.group)? - polynomial_terms(b, lambda, self.group)?;
        let ya = self.entropy_samples(a)?;
        let yb = self.entropy_samples(b)?;
        let diff: Vec<f64> = ya.iter().zip(&yb).map(|(x, y)| x - y).collect();
        let (h, se) = self.cv.fit(&diff);
        Ok((poly - h, se))
    }

    /// Central-difference gradient with paired standard errors.
    pub fn gradient(&self, gamma: &[f64], lambda: &[f64], h: f64) -> Result<Vec<(f64, f64)>> {
        (0..gamma.len())
            .map(|k| {
                let mut up = gamma.to_vec();
                let mut down = gamma.to_vec();
                up[k] += h;
                down[k] = (down[k] - h).max(0.0);
                let (d, se) = self.difference(&up, &down, lambda)?;
                let width = up[k] - down[k];
                Ok((d / width, se / width))
            })
            .collect()
    }
}

/// One-shot f(γ) with its Monte Carlo standard error.
pub fn bethe_free_energy(gamma: &[f64], lambda: &[f64], group: &GroupModel, mc_samples: usize, seed: u64) -> Result<(f64, f64)> {
    polynomial_terms(gamma, lambda, group)?;
    Evaluator::new(group, mc_samples, seed)?.free_energy(gamma, lambda)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    /// Stored-irrep position this axis varies.
    pub irrep: usize,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn uniform(irrep: usize, step: f64, max: f64) -> Self {
        let n = (max / step).floor() as usize;
        Axis { irrep, values: (0..=n).map(|k| k as f64 * step).collect() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandscapeGrid {
    pub axes: Vec<Axis>,
    /// Row-major over the axes (the last axis varies fastest).
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl LandscapeGrid {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Grid coordinates of a flat index, one per axis.
    pub fn coordinates(&self, mut index: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.axes.len()];
        for (k, axis) in self.axes.iter().enumerate().rev() {
            out[k] = axis.values[index % axis.values.len()];
            index /= axis.values.len();
        }
        out
    }

    /// Full γ vector for a flat index; irreps off the axes are 0.
    pub fn gamma(&self, index: usize, n_irreps: usize) -> GammaVector {
        let mut g = vec![0.0; n_irreps];
        for (axis, v) in self.axes.iter().zip(self.coordinates(index)) {
            g[axis.irrep] = v;
        }
        g
    }

    pub fn argmin(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v < self.values[best] {
                best = i;
            }
        }
        best
    }
}

impl Evaluator<'_> {
    pub fn scan(&self, axes: &[Axis], lambda: &[f64]) -> Result<LandscapeGrid> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(Error::Config(format!("landscape scans take 1 or 2 axes, got {}", axes.len())));
        }
        let k = self.group.stored().len();
        if let Some(a) = axes.iter().find(|a| a.irrep >= k || a.values.is_empty()) {
            return Err(Error::Config(format!("bad scan axis on irrep position {}", a.irrep)));
        }
        let total: usize = axes.iter().map(|a| a.values.len()).product();
        let mut grid = LandscapeGrid { axes: axes.to_vec(), values: Vec::new(), stderr: Vec::new() };
        let results: Vec<Result<(f64, f64)>> = (0..total).map(|i| self.free_energy(&grid.gamma(i, k), lambda)).collect();
        for r in results {
            let (v, s) = r?;
            grid.values.push(v);
            grid.stderr.push(s);
        }
        Ok(grid)
    }

    /// Coordinate-wise golden-section search inside ±radius of a start point.
    pub fn refine(&self, start: &[f64], axes: &[usize], lambda: &[f64], radius: f64) -> Result<(GammaVector, f64)> {
        let mut best = start.to_vec();
        let mut best_val = self.free_energy(&best, lambda)?.0;
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        for _round in 0..2 {
            for &k in axes {
                let mut lo = (best[k] - radius).max(0.0);
                let mut hi = best[k] + radius;
                let eval = |x: f64, base: &[f64]| -> Result<f64> {
                    let mut g = base.to_vec();
                    g[k] = x;
                    Ok(self.free_energy(&g, lambda)?.0)
                };
                let mut x1 = hi - phi * (hi - lo);
                let mut x2 = lo + phi * (hi - lo);
                let mut f1 = eval(x1, &best)?;
                let mut f2 = eval(x2, &best)?;
                while hi - lo > 1e-4 {
                    if f1 < f2 {
                        hi = x2;
                        x2 = x1;
                        f2 = f1;
                        x1 = hi - phi * (hi - lo);
                        f1 = eval(x1, &best)?;
                    } else {
                        lo = x1;
                        x1 = x2;
                        f1 = f2;
                        x2 = lo + phi * (hi - lo);
                        f2 = eval(x2, &best)?;
                    }
                }
                let (x, v) = if f1 < f2 { (x1, f1) } else { (x2, f2) };
                if v < best_val {
                    best[k] = x;
                    best_val = v;
                }
            }
        }
        Ok((best, best_val))
    }
}

/// Scan over axes with a fresh bank of draws.
pub fn landscape_scan(axes: &[Axis], lambda: &[f64], group: &GroupModel, mc_samples: usize, seed: u64) -> Result<LandscapeGrid> {
    Evaluator::new(group, mc_samples, seed)?.scan(axes, lambda)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub step: f64,
    /// Per-axis upper bound; defaults to 4·max(1, λ²d).
    pub gamma_max: Option<f64>,
    pub mc_samples: usize,
    /// Fresh draws used to confirm the depth of the candidate minimum.
    pub confirm_samples: usize,
    pub seed: u64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig { step: 0.05, gamma_max: None, mc_samples: 10_000, confirm_samples: 100_000, seed: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Impossible,
    Hard,
    Easy,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Impossible => "impossible",
            Phase::Hard => "hard",
            Phase::Easy => "easy",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub lambda: Vec<f64>,
    pub global_min: GammaVector,
    pub amp_min: GammaVector,
    pub phase: Phase,
    /// f(candidate) − f(0) and its standard error on the confirmation draws.
    pub margin: f64,
    pub margin_se: f64,
    /// The candidate minimum is within 3 standard errors of f(0).
    pub uncertain: bool,
    /// Best point of the scan before confirmation.
    pub candidate: GammaVector,
}

/// Threshold above which a γ counts as nonzero for SE fixed points.
pub const NONZERO_GAMMA: f64 = 1e-3;

fn free_axes(lambda: &[f64]) -> Vec<usize> {
    lambda.iter().enumerate().filter(|(_, l)| **l > 0.0).map(|(k, _)| k).collect()
}

fn default_gamma_max(group: &GroupModel, lambda: &[f64]) -> f64 {
    let lmax = lambda.iter().cloned().fold(0.0, f64::max);
    4.0 * (lmax * lmax * group.max_dim() as f64).max(1.0)
}

/// Lowest point of the free energy: grid scan plus refinement for one or two
/// free axes, otherwise the best of several state-evolution fixed points.
pub fn global_minimum(evaluator: &Evaluator, lambda: &[f64], scan: &ScanConfig, se: &SeConfig) -> Result<GammaVector> {
    let group = evaluator.group();
    let axes_idx = free_axes(lambda);
    let k = lambda.len();
    if axes_idx.is_empty() {
        return Ok(vec![0.0; k]);
    }
    if axes_idx.len() <= 2 {
        let gmax = scan.gamma_max.unwrap_or_else(|| default_gamma_max(group, lambda));
        let axes: Vec<Axis> = axes_idx.iter().map(|&i| Axis::uniform(i, scan.step, gmax)).collect();
        let grid = evaluator.scan(&axes, lambda)?;
        let best = grid.gamma(grid.argmin(), k);
        if best.iter().all(|&g| g == 0.0) {
            return Ok(best);
        }
        return Ok(evaluator.refine(&best, &axes_idx, lambda, scan.step)?.0);
    }
    let mut best = vec![0.0; k];
    let mut best_val = evaluator.free_energy(&best, lambda)?.0;
    let starts: Vec<GammaVector> = vec![
        lambda.iter().map(|&l| if l > 0.0 { DEFAULT_GAMMA0 } else { 0.0 }).collect(),
        group.stored_descriptors().zip(lambda).map(|(d, &l)| d.dim as f64 * l * l).collect(),
        lambda.iter().map(|&l| if l > 0.0 { 0.7 } else { 0.0 }).collect(),
    ];
    for start in starts {
        let fp = se_fixed_point(&start, lambda, group, se)?.fixed_point;
        let v = evaluator.free_energy(&fp, lambda)?.0;
        if v < best_val {
            best_val = v;
            best = fp;
        }
    }
    Ok(best)
}

pub fn classify_phase(lambda: &[f64], group: &GroupModel, scan: &ScanConfig, se: &SeConfig) -> Result<PhaseReport> {
    let evaluator = Evaluator::new(group, scan.mc_samples, child_seed(scan.seed, "scan", 0))?;
    classify_with(&evaluator, lambda, scan, se)
}

/// Classification reusing an evaluator (and its cache) across calls.
pub fn classify_with(evaluator: &Evaluator, lambda: &[f64], scan: &ScanConfig, se: &SeConfig) -> Result<PhaseReport> {
    let group = evaluator.group();
    let k = group.stored().len();
    if lambda.len() != k {
        return Err(Error::Shape(format!("expected {k} λ values, got {}", lambda.len())));
    }
    let candidate = global_minimum(evaluator, lambda, scan, se)?;
    let zero = vec![0.0; k];
    let (margin, margin_se) = if candidate == zero {
        (0.0, 0.0)
    } else {
        let confirm = Evaluator::new(group, scan.confirm_samples, child_seed(scan.seed, "confirm", 0))?;
        confirm.difference(&candidate, &zero, lambda)?
    };
    let global_nonzero = margin < -3.0 * margin_se;
    let uncertain = candidate != zero && margin.abs() < 3.0 * margin_se;
    let start: Vec<f64> = lambda.iter().map(|&l| if l > 0.0 { DEFAULT_GAMMA0 } else { 0.0 }).collect();
    let amp_min = se_fixed_point(&start, lambda, group, se)?.fixed_point;
    let amp_nonzero = amp_min.iter().any(|&g| g > NONZERO_GAMMA);
    let phase = if amp_nonzero {
        Phase::Easy
    } else if global_nonzero {
        Phase::Hard
    } else {
        Phase::Impossible
    };
    // A nonzero SE fixed point that is not confirmed deeper than the origin
    // does not move the global minimum.
    let global_min = if global_nonzero { candidate.clone() } else { zero };
    Ok(PhaseReport { lambda: lambda.to_vec(), global_min, amp_min, phase, margin, margin_se, uncertain, candidate })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BisectionStep {
    pub lambda: f64,
    pub margin: f64,
    pub margin_se: f64,
    pub nonzero: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bisection {
    pub estimate: f64,
    pub steps: Vec<BisectionStep>,
}

/// Smallest λ (applied to every irrep) whose global free-energy minimum is
/// nonzero, by bisection on the sign of the confirmed depth f(γ*) − f(0).
pub fn gap_onset(group: &GroupModel, lo: f64, hi: f64, tol: f64, scan: &ScanConfig) -> Result<Bisection> {
    if !(lo < hi) {
        return Err(Error::Config(format!("bisection needs lo < hi, got [{lo}, {hi}]")));
    }
    let evaluator = Evaluator::new(group, scan.mc_samples, child_seed(scan.seed, "scan", 0))?;
    let confirm = Evaluator::new(group, scan.confirm_samples, child_seed(scan.seed, "confirm", 0))?;
    let k = group.stored().len();
    let se = SeConfig::default();
    let mut steps = Vec::new();
    let mut probe = |l: f64| -> Result<bool> {
        let lambda = vec![l; k];
        let cand = global_minimum(&evaluator, &lambda, scan, &se)?;
        let zero = vec![0.0; k];
        let (margin, margin_se) =
            if cand == zero { (0.0, 0.0) } else { confirm.difference(&cand, &zero, &lambda)? };
        let nonzero = margin < 0.0;
        steps.push(BisectionStep { lambda: l, margin, margin_se, nonzero });
        Ok(nonzero)
    };
    let (mut a, mut b) = (lo, hi);
    if probe(a)? || !probe(b)? {
        return Err(Error::Numerical(format!("no sign change of the free-energy depth on [{lo}, {hi}]")));
    }
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if probe(mid)? {
            b = mid;
        } else {
            a = mid;
        }
    }
    Ok(Bisection { estimate: 0.5 * (a + b), steps })
}
