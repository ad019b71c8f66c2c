//! Peter–Weyl basis values at the quadrature nodes, flattened to real features.
//!
//! For coefficient blocks C (one per stored irrep) the log-density at node i
//! is S_i = Σ_ρ m_ρ Re⟨C_ρ, R_ρ(g_i)⟩, with m_ρ = 2 for a stored complex irrep
//! (its partner contributes the conjugate term). Writing the real and
//! imaginary parts of every R_ρ entry as a feature row Φ_i, this is a dot
//! product S_i = Φ_i · x with x holding m_ρ Re C and m_ρ Im C. The posterior
//! mean of R_ρ is then a weighted column sum of Φ.

use super::{GroupModel, RepType};
use crate::error::{Error, Result};
use crate::linalg::{dot, CMat, C64};

/// Where a stored irrep's entries live in the feature vector.
#[derive(Clone, Debug)]
pub struct Slot {
    pub irrep: usize,
    pub dim: usize,
    pub offset: usize,
    /// Real irreps carry no imaginary features.
    pub imag: bool,
    pub mult: f64,
}

impl Slot {
    pub fn len(&self) -> usize {
        let d2 = self.dim * self.dim;
        if self.imag {
            2 * d2
        } else {
            d2
        }
    }

    pub fn is_empty(&self) -> bool {
        self.dim == 0
    }
}

#[derive(Clone, Debug, Default)]
pub struct HarmonicTable {
    n_nodes: usize,
    width: usize,
    phi: Vec<f64>,
    log_weights: Vec<f64>,
    slots: Vec<Slot>,
}

impl HarmonicTable {
    pub(super) fn build(model: &GroupModel) -> Self {
        let mut slots = Vec::new();
        let mut width = 0;
        for d in model.stored_descriptors() {
            let slot = Slot {
                irrep: d.id,
                dim: d.dim,
                offset: width,
                imag: d.rep_type != RepType::Real,
                mult: model.multiplicity(d.id),
            };
            width += slot.len();
            slots.push(slot);
        }
        let n = model.nodes().len();
        let mut phi = vec![0.0; n * width];
        for (i, g) in model.nodes().iter().enumerate() {
            let row = &mut phi[i * width..(i + 1) * width];
            for s in &slots {
                let r = model.peter_weyl_basis(s.irrep, g).expect("stored irrep evaluates");
                let d2 = s.dim * s.dim;
                for (k, z) in r.as_slice().iter().enumerate() {
                    row[s.offset + k] = z.re;
                    if s.imag {
                        row[s.offset + d2 + k] = z.im;
                    }
                }
            }
        }
        let log_weights = model.weights().iter().map(|w| w.ln()).collect();
        HarmonicTable { n_nodes: n, width, phi, log_weights, slots }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.phi[i * self.width..(i + 1) * self.width]
    }

    /// Feature vector of coefficient blocks in the ⟨C, R⟩ convention.
    pub fn encode(&self, blocks: &[CMat], x: &mut [f64]) {
        self.encode_scaled(blocks, x, false)
    }

    /// Feature vector of blocks w in the ⟨w, ρ⟩ convention (C = w/√d).
    pub fn encode_mmse(&self, blocks: &[CMat], x: &mut [f64]) {
        self.encode_scaled(blocks, x, true)
    }

    fn encode_scaled(&self, blocks: &[CMat], x: &mut [f64], mmse: bool) {
        debug_assert_eq!(blocks.len(), self.slots.len());
        for (s, b) in self.slots.iter().zip(blocks) {
            let scale = if mmse { s.mult / (s.dim as f64).sqrt() } else { s.mult };
            let d2 = s.dim * s.dim;
            for (k, z) in b.as_slice().iter().enumerate() {
                x[s.offset + k] = scale * z.re;
                if s.imag {
                    x[s.offset + d2 + k] = scale * z.im;
                }
            }
        }
    }

    /// Blocks from feature means (inverse of the feature layout, no multiplicity).
    pub fn decode(&self, means: &[f64]) -> Vec<CMat> {
        self.slots
            .iter()
            .map(|s| {
                let d2 = s.dim * s.dim;
                let data = (0..d2)
                    .map(|k| C64::new(means[s.offset + k], if s.imag { means[s.offset + d2 + k] } else { 0.0 }))
                    .collect();
                CMat::from_vec(s.dim, s.dim, data)
            })
            .collect()
    }

    /// S_i for every node.
    pub fn log_density(&self, x: &[f64], s: &mut [f64]) {
        for (i, out) in s.iter_mut().enumerate() {
            *out = dot(self.row(i), x);
        }
    }

    /// Replaces `s` (log-densities) by normalized posterior weights
    /// w_i e^{S_i} / Σ_j w_j e^{S_j} and returns log Σ_j w_j e^{S_j}.
    pub fn normalize(&self, s: &mut [f64]) -> Result<f64> {
        let mut smax = f64::NEG_INFINITY;
        for (v, lw) in s.iter_mut().zip(&self.log_weights) {
            *v += lw;
            smax = smax.max(*v);
        }
        let mut z = 0.0;
        for v in s.iter_mut() {
            *v = (*v - smax).exp();
            z += *v;
        }
        if !(z > 1e-300) || !z.is_finite() {
            return Err(Error::Numerical(format!("partition sum {z} after max-shift")));
        }
        let inv = 1.0 / z;
        s.iter_mut().for_each(|v| *v *= inv);
        Ok(smax + z.ln())
    }

    /// Σ_i p_i Φ_i.
    pub fn moments(&self, p: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (i, &pi) in p.iter().enumerate() {
            if pi == 0.0 {
                continue;
            }
            for (o, f) in out.iter_mut().zip(self.row(i)) {
                *o += pi * f;
            }
        }
    }

    /// Node maximizing S; ties go to the lowest index.
    pub fn argmax(&self, x: &[f64]) -> usize {
        let mut best = 0;
        let mut best_val = f64::NEG_INFINITY;
        for i in 0..self.n_nodes {
            let v = dot(self.row(i), x);
            if v > best_val {
                best_val = v;
                best = i;
            }
        }
        best
    }

    pub fn workspace(&self) -> Workspace {
        Workspace { x: vec![0.0; self.width], s: vec![0.0; self.n_nodes], m: vec![0.0; self.width] }
    }

    /// The ℰ transform on features: fills `ws.m` with the posterior means of
    /// the features given `ws.x`; returns the log partition sum.
    pub fn transform_features(&self, ws: &mut Workspace) -> Result<f64> {
        self.log_density(&ws.x, &mut ws.s);
        let logz = self.normalize(&mut ws.s)?;
        self.moments(&ws.s, &mut ws.m);
        Ok(logz)
    }

    /// log Σ_i w_i e^{S_i} for features `x`.
    pub fn log_partition(&self, x: &[f64], s: &mut [f64]) -> f64 {
        self.log_density(x, s);
        let mut smax = f64::NEG_INFINITY;
        for (v, lw) in s.iter_mut().zip(&self.log_weights) {
            *v += lw;
            smax = smax.max(*v);
        }
        let z: f64 = s.iter().map(|v| (v - smax).exp()).sum();
        smax + z.ln()
    }
}

/// Scratch buffers for repeated transforms.
#[derive(Clone, Debug)]
pub struct Workspace {
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    pub m: Vec<f64>,
}
