//! SO(3): real irreps from harmonic tensors and an Euler-angle product rule.
//!
//! The degree-k irrep acts on symmetric traceless rank-k tensors in R³.
//! With B an orthonormal basis of that (2k+1)-dimensional subspace, the
//! representation is ρ_k(Q) = Bᵀ (Q ⊗ … ⊗ Q) B, which is real orthogonal.

use super::GroupElement;
use crate::error::{Error, Result};
use crate::linalg::gauss_legendre;
use nalgebra::{DMatrix, Matrix3, SymmetricEigen};
use std::f64::consts::PI;

pub const MAX_DEGREE: usize = 6;

/// Orthonormal basis (3^k × (2k+1)) of symmetric traceless rank-k tensors.
pub fn harmonic_basis(k: usize) -> DMatrix<f64> {
    let size = 3usize.pow(k as u32);
    // G = (I - P_sym) + TᵀT is positive semidefinite with kernel equal to the target subspace
    let mut g = DMatrix::<f64>::identity(size, size);
    let perms = permutations(k);
    let w = 1.0 / perms.len() as f64;
    for j in 0..size {
        let digits = to_digits(j, k);
        for p in &perms {
            let permuted: Vec<usize> = p.iter().map(|&i| digits[i]).collect();
            g[(from_digits(&permuted), j)] -= w;
        }
    }
    if k >= 2 {
        let rest = 3usize.pow(k as u32 - 2);
        for r in 0..rest {
            let tail = to_digits(r, k - 2);
            let cols: Vec<usize> = (0..3)
                .map(|a| {
                    let mut d = vec![a, a];
                    d.extend_from_slice(&tail);
                    from_digits(&d)
                })
                .collect();
            for &a in &cols {
                for &b in &cols {
                    g[(a, b)] += 1.0;
                }
            }
        }
    }
    let eig = SymmetricEigen::new(g);
    let mut kernel: Vec<usize> = (0..size).filter(|&i| eig.eigenvalues[i].abs() < 1e-8).collect();
    kernel.sort_unstable();
    assert_eq!(kernel.len(), 2 * k + 1, "harmonic subspace has the wrong dimension");
    DMatrix::from_fn(size, 2 * k + 1, |i, j| eig.eigenvectors[(i, kernel[j])])
}

/// ρ_k(Q) = Bᵀ Q^{⊗k} B.
pub fn evaluate(basis: &DMatrix<f64>, k: usize, q: &Matrix3<f64>) -> DMatrix<f64> {
    let size = basis.nrows();
    let dim = basis.ncols();
    let mut rotated = DMatrix::<f64>::zeros(size, dim);
    let mut buf = vec![0.0; size];
    for c in 0..dim {
        let mut t: Vec<f64> = basis.column(c).iter().copied().collect();
        // apply Q along each tensor mode
        for mode in 0..k {
            let stride = 3usize.pow((k - 1 - mode) as u32);
            buf.iter_mut().for_each(|x| *x = 0.0);
            for (idx, b) in buf.iter_mut().enumerate() {
                let i = (idx / stride) % 3;
                let base = idx - i * stride;
                *b = q[(i, 0)] * t[base] + q[(i, 1)] * t[base + stride] + q[(i, 2)] * t[base + 2 * stride];
            }
            std::mem::swap(&mut t, &mut buf);
        }
        for (r, v) in t.iter().enumerate() {
            rotated[(r, c)] = *v;
        }
    }
    basis.transpose() * rotated
}

pub fn quaternion_to_rotation(q: [f64; 4]) -> Matrix3<f64> {
    let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
    let (w, x, y, z) = (q[0] / n, q[1] / n, q[2] / n, q[3] / n);
    Matrix3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    )
}

fn rz(t: f64) -> Matrix3<f64> {
    let (s, c) = t.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

fn ry(t: f64) -> Matrix3<f64> {
    let (s, c) = t.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

/// Largest m with 4m³ <= resolution.
pub fn euler_grid_size(resolution: usize) -> usize {
    let mut m = 0;
    while 4 * (m + 1) * (m + 1) * (m + 1) <= resolution {
        m += 1;
    }
    m
}

/// Product rule in ZYZ Euler angles: 2m uniform angles for α and γ and an
/// m-point Gauss–Legendre rule in cos β. Integrates every product of two
/// irreps of degree ≤ m-1 exactly.
pub fn quadrature(resolution: usize, max_band: usize) -> Result<(Vec<GroupElement>, Vec<f64>)> {
    let m = euler_grid_size(resolution);
    if m < max_band + 1 {
        return Err(Error::Config(format!(
            "SO(3) resolution {resolution} gives an Euler grid of size {m}, band {max_band} needs {}",
            4 * (max_band + 1).pow(3)
        )));
    }
    let (x, w) = gauss_legendre(m);
    let steps = 2 * m;
    let mut nodes = Vec::with_capacity(steps * steps * m);
    let mut weights = Vec::with_capacity(steps * steps * m);
    for a in 0..steps {
        let za = rz(2.0 * PI * a as f64 / steps as f64);
        for (xb, wb) in x.iter().zip(&w) {
            let zb = za * ry(xb.acos());
            for c in 0..steps {
                let q = zb * rz(2.0 * PI * c as f64 / steps as f64);
                nodes.push(GroupElement::from_rotation(&q));
                weights.push(wb / (2.0 * (steps * steps) as f64));
            }
        }
    }
    Ok((nodes, weights))
}

fn to_digits(mut j: usize, k: usize) -> Vec<usize> {
    let mut d = vec![0; k];
    for slot in d.iter_mut().rev() {
        *slot = j % 3;
        j /= 3;
    }
    d
}

fn from_digits(d: &[usize]) -> usize {
    d.iter().fold(0, |acc, &x| acc * 3 + x)
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}
