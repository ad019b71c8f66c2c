//! Small dense complex matrices and the helpers the estimators share.

use nalgebra::{DMatrix, Matrix3};
use num_complex::Complex64;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn scalar(z: C64) -> Self {
        Self { rows: 1, cols: 1, data: vec![z] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length mismatch");
        Self { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_real(rows: usize, cols: usize, vals: &[f64]) -> Self {
        assert_eq!(vals.len(), rows * cols);
        Self { rows, cols, data: vals.iter().map(|&x| C64::new(x, 0.0)).collect() }
    }

    pub fn from_rotation(q: &Matrix3<f64>) -> Self {
        Self::from_fn(3, 3, |i, j| C64::new(q[(i, j)], 0.0))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn scale_c(&self, s: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn matmul(&self, other: &CMat) -> CMat {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = CMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Frobenius inner product Tr(A B*).
    pub fn inner(&self, other: &CMat) -> C64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b.conj()).sum()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn max_abs_diff(&self, other: &CMat) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn max_imag(&self) -> f64 {
        self.data.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.max_imag() <= tol
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.rows == self.cols && self.max_abs_diff(&self.adjoint()) <= tol
    }

    /// Deviation from the 2x2 quaternion block pattern [[a+bi, c+di], [-c+di, a-bi]].
    pub fn quaternion_defect(&self) -> f64 {
        if self.rows % 2 != 0 || self.cols % 2 != 0 {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for bi in 0..self.rows / 2 {
            for bj in 0..self.cols / 2 {
                let p = self[(2 * bi, 2 * bj)];
                let q = self[(2 * bi, 2 * bj + 1)];
                let r = self[(2 * bi + 1, 2 * bj)];
                let s = self[(2 * bi + 1, 2 * bj + 1)];
                worst = worst.max((s - p.conj()).norm()).max((r + q.conj()).norm());
            }
        }
        worst
    }

    pub fn unitarity_defect(&self) -> f64 {
        self.adjoint().matmul(self).max_abs_diff(&CMat::identity(self.cols))
    }

    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> CMat {
        CMat::from_fn(nr, nc, |i, j| self[(r0 + i, c0 + j)])
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        let m = self.to_nalgebra();
        m.singular_values().iter().cloned().fold(0.0, f64::max)
    }

    pub fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn real_part(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)].re)
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &CMat {
    type Output = CMat;
    fn add(self, rhs: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMat { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &CMat {
    type Output = CMat;
    fn sub(self, rhs: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMat { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

impl Mul for &CMat {
    type Output = CMat;
    fn mul(self, rhs: &CMat) -> CMat {
        self.matmul(rhs)
    }
}

/// Real dot product with four accumulators.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        s0 += x[0] * y[0];
        s1 += x[1] * y[1];
        s2 += x[2] * y[2];
        s3 += x[3] * y[3];
    }
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        s0 += x * y;
    }
    (s0 + s1) + (s2 + s3)
}

/// Nearest rotation to a real 3x3 matrix (polar factor with the determinant fixed to +1).
pub fn project_to_so3(a: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = a.svd(true, true);
    let u = svd.u.expect("svd u");
    let vt = svd.v_t.expect("svd v_t");
    let mut d = Matrix3::identity();
    if (u * vt).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    u * d * vt
}

/// Modified Gram-Schmidt on the columns of a tall row-major block of shape (rows x cols).
/// Returns false if a column collapsed to zero.
pub fn orthonormalize_columns(data: &mut [C64], rows: usize, cols: usize) -> bool {
    let mut ok = true;
    for j in 0..cols {
        for k in 0..j {
            let mut dot = ZERO;
            for i in 0..rows {
                dot += data[i * cols + k].conj() * data[i * cols + j];
            }
            for i in 0..rows {
                let v = data[i * cols + k];
                data[i * cols + j] -= v * dot;
            }
        }
        let norm: f64 = (0..rows).map(|i| data[i * cols + j].norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-300 {
            ok = false;
            continue;
        }
        for i in 0..rows {
            data[i * cols + j] /= norm;
        }
    }
    ok
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_m.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[m - 1 - i] = z;
        w[i] = wi;
        w[m - 1 - i] = wi;
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(7);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
        // x^12 integrates to 2/13 and needs 2m-1 >= 12
        let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(12)).sum();
        assert!((v - 2.0 / 13.0).abs() < 1e-14);
    }

    #[test]
    fn polar_projection_fixes_reflections() {
        let a = Matrix3::new(1.0, 0.1, 0.0, 0.0, 1.0, 0.2, 0.0, 0.0, -1.0);
        let q = project_to_so3(&a);
        assert!((q.determinant() - 1.0).abs() < 1e-12);
        assert!((q.transpose() * q - Matrix3::identity()).norm() < 1e-12);
    }

    #[test]
    fn quaternion_pattern() {
        let a = C64::new(0.3, -0.2);
        let b = C64::new(1.1, 0.4);
        let m = CMat::from_vec(2, 2, vec![a, b, -b.conj(), a.conj()]);
        assert!(m.quaternion_defect() < 1e-15);
        let bad = CMat::from_vec(2, 2, vec![a, b, b, a]);
        assert!(bad.quaternion_defect() > 0.1);
    }

    #[test]
    fn gram_schmidt_gives_orthonormal_columns() {
        let mut d = vec![
            C64::new(1.0, 0.0), C64::new(1.0, 1.0),
            C64::new(0.0, 1.0), C64::new(2.0, 0.0),
            C64::new(1.0, -1.0), C64::new(0.5, 0.0),
        ];
        assert!(orthonormalize_columns(&mut d, 3, 2));
        let m = CMat::from_vec(3, 2, d);
        assert!(m.adjoint().matmul(&m).max_abs_diff(&CMat::identity(2)) < 1e-14);
    }
}
