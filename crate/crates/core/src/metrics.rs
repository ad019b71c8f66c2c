//! Alignment-free scores.

use crate::amp::Stacked;
use crate::error::{Error, Result};
use crate::groups::{GroupElement, GroupModel};
use crate::linalg::{CMat, C64, ZERO};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub correlation: f64,
    pub log_error: f64,
    /// Block correlation per stored irrep, in stored order.
    pub per_frequency: Option<Vec<f64>>,
}

/// ln(1 − c), floored at ln(ε) so exact recovery stays finite.
pub fn log_error(correlation: f64) -> f64 {
    (1.0 - correlation).max(f64::EPSILON).ln()
}

impl Score {
    pub fn new(correlation: f64) -> Self {
        let c = correlation.clamp(0.0, 1.0);
        Score { correlation: c, log_error: log_error(c), per_frequency: None }
    }
}

/// |Σ_u x_u conj(x̂_u)| / n for unit-modulus vectors.
pub fn correlation_scalar(x: &[C64], xhat: &[C64]) -> Result<Score> {
    if x.len() != xhat.len() || x.is_empty() {
        return Err(Error::Shape(format!("length mismatch: {} vs {}", x.len(), xhat.len())));
    }
    let s: C64 = x.iter().zip(xhat).map(|(a, b)| a * b.conj()).sum();
    Ok(Score::new(s.norm() / x.len() as f64))
}

/// ‖Σ_u ρ(g_u)* ρ(ĝ_u)‖_F / (n √d).
pub fn correlation_block(truth: &[GroupElement], est: &[GroupElement], group: &GroupModel, irrep: usize) -> Result<Score> {
    if truth.len() != est.len() || truth.is_empty() {
        return Err(Error::Shape(format!("length mismatch: {} vs {}", truth.len(), est.len())));
    }
    let d = group.irrep(irrep)?.dim;
    let mut acc = CMat::zeros(d, d);
    for (g, h) in truth.iter().zip(est) {
        let a = group.irrep_evaluate(irrep, g)?;
        let b = group.irrep_evaluate(irrep, h)?;
        acc = &acc + &a.adjoint().matmul(&b);
    }
    Ok(Score::new(acc.frobenius() / (truth.len() as f64 * (d as f64).sqrt())))
}

/// Score through the primary irrep, with per-irrep block scores attached.
pub fn score_estimate(group: &GroupModel, truth: &[GroupElement], est: &[GroupElement]) -> Result<Score> {
    let mut score = correlation_block(truth, est, group, group.primary())?;
    let per = group
        .stored()
        .iter()
        .map(|&id| correlation_block(truth, est, group, id).map(|s| s.correlation))
        .collect::<Result<Vec<_>>>()?;
    score.per_frequency = Some(per);
    Ok(score)
}

/// ‖X* V‖_F² / (n d) for an orthonormal n·d × d block V: the squared
/// correlation of an eigenvector estimate with the truth.
pub fn subspace_overlap(truth: &[GroupElement], group: &GroupModel, irrep: usize, v: &Stacked) -> Result<f64> {
    let d = group.irrep(irrep)?.dim;
    if v.d != d || v.n != truth.len() {
        return Err(Error::Shape("subspace does not match the truth".into()));
    }
    let mut acc = CMat::from_vec(d, d, vec![ZERO; d * d]);
    for (u, g) in truth.iter().enumerate() {
        acc = &acc + &group.irrep_evaluate(irrep, g)?.adjoint().matmul(&v.block(u));
    }
    Ok(acc.norm_sqr() / (truth.len() * d) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn scalar_examples() {
        let mut rng = stream(1, "t", 0);
        let g = GroupModel::u1(1, 64).unwrap();
        let x: Vec<C64> = (0..1000)
            .map(|_| match g.haar_sample(&mut rng) {
                GroupElement::Angle(t) => C64::from_polar(1.0, t),
                _ => unreachable!(),
            })
            .collect();
        assert!((correlation_scalar(&x, &x).unwrap().correlation - 1.0).abs() < 1e-12);
        let rot: Vec<C64> = x.iter().map(|z| z * C64::from_polar(1.0, 0.9)).collect();
        assert!((correlation_scalar(&x, &rot).unwrap().correlation - 1.0).abs() < 1e-12);
        assert!(correlation_scalar(&x, &x[..3]).is_err());
    }

    #[test]
    fn log_error_floor() {
        assert!(Score::new(1.0).log_error.is_finite());
        assert!((Score::new(0.5).log_error - 0.5f64.ln()).abs() < 1e-15);
    }
}
