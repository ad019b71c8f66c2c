//! Finite groups given by a multiplication table and irrep matrices.
//!
//! File format (blank lines and `#` comments are ignored):
//!
//! ```text
//! order=<N>
//! <N lines of N element indices: row a, column b holds a·b>
//! irrep dim=<d> type=<real|complex|quat>
//! <N matrices, each d lines of d entries written re,im>
//! ...
//! ```
//!
//! A complex irrep whose conjugate is not listed gets its partner implied.

use super::RepType;
use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};

const A4_TABLE: &str = include_str!("../../data/a4.group");

#[derive(Clone, Debug)]
pub struct FiniteIrrep {
    pub dim: usize,
    pub rep_type: RepType,
    pub matrices: Vec<CMat>,
}

#[derive(Clone, Debug)]
pub struct FiniteGroup {
    pub order: usize,
    pub table: Vec<usize>,
    pub identity: usize,
    pub inverse: Vec<usize>,
    pub irreps: Vec<FiniteIrrep>,
}

impl FiniteGroup {
    /// Position of the 3-dimensional irrep in the built-in A₄ table.
    pub const A4_STANDARD: usize = 2;

    pub fn a4() -> Self {
        Self::parse(A4_TABLE).expect("built-in A4 table parses")
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a * self.order + b]
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());

        let err = |line: usize, msg: &str| Error::GroupFile { line, msg: msg.to_string() };

        let (ln, header) = lines.next().ok_or_else(|| err(0, "empty file"))?;
        let order: usize = header
            .strip_prefix("order=")
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| err(ln, "expected order=<N>"))?;
        if order == 0 {
            return Err(err(ln, "order must be positive"));
        }

        let mut table = Vec::with_capacity(order * order);
        for _ in 0..order {
            let (ln, row) = lines.next().ok_or_else(|| err(ln, "multiplication table is truncated"))?;
            let vals: Vec<usize> = row
                .split_whitespace()
                .map(|t| t.parse::<usize>().map_err(|_| err(ln, "bad table entry")))
                .collect::<Result<_>>()?;
            if vals.len() != order || vals.iter().any(|&v| v >= order) {
                return Err(err(ln, "table row must hold N indices below N"));
            }
            table.extend(vals);
        }

        let mut irreps = Vec::new();
        while let Some((ln, head)) = lines.next() {
            let mut dim = None;
            let mut rep_type = None;
            let mut words = head.split_whitespace();
            if words.next() != Some("irrep") {
                return Err(err(ln, "expected an irrep header"));
            }
            for w in words {
                if let Some(v) = w.strip_prefix("dim=") {
                    dim = v.parse::<usize>().ok();
                } else if let Some(v) = w.strip_prefix("type=") {
                    rep_type = RepType::parse(v);
                } else {
                    return Err(err(ln, &format!("unknown irrep field {w}")));
                }
            }
            let dim = dim.filter(|&d| d > 0).ok_or_else(|| err(ln, "irrep needs dim=<d>"))?;
            let rep_type = rep_type.ok_or_else(|| err(ln, "irrep needs type=<real|complex|quat>"))?;
            let mut matrices = Vec::with_capacity(order);
            for _ in 0..order {
                let mut data = Vec::with_capacity(dim * dim);
                for _ in 0..dim {
                    let (ln, row) = lines.next().ok_or_else(|| err(ln, "irrep matrices are truncated"))?;
                    let entries: Vec<C64> = row
                        .split_whitespace()
                        .map(|t| parse_entry(t).ok_or_else(|| err(ln, &format!("bad entry {t}"))))
                        .collect::<Result<_>>()?;
                    if entries.len() != dim {
                        return Err(err(ln, "matrix row has the wrong length"));
                    }
                    data.extend(entries);
                }
                matrices.push(CMat::from_vec(dim, dim, data));
            }
            irreps.push(FiniteIrrep { dim, rep_type, matrices });
        }

        Self::from_parts(order, table, irreps)
    }

    /// Validates the group axioms and every irrep.
    pub fn from_parts(order: usize, table: Vec<usize>, irreps: Vec<FiniteIrrep>) -> Result<Self> {
        let bad = |msg: String| Error::Config(msg);
        let mul = |a: usize, b: usize| table[a * order + b];
        let identity = (0..order)
            .find(|&e| (0..order).all(|g| mul(e, g) == g && mul(g, e) == g))
            .ok_or_else(|| bad("multiplication table has no identity".into()))?;
        let mut inverse = vec![usize::MAX; order];
        for g in 0..order {
            inverse[g] = (0..order)
                .find(|&h| mul(g, h) == identity && mul(h, g) == identity)
                .ok_or_else(|| bad(format!("element {g} has no inverse")))?;
        }
        if order <= 64 {
            for a in 0..order {
                for b in 0..order {
                    for c in 0..order {
                        if mul(mul(a, b), c) != mul(a, mul(b, c)) {
                            return Err(bad(format!("table is not associative at ({a},{b},{c})")));
                        }
                    }
                }
            }
        }
        for (r, irrep) in irreps.iter().enumerate() {
            if irrep.rep_type == RepType::Quaternionic && irrep.dim % 2 != 0 {
                return Err(bad(format!("quaternionic irrep {r} has odd dimension")));
            }
            if irrep.dim == 1 && irrep.matrices.iter().all(|m| (m[(0, 0)] - 1.0).norm() < 1e-9) {
                return Err(bad(format!("irrep {r} is trivial")));
            }
            for (g, m) in irrep.matrices.iter().enumerate() {
                if m.unitarity_defect() > 1e-9 {
                    return Err(bad(format!("irrep {r} is not unitary at element {g}")));
                }
                match irrep.rep_type {
                    RepType::Real if !m.is_real(1e-12) => {
                        return Err(bad(format!("real irrep {r} has a complex entry at element {g}")))
                    }
                    RepType::Quaternionic if m.quaternion_defect() > 1e-12 => {
                        return Err(bad(format!("quaternionic irrep {r} breaks the block pattern at element {g}")))
                    }
                    _ => {}
                }
            }
            for a in 0..order {
                for b in 0..order {
                    let lhs = &irrep.matrices[mul(a, b)];
                    let rhs = irrep.matrices[a].matmul(&irrep.matrices[b]);
                    if lhs.max_abs_diff(&rhs) > 1e-9 {
                        return Err(bad(format!("irrep {r} is not a homomorphism at ({a},{b})")));
                    }
                }
            }
        }
        Ok(FiniteGroup { order, table, identity, inverse, irreps })
    }

    /// True when irrep `j` is the entrywise conjugate of irrep `i`.
    pub fn is_conjugate_pair(&self, i: usize, j: usize) -> bool {
        let (a, b) = (&self.irreps[i], &self.irreps[j]);
        a.dim == b.dim && a.matrices.iter().zip(&b.matrices).all(|(x, y)| x.max_abs_diff(&y.conj()) < 1e-9)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("order={}\n", self.order);
        for a in 0..self.order {
            let row: Vec<String> = (0..self.order).map(|b| self.mul(a, b).to_string()).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        for irrep in &self.irreps {
            out.push_str(&format!("irrep dim={} type={}\n", irrep.dim, irrep.rep_type.name()));
            for m in &irrep.matrices {
                for i in 0..irrep.dim {
                    let row: Vec<String> =
                        (0..irrep.dim).map(|j| format!("{:?},{:?}", m[(i, j)].re, m[(i, j)].im)).collect();
                    out.push_str(&row.join(" "));
                    out.push('\n');
                }
            }
        }
        out
    }
}

fn parse_entry(t: &str) -> Option<C64> {
    let (re, im) = t.split_once(',')?;
    Some(C64::new(re.parse().ok()?, im.parse().ok()?))
}
