//! Compact groups, their irreducible representations and Haar quadrature.
//!
//! A [`GroupModel`] fixes a band limit (the irrep list), a quadrature rule and
//! a precomputed table of Peter–Weyl basis values at the quadrature nodes.
//! Complex irreps appear in the list together with their conjugate partner;
//! everything downstream stores only the first member of each pair (the
//! "stored" irreps) and recovers the partner by conjugation.

mod finite;
mod so3;
mod table;

pub use finite::{FiniteGroup, FiniteIrrep};
pub use table::{HarmonicTable, Slot, Workspace};

use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};
use crate::rng::{normal, Stream};
use nalgebra::{DMatrix, Matrix3};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

pub const DEFAULT_U1_RESOLUTION: usize = 256;
pub const DEFAULT_SO3_RESOLUTION: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RepType {
    Real,
    Complex,
    Quaternionic,
}

impl RepType {
    pub fn parse(s: &str) -> Option<RepType> {
        match s {
            "real" => Some(RepType::Real),
            "complex" => Some(RepType::Complex),
            "quat" | "quaternionic" => Some(RepType::Quaternionic),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RepType::Real => "real",
            RepType::Complex => "complex",
            RepType::Quaternionic => "quat",
        }
    }
}

/// How an irrep is evaluated.
#[derive(Clone, Debug, PartialEq)]
pub enum IrrepLabel {
    /// Character g -> g^k of ℤ/L or U(1); k may be negative.
    Frequency(i64),
    /// Degree-k real irrep of SO(3), dimension 2k+1.
    Degree(usize),
    /// Row `index` of a finite group's irrep list, optionally conjugated.
    Table { index: usize, conjugated: bool },
}

#[derive(Clone, Debug, PartialEq)]
pub struct IrrepDescriptor {
    pub id: usize,
    pub dim: usize,
    pub rep_type: RepType,
    pub conjugate_id: Option<usize>,
    pub label: IrrepLabel,
}

impl IrrepDescriptor {
    pub fn name(&self) -> String {
        match &self.label {
            IrrepLabel::Frequency(k) => format!("k{k}"),
            IrrepLabel::Degree(k) => format!("l{k}"),
            IrrepLabel::Table { index, conjugated } => {
                if *conjugated {
                    format!("r{index}*")
                } else {
                    format!("r{index}")
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum GroupElement {
    Cyclic(usize),
    Angle(f64),
    Rotation([[f64; 3]; 3]),
    Finite(usize),
}

impl GroupElement {
    pub fn rotation(&self) -> Option<Matrix3<f64>> {
        match self {
            GroupElement::Rotation(r) => Some(Matrix3::from_fn(|i, j| r[i][j])),
            _ => None,
        }
    }

    pub fn from_rotation(q: &Matrix3<f64>) -> Self {
        let mut r = [[0.0; 3]; 3];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = q[(i, j)];
            }
        }
        GroupElement::Rotation(r)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum GroupKind {
    Cyclic(usize),
    U1,
    SO3,
    Finite,
}

/// Serializable description from which a [`GroupModel`] is built.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GroupSpec {
    Cyclic { order: usize, frequencies: usize },
    U1 { frequencies: usize, resolution: usize },
    So3 { frequencies: usize, resolution: usize },
    /// `source` is `a4` for the built-in table or a path to a group file.
    Finite { source: String, irreps: Option<Vec<usize>> },
}

impl GroupSpec {
    pub fn build(&self) -> Result<GroupModel> {
        match self {
            GroupSpec::Cyclic { order, frequencies } => GroupModel::cyclic(*order, *frequencies),
            GroupSpec::U1 { frequencies, resolution } => GroupModel::u1(*frequencies, *resolution),
            GroupSpec::So3 { frequencies, resolution } => GroupModel::so3(*frequencies, *resolution),
            GroupSpec::Finite { source, irreps } => {
                let group = if source == "a4" {
                    FiniteGroup::a4()
                } else {
                    let text = std::fs::read_to_string(source)
                        .map_err(|e| Error::Config(format!("cannot read group file {source}: {e}")))?;
                    FiniteGroup::parse(&text)?
                };
                GroupModel::finite(Arc::new(group), irreps.as_deref(), self.clone())
            }
        }
    }

    /// Short label used in CSV output.
    pub fn label(&self) -> String {
        match self {
            GroupSpec::Cyclic { order, .. } => format!("Z{order}"),
            GroupSpec::U1 { .. } => "U1".into(),
            GroupSpec::So3 { .. } => "SO3".into(),
            GroupSpec::Finite { source, .. } => {
                if source == "a4" {
                    "A4".into()
                } else {
                    std::path::Path::new(source)
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_else(|| source.clone())
                }
            }
        }
    }

    pub fn frequencies(&self) -> usize {
        match self {
            GroupSpec::Cyclic { frequencies, .. }
            | GroupSpec::U1 { frequencies, .. }
            | GroupSpec::So3 { frequencies, .. } => *frequencies,
            GroupSpec::Finite { irreps, .. } => irreps.as_ref().map(|v| v.len()).unwrap_or(0),
        }
    }
}

/// A compact group truncated to a finite irrep list, with its quadrature.
#[derive(Clone, Debug)]
pub struct GroupModel {
    kind: GroupKind,
    spec: GroupSpec,
    irreps: Vec<IrrepDescriptor>,
    stored: Vec<usize>,
    nodes: Vec<GroupElement>,
    weights: Vec<f64>,
    finite: Option<Arc<FiniteGroup>>,
    harmonic_bases: Vec<Option<Arc<DMatrix<f64>>>>,
    table: HarmonicTable,
}

impl GroupModel {
    /// ℤ/L with frequencies 1..=k_max.
    pub fn cyclic(order: usize, k_max: usize) -> Result<Self> {
        if order < 2 {
            return Err(Error::Config(format!("cyclic order must be at least 2, got {order}")));
        }
        if k_max == 0 || k_max > order / 2 {
            return Err(Error::Config(format!("ℤ/{order} supports 1..={} frequencies, got {k_max}", order / 2)));
        }
        let mut irreps = Vec::new();
        for k in 1..=k_max {
            if 2 * k == order {
                push_irrep(&mut irreps, 1, RepType::Real, IrrepLabel::Frequency(k as i64), None);
            } else {
                push_complex_pair(&mut irreps, 1, IrrepLabel::Frequency(k as i64), IrrepLabel::Frequency(-(k as i64)));
            }
        }
        let nodes = (0..order).map(GroupElement::Cyclic).collect();
        let weights = vec![1.0 / order as f64; order];
        let spec = GroupSpec::Cyclic { order, frequencies: k_max };
        Self::assemble(GroupKind::Cyclic(order), spec, irreps, nodes, weights, None, vec![])
    }

    /// U(1) with frequencies 1..=k_max on a uniform grid.
    pub fn u1(k_max: usize, resolution: usize) -> Result<Self> {
        if k_max == 0 {
            return Err(Error::Config("U(1) needs at least one frequency".into()));
        }
        let (nodes, weights) = u1_quadrature(resolution, k_max)?;
        let mut irreps = Vec::new();
        for k in 1..=k_max {
            push_complex_pair(&mut irreps, 1, IrrepLabel::Frequency(k as i64), IrrepLabel::Frequency(-(k as i64)));
        }
        let spec = GroupSpec::U1 { frequencies: k_max, resolution };
        Self::assemble(GroupKind::U1, spec, irreps, nodes, weights, None, vec![])
    }

    /// SO(3) with the real irreps of degree 1..=k_max.
    pub fn so3(k_max: usize, resolution: usize) -> Result<Self> {
        if k_max == 0 || k_max > so3::MAX_DEGREE {
            return Err(Error::Config(format!("SO(3) supports 1..={} frequencies, got {k_max}", so3::MAX_DEGREE)));
        }
        let (nodes, weights) = so3::quadrature(resolution, k_max)?;
        let mut irreps = Vec::new();
        let mut bases = Vec::new();
        for k in 1..=k_max {
            push_irrep(&mut irreps, 2 * k + 1, RepType::Real, IrrepLabel::Degree(k), None);
            bases.push(if k >= 2 { Some(Arc::new(so3::harmonic_basis(k))) } else { None });
        }
        let spec = GroupSpec::So3 { frequencies: k_max, resolution };
        Self::assemble(GroupKind::SO3, spec, irreps, nodes, weights, None, bases)
    }

    /// A finite group from an explicit table. `selection` picks irreps by
    /// their position in the table; `None` takes all of them.
    pub fn finite(group: Arc<FiniteGroup>, selection: Option<&[usize]>, spec: GroupSpec) -> Result<Self> {
        let all: Vec<usize> = (0..group.irreps.len()).collect();
        let chosen = selection.unwrap_or(&all);
        if chosen.is_empty() {
            return Err(Error::Config("no irreps selected".into()));
        }
        let mut irreps: Vec<IrrepDescriptor> = Vec::new();
        let mut used = vec![false; chosen.len()];
        for pos in 0..chosen.len() {
            if used[pos] {
                continue;
            }
            used[pos] = true;
            let index = chosen[pos];
            let irrep = group
                .irreps
                .get(index)
                .ok_or_else(|| Error::Config(format!("group has no irrep {index}")))?;
            if chosen[..pos].contains(&index) {
                return Err(Error::Config(format!("irrep {index} selected twice")));
            }
            let label = IrrepLabel::Table { index, conjugated: false };
            if irrep.rep_type == RepType::Complex {
                // a listed partner is used as is, otherwise the conjugate is implied
                let partner = (0..chosen.len()).find(|&p| !used[p] && group.is_conjugate_pair(index, chosen[p]));
                let partner_label = match partner {
                    Some(p) => {
                        used[p] = true;
                        IrrepLabel::Table { index: chosen[p], conjugated: false }
                    }
                    None => IrrepLabel::Table { index, conjugated: true },
                };
                push_complex_pair(&mut irreps, irrep.dim, label, partner_label);
            } else {
                push_irrep(&mut irreps, irrep.dim, irrep.rep_type, label, None);
            }
        }
        let n = group.order;
        let nodes = (0..n).map(GroupElement::Finite).collect();
        let weights = vec![1.0 / n as f64; n];
        Self::assemble(GroupKind::Finite, spec, irreps, nodes, weights, Some(group), vec![])
    }

    /// A₄ with its 3-dimensional irrep (rotations of a tetrahedron).
    pub fn a4() -> Self {
        let spec = GroupSpec::Finite { source: "a4".into(), irreps: Some(vec![FiniteGroup::A4_STANDARD]) };
        spec.build().expect("built-in A4 table is valid")
    }

    fn assemble(
        kind: GroupKind,
        spec: GroupSpec,
        irreps: Vec<IrrepDescriptor>,
        nodes: Vec<GroupElement>,
        weights: Vec<f64>,
        finite: Option<Arc<FiniteGroup>>,
        bases: Vec<Option<Arc<DMatrix<f64>>>>,
    ) -> Result<Self> {
        let stored = irreps
            .iter()
            .filter(|d| d.conjugate_id.is_none_or(|c| c > d.id))
            .map(|d| d.id)
            .collect();
        let mut harmonic_bases = vec![None; irreps.len()];
        for (d, b) in irreps.iter().zip(bases) {
            harmonic_bases[d.id] = b;
        }
        let mut model = GroupModel {
            kind,
            spec,
            irreps,
            stored,
            nodes,
            weights,
            finite,
            harmonic_bases,
            table: HarmonicTable::default(),
        };
        model.table = HarmonicTable::build(&model);
        Ok(model)
    }

    pub fn kind(&self) -> &GroupKind {
        &self.kind
    }

    pub fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    pub fn irreps(&self) -> &[IrrepDescriptor] {
        &self.irreps
    }

    /// Ids of the stored irreps: every real or quaternionic irrep and the
    /// first member of each conjugate pair.
    pub fn stored(&self) -> &[usize] {
        &self.stored
    }

    pub fn stored_descriptors(&self) -> impl Iterator<Item = &IrrepDescriptor> {
        self.stored.iter().map(|&id| &self.irreps[id])
    }

    /// Position of an irrep (or its partner) in the stored list.
    pub fn stored_position(&self, id: usize) -> Result<usize> {
        let d = self.irrep(id)?;
        let rep = match d.conjugate_id {
            Some(c) if c < id => c,
            _ => id,
        };
        Ok(self.stored.iter().position(|&s| s == rep).expect("representative is stored"))
    }

    /// The irrep used for scoring and single-frequency baselines.
    pub fn primary(&self) -> usize {
        self.stored[0]
    }

    pub fn irrep(&self, id: usize) -> Result<&IrrepDescriptor> {
        self.irreps.get(id).ok_or(Error::UnknownIrrep(id))
    }

    /// 2 for a stored complex irrep (it stands for itself and its partner), else 1.
    pub fn multiplicity(&self, id: usize) -> f64 {
        if self.irreps[id].rep_type == RepType::Complex {
            2.0
        } else {
            1.0
        }
    }

    pub fn max_dim(&self) -> usize {
        self.irreps.iter().map(|d| d.dim).max().unwrap_or(1)
    }

    pub fn nodes(&self) -> &[GroupElement] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn table(&self) -> &HarmonicTable {
        &self.table
    }

    pub fn finite_group(&self) -> Option<&FiniteGroup> {
        self.finite.as_deref()
    }

    pub fn identity(&self) -> GroupElement {
        match self.kind {
            GroupKind::Cyclic(_) => GroupElement::Cyclic(0),
            GroupKind::U1 => GroupElement::Angle(0.0),
            GroupKind::SO3 => GroupElement::from_rotation(&Matrix3::identity()),
            GroupKind::Finite => GroupElement::Finite(self.finite.as_ref().expect("finite table").identity),
        }
    }

    /// ρ(g) for the irrep `id`.
    pub fn irrep_evaluate(&self, id: usize, g: &GroupElement) -> Result<CMat> {
        let d = self.irrep(id)?;
        let m = match (&d.label, g) {
            (IrrepLabel::Frequency(k), GroupElement::Cyclic(j)) => {
                let l = match self.kind {
                    GroupKind::Cyclic(l) => l,
                    _ => return Err(Error::Domain("cyclic element for a non-cyclic group".into())),
                };
                if d.rep_type == RepType::Real {
                    CMat::scalar(C64::new(if j % 2 == 0 { 1.0 } else { -1.0 }, 0.0))
                } else {
                    let r = (k.rem_euclid(l as i64) as usize * j) % l;
                    CMat::scalar(C64::from_polar(1.0, 2.0 * PI * r as f64 / l as f64))
                }
            }
            (IrrepLabel::Frequency(k), GroupElement::Angle(t)) => CMat::scalar(C64::from_polar(1.0, *k as f64 * t)),
            (IrrepLabel::Degree(k), GroupElement::Rotation(_)) => {
                let q = g.rotation().expect("rotation payload");
                if *k == 1 {
                    CMat::from_rotation(&q)
                } else {
                    let basis = self.harmonic_bases[id].as_ref().expect("harmonic basis");
                    let r = so3::evaluate(basis, *k, &q);
                    CMat::from_fn(r.nrows(), r.ncols(), |i, j| C64::new(r[(i, j)], 0.0))
                }
            }
            (IrrepLabel::Table { index, conjugated }, GroupElement::Finite(e)) => {
                let group = self.finite.as_ref().expect("finite table");
                let m = group
                    .irreps
                    .get(*index)
                    .and_then(|r| r.matrices.get(*e))
                    .ok_or_else(|| Error::Domain(format!("element {e} out of range")))?;
                if *conjugated {
                    m.conj()
                } else {
                    m.clone()
                }
            }
            _ => return Err(Error::Domain(format!("element {g:?} does not belong to this group"))),
        };
        Ok(m)
    }

    /// R_ρ(g) = √d_ρ ρ(g).
    pub fn peter_weyl_basis(&self, id: usize, g: &GroupElement) -> Result<CMat> {
        let d = self.irrep(id)?.dim;
        Ok(self.irrep_evaluate(id, g)?.scale((d as f64).sqrt()))
    }

    pub fn compose(&self, g: &GroupElement, h: &GroupElement) -> GroupElement {
        match (g, h) {
            (GroupElement::Cyclic(a), GroupElement::Cyclic(b)) => {
                let l = match self.kind {
                    GroupKind::Cyclic(l) => l,
                    _ => unreachable!("cyclic element outside ℤ/L"),
                };
                GroupElement::Cyclic((a + b) % l)
            }
            (GroupElement::Angle(a), GroupElement::Angle(b)) => GroupElement::Angle((a + b).rem_euclid(2.0 * PI)),
            (GroupElement::Rotation(_), GroupElement::Rotation(_)) => {
                GroupElement::from_rotation(&(g.rotation().unwrap() * h.rotation().unwrap()))
            }
            (GroupElement::Finite(a), GroupElement::Finite(b)) => {
                GroupElement::Finite(self.finite.as_ref().expect("finite table").mul(*a, *b))
            }
            _ => panic!("compose: mismatched element kinds {g:?} and {h:?}"),
        }
    }

    pub fn inverse(&self, g: &GroupElement) -> GroupElement {
        match g {
            GroupElement::Cyclic(a) => {
                let l = match self.kind {
                    GroupKind::Cyclic(l) => l,
                    _ => unreachable!("cyclic element outside ℤ/L"),
                };
                GroupElement::Cyclic((l - a % l) % l)
            }
            GroupElement::Angle(a) => GroupElement::Angle((-a).rem_euclid(2.0 * PI)),
            GroupElement::Rotation(_) => GroupElement::from_rotation(&g.rotation().unwrap().transpose()),
            GroupElement::Finite(a) => GroupElement::Finite(self.finite.as_ref().expect("finite table").inverse[*a]),
        }
    }

    /// One draw from normalized Haar measure.
    pub fn haar_sample(&self, rng: &mut Stream) -> GroupElement {
        match self.kind {
            GroupKind::Cyclic(l) => GroupElement::Cyclic(rng.random_range(0..l)),
            GroupKind::U1 => GroupElement::Angle(rng.random::<f64>() * 2.0 * PI),
            GroupKind::SO3 => {
                let q = [normal(rng), normal(rng), normal(rng), normal(rng)];
                GroupElement::from_rotation(&so3::quaternion_to_rotation(q))
            }
            GroupKind::Finite => GroupElement::Finite(rng.random_range(0..self.nodes.len())),
        }
    }

    /// Index of the quadrature node equal to `g`, when `g` is a node.
    pub fn node_index(&self, g: &GroupElement) -> Option<usize> {
        match g {
            GroupElement::Cyclic(a) | GroupElement::Finite(a) => Some(*a),
            _ => self.nodes.iter().position(|n| n == g),
        }
    }

    /// max over irreps and basis entries of |Σ_i w_i R_ρab(g_i) conj(R_ρ'a'b'(g_i)) − δ|.
    pub fn orthonormality_residual(&self) -> f64 {
        let vals: Vec<Vec<CMat>> = self
            .irreps
            .iter()
            .map(|d| self.nodes.iter().map(|g| self.peter_weyl_basis(d.id, g).unwrap()).collect())
            .collect();
        let mut worst = 0.0f64;
        for (p, dp) in self.irreps.iter().enumerate() {
            for (q, dq) in self.irreps.iter().enumerate().skip(p) {
                for a in 0..dp.dim * dp.dim {
                    for b in 0..dq.dim * dq.dim {
                        let s: C64 = self
                            .weights
                            .iter()
                            .enumerate()
                            .map(|(i, w)| vals[p][i].as_slice()[a] * vals[q][i].as_slice()[b].conj() * *w)
                            .sum();
                        let target = if p == q && a == b { 1.0 } else { 0.0 };
                        worst = worst.max((s - target).norm());
                    }
                }
            }
        }
        worst
    }

    /// max over irreps of ‖Σ_i w_i R_ρ(g_i)‖_F; zero for an exact rule.
    pub fn mean_residual(&self) -> f64 {
        self.irreps
            .iter()
            .map(|d| {
                let mut acc = CMat::zeros(d.dim, d.dim);
                for (g, w) in self.nodes.iter().zip(&self.weights) {
                    acc = &acc + &self.peter_weyl_basis(d.id, g).unwrap().scale(*w);
                }
                acc.frobenius()
            })
            .fold(0.0, f64::max)
    }
}

fn push_irrep(list: &mut Vec<IrrepDescriptor>, dim: usize, rep_type: RepType, label: IrrepLabel, conj: Option<usize>) {
    let id = list.len();
    list.push(IrrepDescriptor { id, dim, rep_type, conjugate_id: conj, label });
}

fn push_complex_pair(list: &mut Vec<IrrepDescriptor>, dim: usize, label: IrrepLabel, partner: IrrepLabel) {
    let id = list.len();
    push_irrep(list, dim, RepType::Complex, label, Some(id + 1));
    push_irrep(list, dim, RepType::Complex, partner, Some(id));
}

/// Uniform grid on the circle. Exact for band limit `max_band` needs
/// `resolution >= 2*max_band + 1`.
pub fn u1_quadrature(resolution: usize, max_band: usize) -> Result<(Vec<GroupElement>, Vec<f64>)> {
    if resolution < 2 * max_band + 1 {
        return Err(Error::Config(format!(
            "U(1) resolution {resolution} is below 2*{max_band}+1 needed for band {max_band}"
        )));
    }
    let nodes = (0..resolution).map(|j| GroupElement::Angle(2.0 * PI * j as f64 / resolution as f64)).collect();
    Ok((nodes, vec![1.0 / resolution as f64; resolution]))
}

/// Quadrature rule for a group kind; see [`GroupModel`] constructors for the
/// exactness conditions.
pub fn build_quadrature(kind: &GroupKind, resolution: usize, max_band: usize) -> Result<(Vec<GroupElement>, Vec<f64>)> {
    match kind {
        GroupKind::Cyclic(l) => Ok(((0..*l).map(GroupElement::Cyclic).collect(), vec![1.0 / *l as f64; *l])),
        GroupKind::U1 => u1_quadrature(resolution, max_band),
        GroupKind::SO3 => so3::quadrature(resolution, max_band),
        GroupKind::Finite => Err(Error::Config("finite groups enumerate their table; use GroupModel::finite".into())),
    }
}
