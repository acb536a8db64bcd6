//! Two-copy commutants of the local gate groups and the Weingarten-projected
//! local moment matrices built from them.
//!
//! A site carries the operator space of two copies of `C^q` with `q = d^m`.
//! The relevant operators on that space are the identity, the swap, and a
//! rank-one "transposition" `|Ω⟩⟩⟨⟨Ω|` (with `Ω = 1` for the orthogonal group
//! and `Ω = J ⊗ 1` on the site that carries the symplectic form).

mod haar;
mod montecarlo;

pub use haar::{haar_sample, haar_sample_with};
pub use montecarlo::{mc_local_moment, McEstimate};

use crate::error::{GapError, Result};
use crate::rational::{ri, RationalMatrix, RationalMatrixJson};
use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Local gate group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupKind {
    Unitary,
    Orthogonal,
    Symplectic,
}

impl GroupKind {
    pub const ALL: [GroupKind; 3] = [GroupKind::Unitary, GroupKind::Orthogonal, GroupKind::Symplectic];

    pub fn name(self) -> &'static str {
        match self {
            GroupKind::Unitary => "unitary",
            GroupKind::Orthogonal => "orthogonal",
            GroupKind::Symplectic => "symplectic",
        }
    }
}

impl fmt::Display for GroupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for GroupKind {
    type Err = GapError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "unitary" | "u" => Ok(GroupKind::Unitary),
            "orthogonal" | "o" => Ok(GroupKind::Orthogonal),
            "symplectic" | "sp" => Ok(GroupKind::Symplectic),
            other => Err(GapError::InvalidParameter(format!("unknown group '{other}'"))),
        }
    }
}

/// Single-site two-copy operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Element {
    Identity,
    Swap,
    /// `|Φ⟩⟩⟨⟨Φ|` with the maximally entangled `Φ = Σ|jj⟩`.
    Transpose,
    /// `|Ω⟩⟩⟨⟨Ω|` with `Ω = J₂ ⊗ 1`.
    TwistedTranspose,
}

impl Element {
    pub fn symbol(self) -> char {
        match self {
            Element::Identity => 'i',
            Element::Swap => 's',
            Element::Transpose | Element::TwistedTranspose => 't',
        }
    }
}

/// Hilbert-Schmidt inner product `Tr[a† b]` of two site elements at local dimension `q`.
pub fn element_inner(q: u64, a: Element, b: Element) -> i64 {
    use Element::*;
    let q = q as i64;
    if a == b {
        return q * q;
    }
    match (a, b) {
        (Transpose, TwistedTranspose) | (TwistedTranspose, Transpose) => 0,
        (Swap, TwistedTranspose) | (TwistedTranspose, Swap) => -q,
        _ => q,
    }
}

/// Operator content of one site: dimension and which third element (if any) it carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteKind {
    pub q: u64,
    pub third: Option<Element>,
}

impl SiteKind {
    pub fn plain(q: u64) -> Self {
        Self { q, third: None }
    }

    pub fn orthogonal(q: u64) -> Self {
        Self {
            q,
            third: Some(Element::Transpose),
        }
    }

    pub fn twisted(q: u64) -> Self {
        Self {
            q,
            third: Some(Element::TwistedTranspose),
        }
    }

    /// Linearly independent labels spanning the site's operators.
    ///
    /// At `q = 2` the twisted element equals `1 - SWAP`, so it is dropped from the alphabet.
    pub fn alphabet(&self) -> Vec<Element> {
        let mut labels = vec![Element::Identity, Element::Swap];
        if let Some(t) = self.third {
            let mut cand = labels.clone();
            cand.push(t);
            if !gram_of(self.q, &cand).is_singular() {
                labels = cand;
            }
        }
        labels
    }

    pub fn dim(&self) -> usize {
        self.alphabet().len()
    }

    pub fn gram(&self) -> RationalMatrix {
        gram_of(self.q, &self.alphabet())
    }

    /// Exact coordinates of `e` in the alphabet.
    pub fn coords(&self, e: Element) -> Result<Vec<BigRational>> {
        let alph = self.alphabet();
        let g = gram_of(self.q, &alph);
        let rhs = RationalMatrix::from_fn(alph.len(), 1, |i, _| ri(element_inner(self.q, alph[i], e)));
        let x = g
            .solve(&rhs)
            .ok_or(GapError::AmbientExpansionFailure { residual: f64::INFINITY })?;
        // squared distance of e from the span
        let mut proj = BigRational::zero();
        for i in 0..alph.len() {
            proj += &x[(i, 0)] * &rhs[(i, 0)];
        }
        let residual = ri(element_inner(self.q, e, e)) - proj;
        if !residual.is_zero() {
            return Err(GapError::AmbientExpansionFailure {
                residual: crate::rational::to_f64(&residual),
            });
        }
        Ok(x.data)
    }
}

fn gram_of(q: u64, elems: &[Element]) -> RationalMatrix {
    RationalMatrix::from_fn(elems.len(), elems.len(), |i, j| ri(element_inner(q, elems[i], elems[j])))
}

/// Default bound on `q²` for building explicit dense operators.
pub const DENSE_OPERATOR_CAP: u64 = 16;

/// Dense matrix of a site element on `C^q ⊗ C^q`, index `a*q + b` with `a` the first copy.
pub fn element_matrix(q: usize, e: Element) -> DMatrix<f64> {
    let n = q * q;
    match e {
        Element::Identity => DMatrix::identity(n, n),
        Element::Swap => DMatrix::from_fn(n, n, |r, c| {
            let (a, b) = (c / q, c % q);
            if r == b * q + a {
                1.0
            } else {
                0.0
            }
        }),
        Element::Transpose | Element::TwistedTranspose => {
            let omega = omega_vector(q, e == Element::TwistedTranspose);
            &omega * omega.transpose()
        }
    }
}

/// `vec(Ω)` with entries `Ω[a, b]` at index `a*q + b`.
fn omega_vector(q: usize, twisted: bool) -> nalgebra::DVector<f64> {
    let half = q / 2;
    nalgebra::DVector::from_fn(q * q, |idx, _| {
        let (a, b) = (idx / q, idx % q);
        if !twisted {
            return if a == b { 1.0 } else { 0.0 };
        }
        let (a0, a1, b0, b1) = (a / half, a % half, b / half, b % half);
        if a1 != b1 {
            return 0.0;
        }
        match (a0, b0) {
            (0, 1) => 1.0,
            (1, 0) => -1.0,
            _ => 0.0,
        }
    })
}

/// Single-site commutant basis of a group.
#[derive(Clone, Debug)]
pub struct CommutantBasis {
    pub group: GroupKind,
    pub d: u64,
    pub m: u32,
    pub site: SiteKind,
    pub elements: Vec<Element>,
    /// Dense operators, present when `q² ≤ DENSE_OPERATOR_CAP`.
    pub operators: Option<Vec<DMatrix<f64>>>,
    pub gram: RationalMatrix,
}

impl CommutantBasis {
    pub fn build(group: GroupKind, d: u64, m: u32) -> Result<Self> {
        let q = local_dim(d, m)?;
        let site = match group {
            GroupKind::Unitary => SiteKind::plain(q),
            GroupKind::Orthogonal => SiteKind::orthogonal(q),
            GroupKind::Symplectic => {
                if q % 2 != 0 {
                    return Err(GapError::InvalidDimension(format!(
                        "symplectic group needs even local dimension, got q={q}"
                    )));
                }
                SiteKind::twisted(q)
            }
        };
        let elements = site.alphabet();
        let operators = (q * q <= DENSE_OPERATOR_CAP)
            .then(|| elements.iter().map(|&e| element_matrix(q as usize, e)).collect());
        Ok(Self {
            group,
            d,
            m,
            site,
            gram: site.gram(),
            elements,
            operators,
        })
    }

    pub fn q(&self) -> u64 {
        self.site.q
    }

    /// Gram matrix recomputed from the dense operators (`Tr[A^T B]`).
    pub fn dense_gram(&self) -> Result<DMatrix<f64>> {
        let ops = self.operators.as_ref().ok_or_else(|| self.unsupported())?;
        Ok(DMatrix::from_fn(ops.len(), ops.len(), |i, j| ops[i].dot(&ops[j])))
    }

    pub fn unsupported(&self) -> GapError {
        GapError::UnsupportedGroupDimension {
            group: self.group.name().into(),
            d: self.d,
            m: self.m,
        }
    }
}

pub fn local_dim(d: u64, m: u32) -> Result<u64> {
    if d < 2 || m < 1 {
        return Err(GapError::InvalidDimension(format!("need d ≥ 2 and m ≥ 1, got d={d}, m={m}")));
    }
    d.checked_pow(m)
        .filter(|q| q.checked_mul(*q).and_then(|x| x.checked_mul(x)).is_some())
        .ok_or_else(|| GapError::InvalidDimension(format!("d^m overflows for d={d}, m={m}")))
}

/// Ambient label basis of a bond: the two site alphabets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairAmbient {
    pub left: SiteKind,
    pub right: SiteKind,
}

impl PairAmbient {
    pub fn uniform(site: SiteKind) -> Self {
        Self { left: site, right: site }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.left.dim(), self.right.dim())
    }

    pub fn labels(&self) -> Vec<String> {
        let (la, lb) = (self.left.alphabet(), self.right.alphabet());
        let mut out = Vec::new();
        for a in &la {
            for b in &lb {
                out.push(format!("{}{}", a.symbol(), b.symbol()));
            }
        }
        out
    }

    pub fn gram(&self) -> RationalMatrix {
        self.left.gram().kron(&self.right.gram())
    }
}

/// Two-copy commutant elements of a gate acting on a bond.
pub fn gate_elements(group: GroupKind, ambient: &PairAmbient) -> Result<Vec<(Element, Element)>> {
    use Element::*;
    let mut el = vec![(Identity, Identity), (Swap, Swap)];
    match group {
        GroupKind::Unitary => {}
        GroupKind::Orthogonal => el.push((Transpose, Transpose)),
        GroupKind::Symplectic => match (ambient.left.third, ambient.right.third) {
            (Some(a), Some(b)) if a == TwistedTranspose || b == TwistedTranspose => el.push((a, b)),
            _ => {
                return Err(GapError::InvalidSpec(
                    "symplectic gate needs one twisted site and a third label on both sites".into(),
                ))
            }
        },
    }
    if group == GroupKind::Orthogonal && (ambient.left.third.is_none() || ambient.right.third.is_none()) {
        return Err(GapError::InvalidSpec("orthogonal gate needs a third label on both sites".into()));
    }
    Ok(el)
}

/// Exact factorization `M = R C` of a Weingarten projector on a bond.
///
/// `range` holds the ambient coordinates of the gate commutant elements (columns), `coeff`
/// the Weingarten coefficients of every ambient label pair, and `gram` the gate Gram matrix.
#[derive(Clone, Debug)]
pub struct GateProjector {
    pub group: GroupKind,
    pub ambient: PairAmbient,
    pub elements: Vec<(Element, Element)>,
    pub gram: RationalMatrix,
    pub coeff: RationalMatrix,
    pub range: RationalMatrix,
}

impl GateProjector {
    pub fn new(group: GroupKind, ambient: &PairAmbient) -> Result<Self> {
        let elements = gate_elements(group, ambient)?;
        let (la, lb) = (ambient.left.alphabet(), ambient.right.alphabet());
        let (qa, qb) = (ambient.left.q, ambient.right.q);
        let r = elements.len();
        let gram = RationalMatrix::from_fn(r, r, |i, j| {
            let (a1, b1) = elements[i];
            let (a2, b2) = elements[j];
            ri(element_inner(qa, a1, a2) * element_inner(qb, b1, b2))
        });
        let overlaps = RationalMatrix::from_fn(r, la.len() * lb.len(), |mu, col| {
            let (ea, eb) = elements[mu];
            ri(element_inner(qa, ea, la[col / lb.len()]) * element_inner(qb, eb, lb[col % lb.len()]))
        });
        let coeff = gram.solve(&overlaps).ok_or_else(|| {
            GapError::InvalidSpec("gate commutant elements are linearly dependent".into())
        })?;
        let mut range = RationalMatrix::zeros(la.len() * lb.len(), r);
        for (mu, &(ea, eb)) in elements.iter().enumerate() {
            let ca = ambient.left.coords(ea)?;
            let cb = ambient.right.coords(eb)?;
            for (x, cx) in ca.iter().enumerate() {
                for (y, cy) in cb.iter().enumerate() {
                    range[(x * lb.len() + y, mu)] = cx * cy;
                }
            }
        }
        Ok(Self {
            group,
            ambient: *ambient,
            elements,
            gram,
            coeff,
            range,
        })
    }

    pub fn rank(&self) -> usize {
        self.elements.len()
    }

    pub fn moment(&self) -> RationalMatrix {
        self.range.mul(&self.coeff)
    }
}

/// Local moment matrix of one gate in an ambient label basis.
#[derive(Clone, Debug)]
pub struct LocalMomentMatrix {
    pub group: GroupKind,
    pub ambient: PairAmbient,
    pub labels: Vec<String>,
    pub exact: RationalMatrix,
    pub matrix: DMatrix<f64>,
}

impl LocalMomentMatrix {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "group": self.group,
            "labels": self.labels,
            "exact": RationalMatrixJson::from(&self.exact),
            "matrix": crate::io::MatrixJson::from(&self.matrix),
        })
    }
}

/// Projects every ambient label pair onto the gate commutant (exact arithmetic).
pub fn weingarten_moment_matrix(group: GroupKind, ambient: &PairAmbient) -> Result<LocalMomentMatrix> {
    let proj = GateProjector::new(group, ambient)?;
    let exact = proj.moment();
    Ok(LocalMomentMatrix {
        group,
        ambient: *ambient,
        labels: ambient.labels(),
        matrix: exact.to_f64(),
        exact,
    })
}
