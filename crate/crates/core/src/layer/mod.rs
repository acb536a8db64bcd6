//! Single-layer moment operator of a brickwork circuit acting on site-label words.
//!
//! Sites are numbered `0..η` and words are indexed big-endian (site 0 is the most
//! significant digit). One layer is `Λ = L₁ L₂` where `L₁` holds the bonds
//! `(0,1), (2,3), …` and `L₂` the bonds `(1,2), …` plus `(η-1, 0)` for closed chains,
//! so `L₂` acts first on a vector.

mod pairchain;
mod sectors;
mod words;

pub use pairchain::{LocalOp, PairChain};
pub use sectors::{build_block_matrix, enumerate_sector, BlockMatrix};
pub use words::{is_aligned, rotate_pairs, switch_count, ReducedState};

use crate::commutant::{local_dim, Element, GateProjector, GroupKind, PairAmbient, SiteKind};
use crate::error::{GapError, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;

/// Default bound on the number of entries of any dense matrix.
pub const DEFAULT_DENSE_CAP: usize = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Boundary {
    Open,
    Closed,
}

impl Boundary {
    pub fn name(self) -> &'static str {
        match self {
            Boundary::Open => "open",
            Boundary::Closed => "closed",
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Boundary {
    type Err = GapError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "open" => Ok(Boundary::Open),
            "closed" | "periodic" => Ok(Boundary::Closed),
            other => Err(GapError::InvalidParameter(format!("unknown boundary '{other}'"))),
        }
    }
}

/// Circuit parameters: `n` qudits of dimension `d`, grouped `m` per site.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CircuitSpec {
    pub d: u64,
    pub m: u32,
    pub n: u32,
    pub boundary: Boundary,
    pub group: GroupKind,
}

impl CircuitSpec {
    pub fn new(group: GroupKind, boundary: Boundary, d: u64, m: u32, n: u32) -> Result<Self> {
        let spec = Self { d, m, n, boundary, group };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let q = local_dim(self.d, self.m)?;
        if !self.n.is_multiple_of(self.m) {
            return Err(GapError::InvalidSpec(format!("m={} must divide n={}", self.m, self.n)));
        }
        let eta = self.n / self.m;
        if !eta.is_multiple_of(2) || eta < 4 {
            return Err(GapError::InvalidSpec(format!("η = n/m = {eta} must be even and at least 4")));
        }
        if self.group == GroupKind::Symplectic && q % 2 != 0 {
            return Err(GapError::InvalidDimension(format!("symplectic circuits need even d^m, got {q}")));
        }
        Ok(())
    }

    /// Number of sites `η = n / m`.
    pub fn eta(&self) -> usize {
        (self.n / self.m) as usize
    }

    pub fn q(&self) -> u64 {
        self.d.pow(self.m)
    }

    /// Site content; for symplectic circuits site 0 carries the symplectic form.
    pub fn sites(&self) -> Vec<SiteKind> {
        let q = self.q();
        (0..self.eta())
            .map(|k| match self.group {
                GroupKind::Unitary => SiteKind::plain(q),
                GroupKind::Orthogonal => SiteKind::orthogonal(q),
                GroupKind::Symplectic if k == 0 => SiteKind::twisted(q),
                GroupKind::Symplectic => SiteKind::orthogonal(q),
            })
            .collect()
    }

    /// Gate group on the bond `(a, b)`.
    pub fn bond_group(&self, a: usize, b: usize) -> GroupKind {
        match self.group {
            GroupKind::Symplectic if a == 0 || b == 0 => GroupKind::Symplectic,
            GroupKind::Symplectic => GroupKind::Orthogonal,
            g => g,
        }
    }

    pub fn odd_bonds(&self) -> Vec<(usize, usize)> {
        (0..self.eta() / 2).map(|j| (2 * j, 2 * j + 1)).collect()
    }

    pub fn even_bonds(&self) -> Vec<(usize, usize)> {
        let eta = self.eta();
        let mut b: Vec<_> = (0..eta / 2 - 1).map(|j| (2 * j + 1, 2 * j + 2)).collect();
        if self.boundary == Boundary::Closed {
            b.push((eta - 1, 0));
        }
        b
    }

    /// Site elements of the global commutant; each entry lists one element per site.
    pub fn global_elements(&self) -> Vec<Vec<Element>> {
        let sites = self.sites();
        let mut out = vec![
            vec![Element::Identity; sites.len()],
            vec![Element::Swap; sites.len()],
        ];
        if self.group != GroupKind::Unitary {
            out.push(sites.iter().map(|s| s.third.expect("third label")).collect());
        }
        out
    }
}

impl fmt::Display for CircuitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} d={} m={} n={}", self.group, self.boundary, self.d, self.m, self.n)
    }
}

/// One gate's moment matrix placed on a bond.
#[derive(Clone, Debug)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub projector: GateProjector,
    pub matrix: DMatrix<f64>,
}

/// Product vector, one factor per site.
pub type ProductVector = Vec<Vec<f64>>;

/// Matrix-free single-layer operator.
#[derive(Clone, Debug)]
pub struct LayerOperator {
    pub spec: CircuitSpec,
    pub sites: Vec<SiteKind>,
    pub dims: Vec<usize>,
    strides: Vec<usize>,
    pub odd: Vec<Bond>,
    pub even: Vec<Bond>,
    /// Per-site `G^{1/2}` when the operator has been symmetrized.
    pub site_sqrt: Option<Vec<DMatrix<f64>>>,
}

impl LayerOperator {
    pub fn new(spec: CircuitSpec) -> Result<Self> {
        spec.validate()?;
        let sites = spec.sites();
        let dims: Vec<usize> = sites.iter().map(|s| s.dim()).collect();
        let mut strides = vec![1usize; dims.len()];
        for k in (0..dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1].saturating_mul(dims[k + 1]);
        }
        let mk = |(a, b): (usize, usize)| -> Result<Bond> {
            let amb = PairAmbient {
                left: sites[a],
                right: sites[b],
            };
            let projector = GateProjector::new(spec.bond_group(a, b), &amb)?;
            let matrix = projector.moment().to_f64();
            Ok(Bond { a, b, projector, matrix })
        };
        let odd = spec.odd_bonds().into_iter().map(mk).collect::<Result<Vec<_>>>()?;
        let even = spec.even_bonds().into_iter().map(mk).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            spec,
            sites,
            dims,
            strides,
            odd,
            even,
            site_sqrt: None,
        })
    }

    /// Reduced dimension `N_red`.
    /// Saturates for chains too long to address.
    pub fn dim(&self) -> usize {
        self.dims.iter().fold(1usize, |a, d| a.saturating_mul(*d))
    }

    pub fn is_symmetrized(&self) -> bool {
        self.site_sqrt.is_some()
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(GapError::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(())
    }

    /// Applies one bond matrix in place.
    fn apply_bond(&self, v: &mut [f64], bond: &Bond) {
        let (sa, sb) = (self.strides[bond.a], self.strides[bond.b]);
        let (da, db) = (self.dims[bond.a], self.dims[bond.b]);
        let mut local = vec![0.0; da * db];
        let mut out = vec![0.0; da * db];
        for base in 0..v.len() {
            if (base / sa) % da != 0 || (base / sb) % db != 0 {
                continue;
            }
            for x in 0..da {
                for y in 0..db {
                    local[x * db + y] = v[base + x * sa + y * sb];
                }
            }
            for (r, o) in out.iter_mut().enumerate() {
                *o = (0..da * db).map(|c| bond.matrix[(r, c)] * local[c]).sum();
            }
            for x in 0..da {
                for y in 0..db {
                    v[base + x * sa + y * sb] = out[x * db + y];
                }
            }
        }
    }

    pub fn apply_odd(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_len(v)?;
        let mut w = v.to_vec();
        for b in &self.odd {
            self.apply_bond(&mut w, b);
        }
        Ok(w)
    }

    pub fn apply_even(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_len(v)?;
        let mut w = v.to_vec();
        for b in &self.even {
            self.apply_bond(&mut w, b);
        }
        Ok(w)
    }

    /// `Λ v = L₁ L₂ v`.
    pub fn apply_layer(&self, v: &[f64]) -> Result<Vec<f64>> {
        let w = self.apply_even(v)?;
        self.apply_odd(&w)
    }

    /// Applies the layer to a sparse vector keyed by word index.
    pub fn apply_layer_sparse(&self, v: &HashMap<usize, f64>) -> HashMap<usize, f64> {
        let mut w = v.clone();
        for b in self.even.iter().chain(self.odd.iter()) {
            w = self.apply_bond_sparse(&w, b);
        }
        w
    }

    fn apply_bond_sparse(&self, v: &HashMap<usize, f64>, bond: &Bond) -> HashMap<usize, f64> {
        let (sa, sb) = (self.strides[bond.a], self.strides[bond.b]);
        let (da, db) = (self.dims[bond.a], self.dims[bond.b]);
        let mut out: HashMap<usize, f64> = HashMap::new();
        for (&idx, &val) in v {
            let (x, y) = ((idx / sa) % da, (idx / sb) % db);
            let base = idx - x * sa - y * sb;
            let col = x * db + y;
            for r in 0..da * db {
                let m = bond.matrix[(r, col)];
                if m != 0.0 {
                    *out.entry(base + (r / db) * sa + (r % db) * sb).or_insert(0.0) += m * val;
                }
            }
        }
        out.retain(|_, x| *x != 0.0);
        out
    }

    fn dense_of(&self, cap: usize, f: impl Fn(&[f64]) -> Result<Vec<f64>>) -> Result<DMatrix<f64>> {
        let n = self.dim();
        if n.saturating_mul(n) > cap {
            return Err(GapError::DimensionCap {
                entries: n.saturating_mul(n),
                cap,
            });
        }
        let mut m = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = f(&e)?;
            m.set_column(j, &nalgebra::DVector::from_vec(col));
            e[j] = 0.0;
        }
        Ok(m)
    }

    /// Dense `Λ`, column `j` being `Λ e_j`.
    pub fn build_dense(&self, cap: usize) -> Result<DMatrix<f64>> {
        self.dense_of(cap, |v| self.apply_layer(v))
    }

    /// Dense `(L₁, L₂)` with `L₁ L₂ = Λ`.
    pub fn half_layer_factors(&self, cap: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        Ok((
            self.dense_of(cap, |v| self.apply_odd(v))?,
            self.dense_of(cap, |v| self.apply_even(v))?,
        ))
    }

    /// Change of basis `g = G^{1/2}` per site; every bond matrix becomes
    /// `(g⊗g) A (g⊗g)⁻¹`, which is symmetric.
    pub fn symmetrize(&self) -> Result<LayerOperator> {
        if self.is_symmetrized() {
            return Ok(self.clone());
        }
        let roots: Vec<(DMatrix<f64>, DMatrix<f64>)> =
            self.sites.iter().map(|s| sqrt_pair(&s.gram().to_f64())).collect();
        let conj = |b: &Bond| -> Result<Bond> {
            let g = roots[b.a].0.kronecker(&roots[b.b].0);
            let gi = roots[b.a].1.kronecker(&roots[b.b].1);
            let m = &g * &b.matrix * &gi;
            let dev = (&m - m.transpose()).amax();
            if dev > 1e-12 * m.amax().max(1.0) {
                return Err(GapError::NotSymmetric { deviation: dev });
            }
            let m = (&m + m.transpose()) * 0.5;
            Ok(Bond {
                matrix: m,
                ..b.clone()
            })
        };
        Ok(LayerOperator {
            odd: self.odd.iter().map(conj).collect::<Result<_>>()?,
            even: self.even.iter().map(conj).collect::<Result<_>>()?,
            site_sqrt: Some(roots.into_iter().map(|r| r.0).collect()),
            ..self.clone()
        })
    }

    /// Normalized eigenvectors with eigenvalue one: the global commutant elements as
    /// product states in the operator's current basis.
    pub fn unit_eigenvectors(&self) -> Result<Vec<ProductVector>> {
        let mut out = Vec::new();
        for elems in self.spec.global_elements() {
            let mut pv = Vec::with_capacity(self.sites.len());
            for (k, (site, e)) in self.sites.iter().zip(elems).enumerate() {
                let c: Vec<f64> = site.coords(e)?.iter().map(crate::rational::to_f64).collect();
                let mut c = nalgebra::DVector::from_vec(c);
                if let Some(g) = &self.site_sqrt {
                    c = &g[k] * c;
                }
                let norm = c.norm();
                pv.push(c.iter().map(|x| x / norm).collect());
            }
            out.push(pv);
        }
        Ok(out)
    }
}

/// Dense expansion of a product vector (big-endian).
pub fn product_to_dense(pv: &[Vec<f64>]) -> Vec<f64> {
    let mut v = vec![1.0];
    for f in pv {
        let mut next = Vec::with_capacity(v.len() * f.len());
        for &a in &v {
            for &b in f {
                next.push(a * b);
            }
        }
        v = next;
    }
    v
}

pub fn product_overlap(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
        .product()
}

/// `(M^{1/2}, M^{-1/2})` of a symmetric positive definite matrix.
pub(crate) fn sqrt_pair(m: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let u = &eig.eigenvectors;
    let s = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    let si = DMatrix::from_diagonal(&eig.eigenvalues.map(|x| 1.0 / x.sqrt()));
    (u * s * u.transpose(), u * si * u.transpose())
}
