//! Matrix-product form of the compressed layer operator.
//!
//! Sites are the odd-bond pairs with local space `C^{r_j}`. Every even bond is split by an
//! operator Schmidt decomposition `E = Σ_k A_k ⊗ B_k`, and pair `j` carries
//! `W^{1/2} C (B_k ⊗ A_{k'}) R W^{-1/2}`. A closed chain threads the wraparound channel
//! through every bond.

use crate::error::{GapError, Result};
use crate::layer::{Boundary, CircuitSpec, PairChain, ProductVector};
use nalgebra::DMatrix;

/// Relative cutoff on operator Schmidt values.
const SCHMIDT_CUTOFF: f64 = 1e-14;

/// One MPO site: sparse grid of `d × d` blocks indexed by `(left, right)` channels.
#[derive(Clone, Debug)]
pub struct MpoTensor {
    pub wl: usize,
    pub wr: usize,
    pub d: usize,
    pub blocks: Vec<(usize, usize, DMatrix<f64>)>,
}

#[derive(Clone, Debug)]
pub struct MpoOperator {
    pub spec: CircuitSpec,
    pub tensors: Vec<MpoTensor>,
    /// Normalized product states spanning the unit eigenspace.
    pub deflation: Vec<ProductVector>,
    /// Inverse Gram matrix of `deflation`; `Σ |v_a⟩ G⁻¹_ab ⟨v_b|` is the projector.
    pub deflation_gram_inv: DMatrix<f64>,
}

/// `E = Σ_k A_k ⊗ B_k` for `E` on `C^{da} ⊗ C^{db}` in big-endian order.
pub fn operator_schmidt(e: &DMatrix<f64>, da: usize, db: usize) -> Vec<(DMatrix<f64>, DMatrix<f64>)> {
    // M[(x', x), (y', y)] = E[(x' y'), (x y)]
    let m = DMatrix::from_fn(da * da, db * db, |r, c| {
        let (xo, xi) = (r / da, r % da);
        let (yo, yi) = (c / db, c % db);
        e[(xo * db + yo, xi * db + yi)]
    });
    let svd = m.svd(true, true);
    let u = svd.u.expect("u");
    let vt = svd.v_t.expect("v_t");
    let top = svd.singular_values.max();
    let mut out = Vec::new();
    for k in 0..svd.singular_values.len() {
        let s = svd.singular_values[k];
        if s <= SCHMIDT_CUTOFF * top {
            continue;
        }
        let r = s.sqrt();
        let a = DMatrix::from_fn(da, da, |xo, xi| r * u[(xo * da + xi, k)]);
        let b = DMatrix::from_fn(db, db, |yo, yi| r * vt[(k, yo * db + yi)]);
        out.push((a, b));
    }
    out
}

fn dense_gram_inv(vectors: &[ProductVector]) -> DMatrix<f64> {
    let n = vectors.len();
    let g = DMatrix::from_fn(n, n, |a, b| {
        vectors[a]
            .iter()
            .zip(&vectors[b])
            .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
            .product()
    });
    g.try_inverse().expect("unit eigenvectors are linearly independent")
}

/// Builds the MPO of `K` and attaches the unit-eigenspace deflation.
pub fn build_mpo(spec: &CircuitSpec) -> Result<MpoOperator> {
    let chain = PairChain::new(*spec)?;
    let p = chain.pairs();
    if p < 2 {
        return Err(GapError::InvalidSize("need at least two pairs for an MPO".into()));
    }
    let dims = &chain.site_dims;
    let closed = spec.boundary == Boundary::Closed;
    let eta = dims.len();
    // even bond j joins sites (2j+1, 2j+2); the wrap joins (η-1, 0)
    let splits: Vec<_> = (0..p - 1)
        .map(|j| operator_schmidt(&chain.even[j], dims[2 * j + 1], dims[2 * j + 2]))
        .collect();
    let wrap = closed.then(|| operator_schmidt(chain.even.last().expect("wrap bond"), dims[eta - 1], dims[0]));
    let ww = wrap.as_ref().map_or(1, |w| w.len());

    let mut tensors = Vec::with_capacity(p);
    for j in 0..p {
        let (da, db) = (dims[2 * j], dims[2 * j + 1]);
        let id_a = DMatrix::identity(da, da);
        let id_b = DMatrix::identity(db, db);
        // operators on the left site of the pair, one per left channel
        let lefts: Vec<&DMatrix<f64>> = if j > 0 {
            splits[j - 1].iter().map(|(_, b)| b).collect()
        } else {
            match &wrap {
                Some(w) => w.iter().map(|(_, b)| b).collect(),
                None => vec![&id_a],
            }
        };
        let rights: Vec<&DMatrix<f64>> = if j + 1 < p {
            splits[j].iter().map(|(a, _)| a).collect()
        } else {
            match &wrap {
                Some(w) => w.iter().map(|(a, _)| a).collect(),
                None => vec![&id_b],
            }
        };
        let local = |l: &DMatrix<f64>, r: &DMatrix<f64>| &chain.coeff[j] * l.kronecker(r) * &chain.range[j];
        let d = chain.ranks[j];
        let mut blocks = Vec::new();
        let (wl, wr);
        if !closed {
            wl = lefts.len();
            wr = rights.len();
            for (k, l) in lefts.iter().enumerate() {
                for (kk, r) in rights.iter().enumerate() {
                    blocks.push((k, kk, local(l, r)));
                }
            }
        } else if j == 0 {
            // wrap channel opens here: right index (k', w)
            wl = 1;
            wr = rights.len() * ww;
            for (w, l) in lefts.iter().enumerate() {
                for (kk, r) in rights.iter().enumerate() {
                    blocks.push((0, kk * ww + w, local(l, r)));
                }
            }
        } else if j + 1 == p {
            wl = lefts.len() * ww;
            wr = 1;
            for (k, l) in lefts.iter().enumerate() {
                for (w, r) in rights.iter().enumerate() {
                    blocks.push((k * ww + w, 0, local(l, r)));
                }
            }
        } else {
            wl = lefts.len() * ww;
            wr = rights.len() * ww;
            for (k, l) in lefts.iter().enumerate() {
                for (kk, r) in rights.iter().enumerate() {
                    let m = local(l, r);
                    for w in 0..ww {
                        blocks.push((k * ww + w, kk * ww + w, m.clone()));
                    }
                }
            }
        }
        blocks.retain(|(_, _, m)| m.amax() > 0.0);
        tensors.push(MpoTensor { wl, wr, d, blocks });
    }
    let deflation = chain.unit_vectors();
    let deflation_gram_inv = dense_gram_inv(&deflation);
    Ok(MpoOperator {
        spec: *spec,
        tensors,
        deflation,
        deflation_gram_inv,
    })
}

impl MpoOperator {
    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn local_dims(&self) -> Vec<usize> {
        self.tensors.iter().map(|t| t.d).collect()
    }

    /// Internal bond dimensions (between consecutive sites).
    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors[..self.len() - 1].iter().map(|t| t.wr).collect()
    }

    pub fn max_bond_dim(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Dense contraction of the MPO without deflation; `cap` bounds the entries.
    pub fn contract(&self, cap: usize) -> Result<DMatrix<f64>> {
        let n: usize = self.local_dims().iter().product();
        if n.saturating_mul(n) > cap {
            return Err(GapError::DimensionCap {
                entries: n.saturating_mul(n),
                cap,
            });
        }
        let mut acc = vec![DMatrix::from_element(1, 1, 1.0)];
        for t in &self.tensors {
            let size = acc[0].nrows() * t.d;
            let mut next = vec![DMatrix::zeros(size, size); t.wr];
            for (l, r, m) in &t.blocks {
                next[*r] += acc[*l].kronecker(m);
            }
            acc = next;
        }
        Ok(acc.swap_remove(0))
    }

    /// Dense deflation projector.
    pub fn projector(&self) -> DMatrix<f64> {
        let dense: Vec<DMatrix<f64>> = self
            .deflation
            .iter()
            .map(|pv| {
                let v = crate::layer::product_to_dense(pv);
                DMatrix::from_column_slice(v.len(), 1, &v)
            })
            .collect();
        let n = dense[0].nrows();
        let mut p = DMatrix::zeros(n, n);
        for (a, va) in dense.iter().enumerate() {
            for (b, vb) in dense.iter().enumerate() {
                p += va * vb.transpose() * self.deflation_gram_inv[(a, b)];
            }
        }
        p
    }
}
