//! Compressed form of the symmetrized layer on the range of the odd half-layer.
//!
//! Each odd bond projector factors exactly as `A = R C` with `R` the ambient coordinates of
//! the gate commutant elements and `C` their Weingarten coefficients. With `W` the gate
//! Gram matrix, `Q = R W^{-1/2}` is an orthonormal basis (in the Hilbert-Schmidt metric)
//! of the projector's range, so
//!
//! `K = ⊗(W^{1/2} C) · L₂ · ⊗(R W^{-1/2})`
//!
//! is a real symmetric matrix on `⊗ C^{r_j}` whose spectrum is the nonzero spectrum of `Λ`
//! (padded with zeros). The unit eigenvectors become product states `⊗ W^{1/2} e_μ`.

use super::{sqrt_pair, Boundary, CircuitSpec, LayerOperator, ProductVector};
use crate::commutant::GateProjector;
use crate::error::{GapError, Result};
use nalgebra::{DMatrix, DMatrixView, DMatrixViewMut};
use std::sync::Mutex;

const SMALL_INNER: usize = 8;

/// Sparse operator on a run of consecutive tensor indices.
#[derive(Clone, Debug)]
pub struct LocalOp {
    pub pos: usize,
    pub in_dims: Vec<usize>,
    pub out_dims: Vec<usize>,
    /// `(row, col, value)` in the flattened local index spaces.
    pub entries: Vec<(usize, usize, f64)>,
    /// Acts on `(last index, first index)` instead of a consecutive run.
    pub wraps: bool,
    dense: DMatrix<f64>,
}

impl LocalOp {
    fn from_dense(pos: usize, in_dims: Vec<usize>, out_dims: Vec<usize>, m: &DMatrix<f64>, wraps: bool) -> Self {
        let scale = m.amax();
        let mut entries = Vec::new();
        for c in 0..m.ncols() {
            for r in 0..m.nrows() {
                let v = m[(r, c)];
                if v.abs() > 1e-15 * scale {
                    entries.push((r, c, v));
                }
            }
        }
        Self {
            pos,
            in_dims,
            out_dims,
            entries,
            wraps,
            dense: m.clone(),
        }
    }

    fn apply(&self, input: &[f64], dims: &[usize], output: &mut Vec<f64>) -> Vec<usize> {
        if self.wraps {
            return self.apply_wrap(input, dims, output);
        }
        let k = self.in_dims.len();
        let outer: usize = dims[..self.pos].iter().product();
        let inner: usize = dims[self.pos + k..].iter().product();
        let ib: usize = self.in_dims.iter().product();
        let obk: usize = self.out_dims.iter().product();
        output.clear();
        output.resize(outer * obk * inner, 0.0);
        if inner < SMALL_INNER && outer > inner {
            // short contiguous runs: one strided gemm per inner index is much faster
            for t in 0..inner {
                let src = DMatrixView::from_slice_with_strides(&input[t..], ib, outer, inner, ib * inner);
                let mut dst =
                    DMatrixViewMut::from_slice_with_strides_mut(&mut output[t..], obk, outer, inner, obk * inner);
                dst.gemm(1.0, &self.dense, &src, 0.0);
            }
            return self.out_shape(dims);
        }
        for o in 0..outer {
            let src = &input[o * ib * inner..(o + 1) * ib * inner];
            let dst = &mut output[o * obk * inner..(o + 1) * obk * inner];
            if inner == 1 {
                for &(r, c, v) in &self.entries {
                    dst[r] += v * src[c];
                }
            } else {
                for &(r, c, v) in &self.entries {
                    let s = &src[c * inner..(c + 1) * inner];
                    let d = &mut dst[r * inner..(r + 1) * inner];
                    for (x, y) in d.iter_mut().zip(s) {
                        *x += v * y;
                    }
                }
            }
        }
        self.out_shape(dims)
    }

    fn out_shape(&self, dims: &[usize]) -> Vec<usize> {
        let mut nd = dims[..self.pos].to_vec();
        nd.extend_from_slice(&self.out_dims);
        nd.extend_from_slice(&dims[self.pos + self.in_dims.len()..]);
        nd
    }

    fn apply_wrap(&self, input: &[f64], dims: &[usize], output: &mut Vec<f64>) -> Vec<usize> {
        let (df, dl) = (dims[0], dims[dims.len() - 1]);
        let mid = input.len() / (df * dl);
        output.clear();
        output.resize(input.len(), 0.0);
        for &(r, c, v) in &self.entries {
            let (lo, fo) = (r / df, r % df);
            let (li, fi) = (c / df, c % df);
            for m in 0..mid {
                output[(fo * mid + m) * dl + lo] += v * input[(fi * mid + m) * dl + li];
            }
        }
        dims.to_vec()
    }
}

/// Symmetric compressed layer operator.
#[derive(Clone, Debug)]
pub struct PairChain {
    pub spec: CircuitSpec,
    /// Range dimension `r_j` of each odd bond.
    pub ranks: Vec<usize>,
    pub site_dims: Vec<usize>,
    pub projectors: Vec<GateProjector>,
    /// `W^{1/2}` per pair.
    pub w_sqrt: Vec<DMatrix<f64>>,
    /// `W^{1/2} C` per pair (`r × D_a D_b`).
    pub coeff: Vec<DMatrix<f64>>,
    /// `R W^{-1/2}` per pair (`D_a D_b × r`).
    pub range: Vec<DMatrix<f64>>,
    /// Even bond matrices in the unsymmetrized label basis, wraparound last.
    pub even: Vec<DMatrix<f64>>,
    plan: Vec<LocalOp>,
    scratch: Scratch,
}

#[derive(Debug, Default)]
struct Scratch(Mutex<(Vec<f64>, Vec<f64>)>);

impl Clone for Scratch {
    fn clone(&self) -> Self {
        Self::default()
    }
}

impl PairChain {
    pub fn new(spec: CircuitSpec) -> Result<Self> {
        let layer = LayerOperator::new(spec)?;
        let pairs = spec.eta() / 2;
        let site_dims = layer.dims.clone();
        let mut ranks = Vec::new();
        let mut w_sqrt = Vec::new();
        let mut coeff = Vec::new();
        let mut range = Vec::new();
        let mut projectors = Vec::new();
        for bond in &layer.odd {
            let p = &bond.projector;
            let (ws, wis) = sqrt_pair(&p.gram.to_f64());
            coeff.push(&ws * p.coeff.to_f64());
            range.push(p.range.to_f64() * &wis);
            w_sqrt.push(ws);
            ranks.push(p.rank());
            projectors.push(p.clone());
        }
        let even: Vec<DMatrix<f64>> = layer.even.iter().map(|b| b.matrix.clone()).collect();
        let mut chain = Self {
            spec,
            ranks,
            site_dims,
            projectors,
            w_sqrt,
            coeff,
            range,
            even,
            plan: Vec::new(),
            scratch: Scratch::default(),
        };
        debug_assert_eq!(chain.ranks.len(), pairs);
        chain.plan = chain.build_plan();
        Ok(chain)
    }

    pub fn pairs(&self) -> usize {
        self.ranks.len()
    }

    /// Saturates for chains too long to address.
    pub fn dim(&self) -> usize {
        self.ranks.iter().fold(1usize, |a, r| a.saturating_mul(*r))
    }

    pub fn plan(&self) -> &[LocalOp] {
        &self.plan
    }

    fn build_plan(&self) -> Vec<LocalOp> {
        let p = self.pairs();
        let d = &self.site_dims;
        let id = |n: usize| DMatrix::<f64>::identity(n, n);
        let mut plan = Vec::new();
        let closed = self.spec.boundary == Boundary::Closed;
        if closed {
            plan.push(LocalOp::from_dense(0, vec![self.ranks[0]], vec![d[0], d[1]], &self.range[0], false));
            plan.push(LocalOp::from_dense(
                p,
                vec![self.ranks[p - 1]],
                vec![d[2 * p - 2], d[2 * p - 1]],
                &self.range[p - 1],
                false,
            ));
            let w = self.even.last().expect("wrap bond");
            plan.push(LocalOp::from_dense(0, vec![d[2 * p - 1], d[0]], vec![d[2 * p - 1], d[0]], w, true));
        }
        for j in 0..p - 1 {
            let (da, db, dc, dd) = (d[2 * j], d[2 * j + 1], d[2 * j + 2], d[2 * j + 3]);
            let left_expanded = closed || j > 0;
            let right_expanded = closed && j == p - 2;
            let last = j == p - 2;
            let mut in_dims = vec![];
            if left_expanded {
                in_dims.extend([da, db]);
            } else {
                in_dims.push(self.ranks[j]);
            }
            if right_expanded {
                in_dims.push(dc);
                in_dims.push(dd);
            } else {
                in_dims.push(self.ranks[j + 1]);
            }
            let left = if left_expanded { id(da * db) } else { self.range[j].clone() };
            let right = if right_expanded { id(dc * dd) } else { self.range[j + 1].clone() };
            let m = left.kronecker(&right);
            // even bond between the pairs
            let bond = id(da).kronecker(&self.even[j]).kronecker(&id(dd));
            let mut m = bond * m;
            // contract
            let mut out_dims = vec![self.ranks[j]];
            if last {
                m = self.coeff[j].kronecker(&self.coeff[j + 1]) * m;
                out_dims.push(self.ranks[j + 1]);
            } else {
                m = self.coeff[j].kronecker(&id(dc * dd)) * m;
                out_dims.extend([dc, dd]);
            }
            plan.push(LocalOp::from_dense(j, in_dims, out_dims, &m, false));
        }
        plan
    }

    /// `y = K x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let Some((first, rest)) = self.plan.split_first() else {
            y.copy_from_slice(x);
            return;
        };
        // reuse the work buffers when no other thread holds them
        let mut local = (Vec::new(), Vec::new());
        let mut guard = self.scratch.0.try_lock().ok();
        let (a, b) = match guard.as_deref_mut() {
            Some(buf) => (&mut buf.0, &mut buf.1),
            None => (&mut local.0, &mut local.1),
        };
        let mut dims = first.apply(x, &self.ranks, a);
        for op in rest {
            dims = op.apply(a, &dims, b);
            std::mem::swap(a, b);
        }
        y.copy_from_slice(a);
    }

    pub fn apply_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(GapError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let mut y = vec![0.0; x.len()];
        self.apply(x, &mut y);
        Ok(y)
    }

    /// Dense `K`; `cap` bounds the number of entries.
    pub fn dense(&self, cap: usize) -> Result<DMatrix<f64>> {
        let n = self.dim();
        if n.saturating_mul(n) > cap {
            return Err(GapError::DimensionCap {
                entries: n.saturating_mul(n),
                cap,
            });
        }
        let mut m = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        let mut y = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            self.apply(&e, &mut y);
            m.set_column(j, &nalgebra::DVector::from_column_slice(&y));
            e[j] = 0.0;
        }
        Ok(m)
    }

    /// Normalized unit eigenvectors as product states over pairs.
    pub fn unit_vectors(&self) -> Vec<ProductVector> {
        let mut out = Vec::new();
        for elems in self.spec.global_elements() {
            let mut pv = Vec::with_capacity(self.pairs());
            for (j, proj) in self.projectors.iter().enumerate() {
                let key = (elems[2 * j], elems[2 * j + 1]);
                let mu = proj.elements.iter().position(|e| *e == key).expect("global element is a gate element");
                let v = self.w_sqrt[j].column(mu).into_owned();
                let n = v.norm();
                pv.push(v.iter().map(|x| x / n).collect());
            }
            out.push(pv);
        }
        out
    }

    /// Isometry from pair `j`'s compressed space into the symmetrized two-site label space.
    pub fn pair_isometry(&self, j: usize, layer_sym: &LayerOperator) -> DMatrix<f64> {
        let g = layer_sym.site_sqrt.as_ref().expect("symmetrized layer");
        g[2 * j].kronecker(&g[2 * j + 1]) * &self.range[j]
    }
}
