//! Open-boundary matrix product states.
//!
//! A site tensor `A[a, s, b]` is stored column-major at `a + χl (s + d b)`, so it reads
//! without copying as a `χl × (d χr)` or a `(χl d) × χr` matrix.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct SiteTensor {
    pub left: usize,
    pub phys: usize,
    pub right: usize,
    pub data: Vec<f64>,
}

impl SiteTensor {
    pub fn zeros(left: usize, phys: usize, right: usize) -> Self {
        Self {
            left,
            phys,
            right,
            data: vec![0.0; left * phys * right],
        }
    }

    #[inline]
    pub fn at(&self, a: usize, s: usize, b: usize) -> f64 {
        self.data[a + self.left * (s + self.phys * b)]
    }

    /// `(χl d) × χr` view.
    pub fn as_left_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.left * self.phys, self.right, &self.data)
    }

    /// `χl × (d χr)` view.
    pub fn as_right_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.left, self.phys * self.right, &self.data)
    }
}

#[derive(Clone, Debug)]
pub struct Mps {
    pub sites: Vec<SiteTensor>,
}

impl Mps {
    /// Random state with bond dimensions `min(χ, left space, right space)`, right-canonical.
    pub fn random(dims: &[usize], chi: usize, seed: u64) -> Self {
        let n = dims.len();
        let mut bonds = vec![1usize; n + 1];
        for i in 1..n {
            let left: usize = dims[..i].iter().fold(1usize, |a, d| a.saturating_mul(*d));
            let right: usize = dims[i..].iter().fold(1usize, |a, d| a.saturating_mul(*d));
            bonds[i] = chi.min(left).min(right);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sites = (0..n)
            .map(|i| {
                let mut t = SiteTensor::zeros(bonds[i], dims[i], bonds[i + 1]);
                t.data.iter_mut().for_each(|x| *x = rng.random::<f64>() - 0.5);
                t
            })
            .collect();
        let mut mps = Self { sites };
        mps.right_canonicalize();
        mps
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites[..self.len() - 1].iter().map(|t| t.right).collect()
    }

    /// Sweeps right to left with LQ steps so every site except the first is right-orthonormal.
    pub fn right_canonicalize(&mut self) {
        for i in (1..self.len()).rev() {
            let t = &self.sites[i];
            // LQ of M = χl × (d χr) via QR of Mᵀ
            let qr = t.as_right_matrix().transpose().qr();
            let (q, r) = (qr.q(), qr.r());
            let k = q.ncols();
            let (phys, right) = (t.phys, t.right);
            let qt = q.transpose();
            self.sites[i] = SiteTensor {
                left: k,
                phys,
                right,
                data: qt.as_slice().to_vec(),
            };
            // absorb Lᵀ = Rᵀ... into the left neighbour: A_{i-1} ← A_{i-1} Rᵀ
            let prev = &self.sites[i - 1];
            let m = prev.as_left_matrix() * r.transpose();
            self.sites[i - 1] = SiteTensor {
                left: prev.left,
                phys: prev.phys,
                right: k,
                data: m.as_slice().to_vec(),
            };
        }
        let first = &mut self.sites[0];
        let nrm = first.data.iter().map(|x| x * x).sum::<f64>().sqrt();
        first.data.iter_mut().for_each(|x| *x /= nrm);
    }

    /// Dense state vector, first site most significant.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut acc = DMatrix::from_element(1, 1, 1.0);
        for t in &self.sites {
            // acc: N × χl; result (N·d) × χr in big-endian order
            let n = acc.nrows();
            let mut next = DMatrix::zeros(n * t.phys, t.right);
            for s in 0..t.phys {
                for b in 0..t.right {
                    for a in 0..t.left {
                        let v = t.at(a, s, b);
                        if v == 0.0 {
                            continue;
                        }
                        for x in 0..n {
                            next[(x * t.phys + s, b)] += acc[(x, a)] * v;
                        }
                    }
                }
            }
            acc = next;
        }
        acc.column(0).iter().copied().collect()
    }
}
