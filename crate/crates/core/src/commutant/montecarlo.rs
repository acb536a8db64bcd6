use super::{element_matrix, haar_sample_with, weingarten_moment_matrix, GroupKind, PairAmbient, DENSE_OPERATOR_CAP};
use crate::error::{GapError, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const CHUNK: usize = 256;

/// Monte Carlo estimate of a local moment matrix with per-entry standard errors.
#[derive(Clone, Debug)]
pub struct McEstimate {
    pub mean: DMatrix<f64>,
    pub stderr: DMatrix<f64>,
    pub exact: DMatrix<f64>,
    pub samples: usize,
}

impl McEstimate {
    /// Largest `|mean - exact|` measured in standard errors, with a rounding floor.
    pub fn worst_sigma(&self, floor: f64) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.mean.nrows() {
            for j in 0..self.mean.ncols() {
                let dev = (self.mean[(i, j)] - self.exact[(i, j)]).abs();
                worst = worst.max(dev / (self.stderr[(i, j)] + floor));
            }
        }
        worst
    }

    pub fn within(&self, sigmas: f64, floor: f64) -> bool {
        self.mean
            .iter()
            .zip(self.exact.iter())
            .zip(self.stderr.iter())
            .all(|((m, e), s)| (m - e).abs() <= sigmas * s + floor)
    }
}

/// Sparse real operator on the two-copy space of a bond, index order `(a1, b1, a2, b2)`.
type Sparse = Vec<(usize, usize, f64)>;

fn ambient_operator(qa: usize, qb: usize, la: &DMatrix<f64>, lb: &DMatrix<f64>) -> Sparse {
    let qq = qa * qb;
    let mut out = Vec::new();
    for (ra, ca, va) in nonzeros(la) {
        let (a1, a2, a1p, a2p) = (ra / qa, ra % qa, ca / qa, ca % qa);
        for (rb, cb, vb) in nonzeros(lb) {
            let (b1, b2, b1p, b2p) = (rb / qb, rb % qb, cb / qb, cb % qb);
            let row = (a1 * qb + b1) * qq + (a2 * qb + b2);
            let col = (a1p * qb + b1p) * qq + (a2p * qb + b2p);
            out.push((row, col, va * vb));
        }
    }
    out
}

fn nonzeros(m: &DMatrix<f64>) -> Vec<(usize, usize, f64)> {
    let mut v = Vec::new();
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if m[(r, c)] != 0.0 {
                v.push((r, c, m[(r, c)]));
            }
        }
    }
    v
}

/// Estimates the local moment matrix of a Haar-random gate on `ambient` from `samples` draws.
///
/// Each draw `V` gives the ambient coordinates of `(V⊗V) X (V⊗V)†` for every ambient label
/// pair `X`. The sampling is split into fixed chunks with independent streams so the result
/// does not depend on the number of worker threads.
pub fn mc_local_moment(group: GroupKind, ambient: &PairAmbient, samples: usize, seed: u64) -> Result<McEstimate> {
    let (qa, qb) = (ambient.left.q, ambient.right.q);
    if qa * qa > DENSE_OPERATOR_CAP || qb * qb > DENSE_OPERATOR_CAP {
        return Err(GapError::UnsupportedGroupDimension {
            group: group.name().into(),
            d: qa,
            m: 1,
        });
    }
    if samples < 2 {
        return Err(GapError::InvalidParameter("need at least two samples".into()));
    }
    let exact = weingarten_moment_matrix(group, ambient)?.matrix;
    let (qa, qb) = (qa as usize, qb as usize);
    let ops: Vec<Sparse> = {
        let (la, lb) = (ambient.left.alphabet(), ambient.right.alphabet());
        let mut v = Vec::new();
        for &x in &la {
            for &y in &lb {
                v.push(ambient_operator(qa, qb, &element_matrix(qa, x), &element_matrix(qb, y)));
            }
        }
        v
    };
    let ginv = ambient
        .gram()
        .to_f64()
        .try_inverse()
        .ok_or_else(|| GapError::InvalidParameter("singular ambient Gram".into()))?;
    let k = ops.len();
    let gate_dim = qa * qb;
    let chunks = samples.div_ceil(CHUNK);
    let partial: Vec<(DMatrix<f64>, DMatrix<f64>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = CHUNK.min(samples - c * CHUNK);
            let mut sum = DMatrix::zeros(k, k);
            let mut sq = DMatrix::zeros(k, k);
            for _ in 0..count {
                let v = haar_sample_with(group, gate_dim, &mut rng).expect("validated dimension");
                let raw = raw_overlaps(&v, &ops, gate_dim);
                let est = &ginv * raw;
                sum += &est;
                sq += est.component_mul(&est);
            }
            (sum, sq)
        })
        .collect();
    let mut sum = DMatrix::zeros(k, k);
    let mut sq = DMatrix::zeros(k, k);
    for (s, q) in partial {
        sum += s;
        sq += q;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sq / n - mean.component_mul(&mean)).map(|x| x.max(0.0)) * (n / (n - 1.0));
    let stderr = var.map(|x| (x / n).sqrt());
    Ok(McEstimate {
        mean,
        stderr,
        exact,
        samples,
    })
}

/// `raw[k, l] = Re Tr[Z_k† W X_l W†]` with `W = V ⊗ V`.
fn raw_overlaps(v: &DMatrix<Complex64>, ops: &[Sparse], dim: usize) -> DMatrix<f64> {
    let w = |r: usize, c: usize| v[(r / dim, c / dim)] * v[(r % dim, c % dim)];
    let k = ops.len();
    let mut out = DMatrix::zeros(k, k);
    for (l, x) in ops.iter().enumerate() {
        // Y = W X W† restricted to the rows and columns needed by the Z_k
        for (kk, z) in ops.iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for &(r, c, zv) in z {
                let mut inner = Complex64::new(0.0, 0.0);
                for &(rp, cp, xv) in x {
                    inner += w(r, rp) * w(c, cp).conj() * xv;
                }
                acc += inner * zv;
            }
            out[(kk, l)] = acc.re;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::commutant::SiteKind;

    #[test]
    fn identity_column_is_exact_per_sample() {
        let amb = PairAmbient::uniform(SiteKind::plain(2));
        let est = mc_local_moment(GroupKind::Unitary, &amb, 8, 1).unwrap();
        assert!((est.mean[(0, 0)] - 1.0).abs() < 1e-12);
        assert!(est.stderr[(0, 0)] < 1e-10);
    }

    #[test]
    fn thread_count_does_not_change_result() {
        let amb = PairAmbient::uniform(SiteKind::plain(2));
        let a = mc_local_moment(GroupKind::Unitary, &amb, 600, 9).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| mc_local_moment(GroupKind::Unitary, &amb, 600, 9).unwrap());
        assert_eq!(a.mean, b.mean);
    }
}
