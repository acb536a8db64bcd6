//! Thick-restart Lanczos for the largest eigenpair of a symmetric operator.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Symmetric linear operator applied matrix-free.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl LinearOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
}

#[derive(Clone, Debug)]
pub struct KrylovConfig {
    /// Convergence threshold on the Ritz residual `‖A x - θ x‖`.
    pub tol: f64,
    /// Scale the threshold by `|θ|`.
    pub relative: bool,
    pub max_matvecs: usize,
    /// Maximum Krylov basis size before a restart.
    pub depth: usize,
    /// Ritz vectors kept across a restart.
    pub keep: usize,
}

impl Default for KrylovConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            relative: false,
            max_matvecs: 100_000,
            depth: 50,
            keep: 10,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
    pub matvecs: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn project_out(w: &mut [f64], basis: &[Vec<f64>]) {
    for u in basis {
        let h = dot(u, w);
        axpy(-h, u, w);
    }
}

/// Random unit vector orthogonal to `deflate`.
pub fn random_start(n: usize, deflate: &[Vec<f64>], seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    project_out(&mut v, deflate);
    project_out(&mut v, deflate);
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    v
}

/// Largest eigenpair of `A - P`, where `P` projects onto the orthonormal vectors `deflate`.
///
/// The Krylov space is kept orthogonal to `deflate`, so on it `A - P` acts as `A`.
pub fn largest_eigenpair(op: &dyn LinearOperator, deflate: &[Vec<f64>], start: Vec<f64>, cfg: &KrylovConfig) -> EigenPair {
    let n = op.dim();
    let free = n.saturating_sub(deflate.len()).max(1);
    let depth = cfg.depth.max(2).min(free);
    let keep = cfg.keep.clamp(1, depth.saturating_sub(1).max(1));
    let mut v0 = start;
    project_out(&mut v0, deflate);
    project_out(&mut v0, deflate);
    let n0 = norm(&v0);
    if n0 == 0.0 || !n0.is_finite() {
        v0 = random_start(n, deflate, 0x5eed);
    } else {
        v0.iter_mut().for_each(|x| *x /= n0);
    }

    // basis vectors are the leading columns
    let mut v = DMatrix::<f64>::zeros(n, depth);
    v.column_mut(0).copy_from_slice(&v0);
    drop(v0);
    let mut h = DMatrix::<f64>::zeros(depth, depth);
    let mut w = DVector::<f64>::zeros(n);
    let mut tail = DVector::<f64>::zeros(n);
    let mut first = 0;
    let mut matvecs = 0usize;
    let mut best = (0.0f64, DVector::<f64>::zeros(0), f64::INFINITY);

    loop {
        let mut beta_last = 0.0;
        let mut has_tail = false;
        let mut size = depth;
        for j in first..depth {
            op.apply(v.column(j).as_slice(), w.as_mut_slice());
            matvecs += 1;
            project_out(w.as_mut_slice(), deflate);
            let scale = w.norm();
            // recurrence terms already known from earlier steps or the restart
            for i in 0..j {
                let c = h[(i, j)];
                if c != 0.0 {
                    w.axpy(-c, &v.column(i), 1.0);
                }
            }
            let alpha = v.column(j).dot(&w);
            w.axpy(-alpha, &v.column(j), 1.0);
            h[(j, j)] = alpha;
            // one full reorthogonalization pass
            let c = v.columns(0, j + 1).tr_mul(&w);
            w.gemv(-1.0, &v.columns(0, j + 1), &c, 1.0);
            for i in 0..=j {
                h[(i, j)] += c[i];
            }
            for i in 0..j {
                h[(j, i)] = h[(i, j)];
            }
            project_out(w.as_mut_slice(), deflate);
            let beta = w.norm();
            if beta == 0.0 || beta <= 1e-13 * scale.max(h[(j, j)].abs()) {
                size = j + 1;
                break;
            }
            w /= beta;
            let exhausted = j + 1 == depth;
            if exhausted || (j + 1 >= first + 2 && early_exit(&h, j + 1, beta, cfg)) {
                size = j + 1;
                beta_last = beta;
                has_tail = true;
                tail.copy_from(&w);
                break;
            }
            h[(j + 1, j)] = beta;
            h[(j, j + 1)] = beta;
            v.column_mut(j + 1).copy_from(&w);
        }

        let eig = SymmetricEigen::new(h.view((0, 0), (size, size)).into_owned());
        let mut order: Vec<usize> = (0..size).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
        let theta = eig.eigenvalues[order[0]];
        let residual = (beta_last * eig.eigenvectors[(size - 1, order[0])]).abs();
        let threshold = if cfg.relative { cfg.tol * theta.abs() } else { cfg.tol };
        let ritz = |cols: &[usize]| -> DMatrix<f64> {
            let sel = DMatrix::from_fn(size, cols.len(), |r, c| eig.eigenvectors[(r, cols[c])]);
            v.columns(0, size) * sel
        };
        // a one-column space has nothing left to restart with
        let converged = residual <= threshold || !has_tail || depth < 2;
        if residual < best.2 || best.1.is_empty() {
            best = (theta, ritz(&order[..1]).column(0).into_owned(), residual);
        }
        if converged || matvecs >= cfg.max_matvecs {
            let mut x = best.1;
            x.normalize_mut();
            return EigenPair {
                value: best.0,
                vector: x.data.into(),
                residual: best.2,
                matvecs,
                converged,
            };
        }

        // thick restart on the leading Ritz vectors
        let kept = keep.min(size - 1);
        let x = ritz(&order[..kept]);
        v.columns_mut(0, kept).copy_from(&x);
        drop(x);
        h.fill(0.0);
        for (i, &c) in order[..kept].iter().enumerate() {
            h[(i, i)] = eig.eigenvalues[c];
            let coupling = beta_last * eig.eigenvectors[(size - 1, c)];
            h[(i, kept)] = coupling;
            h[(kept, i)] = coupling;
        }
        v.column_mut(kept).copy_from(&tail);
        first = kept;
    }
}

/// Whether the leading Ritz pair of the current `size × size` projection has converged.
fn early_exit(h: &DMatrix<f64>, size: usize, beta: f64, cfg: &KrylovConfig) -> bool {
    let eig = SymmetricEigen::new(h.view((0, 0), (size, size)).into_owned());
    let top = eig.eigenvalues.imax();
    let theta = eig.eigenvalues[top];
    let threshold = if cfg.relative { cfg.tol * theta.abs() } else { cfg.tol };
    (beta * eig.eigenvectors[(size - 1, top)]).abs() <= threshold
}
