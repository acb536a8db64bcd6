use super::GroupKind;
use crate::error::{GapError, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Draws a Haar-random element of the group in its defining representation of size `dim`.
///
/// The symplectic group is realized as unitaries with `Vᵀ J V = J`, `J = J₂ ⊗ 1`.
pub fn haar_sample(group: GroupKind, dim: usize, seed: u64) -> Result<DMatrix<Complex64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    haar_sample_with(group, dim, &mut rng)
}

pub fn haar_sample_with<R: Rng + ?Sized>(group: GroupKind, dim: usize, rng: &mut R) -> Result<DMatrix<Complex64>> {
    if dim == 0 {
        return Err(GapError::InvalidDimension("dimension must be positive".into()));
    }
    match group {
        GroupKind::Unitary => Ok(unitary(dim, rng)),
        GroupKind::Orthogonal => Ok(orthogonal(dim, rng).map(|x| Complex64::new(x, 0.0))),
        GroupKind::Symplectic => {
            if !dim.is_multiple_of(2) {
                return Err(GapError::InvalidDimension(format!("symplectic dimension must be even, got {dim}")));
            }
            Ok(symplectic(dim, rng))
        }
    }
}

fn gauss<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

fn cgauss<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(gauss(rng), gauss(rng)) * std::f64::consts::FRAC_1_SQRT_2
}

fn unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<Complex64> {
    let z = DMatrix::from_fn(n, n, |_, _| cgauss(rng));
    let qr = z.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

fn orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let z = DMatrix::from_fn(n, n, |_, _| gauss(rng));
    let qr = z.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// `τ(u) = -J ū`, the quaternionic partner of a column.
fn partner(u: &DVector<Complex64>) -> DVector<Complex64> {
    let k = u.len() / 2;
    DVector::from_fn(u.len(), |i, _| if i < k { -u[i + k].conj() } else { u[i - k].conj() })
}

fn symplectic<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<Complex64> {
    let k = n / 2;
    let mut cols: Vec<DVector<Complex64>> = Vec::with_capacity(n);
    let mut firsts = Vec::with_capacity(k);
    while firsts.len() < k {
        let mut u = DVector::from_fn(n, |_, _| cgauss(rng));
        for _ in 0..2 {
            for c in &cols {
                let p = c.dotc(&u);
                u.axpy(-p, c, Complex64::new(1.0, 0.0));
            }
        }
        let norm = u.norm();
        if norm < 1e-10 {
            continue;
        }
        u.unscale_mut(norm);
        let t = partner(&u);
        cols.push(u.clone());
        cols.push(t);
        firsts.push(u);
    }
    let mut v = DMatrix::zeros(n, n);
    for (j, u) in firsts.iter().enumerate() {
        v.set_column(j, u);
        v.set_column(j + k, &partner(u));
    }
    v
}
