//! Numerical spectral gaps: dense diagonalization, Krylov iteration with unit-eigenspace
//! deflation, and the decay of layer powers.
//!
//! Both eigen-solvers work on the symmetric compressed operator of [`PairChain`].

mod krylov;

pub use krylov::{largest_eigenpair, random_start, EigenPair, KrylovConfig, LinearOperator};

use crate::error::{GapError, Result};
use crate::layer::{product_to_dense, CircuitSpec, LayerOperator, PairChain, ProductVector, DEFAULT_DENSE_CAP};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Eigenvalues within this distance of one are treated as unit eigenvalues.
pub const UNIT_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Dense,
    Iterative,
    Dmrg,
    Formula,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Dense => "dense",
            Method::Iterative => "iterative",
            Method::Dmrg => "dmrg",
            Method::Formula => "formula",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GapResult {
    pub spec: CircuitSpec,
    pub lambda: f64,
    pub method: Method,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Number of unit eigenvalues found (dense only).
    pub unit_eigenvalues: Option<usize>,
    /// Multiplicity of the gap eigenvalue (dense only).
    pub degeneracy: Option<usize>,
    /// Leading eigenvector in the compressed symmetric coordinates.
    #[serde(skip)]
    pub eigvec: Option<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub tolerance: f64,
    /// Interpret `tolerance` relative to `λ`.
    pub relative: bool,
    pub max_iterations: usize,
    pub krylov_depth: usize,
    pub seed: u64,
    /// Bound on the entries of any dense matrix.
    pub dense_cap: usize,
    pub keep_eigvec: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            relative: false,
            max_iterations: 100_000,
            krylov_depth: 50,
            seed: 0,
            dense_cap: DEFAULT_DENSE_CAP,
            keep_eigvec: false,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(GapError::InvalidParameter("tolerance must be positive".into()));
        }
        if self.krylov_depth < 2 {
            return Err(GapError::InvalidParameter("Krylov depth must be at least 2".into()));
        }
        Ok(())
    }
}

/// Compressed dimensions above this go to DMRG under automatic selection.
pub const ITERATIVE_MAX_DIM: usize = 1 << 22;

/// Dense when the compressed matrix fits under `dense_cap` entries, Krylov up to
/// [`ITERATIVE_MAX_DIM`], DMRG beyond.
pub fn auto_method(spec: &CircuitSpec, dense_cap: usize) -> Result<Method> {
    let dim = PairChain::new(*spec)?.dim();
    Ok(if dim.saturating_mul(dim) <= dense_cap {
        Method::Dense
    } else if dim <= ITERATIVE_MAX_DIM {
        Method::Iterative
    } else {
        Method::Dmrg
    })
}

/// Gram-Schmidt on product vectors expanded to dense form.
pub fn orthonormalize(vectors: &[ProductVector]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for pv in vectors {
        let mut v = product_to_dense(pv);
        for _ in 0..2 {
            for u in &out {
                let c: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(u).for_each(|(x, y)| *x -= c * y);
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= n);
        out.push(v);
    }
    out
}

/// Full eigendecomposition of the compressed operator.
pub fn dense_gap(spec: &CircuitSpec, config: &SolverConfig) -> Result<GapResult> {
    config.validate()?;
    let chain = PairChain::new(*spec)?;
    let k = chain.dense(config.dense_cap)?;
    let eig = SymmetricEigen::new(k.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let units = order.iter().filter(|&&i| (eig.eigenvalues[i] - 1.0).abs() < UNIT_TOL).count();
    let top = order
        .iter()
        .copied()
        .find(|&i| eig.eigenvalues[i] < 1.0 - UNIT_TOL)
        .ok_or_else(|| GapError::InvalidSpec("no eigenvalue below one".into()))?;
    let lambda = eig.eigenvalues[top];
    let degeneracy = order
        .iter()
        .filter(|&&i| (eig.eigenvalues[i] - lambda).abs() <= 1e-9 * lambda.abs().max(1e-300))
        .count();
    let v = eig.eigenvectors.column(top).into_owned();
    let residual = (&k * &v - &v * lambda).norm();
    Ok(GapResult {
        spec: *spec,
        lambda,
        method: Method::Dense,
        residual,
        iterations: 0,
        converged: true,
        unit_eigenvalues: Some(units),
        degeneracy: Some(degeneracy),
        eigvec: config.keep_eigvec.then(|| v.iter().copied().collect()),
    })
}

struct ChainOp<'a>(&'a PairChain);

impl LinearOperator for ChainOp<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.0.apply(x, y)
    }
}

/// Largest eigenvalue of `K - P` by thick-restart Lanczos.
pub fn iterative_gap(spec: &CircuitSpec, config: &SolverConfig) -> Result<GapResult> {
    iterative_gap_from(spec, config, None)
}

/// [`iterative_gap`] seeded with a guess for the leading vector, e.g. the eigenvector of a
/// neighbouring parameter point. A small random admixture keeps every direction in play.
pub fn iterative_gap_from(spec: &CircuitSpec, config: &SolverConfig, guess: Option<&[f64]>) -> Result<GapResult> {
    config.validate()?;
    let chain = PairChain::new(*spec)?;
    let deflate = orthonormalize(&chain.unit_vectors());
    let mut start = random_start(chain.dim(), &deflate, config.seed);
    if let Some(g) = guess {
        if g.len() != chain.dim() {
            return Err(GapError::DimensionMismatch {
                expected: chain.dim(),
                got: g.len(),
            });
        }
        let ng = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if ng > 0.0 {
            start.iter_mut().zip(g).for_each(|(s, x)| *s = 1e-3 * *s + x / ng);
        }
    }
    let kcfg = KrylovConfig {
        tol: config.tolerance,
        relative: config.relative,
        max_matvecs: config.max_iterations,
        depth: config.krylov_depth,
        keep: (config.krylov_depth / 4).max(1),
    };
    let pair = largest_eigenpair(&ChainOp(&chain), &deflate, start, &kcfg);
    if !pair.converged {
        return Err(GapError::NoConvergence {
            estimate: pair.value,
            residual: pair.residual,
        });
    }
    Ok(GapResult {
        spec: *spec,
        lambda: pair.value,
        method: Method::Iterative,
        residual: pair.residual,
        iterations: pair.matvecs,
        converged: true,
        unit_eigenvalues: None,
        degeneracy: None,
        eigvec: config.keep_eigvec.then_some(pair.vector),
    })
}

/// Eigenvalue moduli of the full dense layer, largest first.
///
/// `Λ` is similar to `L₁' L₂'` with both factors symmetric projectors, so its nonzero
/// spectrum is that of `L₁' L₂' L₁'`. Zeros are padded back to the full dimension.
pub fn full_spectrum(spec: &CircuitSpec, cap: usize) -> Result<Vec<f64>> {
    let op = LayerOperator::new(*spec)?.symmetrize()?;
    let (l1, l2) = op.half_layer_factors(cap)?;
    let sym = &l1 * &l2 * &l1;
    let sym = (&sym + sym.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().map(|x| x.abs()).collect();
    ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(ev)
}

/// Spectral radius of a general square matrix.
///
/// Uses a Schur decomposition with an iteration cap. If that fails to converge
/// (defective matrices can stall it), falls back to `‖B^{2^k}‖₂^{2^{-k}}` with `k = 8`,
/// which is an upper bound.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 0.0;
    }
    if let Some(schur) = nalgebra::Schur::try_new(m.clone(), f64::EPSILON, 200 * n) {
        return schur.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
    }
    let mut p = m.clone();
    let mut log_scale = 0.0;
    for _ in 0..8 {
        p = &p * &p;
        let s = p.amax();
        if s == 0.0 {
            return 0.0;
        }
        p /= s;
        log_scale = 2.0 * log_scale + s.ln();
    }
    // ‖B^{256}‖ = exp(log_scale) · ‖p‖ with the scales compounded through squaring
    let k = 256.0;
    ((log_scale + p.singular_values().max().ln()) / k).exp()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecayReport {
    /// `(L, ‖Λ'^L - P‖₂)`.
    pub norms: Vec<(usize, f64)>,
    /// Geometric rate fitted over the second half of the sequence.
    pub rate: f64,
}

/// Spectral norms of `Λ'^L - P` for `L = 1..=l_max` on the symmetrized dense layer.
pub fn decay_check(spec: &CircuitSpec, l_max: usize, cap: usize) -> Result<DecayReport> {
    if l_max < 2 {
        return Err(GapError::InvalidParameter("need at least two layers".into()));
    }
    let op = LayerOperator::new(*spec)?.symmetrize()?;
    let lam = op.build_dense(cap)?;
    let n = lam.nrows();
    let units = orthonormalize(&op.unit_eigenvectors()?);
    let mut p = DMatrix::zeros(n, n);
    for u in &units {
        let u = DVector::from_column_slice(u);
        p += &u * u.transpose();
    }
    // Λ'P = PΛ' = P, so Λ'^L - P = (Λ' - P)^L; powering the difference avoids cancelling
    // O(1) entries once λ^L nears rounding level
    let deflated = &lam - &p;
    let mut power = DMatrix::identity(n, n);
    let mut norms = Vec::with_capacity(l_max);
    for l in 1..=l_max {
        power = &deflated * power;
        norms.push((l, power.singular_values().max()));
    }
    let tail = &norms[l_max / 2..];
    let m = tail.len() as f64;
    let (sx, sy) = tail.iter().fold((0.0, 0.0), |(a, b), &(l, s)| (a + l as f64, b + s.ln()));
    let (mx, my) = (sx / m, sy / m);
    let (num, den) = tail.iter().fold((0.0, 0.0), |(a, b), &(l, s)| {
        let dx = l as f64 - mx;
        (a + dx * (s.ln() - my), b + dx * dx)
    });
    Ok(DecayReport {
        norms,
        rate: (num / den).exp(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::commutant::GroupKind;
    use crate::exact::formula_gap;
    use crate::layer::Boundary;

    fn spec(g: GroupKind, b: Boundary, n: u32) -> CircuitSpec {
        CircuitSpec::new(g, b, 2, 1, n).unwrap()
    }

    #[test]
    fn dense_matches_formula() {
        for b in [Boundary::Open, Boundary::Closed] {
            let s = spec(GroupKind::Unitary, b, 8);
            let r = dense_gap(&s, &SolverConfig::default()).unwrap();
            assert!((r.lambda - formula_gap(&s).unwrap()).abs() < 1e-12);
            assert_eq!(r.unit_eigenvalues, Some(2));
        }
    }

    #[test]
    fn open_unitary_gap_is_doubly_degenerate() {
        let r = dense_gap(&spec(GroupKind::Unitary, Boundary::Open, 10), &SolverConfig::default()).unwrap();
        assert_eq!(r.degeneracy, Some(2));
    }

    #[test]
    fn compressed_spectrum_matches_full_layer() {
        for g in GroupKind::ALL {
            for b in [Boundary::Open, Boundary::Closed] {
                let s = spec(g, b, 6);
                let full = full_spectrum(&s, DEFAULT_DENSE_CAP).unwrap();
                let gap_full = full.iter().copied().find(|x| *x < 1.0 - UNIT_TOL).unwrap();
                let r = dense_gap(&s, &SolverConfig::default()).unwrap();
                assert!((gap_full - r.lambda).abs() < 1e-9, "{g:?} {b:?}");
                let units = full.iter().filter(|x| (**x - 1.0).abs() < UNIT_TOL).count();
                assert_eq!(Some(units), r.unit_eigenvalues);
            }
        }
    }

    #[test]
    fn iterative_matches_dense() {
        for g in GroupKind::ALL {
            let s = spec(g, Boundary::Closed, 8);
            let d = dense_gap(&s, &SolverConfig::default()).unwrap();
            let i = iterative_gap(&s, &SolverConfig::default()).unwrap();
            assert!((d.lambda - i.lambda).abs() < 1e-9, "{g:?}");
        }
    }

    #[test]
    fn decay_first_step_contracts() {
        let r = decay_check(&spec(GroupKind::Unitary, Boundary::Open, 6), 4, DEFAULT_DENSE_CAP).unwrap();
        assert!(r.norms[0].1 < 1.0);
    }
}
