//! Closed-form gaps, switch-sector blocks and design-depth bounds for unitary circuits.

use crate::commutant::local_dim;
use crate::error::{GapError, Result};
use crate::layer::{Boundary, CircuitSpec, DEFAULT_DENSE_CAP};
use crate::numeric::full_spectrum;
use crate::rational::{ri, RationalMatrix};
use crate::GroupKind;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Gate coupling `c = d^m / (d^{2m} + 1)`.
pub fn coupling(d: u64, m: u32) -> f64 {
    let q = (d as f64).powi(m as i32);
    q / (q * q + 1.0)
}

pub fn coupling_exact(d: u64, m: u32) -> Result<BigRational> {
    let q = local_dim(d, m)? as i64;
    Ok(BigRational::new(q.into(), (q * q + 1).into()))
}

fn sites(m: u32, n: u32) -> Result<usize> {
    if m == 0 || !n.is_multiple_of(m) {
        return Err(GapError::InvalidSpec(format!("m={m} must divide n={n}")));
    }
    let eta = (n / m) as usize;
    if eta < 4 || !eta.is_multiple_of(2) {
        return Err(GapError::InvalidSpec(format!("η = {eta} must be even and at least 4")));
    }
    Ok(eta)
}

/// Open-chain gap for `η` sites.
pub fn open_gap(d: u64, m: u32, eta: usize) -> f64 {
    let c = coupling(d, m);
    c * c * (2.0 + 2.0 * (2.0 * PI / eta as f64).cos())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GapFormulaResult {
    pub lambda: f64,
    pub boundary: Boundary,
    pub d: u64,
    pub m: u32,
    pub n: u32,
    /// `(k, coefficient)` on the words with `k` leading `i` labels, `k = 2, 4, …, η-2`.
    pub eigenvector: Vec<(usize, f64)>,
    pub degeneracy: usize,
}

pub fn exact_gap(d: u64, m: u32, n: u32, boundary: Boundary) -> Result<GapFormulaResult> {
    local_dim(d, m)?;
    let eta = sites(m, n)?;
    let open = open_gap(d, m, eta);
    let lambda = match boundary {
        Boundary::Open => open,
        Boundary::Closed => open * open,
    };
    let eigenvector = (1..eta / 2).map(|j| (2 * j, (2.0 * j as f64 * PI / eta as f64).sin())).collect();
    Ok(GapFormulaResult {
        lambda,
        boundary,
        d,
        m,
        n,
        eigenvector,
        degeneracy: if boundary == Boundary::Open { 2 } else { 1 },
    })
}

/// Formula value for a unitary circuit spec.
pub fn formula_gap(spec: &CircuitSpec) -> Result<f64> {
    if spec.group != GroupKind::Unitary {
        return Err(GapError::InvalidSpec("closed-form gap is known only for unitary circuits".into()));
    }
    Ok(exact_gap(spec.d, spec.m, spec.n, spec.boundary)?.lambda)
}

fn block_size(eta: usize) -> Result<usize> {
    if eta < 4 || !eta.is_multiple_of(2) {
        return Err(GapError::InvalidSize(format!("η = {eta} must be even and at least 4")));
    }
    Ok((eta - 2) / 2)
}

/// One-switch block `c² · tridiag(1, 2, 1)` of size `(η-2)/2`.
pub fn b1_matrix(d: u64, m: u32, eta: usize) -> Result<RationalMatrix> {
    let n = block_size(eta)?;
    let c = coupling_exact(d, m)?;
    let c2 = &c * &c;
    Ok(RationalMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
        0 => &c2 * ri(2),
        1 => c2.clone(),
        _ => ri(0),
    }))
}

/// Two-switch block of a closed chain: `c⁴` times the `(1, 4, 6, 4, 1)` stencil with
/// reflected corners.
pub fn b2_matrix(d: u64, m: u32, eta: usize) -> Result<RationalMatrix> {
    let n = block_size(eta)?;
    let c = coupling_exact(d, m)?;
    let c4 = &c * &c * &c * &c;
    Ok(RationalMatrix::from_fn(n, n, |i, j| {
        let base = match i.abs_diff(j) {
            0 => 6 - (i == 0) as i64 - (i == n - 1) as i64,
            1 => 4,
            2 => 1,
            _ => 0,
        };
        &c4 * ri(base)
    }))
}

/// Eigenpairs of the symmetric tridiagonal Toeplitz matrix, ordered by `j = 1..N`.
pub fn toeplitz_eigenpairs(n: usize, a: f64, b: f64) -> Vec<(f64, Vec<f64>)> {
    (1..=n)
        .map(|j| {
            let theta = j as f64 * PI / (n + 1) as f64;
            let v = (1..=n).map(|k| (k as f64 * theta).sin()).collect();
            (a + 2.0 * b * theta.cos(), v)
        })
        .collect()
}

/// Row-sum bound on the eigenvalues of the `ζ`-switch block.
pub fn zeta_bound(zeta: u32, d: u64, m: u32) -> f64 {
    (2.0 * coupling(d, m)).powf(2f64.powi(zeta as i32))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DominanceReport {
    pub holds: bool,
    pub excluded_zeta: u32,
    pub bound: f64,
    pub gap: f64,
    /// Largest non-unit eigenvalue from dense diagonalization, when the bound alone fails.
    pub dense_check: Option<f64>,
}

/// Checks that the lowest excluded sector's bound does not exceed the formula gap,
/// falling back to dense diagonalization when it does.
pub fn dominance_check(d: u64, m: u32, eta: usize, boundary: Boundary) -> Result<DominanceReport> {
    let n = (eta as u32)
        .checked_mul(m)
        .ok_or_else(|| GapError::InvalidSpec("n overflows".into()))?;
    let gap = exact_gap(d, m, n, boundary)?.lambda;
    let excluded_zeta = if boundary == Boundary::Open { 2 } else { 4 };
    let bound = zeta_bound(excluded_zeta, d, m);
    if bound <= gap {
        return Ok(DominanceReport {
            holds: true,
            excluded_zeta,
            bound,
            gap,
            dense_check: None,
        });
    }
    let spec = CircuitSpec::new(GroupKind::Unitary, boundary, d, m, n)?;
    let top = full_spectrum(&spec, DEFAULT_DENSE_CAP)?
        .into_iter()
        .find(|x| (x - 1.0).abs() > 1e-8)
        .unwrap_or(0.0);
    Ok(DominanceReport {
        holds: (top - gap).abs() < 1e-10,
        excluded_zeta,
        bound,
        gap,
        dense_check: Some(top),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DepthBound {
    pub l_min: u64,
    /// Real-valued right-hand side before the ceiling.
    pub bound: f64,
    pub epsilon: f64,
    /// Asymptotic rate constant `C` (large-n limit of `-ln λ`).
    pub constant: f64,
    /// Large-n coefficient of `n` in the bound.
    pub coefficient: f64,
    pub comparison: Option<f64>,
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(GapError::InvalidEpsilon(eps));
    }
    Ok(())
}

/// Smallest depth with `λ^L ≤ ε d^{-n}`.
pub fn design_depth(d: u64, m: u32, n: u32, boundary: Boundary, epsilon: f64) -> Result<DepthBound> {
    check_eps(epsilon)?;
    // closed form only, so q itself just has to exist
    if d < 2 || m < 1 || d.checked_pow(m).is_none() {
        return Err(GapError::InvalidDimension(format!("need d ≥ 2, m ≥ 1 and d^m in range, got d={d}, m={m}")));
    }
    let eta = sites(m, n)?;
    let q = (d as f64).powi(m as i32);
    let open_rate = 2.0 * ((q * q + 1.0) / q).ln() - (2.0 + 2.0 * (2.0 * PI / eta as f64).cos()).ln();
    let mult = if boundary == Boundary::Open { 1.0 } else { 2.0 };
    let rate = mult * open_rate;
    let bound = (n as f64 * (d as f64).ln() + (1.0 / epsilon).ln()) / rate;
    let constant = 2.0 * mult * ((q * q + 1.0) / (2.0 * q)).ln();
    Ok(DepthBound {
        l_min: (bound.ceil() as u64).max(1),
        bound,
        epsilon,
        constant,
        coefficient: (d as f64).ln() / constant,
        comparison: Some(hunter_jones_depth(n, d, epsilon)?.bound),
    })
}

/// Earlier bound `(2n ln d + ln n + ln 1/ε) / ln((d²+1)/(2d))` for single-qudit sites.
pub fn hunter_jones_depth(n: u32, d: u64, epsilon: f64) -> Result<DepthBound> {
    check_eps(epsilon)?;
    if d < 2 || n < 1 {
        return Err(GapError::InvalidDimension(format!("need d ≥ 2 and n ≥ 1, got d={d}, n={n}")));
    }
    let df = d as f64;
    let constant = ((df * df + 1.0) / (2.0 * df)).ln();
    let bound = (2.0 * n as f64 * df.ln() + (n as f64).ln() + (1.0 / epsilon).ln()) / constant;
    Ok(DepthBound {
        l_min: (bound.ceil() as u64).max(1),
        bound,
        epsilon,
        constant,
        coefficient: 2.0 * df.ln() / constant,
        comparison: None,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GateCountComparison {
    pub n: u64,
    pub m_log: u32,
    pub n_m1: f64,
    pub n_mlog: f64,
    pub ratio: f64,
}

/// Divisor of `n` nearest to `log₂ n` that leaves an even number of at least four sites.
pub fn log_grouping(n: u64) -> Result<u32> {
    let target = (n as f64).log2();
    (1..=n / 4)
        .filter(|m| n.is_multiple_of(*m) && (n / m).is_multiple_of(2))
        .min_by(|a, b| {
            let da = (*a as f64 - target).abs();
            let db = (*b as f64 - target).abs();
            da.partial_cmp(&db).unwrap().then(a.cmp(b))
        })
        .map(|m| m as u32)
        .ok_or(GapError::NoValidGrouping(n))
}

/// Total gate cost `L_min · (η - 1 + Δ) · m^p` for qubit circuits, single-qubit sites versus
/// `m ≈ log₂ n` sites.
pub fn gate_count_compare(n: u64, epsilon: f64, cost_exponent: u32, boundary: Boundary) -> Result<GateCountComparison> {
    check_eps(epsilon)?;
    if n < 16 {
        return Err(GapError::InvalidParameter(format!("n must be at least 16, got {n}")));
    }
    let m_log = log_grouping(n)?;
    let delta = if boundary == Boundary::Open { 0.0 } else { 1.0 };
    let count = |m: u32| -> Result<f64> {
        let nn = u32::try_from(n).map_err(|_| GapError::InvalidParameter("n too large".into()))?;
        let l = design_depth(2, m, nn, boundary, epsilon)?.l_min as f64;
        let eta = (n / m as u64) as f64;
        Ok(l * (eta - 1.0 + delta) * (m as f64).powi(cost_exponent as i32))
    };
    let n_m1 = count(1)?;
    let n_mlog = count(m_log)?;
    Ok(GateCountComparison {
        n,
        m_log,
        n_m1,
        n_mlog,
        ratio: n_m1 / n_mlog,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let open = exact_gap(2, 1, 8, Boundary::Open).unwrap().lambda;
        assert!((open - 0.16 * (2.0 + 2f64.sqrt())).abs() < 1e-15);
        let closed = exact_gap(2, 1, 8, Boundary::Closed).unwrap().lambda;
        assert!((closed - open * open).abs() < 1e-16);
        assert!(exact_gap(2, 1, 6, Boundary::Open).unwrap().lambda < 0.64);
        assert!(exact_gap(2, 2, 6, Boundary::Open).is_err());
    }

    #[test]
    fn b1_example() {
        let b = b1_matrix(2, 1, 8).unwrap().to_f64();
        assert_eq!(b.nrows(), 3);
        assert!((b[(0, 0)] - 8.0 / 25.0).abs() < 1e-16);
        assert!((b[(0, 1)] - 4.0 / 25.0).abs() < 1e-16);
    }

    #[test]
    fn b2_is_b1_squared() {
        for eta in [4, 6, 8, 12, 20] {
            let b1 = b1_matrix(3, 2, eta).unwrap();
            assert_eq!(b1.mul(&b1), b2_matrix(3, 2, eta).unwrap());
        }
        let b2 = b2_matrix(2, 1, 12).unwrap();
        assert_eq!(b2[(0, 0)], ri(5) * BigRational::new(16.into(), 625.into()));
    }

    #[test]
    fn toeplitz_small() {
        let p = toeplitz_eigenpairs(3, 2.0, 1.0);
        assert!((p[0].0 - (2.0 + 2f64.sqrt())).abs() < 1e-14);
        assert!((toeplitz_eigenpairs(1, 0.7, 3.0)[0].0 - 0.7).abs() < 1e-14);
    }

    #[test]
    fn zeta_bounds() {
        assert!((zeta_bound(1, 2, 1) - 0.64).abs() < 1e-15);
        assert!((zeta_bound(2, 2, 1) - 0.4096).abs() < 1e-15);
        assert!(zeta_bound(1, 1 << 20, 1) < 1e-11);
    }

    #[test]
    fn dominance() {
        assert!(dominance_check(2, 1, 6, Boundary::Open).unwrap().holds);
        let r = dominance_check(2, 2, 4, Boundary::Open).unwrap();
        assert!(r.holds && r.dense_check.is_none());
        let r = dominance_check(2, 1, 4, Boundary::Open).unwrap();
        assert!(r.holds && r.dense_check.is_some());
    }

    #[test]
    fn depth_example() {
        let b = design_depth(2, 1, 100, Boundary::Open, 0.01).unwrap();
        let expected = (100.0 * 2f64.ln() + 100f64.ln())
            / (2.0 * 2.5f64.ln() - (2.0 + 2.0 * (2.0 * PI / 100.0).cos()).ln());
        assert_eq!(b.l_min, expected.ceil() as u64);
        assert!(design_depth(2, 1, 100, Boundary::Open, 2.0).is_err());
    }

    #[test]
    fn grouping() {
        assert_eq!(log_grouping(1 << 20).unwrap(), 16);
        assert_eq!(log_grouping(64).unwrap(), 4);
    }
}
