//! Exhaustive structural checks of the unitary layer operator on small chains.

use crate::commutant::GroupKind;
use crate::error::{GapError, Result};
use crate::exact::{b1_matrix, b2_matrix, coupling, zeta_bound};
use crate::layer::{build_block_matrix, enumerate_sector, is_aligned, switch_count};
use crate::layer::{Boundary, CircuitSpec, LayerOperator, ReducedState};
use crate::numeric::spectral_radius;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};

/// Words above this length are not enumerated exhaustively.
pub const EXHAUSTIVE_MAX_ETA: usize = 12;

fn unitary_layer(spec: &CircuitSpec) -> Result<LayerOperator> {
    if spec.group != GroupKind::Unitary {
        return Err(GapError::InvalidSpec("structural checks need a unitary circuit".into()));
    }
    if spec.eta() > EXHAUSTIVE_MAX_ETA {
        return Err(GapError::InvalidSize(format!("η = {} exceeds {EXHAUSTIVE_MAX_ETA}", spec.eta())));
    }
    LayerOperator::new(*spec)
}

fn image(op: &LayerOperator, idx: usize) -> HashMap<usize, f64> {
    op.apply_layer_sparse(&HashMap::from([(idx, 1.0)]))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SupportReport {
    pub words: usize,
    /// Largest output weight found outside the allowed words.
    pub max_violation: f64,
}

impl SupportReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.max_violation <= tol
    }
}

/// Every column of `Λ` is supported on words made of even-length blocks.
///
/// Since an eigenvector with nonzero eigenvalue lies in the range of `Λ`, this implies the
/// even-block support of those eigenvectors.
pub fn even_block_support(spec: &CircuitSpec) -> Result<SupportReport> {
    let op = unitary_layer(spec)?;
    let mut worst = 0.0f64;
    for idx in 0..op.dim() {
        for (&o, &v) in &image(&op, idx) {
            if !is_aligned(&ReducedState::from_index(o, &op.dims).word) {
                worst = worst.max(v.abs());
            }
        }
    }
    Ok(SupportReport {
        words: op.dim(),
        max_violation: worst,
    })
}

/// No basis word is mapped onto words with more switches.
pub fn switch_monotonicity(spec: &CircuitSpec) -> Result<SupportReport> {
    let op = unitary_layer(spec)?;
    let mut worst = 0.0f64;
    for idx in 0..op.dim() {
        let z = ReducedState::from_index(idx, &op.dims).switches(spec.boundary);
        for (&o, &v) in &image(&op, idx) {
            if ReducedState::from_index(o, &op.dims).switches(spec.boundary) > z {
                worst = worst.max(v.abs());
            }
        }
    }
    Ok(SupportReport {
        words: op.dim(),
        max_violation: worst,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SectorBound {
    pub zeta: usize,
    pub size: usize,
    /// Largest eigenvalue modulus of the block.
    pub spectral_radius: f64,
    pub bound: f64,
}

/// Spectral radius of every nonempty block `B_ζ`, `ζ ≥ 1`, against its row-sum bound.
pub fn sector_bounds(spec: &CircuitSpec) -> Result<Vec<SectorBound>> {
    unitary_layer(spec)?;
    let mut out = Vec::new();
    for zeta in 1..spec.eta() {
        let basis = enumerate_sector(spec, zeta)?;
        if basis.is_empty() {
            continue;
        }
        let block = build_block_matrix(spec, zeta)?;
        let radius = spectral_radius(&block.matrix);
        out.push(SectorBound {
            zeta,
            size: basis.len(),
            spectral_radius: radius,
            bound: zeta_bound(zeta as u32, spec.d, spec.m),
        });
    }
    Ok(out)
}

/// `B₂ = B₁²` in exact arithmetic.
pub fn b2_is_b1_squared(d: u64, m: u32, eta: usize) -> Result<bool> {
    let b1 = b1_matrix(d, m, eta)?;
    Ok(b1.mul(&b1) == b2_matrix(d, m, eta)?)
}

/// `i^k s^{η-k}` as a word.
pub fn domain_wall(eta: usize, k: usize) -> Vec<u8> {
    (0..eta).map(|x| u8::from(x >= k)).collect()
}

/// `Λ` applied to `i^k s^{η-k}`, grouped by the number of leading `i` labels of the
/// one-wall outputs, in units of `c²`. Only valid for open chains.
pub fn one_switch_action(spec: &CircuitSpec, k: usize) -> Result<BTreeMap<usize, f64>> {
    let op = unitary_layer(spec)?;
    if spec.boundary != Boundary::Open {
        return Err(GapError::InvalidSpec("one-switch action is defined for open chains".into()));
    }
    let eta = spec.eta();
    let idx = ReducedState::new(domain_wall(eta, k)).index(&op.dims);
    let c2 = coupling(spec.d, spec.m).powi(2);
    let mut out = BTreeMap::new();
    for (o, v) in image(&op, idx) {
        let w = ReducedState::from_index(o, &op.dims).word;
        if switch_count(&w, Boundary::Open) != 1 || w[0] != 0 {
            continue;
        }
        let lead = w.iter().take_while(|&&x| x == 0).count();
        *out.entry(lead).or_insert(0.0) += v / c2;
    }
    Ok(out)
}

/// `Λ` applied to `i^k s^{η-k}` on a closed chain, with outputs summed over translation
/// orbits and keyed by the number of `i` labels, in units of `c⁴`.
///
/// With orbit vectors `Σ_p σ^p w` this is the expansion of `Λ|k⟩'` in `{|k'⟩'}`.
pub fn two_switch_action(spec: &CircuitSpec, k: usize) -> Result<BTreeMap<usize, f64>> {
    let op = unitary_layer(spec)?;
    if spec.boundary != Boundary::Closed {
        return Err(GapError::InvalidSpec("two-switch action is defined for closed chains".into()));
    }
    let eta = spec.eta();
    let word = domain_wall(eta, k);
    let idx = ReducedState::new(word).index(&op.dims);
    let c4 = coupling(spec.d, spec.m).powi(4);
    let mut out = BTreeMap::new();
    for (o, v) in image(&op, idx) {
        let w = ReducedState::from_index(o, &op.dims).word;
        let count = w.iter().filter(|&&x| x == 0).count();
        *out.entry(count).or_insert(0.0) += v / c4;
    }
    Ok(out)
}
