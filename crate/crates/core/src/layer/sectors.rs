use super::words::{is_aligned, rotate_pairs, switch_count, ReducedState};
use super::{Boundary, CircuitSpec, LayerOperator};
use crate::commutant::GroupKind;
use crate::error::{GapError, Result};
use crate::io::MatrixJson;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Aligned words with exactly `zeta` switches, sorted lexicographically (`i < s`).
///
/// For closed chains each translation orbit is represented by its smallest word.
pub fn enumerate_sector(spec: &CircuitSpec, zeta: usize) -> Result<Vec<ReducedState>> {
    if spec.group != GroupKind::Unitary {
        return Err(GapError::InvalidSpec("switch sectors are defined for unitary circuits".into()));
    }
    spec.validate()?;
    let pairs = spec.eta() / 2;
    if pairs > 24 {
        return Err(GapError::DimensionCap {
            entries: 1 << pairs.min(62),
            cap: 1 << 24,
        });
    }
    let mut out = Vec::new();
    for bits in 0..(1usize << pairs) {
        let word = aligned_word(bits, pairs);
        if switch_count(&word, spec.boundary) != zeta {
            continue;
        }
        if spec.boundary == Boundary::Closed && orbit(&word).iter().any(|w| *w < word) {
            continue;
        }
        out.push(ReducedState::new(word));
    }
    out.sort();
    Ok(out)
}

fn aligned_word(bits: usize, pairs: usize) -> Vec<u8> {
    (0..2 * pairs)
        .map(|k| ((bits >> (pairs - 1 - k / 2)) & 1) as u8)
        .collect()
}

fn orbit(word: &[u8]) -> Vec<Vec<u8>> {
    let mut out = Vec::with_capacity(word.len() / 2);
    let mut w = word.to_vec();
    for _ in 0..word.len() / 2 {
        out.push(w.clone());
        w = rotate_pairs(&w);
    }
    out
}

/// Block of the layer operator on one switch sector.
#[derive(Clone, Debug)]
pub struct BlockMatrix {
    pub zeta: usize,
    pub basis: Vec<ReducedState>,
    pub matrix: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct BlockMatrixJson {
    zeta: usize,
    basis: Vec<String>,
    matrix: Vec<Vec<String>>,
}

impl BlockMatrix {
    pub fn to_json(&self) -> serde_json::Value {
        let m = MatrixJson::from(&self.matrix);
        let rows = m.data.chunks(m.cols.max(1)).map(|r| r.to_vec()).collect();
        serde_json::to_value(BlockMatrixJson {
            zeta: self.zeta,
            basis: self.basis.iter().map(|b| b.to_string()).collect(),
            matrix: rows,
        })
        .expect("serializable")
    }
}

/// Restriction `B_ζ` of `Λ` to the `zeta`-switch sector (columns are inputs).
///
/// Closed chains use translation-summed orbit vectors. Any output weight on words with
/// more than `zeta` switches is reported as a [`GapError::SectorLeak`].
pub fn build_block_matrix(spec: &CircuitSpec, zeta: usize) -> Result<BlockMatrix> {
    let basis = enumerate_sector(spec, zeta)?;
    let op = LayerOperator::new(*spec)?;
    let dims = op.dims.clone();
    let pos: HashMap<usize, usize> = basis.iter().enumerate().map(|(k, b)| (b.index(&dims), k)).collect();
    let closed = spec.boundary == Boundary::Closed;
    let mut matrix = DMatrix::zeros(basis.len(), basis.len());
    for (col, b) in basis.iter().enumerate() {
        let mut input = HashMap::new();
        if closed {
            for w in orbit(&b.word) {
                *input.entry(ReducedState::new(w).index(&dims)).or_insert(0.0) += 1.0;
            }
        } else {
            input.insert(b.index(&dims), 1.0);
        }
        let out = op.apply_layer_sparse(&input);
        let mut leak = 0.0;
        for (&idx, &val) in &out {
            let w = ReducedState::from_index(idx, &dims);
            if w.switches(spec.boundary) > zeta {
                leak += val.abs();
            }
            if let Some(&row) = pos.get(&idx) {
                let stab = if closed {
                    orbit(&w.word).iter().filter(|o| **o == w.word).count()
                } else {
                    1
                };
                matrix[(row, col)] = val / stab as f64;
            }
        }
        if leak > 1e-12 {
            return Err(GapError::SectorLeak { zeta, weight: leak });
        }
        debug_assert!(out.keys().all(|&i| is_aligned(&ReducedState::from_index(i, &dims).word)));
    }
    Ok(BlockMatrix { zeta, basis, matrix })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(b: Boundary, n: u32) -> CircuitSpec {
        CircuitSpec::new(GroupKind::Unitary, b, 2, 1, n).unwrap()
    }

    #[test]
    fn sector_sizes() {
        assert_eq!(enumerate_sector(&spec(Boundary::Open, 8), 1).unwrap().len(), 6);
        assert_eq!(enumerate_sector(&spec(Boundary::Closed, 8), 2).unwrap().len(), 3);
        assert_eq!(enumerate_sector(&spec(Boundary::Closed, 8), 0).unwrap().len(), 2);
        assert!(enumerate_sector(&spec(Boundary::Closed, 8), 1).unwrap().is_empty());
    }

    #[test]
    fn closed_representatives_are_minimal() {
        let reps = enumerate_sector(&spec(Boundary::Closed, 8), 2).unwrap();
        let names: Vec<String> = reps.iter().map(|r| r.to_string()).collect();
        assert_eq!(names, vec!["iiiiiiss", "iiiissss", "iissssss"]);
    }

    #[test]
    fn zero_sector_block_is_identity() {
        let b = build_block_matrix(&spec(Boundary::Open, 6), 0).unwrap();
        assert_eq!(b.matrix, DMatrix::identity(2, 2));
    }

    #[test]
    fn non_unitary_rejected() {
        let s = CircuitSpec::new(GroupKind::Orthogonal, Boundary::Open, 2, 1, 6).unwrap();
        assert!(enumerate_sector(&s, 1).is_err());
    }
}
