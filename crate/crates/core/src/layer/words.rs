use super::Boundary;
use serde::{Deserialize, Serialize};
use std::fmt;

/// A word of site labels (`0 = i`, `1 = s`, `2 = t`).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ReducedState {
    pub word: Vec<u8>,
}

impl ReducedState {
    pub fn new(word: Vec<u8>) -> Self {
        Self { word }
    }

    /// Big-endian index for per-site alphabet sizes `dims`.
    pub fn index(&self, dims: &[usize]) -> usize {
        self.word.iter().zip(dims).fold(0, |acc, (&l, &d)| acc * d + l as usize)
    }

    pub fn from_index(mut idx: usize, dims: &[usize]) -> Self {
        let mut word = vec![0u8; dims.len()];
        for k in (0..dims.len()).rev() {
            word[k] = (idx % dims[k]) as u8;
            idx /= dims[k];
        }
        Self { word }
    }

    pub fn switches(&self, boundary: Boundary) -> usize {
        switch_count(&self.word, boundary)
    }
}

impl fmt::Display for ReducedState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &l in &self.word {
            let c = match l {
                0 => 'i',
                1 => 's',
                2 => 't',
                _ => '?',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Number of adjacent unequal labels, counting the wraparound pair for closed chains.
pub fn switch_count(word: &[u8], boundary: Boundary) -> usize {
    let mut z = word.windows(2).filter(|w| w[0] != w[1]).count();
    if boundary == Boundary::Closed && word.len() > 1 && word[0] != word[word.len() - 1] {
        z += 1;
    }
    z
}

/// True when every odd bond `(2j, 2j+1)` carries equal labels.
pub fn is_aligned(word: &[u8]) -> bool {
    word.chunks(2).all(|p| p.len() == 2 && p[0] == p[1])
}

/// Translation by one pair of sites: `α₁…α_η ↦ α_{η-1} α_η α₁ … α_{η-2}`.
pub fn rotate_pairs(word: &[u8]) -> Vec<u8> {
    let n = word.len();
    (0..n).map(|k| word[(k + n - 2) % n]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn switches() {
        assert_eq!(switch_count(&[0, 0, 1, 1], Boundary::Open), 1);
        assert_eq!(switch_count(&[0, 0, 1, 1], Boundary::Closed), 2);
        assert_eq!(switch_count(&[0, 1, 0, 1], Boundary::Open), 3);
    }

    #[test]
    fn rotation() {
        assert_eq!(rotate_pairs(&[0, 1, 2, 3, 4, 5]), vec![4, 5, 0, 1, 2, 3]);
    }

    #[test]
    fn index_round_trip() {
        let dims = [2, 3, 3, 2];
        for i in 0..36 {
            assert_eq!(ReducedState::from_index(i, &dims).index(&dims), i);
        }
        assert_eq!(ReducedState::new(vec![0, 0, 1, 1]).to_string(), "iiss");
    }
}
