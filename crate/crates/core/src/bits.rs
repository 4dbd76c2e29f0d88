//! Packed bit sequences used for Pauli frames and syndromes.

use std::fmt;
use std::ops::{BitXor, BitXorAssign};

/// A fixed-length sequence of bits packed into 64-bit words.
///
/// Bits past `len` in the last word are always zero, so word-wise
/// comparisons and popcounts are exact.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitPlane {
    words: Vec<u64>,
    len: usize,
}

impl BitPlane {
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut plane = Self {
            words: vec![u64::MAX; len.div_ceil(64)],
            len,
        };
        plane.clear_tail();
        plane
    }

    pub fn from_indices(len: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut plane = Self::zeros(len);
        for i in indices {
            plane.flip(i);
        }
        plane
    }

    /// Builds a plane from one byte per bit (nonzero = set).
    pub fn from_bytes(bytes: &[u8]) -> Self {
        Self::from_indices(
            bytes.len(),
            bytes.iter().enumerate().filter(|(_, b)| **b != 0).map(|(i, _)| i),
        )
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        (0..self.len).map(|i| self.get(i) as u8).collect()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i >> 6] >> (i & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i & 63);
        if value {
            self.words[i >> 6] |= mask;
        } else {
            self.words[i >> 6] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i >> 6] ^= 1u64 << (i & 63);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn clear(&mut self) {
        self.words.iter_mut().for_each(|w| *w = 0);
    }

    /// Number of positions set in either plane.
    pub fn count_union(&self, other: &Self) -> usize {
        debug_assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a | b).count_ones() as usize)
            .sum()
    }

    /// Indices of set bits in ascending order.
    pub fn iter_ones(&self) -> Ones<'_> {
        Ones {
            words: &self.words,
            word_index: 0,
            current: self.words.first().copied().unwrap_or(0),
        }
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    fn clear_tail(&mut self) {
        let rem = self.len & 63;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

impl BitXorAssign<&BitPlane> for BitPlane {
    fn bitxor_assign(&mut self, rhs: &BitPlane) {
        assert_eq!(self.len, rhs.len, "bit plane length mismatch");
        for (a, b) in self.words.iter_mut().zip(&rhs.words) {
            *a ^= b;
        }
    }
}

impl BitXor for &BitPlane {
    type Output = BitPlane;

    fn bitxor(self, rhs: &BitPlane) -> BitPlane {
        let mut out = self.clone();
        out ^= rhs;
        out
    }
}

impl fmt::Debug for BitPlane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitPlane[{}](", self.len)?;
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        f.write_str(")")
    }
}

pub struct Ones<'a> {
    words: &'a [u64],
    word_index: usize,
    current: u64,
}

impl Iterator for Ones<'_> {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        loop {
            if self.current != 0 {
                let bit = self.current.trailing_zeros() as usize;
                self.current &= self.current - 1;
                return Some(self.word_index * 64 + bit);
            }
            self.word_index += 1;
            if self.word_index >= self.words.len() {
                return None;
            }
            self.current = self.words[self.word_index];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ones_respects_length() {
        let p = BitPlane::ones(70);
        assert_eq!(p.count_ones(), 70);
        assert_eq!(p.iter_ones().count(), 70);
    }

    #[test]
    fn iter_ones_ascending() {
        let p = BitPlane::from_indices(200, [199, 3, 64, 0, 128]);
        assert_eq!(p.iter_ones().collect::<Vec<_>>(), vec![0, 3, 64, 128, 199]);
    }

    #[test]
    fn xor_and_union() {
        let a = BitPlane::from_indices(10, [1, 2, 3]);
        let b = BitPlane::from_indices(10, [3, 4]);
        assert_eq!((&a ^ &b).iter_ones().collect::<Vec<_>>(), vec![1, 2, 4]);
        assert_eq!(a.count_union(&b), 4);
    }

    #[test]
    fn byte_round_trip() {
        let p = BitPlane::from_indices(13, [0, 5, 12]);
        assert_eq!(BitPlane::from_bytes(&p.to_bytes()), p);
    }
}
