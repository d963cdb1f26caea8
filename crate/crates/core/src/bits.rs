//! Packed bit buffer.
//!
//! Bit `i` lives in word `i / 64` at position `63 - i % 64`, so the
//! big-endian bytes of the words are exactly the MSB-first packed file
//! representation used for raw and extracted bit files.

use serde::{Deserialize, Serialize};

#[derive(Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bits {
    words: Vec<u64>,
    len: usize,
}

impl std::fmt::Debug for Bits {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Bits(len={})", self.len)
    }
}

impl Bits {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bits: usize) -> Self {
        Bits {
            words: Vec::with_capacity(bits.div_ceil(64)),
            len: 0,
        }
    }

    pub fn zeros(len: usize) -> Self {
        Bits {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_bools(bits: impl IntoIterator<Item = bool>) -> Self {
        let mut out = Bits::new();
        for b in bits {
            out.push(b);
        }
        out
    }

    /// Parses a string of `'0'`/`'1'` characters; other characters are skipped.
    pub fn from_ascii(s: &str) -> Self {
        Bits::from_bools(s.chars().filter_map(|c| match c {
            '0' => Some(false),
            '1' => Some(true),
            _ => None,
        }))
    }

    /// MSB-first unpacking of `bytes`.
    pub fn from_bytes(bytes: &[u8]) -> Self {
        let mut words = Vec::with_capacity(bytes.len().div_ceil(8));
        for chunk in bytes.chunks(8) {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            words.push(u64::from_be_bytes(buf));
        }
        Bits {
            words,
            len: bytes.len() * 8,
        }
    }

    /// MSB-first packing; a trailing partial byte is zero padded.
    pub fn to_bytes(&self) -> Vec<u8> {
        let nbytes = self.len.div_ceil(8);
        let mut out = Vec::with_capacity(nbytes + 8);
        for w in &self.words {
            out.extend_from_slice(&w.to_be_bytes());
        }
        out.truncate(nbytes);
        out
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
        (self.words[i >> 6] >> (63 - (i & 63))) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (63 - (i & 63));
        if value {
            self.words[i >> 6] |= mask;
        } else {
            self.words[i >> 6] &= !mask;
        }
    }

    #[inline]
    pub fn push(&mut self, value: bool) {
        if self.len & 63 == 0 {
            self.words.push(0);
        }
        if value {
            self.words[self.len >> 6] |= 1u64 << (63 - (self.len & 63));
        }
        self.len += 1;
    }

    pub fn extend_from(&mut self, other: &Bits) {
        if self.len & 63 == 0 {
            self.words.truncate(self.len >> 6);
            self.words.extend_from_slice(&other.words);
            self.len += other.len;
        } else {
            for i in 0..other.len {
                self.push(other.get(i));
            }
        }
    }

    /// Copy of bits `start..start + len`.
    pub fn slice(&self, start: usize, len: usize) -> Bits {
        assert!(start + len <= self.len, "slice out of range");
        let mut out = Bits::zeros(len);
        let shift = start & 63;
        let base = start >> 6;
        for k in 0..out.words.len() {
            let hi = self.words.get(base + k).copied().unwrap_or(0);
            let w = if shift == 0 {
                hi
            } else {
                let lo = self.words.get(base + k + 1).copied().unwrap_or(0);
                (hi << shift) | (lo >> (64 - shift))
            };
            out.words[k] = w;
        }
        out.clear_tail();
        out
    }

    /// Takes MSB-first words; bits past `len` are cleared.
    pub fn from_words(mut words: Vec<u64>, len: usize) -> Self {
        words.resize(len.div_ceil(64), 0);
        let mut out = Bits { words, len };
        out.clear_tail();
        out
    }

    /// Backing words; bits past `len` are always zero.
    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn reversed(&self) -> Bits {
        Bits::from_bools((0..self.len).rev().map(|i| self.get(i)))
    }

    pub fn xor(&self, other: &Bits) -> Bits {
        assert_eq!(self.len, other.len);
        Bits {
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a ^ b)
                .collect(),
            len: self.len,
        }
    }

    /// Random bits drawn from any `RngCore`.
    pub fn random(len: usize, rng: &mut impl rand::RngCore) -> Bits {
        let mut out = Bits {
            words: (0..len.div_ceil(64)).map(|_| rng.next_u64()).collect(),
            len,
        };
        out.clear_tail();
        out
    }

    fn clear_tail(&mut self) {
        let rem = self.len & 63;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= !0u64 << (64 - rem);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn msb_first_packing() {
        let b = Bits::from_ascii("10000000 01");
        assert_eq!(b.len(), 10);
        assert_eq!(b.to_bytes(), vec![0x80, 0x40]);
        assert_eq!(Bits::from_bytes(&[0xA5]), Bits::from_ascii("10100101"));
    }

    proptest! {
        #[test]
        fn bytes_roundtrip(bytes in proptest::collection::vec(any::<u8>(), 0..64)) {
            let b = Bits::from_bytes(&bytes);
            prop_assert_eq!(b.to_bytes(), bytes);
        }

        #[test]
        fn slice_matches_get(bools in proptest::collection::vec(any::<bool>(), 1..300), a in 0usize..300, l in 0usize..300) {
            let b = Bits::from_bools(bools.iter().copied());
            let start = a % b.len();
            let len = l % (b.len() - start + 1);
            let s = b.slice(start, len);
            prop_assert_eq!(s.len(), len);
            for i in 0..len {
                prop_assert_eq!(s.get(i), bools[start + i]);
            }
        }
    }

    #[test]
    fn extend_unaligned() {
        let mut a = Bits::from_ascii("101");
        a.extend_from(&Bits::from_ascii("0011"));
        assert_eq!(a, Bits::from_ascii("1010011"));
    }
}
