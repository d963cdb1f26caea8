//! Toeplitz universal-hash extractor.
//!
//! The `m × n` matrix is `T[i][j] = s[i - j + n - 1]` for a seed
//! `s_0 … s_{n+m-2}`, and the output is `y = T x` over GF(2).
//!
//! Equivalently `y_i` is coefficient `n - 1 + i` of the carry-less product
//! `x(z) s(z)`. On x86-64 with CLMUL that product is formed directly from
//! 64×64-bit carry-less multiplies.
//!
//! Otherwise, with `r` the reversed seed, `r[k] = s[n + m - 2 - k]`, row `i` of `T` is
//! the contiguous window `r[m - 1 - i .. m - 1 - i + n]`. The fast path keeps
//! 64 pre-shifted copies of `r` so that every window starts on a word
//! boundary, and each output bit is the parity of a word-wise AND.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::Bits;
use crate::error::{Error, Result};
use crate::rng::StreamRng;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToeplitzSeed {
    n: usize,
    m: usize,
    seed: Bits,
}

impl ToeplitzSeed {
    pub fn new(n: usize, m: usize, seed: Bits) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("extractor input length must be positive"));
        }
        if m > n {
            return Err(Error::param(format!("output length {m} exceeds input length {n}")));
        }
        if m > 0 && seed.len() != n + m - 1 {
            return Err(Error::param(format!(
                "seed has {} bits, expected n + m - 1 = {}",
                seed.len(),
                n + m - 1
            )));
        }
        Ok(ToeplitzSeed { n, m, seed })
    }

    /// Seed bits drawn from a PRNG stream.
    pub fn random(n: usize, m: usize, rng: &mut StreamRng) -> Result<Self> {
        let len = if m == 0 { 0 } else { n + m - 1 };
        Self::new(n, m, Bits::random(len, rng))
    }

    /// Seed bits taken from the front of `bits` (e.g. a seed file).
    pub fn from_prefix(n: usize, m: usize, bits: &Bits) -> Result<Self> {
        let len = if m == 0 { 0 } else { n + m - 1 };
        if bits.len() < len {
            return Err(Error::InsufficientData(format!(
                "seed source has {} bits, need {len}",
                bits.len()
            )));
        }
        Self::new(n, m, bits.slice(0, len))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn bits(&self) -> &Bits {
        &self.seed
    }

    /// `T[i][j]`.
    pub fn entry(&self, i: usize, j: usize) -> bool {
        self.seed.get(i + self.n - 1 - j)
    }
}

/// Leftover-hash output length `floor(n f - 2 log2(1/ε))`, floored at zero.
pub fn output_length(n: usize, private_fraction: f64, epsilon_sec: f64) -> Result<usize> {
    if n == 0 {
        return Err(Error::param("input length must be positive"));
    }
    if !(private_fraction > 0.0 && private_fraction <= 1.0) {
        return Err(Error::param(format!("private fraction {private_fraction} outside (0, 1]")));
    }
    if !(epsilon_sec > 0.0 && epsilon_sec <= 1.0) {
        return Err(Error::param(format!("epsilon {epsilon_sec} outside (0, 1]")));
    }
    let m = (n as f64 * private_fraction - 2.0 * (1.0 / epsilon_sec).log2()).floor();
    Ok(if m > 0.0 { (m as usize).min(n) } else { 0 })
}

fn check_input(input: &Bits, seed: &ToeplitzSeed) -> Result<()> {
    if input.len() != seed.n {
        return Err(Error::param(format!(
            "input has {} bits, extractor expects {}",
            input.len(),
            seed.n
        )));
    }
    Ok(())
}

/// `T x`, bit-exact with [`extract_naive`].
pub fn extract(input: &Bits, seed: &ToeplitzSeed) -> Result<Bits> {
    check_input(input, seed)?;
    if seed.m == 0 {
        return Ok(Bits::new());
    }
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("pclmulqdq") {
        // SAFETY: the required CPU feature was detected at runtime.
        return Ok(unsafe { clmul::extract(input, seed) });
    }
    Ok(extract_windows(input, seed))
}

/// Portable path: one word-wise AND and parity per output bit.
pub(crate) fn extract_windows(input: &Bits, seed: &ToeplitzSeed) -> Bits {
    let m = seed.m;
    let r = seed.seed.reversed();
    let x = input.words();
    // shifted[k] holds r starting at bit k, so a window at offset o is
    // shifted[o % 64] starting at word o / 64.
    let shifted: Vec<Bits> = (0..64.min(m))
        .map(|k| {
            let len = r.len() - k;
            r.slice(k, len)
        })
        .collect();
    let row = |i: usize| -> bool {
        let off = m - 1 - i;
        let w = &shifted[off % 64].words()[off / 64..];
        let mut acc = 0u64;
        for (a, b) in x.iter().zip(w) {
            acc ^= a & b;
        }
        // x is zero past n, so window bits beyond the row do not contribute.
        acc.count_ones() & 1 == 1
    };
    let out: Vec<bool> = (0..m).into_par_iter().map(row).collect();
    Bits::from_bools(out)
}

#[cfg(target_arch = "x86_64")]
mod clmul {
    use std::arch::x86_64::*;

    use super::ToeplitzSeed;
    use crate::bits::Bits;

    /// Coefficient order within a word: bit `b` of the result holds the
    /// coefficient of `z^{64k + b}`. `Bits` are MSB-first, hence the reversal.
    fn poly(bits: &Bits) -> Vec<u64> {
        bits.words().iter().map(|w| w.reverse_bits()).collect()
    }

    #[target_feature(enable = "pclmulqdq")]
    pub(super) unsafe fn extract(input: &Bits, seed: &ToeplitzSeed) -> Bits {
        let (n, m) = (seed.n(), seed.m());
        let x = poly(input);
        let s = poly(seed.bits());
        // Only product words overlapping coefficients n-1 ..= n+m-2 matter.
        let lo = (n - 1) / 64;
        let hi = (n + m - 2) / 64;
        let mut c = vec![0u64; hi - lo + 2];
        for (i, &a) in x.iter().enumerate() {
            if a == 0 || i > hi {
                continue;
            }
            let va = _mm_set_epi64x(0, a as i64);
            let j0 = lo.saturating_sub(i + 1);
            let j1 = (hi - i + 1).min(s.len());
            for (j, &b) in s.iter().enumerate().take(j1).skip(j0) {
                let p = _mm_clmulepi64_si128(va, _mm_set_epi64x(0, b as i64), 0x00);
                let low = _mm_cvtsi128_si64(p) as u64;
                let high = _mm_cvtsi128_si64(_mm_unpackhi_epi64(p, p)) as u64;
                let k = i + j;
                if k >= lo {
                    c[k - lo] ^= low;
                }
                c[k + 1 - lo] ^= high;
            }
        }
        let shift = (n - 1) % 64;
        let words = m.div_ceil(64);
        let out: Vec<u64> = (0..words)
            .map(|k| {
                let w = c[k] >> shift;
                let w = if shift == 0 { w } else { w | c.get(k + 1).copied().unwrap_or(0) << (64 - shift) };
                w.reverse_bits()
            })
            .collect();
        Bits::from_words(out, m)
    }
}

/// Direct `O(n m)` GF(2) product, used as the reference.
pub fn extract_naive(input: &Bits, seed: &ToeplitzSeed) -> Result<Bits> {
    check_input(input, seed)?;
    Ok(Bits::from_bools((0..seed.m).map(|i| {
        (0..seed.n).fold(false, |acc, j| acc ^ (seed.entry(i, j) & input.get(j)))
    })))
}
