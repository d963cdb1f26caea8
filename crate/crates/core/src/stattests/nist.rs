//! The implemented SP 800-22 tests. Each follows the statistic and
//! reference distribution of the standard; parameters that the standard
//! leaves to the user are function arguments.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::bits::Bits;
use crate::error::{Error, Result};

use super::special::{erfc, igamc, normal_cdf};

fn need(test: &str, n: usize, min: usize) -> Result<()> {
    if n < min {
        return Err(Error::param(format!("{test} needs at least {min} bits, got {n}")));
    }
    Ok(())
}

fn chi_square(counts: &[u64], probs: &[f64], total: f64) -> f64 {
    counts
        .iter()
        .zip(probs)
        .map(|(&c, &p)| {
            let e = total * p;
            (c as f64 - e).powi(2) / e
        })
        .sum()
}

pub fn frequency(bits: &Bits) -> Result<f64> {
    let n = bits.len();
    need("frequency", n, 1)?;
    let s = 2.0 * bits.count_ones() as f64 - n as f64;
    Ok(erfc(s.abs() / (2.0 * n as f64).sqrt()))
}

pub fn block_frequency(bits: &Bits, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::param("block length must be positive"));
    }
    need("block frequency", bits.len(), m)?;
    let blocks = bits.len() / m;
    let chi: f64 = (0..blocks)
        .map(|b| {
            let ones = (0..m).filter(|&j| bits.get(b * m + j)).count();
            (ones as f64 / m as f64 - 0.5).powi(2)
        })
        .sum::<f64>()
        * 4.0
        * m as f64;
    Ok(igamc(blocks as f64 / 2.0, chi / 2.0))
}

pub fn runs(bits: &Bits) -> Result<f64> {
    let n = bits.len();
    need("runs", n, 2)?;
    let nf = n as f64;
    let pi = bits.count_ones() as f64 / nf;
    if (pi - 0.5).abs() >= 2.0 / nf.sqrt() {
        return Ok(0.0);
    }
    let transitions = (1..n).filter(|&k| bits.get(k) != bits.get(k - 1)).count();
    let v = 1.0 + transitions as f64;
    let q = pi * (1.0 - pi);
    Ok(erfc((v - 2.0 * nf * q).abs() / (2.0 * (2.0 * nf).sqrt() * q)))
}

/// Block length, category boundaries and class probabilities for the
/// longest-run test, chosen by input length as in the standard.
fn longest_run_table(n: usize) -> (usize, u32, &'static [f64]) {
    if n < 6272 {
        (8, 1, &[0.2148, 0.3672, 0.2305, 0.1875])
    } else if n < 750_000 {
        (128, 4, &[0.1174, 0.2430, 0.2493, 0.1752, 0.1027, 0.1124])
    } else {
        (10_000, 10, &[0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727])
    }
}

pub fn longest_run(bits: &Bits) -> Result<f64> {
    let n = bits.len();
    need("longest run", n, 128)?;
    let (m, lowest, probs) = longest_run_table(n);
    let k = probs.len() - 1;
    let blocks = n / m;
    let mut counts = vec![0u64; probs.len()];
    for b in 0..blocks {
        let (mut run, mut best) = (0u32, 0u32);
        for j in 0..m {
            if bits.get(b * m + j) {
                run += 1;
                best = best.max(run);
            } else {
                run = 0;
            }
        }
        let class = best.saturating_sub(lowest).min(k as u32) as usize;
        counts[class] += 1;
    }
    let chi = chi_square(&counts, probs, blocks as f64);
    Ok(igamc(k as f64 / 2.0, chi / 2.0))
}

/// Probability that a random `rows × cols` GF(2) matrix has rank `r`.
pub fn rank_probability(r: u32, rows: u32, cols: u32) -> f64 {
    let exp = (r * (rows + cols - r)) as f64 - (rows * cols) as f64;
    let mut p = exp.exp2();
    for i in 0..r {
        let i = i as f64;
        p *= (1.0 - (i - rows as f64).exp2()) * (1.0 - (i - cols as f64).exp2()) / (1.0 - (i - r as f64).exp2());
    }
    p
}

fn gf2_rank(rows: &mut [u32]) -> u32 {
    let mut rank = 0;
    for col in (0..32).rev() {
        let bit = 1u32 << col;
        let Some(pivot) = (rank as usize..rows.len()).find(|&r| rows[r] & bit != 0) else {
            continue;
        };
        rows.swap(rank as usize, pivot);
        let p = rows[rank as usize];
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank as usize && *row & bit != 0 {
                *row ^= p;
            }
        }
        rank += 1;
    }
    rank
}

/// Binary matrix rank test with 32×32 matrices.
pub fn rank(bits: &Bits) -> Result<f64> {
    const Q: usize = 32;
    need("rank", bits.len(), Q * Q)?;
    let n_mat = bits.len() / (Q * Q);
    let mut counts = [0u64; 3];
    for k in 0..n_mat {
        let mut rows: Vec<u32> = (0..Q)
            .map(|r| {
                let start = k * Q * Q + r * Q;
                (0..Q).fold(0u32, |acc, j| (acc << 1) | bits.get(start + j) as u32)
            })
            .collect();
        match gf2_rank(&mut rows) {
            32 => counts[0] += 1,
            31 => counts[1] += 1,
            _ => counts[2] += 1,
        }
    }
    let p32 = rank_probability(32, 32, 32);
    let p31 = rank_probability(31, 32, 32);
    let probs = [p32, p31, 1.0 - p32 - p31];
    let chi = chi_square(&counts, &probs, n_mat as f64);
    Ok((-chi / 2.0).exp())
}

/// Discrete Fourier transform (spectral) test.
pub fn dft(bits: &Bits) -> Result<f64> {
    let n = bits.len();
    need("dft", n, 2)?;
    let mut buf: Vec<Complex64> = bits
        .iter()
        .map(|b| Complex64::new(if b { 1.0 } else { -1.0 }, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let nf = n as f64;
    let threshold = ((1.0f64 / 0.05).ln() * nf).sqrt();
    let half = n / 2;
    let below = buf[..half].iter().filter(|c| c.norm() < threshold).count();
    let n0 = 0.95 * nf / 2.0;
    let d = (below as f64 - n0) / (nf * 0.95 * 0.05 / 4.0).sqrt();
    Ok(erfc(d.abs() / std::f64::consts::SQRT_2))
}

/// Counts of every overlapping `m`-bit pattern of the circularly extended
/// sequence.
fn pattern_counts(bits: &Bits, m: usize) -> Vec<u64> {
    let n = bits.len();
    let mut counts = vec![0u64; 1 << m];
    if m == 0 {
        counts[0] = n as u64;
        return counts;
    }
    let mask = (1usize << m) - 1;
    let mut w = 0usize;
    for j in 0..m - 1 {
        w = (w << 1) | bits.get(j % n) as usize;
    }
    for i in 0..n {
        w = ((w << 1) | bits.get((i + m - 1) % n) as usize) & mask;
        counts[w] += 1;
    }
    counts
}

pub fn approximate_entropy(bits: &Bits, m: usize) -> Result<f64> {
    let n = bits.len();
    need("approximate entropy", n, m + 2)?;
    if m > 24 {
        return Err(Error::param("approximate entropy block length too large"));
    }
    let nf = n as f64;
    let phi = |k: usize| -> f64 {
        pattern_counts(bits, k)
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / nf;
                p * p.ln()
            })
            .sum()
    };
    let ap_en = phi(m) - phi(m + 1);
    let chi = 2.0 * nf * (std::f64::consts::LN_2 - ap_en);
    Ok(igamc((1u64 << m) as f64 / 2.0, chi / 2.0))
}

/// Serial test; returns `(p_value1, p_value2)`.
pub fn serial(bits: &Bits, m: usize) -> Result<(f64, f64)> {
    let n = bits.len();
    if !(2..=24).contains(&m) {
        return Err(Error::param("serial block length must be in 2..=24"));
    }
    need("serial", n, m)?;
    let nf = n as f64;
    let psi = |k: usize| -> f64 {
        if k == 0 {
            return 0.0;
        }
        let sum: f64 = pattern_counts(bits, k).iter().map(|&c| (c as f64).powi(2)).sum();
        (1u64 << k) as f64 / nf * sum - nf
    };
    let (p0, p1, p2) = (psi(m), psi(m - 1), psi(m - 2));
    let d1 = p0 - p1;
    let d2 = p0 - 2.0 * p1 + p2;
    Ok((
        igamc((1u64 << m) as f64 / 4.0, d1 / 2.0),
        igamc((1u64 << m) as f64 / 8.0, d2 / 2.0),
    ))
}

fn cusum_p(n: i64, z: i64) -> f64 {
    let nf = n as f64;
    let zf = z as f64;
    let sq = nf.sqrt();
    // Summation limits use truncating integer division, as in the
    // reference implementation.
    let mut sum1 = 0.0;
    let mut k = (-n / z + 1) / 4;
    while k <= (n / z - 1) / 4 {
        let kf = k as f64;
        sum1 += normal_cdf((4.0 * kf + 1.0) * zf / sq) - normal_cdf((4.0 * kf - 1.0) * zf / sq);
        k += 1;
    }
    let mut sum2 = 0.0;
    let mut k = (-n / z - 3) / 4;
    while k <= (n / z - 1) / 4 {
        let kf = k as f64;
        sum2 += normal_cdf((4.0 * kf + 3.0) * zf / sq) - normal_cdf((4.0 * kf + 1.0) * zf / sq);
        k += 1;
    }
    (1.0 - sum1 + sum2).clamp(0.0, 1.0)
}

/// Cumulative sums test; returns `(forward, reverse)`.
pub fn cumulative_sums(bits: &Bits) -> Result<(f64, f64)> {
    let n = bits.len();
    need("cumulative sums", n, 1)?;
    let (mut s, mut zf, mut lo, mut hi) = (0i64, 0i64, 0i64, 0i64);
    for b in bits.iter() {
        s += if b { 1 } else { -1 };
        zf = zf.max(s.abs());
        lo = lo.min(s);
        hi = hi.max(s);
    }
    // Reverse partial sums are S_n - S_{k}; their extreme magnitude follows
    // from the forward extremes and the total.
    let total = s;
    let zr = (total - lo).abs().max((total - hi).abs()).max(total.abs());
    let n = n as i64;
    Ok((cusum_p(n, zf.max(1)), cusum_p(n, zr.max(1))))
}

/// Berlekamp-Massey linear complexity of `s`.
pub fn berlekamp_massey(s: &[u8]) -> usize {
    let n = s.len();
    let mut c = vec![0u8; n + 1];
    let mut b = vec![0u8; n + 1];
    c[0] = 1;
    b[0] = 1;
    let (mut l, mut m) = (0usize, -1isize);
    for i in 0..n {
        let mut d = s[i];
        for j in 1..=l {
            d ^= c[j] & s[i - j];
        }
        if d == 1 {
            let t = c.clone();
            let shift = (i as isize - m) as usize;
            for j in 0..=n - shift {
                c[j + shift] ^= b[j];
            }
            if l <= i / 2 {
                l = i + 1 - l;
                m = i as isize;
                b = t;
            }
        }
    }
    l
}

/// Bits `o .. o + 64` of a packed little-endian bit vector, zero past the end.
fn window(words: &[u64], o: usize) -> u64 {
    let (w, sh) = (o / 64, o % 64);
    let lo = words.get(w).copied().unwrap_or(0);
    if sh == 0 {
        return lo;
    }
    let hi = words.get(w + 1).copied().unwrap_or(0);
    (lo >> sh) | (hi << (64 - sh))
}

/// Word-parallel Berlekamp-Massey; same result as [`berlekamp_massey`].
pub(crate) fn berlekamp_massey_packed(s: &[u8]) -> usize {
    let n = s.len();
    let words = n / 64 + 1;
    // r holds s reversed so the window s[i - l ..= i] is contiguous.
    let mut r = vec![0u64; words];
    for (k, &b) in s.iter().rev().enumerate() {
        r[k / 64] |= (b as u64 & 1) << (k % 64);
    }
    let mut c = vec![0u64; words];
    let mut b = vec![0u64; words];
    let mut t = vec![0u64; words];
    c[0] = 1;
    b[0] = 1;
    let (mut l, mut m) = (0usize, -1isize);
    for i in 0..n {
        let o = n - 1 - i;
        let mut acc = 0u64;
        for w in 0..=l / 64 {
            let mut cw = c[w];
            if w == l / 64 && l % 64 != 63 {
                cw &= (1u64 << (l % 64 + 1)) - 1;
            }
            acc ^= cw & window(&r, o + 64 * w);
        }
        if acc.count_ones() & 1 == 1 {
            t.copy_from_slice(&c);
            let shift = (i as isize - m) as usize;
            let (ws, bs) = (shift / 64, shift % 64);
            for w in (ws..words).rev() {
                let src = w - ws;
                let mut v = b[src] << bs;
                if bs != 0 && src > 0 {
                    v |= b[src - 1] >> (64 - bs);
                }
                c[w] ^= v;
            }
            if l <= i / 2 {
                l = i + 1 - l;
                m = i as isize;
                std::mem::swap(&mut b, &mut t);
            }
        }
    }
    l
}

pub fn linear_complexity(bits: &Bits, m: usize) -> Result<f64> {
    if m < 2 {
        return Err(Error::param("linear complexity block length must be at least 2"));
    }
    need("linear complexity", bits.len(), m)?;
    const PROBS: [f64; 7] = [0.010417, 0.03125, 0.125, 0.5, 0.25, 0.0625, 0.020833];
    let blocks = bits.len() / m;
    let mf = m as f64;
    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
    let mu = mf / 2.0 + (9.0 - sign) / 36.0 - (mf / 3.0 + 2.0 / 9.0) / mf.exp2();
    let mut counts = [0u64; 7];
    let mut block = vec![0u8; m];
    for k in 0..blocks {
        for (j, v) in block.iter_mut().enumerate() {
            *v = bits.get(k * m + j) as u8;
        }
        let l = berlekamp_massey_packed(&block) as f64;
        let t = sign * (l - mu) + 2.0 / 9.0;
        let class = if t <= -2.5 {
            0
        } else if t <= -1.5 {
            1
        } else if t <= -0.5 {
            2
        } else if t <= 0.5 {
            3
        } else if t <= 1.5 {
            4
        } else if t <= 2.5 {
            5
        } else {
            6
        };
        counts[class] += 1;
    }
    let chi = chi_square(&counts, &PROBS, blocks as f64);
    Ok(igamc(3.0, chi / 2.0))
}
