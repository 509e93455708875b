//! NIST SP 800-22-style tests.
//!
//! Seven of the fifteen tests are implemented: frequency (monobit), block
//! frequency, runs, longest run of ones, cumulative sums, approximate
//! entropy, and serial. Each reproduces the reference suite's worked-example
//! P-values; inputs are `0/1` byte slices.

use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_ur;

use crate::{Error, Result};

/// Upper regularized incomplete gamma Q(a, x), the reference suite's `igamc`.
#[inline]
pub(crate) fn igamc(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    gamma_ur(a, x)
}

/// Standard normal CDF.
#[inline]
pub(crate) fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn check_len(bits: &[u8], need: usize) -> Result<()> {
    if bits.len() < need {
        return Err(Error::InsufficientLength {
            need,
            got: bits.len(),
        });
    }
    Ok(())
}

/// Frequency (monobit) test: P = erfc(|S_n| / sqrt(2n)).
pub fn monobit_frequency(bits: &[u8]) -> Result<f64> {
    check_len(bits, 100)?;
    Ok(monobit_frequency_unchecked(bits))
}

pub fn monobit_frequency_unchecked(bits: &[u8]) -> f64 {
    let n = bits.len() as f64;
    let ones: u64 = bits.iter().map(|&b| b as u64).sum();
    let s = 2.0 * ones as f64 - n;
    erfc(s.abs() / (2.0 * n).sqrt())
}

/// Frequency within a block: chi-square of per-block one-proportions.
pub fn block_frequency(bits: &[u8], block_len: usize) -> Result<f64> {
    if block_len == 0 {
        return Err(Error::InvalidParameter("block length must be >= 1".into()));
    }
    check_len(bits, block_len)?;
    let n_blocks = bits.len() / block_len;
    let mut chi2 = 0.0;
    for b in 0..n_blocks {
        let ones: u64 = bits[b * block_len..(b + 1) * block_len]
            .iter()
            .map(|&x| x as u64)
            .sum();
        let pi = ones as f64 / block_len as f64;
        chi2 += (pi - 0.5) * (pi - 0.5);
    }
    chi2 *= 4.0 * block_len as f64;
    Ok(igamc(n_blocks as f64 / 2.0, chi2 / 2.0))
}

/// Runs test: total number of runs against its expectation under i.i.d. bits.
pub fn runs_test(bits: &[u8]) -> Result<f64> {
    check_len(bits, 2)?;
    let n = bits.len() as f64;
    let ones: u64 = bits.iter().map(|&b| b as u64).sum();
    let pi = ones as f64 / n;
    // Prerequisite frequency check from the reference suite.
    if (pi - 0.5).abs() >= 2.0 / n.sqrt() {
        return Ok(0.0);
    }
    let v: u64 = 1 + bits.windows(2).filter(|w| w[0] != w[1]).count() as u64;
    let num = (v as f64 - 2.0 * n * pi * (1.0 - pi)).abs();
    Ok(erfc(num / (2.0 * (2.0 * n).sqrt() * pi * (1.0 - pi))))
}

/// Longest-run-of-ones class tables from the reference suite.
struct LongestRunTable {
    block_len: usize,
    n_blocks: usize,
    lo_class: usize,
    hi_class: usize,
    pi: &'static [f64],
}

fn longest_run_table(n: usize) -> Result<LongestRunTable> {
    if n >= 750_000 {
        Ok(LongestRunTable {
            block_len: 10_000,
            n_blocks: 75,
            lo_class: 10,
            hi_class: 16,
            pi: &[0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727],
        })
    } else if n >= 6272 {
        Ok(LongestRunTable {
            block_len: 128,
            n_blocks: 49,
            lo_class: 4,
            hi_class: 9,
            pi: &[0.1174, 0.2430, 0.2493, 0.1752, 0.1027, 0.1124],
        })
    } else if n >= 128 {
        Ok(LongestRunTable {
            block_len: 8,
            n_blocks: 16,
            lo_class: 1,
            hi_class: 4,
            pi: &[0.2148, 0.3672, 0.2305, 0.1875],
        })
    } else {
        Err(Error::InsufficientLength { need: 128, got: n })
    }
}

/// Longest run of ones within fixed-size blocks.
pub fn longest_run(bits: &[u8]) -> Result<f64> {
    let table = longest_run_table(bits.len())?;
    let mut counts = vec![0u64; table.pi.len()];
    for b in 0..table.n_blocks {
        let block = &bits[b * table.block_len..(b + 1) * table.block_len];
        let mut longest = 0usize;
        let mut run = 0usize;
        for &bit in block {
            if bit == 1 {
                run += 1;
                longest = longest.max(run);
            } else {
                run = 0;
            }
        }
        let class = longest.clamp(table.lo_class, table.hi_class) - table.lo_class;
        counts[class] += 1;
    }
    let n_blocks = table.n_blocks as f64;
    let chi2: f64 = counts
        .iter()
        .zip(table.pi)
        .map(|(&c, &p)| {
            let e = n_blocks * p;
            (c as f64 - e) * (c as f64 - e) / e
        })
        .sum();
    let k = table.pi.len() as f64 - 1.0;
    Ok(igamc(k / 2.0, chi2 / 2.0))
}

/// Cumulative sums test P-value for excursion maximum `z`.
///
/// Sum limits follow the reference implementation's integer arithmetic
/// (truncation toward zero of `n/z` ratios), which its worked examples pin.
fn cusum_pvalue(z: i64, n: usize) -> f64 {
    let n_f = n as f64;
    let sq = n_f.sqrt();
    let z_f = z as f64;
    let nz = (n as i64) / z;
    let trunc = |x: i64, d: i64| x / d; // Rust integer division truncates toward zero
    let mut sum1 = 0.0;
    for k in trunc(-nz + 1, 4)..=trunc(nz - 1, 4) {
        let k = k as f64;
        sum1 += normal_cdf((4.0 * k + 1.0) * z_f / sq) - normal_cdf((4.0 * k - 1.0) * z_f / sq);
    }
    let mut sum2 = 0.0;
    for k in trunc(-nz - 3, 4)..=trunc(nz - 1, 4) {
        let k = k as f64;
        sum2 += normal_cdf((4.0 * k + 3.0) * z_f / sq) - normal_cdf((4.0 * k + 1.0) * z_f / sq);
    }
    (1.0 - sum1 + sum2).clamp(0.0, 1.0)
}

/// Cumulative sums (cusum) test, forward and backward P-values.
pub fn cumulative_sums(bits: &[u8]) -> Result<(f64, f64)> {
    check_len(bits, 100)?;
    Ok((
        cumulative_sums_direction(bits, false),
        cumulative_sums_direction(bits, true),
    ))
}

pub fn cumulative_sums_direction(bits: &[u8], backward: bool) -> f64 {
    let n = bits.len();
    let mut s: i64 = 0;
    let mut z: i64 = 0;
    if backward {
        for &b in bits.iter().rev() {
            s += 2 * b as i64 - 1;
            z = z.max(s.abs());
        }
    } else {
        for &b in bits {
            s += 2 * b as i64 - 1;
            z = z.max(s.abs());
        }
    }
    if z == 0 {
        return 0.0;
    }
    cusum_pvalue(z, n)
}

/// Counts of all `m`-bit overlapping patterns with wrap-around.
fn overlapping_counts(bits: &[u8], m: usize) -> Vec<u32> {
    debug_assert!(m >= 1 && m <= 24);
    let n = bits.len();
    let mut counts = vec![0u32; 1usize << m];
    let mask = (1usize << m) - 1;
    let mut window = 0usize;
    for &b in &bits[..m - 1] {
        window = (window << 1) | b as usize;
    }
    for i in 0..n {
        let next = bits[(i + m - 1) % n] as usize;
        window = ((window << 1) | next) & mask;
        counts[window] += 1;
    }
    counts
}

fn phi_m(bits: &[u8], m: usize) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let n = bits.len() as f64;
    overlapping_counts(bits, m)
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let f = c as f64 / n;
            f * f.ln()
        })
        .sum()
}

/// Approximate entropy test with block length `m`.
pub fn approximate_entropy(bits: &[u8], m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be >= 1".into()));
    }
    check_len(bits, 1 << (m + 1))?;
    Ok(approximate_entropy_unchecked(bits, m))
}

/// Approximate entropy without the minimum-length gate (short reference
/// vectors are valid for fidelity checks).
pub fn approximate_entropy_unchecked(bits: &[u8], m: usize) -> f64 {
    let n = bits.len() as f64;
    let apen = phi_m(bits, m) - phi_m(bits, m + 1);
    let chi2 = 2.0 * n * (std::f64::consts::LN_2 - apen);
    igamc((1u64 << (m - 1)) as f64, chi2 / 2.0)
}

fn psi_sq(bits: &[u8], m: usize) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let n = bits.len() as f64;
    let sum: f64 = overlapping_counts(bits, m)
        .iter()
        .map(|&c| c as f64 * c as f64)
        .sum();
    (1u64 << m) as f64 / n * sum - n
}

/// Serial test with block length `m`; returns (P-value1, P-value2).
pub fn serial(bits: &[u8], m: usize) -> Result<(f64, f64)> {
    if m < 2 {
        return Err(Error::InvalidParameter("serial test needs m >= 2".into()));
    }
    check_len(bits, 1 << (m + 1))?;
    Ok(serial_unchecked(bits, m))
}

/// Serial test without the minimum-length gate (short reference vectors are
/// valid for fidelity checks).
pub fn serial_unchecked(bits: &[u8], m: usize) -> (f64, f64) {
    let p3 = psi_sq(bits, m);
    let p2 = psi_sq(bits, m - 1);
    let p1 = psi_sq(bits, m - 2);
    let d1 = p3 - p2;
    let d2 = p3 - 2.0 * p2 + p1;
    (
        igamc((2.0f64).powi(m as i32 - 2), d1 / 2.0),
        igamc((2.0f64).powi(m as i32 - 3), d2 / 2.0),
    )
}
