//! Subset of the NIST SP 800-22 statistical test suite.
//!
//! Ten of the fifteen tests are implemented. The template-matching,
//! universal and random-excursion tests are listed in reports as not
//! implemented.

pub mod nist;
pub mod special;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::Bits;
use crate::error::{Error, Result};

pub use nist::{
    approximate_entropy, block_frequency, cumulative_sums, dft, frequency, linear_complexity, longest_run, rank,
    runs, serial,
};

pub const NOT_IMPLEMENTED: [&str; 5] = [
    "NonOverlappingTemplate",
    "OverlappingTemplate",
    "Universal",
    "RandomExcursions",
    "RandomExcursionsVariant",
];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteConfig {
    pub block_size: usize,
    pub alpha: f64,
    pub proportion_threshold: f64,
    pub block_frequency_m: usize,
    pub approximate_entropy_m: usize,
    pub serial_m: usize,
    pub linear_complexity_m: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            block_size: 1_000_000,
            alpha: 0.01,
            proportion_threshold: 0.98,
            block_frequency_m: 128,
            approximate_entropy_m: 10,
            serial_m: 16,
            linear_complexity_m: 500,
        }
    }
}

/// All p-values of one block, in [`TEST_NAMES`] order.
fn block_p_values(block: &Bits, cfg: &SuiteConfig) -> Result<Vec<f64>> {
    let (cf, cr) = cumulative_sums(block)?;
    let (s1, s2) = serial(block, cfg.serial_m)?;
    Ok(vec![
        frequency(block)?,
        block_frequency(block, cfg.block_frequency_m)?,
        cf,
        cr,
        runs(block)?,
        longest_run(block)?,
        rank(block)?,
        dft(block)?,
        approximate_entropy(block, cfg.approximate_entropy_m)?,
        s1,
        s2,
        linear_complexity(block, cfg.linear_complexity_m)?,
    ])
}

pub const TEST_NAMES: [&str; 12] = [
    "Frequency",
    "BlockFrequency",
    "CumulativeSums (forward)",
    "CumulativeSums (reverse)",
    "Runs",
    "LongestRun",
    "Rank",
    "FFT",
    "ApproximateEntropy",
    "Serial (1)",
    "Serial (2)",
    "LinearComplexity",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
    NotImplemented,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::NotImplemented => "not implemented",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub name: String,
    pub p_values: Vec<f64>,
    pub mean_p_value: Option<f64>,
    pub proportion_pass: Option<f64>,
    /// Chi-square uniformity p-value of the block p-values, when there
    /// are enough blocks for it to be meaningful.
    pub uniformity_p_value: Option<f64>,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub blocks: usize,
    pub block_size: usize,
    pub alpha: f64,
    pub proportion_threshold: f64,
    pub tests: Vec<TestOutcome>,
    pub passed: bool,
}

/// Chi-square check that `p_values` are uniform on `[0, 1]`, over ten
/// equal bins.
pub fn uniformity_p_value(p_values: &[f64]) -> Result<f64> {
    if p_values.is_empty() {
        return Err(Error::InsufficientData("no p-values".into()));
    }
    let mut bins = [0u64; 10];
    for &p in p_values {
        bins[((p * 10.0) as usize).min(9)] += 1;
    }
    let expected = p_values.len() as f64 / 10.0;
    let chi: f64 = bins.iter().map(|&b| (b as f64 - expected).powi(2) / expected).sum();
    Ok(special::igamc(4.5, chi / 2.0))
}

/// Runs the implemented tests on every full block of `bits`.
pub fn run_suite(bits: &Bits, cfg: &SuiteConfig) -> Result<TestReport> {
    if cfg.block_size == 0 {
        return Err(Error::param("block size must be positive"));
    }
    let blocks = bits.len() / cfg.block_size;
    if blocks == 0 {
        return Err(Error::InsufficientData(format!(
            "{} bits is short of one {}-bit block by {} bits",
            bits.len(),
            cfg.block_size,
            cfg.block_size - bits.len()
        )));
    }
    let per_block: Vec<Vec<f64>> = (0..blocks)
        .into_par_iter()
        .map(|b| block_p_values(&bits.slice(b * cfg.block_size, cfg.block_size), cfg))
        .collect::<Result<_>>()?;
    let mut tests: Vec<TestOutcome> = TEST_NAMES
        .iter()
        .enumerate()
        .map(|(t, name)| {
            let p: Vec<f64> = per_block.iter().map(|v| v[t]).collect();
            let mean = p.iter().sum::<f64>() / p.len() as f64;
            let prop = p.iter().filter(|&&x| x >= cfg.alpha).count() as f64 / p.len() as f64;
            let pass = mean >= cfg.alpha && prop >= cfg.proportion_threshold;
            TestOutcome {
                name: name.to_string(),
                uniformity_p_value: if p.len() >= 55 { uniformity_p_value(&p).ok() } else { None },
                p_values: p,
                mean_p_value: Some(mean),
                proportion_pass: Some(prop),
                verdict: if pass { Verdict::Pass } else { Verdict::Fail },
            }
        })
        .collect();
    let passed = tests.iter().all(|t| t.verdict == Verdict::Pass);
    tests.extend(NOT_IMPLEMENTED.iter().map(|name| TestOutcome {
        name: name.to_string(),
        p_values: vec![],
        mean_p_value: None,
        proportion_pass: None,
        uniformity_p_value: None,
        verdict: Verdict::NotImplemented,
    }));
    Ok(TestReport {
        blocks,
        block_size: cfg.block_size,
        alpha: cfg.alpha,
        proportion_threshold: cfg.proportion_threshold,
        tests,
        passed,
    })
}

impl TestReport {
    /// Plain-text table with the columns mean p-value, proportion and
    /// verdict.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{} block(s) of {} bits, alpha = {}, proportion threshold = {}\n\n",
            self.blocks, self.block_size, self.alpha, self.proportion_threshold
        );
        out += &format!("{:<28} {:>14} {:>16} {:>16}\n", "Statistical test", "Mean p-value", "Proportion pass", "Verdict");
        for t in &self.tests {
            let mean = t.mean_p_value.map_or("-".into(), |m| format!("{m:.6}"));
            let prop = t.proportion_pass.map_or("-".into(), |p| format!("{p:.4}"));
            out += &format!("{:<28} {:>14} {:>16} {:>16}\n", t.name, mean, prop, t.verdict.label());
        }
        out += &format!("\nOverall: {}\n", if self.passed { "PASS" } else { "FAIL" });
        out
    }
}
