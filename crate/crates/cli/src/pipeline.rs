//! The stages behind each subcommand. Each stage reads and writes files in
//! an [`OutputTree`], so the subcommands can be run one at a time or
//! chained by [`run_pipeline`].

use std::path::{Path, PathBuf};

use anyhow::Context;
use fiberqrng_core::detection::multiphoton_fraction;
use fiberqrng_core::extractor::{extract, output_length};
use fiberqrng_core::generator::switch_waveform;
use fiberqrng_core::modes::{render_image, synthesize_field, ImageKind};
use fiberqrng_core::privacy::{solve_guessing_with, GuessingOptions};
use fiberqrng_core::protocol::{run_protocol, summarize, RunSummary};
use fiberqrng_core::rng::domain;
use fiberqrng_core::stattests::{run_suite, Verdict};
use fiberqrng_core::{
    BlockMode, BlockRecord, Bits, ModeBasis, ObservedStats, PrivacyCertificate, StreamRng, TestReport, ToeplitzSeed,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::io;

type Result<T, E = CliError> = std::result::Result<T, E>;

/// File layout of a run directory.
#[derive(Clone, Debug)]
pub struct OutputTree {
    pub root: PathBuf,
}

impl OutputTree {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        OutputTree { root: root.into() }
    }

    fn file(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn config(&self) -> PathBuf {
        self.file("config.toml")
    }
    pub fn modes(&self) -> PathBuf {
        self.file("modes")
    }
    pub fn ledger(&self) -> PathBuf {
        self.file("ledger.ndjson")
    }
    pub fn blocks_csv(&self) -> PathBuf {
        self.file("blocks.csv")
    }
    pub fn raw_bits(&self) -> PathBuf {
        self.file("raw_bits.bin")
    }
    pub fn simulation(&self) -> PathBuf {
        self.file("simulate_summary.json")
    }
    pub fn certificate(&self) -> PathBuf {
        self.file("certificate.json")
    }
    pub fn extracted(&self) -> PathBuf {
        self.file("extracted.bin")
    }
    pub fn extraction(&self) -> PathBuf {
        self.file("extracted.json")
    }
    pub fn nist_text(&self) -> PathBuf {
        self.file("nist_report.txt")
    }
    pub fn nist_json(&self) -> PathBuf {
        self.file("nist_report.json")
    }
    pub fn waveform_csv(&self) -> PathBuf {
        self.file("waveform.csv")
    }
    pub fn waveform_summary(&self) -> PathBuf {
        self.file("waveform_summary.json")
    }
    pub fn report(&self) -> PathBuf {
        self.file("report.json")
    }
}

pub fn write_config(cfg: &RunConfig, tree: &OutputTree) -> Result<()> {
    io::write_file(&tree.config(), cfg.to_toml()?.as_bytes())?;
    Ok(())
}

/// Intensity and interferogram of every MUB state, named
/// `<state>_<kind>.pgm`.
pub fn render_modes(cfg: &RunConfig, tree: &OutputTree) -> Result<Vec<PathBuf>> {
    let dir = tree.modes();
    io::create_dir(&dir)?;
    let mut out = Vec::new();
    for state in ModeBasis::MUB_STATES {
        let qubit = state.qubit().expect("MUB states are qubits");
        let field = synthesize_field(&qubit, cfg.modes.grid)?;
        for kind in [ImageKind::Intensity, ImageKind::Interferogram] {
            let path = dir.join(format!("{}_{}.pgm", state.name(), kind.name()));
            render_image(&field, kind, &cfg.modes.reference, &path)?;
            out.push(path);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveformSummary {
    pub sample_period_ns: f64,
    pub samples: usize,
    pub configured_rise_ns: f64,
    pub configured_fall_ns: f64,
    /// `None` when the drive never switches.
    pub measured_rise_ns: Option<f64>,
    pub measured_fall_ns: Option<f64>,
    pub min_port1_power: f64,
    pub max_port1_power: f64,
}

pub fn waveform(cfg: &RunConfig, tree: &OutputTree) -> Result<WaveformSummary> {
    let w = &cfg.waveform;
    let wf = switch_waveform(&w.drive, &w.pulse)?;
    io::write_file(&tree.waveform_csv(), wf.to_csv().as_bytes())?;
    let edges = wf.measure_edges();
    let p1 = wf.port_powers.iter().map(|p| p[1]);
    let summary = WaveformSummary {
        sample_period_ns: wf.sample_period_ns,
        samples: wf.t_ns.len(),
        configured_rise_ns: w.drive.rise_ns,
        configured_fall_ns: w.drive.fall_ns,
        measured_rise_ns: edges.map(|e| e.rise_ns),
        measured_fall_ns: edges.map(|e| e.fall_ns),
        min_port1_power: p1.clone().fold(f64::INFINITY, f64::min),
        max_port1_power: p1.fold(f64::NEG_INFINITY, f64::max),
    };
    io::write_json(&tree.waveform_summary(), &summary)?;
    Ok(summary)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub seed: u64,
    pub summary: RunSummary,
    /// `P(n >= 2)` of the weak coherent pulses.
    pub multiphoton_fraction: f64,
    /// Analytic `P(correct | test_a)`, `P(correct | test_b)` of the channel.
    pub expected_p_correct: [f64; 2],
    pub raw_bits_sha256: String,
}

/// Concatenated generation-block bits in block order.
pub fn raw_bits(records: &[BlockRecord]) -> Bits {
    let mut out = Bits::new();
    for r in records.iter().filter(|r| r.mode == BlockMode::Generation) {
        if let Some(b) = &r.bits {
            out.extend_from(b);
        }
    }
    out
}

pub fn simulate(cfg: &RunConfig, tree: &OutputTree) -> Result<(Vec<BlockRecord>, SimulationReport)> {
    let records = run_protocol(&cfg.protocol, &cfg.channel, cfg.seed, cfg.n_blocks)?;
    io::write_ledger(&tree.ledger(), &records)?;
    let mut csv = String::from(BlockRecord::CSV_HEADER);
    csv.push('\n');
    for r in &records {
        csv += &r.csv_row();
        csv.push('\n');
    }
    io::write_file(&tree.blocks_csv(), csv.as_bytes())?;
    let raw = raw_bits(&records).to_bytes();
    io::write_file(&tree.raw_bits(), &raw)?;
    let report = SimulationReport {
        seed: cfg.seed,
        summary: summarize(&records, &cfg.protocol),
        multiphoton_fraction: if cfg.channel.mu > 0.0 { multiphoton_fraction(cfg.channel.mu)? } else { 0.0 },
        expected_p_correct: cfg.channel.test_probabilities(),
        raw_bits_sha256: io::sha256_hex(&raw),
    };
    io::write_json(&tree.simulation(), &report)?;
    Ok((records, report))
}

/// Test statistics pooled over the ledger, as the solver will see them.
pub fn observed_stats(cfg: &RunConfig, records: &[BlockRecord]) -> Result<ObservedStats> {
    let s = summarize(records, &cfg.protocol);
    if s.generation_blocks == 0 {
        return Err(CliError::Certification("the ledger has no generation blocks".into()));
    }
    let na = s.test_a_counts[0] + s.test_a_counts[1];
    let nb = s.test_b_counts[0] + s.test_b_counts[1];
    let (Some(pa), Some(pb)) = (s.p_correct_a, s.p_correct_b) else {
        return Err(CliError::Certification(format!(
            "cannot certify without test detections (test_a: {na}, test_b: {nb})"
        )));
    };
    let f = multiphoton_fraction(cfg.channel.mu)?;
    let stats = ObservedStats::new(pa, pb, f)?;
    let k = cfg.privacy.interval_sigmas;
    if k > 0.0 {
        let hw = |p: f64, n: u64| k * (p * (1.0 - p) / n as f64).sqrt();
        return Ok(stats.worst_case(hw(pa, na), hw(pb, nb))?);
    }
    Ok(stats)
}

/// Solves for the guessing probability and writes `certificate.json`.
/// A certificate with no private bits is written but reported as a failure.
pub fn certify(cfg: &RunConfig, records: &[BlockRecord], tree: &OutputTree) -> Result<PrivacyCertificate> {
    let stats = observed_stats(cfg, records)?;
    let options = GuessingOptions {
        phi_x: cfg.protocol.generation_phi_x,
        penalty_mode: cfg.privacy.penalty_mode,
        ..Default::default()
    };
    let cert = solve_guessing_with(&stats, &options).map_err(|e| CliError::Certification(e.to_string()))?;
    io::write_json(&tree.certificate(), &cert)?;
    if !(cert.private_fraction > 0.0) {
        return Err(CliError::Certification(format!(
            "p_guess = {:.6} leaves no private randomness",
            cert.p_guess
        )));
    }
    Ok(cert)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractionRecord {
    pub blocks: usize,
    pub input_bits_per_block: usize,
    pub output_bits_per_block: usize,
    pub input_bits: usize,
    pub output_bits: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub private_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon_sec: Option<f64>,
    /// `stream:<seed>` or the seed file path.
    pub seed_source: String,
    pub seed_sha256: String,
    pub input_sha256: String,
    pub output_sha256: String,
}

/// Toeplitz seed from the configured file, else from the run seed's
/// extractor stream.
pub fn toeplitz_seed(cfg: &RunConfig, n: usize, m: usize) -> Result<(ToeplitzSeed, String)> {
    match &cfg.extractor.seed_file {
        Some(path) => {
            let bits = io::read_bits(path, None)?;
            let seed = ToeplitzSeed::from_prefix(n, m, &bits).with_context(|| format!("seed file {}", path.display()))?;
            Ok((seed, path.display().to_string()))
        }
        None => {
            let mut rng = StreamRng::new(cfg.seed, domain::EXTRACTOR, 0);
            Ok((ToeplitzSeed::random(n, m, &mut rng)?, format!("stream:{}", cfg.seed)))
        }
    }
}

/// Hashes consecutive `seed.n()`-bit blocks of `input` and concatenates the
/// outputs. Blocks are independent, so they run in parallel.
pub fn extract_blocks(input: &Bits, seed: &ToeplitzSeed) -> Result<Bits> {
    let n = seed.n();
    if input.len() % n != 0 {
        return Err(CliError::Usage(anyhow::anyhow!(
            "input of {} bits is not a whole number of {n}-bit blocks",
            input.len()
        )));
    }
    let parts = (0..input.len() / n)
        .into_par_iter()
        .map(|b| extract(&input.slice(b * n, n), seed))
        .collect::<fiberqrng_core::Result<Vec<Bits>>>()?;
    let mut out = Bits::with_capacity(parts.len() * seed.m());
    for p in &parts {
        out.extend_from(p);
    }
    Ok(out)
}

fn write_extraction(
    input: &Bits,
    output: &Bits,
    seed: &ToeplitzSeed,
    seed_source: String,
    sizing: Option<(f64, f64)>,
    out_path: &Path,
    sidecar: &Path,
) -> Result<ExtractionRecord> {
    let bytes = output.to_bytes();
    io::write_file(out_path, &bytes)?;
    let record = ExtractionRecord {
        blocks: input.len() / seed.n(),
        input_bits_per_block: seed.n(),
        output_bits_per_block: seed.m(),
        input_bits: input.len(),
        output_bits: output.len(),
        private_fraction: sizing.map(|s| s.0),
        epsilon_sec: sizing.map(|s| s.1),
        seed_source,
        seed_sha256: io::sha256_hex(&seed.bits().to_bytes()),
        input_sha256: io::sha256_hex(&input.to_bytes()),
        output_sha256: io::sha256_hex(&bytes),
    };
    io::write_json(sidecar, &record)?;
    Ok(record)
}

/// Extracts the run's raw bits under a certificate. Refuses when the
/// certificate leaves no private bits per block.
pub fn extract_certified(
    cfg: &RunConfig,
    cert: &PrivacyCertificate,
    raw: &Bits,
    tree: &OutputTree,
) -> Result<(Bits, ExtractionRecord)> {
    if !(cert.private_fraction > 0.0) {
        return Err(CliError::Certification("the certificate leaves no private randomness".into()));
    }
    let n = cfg.protocol.block_bits;
    let eps = cfg.extractor.epsilon_sec;
    let m = output_length(n, cert.private_fraction, eps)?;
    if m == 0 {
        return Err(CliError::Certification(format!(
            "{n}-bit blocks at private fraction {:.4} are too short for epsilon {eps:e}",
            cert.private_fraction
        )));
    }
    let (seed, source) = toeplitz_seed(cfg, n, m)?;
    let out = extract_blocks(raw, &seed)?;
    let record = write_extraction(
        raw,
        &out,
        &seed,
        source,
        Some((cert.private_fraction, eps)),
        &tree.extracted(),
        &tree.extraction(),
    )?;
    Ok((out, record))
}

/// Input sizing for standalone extraction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OutputSize {
    Bits(usize),
    Fraction { private_fraction: f64, epsilon_sec: f64 },
}

/// Extraction of an arbitrary bit file. The output goes to `output` with a
/// sidecar JSON next to it.
pub fn extract_file(
    cfg: &RunConfig,
    input: &Path,
    block_bits: Option<usize>,
    size: OutputSize,
    output: &Path,
) -> Result<ExtractionRecord> {
    let bits = io::read_bits(input, None)?;
    let n = block_bits.unwrap_or(bits.len());
    if n == 0 {
        return Err(CliError::Usage(anyhow::anyhow!("{} is empty", input.display())));
    }
    let (m, sizing) = match size {
        OutputSize::Bits(m) => (m, None),
        OutputSize::Fraction { private_fraction, epsilon_sec } => (
            output_length(n, private_fraction, epsilon_sec)?,
            Some((private_fraction, epsilon_sec)),
        ),
    };
    if m == 0 {
        return Err(CliError::Usage(anyhow::anyhow!("the requested sizing leaves no output bits")));
    }
    let (seed, source) = toeplitz_seed(cfg, n, m)?;
    let out = extract_blocks(&bits, &seed)?;
    let sidecar = output.with_extension("json");
    write_extraction(&bits, &out, &seed, source, sizing, output, &sidecar)
}

/// Runs the statistical suite and writes the text and JSON reports.
pub fn nist(cfg: &RunConfig, bits: &Bits, tree: &OutputTree) -> Result<TestReport> {
    let report = run_suite(bits, &cfg.nist)?;
    io::write_file(&tree.nist_text(), report.to_text().as_bytes())?;
    io::write_json(&tree.nist_json(), &report)?;
    Ok(report)
}

/// Bits of `extracted.bin`, trimmed to the length its sidecar records.
pub fn read_extracted(tree: &OutputTree) -> Result<Bits> {
    let record: ExtractionRecord = io::read_json(&tree.extraction())?;
    Ok(io::read_bits(&tree.extracted(), Some(record.output_bits))?)
}

pub fn read_raw(cfg: &RunConfig, tree: &OutputTree, records: &[BlockRecord]) -> Result<Bits> {
    let gen = records.iter().filter(|r| r.mode == BlockMode::Generation).count();
    let len = gen * cfg.protocol.block_bits;
    Ok(io::read_bits(&tree.raw_bits(), Some(len))?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestSummary {
    pub name: String,
    pub mean_p_value: Option<f64>,
    pub proportion_pass: Option<f64>,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NistSummary {
    pub blocks: usize,
    pub block_size: usize,
    pub passed: bool,
    pub tests: Vec<TestSummary>,
}

impl From<&TestReport> for NistSummary {
    fn from(r: &TestReport) -> Self {
        NistSummary {
            blocks: r.blocks,
            block_size: r.block_size,
            passed: r.passed,
            tests: r
                .tests
                .iter()
                .map(|t| TestSummary {
                    name: t.name.clone(),
                    mean_p_value: t.mean_p_value,
                    proportion_pass: t.proportion_pass,
                    verdict: t.verdict,
                })
                .collect(),
        }
    }
}

/// Consolidated `report.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub config_sha256: String,
    pub mode_images: Vec<String>,
    pub waveform: WaveformSummary,
    pub simulation: SimulationReport,
    pub certificate: PrivacyCertificate,
    pub extraction: ExtractionRecord,
    pub nist: NistSummary,
}

/// Every stage in order. The report is written even when the suite fails;
/// the failure is then returned as [`CliError::TestSuite`].
pub fn run_pipeline(cfg: &RunConfig, tree: &OutputTree) -> Result<RunReport> {
    cfg.validate()?;
    io::create_dir(&tree.root)?;
    write_config(cfg, tree)?;
    let images = render_modes(cfg, tree)?;
    let waveform = waveform(cfg, tree)?;
    let (records, simulation) = simulate(cfg, tree)?;
    let certificate = certify(cfg, &records, tree)?;
    let raw = raw_bits(&records);
    let (extracted, extraction) = extract_certified(cfg, &certificate, &raw, tree)?;
    let tests = nist(cfg, &extracted, tree)?;
    let report = RunReport {
        seed: cfg.seed,
        config_sha256: io::sha256_hex(&io::read_file(&tree.config())?),
        mode_images: images
            .iter()
            .map(|p| p.strip_prefix(&tree.root).unwrap_or(p).display().to_string())
            .collect(),
        waveform,
        simulation,
        certificate,
        extraction,
        nist: NistSummary::from(&tests),
    };
    io::write_json(&tree.report(), &report)?;
    if !tests.passed {
        return Err(CliError::TestSuite(failed_tests(&tests)));
    }
    Ok(report)
}

pub fn failed_tests(r: &TestReport) -> String {
    let names: Vec<&str> = r.tests.iter().filter(|t| t.verdict == Verdict::Fail).map(|t| t.name.as_str()).collect();
    names.join(", ")
}

/// Refuses to overwrite `path` with extraction output unless a certificate
/// exists next to it.
pub fn require_certificate(tree: &OutputTree) -> Result<PrivacyCertificate> {
    let path = tree.certificate();
    if !path.exists() {
        return Err(CliError::Certification(format!(
            "{} not found; run `certify` first",
            path.display()
        )));
    }
    Ok(io::read_json(&path)?)
}
