use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fiberqrng_cli::pipeline::{self, OutputSize, OutputTree};
use fiberqrng_cli::{io, CliError, RunConfig, OUT_ENV};

#[derive(Parser)]
#[command(name = "fiberqrng", version, about = "Simulate, certify and test an all-fiber spatial-qubit QRNG")]
struct Cli {
    /// Run configuration (TOML). Defaults are used for anything missing.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the configuration.
    #[arg(long, global = true, env = OUT_ENV)]
    out: Option<PathBuf>,
    /// Run seed; overrides the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of protocol blocks; overrides the configuration.
    #[arg(long, global = true)]
    blocks: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render intensity and interferogram images of the six MUB states.
    RenderModes,
    /// Run the block protocol and write the ledger and raw bits.
    Simulate,
    /// Bound the guessing probability from the ledger's test blocks.
    Certify,
    /// Toeplitz-extract the run's raw bits, or an arbitrary bit file.
    Extract(ExtractArgs),
    /// Run the statistical test suite on extracted bits or a bit file.
    Nist(NistArgs),
    /// Simulate the Sagnac switching transient.
    SwitchWaveform,
    /// Run every stage and write the consolidated report.
    Report,
    /// Print the effective configuration.
    PrintConfig,
}

#[derive(Args)]
struct ExtractArgs {
    /// Packed (MSB-first) input bits; without it the run's raw bits are used.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Toeplitz seed file; defaults to the configured source.
    #[arg(long)]
    seed_file: Option<PathBuf>,
    /// Input bits per extractor block; defaults to the whole file.
    #[arg(long, requires = "input")]
    n: Option<usize>,
    /// Output bits per block.
    #[arg(long, requires = "input", conflicts_with = "fraction")]
    m: Option<usize>,
    /// Private fraction used to size the output.
    #[arg(long, requires = "input")]
    fraction: Option<f64>,
    /// Security parameter for `--fraction` sizing.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Output file for `--input` mode.
    #[arg(long, requires = "input")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct NistArgs {
    /// Packed input bits; without it the run's extracted bits are used.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Use only the first `bits` bits of the input.
    #[arg(long, requires = "input")]
    bits: Option<usize>,
}

impl Cli {
    /// The configuration and the run directory it applies to. Stages that
    /// read a run directory pick up its `config.toml` unless `--config` is
    /// given.
    fn resolve(&self, reads_run: bool) -> Result<(RunConfig, OutputTree), CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let root = self.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
        let tree = OutputTree::new(root);
        if self.config.is_none() && reads_run && tree.config().exists() {
            cfg = RunConfig::load(&tree.config())?;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(n) = self.blocks {
            cfg.n_blocks = n;
        }
        cfg.validate()?;
        Ok((cfg, tree))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let reads_run = matches!(cli.command, Command::Certify | Command::Extract(_) | Command::Nist(_));
    let (mut cfg, tree) = cli.resolve(reads_run)?;
    match cli.command {
        Command::PrintConfig => print!("{}", cfg.to_toml()?),
        Command::RenderModes => {
            pipeline::write_config(&cfg, &tree)?;
            let files = pipeline::render_modes(&cfg, &tree)?;
            println!("wrote {} images to {}", files.len(), tree.modes().display());
        }
        Command::SwitchWaveform => {
            pipeline::write_config(&cfg, &tree)?;
            let s = pipeline::waveform(&cfg, &tree)?;
            match (s.measured_rise_ns, s.measured_fall_ns) {
                (Some(r), Some(f)) => println!("rise {r:.3} ns, fall {f:.3} ns"),
                _ => println!("static drive: no switching edges"),
            }
        }
        Command::Simulate => {
            pipeline::write_config(&cfg, &tree)?;
            let (_, report) = pipeline::simulate(&cfg, &tree)?;
            let s = &report.summary;
            println!(
                "{} blocks ({} generation, {} test_a, {} test_b), {} raw bits",
                s.blocks, s.generation_blocks, s.test_a_blocks, s.test_b_blocks, s.raw_bits
            );
            if let Some(h) = s.mean_entropy_bits_per_byte {
                println!("mean block entropy {h:.4} bits/byte");
            }
        }
        Command::Certify => {
            let records = io::read_ledger(&tree.ledger())?;
            let cert = pipeline::certify(&cfg, &records, &tree)?;
            println!(
                "p_guess {:.6}, h_min {:.6}, private fraction {:.6} ({})",
                cert.p_guess,
                cert.h_min,
                cert.private_fraction,
                cert.penalty_mode.name()
            );
        }
        Command::Extract(args) => {
            if let Some(path) = args.seed_file {
                cfg.extractor.seed_file = Some(path);
            }
            let record = match args.input {
                Some(input) => {
                    let size = match (args.m, args.fraction) {
                        (Some(m), _) => OutputSize::Bits(m),
                        (None, Some(f)) => OutputSize::Fraction {
                            private_fraction: f,
                            epsilon_sec: args.epsilon.unwrap_or(cfg.extractor.epsilon_sec),
                        },
                        (None, None) => {
                            return Err(CliError::Usage(anyhow::anyhow!("--input needs --m or --fraction")))
                        }
                    };
                    let output = args.output.unwrap_or_else(|| tree.extracted());
                    pipeline::extract_file(&cfg, &input, args.n, size, &output)?
                }
                None => {
                    let cert = pipeline::require_certificate(&tree)?;
                    let records = io::read_ledger(&tree.ledger())?;
                    let raw = pipeline::read_raw(&cfg, &tree, &records)?;
                    pipeline::extract_certified(&cfg, &cert, &raw, &tree)?.1
                }
            };
            println!(
                "{} block(s) of {} -> {} bits, {} bits total",
                record.blocks, record.input_bits_per_block, record.output_bits_per_block, record.output_bits
            );
        }
        Command::Nist(args) => {
            let bits = match &args.input {
                Some(path) => io::read_bits(path, args.bits)?,
                None => pipeline::read_extracted(&tree)?,
            };
            let report = pipeline::nist(&cfg, &bits, &tree)?;
            print!("{}", report.to_text());
            if !report.passed {
                return Err(CliError::TestSuite(pipeline::failed_tests(&report)));
            }
        }
        Command::Report => {
            let r = pipeline::run_pipeline(&cfg, &tree)?;
            println!(
                "p_guess {:.6}, {} extracted bits, statistical suite {}",
                r.certificate.p_guess,
                r.extraction.output_bits,
                if r.nist.passed { "PASS" } else { "FAIL" }
            );
            println!("report: {}", tree.report().display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version go to stdout with success; real usage
            // errors exit 1 rather than clap's default 2.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
