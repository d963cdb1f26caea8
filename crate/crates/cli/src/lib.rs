//! Command-line orchestration for the fiber QRNG simulator: configuration,
//! the end-to-end pipeline and the files each stage emits.
//!
//! A run directory holds:
//!
//! | file | stage |
//! |------|-------|
//! | `config.toml` | every stage that produces output |
//! | `modes/<state>_<kind>.pgm` | `render-modes` |
//! | `waveform.csv`, `waveform_summary.json` | `switch-waveform` |
//! | `ledger.ndjson`, `blocks.csv`, `raw_bits.bin`, `simulate_summary.json` | `simulate` |
//! | `certificate.json` | `certify` |
//! | `extracted.bin`, `extracted.json` | `extract` |
//! | `nist_report.txt`, `nist_report.json` | `nist` |
//! | `report.json` | `report` (all of the above) |

pub mod config;
pub mod error;
pub mod io;
pub mod pipeline;

pub use config::RunConfig;
pub use error::CliError;
pub use fiberqrng_core;
pub use pipeline::{run_pipeline, OutputTree, RunReport};

/// Environment variable overriding the configured output directory.
pub const OUT_ENV: &str = "FIBERQRNG_OUT";
