//! Run configuration: the complete record of an experiment.
//!
//! Every field has a default, so an empty file is a valid configuration
//! and `print-config` dumps the full schema with its values.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use fiberqrng_core::generator::{DriveSpec, PulseSpec};
use fiberqrng_core::modes::ReferenceSpec;
use fiberqrng_core::stattests::SuiteConfig;
use fiberqrng_core::{ChannelModel, GridSpec, PenaltyMode, ProtocolConfig};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Run seed. Limited to 63 bits so it round-trips through TOML integers.
    pub seed: u64,
    pub n_blocks: u64,
    pub output_dir: PathBuf,
    pub channel: ChannelModel,
    pub protocol: ProtocolConfig,
    pub privacy: PrivacyConfig,
    pub extractor: ExtractorConfig,
    pub nist: SuiteConfig,
    pub modes: ModesConfig,
    pub waveform: WaveformConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrivacyConfig {
    pub penalty_mode: PenaltyMode,
    /// Feed the solver `p - k·σ` instead of the mean test probabilities,
    /// with σ the binomial standard error. Zero uses the means.
    pub interval_sigmas: f64,
}

impl Default for PrivacyConfig {
    fn default() -> Self {
        PrivacyConfig { penalty_mode: PenaltyMode::LinearDiscount, interval_sigmas: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractorConfig {
    pub epsilon_sec: f64,
    /// Toeplitz seed bits, MSB first. Without a file the seed is drawn from
    /// the run seed's extractor stream.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed_file: Option<PathBuf>,
}

impl Default for ExtractorConfig {
    fn default() -> Self {
        ExtractorConfig { epsilon_sec: 2f64.powi(-50), seed_file: None }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModesConfig {
    pub grid: GridSpec,
    pub reference: ReferenceSpec,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveformConfig {
    pub drive: DriveSpec,
    pub pulse: PulseSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 20240521,
            n_blocks: 100,
            output_dir: PathBuf::from("fiberqrng-out"),
            channel: ChannelModel::default(),
            protocol: ProtocolConfig::default(),
            privacy: PrivacyConfig::default(),
            extractor: ExtractorConfig::default(),
            nist: SuiteConfig::default(),
            modes: ModesConfig::default(),
            waveform: WaveformConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.seed > i64::MAX as u64 {
            bail!("seed {} does not fit in 63 bits", self.seed);
        }
        if self.n_blocks == 0 {
            bail!("n_blocks must be positive");
        }
        if !(self.extractor.epsilon_sec > 0.0 && self.extractor.epsilon_sec < 1.0) {
            bail!("epsilon_sec = {} is outside (0, 1)", self.extractor.epsilon_sec);
        }
        if !(self.privacy.interval_sigmas >= 0.0) {
            bail!("interval_sigmas must be non-negative");
        }
        self.channel.validate()?;
        self.protocol.validate()?;
        self.modes.grid.validate()?;
        Ok(())
    }
}
