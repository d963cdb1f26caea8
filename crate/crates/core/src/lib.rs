//! Simulation and certification toolkit for an all-fiber spatial-qubit
//! source and the measurement-device-independent random number generator
//! built on top of it.
//!
//! The crate is organised bottom-up:
//!
//! * [`modes`] synthesises LP-mode transverse fields, intensity images and
//!   interferograms, and compares profiles through their Fourier spectra.
//! * [`generator`] models the Sagnac loop as a tunable beamsplitter, the
//!   photonic-lantern mapping and the switching waveform.
//! * [`detection`] is the photon-level Monte Carlo: weak coherent pulses,
//!   receiver losses, lantern crosstalk, dark counts and afterpulsing.
//! * [`protocol`] runs the block protocol (test vs generation blocks).
//! * [`privacy`] bounds the adversary's guessing probability with a small
//!   dense SDP solver and turns it into a certified private fraction.
//! * [`extractor`] is the Toeplitz universal-hash extractor.
//! * [`stattests`] implements a subset of the NIST SP 800-22 battery.

pub mod bits;
pub mod detection;
pub mod error;
pub mod extractor;
pub mod generator;
pub mod modes;
pub mod privacy;
pub mod protocol;
pub mod rng;
pub mod stattests;

pub use bits::Bits;
pub use detection::{ChannelModel, PulseOutcome, Verdict};
pub use error::{Error, Result};
pub use extractor::ToeplitzSeed;
pub use generator::{SagnacSetting, SwitchWaveform};
pub use modes::{FieldGrid, GridSpec, ModeBasis, SpatialQubit};
pub use privacy::{ObservedStats, PenaltyMode, PrivacyCertificate};
pub use protocol::{BlockMode, BlockRecord, LfsrSource, ProtocolConfig};
pub use rng::StreamRng;
pub use stattests::TestReport;
