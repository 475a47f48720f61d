//! Spatially-coupled LDPC and generalized-LDPC codes over bit-interleaved
//! polarization-multiplexed QAM.
//!
//! The crate covers the whole chain used to study coded-bit to modulation-bit
//! allocations ("bit mappers") for terminated and tailbiting spatially-coupled
//! codes:
//!
//! * [`channel`]: PM square-QAM constellations with Gray labels, bit-channel
//!   statistics, exact LLRs, scrambling and capacity benchmarks.
//! * [`fiber`]: a dual-polarization split-step Fourier link model with EDFA
//!   noise and chromatic-dispersion equalization.
//! * [`scldpc`] and [`exit`]: protograph SC-LDPC codes, windowed belief
//!   propagation and protograph EXIT analysis.
//! * [`bch`], [`scgldpc`] and [`gldpc_de`]: shortened BCH component codes,
//!   SC-GLDPC ensembles with iterative hard-decision decoding and their density
//!   evolution.
//! * [`bitmapper`]: the allocation matrix, its differential-evolution
//!   optimization and rounding to a finite-length mapper.
//! * [`sim`] and [`harness`]: Monte Carlo BER estimation and the experiment
//!   jobs driven by the `scmap` command line tool.

pub mod bch;
pub mod bitmapper;
pub mod channel;
pub mod error;
pub mod exit;
pub mod fiber;
pub mod gldpc_de;
pub mod harness;
pub mod scgldpc;
pub mod scldpc;
pub mod sim;
pub mod special;
pub mod threshold;
pub mod window;

pub use error::{Error, Result};

/// Coupling mode of a spatially-coupled chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Known boundary values; the chain carries a rate loss.
    Terminated,
    /// Circular wrap-around; no rate loss and no boundary.
    Tailbiting,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mode::Terminated => f.write_str("terminated"),
            Mode::Tailbiting => f.write_str("tailbiting"),
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "terminated" => Ok(Mode::Terminated),
            "tailbiting" => Ok(Mode::Tailbiting),
            other => Err(Error::invalid(format!("unknown coupling mode `{other}`"))),
        }
    }
}
