//! Enumerative sphere shaping (ESS) and partial ESS inside a probabilistic
//! amplitude shaping (PAS) link.
//!
//! The crate is organised bottom-up:
//!
//! - [`constellation`]: ASK alphabets, Gray amplitude labels, energy sets.
//! - [`distributions`]: Maxwell-Boltzmann and partial MB fits, rate loss,
//!   shaping gain and constant-composition analytics.
//! - [`air`]: AWGN capacity, bit-metric decoding rates and gap-to-capacity
//!   sweeps.
//! - [`ess`]: path-count trellises (exact and bounded precision),
//!   shaping/deshaping and complexity accounting.
//! - [`pess`]: the partial shaper that splices uniform bit-levels under an
//!   enumerative shaper running on a reduced alphabet.
//! - [`fec`]: the 648-bit IEEE 802.11 quasi-cyclic LDPC codes.
//! - [`paschain`]: the end-to-end transceiver and Monte Carlo FER harness.
//! - [`reports`]: table and curve generators used by the command-line tool.

pub mod air;
pub mod constellation;
pub mod distributions;
pub mod ess;
pub mod fec;
pub mod paschain;
pub mod pess;
mod quadrature;
pub mod reports;

pub use quadrature::GaussHermite;

/// Errors produced by the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("index out of range: {0}")]
    InvalidIndex(String),
    #[error("invalid sequence: {0}")]
    InvalidSequence(String),
    #[error("precision too small: {0}")]
    PrecisionTooSmall(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("malformed data: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
