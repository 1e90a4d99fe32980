//! Performance model for a full-duplex cooperative cognitive radio network
//! with wireless energy harvesting.
//!
//! A primary transmitter (PT) sends to a primary receiver (PR). A secondary
//! transmitter (ST) relays the primary signal with decode-and-forward while a
//! hybrid access point (HAP) powers the ST over the air; the ST banks the
//! harvested energy in a finite battery and spends `E_t` of it whenever it can
//! afford a transmission (mode I), otherwise it keeps harvesting through the
//! whole block (mode II). Fading on every link is Nakagami-m, so all channel
//! power gains are gamma distributed.
//!
//! The crate offers two independent engines over the same scenario
//! description:
//!
//! * an analytic engine ([`analytic`], [`markov`], [`throughput`]) that
//!   discretizes the battery into `L` levels, builds the exact block-to-block
//!   transition matrix of the battery chain, solves for its stationary
//!   distribution and evaluates closed-form throughput/outage expressions;
//! * a Monte Carlo engine ([`montecarlo`]) that simulates the network block by
//!   block with a continuous (or, for cross-checks, discretized) battery.
//!
//! The two engines share nothing but the scenario parameters, which is what
//! makes their agreement a meaningful validation. [`reference`] holds slow,
//! independent implementations (series, quadrature, convolution) used by the
//! test suites to pin down the fast paths.

pub mod analytic;
pub mod fading;
pub mod markov;
pub mod montecarlo;
pub mod params;
pub mod reference;
pub mod specfun;
pub mod throughput;

use std::fmt;

/// Crate-wide error type.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Invalid or inconsistent configuration input.
    Config(String),
    /// Level or link index outside its valid range.
    OutOfRange(String),
    /// An iterative numeric routine failed to converge.
    Convergence(String),
    /// A transition-matrix row does not sum to one.
    RowSum { row: usize, sum: f64 },
    /// The stationary solve produced something that is not a distribution.
    Singular(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Config(msg) => write!(f, "config error: {msg}"),
            Error::OutOfRange(msg) => write!(f, "out of range: {msg}"),
            Error::Convergence(msg) => write!(f, "convergence failure: {msg}"),
            Error::RowSum { row, sum } => {
                write!(f, "transition row {row} sums to {sum}, expected 1")
            }
            Error::Singular(msg) => write!(f, "stationary solve failed: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
