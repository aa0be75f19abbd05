//! Fully asynchronous unsourced random access over the real Gaussian MAC
//! using on-off division multiple access (ODMA).
//!
//! Users split a `B`-bit message into a pattern selector and a polar
//! payload, spread the BPSK codeword over a sparse on-off pattern and start
//! transmitting at arbitrary integer offsets. The receiver runs a double
//! sliding window: inside each inner window it jointly estimates start times
//! and patterns without a preamble, decodes candidates with a CRC-aided SCL
//! polar decoder and cancels every success from the received signal.
//!
//! Modules, bottom-up:
//!
//! - [`config`]: system parameters, validation, Eb/N0 conversion.
//! - [`polar`]: 5G-style polar construction, CRC, encoder and SCL decoder.
//! - [`odma`]: pattern matrix, power diversity, preamble, packet assembly.
//! - [`channel`]: Poisson arrivals and the asynchronous Gaussian MAC.
//! - [`detector`]: pattern-energy and preamble-correlation front ends.
//! - [`receiver`]: inner/outer sliding-window decoding with SIC.
//! - [`harness`]: Monte Carlo trials, sweeps, minimum Eb/N0 search, CSV output.

pub mod bits;
pub mod channel;
pub mod config;
pub mod detector;
pub mod error;
pub mod exec;
pub mod harness;
pub mod odma;
pub mod polar;
pub mod receiver;

pub use bits::Message;
pub use config::{ArrivalMode, DetectorMode, EnergyMetric, SystemConfig};
pub use error::{Error, Result};
pub use exec::Execution;
