//! Link-level simulation of TDS-OFDM (time domain synchronous OFDM) with
//! PN-based and data-aided channel estimation.
//!
//! The transmit chain inserts a known pseudo-noise guard interval between
//! OFDM data blocks. The receiver estimates the channel from the guard
//! interval, removes it, converts the zero-padded block to a circular one by
//! overlap-and-add and then iteratively refines the estimate using soft
//! symbols rebuilt from demapper LLRs:
//!
//! ```text
//! sequences ─▶ phy (assemble) ─▶ channel (propagate) ─▶ pn_estimator
//!                                                          │
//!        ┌──────── combiner::Receiver (iterations) ◀───────┘
//!        │  remove_pn ─▶ ola ─▶ equalize ─▶ soft_rebuild ─▶ refiners ─▶ combine
//!        └──────────────────────────────────────────────────────────────┘
//! ```
//!
//! [`harness`] wraps everything into reproducible Monte-Carlo sweeps.

pub mod channel;
pub mod combiner;
pub mod dft;
pub mod error;
pub mod grid;
pub mod harness;
pub mod phy;
pub mod pn_estimator;
pub mod refiners;
pub mod sequences;
pub mod soft_rebuild;

pub use error::{Error, Result};
pub use grid::{Grid, GridRole};

/// Complex sample type used throughout the crate.
pub type C64 = num_complex::Complex<f64>;
