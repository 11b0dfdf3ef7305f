//! Key-rate lower bounds for SARG04 with an untrusted source.
//!
//! The pipeline runs from a photon-number distribution at the source, through
//! an active or passive monitor ([`monitor`]), to bounds on the 1- and
//! 2-photon gains ([`decoy`]) and finally Case-1/Case-2 key rates
//! ([`keyrate`]). [`experiment`] sweeps distance, data size and detector
//! noise from a TOML [`config`].
// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod config;
pub mod decoy;
pub mod error;
pub mod experiment;
pub mod keyrate;
pub mod math;
pub mod monitor;
pub mod pnd;

pub use error::{Error, Result};
