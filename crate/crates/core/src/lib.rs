//! Cooperative four-wave mixing in chains of identical add-drop microrings.
//!
//! The chain is modelled with coupled-mode transfer functions. Each ring `q`
//! emits a pair amplitude `φ_q` that is filtered by the rings downstream of it
//! and pumped by light that already passed `q − 1` drop events. The library
//! computes those amplitudes, their brightness and mutual overlap, and the
//! normalized coincidence rate of the whole array.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fit;
pub mod grid;
pub mod incoherent;
pub mod jsa;
pub mod pump;
pub mod scaling;
pub mod tcmt;
pub mod units;

pub use error::{Error, Result};
