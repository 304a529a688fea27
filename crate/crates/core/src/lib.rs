//! Desk-scale traffic-control benchmarking toolkit.
//!
//! Two plants (a cell-transmission freeway corridor and a store-and-forward
//! urban network), the classical ramp-metering and signal controllers that act
//! on them, and the replication / calibration / hypothesis-testing machinery
//! used to compare controllers under stochastic demand.

// `!(x > 0.0)` style checks are deliberate: they reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod experiments;
pub mod freeway;
pub mod ledger;
pub mod ramp_control;
pub mod signal_control;
pub mod stats;
pub mod urban;

pub use error::{Error, Result};

/// Toolkit version embedded in every report header.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
