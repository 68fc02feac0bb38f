//! Average Age of Information (AoI) of one-hop and two-hop status-update
//! links, with and without ARQ on the relay hop.
//!
//! Every quantity is computed three independent ways:
//!
//! * [`analytic`]: closed-form average AoI and renewal moments,
//! * [`chain`]: first-passage moments of the protocol's absorbing Markov
//!   chain, solved numerically for any finite chain,
//! * [`sim`]: a seeded slot-level Monte-Carlo simulation of the MAC protocol.
//!
//! [`xp`] ties them together into verification runs, parameter sweeps, CSV
//! tables and SVG plots.

// `!(x <= tol)` is used on purpose so that NaN fails every check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod chain;
mod error;
mod scheme;
pub mod sim;
pub mod xp;

pub use analytic::{AoIResult, LinkParams, SchemeMoments};
pub use chain::{ChainKind, ChainSpec, HittingMoments};
pub use error::{Error, Result};
pub use scheme::Scheme;
pub use sim::{RenewalCycle, SimConfig, SimStats};
pub use xp::{SweepRow, SweepSpec};

/// Crate version, embedded in every emitted artifact.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
