//! Simulation and verification toolkit for many-server queues in the
//! Halfin–Whitt regime under sampled-rank routing.
//!
//! The crate is organized bottom-up:
//!
//! - [`scenario`]: server-rate profiles, arrival laws, limit coefficients
//! - [`sampling`]: sampled subset, service-time samples, rank permutation
//! - [`sim`]: the event-driven queue simulator and its path records
//! - [`diffusion`]: Euler–Maruyama for the limit diffusion, path scaling,
//!   Monte-Carlo marginals
//! - [`analysis`]: KS distance, idle-time metric, ranking-error bounds,
//!   pathwise dominance audit, structural audits, policy comparison
//! - [`config`]: scenario files
//! - [`experiment`]: per-size setup and single replications
//! - [`replicate`]: order-preserving parallel replication
//! - [`seed`]: reproducible per-replication random streams

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
pub mod diffusion;
pub mod error;
pub mod experiment;
pub mod replicate;
pub mod sampling;
pub mod scenario;
pub mod seed;
pub mod sim;

pub use error::{Error, Result};
