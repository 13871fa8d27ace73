//! Delivery-probability modeling for transmit-only wireless sensor nodes
//! that achieve reliability through blind retransmission (the GORMA MAC
//! scheme).
//!
//! The crate provides three layers over shared parameter types:
//!
//! - [`analytic`] — closed-form delivery probabilities against Poisson
//!   background traffic, for a single one-hop population and for QoS groups
//!   with per-group retransmission counts.
//! - [`optimizer`] — exhaustive/monotone searches for retransmission counts:
//!   the one-hop delivery maximum, the two-group least-traffic plan under
//!   QoS constraints, and the largest feasible group size.
//! - [`sim`] — a seeded Monte Carlo collision simulator that cross-validates
//!   the analysis and reports energy cost.
//!
//! Everything is pure and `Send + Sync`; simulation results are bit-stable
//! for a fixed `(seed, inputs)` pair regardless of thread count. The
//! `parallel` feature (on by default) runs Monte Carlo periods and optimizer
//! scans on a rayon pool; without it the same code runs sequentially.

pub mod analytic;
mod error;
pub mod optimizer;
mod params;
pub mod sim;

pub use error::{Error, Result};
pub use params::{
    retrans_from_total, total_copies, QoSGroupSpec, RetransmissionPlan, SystemParams,
    DEFAULT_ENERGY_PER_COPY,
};
