//! Exact simulator for EPR-pair secure communication protocols built on
//! entanglement swapping: a direct-communication scheme in two variants and
//! an N-party secret-sharing ring, together with the eavesdropping checks
//! that protect them.
//!
//! The crate deliberately carries two independent implementations of the
//! same physics:
//!
//! * [`bell`] — closed-form Bell-label algebra (a Klein four-group under
//!   XOR) with the published message and key tables;
//! * [`qstate`] — a dense state-vector engine that prepares, gates, and
//!   measures the actual registers.
//!
//! Each side is the other's oracle, and [`harness::verify_tables`] replays
//! the published tables through both routes. [`protocols`] runs the honest
//! parties, [`adversary`] supplies the channel attacks, and [`harness`]
//! aggregates Monte-Carlo trials into reports.
//!
//! See the `examples/` directory for one runnable walkthrough per
//! capability, or the `eprsim` binary for the batch CLI.

pub mod adversary;
pub mod bell;
pub mod error;
pub mod harness;
pub mod protocols;
pub mod qstate;
pub mod rng;

pub use error::{Error, Result};
