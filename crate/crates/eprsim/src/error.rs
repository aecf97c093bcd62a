//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Register sizes are bounded so a dense amplitude vector stays affordable.
    #[error("register size {n_qubits} outside supported range 1..=24")]
    RegisterSize { n_qubits: usize },

    #[error("wire {wire} out of range for a {n_qubits}-qubit register")]
    WireOutOfRange { wire: usize, n_qubits: usize },

    #[error("duplicate wire {wire} where two distinct wires are required")]
    DuplicateWire { wire: usize },

    /// Bell-pair preparation requires both target qubits in |0> and
    /// unentangled with the rest of the register.
    #[error("wires {a} and {b} are not in a clean |00> product state")]
    NotGroundState { a: usize, b: usize },

    /// Measurement branch probabilities must sum to one; anything else means
    /// the register was corrupted upstream.
    #[error("outcome probabilities sum to {total}, deviating from 1 by more than 1e-9")]
    ProbabilityInconsistent { total: f64 },

    #[error("photon sequence is empty")]
    EmptySequence,

    #[error("sequence lengths differ: {left} vs {right}")]
    SequenceLengthMismatch { left: usize, right: usize },

    #[error("sampling fraction {value} outside open interval (0, 1)")]
    FractionOutOfRange { value: f64 },

    #[error("message of {requested} dibits exceeds capacity of {capacity} retained pairs")]
    MessageTooLong { requested: usize, capacity: usize },

    #[error("no decoy pairs requested; the eavesdropping check needs at least one")]
    NoDecoys,

    #[error("{got} collaborators given; secret sharing needs at least 2")]
    TooFewCollaborators { got: usize },

    #[error("{got} parties given; the ring needs at least 2")]
    TooFewParties { got: usize },

    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error("invalid experiment spec field `{field}`: {reason}")]
    InvalidSpec { field: &'static str, reason: String },
}
