//! Honest-party state machines: the two direct-communication variants and
//! the N-party secret-sharing ring, with their sampling-based eavesdropping
//! checks, mode selection, and event transcripts.
//!
//! Sessions model block transmission: photon sequences travel as wholes and
//! the channel acts on each photon in transit. Every pair slot lives in its
//! own small register (slots never interact), which keeps sessions with
//! hundreds of pairs exact and cheap.

pub mod qsdc;
pub mod qss;

pub use qsdc::{run_qsdc_encode_first, run_qsdc_two_step, QsdcReport};
pub use qss::{
    run_qss_round, run_qss_session, QssCheckRound, QssEncodeRound, QssReport, QssRoundResult,
};

use serde::{Deserialize, Serialize};

use crate::adversary::{ChannelKind, ChannelModel};
use crate::bell::{BellOutcome, Dibit};
use crate::error::{Error, Result};
use crate::qstate::{MeasurementBasis, StateVector, WireLabel};
use crate::rng::RngStream;

/// Default abort threshold on the observed check-error rate.
pub const DEFAULT_ERROR_THRESHOLD: f64 = 0.02;

/// Default fraction of transmitted photons sampled for checking.
pub const DEFAULT_SAMPLE_FRACTION: f64 = 0.25;

/// Fixed default seed so bare invocations are reproducible.
pub const DEFAULT_SEED: u64 = 1729;

/// Session parameters shared by all protocols.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    /// Message/key EPR pairs per session (per party, per direction).
    pub n_pairs: usize,
    /// Fraction of transmitted photons checked, per direction (QSDC).
    pub sample_fraction: f64,
    /// Probability of a checking round (QSS).
    pub check_probability: f64,
    /// Abort bound on the observed check-error rate.
    pub error_threshold: f64,
    pub channel: ChannelModel,
    pub seed: u64,
    /// Hard stop for QSS sessions that never leave checking mode.
    pub max_rounds: usize,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            n_pairs: 64,
            sample_fraction: DEFAULT_SAMPLE_FRACTION,
            check_probability: 0.5,
            error_threshold: DEFAULT_ERROR_THRESHOLD,
            channel: ChannelModel::ideal(),
            seed: DEFAULT_SEED,
            max_rounds: 10_000,
        }
    }
}

impl ProtocolConfig {
    fn validate_common(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.error_threshold) {
            return Err(Error::InvalidConfig {
                field: "error_threshold",
                reason: format!("{} not in [0, 1)", self.error_threshold),
            });
        }
        if let ChannelKind::Depolarizing { noise_prob } = self.channel.kind {
            if !(0.0..=1.0).contains(&noise_prob) {
                return Err(Error::InvalidConfig {
                    field: "channel.noise_prob",
                    reason: format!("{noise_prob} not in [0, 1]"),
                });
            }
        }
        Ok(())
    }

    pub fn validate_qsdc(&self) -> Result<()> {
        self.validate_common()?;
        if self.n_pairs == 0 {
            return Err(Error::InvalidConfig {
                field: "n_pairs",
                reason: "must be at least 1".into(),
            });
        }
        if !(self.sample_fraction > 0.0 && self.sample_fraction < 1.0) {
            return Err(Error::FractionOutOfRange {
                value: self.sample_fraction,
            });
        }
        Ok(())
    }

    pub fn validate_qss(&self) -> Result<()> {
        self.validate_common()?;
        if !(0.0..=1.0).contains(&self.check_probability) {
            return Err(Error::InvalidConfig {
                field: "check_probability",
                reason: format!("{} not in [0, 1]", self.check_probability),
            });
        }
        if self.max_rounds == 0 {
            return Err(Error::InvalidConfig {
                field: "max_rounds",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }
}

/// Conventional party names: dealer first, then ring order.
pub fn party_name(i: usize) -> String {
    match i {
        0 => "alice".into(),
        1 => "bob".into(),
        2 => "charlie".into(),
        3 => "dick".into(),
        n => format!("party{n}"),
    }
}

// ---------------------------------------------------------------------------
// Photon bookkeeping
// ---------------------------------------------------------------------------

/// Which of the four ordered sequences a photon belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SequenceLabel {
    S1,
    S2,
    S3,
    S4,
}

impl std::fmt::Display for SequenceLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SequenceLabel::S1 => "S1",
            SequenceLabel::S2 => "S2",
            SequenceLabel::S3 => "S3",
            SequenceLabel::S4 => "S4",
        };
        write!(f, "{s}")
    }
}

/// One photon: a wire within the register of one pair slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhotonRef {
    pub slot: usize,
    pub wire: WireLabel,
}

/// An ordered photon sequence; paired sequences have equal length and
/// address disjoint wires.
#[derive(Debug, Clone)]
pub struct PhotonSequence {
    pub label: SequenceLabel,
    pub photons: Vec<PhotonRef>,
}

impl PhotonSequence {
    /// Sequence whose slot-`i` photon sits on the same wire in every slot.
    pub fn uniform(label: SequenceLabel, wire: WireLabel, n_slots: usize) -> Self {
        Self {
            label,
            photons: (0..n_slots)
                .map(|slot| PhotonRef { slot, wire })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.photons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.photons.is_empty()
    }
}

// ---------------------------------------------------------------------------
// Transcript
// ---------------------------------------------------------------------------

/// Ordered record of protocol events. Serialized one event per line, each a
/// self-describing JSON object with stable field names.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Transcript {
    pub events: Vec<Event>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Event {
    pub party: String,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum EventKind {
    PreparePairs {
        count: usize,
        state: String,
    },
    Transmit {
        sequence: String,
        link: usize,
        count: usize,
    },
    /// Block check: sampled positions, bases, and both parties' outcomes.
    CheckSample {
        link: usize,
        positions: Vec<usize>,
        bases: Vec<String>,
        sender_bits: Vec<u8>,
        receiver_bits: Vec<u8>,
        errors: usize,
        error_rate: f64,
    },
    /// Security confirmation; publications must come after these.
    CheckConfirmed {
        scope: String,
        error_rate: f64,
        threshold: f64,
        passed: bool,
    },
    ModeSelected {
        round: usize,
        mode: String,
    },
    /// Single-pair check on one ring link.
    LinkCheck {
        link: usize,
        basis: String,
        announcer_bit: u8,
        partner_bit: u8,
        error: bool,
    },
    Encode {
        count: usize,
    },
    BellMeasurement {
        pair: String,
        outcomes: Vec<BellOutcome>,
    },
    Publish {
        content: String,
        outcomes: Vec<BellOutcome>,
    },
    MessageRecovered {
        dibits: String,
    },
    KeyRound {
        round: usize,
        dealer_outcome: BellOutcome,
        key: Dibit,
    },
    Abort {
        reason: String,
    },
}

impl Transcript {
    pub fn push(&mut self, party: impl Into<String>, kind: EventKind) {
        self.events.push(Event {
            party: party.into(),
            kind,
        });
    }

    /// One compact JSON object per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for event in &self.events {
            out.push_str(&serde_json::to_string(event).expect("transcript events serialize"));
            out.push('\n');
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Shared check machinery and report pieces
// ---------------------------------------------------------------------------

/// Per-direction (or per-link) check tallies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkStats {
    pub link: usize,
    pub checked: usize,
    pub errors: usize,
    pub error_rate: f64,
}

/// Result of one sampling check over a transmitted sequence.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub link: usize,
    pub checked: usize,
    pub errors: usize,
    pub error_rate: f64,
    /// Slot positions destroyed by the check.
    pub sampled: Vec<usize>,
    /// Slot positions left intact for later use.
    pub surviving: Vec<usize>,
}

impl CheckOutcome {
    pub fn stats(&self) -> LinkStats {
        LinkStats {
            link: self.link,
            checked: self.checked,
            errors: self.errors,
            error_rate: self.error_rate,
        }
    }
}

/// Sampling-based eavesdropping check over one transmitted sequence.
///
/// A random ceil(fraction * n) subset of positions is sampled; at each, a
/// uniformly random basis (Z or X) is chosen and both partner photons are
/// measured in it. Source pairs are phi+, which correlates perfectly in both
/// bases, so any mismatch counts as an error. Sampled slots are consumed;
/// the remaining positions are returned for later use.
#[allow(clippy::too_many_arguments)]
pub fn eavesdrop_check(
    slots: &mut [StateVector],
    sender: &PhotonSequence,
    receiver: &PhotonSequence,
    link: usize,
    fraction: f64,
    sender_party: &str,
    rng: &mut RngStream,
    transcript: &mut Transcript,
) -> Result<CheckOutcome> {
    if sender.is_empty() || receiver.is_empty() {
        return Err(Error::EmptySequence);
    }
    if sender.len() != receiver.len() {
        return Err(Error::SequenceLengthMismatch {
            left: sender.len(),
            right: receiver.len(),
        });
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::FractionOutOfRange { value: fraction });
    }
    let n = sender.len();
    let k = ((fraction * n as f64).ceil() as usize).max(1);
    let sampled = rng.sample_positions(n, k);

    let mut bases = Vec::with_capacity(k);
    let mut sender_bits = Vec::with_capacity(k);
    let mut receiver_bits = Vec::with_capacity(k);
    let mut errors = 0usize;
    for &pos in &sampled {
        let basis = if rng.bit() == 0 {
            MeasurementBasis::Z
        } else {
            MeasurementBasis::X
        };
        let s_ref = sender.photons[pos];
        let r_ref = receiver.photons[pos];
        let s_bit = slots[s_ref.slot].measure_single(s_ref.wire, basis, rng)?;
        let r_bit = slots[r_ref.slot].measure_single(r_ref.wire, basis, rng)?;
        if s_bit != r_bit {
            errors += 1;
        }
        bases.push(basis.to_string());
        sender_bits.push(s_bit);
        receiver_bits.push(r_bit);
    }
    let error_rate = errors as f64 / k as f64;
    transcript.push(
        sender_party,
        EventKind::CheckSample {
            link,
            positions: sampled.clone(),
            bases,
            sender_bits,
            receiver_bits,
            errors,
            error_rate,
        },
    );

    let surviving = (0..n).filter(|p| !sampled.contains(p)).collect();
    Ok(CheckOutcome {
        link,
        checked: k,
        errors,
        error_rate,
        sampled,
        surviving,
    })
}
