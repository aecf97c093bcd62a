//! The two direct-communication variants.
//!
//! Two-step: both parties prepare phi+ pair batches, exchange one photon
//! sequence each, check both transmissions by sampling, then the sender
//! encodes dibits as Pauli operations and both sides Bell-measure the
//! rewired pairs.
//!
//! Encode-first: the sender prepares her pairs directly in the message Bell
//! states, hides phi+ decoy pairs among them for the check, and publishes
//! her Bell results only after the decoy check passes.
//!
//! Photons 1..4 of each pair slot map to wires 0..3 of that slot's register.
//! Link 0 carries sender-to-receiver traffic (the S2 photons), link 1 the
//! reverse direction (S4).

use serde::Serialize;

use crate::adversary::{transmit, EveRecord};
use crate::bell::{
    bell_to_dibit, decode_qsdc, dibit_to_bell, dibit_to_pauli, dibits_to_bit_string, BellOutcome,
    Dibit,
};
use crate::error::{Error, Result};
use crate::qstate::{StateVector, WireLabel};
use crate::rng::RngStream;

use super::{
    eavesdrop_check, EventKind, PhotonSequence, ProtocolConfig, SequenceLabel, Transcript,
    LinkStats,
};

const PHOTON1: WireLabel = WireLabel(0);
const PHOTON2: WireLabel = WireLabel(1);
const PHOTON3: WireLabel = WireLabel(2);
const PHOTON4: WireLabel = WireLabel(3);

/// Sender-to-receiver transmission (the S2 photons).
pub const LINK_A_TO_B: usize = 0;
/// Receiver-to-sender transmission (the S4 photons).
pub const LINK_B_TO_A: usize = 1;

/// Outcome of one direct-communication session.
#[derive(Debug, Clone, Serialize)]
pub struct QsdcReport {
    /// Abort reason, if the check tripped.
    pub aborted: Option<String>,
    /// Observed error rate per checked direction.
    pub link_stats: Vec<LinkStats>,
    /// Receiver's decoded message (absent on abort).
    pub recovered: Option<Vec<Dibit>>,
    /// Recovered equals intended; defined only when not aborted.
    pub agreement: Option<bool>,
    /// Total checked photon pairs across directions.
    pub checked_pairs: usize,
    /// Message-carrying pair slots consumed.
    pub retained_pairs: usize,
    #[serde(skip)]
    pub eve: EveRecord,
    #[serde(skip)]
    pub transcript: Transcript,
}

impl QsdcReport {
    fn aborted(reason: String, link_stats: Vec<LinkStats>, eve: EveRecord, transcript: Transcript) -> Self {
        let checked_pairs = link_stats.iter().map(|s| s.checked).sum();
        Self {
            aborted: Some(reason),
            link_stats,
            recovered: None,
            agreement: None,
            checked_pairs,
            retained_pairs: 0,
            eve,
            transcript,
        }
    }
}

fn fresh_slots(n: usize) -> Result<Vec<StateVector>> {
    (0..n).map(|_| StateVector::new(4)).collect()
}

/// Two-step session: prepare, exchange, check both directions, encode, swap.
///
/// Checked slots are consumed, so the message needs
/// `n_pairs - ceil(sample_fraction * n_pairs) >= message.len()` per
/// direction; because each direction samples independently, the realized
/// capacity is the slots outside the union of both samples and a session
/// can still fail with `MessageTooLong` if that union is unluckily large.
pub fn run_qsdc_two_step(
    message: &[Dibit],
    config: &ProtocolConfig,
    rng: &mut RngStream,
) -> Result<QsdcReport> {
    config.validate_qsdc()?;
    let n = config.n_pairs;
    let sampled_per_direction = ((config.sample_fraction * n as f64).ceil() as usize).max(1);
    let usable = n - sampled_per_direction;
    if message.len() > usable {
        return Err(Error::MessageTooLong {
            requested: message.len(),
            capacity: usable,
        });
    }

    let mut transcript = Transcript::default();
    let mut eve = EveRecord::default();
    let mut slots = fresh_slots(n)?;

    // step 1: both parties prepare phi+ batches and exchange S2 / S4
    for slot in &mut slots {
        slot.prepare_bell_pair(PHOTON1, PHOTON2, BellOutcome::PhiPlus)?;
        slot.prepare_bell_pair(PHOTON3, PHOTON4, BellOutcome::PhiPlus)?;
    }
    transcript.push(
        "alice",
        EventKind::PreparePairs {
            count: n,
            state: "phi+".into(),
        },
    );
    transcript.push(
        "bob",
        EventKind::PreparePairs {
            count: n,
            state: "phi+".into(),
        },
    );
    for (pos, slot) in slots.iter_mut().enumerate() {
        eve.push(transmit(slot, PHOTON2, &config.channel, LINK_A_TO_B, pos, rng)?);
    }
    transcript.push(
        "alice",
        EventKind::Transmit {
            sequence: SequenceLabel::S2.to_string(),
            link: LINK_A_TO_B,
            count: n,
        },
    );
    for (pos, slot) in slots.iter_mut().enumerate() {
        eve.push(transmit(slot, PHOTON4, &config.channel, LINK_B_TO_A, pos, rng)?);
    }
    transcript.push(
        "bob",
        EventKind::Transmit {
            sequence: SequenceLabel::S4.to_string(),
            link: LINK_B_TO_A,
            count: n,
        },
    );

    // step 2: sample both directions
    let s1 = PhotonSequence::uniform(SequenceLabel::S1, PHOTON1, n);
    let s2 = PhotonSequence::uniform(SequenceLabel::S2, PHOTON2, n);
    let s3 = PhotonSequence::uniform(SequenceLabel::S3, PHOTON3, n);
    let s4 = PhotonSequence::uniform(SequenceLabel::S4, PHOTON4, n);
    let check_ab = eavesdrop_check(
        &mut slots,
        &s1,
        &s2,
        LINK_A_TO_B,
        config.sample_fraction,
        "alice",
        rng,
        &mut transcript,
    )?;
    let check_ba = eavesdrop_check(
        &mut slots,
        &s3,
        &s4,
        LINK_B_TO_A,
        config.sample_fraction,
        "bob",
        rng,
        &mut transcript,
    )?;
    let link_stats = vec![check_ab.stats(), check_ba.stats()];
    for (evaluator, check) in [("bob", &check_ab), ("alice", &check_ba)] {
        transcript.push(
            evaluator,
            EventKind::CheckConfirmed {
                scope: format!("link{}", check.link),
                error_rate: check.error_rate,
                threshold: config.error_threshold,
                passed: check.error_rate <= config.error_threshold,
            },
        );
    }
    for check in [&check_ab, &check_ba] {
        if check.error_rate > config.error_threshold {
            let reason = format!(
                "error rate {:.4} on link{} exceeds threshold {:.4}",
                check.error_rate, check.link, config.error_threshold
            );
            transcript.push("alice", EventKind::Abort { reason: reason.clone() });
            return Ok(QsdcReport::aborted(reason, link_stats, eve, transcript));
        }
    }

    // slots untouched by either sample still hold both intact pairs
    let surviving: Vec<usize> = check_ab
        .surviving
        .iter()
        .copied()
        .filter(|p| check_ba.surviving.contains(p))
        .collect();
    if message.len() > surviving.len() {
        return Err(Error::MessageTooLong {
            requested: message.len(),
            capacity: surviving.len(),
        });
    }

    // steps 3 and 4: encode, measure, publish, decode
    transcript.push(
        "alice",
        EventKind::Encode {
            count: message.len(),
        },
    );
    let mut alice_outcomes = Vec::with_capacity(message.len());
    for (i, &dibit) in message.iter().enumerate() {
        let slot = &mut slots[surviving[i]];
        slot.apply_pauli(PHOTON1, dibit_to_pauli(dibit))?;
        alice_outcomes.push(slot.measure_bell(PHOTON1, PHOTON4, rng)?);
    }
    transcript.push(
        "alice",
        EventKind::BellMeasurement {
            pair: "1-4".into(),
            outcomes: alice_outcomes.clone(),
        },
    );
    transcript.push(
        "alice",
        EventKind::Publish {
            content: "bell_results_1_4".into(),
            outcomes: alice_outcomes.clone(),
        },
    );

    let mut bob_outcomes = Vec::with_capacity(message.len());
    for i in 0..message.len() {
        bob_outcomes.push(slots[surviving[i]].measure_bell(PHOTON2, PHOTON3, rng)?);
    }
    transcript.push(
        "bob",
        EventKind::BellMeasurement {
            pair: "2-3".into(),
            outcomes: bob_outcomes.clone(),
        },
    );
    let recovered: Vec<Dibit> = alice_outcomes
        .iter()
        .zip(&bob_outcomes)
        .map(|(&a, &b)| decode_qsdc(a, b))
        .collect();
    transcript.push(
        "bob",
        EventKind::MessageRecovered {
            dibits: dibits_to_bit_string(&recovered),
        },
    );

    Ok(QsdcReport {
        aborted: None,
        link_stats,
        agreement: Some(recovered == message),
        checked_pairs: check_ab.checked + check_ba.checked,
        retained_pairs: message.len(),
        recovered: Some(recovered),
        eve,
        transcript,
    })
}

/// Number of phi+ decoys hidden among `n_message` encoded pairs so that
/// decoys make up `fraction` of the transmitted sequence.
pub fn decoy_count(n_message: usize, fraction: f64) -> usize {
    (fraction / (1.0 - fraction) * n_message as f64).ceil() as usize
}

/// Encode-first session: the sender prepares message pairs directly in the
/// dibit's Bell state, hides phi+ decoys among them, and only reveals Bell
/// results after the decoy check passes. The receiver contributes one phi+
/// pair per retained message slot; `n_pairs` is ignored because the
/// sequence is sized by the message.
pub fn run_qsdc_encode_first(
    message: &[Dibit],
    config: &ProtocolConfig,
    rng: &mut RngStream,
) -> Result<QsdcReport> {
    config.validate_qsdc()?;
    let n_msg = message.len();
    let n_decoys = decoy_count(n_msg, config.sample_fraction);
    if n_decoys == 0 {
        return Err(Error::NoDecoys);
    }
    let total = n_msg + n_decoys;

    let mut transcript = Transcript::default();
    let mut eve = EveRecord::default();
    let mut slots = fresh_slots(total)?;

    let decoy_positions = rng.sample_positions(total, n_decoys);
    let message_positions: Vec<usize> =
        (0..total).filter(|p| !decoy_positions.contains(p)).collect();

    for (&pos, &dibit) in message_positions.iter().zip(message) {
        slots[pos].prepare_bell_pair(PHOTON1, PHOTON2, dibit_to_bell(dibit))?;
    }
    for &pos in &decoy_positions {
        slots[pos].prepare_bell_pair(PHOTON1, PHOTON2, BellOutcome::PhiPlus)?;
    }
    transcript.push(
        "alice",
        EventKind::PreparePairs {
            count: n_msg,
            state: "message".into(),
        },
    );
    transcript.push(
        "alice",
        EventKind::PreparePairs {
            count: n_decoys,
            state: "phi+ decoy".into(),
        },
    );

    for (pos, slot) in slots.iter_mut().enumerate() {
        eve.push(transmit(slot, PHOTON2, &config.channel, LINK_A_TO_B, pos, rng)?);
    }
    transcript.push(
        "alice",
        EventKind::Transmit {
            sequence: SequenceLabel::S2.to_string(),
            link: LINK_A_TO_B,
            count: total,
        },
    );

    // decoy check: positions revealed, both photons measured in a shared
    // random basis
    let mut bases = Vec::with_capacity(n_decoys);
    let mut sender_bits = Vec::with_capacity(n_decoys);
    let mut receiver_bits = Vec::with_capacity(n_decoys);
    let mut errors = 0usize;
    for &pos in &decoy_positions {
        let basis = if rng.bit() == 0 {
            crate::qstate::MeasurementBasis::Z
        } else {
            crate::qstate::MeasurementBasis::X
        };
        let a = slots[pos].measure_single(PHOTON1, basis, rng)?;
        let b = slots[pos].measure_single(PHOTON2, basis, rng)?;
        if a != b {
            errors += 1;
        }
        bases.push(basis.to_string());
        sender_bits.push(a);
        receiver_bits.push(b);
    }
    let error_rate = errors as f64 / n_decoys as f64;
    transcript.push(
        "alice",
        EventKind::CheckSample {
            link: LINK_A_TO_B,
            positions: decoy_positions.clone(),
            bases,
            sender_bits,
            receiver_bits,
            errors,
            error_rate,
        },
    );
    let passed = error_rate <= config.error_threshold;
    transcript.push(
        "bob",
        EventKind::CheckConfirmed {
            scope: "decoys".into(),
            error_rate,
            threshold: config.error_threshold,
            passed,
        },
    );
    let link_stats = vec![LinkStats {
        link: LINK_A_TO_B,
        checked: n_decoys,
        errors,
        error_rate,
    }];
    if !passed {
        let reason = format!(
            "decoy error rate {:.4} exceeds threshold {:.4}",
            error_rate, config.error_threshold
        );
        transcript.push("alice", EventKind::Abort { reason: reason.clone() });
        return Ok(QsdcReport::aborted(reason, link_stats, eve, transcript));
    }

    // receiver pairs up each retained message photon for the swap
    for &pos in &message_positions {
        slots[pos].prepare_bell_pair(PHOTON3, PHOTON4, BellOutcome::PhiPlus)?;
    }
    transcript.push(
        "bob",
        EventKind::PreparePairs {
            count: n_msg,
            state: "phi+".into(),
        },
    );
    for &pos in &message_positions {
        eve.push(transmit(&mut slots[pos], PHOTON4, &config.channel, LINK_B_TO_A, pos, rng)?);
    }
    transcript.push(
        "bob",
        EventKind::Transmit {
            sequence: SequenceLabel::S4.to_string(),
            link: LINK_B_TO_A,
            count: n_msg,
        },
    );

    let mut alice_outcomes = Vec::with_capacity(n_msg);
    for &pos in &message_positions {
        alice_outcomes.push(slots[pos].measure_bell(PHOTON1, PHOTON4, rng)?);
    }
    transcript.push(
        "alice",
        EventKind::BellMeasurement {
            pair: "1-4".into(),
            outcomes: alice_outcomes.clone(),
        },
    );
    transcript.push(
        "alice",
        EventKind::Publish {
            content: "bell_results_1_4".into(),
            outcomes: alice_outcomes.clone(),
        },
    );

    let mut recovered = Vec::with_capacity(n_msg);
    let mut bob_outcomes = Vec::with_capacity(n_msg);
    for (i, &pos) in message_positions.iter().enumerate() {
        let b = slots[pos].measure_bell(PHOTON2, PHOTON3, rng)?;
        bob_outcomes.push(b);
        // swap algebra: outcomes XOR to the encoded source state
        recovered.push(bell_to_dibit(alice_outcomes[i] ^ b));
    }
    transcript.push(
        "bob",
        EventKind::BellMeasurement {
            pair: "2-3".into(),
            outcomes: bob_outcomes,
        },
    );
    transcript.push(
        "bob",
        EventKind::MessageRecovered {
            dibits: dibits_to_bit_string(&recovered),
        },
    );

    Ok(QsdcReport {
        aborted: None,
        link_stats,
        agreement: Some(recovered == message),
        checked_pairs: n_decoys,
        retained_pairs: n_msg,
        recovered: Some(recovered),
        eve,
        transcript,
    })
}
