//! N-party secret sharing over a ring of EPR pairs.
//!
//! Each party prepares one phi+ pair per round and sends one photon to the
//! next party around the ring. The dealer then selects checking mode (random
//! Z/X comparisons on every transmitted photon) with probability p, or
//! encoding mode (everyone Bell-measures their two held photons) with
//! probability 1-p. Because every source pair is the group identity, the
//! XOR of all round outcomes is phi+, so the non-dealer parties can pool
//! their outcomes to reconstruct the dealer's — but only all of them
//! together.
//!
//! Party i's pair sits on wires (2i, 2i+1); link i carries wire 2i+1 from
//! party i to party i+1 (mod n). Photon numbering in transcripts is wire+1.

use serde::Serialize;

use crate::adversary::{transmit, EveRecord};
use crate::bell::{bell_to_dibit, xor_fold, BellOutcome, Dibit};
use crate::error::{Error, Result};
use crate::qstate::{MeasurementBasis, StateVector, WireLabel, MAX_QUBITS};
use crate::rng::RngStream;

use super::{party_name, EventKind, LinkStats, ProtocolConfig, Transcript};

/// One link comparison inside a checking round.
#[derive(Debug, Clone, Serialize)]
pub struct QssLinkCheck {
    pub link: usize,
    pub announcer: String,
    pub basis: MeasurementBasis,
    pub announcer_bit: u8,
    pub partner_bit: u8,
    pub error: bool,
}

/// A checking round: one Z/X comparison per ring link.
#[derive(Debug, Clone, Serialize)]
pub struct QssCheckRound {
    pub links: Vec<QssLinkCheck>,
    pub errors: usize,
    pub error_rate: f64,
    pub passed: bool,
}

/// An encoding round: every party's Bell outcome plus both views of the key.
#[derive(Debug, Clone, Serialize)]
pub struct QssEncodeRound {
    /// Bell outcomes in party order, dealer first.
    pub outcomes: Vec<BellOutcome>,
    pub dealer_outcome: BellOutcome,
    pub dealer_key: Dibit,
    /// Dealer outcome as reconstructed by the collaborators' XOR.
    pub reconstructed: BellOutcome,
    pub reconstructed_key: Dibit,
}

#[derive(Debug, Clone, Serialize)]
pub enum QssRoundResult {
    Check(QssCheckRound),
    Encode(QssEncodeRound),
}

/// Outcome of a full secret-sharing session.
#[derive(Debug, Clone, Serialize)]
pub struct QssReport {
    pub aborted: Option<String>,
    /// Key dibits as the dealer measured them.
    pub dealer_key: Vec<Dibit>,
    /// Key dibits as the collaborators reconstructed them.
    pub shared_key: Vec<Dibit>,
    /// Keys agree; defined only when not aborted.
    pub agreement: Option<bool>,
    pub rounds_total: usize,
    pub checking_rounds: usize,
    pub encoding_rounds: usize,
    /// Requested key length was reached before `max_rounds`.
    pub complete: bool,
    /// Pooled per-link check tallies across checking rounds.
    pub link_stats: Vec<LinkStats>,
    #[serde(skip)]
    pub eve: EveRecord,
    #[serde(skip)]
    pub transcript: Transcript,
}

fn validate_parties(n_parties: usize) -> Result<()> {
    if n_parties < 2 {
        return Err(Error::TooFewParties { got: n_parties });
    }
    if 2 * n_parties > MAX_QUBITS {
        return Err(Error::RegisterSize {
            n_qubits: 2 * n_parties,
        });
    }
    Ok(())
}

/// One ring round with a fresh scratch transcript. Convenience wrapper
/// around [`run_qss_round_recorded`].
pub fn run_qss_round(
    n_parties: usize,
    config: &ProtocolConfig,
    rng: &mut RngStream,
) -> Result<QssRoundResult> {
    let mut transcript = Transcript::default();
    let mut eve = EveRecord::default();
    run_qss_round_recorded(n_parties, 0, config, rng, &mut transcript, &mut eve)
}

/// One ring round, recording events and eavesdropper taps into the caller's
/// accumulators. `round_index` stamps transmissions and transcript entries.
pub fn run_qss_round_recorded(
    n_parties: usize,
    round_index: usize,
    config: &ProtocolConfig,
    rng: &mut RngStream,
    transcript: &mut Transcript,
    eve: &mut EveRecord,
) -> Result<QssRoundResult> {
    config.validate_qss()?;
    validate_parties(n_parties)?;
    let n = n_parties;

    let mut reg = StateVector::new(2 * n)?;
    for i in 0..n {
        reg.prepare_bell_pair(WireLabel(2 * i), WireLabel(2 * i + 1), BellOutcome::PhiPlus)?;
        transcript.push(
            party_name(i),
            EventKind::PreparePairs {
                count: 1,
                state: "phi+".into(),
            },
        );
    }
    for i in 0..n {
        eve.push(transmit(
            &mut reg,
            WireLabel(2 * i + 1),
            &config.channel,
            i,
            round_index,
            rng,
        )?);
        transcript.push(
            party_name(i),
            EventKind::Transmit {
                sequence: format!("photon{}", 2 * i + 2),
                link: i,
                count: 1,
            },
        );
    }

    let checking = rng.chance(config.check_probability);
    transcript.push(
        party_name(0),
        EventKind::ModeSelected {
            round: round_index,
            mode: if checking { "checking" } else { "encoding" }.into(),
        },
    );

    if checking {
        // link i pair: wire 2i kept by party i, wire 2i+1 held by party i+1
        let mut links = Vec::with_capacity(n);
        let mut errors = 0usize;
        for link in 0..n {
            let keeper = link;
            let receiver = (link + 1) % n;
            // dealer-adjacent links: the receiver announces; elsewhere the
            // dealer picks one of the two holders to guard against a
            // dishonest party
            let announcer = if keeper == 0 || receiver == 0 {
                receiver
            } else if rng.bit() == 0 {
                keeper
            } else {
                receiver
            };
            let partner = if announcer == keeper { receiver } else { keeper };
            let announcer_wire = if announcer == keeper {
                WireLabel(2 * link)
            } else {
                WireLabel(2 * link + 1)
            };
            let partner_wire = if partner == keeper {
                WireLabel(2 * link)
            } else {
                WireLabel(2 * link + 1)
            };
            let basis = if rng.bit() == 0 {
                MeasurementBasis::Z
            } else {
                MeasurementBasis::X
            };
            let announcer_bit = reg.measure_single(announcer_wire, basis, rng)?;
            let partner_bit = reg.measure_single(partner_wire, basis, rng)?;
            let error = announcer_bit != partner_bit;
            if error {
                errors += 1;
            }
            transcript.push(
                party_name(announcer),
                EventKind::LinkCheck {
                    link,
                    basis: basis.to_string(),
                    announcer_bit,
                    partner_bit,
                    error,
                },
            );
            links.push(QssLinkCheck {
                link,
                announcer: party_name(announcer),
                basis,
                announcer_bit,
                partner_bit,
                error,
            });
        }
        let error_rate = errors as f64 / n as f64;
        let passed = error_rate <= config.error_threshold;
        transcript.push(
            party_name(0),
            EventKind::CheckConfirmed {
                scope: format!("round{round_index}"),
                error_rate,
                threshold: config.error_threshold,
                passed,
            },
        );
        Ok(QssRoundResult::Check(QssCheckRound {
            links,
            errors,
            error_rate,
            passed,
        }))
    } else {
        let mut outcomes = Vec::with_capacity(n);
        for i in 0..n {
            let own = WireLabel(2 * i);
            let received = WireLabel(2 * ((i + n - 1) % n) + 1);
            let outcome = reg.measure_bell(own, received, rng)?;
            transcript.push(
                party_name(i),
                EventKind::BellMeasurement {
                    pair: format!("{}-{}", own.0 + 1, received.0 + 1),
                    outcomes: vec![outcome],
                },
            );
            outcomes.push(outcome);
        }
        let dealer_outcome = outcomes[0];
        let dealer_key = bell_to_dibit(dealer_outcome);
        // collaborators pool everything except the dealer's own result
        let reconstructed = xor_fold(&outcomes[1..]);
        let reconstructed_key = bell_to_dibit(reconstructed);
        transcript.push(
            party_name(0),
            EventKind::KeyRound {
                round: round_index,
                dealer_outcome,
                key: dealer_key,
            },
        );
        Ok(QssRoundResult::Encode(QssEncodeRound {
            outcomes,
            dealer_outcome,
            dealer_key,
            reconstructed,
            reconstructed_key,
        }))
    }
}

/// Repeat rounds until `key_dibits` encoding rounds succeed, a checking
/// round trips the threshold (abort), or `max_rounds` elapse (no-key
/// report). Expected rounds to completion is about
/// `key_dibits / (1 - check_probability)`.
pub fn run_qss_session(
    n_parties: usize,
    key_dibits: usize,
    config: &ProtocolConfig,
    rng: &mut RngStream,
) -> Result<QssReport> {
    config.validate_qss()?;
    validate_parties(n_parties)?;

    let mut transcript = Transcript::default();
    let mut eve = EveRecord::default();
    let mut dealer_key = Vec::with_capacity(key_dibits);
    let mut shared_key = Vec::with_capacity(key_dibits);
    let mut checking_rounds = 0usize;
    let mut rounds_total = 0usize;
    let mut link_checked = vec![0usize; n_parties];
    let mut link_errors = vec![0usize; n_parties];
    let mut aborted = None;

    while dealer_key.len() < key_dibits && rounds_total < config.max_rounds {
        let round = run_qss_round_recorded(
            n_parties,
            rounds_total,
            config,
            rng,
            &mut transcript,
            &mut eve,
        )?;
        rounds_total += 1;
        match round {
            QssRoundResult::Check(check) => {
                checking_rounds += 1;
                for link in &check.links {
                    link_checked[link.link] += 1;
                    if link.error {
                        link_errors[link.link] += 1;
                    }
                }
                if !check.passed {
                    let reason = format!(
                        "checking round {} error rate {:.4} exceeds threshold {:.4}",
                        rounds_total - 1,
                        check.error_rate,
                        config.error_threshold
                    );
                    transcript.push(party_name(0), EventKind::Abort { reason: reason.clone() });
                    aborted = Some(reason);
                    break;
                }
            }
            QssRoundResult::Encode(enc) => {
                dealer_key.push(enc.dealer_key);
                shared_key.push(enc.reconstructed_key);
            }
        }
    }

    let link_stats = (0..n_parties)
        .map(|link| LinkStats {
            link,
            checked: link_checked[link],
            errors: link_errors[link],
            error_rate: if link_checked[link] == 0 {
                0.0
            } else {
                link_errors[link] as f64 / link_checked[link] as f64
            },
        })
        .collect();
    let complete = dealer_key.len() == key_dibits;
    let agreement = if aborted.is_none() {
        Some(dealer_key == shared_key)
    } else {
        None
    };
    Ok(QssReport {
        aborted,
        dealer_key,
        shared_key,
        agreement,
        rounds_total,
        checking_rounds,
        encoding_rounds: rounds_total
            - checking_rounds,
        complete,
        link_stats,
        eve,
        transcript,
    })
}
