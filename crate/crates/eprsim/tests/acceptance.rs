//! Acceptance suite: one test per published claim, each printing a
//! pass/fail line (visible with `cargo test --test acceptance -- --nocapture`).
//!
//! Statistical checks use 3-sigma binomial bands or the stated absolute
//! tolerances; exact checks use the engine's deterministic enumeration.

use eprsim::adversary::{detection_probability, ChannelModel, InterceptStrategy, LinkMask};
use eprsim::bell::{xor_fold, BellOutcome};
use eprsim::harness::{run_trials, verify_tables, ExperimentSpec, Protocol, ReportFormat};
use eprsim::protocols::{run_qss_round, run_qss_session, ProtocolConfig, QssRoundResult};
use eprsim::qstate::{StateVector, WireLabel};
use eprsim::rng::RngStream;

fn criterion(number: u32, name: &str, ok: bool, detail: &str) {
    println!(
        "criterion {number} ({name}): {}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {number} ({name}) failed: {detail}");
}

fn base_spec(protocol: Protocol) -> ExperimentSpec {
    ExperimentSpec {
        protocol,
        trials: 1,
        config: ProtocolConfig::default(),
        n_parties: None,
        message_hex: None,
        message_dibits: None,
        key_dibits: None,
        format: ReportFormat::Json,
    }
}

#[test]
fn criterion_1_message_table_reproduction() {
    let report = verify_tables().unwrap();
    let check = &report.message_table;
    criterion(
        1,
        "message table, algebra + exhaustive 4-qubit simulation",
        check.all_match() && check.cells_matched == 16,
        &format!(
            "{}/16 matched, mismatches: {:?}",
            check.cells_matched, check.mismatches
        ),
    );
}

#[test]
fn criterion_2_key_table_reproduction() {
    let report = verify_tables().unwrap();
    let check = &report.key_table;
    criterion(
        2,
        "key table, algebra + exhaustive 6-qubit simulation",
        check.all_match() && check.cells_matched == 16,
        &format!(
            "{}/16 matched, mismatches: {:?}",
            check.cells_matched, check.mismatches
        ),
    );
}

#[test]
fn criterion_3_swap_probabilities() {
    // phi+ x phi+: the four correlated outcome pairs appear at 1/4 each,
    // the twelve uncorrelated ones never
    let n = 40_000usize;
    let mut rng = RngStream::new(301);
    let mut counts = [[0usize; 4]; 4];
    for _ in 0..n {
        let mut s = StateVector::new(4).unwrap();
        s.prepare_bell_pair(WireLabel(0), WireLabel(1), BellOutcome::PhiPlus)
            .unwrap();
        s.prepare_bell_pair(WireLabel(2), WireLabel(3), BellOutcome::PhiPlus)
            .unwrap();
        let one_four = s.measure_bell(WireLabel(0), WireLabel(3), &mut rng).unwrap();
        let two_three = s.measure_bell(WireLabel(1), WireLabel(2), &mut rng).unwrap();
        counts[one_four.index()][two_three.index()] += 1;
    }
    let sigma = (0.25 * 0.75 / n as f64).sqrt();
    let mut ok = true;
    let mut detail = String::new();
    for a in BellOutcome::ALL {
        for b in BellOutcome::ALL {
            let freq = counts[a.index()][b.index()] as f64 / n as f64;
            if a == b {
                if (freq - 0.25).abs() > 3.0 * sigma {
                    ok = false;
                    detail.push_str(&format!("({a},{b}) frequency {freq}; "));
                }
            } else if counts[a.index()][b.index()] != 0 {
                ok = false;
                detail.push_str(&format!(
                    "uncorrelated ({a},{b}) occurred {} times; ",
                    counts[a.index()][b.index()]
                ));
            }
        }
    }
    criterion(3, "swap outcome probabilities 1/4, 40k samples", ok, &detail);
}

#[test]
fn criterion_4_sixteen_state_uniformity() {
    // chi-squared goodness of fit over the 16 (second, third) outcome pairs,
    // 15 dof, alpha = 0.01
    let rounds = 16_000usize;
    let config = ProtocolConfig {
        check_probability: 0.0,
        ..ProtocolConfig::default()
    };
    let mut rng = RngStream::new(401);
    let mut counts = [[0usize; 4]; 4];
    for _ in 0..rounds {
        match run_qss_round(3, &config, &mut rng).unwrap() {
            QssRoundResult::Encode(enc) => {
                assert_eq!(enc.outcomes[1] ^ enc.outcomes[2], enc.dealer_outcome);
                counts[enc.outcomes[1].index()][enc.outcomes[2].index()] += 1;
            }
            QssRoundResult::Check(_) => unreachable!("p = 0"),
        }
    }
    let expected = rounds as f64 / 16.0;
    let chi2: f64 = counts
        .iter()
        .flatten()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum();
    // upper 1% quantile of chi-squared with 15 degrees of freedom
    let critical = 30.5779;
    criterion(
        4,
        "sixteen joint states uniform at 1/16 (chi-squared, 16k rounds)",
        chi2 < critical,
        &format!("chi2 = {chi2:.2}, critical = {critical}"),
    );
}

#[test]
fn criterion_5_qsdc_end_to_end_correctness() {
    let mut ok = true;
    let mut detail = String::new();
    for (protocol, n_pairs) in [(Protocol::QsdcTwoStep, 700), (Protocol::QsdcEncodeFirst, 64)] {
        let spec = ExperimentSpec {
            trials: 100,
            config: ProtocolConfig {
                n_pairs,
                seed: 501,
                ..ProtocolConfig::default()
            },
            message_dibits: Some(256),
            ..base_spec(protocol)
        };
        let outcome = run_trials(&spec).unwrap();
        let stats = &outcome.report.stats;
        if stats.agreement_rate != Some(1.0) || stats.abort_rate != 0.0 {
            ok = false;
            detail.push_str(&format!(
                "{protocol:?}: agreement {:?}, aborts {}; ",
                stats.agreement_rate, stats.abort_rate
            ));
        }
    }
    criterion(
        5,
        "ideal-channel correctness, both variants, 256-dibit messages x100",
        ok,
        &detail,
    );
}

#[test]
fn criterion_6_detection_rates() {
    let mut ok = true;
    let mut detail = String::new();

    // intercept-resend on one link at a time, >= 10k checked pairs each
    let ir_cases = [
        (InterceptStrategy::AlwaysZ, 0usize),
        (InterceptStrategy::AlwaysX, 1usize),
        (InterceptStrategy::RandomZx, 0usize),
    ];
    for (strategy, link) in ir_cases {
        let channel = ChannelModel::intercept_resend(strategy, LinkMask::Only(vec![link]));
        let analytic = detection_probability(&channel);
        let spec = ExperimentSpec {
            trials: 200,
            config: ProtocolConfig {
                n_pairs: 100,
                sample_fraction: 0.5,
                error_threshold: 0.9,
                channel,
                seed: 601 + link as u64,
                ..ProtocolConfig::default()
            },
            message_dibits: Some(0),
            ..base_spec(Protocol::QsdcTwoStep)
        };
        let outcome = run_trials(&spec).unwrap();
        let stats = &outcome.report.stats;
        if stats.checked_pairs < 10_000 || (stats.detection_rate - analytic).abs() > 0.02 {
            ok = false;
            detail.push_str(&format!(
                "{strategy:?} link {link}: rate {:.4} over {} pairs (want {analytic} +- 0.02); ",
                stats.detection_rate, stats.checked_pairs
            ));
        }
    }

    // intercept-resend on a ring link of the secret-sharing protocol
    let channel =
        ChannelModel::intercept_resend(InterceptStrategy::RandomZx, LinkMask::Only(vec![1]));
    let analytic = detection_probability(&channel);
    let spec = ExperimentSpec {
        trials: 100,
        config: ProtocolConfig {
            check_probability: 1.0,
            error_threshold: 0.98,
            channel,
            max_rounds: 100,
            seed: 611,
            ..ProtocolConfig::default()
        },
        n_parties: Some(3),
        key_dibits: Some(1),
        ..base_spec(Protocol::Qss)
    };
    let outcome = run_trials(&spec).unwrap();
    let stats = &outcome.report.stats;
    if stats.checked_pairs < 10_000 || (stats.detection_rate - analytic).abs() > 0.02 {
        ok = false;
        detail.push_str(&format!(
            "qss ring link: rate {:.4} over {} pairs; ",
            stats.detection_rate, stats.checked_pairs
        ));
    }

    // depolarizing noise at eta in {0.2, 0.6, 1.0}: detection eta/2
    for eta in [0.2, 0.6, 1.0] {
        let channel = ChannelModel::depolarizing(eta, LinkMask::All);
        let analytic = detection_probability(&channel);
        let spec = ExperimentSpec {
            trials: 100,
            config: ProtocolConfig {
                n_pairs: 100,
                sample_fraction: 0.5,
                error_threshold: 0.9,
                channel,
                seed: 621 + (eta * 10.0) as u64,
                ..ProtocolConfig::default()
            },
            message_dibits: Some(0),
            ..base_spec(Protocol::QsdcTwoStep)
        };
        let outcome = run_trials(&spec).unwrap();
        let stats = &outcome.report.stats;
        if stats.checked_pairs < 10_000 || (stats.detection_rate - analytic).abs() > 0.02 {
            ok = false;
            detail.push_str(&format!(
                "depol({eta}): rate {:.4} over {} pairs (want {analytic} +- 0.02); ",
                stats.detection_rate, stats.checked_pairs
            ));
        }
    }

    criterion(
        6,
        "detection frequency matches closed forms within 0.02",
        ok,
        &detail,
    );
}

#[test]
fn criterion_7_ring_invariant() {
    let mut ok = true;
    let mut detail = String::new();

    // exhaustive for small rings: enumerate the exact joint distribution
    for n in 2..=5usize {
        let mut state = StateVector::new(2 * n).unwrap();
        for i in 0..n {
            state
                .prepare_bell_pair(WireLabel(2 * i), WireLabel(2 * i + 1), BellOutcome::PhiPlus)
                .unwrap();
        }
        let pairs: Vec<(WireLabel, WireLabel)> = (0..n)
            .map(|i| {
                (
                    WireLabel(2 * i),
                    WireLabel(2 * ((i + n - 1) % n) + 1),
                )
            })
            .collect();
        let joint = state.joint_bell_probabilities(&pairs).unwrap();
        let support = 4usize.pow(n as u32 - 1);
        if joint.len() != support {
            ok = false;
            detail.push_str(&format!("n={n}: support {} != {support}; ", joint.len()));
        }
        for (outcomes, p) in &joint {
            if xor_fold(outcomes) != BellOutcome::PhiPlus {
                ok = false;
                detail.push_str(&format!("n={n}: outcome {outcomes:?} violates the ring XOR; "));
            }
            if (p - 1.0 / support as f64).abs() > 1e-9 {
                ok = false;
                detail.push_str(&format!("n={n}: probability {p}; "));
            }
        }
    }

    // sampled for larger rings
    let config = ProtocolConfig {
        check_probability: 0.0,
        ..ProtocolConfig::default()
    };
    for n in 6..=8usize {
        let mut rng = RngStream::new(700 + n as u64);
        for round in 0..1000 {
            match run_qss_round(n, &config, &mut rng).unwrap() {
                QssRoundResult::Encode(enc) => {
                    if xor_fold(&enc.outcomes) != BellOutcome::PhiPlus {
                        ok = false;
                        detail.push_str(&format!("n={n} round {round} violates the ring XOR; "));
                    }
                }
                QssRoundResult::Check(_) => unreachable!("p = 0"),
            }
        }
    }

    criterion(
        7,
        "ring XOR invariant, exhaustive n<=5 and 1000 rounds each n=6..8",
        ok,
        &detail,
    );
}

#[test]
fn criterion_8_mode_selection_statistics() {
    let mut ok = true;
    let mut detail = String::new();

    // checking-mode frequency over 10k rounds at p = 0.5
    let config = ProtocolConfig {
        check_probability: 0.5,
        ..ProtocolConfig::default()
    };
    let mut rng = RngStream::new(801);
    let rounds = 10_000usize;
    let mut checks = 0usize;
    for _ in 0..rounds {
        if matches!(
            run_qss_round(3, &config, &mut rng).unwrap(),
            QssRoundResult::Check(_)
        ) {
            checks += 1;
        }
    }
    let fraction = checks as f64 / rounds as f64;
    let sigma = (0.5 * 0.5 / rounds as f64).sqrt();
    if (fraction - 0.5).abs() > 3.0 * sigma {
        ok = false;
        detail.push_str(&format!("checking fraction {fraction}; "));
    }

    // rounds to a 64-dibit key: negative-binomial mean 128
    let sessions = 100usize;
    let mut rounds_sum = 0usize;
    for trial in 0..sessions {
        let mut rng = RngStream::for_trial(802, trial as u64);
        let report = run_qss_session(3, 64, &config, &mut rng).unwrap();
        assert!(report.complete && report.aborted.is_none());
        rounds_sum += report.rounds_total;
    }
    let mean_rounds = rounds_sum as f64 / sessions as f64;
    // per-session variance r*p/(1-p)^2 = 128
    let sigma_mean = (128.0f64 / sessions as f64).sqrt();
    if (mean_rounds - 128.0).abs() > 3.0 * sigma_mean {
        ok = false;
        detail.push_str(&format!("mean rounds {mean_rounds} (want 128 +- {:.2}); ", 3.0 * sigma_mean));
    }

    criterion(
        8,
        "mode frequencies and expected rounds at p = 0.5",
        ok,
        &detail,
    );
}

#[test]
fn criterion_9_determinism() {
    let specs = [
        ExperimentSpec {
            trials: 20,
            config: ProtocolConfig {
                n_pairs: 32,
                seed: 901,
                channel: ChannelModel::intercept_resend(
                    InterceptStrategy::RandomZx,
                    LinkMask::Only(vec![0]),
                ),
                error_threshold: 0.9,
                ..ProtocolConfig::default()
            },
            message_dibits: Some(8),
            ..base_spec(Protocol::QsdcTwoStep)
        },
        ExperimentSpec {
            trials: 20,
            config: ProtocolConfig {
                seed: 902,
                ..ProtocolConfig::default()
            },
            n_parties: Some(4),
            key_dibits: Some(16),
            format: ReportFormat::Csv,
            ..base_spec(Protocol::Qss)
        },
    ];
    let mut ok = true;
    let mut detail = String::new();
    for spec in specs {
        let a = run_trials(&spec).unwrap();
        let b = run_trials(&spec).unwrap();
        let ra = eprsim::harness::render_report(&a.report);
        let rb = eprsim::harness::render_report(&b.report);
        if ra != rb || a.first_transcript.to_jsonl() != b.first_transcript.to_jsonl() {
            ok = false;
            detail.push_str(&format!("{:?} differs between runs; ", spec.protocol));
        }
    }
    criterion(9, "byte-identical reports under identical spec and seed", ok, &detail);
}
