//! Batch CLI over the `eprsim` library: run trial batteries for the two
//! direct-communication variants and the secret-sharing ring, or verify the
//! published decoding tables.
//!
//! Exit codes: 0 success, 1 invalid spec or runtime error, 2 table
//! verification mismatch.

use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use eprsim::adversary::{ChannelModel, InterceptStrategy, LinkMask};
use eprsim::harness::{
    render_report, render_tables_report, run_trials, verify_tables, ExperimentSpec, Protocol,
    ReportFormat, DEFAULT_TRIALS,
};
use eprsim::protocols::{
    ProtocolConfig, DEFAULT_ERROR_THRESHOLD, DEFAULT_SAMPLE_FRACTION, DEFAULT_SEED,
};

#[derive(Parser)]
#[command(name = "eprsim", version, about = "Entanglement-swapping protocol simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Direct-communication sessions (two-step or encode-first).
    Qsdc(QsdcArgs),
    /// N-party secret-sharing sessions.
    Qss(QssArgs),
    /// Verify the published decoding tables by algebra and simulation.
    Tables(TablesArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum QsdcVariant {
    TwoStep,
    EncodeFirst,
}

#[derive(Args)]
struct CommonArgs {
    /// Abort threshold on the observed check-error rate.
    #[arg(long, default_value_t = DEFAULT_ERROR_THRESHOLD)]
    threshold: f64,
    /// Channel attack: none | ir-z | ir-x | ir-zx | depol:<eta>.
    #[arg(long, default_value = "none")]
    attack: String,
    /// Restrict the attack to one link index (default: all links).
    #[arg(long)]
    link: Option<usize>,
    /// Independent sessions to run.
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    trials: usize,
    /// Master seed; per-trial streams derive from it.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Report format.
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
    /// Write the first trial's transcript (one JSON event per line) here.
    #[arg(long)]
    transcript: Option<std::path::PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Args)]
struct QsdcArgs {
    /// Protocol variant.
    #[arg(long, value_enum, default_value_t = QsdcVariant::TwoStep)]
    variant: QsdcVariant,
    /// EPR pairs prepared per party (two-step; encode-first sizes itself
    /// from the message).
    #[arg(long, default_value_t = 64)]
    pairs: usize,
    /// Explicit message as hex (two dibits per digit).
    #[arg(long)]
    message_hex: Option<String>,
    /// Length of a random per-trial message, in dibits.
    #[arg(long)]
    message_dibits: Option<usize>,
    /// Fraction of transmitted photons checked per direction.
    #[arg(long, default_value_t = DEFAULT_SAMPLE_FRACTION)]
    sample_frac: f64,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct QssArgs {
    /// Ring size including the dealer.
    #[arg(long, default_value_t = 3)]
    parties: usize,
    /// Key dibits to establish per session.
    #[arg(long, default_value_t = 64)]
    key_dibits: usize,
    /// Probability of a checking round.
    #[arg(long, default_value_t = 0.5)]
    check_prob: f64,
    /// Give up after this many rounds without a full key.
    #[arg(long, default_value_t = 10_000)]
    max_rounds: usize,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct TablesArgs {
    /// Emit the verification report as JSON instead of text.
    #[arg(long)]
    json: bool,
}

fn parse_attack(attack: &str, link: Option<usize>) -> Result<ChannelModel, String> {
    let links = match link {
        Some(i) => LinkMask::Only(vec![i]),
        None => LinkMask::All,
    };
    match attack {
        "none" => Ok(ChannelModel::ideal()),
        "ir-z" => Ok(ChannelModel::intercept_resend(InterceptStrategy::AlwaysZ, links)),
        "ir-x" => Ok(ChannelModel::intercept_resend(InterceptStrategy::AlwaysX, links)),
        "ir-zx" => Ok(ChannelModel::intercept_resend(InterceptStrategy::RandomZx, links)),
        other => match other.strip_prefix("depol:") {
            Some(eta) => {
                let eta: f64 = eta
                    .parse()
                    .map_err(|_| format!("bad depolarizing strength `{eta}`"))?;
                Ok(ChannelModel::depolarizing(eta, links))
            }
            None => Err(format!(
                "unknown attack `{other}` (expected none | ir-z | ir-x | ir-zx | depol:<eta>)"
            )),
        },
    }
}

fn build_spec(cli: &Command) -> Result<ExperimentSpec, String> {
    match cli {
        Command::Qsdc(args) => {
            let channel = parse_attack(&args.common.attack, args.common.link)?;
            let (message_hex, message_dibits) = match (&args.message_hex, args.message_dibits) {
                (None, None) => (None, Some(16)), // random 16-dibit default
                other => (other.0.clone(), other.1),
            };
            Ok(ExperimentSpec {
                protocol: match args.variant {
                    QsdcVariant::TwoStep => Protocol::QsdcTwoStep,
                    QsdcVariant::EncodeFirst => Protocol::QsdcEncodeFirst,
                },
                trials: args.common.trials,
                config: ProtocolConfig {
                    n_pairs: args.pairs,
                    sample_fraction: args.sample_frac,
                    error_threshold: args.common.threshold,
                    channel,
                    seed: args.common.seed,
                    ..ProtocolConfig::default()
                },
                n_parties: None,
                message_hex,
                message_dibits,
                key_dibits: None,
                format: match args.common.format {
                    FormatArg::Json => ReportFormat::Json,
                    FormatArg::Csv => ReportFormat::Csv,
                },
            })
        }
        Command::Qss(args) => {
            let channel = parse_attack(&args.common.attack, args.common.link)?;
            Ok(ExperimentSpec {
                protocol: Protocol::Qss,
                trials: args.common.trials,
                config: ProtocolConfig {
                    check_probability: args.check_prob,
                    error_threshold: args.common.threshold,
                    channel,
                    seed: args.common.seed,
                    max_rounds: args.max_rounds,
                    ..ProtocolConfig::default()
                },
                n_parties: Some(args.parties),
                message_hex: None,
                message_dibits: None,
                key_dibits: Some(args.key_dibits),
                format: match args.common.format {
                    FormatArg::Json => ReportFormat::Json,
                    FormatArg::Csv => ReportFormat::Csv,
                },
            })
        }
        Command::Tables(_) => unreachable!("tables takes no spec"),
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match &cli.command {
        Command::Tables(args) => {
            let report = verify_tables().map_err(|e| e.to_string())?;
            if args.json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?
                );
            } else {
                print!("{}", render_tables_report(&report));
            }
            Ok(if report.all_match() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
        command => {
            let spec = build_spec(command)?;
            let transcript_path = match command {
                Command::Qsdc(a) => a.common.transcript.clone(),
                Command::Qss(a) => a.common.transcript.clone(),
                Command::Tables(_) => None,
            };
            let started = Instant::now();
            let outcome = run_trials(&spec).map_err(|e| e.to_string())?;
            // timing goes to stderr so reports stay byte-reproducible
            eprintln!(
                "completed {} trials in {:.1} ms",
                spec.trials,
                started.elapsed().as_secs_f64() * 1e3
            );
            if let Some(path) = transcript_path {
                let mut file = std::fs::File::create(&path)
                    .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
                file.write_all(outcome.first_transcript.to_jsonl().as_bytes())
                    .map_err(|e| e.to_string())?;
            }
            print!("{}", render_report(&outcome.report));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version print to stdout and exit 0; real usage errors
            // must exit 1 (invalid spec), not clap's default 2
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::FAILURE;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
