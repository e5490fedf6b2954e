//! Command-line and config-file parsing.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser, ValueEnum};
use qsdc_core::{AttackKind, Message, NoiseModel, ProtocolConfig, ProtocolKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum ProtocolArg {
    RoundTrip,
    OneWay,
    Dialogue,
}

impl From<ProtocolArg> for ProtocolKind {
    fn from(p: ProtocolArg) -> Self {
        match p {
            ProtocolArg::RoundTrip => ProtocolKind::RoundTrip,
            ProtocolArg::OneWay => ProtocolKind::OneWay,
            ProtocolArg::Dialogue => ProtocolKind::Dialogue,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum AttackArg {
    None,
    InterceptResendEpr,
    MeasureResendZ,
    InterceptBellGuess,
    EntangleMeasure,
}

impl From<AttackArg> for AttackKind {
    fn from(a: AttackArg) -> Self {
        match a {
            AttackArg::None => AttackKind::None,
            AttackArg::InterceptResendEpr => AttackKind::InterceptResendEpr,
            AttackArg::MeasureResendZ => AttackKind::MeasureResendZ,
            AttackArg::InterceptBellGuess => AttackKind::InterceptBellGuess,
            AttackArg::EntangleMeasure => AttackKind::EntangleMeasure,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Jsonl,
    Csv,
}

/// Monte Carlo campaigns over order-secured direct-communication protocols.
///
/// A config file holds `key = value` lines using the long flag names
/// (`pairs = 128`, `no-permutation = true`); flags given on the command
/// line take precedence.
#[derive(Clone, Debug, Parser)]
#[command(name = "qsdc", version, args_override_self = true)]
pub struct Cli {
    #[arg(long, value_enum, default_value = "round_trip")]
    pub protocol: ProtocolArg,

    /// Number of EPR pairs per run.
    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u64).range(2..))]
    pub pairs: u64,

    /// Fraction of pairs used for the security check, in (0, 1).
    #[arg(long, default_value_t = 0.25, value_parser = open_unit)]
    pub check_fraction: f64,

    /// Largest tolerated checking error rate, in [0, 1]. Defaults to 0.
    #[arg(long, value_parser = closed_unit)]
    pub threshold: Option<f64>,

    /// Per-particle, per-transit Pauli noise probability.
    #[arg(long, default_value_t = 0.0, value_parser = closed_unit)]
    pub noise_p: f64,

    #[arg(long, value_enum, default_value = "none")]
    pub attack: AttackArg,

    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,

    /// Campaign seed; drawn from the OS when omitted and echoed in the output.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Fixed message (hex bytes) instead of random full-capacity messages.
    /// In a dialogue both parties send it.
    #[arg(long, value_parser = parse_hex)]
    pub message_hex: Option<Message>,

    #[arg(long, value_enum, default_value = "jsonl")]
    pub format: Format,

    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Directory receiving one JSON transcript per trial.
    #[arg(long, value_name = "DIR")]
    pub dump_transcripts: Option<PathBuf>,

    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Send particles in their natural order (insecure control).
    #[arg(long)]
    pub no_permutation: bool,
}

fn open_unit(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} is not strictly between 0 and 1"))
    }
}

fn closed_unit(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

fn parse_hex(s: &str) -> Result<Message, String> {
    let s = s.strip_prefix("0x").unwrap_or(s);
    hex::decode(s)
        .map(|b| Message::from_bytes(&b))
        .map_err(|e| e.to_string())
}

#[derive(Clone, Debug, PartialEq)]
pub enum MessageSource {
    /// Fresh uniformly random messages filling the capacity.
    Random,
    Fixed(Message),
}

/// A fully resolved campaign.
#[derive(Clone, Debug, PartialEq)]
pub struct Campaign {
    pub protocol: ProtocolKind,
    pub config: ProtocolConfig,
    pub trials: u64,
    pub message: MessageSource,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub dump_transcripts: Option<PathBuf>,
    /// Set when noise is on but the threshold was left at its default.
    pub threshold_defaulted: bool,
}

/// Turns a config file into argument tokens.
fn config_tokens(path: &PathBuf) -> Result<Vec<OsString>, clap::Error> {
    let text = fs::read_to_string(path).map_err(|e| {
        Cli::command().error(ErrorKind::Io, format!("--config {}: {e}", path.display()))
    })?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Cli::command().error(
                ErrorKind::InvalidValue,
                format!(
                    "--config {}:{}: expected key = value",
                    path.display(),
                    lineno + 1
                ),
            ));
        };
        let (key, value) = (key.trim().trim_start_matches("--"), value.trim());
        if key == "config" {
            return Err(
                Cli::command().error(ErrorKind::ArgumentConflict, "--config files cannot nest")
            );
        }
        match (key, value) {
            ("no-permutation", "true") => out.push("--no-permutation".into()),
            ("no-permutation", "false") => {}
            _ => {
                out.push(format!("--{key}").into());
                out.push(value.into());
            }
        }
    }
    Ok(out)
}

/// Parses `argv`, merging a `--config` file underneath explicit flags.
pub fn parse_args<I, T>(argv: I) -> Result<Campaign, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let mut cli = Cli::try_parse_from(&argv)?;
    if let Some(path) = cli.config.clone() {
        let mut merged = vec![argv.first().cloned().unwrap_or_else(|| "qsdc".into())];
        merged.extend(config_tokens(&path)?);
        merged.extend(argv.iter().skip(1).cloned());
        cli = Cli::try_parse_from(&merged)?;
    }
    resolve(cli)
}

fn resolve(cli: Cli) -> Result<Campaign, clap::Error> {
    let protocol = ProtocolKind::from(cli.protocol);
    let usage = |flag: &str, msg: String| {
        Cli::command().error(ErrorKind::ValueValidation, format!("{flag}: {msg}"))
    };
    let noise = if cli.noise_p > 0.0 {
        NoiseModel::pauli(cli.noise_p).map_err(|e| usage("--noise-p", e.to_string()))?
    } else {
        NoiseModel::None
    };
    let config = ProtocolConfig {
        n_pairs: cli.pairs as usize,
        check_fraction: cli.check_fraction,
        abort_threshold: cli.threshold.unwrap_or(0.0),
        noise,
        attack: cli.attack.into(),
        seed: cli.seed.unwrap_or_else(rand::random),
        permute: !cli.no_permutation,
    };
    config.validate(protocol).map_err(|e| {
        let flag = match e {
            qsdc_core::ProtocolError::UnsupportedAttack { .. } => "--attack",
            qsdc_core::ProtocolError::CheckFraction(_) => "--check-fraction",
            _ => "--pairs",
        };
        usage(flag, e.to_string())
    })?;
    let message = match cli.message_hex {
        None => MessageSource::Random,
        Some(m) => {
            let capacity = config
                .capacity_bits()
                .map_err(|e| usage("--pairs", e.to_string()))?;
            if m.len() > capacity {
                return Err(usage(
                    "--message-hex",
                    format!("{} bits exceed the capacity of {capacity} bits", m.len()),
                ));
            }
            MessageSource::Fixed(m)
        }
    };
    Ok(Campaign {
        protocol,
        threshold_defaulted: cli.threshold.is_none() && cli.noise_p > 0.0,
        config,
        trials: cli.trials,
        message,
        format: cli.format,
        out: cli.out,
        dump_transcripts: cli.dump_transcripts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documented_example_resolves() {
        let c = parse_args([
            "qsdc",
            "--protocol",
            "one_way",
            "--pairs",
            "64",
            "--check-fraction",
            "0.25",
            "--attack",
            "none",
            "--trials",
            "1000",
            "--seed",
            "42",
        ])
        .unwrap();
        assert_eq!(c.protocol, ProtocolKind::OneWay);
        assert_eq!(c.config.n_pairs, 64);
        assert_eq!(c.config.check_fraction, 0.25);
        assert_eq!(c.config.attack, AttackKind::None);
        assert_eq!(c.trials, 1000);
        assert_eq!(c.config.seed, 42);
        assert_eq!(c.message, MessageSource::Random);
    }

    #[test]
    fn range_errors_are_usage_errors() {
        for argv in [
            &["qsdc", "--check-fraction", "1.5"][..],
            &["qsdc", "--threshold", "-0.1"],
            &["qsdc", "--pairs", "1"],
            &["qsdc", "--trials", "0"],
            &[
                "qsdc",
                "--protocol",
                "one_way",
                "--attack",
                "intercept_resend_epr",
            ],
            &["qsdc", "--pairs", "4", "--message-hex", "ffff"],
            &["qsdc", "--bogus"],
        ] {
            let err = parse_args(argv).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{argv:?}");
        }
    }

    #[test]
    fn capacity_error_names_the_flag() {
        let err = parse_args(["qsdc", "--pairs", "4", "--message-hex", "ffff"]).unwrap_err();
        assert!(err.to_string().contains("--message-hex"));
    }

    #[test]
    fn missing_seed_is_drawn() {
        let a = parse_args(["qsdc"]).unwrap();
        let b = parse_args(["qsdc"]).unwrap();
        assert_ne!(a.config.seed, b.config.seed);
    }

    #[test]
    fn noise_without_threshold_is_flagged() {
        assert!(
            parse_args(["qsdc", "--noise-p", "0.05"])
                .unwrap()
                .threshold_defaulted
        );
        assert!(
            !parse_args(["qsdc", "--noise-p", "0.05", "--threshold", "0.1"])
                .unwrap()
                .threshold_defaulted
        );
    }
}
