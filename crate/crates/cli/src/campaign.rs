//! Runs trials in parallel and aggregates their statistics.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use qsdc_core::protocols::run_protocol;
use qsdc_core::{ClassicalLog, Message, ProtocolKind, RunOutcome};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::args::{Campaign, MessageSource};

/// The generator for trial `index` of a campaign seeded with `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Per-trial record, one output line or row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub aborted: bool,
    pub error_rate: f64,
    pub checked_pairs: usize,
    pub check_errors: usize,
    pub eve_interceptions: usize,
    pub message_bits: usize,
    /// Whether every decoded message matched; absent when aborted.
    pub fidelity_exact: Option<bool>,
    pub eve_dibit_accuracy: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub protocol: ProtocolKind,
    pub attack: String,
    pub n_pairs: usize,
    pub check_fraction: f64,
    pub threshold: f64,
    pub noise_p: f64,
    pub permute: bool,
    pub seed: u64,
    pub trials: u64,
    pub mean_error_rate: f64,
    /// Sample standard deviation; zero for a single trial.
    pub stddev_error_rate: f64,
    pub abort_rate: f64,
    /// Fraction of non-aborted trials with exact recovery.
    pub fidelity: Option<f64>,
    pub mean_eve_dibit_accuracy: Option<f64>,
    pub checked_pairs: usize,
    pub check_errors: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CampaignSummary {
    pub records: Vec<TrialRecord>,
    pub aggregate: Aggregate,
}

#[derive(Serialize)]
struct TranscriptFile<'a> {
    trial: u64,
    protocol: ProtocolKind,
    aborted: bool,
    transcript: &'a ClassicalLog,
}

/// Runs trial `index` and returns its record with the raw outcome.
pub fn run_trial(campaign: &Campaign, index: u64) -> Result<(TrialRecord, RunOutcome)> {
    let config = &campaign.config;
    let mut rng = trial_rng(config.seed, index);
    let (alice, bob) = match &campaign.message {
        MessageSource::Fixed(m) => (m.clone(), m.clone()),
        MessageSource::Random => {
            let bits = config.capacity_bits()?;
            (
                Message::random(bits, &mut rng),
                Message::random(bits, &mut rng),
            )
        }
    };
    let out = run_protocol(campaign.protocol, config, &alice, &bob, &mut rng)?;
    let fidelity_exact = (!out.aborted).then(|| match campaign.protocol {
        ProtocolKind::RoundTrip => out.decoded_message.as_ref() == Some(&bob),
        ProtocolKind::OneWay => out.decoded_message.as_ref() == Some(&alice),
        ProtocolKind::Dialogue => {
            out.decoded_message.as_ref() == Some(&alice)
                && out.decoded_message_peer.as_ref() == Some(&bob)
        }
    });
    let message_bits = match campaign.protocol {
        ProtocolKind::OneWay => alice.len(),
        _ => bob.len(),
    };
    let record = TrialRecord {
        trial: index,
        aborted: out.aborted,
        error_rate: out.checking_error_rate,
        checked_pairs: out.counters.pairs_checked,
        check_errors: out.counters.check_errors,
        eve_interceptions: out.counters.eve_interceptions,
        message_bits,
        fidelity_exact,
        eve_dibit_accuracy: out.eve_dibit_accuracy(),
    };
    Ok((record, out))
}

fn dump(dir: &Path, record: &TrialRecord, out: &RunOutcome) -> Result<()> {
    let path = dir.join(format!("trial-{:06}.json", record.trial));
    let file = TranscriptFile {
        trial: record.trial,
        protocol: out.protocol,
        aborted: out.aborted,
        transcript: &out.transcript,
    };
    let text = serde_json::to_string_pretty(&file)?;
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn run_campaign(campaign: &Campaign) -> Result<CampaignSummary> {
    if let Some(dir) = &campaign.dump_transcripts {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let records = (0..campaign.trials)
        .into_par_iter()
        .map(|i| {
            let (record, out) = run_trial(campaign, i)?;
            if let Some(dir) = &campaign.dump_transcripts {
                dump(dir, &record, &out)?;
            }
            Ok(record)
        })
        .collect::<Result<Vec<_>>>()?;
    let aggregate = aggregate(campaign, &records);
    Ok(CampaignSummary { records, aggregate })
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn aggregate(campaign: &Campaign, records: &[TrialRecord]) -> Aggregate {
    let n = records.len() as f64;
    let mean_error = mean(records.iter().map(|r| r.error_rate)).unwrap_or(0.0);
    let var = if records.len() > 1 {
        records
            .iter()
            .map(|r| (r.error_rate - mean_error).powi(2))
            .sum::<f64>()
            / (n - 1.0)
    } else {
        0.0
    };
    let config = &campaign.config;
    Aggregate {
        protocol: campaign.protocol,
        attack: config.attack.to_string(),
        n_pairs: config.n_pairs,
        check_fraction: config.check_fraction,
        threshold: config.abort_threshold,
        noise_p: config.noise.probability(),
        permute: config.permute,
        seed: config.seed,
        trials: campaign.trials,
        mean_error_rate: mean_error,
        stddev_error_rate: var.sqrt(),
        abort_rate: records.iter().filter(|r| r.aborted).count() as f64 / n,
        fidelity: mean(records.iter().filter_map(|r| r.fidelity_exact).map(|ok| {
            if ok {
                1.0
            } else {
                0.0
            }
        })),
        mean_eve_dibit_accuracy: mean(records.iter().filter_map(|r| r.eve_dibit_accuracy)),
        checked_pairs: records.iter().map(|r| r.checked_pairs).sum(),
        check_errors: records.iter().map(|r| r.check_errors).sum(),
    }
}
