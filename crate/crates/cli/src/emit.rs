//! JSON-lines and CSV writers.

use std::io::Write;

use anyhow::Result;
use serde::Serialize;

use crate::campaign::{Aggregate, CampaignSummary, TrialRecord};

#[derive(Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Line<'a> {
    Trial(&'a TrialRecord),
    Aggregate(&'a Aggregate),
}

pub fn write_jsonl<W: Write>(summary: &CampaignSummary, mut w: W) -> Result<()> {
    for r in &summary.records {
        serde_json::to_writer(&mut w, &Line::Trial(r))?;
        w.write_all(b"\n")?;
    }
    serde_json::to_writer(&mut w, &Line::Aggregate(&summary.aggregate))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Row {
    trial: u64,
    aborted: bool,
    error_rate: f64,
    checked_pairs: usize,
    check_errors: usize,
    fidelity_exact: Option<bool>,
    eve_dibit_accuracy: Option<f64>,
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Header, one row per trial, then `#`-prefixed aggregate lines.
pub fn write_csv<W: Write>(summary: &CampaignSummary, mut w: W) -> Result<()> {
    {
        let mut csv = csv::Writer::from_writer(&mut w);
        for r in &summary.records {
            csv.serialize(Row {
                trial: r.trial,
                aborted: r.aborted,
                error_rate: r.error_rate,
                checked_pairs: r.checked_pairs,
                check_errors: r.check_errors,
                fidelity_exact: r.fidelity_exact,
                eve_dibit_accuracy: r.eve_dibit_accuracy,
            })?;
        }
        if summary.records.is_empty() {
            csv.write_record([
                "trial",
                "aborted",
                "error_rate",
                "checked_pairs",
                "check_errors",
                "fidelity_exact",
                "eve_dibit_accuracy",
            ])?;
        }
        csv.flush()?;
    }
    let a = &summary.aggregate;
    let footer = [
        ("protocol", a.protocol.to_string()),
        ("attack", a.attack.clone()),
        ("n_pairs", a.n_pairs.to_string()),
        ("check_fraction", a.check_fraction.to_string()),
        ("threshold", a.threshold.to_string()),
        ("noise_p", a.noise_p.to_string()),
        ("permute", a.permute.to_string()),
        ("seed", a.seed.to_string()),
        ("trials", a.trials.to_string()),
        ("mean_error_rate", a.mean_error_rate.to_string()),
        ("stddev_error_rate", a.stddev_error_rate.to_string()),
        ("abort_rate", a.abort_rate.to_string()),
        ("fidelity", opt(a.fidelity)),
        ("mean_eve_dibit_accuracy", opt(a.mean_eve_dibit_accuracy)),
        ("checked_pairs", a.checked_pairs.to_string()),
        ("check_errors", a.check_errors.to_string()),
    ];
    for (k, v) in footer {
        writeln!(w, "# {k}={v}")?;
    }
    w.flush()?;
    Ok(())
}
