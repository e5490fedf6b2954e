use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use qsdc::emit::{write_csv, write_jsonl};
use qsdc::{parse_args, run_campaign, Format};

fn main() -> ExitCode {
    let campaign = match parse_args(std::env::args_os()) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    eprintln!(
        "qsdc: protocol={} attack={} pairs={} trials={} seed={}",
        campaign.protocol,
        campaign.config.attack,
        campaign.config.n_pairs,
        campaign.trials,
        campaign.config.seed
    );
    if campaign.threshold_defaulted {
        eprintln!(
            "qsdc: warning: noise is on but --threshold defaults to 0; every noisy check aborts"
        );
    }
    let started = Instant::now();
    let result = (|| -> anyhow::Result<()> {
        let summary = run_campaign(&campaign)?;
        let sink: Box<dyn Write> = match &campaign.out {
            Some(path) => {
                Box::new(File::create(path).with_context(|| format!("--out {}", path.display()))?)
            }
            None => Box::new(io::stdout().lock()),
        };
        let sink = BufWriter::new(sink);
        match campaign.format {
            Format::Jsonl => write_jsonl(&summary, sink),
            Format::Csv => write_csv(&summary, sink),
        }
    })();
    match result {
        Ok(()) => {
            eprintln!("qsdc: finished in {:.3}s", started.elapsed().as_secs_f64());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("qsdc: error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
