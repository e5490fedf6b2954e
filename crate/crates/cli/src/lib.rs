//! Campaign runner for the `qsdc-core` protocol simulator.

pub mod args;
pub mod campaign;
pub mod emit;

pub use args::{parse_args, Campaign, Format, MessageSource};
pub use campaign::{run_campaign, run_trial, trial_rng, Aggregate, CampaignSummary, TrialRecord};
