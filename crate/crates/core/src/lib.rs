//! Context-filtered EMA correlation networks for single participants.
//!
//! Daily mood questionnaires (EMAs) are paired with passively sensed counts
//! (locations visited, calls, SMS, conversations). For each sensor feature,
//! days are split into an isolation pool (count 0) and a sociability pool
//! (count at least 1). Repeated fixed-size resamples of each pool give a
//! distribution of network-connectivity differences, which is compared with
//! the same statistic computed from random unfiltered day samples.

#![allow(clippy::needless_range_loop)]

pub mod commands;
pub mod contexts;
pub mod error;
pub mod ingest;
pub mod network;
pub mod permtest;
pub mod report;
pub mod stats;
pub mod synth;

pub use contexts::{baseline_pool, categorize, Category, CategoryPools, Context, ContextSpec, Feature};
pub use error::{Error, Result};
pub use ingest::{
    backfill_emas, eligibility, parse_participant, DailyRecord, EligibilityReport, EmaItem, EmaVector,
    ParticipantDataset,
};
pub use network::{connectivity_difference, pearson_network, CorrelationNetwork, ItemSubset};
pub use permtest::{
    compare_to_baseline, paired_t_test, run_baseline_permutation, run_context_permutation, Comparison, PairedTTest,
    PermutationConfig, PermutationRun, RunOptions, StreamSeed,
};
pub use synth::{generate, ground_truth, SynthConfig};
