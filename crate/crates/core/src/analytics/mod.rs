//! Offline analytics over lists, dated snapshots, and request logs.

mod evasion;
mod reduce;
mod snapshots;
mod stats;

use core::fmt;

pub use evasion::{detect_evasions, EvasionCandidate, EvasionConfig, EvasionHint};
pub use reduce::reduce_list;
pub use snapshots::{diff_snapshots, DayDelta, RuleLifetime, Snapshot, SnapshotDiff, SnapshotSeries};
pub use stats::{
    age_usage_tests, kolmogorov_survival, ks_two_sample, lifetime_cdf, AgeComparison, AgeBaseline, Ecdf, KsResult,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnalyticsError {
    EmptyInput,
    InvalidMinCount,
    TooFewSnapshots,
    /// Snapshot dates must be strictly increasing.
    UnorderedSnapshots,
}

impl fmt::Display for AnalyticsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalyticsError::EmptyInput => f.write_str("empty input"),
            AnalyticsError::InvalidMinCount => f.write_str("min_count must be at least 1"),
            AnalyticsError::TooFewSnapshots => f.write_str("at least two snapshots are required"),
            AnalyticsError::UnorderedSnapshots => f.write_str("snapshot dates must be unique and increasing"),
        }
    }
}

impl core::error::Error for AnalyticsError {}
