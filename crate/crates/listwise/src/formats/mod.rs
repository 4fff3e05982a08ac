//! On-disk formats: request logs, suffix tables, usage profiles, hot sets,
//! strategy manifests, and snapshot directories.

mod manifest;
mod profile;
mod reqlog;
mod snapshots;

use std::path::{Path, PathBuf};

use listwise_core::{RuleId, SuffixTable};

pub use manifest::{load_manifest, Manifest};
pub use profile::{parse_profile, read_profile, write_profile, PROFILE_HEADER};
pub use reqlog::{format_record, load_log, parse_log, write_log, LoadSummary, REQLOG_HEADER};
pub use snapshots::{load_snapshot_dir, SnapshotDir};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{path}: missing header line {expected:?}")]
    MissingHeader { path: PathBuf, expected: &'static str },
    #[error("{path}: rejected, {malformed} of {lines} records are malformed (first at line {first_line})")]
    LogRejected {
        path: PathBuf,
        malformed: usize,
        lines: usize,
        first_line: usize,
    },
    #[error("{path}: no public suffixes found")]
    EmptySuffixes { path: PathBuf },
}

pub(crate) fn read_text(path: &Path) -> Result<String, FormatError> {
    std::fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), FormatError> {
    std::fs::write(path, text).map_err(|source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Public-suffix file, one suffix per line; `//` and `!` comments allowed.
pub fn load_suffixes(path: &Path) -> Result<SuffixTable, FormatError> {
    let text = read_text(path)?;
    SuffixTable::parse(&text).ok_or_else(|| FormatError::EmptySuffixes { path: path.to_path_buf() })
}

/// Hot-set file: one canonical rule text per non-blank line.
pub fn parse_hot_set(text: &str) -> Vec<RuleId> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(RuleId::new)
        .collect()
}

pub fn read_hot_set(path: &Path) -> Result<Vec<RuleId>, FormatError> {
    Ok(parse_hot_set(&read_text(path)?))
}

pub fn format_hot_set<'a, I: IntoIterator<Item = &'a RuleId>>(ids: I) -> String {
    let mut out = String::new();
    for id in ids {
        out.push_str(id.as_str());
        out.push('\n');
    }
    out
}
