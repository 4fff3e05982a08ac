use std::path::{Path, PathBuf};

use listwise_core::analytics::{Snapshot, SnapshotSeries};
use listwise_core::Day;

use super::{read_text, FormatError};

#[derive(Debug, Clone)]
pub struct SnapshotDir {
    pub series: SnapshotSeries,
    /// Files that do not follow the `YYYY-MM-DD.txt` naming and were ignored.
    pub ignored: Vec<PathBuf>,
}

/// Reads every `YYYY-MM-DD.txt` file of `dir`, in date order.
pub fn load_snapshot_dir(dir: &Path) -> Result<SnapshotDir, FormatError> {
    let io_err = |source| FormatError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut dated = Vec::new();
    let mut ignored = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io_err)? {
        let path = entry.map_err(io_err)?.path();
        let date = path
            .file_name()
            .and_then(|n| n.to_str())
            .and_then(|n| n.strip_suffix(".txt"))
            .and_then(|stem| stem.parse::<Day>().ok());
        match date {
            Some(date) if path.is_file() => dated.push((date, path)),
            _ => ignored.push(path),
        }
    }
    dated.sort();
    ignored.sort();
    let mut snapshots = Vec::with_capacity(dated.len());
    for (date, path) in dated {
        snapshots.push(Snapshot::parse(date, &read_text(&path)?));
    }
    // File names are unique, so dates are strictly increasing.
    let series = SnapshotSeries::new(snapshots).expect("sorted unique dates");
    Ok(SnapshotDir { series, ignored })
}
