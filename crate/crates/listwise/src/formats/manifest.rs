//! Strategy manifest (TOML):
//!
//! ```toml
//! mode = "hybrid"
//! list = "easylist.txt"
//! hot = "hot.txt"
//! ```
//!
//! Paths are relative to the manifest's directory.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use listwise_core::{parse_list, StrategyConfig, StrategyMode};
use serde::Deserialize;

use super::{read_hot_set, read_text, FormatError};

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub mode: String,
    pub list: PathBuf,
    #[serde(default)]
    pub hot: Option<PathBuf>,
}

impl Manifest {
    pub fn parse(text: &str, path: &Path) -> Result<Self, FormatError> {
        let manifest: Manifest = toml::from_str(text).map_err(|e| FormatError::Parse {
            path: path.to_path_buf(),
            line: e.span().map_or(0, |s| text[..s.start].lines().count().max(1)),
            message: e.message().to_string(),
        })?;
        if StrategyMode::parse(&manifest.mode).is_none() {
            return Err(FormatError::Parse {
                path: path.to_path_buf(),
                line: 0,
                message: format!("unknown mode {:?}", manifest.mode),
            });
        }
        Ok(manifest)
    }

    /// Loads the referenced files, resolving them against `base`.
    pub fn into_config(self, base: &Path) -> Result<StrategyConfig, FormatError> {
        let mode = StrategyMode::parse(&self.mode).expect("validated on parse");
        let (full_rules, _) = parse_list(&read_text(&base.join(&self.list))?);
        let hot_rule_ids: BTreeSet<_> = match &self.hot {
            Some(hot) => read_hot_set(&base.join(hot))?.into_iter().collect(),
            None => BTreeSet::new(),
        };
        Ok(StrategyConfig {
            mode,
            full_rules,
            hot_rule_ids,
        })
    }
}

pub fn load_manifest(path: &Path) -> Result<StrategyConfig, FormatError> {
    let manifest = Manifest::parse(&read_text(path)?, path)?;
    manifest.into_config(path.parent().unwrap_or(Path::new(".")))
}
