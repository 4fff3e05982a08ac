//! `usage v1`: an optional `window FIRST LAST` line (YYYY-MM-DD), then one
//! `COUNT RULE` line per used rule.

use std::path::Path;

use listwise_core::replay::UsageProfile;
use listwise_core::{Day, RuleId};

use super::{read_text, FormatError};

pub const PROFILE_HEADER: &str = "usage v1";

pub fn write_profile(profile: &UsageProfile) -> String {
    let mut out = format!("{PROFILE_HEADER}\n");
    if let (Some(start), Some(end)) = (profile.start_day, profile.end_day) {
        out.push_str(&format!("window {} {}\n", Day(start), Day(end)));
    }
    for (id, count) in &profile.counts {
        out.push_str(&format!("{count} {id}\n"));
    }
    out
}

pub fn parse_profile(text: &str, path: &Path) -> Result<UsageProfile, FormatError> {
    let parse_err = |line: usize, message: String| FormatError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == PROFILE_HEADER => {}
        _ => {
            return Err(FormatError::MissingHeader {
                path: path.to_path_buf(),
                expected: PROFILE_HEADER,
            })
        }
    }
    let mut profile = UsageProfile::default();
    for (index, line) in lines {
        let line = line.trim();
        if let Some(window) = line.strip_prefix("window ") {
            let days: Vec<Day> = window
                .split_whitespace()
                .map(str::parse)
                .collect::<Result<_, _>>()
                .map_err(|e| parse_err(index + 1, format!("{e}")))?;
            let [start, end] = days[..] else {
                return Err(parse_err(index + 1, "window needs two dates".into()));
            };
            profile.start_day = Some(start.0);
            profile.end_day = Some(end.0);
            continue;
        }
        let (count, rule) = line
            .split_once(' ')
            .ok_or_else(|| parse_err(index + 1, "expected COUNT RULE".into()))?;
        let count: u64 = count
            .parse()
            .map_err(|_| parse_err(index + 1, format!("bad count {count:?}")))?;
        let rule = rule.trim();
        if rule.is_empty() {
            return Err(parse_err(index + 1, "missing rule text".into()));
        }
        *profile.counts.entry(RuleId::new(rule)).or_default() += count;
    }
    Ok(profile)
}

pub fn read_profile(path: &Path) -> Result<UsageProfile, FormatError> {
    parse_profile(&read_text(path)?, path)
}
