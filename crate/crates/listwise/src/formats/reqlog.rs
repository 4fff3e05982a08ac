//! `reqlog v1`: one request per line,
//! `timestamp|page|initiator|url|type[|hash[|size]]`.

use std::io::{self, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDateTime, SecondsFormat};
use listwise_core::replay::{LogRecord, RequestLog, SECONDS_PER_DAY};
use listwise_core::{Request, ResourceType};

use super::{read_text, FormatError};

pub const REQLOG_HEADER: &str = "reqlog v1";

/// Largest tolerated share of malformed records.
const MAX_MALFORMED_SHARE: f64 = 0.10;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadSummary {
    /// Non-blank lines after the header.
    pub lines: usize,
    pub records: usize,
    pub malformed: usize,
    /// Line number and reason of each malformed line.
    pub problems: Vec<(usize, String)>,
    pub warnings: Vec<String>,
}

fn parse_timestamp(text: &str) -> Option<i64> {
    if let Ok(dt) = DateTime::parse_from_rfc3339(text) {
        return Some(dt.timestamp());
    }
    NaiveDateTime::parse_from_str(text, "%Y-%m-%dT%H:%M:%S")
        .ok()
        .map(|dt| dt.and_utc().timestamp())
}

fn parse_record(line: &str) -> Result<LogRecord, String> {
    let fields: Vec<&str> = line.split('|').collect();
    if !(5..=7).contains(&fields.len()) {
        return Err(format!("expected 5 to 7 fields, found {}", fields.len()));
    }
    let timestamp = parse_timestamp(fields[0]).ok_or_else(|| format!("bad timestamp {:?}", fields[0]))?;
    let (page, initiator, url) = (fields[1], fields[2], fields[3]);
    if page.is_empty() || initiator.is_empty() || url.is_empty() {
        return Err("empty URL field".into());
    }
    if fields[4].is_empty() {
        return Err("empty resource type".into());
    }
    let mut request = Request::new(url, initiator, ResourceType::from_log_token(fields[4]));
    request.timestamp = timestamp;
    if let Some(hash) = fields.get(5).filter(|h| !h.is_empty()) {
        if !hash.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(format!("content hash {hash:?} is not hex"));
        }
        request.content_hash = Some(hash.to_ascii_lowercase());
    }
    if let Some(size) = fields.get(6).filter(|s| !s.is_empty()) {
        request.content_size = Some(size.parse().map_err(|_| format!("bad size {size:?}"))?);
    }
    Ok(LogRecord::new(page, request))
}

/// Parses log text. `path` is only used in diagnostics.
pub fn parse_log(text: &str, path: &Path) -> Result<(RequestLog, LoadSummary), FormatError> {
    let mut summary = LoadSummary::default();
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        None => {
            summary.warnings.push(format!("{}: empty log", path.display()));
            return Ok((RequestLog::default(), summary));
        }
        Some((_, header)) if header.trim() == REQLOG_HEADER => {}
        Some(_) => {
            return Err(FormatError::MissingHeader {
                path: path.to_path_buf(),
                expected: REQLOG_HEADER,
            })
        }
    }

    let mut records = Vec::new();
    let mut last: Option<(i64, i64)> = None;
    for (index, line) in lines {
        summary.lines += 1;
        let parsed = parse_record(line.trim_end_matches('\r')).and_then(|record| {
            let day = record.request.timestamp.div_euclid(SECONDS_PER_DAY);
            match last {
                Some((d, t)) if d == day && record.request.timestamp < t => {
                    Err("timestamp goes backwards within the day".to_string())
                }
                _ => Ok(record),
            }
        });
        match parsed {
            Ok(record) => {
                last = Some((record.day, record.request.timestamp));
                records.push(record);
            }
            Err(reason) => {
                summary.malformed += 1;
                summary.problems.push((index + 1, reason));
            }
        }
    }
    summary.records = records.len();
    if summary.lines > 0 && summary.malformed as f64 > MAX_MALFORMED_SHARE * summary.lines as f64 {
        return Err(FormatError::LogRejected {
            path: path.to_path_buf(),
            malformed: summary.malformed,
            lines: summary.lines,
            first_line: summary.problems[0].0,
        });
    }
    if summary.lines == 0 {
        summary.warnings.push(format!("{}: log has no records", path.display()));
    }
    Ok((RequestLog { records }, summary))
}

pub fn load_log(path: &Path) -> Result<(RequestLog, LoadSummary), FormatError> {
    parse_log(&read_text(path)?, path)
}

pub fn format_record(record: &LogRecord) -> String {
    let r = &record.request;
    let ts = DateTime::from_timestamp(r.timestamp, 0)
        .map(|dt| dt.to_rfc3339_opts(SecondsFormat::Secs, true))
        .unwrap_or_default();
    let mut line = format!("{ts}|{}|{}|{}|{}", record.page_url, r.initiator_url, r.url, r.resource_type.token());
    match (&r.content_hash, r.content_size) {
        (None, None) => {}
        (hash, size) => {
            line.push('|');
            line.push_str(hash.as_deref().unwrap_or(""));
            if let Some(size) = size {
                line.push_str(&format!("|{size}"));
            }
        }
    }
    line
}

pub fn write_log<W: Write>(log: &RequestLog, out: &mut W) -> io::Result<()> {
    writeln!(out, "{REQLOG_HEADER}")?;
    for record in &log.records {
        writeln!(out, "{}", format_record(record))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: &str = "test.log";

    fn line(i: usize) -> String {
        format!("2019-02-01T00:00:{i:02}Z|https://p.com/|https://p.com/|https://ads.x.com/{i}.js|script")
    }

    #[test]
    fn well_formed_round_trip() {
        let text = format!("{REQLOG_HEADER}\n{}\n{}\n{}|abc123|60000\n", line(1), line(2), line(3));
        let (log, summary) = parse_log(&text, Path::new(P)).unwrap();
        assert_eq!((log.len(), summary.malformed), (3, 0));
        assert_eq!(log.records[2].request.content_size, Some(60_000));
        assert_eq!(log.records[0].day, 17_928);
        let mut out = Vec::new();
        write_log(&log, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), text);
    }

    #[test]
    fn malformed_share() {
        let mut text = String::from(REQLOG_HEADER);
        for i in 0..9 {
            text.push_str(&format!("\n{}", line(i)));
        }
        text.push_str("\nnot a record");
        let (log, summary) = parse_log(&text, Path::new(P)).unwrap();
        assert_eq!((log.len(), summary.malformed), (9, 1));
        text.push_str("\nstill not a record");
        assert!(matches!(parse_log(&text, Path::new(P)), Err(FormatError::LogRejected { malformed: 2, .. })));
    }

    #[test]
    fn empty_and_headerless() {
        let (log, summary) = parse_log("", Path::new(P)).unwrap();
        assert!(log.is_empty());
        assert_eq!(summary.warnings.len(), 1);
        assert!(matches!(parse_log(&line(1), Path::new(P)), Err(FormatError::MissingHeader { .. })));
    }

    #[test]
    fn backwards_time_is_malformed() {
        let mut text = String::from(REQLOG_HEADER);
        for i in [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 4] {
            text.push_str(&format!("\n{}", line(i)));
        }
        let (_, summary) = parse_log(&text, Path::new(P)).unwrap();
        assert_eq!(summary.problems.len(), 1);
        assert_eq!(summary.problems[0].0, 12);
    }
}
