//! Detection of resources that started changing URL once a rule blocked them.
//!
//! A resource is identified by its content hash. For every network rule added
//! after the first snapshot that stayed listed long enough, resources matched
//! by the rule are compared before and after the addition day. The rate is the
//! number of URL changes per observed day, where a change is a URL that was
//! not served on the previous observed day. The addition day itself is
//! ignored on both sides.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use super::snapshots::{diff_snapshots, SnapshotSeries};
use crate::day::Day;
use crate::matcher::{rule_matches_prepared, PreparedRequest};
use crate::replay::{LogRecord, RequestLog};
use crate::rule::{parse_rule, FilterRule, RuleId, RuleKind};
use crate::suffix::{registrable_domain, SuffixTable};
use crate::url::parse_url;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvasionConfig {
    pub min_size_bytes: u64,
    pub min_persistence_days: i64,
}

impl Default for EvasionConfig {
    fn default() -> Self {
        EvasionConfig {
            min_size_bytes: 50 * 1024,
            min_persistence_days: 14,
        }
    }
}

/// Ordered by precedence: when several apply, the first wins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EvasionHint {
    FirstPartyMove,
    DomainChange,
    DimensionRemoval,
    KeywordRemoval,
    Unclassified,
}

impl EvasionHint {
    pub const ALL: [EvasionHint; 5] = [
        EvasionHint::FirstPartyMove,
        EvasionHint::DomainChange,
        EvasionHint::DimensionRemoval,
        EvasionHint::KeywordRemoval,
        EvasionHint::Unclassified,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EvasionHint::FirstPartyMove => "first-party-move",
            EvasionHint::DomainChange => "domain-change",
            EvasionHint::DimensionRemoval => "dimension-removal",
            EvasionHint::KeywordRemoval => "keyword-removal",
            EvasionHint::Unclassified => "unclassified",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvasionCandidate {
    pub content_hash: String,
    pub rule: RuleId,
    pub rule_added: Day,
    pub urls_before: BTreeSet<String>,
    pub urls_after: BTreeSet<String>,
    /// Distinct content sizes seen for the hash.
    pub sizes: Vec<u64>,
    pub rate_before: f64,
    pub rate_after: f64,
    pub hint: EvasionHint,
}

struct AddedRule {
    rule: FilterRule,
    added: Day,
}

struct Observation<'a> {
    record: &'a LogRecord,
    prepared: Option<PreparedRequest<'a>>,
    page_domain: Option<String>,
    request_domain: Option<String>,
}

fn host_domain(url: &str, suffixes: &SuffixTable) -> Option<String> {
    let spans = parse_url(url).ok()?;
    spans.host(url).map(|h| registrable_domain(h, suffixes))
}

fn added_rules(series: &SnapshotSeries, config: &EvasionConfig) -> Vec<AddedRule> {
    let (Some(first), Some(last)) = (series.first_date(), series.last_date()) else {
        return Vec::new();
    };
    let Ok(diff) = diff_snapshots(series) else {
        return Vec::new();
    };
    diff.lifetimes
        .iter()
        .filter(|l| l.first_seen > first)
        .filter(|l| l.removed.unwrap_or(last).days_since(l.first_seen) >= config.min_persistence_days)
        .filter_map(|l| {
            let rule = parse_rule(l.rule.as_str());
            (rule.kind() == RuleKind::Network).then_some(AddedRule { rule, added: l.first_seen })
        })
        .collect()
}

fn path_of(url: &str) -> &str {
    let Ok(spans) = parse_url(url) else { return "" };
    let Some(host) = spans.host else { return "" };
    let rest = &url[host.end..];
    let start = rest.find('/').unwrap_or(rest.len());
    let rest = &rest[start..];
    let end = rest.find(['?', '#']).unwrap_or(rest.len());
    &rest[..end]
}

fn has_ad_segment(url: &str) -> bool {
    path_of(url)
        .split('/')
        .any(|seg| seg.eq_ignore_ascii_case("ad") || seg.eq_ignore_ascii_case("ads"))
}

/// Looks for `_<digits>x<digits>_`.
fn has_dimension(url: &str) -> bool {
    let b = url.as_bytes();
    let digits = |mut i: usize| {
        let start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        (i > start).then_some(i)
    };
    (0..b.len()).any(|i| {
        b[i] == b'_'
            && digits(i + 1)
                .filter(|&j| j < b.len() && b[j] == b'x')
                .and_then(|j| digits(j + 1))
                .is_some_and(|k| k < b.len() && b[k] == b'_')
    })
}

fn classify(old: &Observation<'_>, new: &Observation<'_>) -> EvasionHint {
    let (old_url, new_url) = (old.record.request.url.as_str(), new.record.request.url.as_str());
    let old_third = old.request_domain != old.page_domain;
    let new_first = new.request_domain.is_some() && new.request_domain == new.page_domain;
    if old_third && new_first {
        EvasionHint::FirstPartyMove
    } else if old.request_domain != new.request_domain {
        EvasionHint::DomainChange
    } else if has_dimension(old_url) && !has_dimension(new_url) {
        EvasionHint::DimensionRemoval
    } else if has_ad_segment(old_url) && !has_ad_segment(new_url) {
        EvasionHint::KeywordRemoval
    } else {
        EvasionHint::Unclassified
    }
}

fn hint_for(before: &[&Observation<'_>], after: &[&Observation<'_>], urls_before: &BTreeSet<String>, urls_after: &BTreeSet<String>) -> EvasionHint {
    let old: Vec<&&Observation<'_>> = {
        let gone: Vec<_> = before.iter().filter(|o| !urls_after.contains(&o.record.request.url)).collect();
        if gone.is_empty() {
            before.iter().collect()
        } else {
            gone
        }
    };
    let new: Vec<_> = after.iter().filter(|o| !urls_before.contains(&o.record.request.url)).collect();
    old.iter()
        .flat_map(|o| new.iter().map(move |n| classify(o, n)))
        .min()
        .unwrap_or(EvasionHint::Unclassified)
}

fn evaluate(hash: &str, group: &[Observation<'_>], added: &AddedRule) -> Option<EvasionCandidate> {
    if !group
        .iter()
        .any(|o| o.prepared.as_ref().is_some_and(|p| rule_matches_prepared(&added.rule, p)))
    {
        return None;
    }
    let mut per_day: BTreeMap<i64, BTreeSet<&str>> = BTreeMap::new();
    for o in group.iter().filter(|o| o.record.day != added.added.0) {
        per_day.entry(o.record.day).or_default().insert(&o.record.request.url);
    }
    let (mut before_changes, mut before_steps, mut after_changes, mut after_days) = (0usize, 0usize, 0usize, 0usize);
    let mut previous: Option<&BTreeSet<&str>> = None;
    for (&day, urls) in &per_day {
        let after = day > added.added.0;
        if after {
            after_days += 1;
        }
        if let Some(prev) = previous {
            let changes = urls.iter().filter(|u| !prev.contains(*u)).count();
            if after {
                after_changes += changes;
            } else {
                before_changes += changes;
                before_steps += 1;
            }
        }
        previous = Some(urls);
    }
    if before_steps == 0 || after_days == 0 {
        return None;
    }
    let rate_before = before_changes as f64 / before_steps as f64;
    let rate_after = after_changes as f64 / after_days as f64;
    if rate_after <= rate_before {
        return None;
    }

    let before: Vec<&Observation<'_>> = group.iter().filter(|o| o.record.day < added.added.0).collect();
    let after: Vec<&Observation<'_>> = group.iter().filter(|o| o.record.day > added.added.0).collect();
    let urls_before: BTreeSet<String> = before.iter().map(|o| o.record.request.url.clone()).collect();
    let urls_after: BTreeSet<String> = after.iter().map(|o| o.record.request.url.clone()).collect();
    let hint = hint_for(&before, &after, &urls_before, &urls_after);
    let sizes: BTreeSet<u64> = group.iter().filter_map(|o| o.record.request.content_size).collect();
    Some(EvasionCandidate {
        content_hash: hash.into(),
        rule: added.rule.id().clone(),
        rule_added: added.added,
        urls_before,
        urls_after,
        sizes: sizes.into_iter().collect(),
        rate_before,
        rate_after,
        hint,
    })
}

/// Runs the detection over a snapshot series and the request logs collected
/// during the same period. Requests without a content hash are ignored.
/// Candidates come out sorted by hash, then addition day, then rule.
pub fn detect_evasions(series: &SnapshotSeries, logs: &[RequestLog], suffixes: &SuffixTable, config: &EvasionConfig) -> Vec<EvasionCandidate> {
    let rules = added_rules(series, config);
    if rules.is_empty() {
        return Vec::new();
    }
    let mut groups: BTreeMap<&str, Vec<&LogRecord>> = BTreeMap::new();
    for record in logs.iter().flat_map(|l| &l.records) {
        if let Some(hash) = record.request.content_hash.as_deref() {
            groups.entry(hash).or_default().push(record);
        }
    }

    let mut out = Vec::new();
    for (hash, records) in groups {
        let max_size = records.iter().filter_map(|r| r.request.content_size).max();
        if max_size.map_or(true, |s| s < config.min_size_bytes) {
            continue;
        }
        let distinct: BTreeSet<&str> = records.iter().map(|r| r.request.url.as_str()).collect();
        if distinct.len() < 2 {
            continue;
        }
        let group: Vec<Observation<'_>> = records
            .iter()
            .map(|r| Observation {
                record: r,
                prepared: PreparedRequest::new(&r.request, suffixes).ok(),
                page_domain: host_domain(&r.page_url, suffixes),
                request_domain: host_domain(&r.request.url, suffixes),
            })
            .collect();
        for added in &rules {
            out.extend(evaluate(hash, &group, added));
        }
    }
    out.sort_by(|a, b| {
        (a.content_hash.as_str(), a.rule_added, a.rule.as_str()).cmp(&(b.content_hash.as_str(), b.rule_added, b.rule.as_str()))
    });
    out
}
