//! Single-rule matching and the blocked/excepted/allowed verdict.
//!
//! Pattern semantics, on the request URL (lowercased unless the rule is
//! `match-case`):
//!
//! * `|` binds the pattern to the start of the URL, a trailing `|` to its end.
//! * `||` binds the first literal to the start of the host or to the position
//!   right after any `.` inside the host.
//! * `*` matches any run of characters.
//! * `^` matches one character outside `[A-Za-z0-9_\-.%]`, or the end of the
//!   URL.
//! * Without an anchor the pattern may match anywhere.

use alloc::string::String;
use core::fmt;
use core::ops::Range;

use crate::index::RuleIndex;
use crate::rule::{Anchor, FilterRule, Party, PatternPart, PatternSpec, ResourceType, RuleId, RuleOptions};
use crate::suffix::{etld_plus_one, SuffixTable};
use crate::url::{is_web_scheme, parse_url, UrlError};

/// A candidate network fetch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Request {
    pub url: String,
    /// First-party page URL; equals `url` for top-level documents.
    pub initiator_url: String,
    pub resource_type: ResourceType,
    /// Seconds since the Unix epoch.
    pub timestamp: i64,
    pub content_hash: Option<String>,
    pub content_size: Option<u64>,
}

impl Request {
    pub fn new(url: &str, initiator_url: &str, resource_type: ResourceType) -> Self {
        Request {
            url: url.into(),
            initiator_url: initiator_url.into(),
            resource_type,
            timestamp: 0,
            content_hash: None,
            content_size: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MatchError {
    MalformedRequest { url: String, reason: UrlError },
}

impl fmt::Display for MatchError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatchError::MalformedRequest { url, reason } => write!(f, "malformed request url {url:?}: {reason}"),
        }
    }
}

impl core::error::Error for MatchError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DecisionStatus {
    Blocked,
    Excepted,
    Allowed,
}

impl DecisionStatus {
    pub fn name(self) -> &'static str {
        match self {
            DecisionStatus::Blocked => "blocked",
            DecisionStatus::Excepted => "excepted",
            DecisionStatus::Allowed => "allowed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decision {
    pub status: DecisionStatus,
    pub network_rule: Option<RuleId>,
    pub exception_rule: Option<RuleId>,
    /// The request never reached rule evaluation.
    pub heuristic_allowed: bool,
}

impl Decision {
    pub fn heuristic() -> Self {
        Decision {
            status: DecisionStatus::Allowed,
            network_rule: None,
            exception_rule: None,
            heuristic_allowed: true,
        }
    }

    /// Builds a decision from the first matching rule of each kind.
    pub fn from_matches(network_rule: Option<RuleId>, exception_rule: Option<RuleId>) -> Self {
        let status = match (&network_rule, &exception_rule) {
            (Some(_), None) => DecisionStatus::Blocked,
            (Some(_), Some(_)) => DecisionStatus::Excepted,
            (None, _) => DecisionStatus::Allowed,
        };
        Decision {
            status,
            network_rule,
            exception_rule,
            heuristic_allowed: false,
        }
    }
}

/// Per-request facts computed once and shared by every rule evaluation.
#[derive(Debug, Clone)]
pub struct PreparedRequest<'a> {
    pub url: &'a str,
    pub url_lower: String,
    pub host: Option<Range<usize>>,
    /// Lowercased first-party host, if the initiator has one.
    pub initiator_host: Option<String>,
    pub third_party: bool,
    pub resource_type: ResourceType,
}

impl<'a> PreparedRequest<'a> {
    /// Parses both URLs. Heuristics are not applied here.
    pub fn new(request: &'a Request, suffixes: &SuffixTable) -> Result<Self, MatchError> {
        let spans = parse_url(&request.url).map_err(|reason| MatchError::MalformedRequest {
            url: request.url.clone(),
            reason,
        })?;
        let initiator = parse_url(&request.initiator_url).map_err(|reason| MatchError::MalformedRequest {
            url: request.initiator_url.clone(),
            reason,
        })?;
        let url_lower = request.url.to_ascii_lowercase();
        let host_lower = spans.host.clone().map(|r| &url_lower[r]);
        let initiator_host = initiator
            .host(&request.initiator_url)
            .map(|h| h.to_ascii_lowercase());
        let third_party = match (host_lower, initiator_host.as_deref()) {
            (Some(host), Some(first)) => etld_plus_one(host, suffixes) != etld_plus_one(first, suffixes),
            _ => true,
        };
        Ok(PreparedRequest {
            url: &request.url,
            url_lower,
            host: spans.host,
            initiator_host,
            third_party,
            resource_type: request.resource_type,
        })
    }

    /// `Ok(None)` when the heuristic pre-checks let the request through
    /// without consulting any rule: top-level documents and non-web schemes.
    pub fn for_decision(request: &'a Request, suffixes: &SuffixTable) -> Result<Option<Self>, MatchError> {
        if request.resource_type == ResourceType::MainDocument {
            return Ok(None);
        }
        let spans = parse_url(&request.url).map_err(|reason| MatchError::MalformedRequest {
            url: request.url.clone(),
            reason,
        })?;
        if !is_web_scheme(spans.scheme(&request.url)) {
            return Ok(None);
        }
        PreparedRequest::new(request, suffixes).map(Some)
    }
}

fn is_separator(byte: u8) -> bool {
    !(byte.is_ascii_alphanumeric() || matches!(byte, b'_' | b'-' | b'.' | b'%'))
}

/// Matches a wildcard-free run of parts at `start`; returns the end offset.
fn match_segment(segment: &[PatternPart], url: &[u8], start: usize) -> Option<usize> {
    let mut pos = start;
    for part in segment {
        match part {
            PatternPart::Literal(text) => {
                let text = text.as_bytes();
                if url.len() - pos < text.len() || &url[pos..pos + text.len()] != text {
                    return None;
                }
                pos += text.len();
            }
            PatternPart::Separator => {
                if pos < url.len() {
                    if !is_separator(url[pos]) {
                        return None;
                    }
                    pos += 1;
                }
            }
            PatternPart::Wildcard => unreachable!("segments never contain wildcards"),
        }
    }
    Some(pos)
}

/// Segments after the first, each preceded by a wildcard. A segment's end
/// offset only grows with its start offset, so the leftmost placement of each
/// middle segment is always the best one.
fn match_tail<'p, I>(mut segments: I, url: &[u8], mut pos: usize, end_anchored: bool) -> bool
where
    I: Iterator<Item = &'p [PatternPart]>,
{
    let mut current = match segments.next() {
        Some(segment) => segment,
        None => return !end_anchored || pos == url.len(),
    };
    loop {
        let next = segments.next();
        let last = next.is_none();
        let mut placed = None;
        for start in pos..=url.len() {
            if let Some(end) = match_segment(current, url, start) {
                if !(last && end_anchored) || end == url.len() {
                    placed = Some(end);
                    break;
                }
            }
        }
        match (placed, next) {
            (None, _) => return false,
            (Some(_), None) => return true,
            (Some(end), Some(segment)) => {
                pos = end;
                current = segment;
            }
        }
    }
}

/// Evaluates only the URL pattern of a rule.
pub fn pattern_matches(pattern: &PatternSpec, url: &str, url_lower: &str, host: Option<Range<usize>>) -> bool {
    let text = if pattern.match_case { url } else { url_lower }.as_bytes();
    let mut segments = pattern.parts.split(|p| *p == PatternPart::Wildcard);
    let first = segments.next().unwrap_or(&[]);
    let single = pattern.parts.iter().all(|p| *p != PatternPart::Wildcard);

    let try_start = |start: usize| -> Option<bool> {
        let end = match_segment(first, text, start)?;
        Some(match_tail(segments.clone(), text, end, pattern.end_anchored))
    };

    match pattern.anchor {
        Anchor::StartOfUrl => try_start(0).unwrap_or(false),
        Anchor::DomainBoundary => {
            let Some(host) = host else { return false };
            let boundaries = core::iter::once(host.start).chain(
                (host.start..host.end)
                    .filter(|&i| text[i] == b'.')
                    .map(|i| i + 1)
                    .filter(|&i| i < host.end),
            );
            for start in boundaries {
                if try_start(start) == Some(true) {
                    return true;
                }
            }
            false
        }
        Anchor::None => {
            for start in 0..=text.len() {
                match try_start(start) {
                    Some(true) => return true,
                    // A later start only pushes the tail further right, unless
                    // the whole pattern is one end-anchored segment.
                    Some(false) if !(single && pattern.end_anchored) => return false,
                    _ => {}
                }
            }
            false
        }
    }
}

fn domain_covers(host: &str, domain: &str) -> bool {
    host == domain
        || (host.len() > domain.len()
            && host.ends_with(domain)
            && host.as_bytes()[host.len() - domain.len() - 1] == b'.')
}

pub(crate) fn options_match(options: &RuleOptions, request: &PreparedRequest<'_>) -> bool {
    if !options.resource_types.allows(request.resource_type) {
        return false;
    }
    match options.party {
        Party::Any => {}
        Party::ThirdOnly if !request.third_party => return false,
        Party::FirstOnly if request.third_party => return false,
        _ => {}
    }
    let initiator = request.initiator_host.as_deref();
    if !options.include_domains.is_empty() {
        match initiator {
            Some(host) if options.include_domains.iter().any(|d| domain_covers(host, d)) => {}
            _ => return false,
        }
    }
    if let Some(host) = initiator {
        if options.exclude_domains.iter().any(|d| domain_covers(host, d)) {
            return false;
        }
    }
    true
}

/// Rule evaluation against an already prepared request. Non-matchable rules
/// never match.
pub fn rule_matches_prepared(rule: &FilterRule, request: &PreparedRequest<'_>) -> bool {
    match (rule.pattern(), rule.options()) {
        (Some(pattern), Some(options)) => {
            options_match(options, request)
                && pattern_matches(pattern, request.url, &request.url_lower, request.host.clone())
        }
        _ => false,
    }
}

/// True iff `rule` matches `request` under the pattern semantics above and
/// all of its options hold.
pub fn match_rule(rule: &FilterRule, request: &Request, suffixes: &SuffixTable) -> Result<bool, MatchError> {
    let prepared = PreparedRequest::new(request, suffixes)?;
    Ok(rule_matches_prepared(rule, &prepared))
}

/// Heuristic pre-checks, then exception and network candidates from `index`.
pub fn decide(index: &RuleIndex, request: &Request, suffixes: &SuffixTable) -> Result<Decision, MatchError> {
    match PreparedRequest::for_decision(request, suffixes)? {
        None => Ok(Decision::heuristic()),
        Some(prepared) => Ok(index.decide_prepared(&prepared)),
    }
}
