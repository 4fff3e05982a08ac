//! Token-bucket index over network and exception rules.
//!
//! A rule is filed under one token taken from its literals: a maximal run of
//! `[a-z0-9%]`, at least three bytes long, whose neighbours in the pattern
//! guarantee a non-token byte (or the URL edge) on both sides. Any URL the
//! rule matches then contains that run as one of its own maximal tokens, so
//! looking up the URL's tokens plus the fallback list yields every candidate.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use hashbrown::HashMap;

use crate::matcher::{rule_matches_prepared, Decision, PreparedRequest};
use crate::rule::{Anchor, FilterRule, PatternPart, PatternSpec, RuleKind};

/// Shortest token that is worth a bucket.
pub const MIN_TOKEN_LEN: usize = 3;

fn is_token_byte(byte: u8) -> bool {
    byte.is_ascii_lowercase() || byte.is_ascii_digit() || byte == b'%'
}

fn is_token_byte_any_case(byte: u8) -> bool {
    is_token_byte(byte.to_ascii_lowercase())
}

/// Tokens of `pattern` that are bounded on both sides, lowercased and
/// deduplicated, in pattern order.
pub fn eligible_tokens(pattern: &PatternSpec) -> Vec<String> {
    let parts = &pattern.parts;
    let mut tokens: Vec<String> = Vec::new();
    for (i, part) in parts.iter().enumerate() {
        let PatternPart::Literal(text) = part else { continue };
        let bytes = text.as_bytes();
        let left_edge = if i == 0 {
            pattern.anchor != Anchor::None
        } else {
            parts[i - 1] == PatternPart::Separator
        };
        let right_edge = if i + 1 == parts.len() {
            pattern.end_anchored
        } else {
            parts[i + 1] == PatternPart::Separator
        };
        let mut start = 0;
        while start < bytes.len() {
            if !is_token_byte_any_case(bytes[start]) {
                start += 1;
                continue;
            }
            let mut end = start;
            while end < bytes.len() && is_token_byte_any_case(bytes[end]) {
                end += 1;
            }
            let bounded = (start > 0 || left_edge) && (end < bytes.len() || right_edge);
            if bounded && end - start >= MIN_TOKEN_LEN {
                let token = text[start..end].to_ascii_lowercase();
                if !tokens.contains(&token) {
                    tokens.push(token);
                }
            }
            start = end;
        }
    }
    tokens
}

/// Maximal token runs of an already lowercased URL, at least
/// [`MIN_TOKEN_LEN`] long, deduplicated.
pub fn url_tokens(url_lower: &str) -> Vec<&str> {
    let bytes = url_lower.as_bytes();
    let mut tokens: Vec<&str> = Vec::new();
    let mut start = 0;
    while start < bytes.len() {
        if !is_token_byte(bytes[start]) {
            start += 1;
            continue;
        }
        let mut end = start;
        while end < bytes.len() && is_token_byte(bytes[end]) {
            end += 1;
        }
        if end - start >= MIN_TOKEN_LEN {
            let token = &url_lower[start..end];
            if !tokens.contains(&token) {
                tokens.push(token);
            }
        }
        start = end;
    }
    tokens
}

/// Picks the token with the smallest bucket; ties go to the longer token,
/// then the lexicographically smaller one.
fn choose_token<F: Fn(&str) -> usize>(tokens: &[String], frequency: F) -> Option<&String> {
    tokens.iter().min_by(|a, b| {
        frequency(a)
            .cmp(&frequency(b))
            .then(b.len().cmp(&a.len()))
            .then(a.cmp(b))
    })
}

#[derive(Debug, Clone, Default)]
struct Buckets {
    buckets: HashMap<Box<str>, Vec<u32>>,
    fallback: Vec<u32>,
    /// Where each member was filed; `None` means the fallback list.
    placement: HashMap<u32, Option<Box<str>>>,
}

impl Buckets {
    fn file(&mut self, position: u32, token: Option<&str>) {
        match token {
            Some(token) => {
                let key: Box<str> = token.into();
                self.buckets.entry(key.clone()).or_default().push(position);
                self.placement.insert(position, Some(key));
            }
            None => {
                self.fallback.push(position);
                self.placement.insert(position, None);
            }
        }
    }

    fn insert(&mut self, position: u32, pattern: &PatternSpec) -> bool {
        if self.placement.contains_key(&position) {
            return false;
        }
        let tokens = eligible_tokens(pattern);
        let chosen = choose_token(&tokens, |t| self.buckets.get(t).map_or(0, Vec::len)).cloned();
        self.file(position, chosen.as_deref());
        true
    }

    fn remove(&mut self, position: u32) -> bool {
        let Some(placement) = self.placement.remove(&position) else {
            return false;
        };
        let list = match &placement {
            Some(token) => self.buckets.get_mut(token).expect("placement names a bucket"),
            None => &mut self.fallback,
        };
        if let Some(at) = list.iter().position(|&p| p == position) {
            list.swap_remove(at);
        }
        if let Some(token) = placement {
            if self.buckets.get(&token).is_some_and(Vec::is_empty) {
                self.buckets.remove(&token);
            }
        }
        true
    }

    fn len(&self) -> usize {
        self.placement.len()
    }

    /// Smallest member position whose rule matches.
    fn first_match(&self, rules: &[FilterRule], tokens: &[&str], request: &PreparedRequest<'_>) -> Option<u32> {
        let mut best: Option<u32> = None;
        let mut scan = |list: &[u32]| {
            for &position in list {
                if best.is_some_and(|b| position >= b) {
                    continue;
                }
                if rule_matches_prepared(&rules[position as usize], request) {
                    best = Some(position);
                }
            }
        };
        scan(&self.fallback);
        for token in tokens {
            if let Some(list) = self.buckets.get(*token) {
                scan(list);
            }
        }
        best
    }

    fn candidates(&self, tokens: &[&str], out: &mut Vec<u32>) {
        out.extend_from_slice(&self.fallback);
        for token in tokens {
            if let Some(list) = self.buckets.get(*token) {
                out.extend_from_slice(list);
            }
        }
    }
}

/// Index over a subset of a shared rule list. Positions refer to the shared
/// list, so "first match" always means first in list order, whatever subset
/// the index holds.
#[derive(Debug, Clone)]
pub struct RuleIndex {
    rules: Arc<[FilterRule]>,
    network: Buckets,
    exception: Buckets,
}

impl RuleIndex {
    /// Indexes every network and exception rule of `rules`.
    pub fn build(rules: &[FilterRule]) -> Self {
        let shared: Arc<[FilterRule]> = rules.into();
        let count = shared.len();
        RuleIndex::with_members(shared, 0..count)
    }

    /// Indexes the given positions of a shared list. Non-matchable rules are
    /// skipped.
    pub fn with_members<I: IntoIterator<Item = usize>>(rules: Arc<[FilterRule]>, members: I) -> Self {
        let members: Vec<u32> = members
            .into_iter()
            .filter(|&p| rules[p].kind().is_matchable())
            .map(|p| u32::try_from(p).expect("rule lists are bounded by u32"))
            .collect();

        let mut frequency: HashMap<String, usize> = HashMap::new();
        let token_lists: Vec<Vec<String>> = members
            .iter()
            .map(|&p| {
                let tokens = eligible_tokens(rules[p as usize].pattern().expect("matchable rule"));
                for token in &tokens {
                    *frequency.entry(token.clone()).or_default() += 1;
                }
                tokens
            })
            .collect();

        let mut index = RuleIndex {
            rules,
            network: Buckets::default(),
            exception: Buckets::default(),
        };
        for (&position, tokens) in members.iter().zip(&token_lists) {
            let chosen = choose_token(tokens, |t| frequency.get(t).copied().unwrap_or(0)).cloned();
            let buckets = index.buckets_for(position);
            if !buckets.placement.contains_key(&position) {
                buckets.file(position, chosen.as_deref());
            }
        }
        index
    }

    fn buckets_for(&mut self, position: u32) -> &mut Buckets {
        if self.rules[position as usize].kind() == RuleKind::Exception {
            &mut self.exception
        } else {
            &mut self.network
        }
    }

    pub fn rules(&self) -> &Arc<[FilterRule]> {
        &self.rules
    }

    /// Adds one position, filing it under its currently smallest bucket.
    /// Returns false if it was already present or is not matchable.
    pub fn insert(&mut self, position: usize) -> bool {
        let rule = &self.rules[position];
        if !rule.kind().is_matchable() {
            return false;
        }
        let pattern = rule.pattern().expect("matchable rule").clone();
        let position = position as u32;
        self.buckets_for(position).insert(position, &pattern)
    }

    pub fn remove(&mut self, position: usize) -> bool {
        let position = position as u32;
        self.buckets_for(position).remove(position)
    }

    pub fn contains(&self, position: usize) -> bool {
        let position = position as u32;
        self.network.placement.contains_key(&position) || self.exception.placement.contains_key(&position)
    }

    /// Number of indexed rules.
    pub fn len(&self) -> usize {
        self.network.len() + self.exception.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn fallback_len(&self) -> usize {
        self.network.fallback.len() + self.exception.fallback.len()
    }

    pub fn bucket_count(&self) -> usize {
        self.network.buckets.len() + self.exception.buckets.len()
    }

    /// Indexed positions, ascending.
    pub fn members(&self) -> Vec<usize> {
        let mut members: Vec<usize> = self
            .network
            .placement
            .keys()
            .chain(self.exception.placement.keys())
            .map(|&p| p as usize)
            .collect();
        members.sort_unstable();
        members
    }

    /// The bucket token a position was filed under (`None` for the fallback
    /// list or for non-members).
    pub fn bucket_of(&self, position: usize) -> Option<&str> {
        let position = position as u32;
        self.network
            .placement
            .get(&position)
            .or_else(|| self.exception.placement.get(&position))
            .and_then(|p| p.as_deref())
    }

    /// Candidate positions for a request: fallback plus the buckets of the
    /// URL's tokens. May contain positions that do not match.
    pub fn candidates(&self, request: &PreparedRequest<'_>) -> Vec<usize> {
        let tokens = url_tokens(&request.url_lower);
        let mut out = Vec::new();
        self.network.candidates(&tokens, &mut out);
        self.exception.candidates(&tokens, &mut out);
        let mut out: Vec<usize> = out.into_iter().map(|p| p as usize).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// First matching network and exception positions, in list order.
    pub fn first_matches(&self, request: &PreparedRequest<'_>) -> (Option<usize>, Option<usize>) {
        let tokens = url_tokens(&request.url_lower);
        let exception = self.exception.first_match(&self.rules, &tokens, request);
        let network = self.network.first_match(&self.rules, &tokens, request);
        (network.map(|p| p as usize), exception.map(|p| p as usize))
    }

    /// First matching exception position only.
    pub fn first_exception(&self, request: &PreparedRequest<'_>) -> Option<usize> {
        let tokens = url_tokens(&request.url_lower);
        self.exception
            .first_match(&self.rules, &tokens, request)
            .map(|p| p as usize)
    }

    /// Every matching exception position, ascending.
    pub fn matching_exceptions(&self, request: &PreparedRequest<'_>) -> Vec<usize> {
        let tokens = url_tokens(&request.url_lower);
        let mut out = Vec::new();
        self.exception.candidates(&tokens, &mut out);
        let mut out: Vec<usize> = out
            .into_iter()
            .filter(|&p| rule_matches_prepared(&self.rules[p as usize], request))
            .map(|p| p as usize)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Verdict for a request that passed the heuristic pre-checks.
    pub fn decide_prepared(&self, request: &PreparedRequest<'_>) -> Decision {
        let (network, exception) = self.first_matches(request);
        Decision::from_matches(
            network.map(|p| self.rules[p].id().clone()),
            exception.map(|p| self.rules[p].id().clone()),
        )
    }
}

/// Linear scan over every rule in list order; the unindexed baseline.
pub fn decide_linear(rules: &[FilterRule], request: &PreparedRequest<'_>) -> Decision {
    let mut network = None;
    let mut exception = None;
    for rule in rules {
        let slot = match rule.kind() {
            RuleKind::Network => &mut network,
            RuleKind::Exception => &mut exception,
            _ => continue,
        };
        if slot.is_none() && rule_matches_prepared(rule, request) {
            *slot = Some(rule.id().clone());
        }
        if network.is_some() && exception.is_some() {
            break;
        }
    }
    Decision::from_matches(network, exception)
}
