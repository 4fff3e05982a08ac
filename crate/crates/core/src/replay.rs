//! Replaying a recorded request log through a strategy.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::matcher::{Decision, DecisionStatus, PreparedRequest, Request};
use crate::rule::{FilterRule, RuleId};
use crate::strategy::{AsyncOutcome, HybridCounters, Strategy, StrategyConfig, StrategyError, StrategyMode};
use crate::suffix::{etld_plus_one, SuffixTable};
use crate::url::parse_url;

pub const SECONDS_PER_DAY: i64 = 86_400;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogRecord {
    /// The visited page that caused the request.
    pub page_url: String,
    pub request: Request,
    /// Days since the Unix epoch.
    pub day: i64,
}

impl LogRecord {
    pub fn new(page_url: &str, request: Request) -> Self {
        LogRecord {
            page_url: page_url.into(),
            day: request.timestamp.div_euclid(SECONDS_PER_DAY),
            request,
        }
    }
}

/// Ordered records, timestamp-nondecreasing within each day.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RequestLog {
    pub records: Vec<LogRecord>,
}

impl RequestLog {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn day_range(&self) -> Option<(i64, i64)> {
        let first = self.records.iter().map(|r| r.day).min()?;
        let last = self.records.iter().map(|r| r.day).max()?;
        Some((first, last))
    }
}

/// Per-rule match counts over a replay window.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UsageProfile {
    pub counts: BTreeMap<RuleId, u64>,
    pub start_day: Option<i64>,
    pub end_day: Option<i64>,
}

impl UsageProfile {
    pub fn count(&self, id: &RuleId) -> u64 {
        self.counts.get(id).copied().unwrap_or(0)
    }

    /// A rule is used once it matched at least one request.
    pub fn is_used(&self, id: &RuleId) -> bool {
        self.count(id) >= 1
    }

    pub fn increment(&mut self, id: &RuleId) {
        *self.counts.entry(id.clone()).or_default() += 1;
    }

    /// Ids with count at least `min_count`.
    pub fn ids_at_least(&self, min_count: u64) -> BTreeSet<RuleId> {
        self.counts
            .iter()
            .filter(|(_, &c)| c >= min_count)
            .map(|(id, _)| id.clone())
            .collect()
    }

    fn extend_window(&mut self, day: i64) {
        self.start_day = Some(self.start_day.map_or(day, |d| d.min(day)));
        self.end_day = Some(self.end_day.map_or(day, |d| d.max(day)));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DecisionCounts {
    pub blocked: u64,
    pub excepted: u64,
    pub allowed: u64,
    pub total_requests: u64,
    /// Allowed requests for which an exception rule matched without any
    /// network rule.
    pub exception_only: u64,
    /// Allowed by the heuristic pre-checks.
    pub heuristic: u64,
}

impl DecisionCounts {
    fn record(&mut self, decision: &Decision) {
        self.total_requests += 1;
        match decision.status {
            DecisionStatus::Blocked => self.blocked += 1,
            DecisionStatus::Excepted => self.excepted += 1,
            DecisionStatus::Allowed => {
                self.allowed += 1;
                if decision.heuristic_allowed {
                    self.heuristic += 1;
                } else if decision.exception_rule.is_some() {
                    self.exception_only += 1;
                }
            }
        }
    }
}

/// Median and 90th percentile of a latency sample, nearest-rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LatencySummary {
    pub samples: usize,
    pub median_ns: u64,
    pub p90_ns: u64,
}

impl LatencySummary {
    pub fn from_samples(samples: &mut [u64]) -> Self {
        if samples.is_empty() {
            return LatencySummary::default();
        }
        samples.sort_unstable();
        let rank = |q: f64| {
            let n = samples.len();
            let k = libm::ceil(q * n as f64) as usize;
            samples[k.clamp(1, n) - 1]
        };
        LatencySummary {
            samples: samples.len(),
            median_ns: rank(0.5),
            p90_ns: rank(0.9),
        }
    }

    /// Milliseconds rounded to 0.01 ms.
    pub fn median_ms(&self) -> f64 {
        ns_to_ms(self.median_ns)
    }

    pub fn p90_ms(&self) -> f64 {
        ns_to_ms(self.p90_ns)
    }
}

pub fn ns_to_ms(ns: u64) -> f64 {
    libm::round(ns as f64 / 10_000.0) / 100.0
}

/// Monotonic nanosecond source. The core crate has no clock of its own.
pub trait Clock {
    fn now_ns(&self) -> u64;
}

/// Clock that never advances; timing fields come out zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn now_ns(&self) -> u64 {
        0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ReplayOptions {
    /// Run every sync decision once, untimed and without async work, before
    /// the measured pass.
    pub warmup: bool,
    /// Keep each record's sync decision in the report.
    pub record_decisions: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReplayReport {
    pub mode: Option<StrategyMode>,
    pub counts: DecisionCounts,
    /// Distinct (day, page eTLD+1, request eTLD+1) triples with differing
    /// domains among requests that were not blocked synchronously.
    pub third_parties_contacted: u64,
    pub sync_time: LatencySummary,
    pub async_time: Option<LatencySummary>,
    pub rule_usage: UsageProfile,
    pub hybrid: Option<HybridCounters>,
    pub malformed_requests: u64,
    /// One entry per record when requested; `None` for malformed records.
    pub decisions: Vec<Option<Decision>>,
}

impl ReplayReport {
    /// Blocks including those found after the request was issued.
    pub fn blocked_combined(&self) -> u64 {
        self.counts.blocked + self.hybrid.map_or(0, |h| h.late_blocks)
    }
}

fn host_of(url: &str) -> Option<String> {
    let spans = parse_url(url).ok()?;
    spans.host(url).map(|h| h.to_ascii_lowercase())
}

/// Replays `log` in order through an existing strategy, so that repeated
/// passes see earlier promotions.
pub fn replay_with<C: Clock + ?Sized>(
    log: &RequestLog,
    strategy: &mut Strategy,
    suffixes: &SuffixTable,
    clock: &C,
    options: ReplayOptions,
) -> ReplayReport {
    if options.warmup {
        for record in &log.records {
            let _ = strategy.decide_sync(&record.request, suffixes);
        }
    }

    let mut report = ReplayReport {
        mode: Some(strategy.mode()),
        ..ReplayReport::default()
    };
    let mut sync_samples: Vec<u64> = Vec::with_capacity(log.len());
    let mut async_samples: Vec<u64> = Vec::new();
    let mut contacts: BTreeSet<(i64, String, String)> = BTreeSet::new();
    let hybrid = strategy.mode() == StrategyMode::Hybrid;

    for record in &log.records {
        let request = &record.request;
        report.rule_usage.extend_window(record.day);

        let started = clock.now_ns();
        let decision = match PreparedRequest::for_decision(request, suffixes) {
            Ok(None) => Ok((Decision::heuristic(), None)),
            Ok(Some(prepared)) => {
                let decision = strategy.decide_sync_prepared(&prepared);
                Ok((decision, Some(prepared)))
            }
            Err(err) => Err(err),
        };
        let elapsed = clock.now_ns().saturating_sub(started);

        let (decision, prepared) = match decision {
            Ok(pair) => pair,
            Err(_) => {
                report.malformed_requests += 1;
                if options.record_decisions {
                    report.decisions.push(None);
                }
                continue;
            }
        };
        sync_samples.push(elapsed);
        report.counts.record(&decision);
        for id in decision.network_rule.iter().chain(decision.exception_rule.iter()) {
            report.rule_usage.increment(id);
        }

        if decision.status != DecisionStatus::Blocked {
            if let (Some(page), Some(host)) = (host_of(&record.page_url), host_of(&request.url)) {
                let page_domain = etld_plus_one(&page, suffixes);
                let request_domain = etld_plus_one(&host, suffixes);
                if page_domain != request_domain {
                    contacts.insert((record.day, page_domain.into(), request_domain.into()));
                }
            }
        }

        if hybrid {
            if let Some(prepared) = prepared.as_ref() {
                let started = clock.now_ns();
                let state = strategy.hybrid_mut().expect("hybrid mode");
                let finding = state.inspect(prepared, &decision);
                let outcome = state.apply(finding, request);
                async_samples.push(clock.now_ns().saturating_sub(started));
                match outcome {
                    AsyncOutcome::None => {}
                    AsyncOutcome::LateBlock { rule } => report.rule_usage.increment(&rule),
                    AsyncOutcome::LateException { exception, network } => {
                        if decision.exception_rule.as_ref() != Some(&exception) {
                            report.rule_usage.increment(&exception);
                        }
                        if let Some(network) = network {
                            report.rule_usage.increment(&network);
                        }
                    }
                    AsyncOutcome::LateUnblock { exception } => report.rule_usage.increment(&exception),
                }
            }
        }

        if options.record_decisions {
            report.decisions.push(Some(decision));
        }
    }

    report.third_parties_contacted = contacts.len() as u64;
    report.sync_time = LatencySummary::from_samples(&mut sync_samples);
    if hybrid {
        report.async_time = Some(LatencySummary::from_samples(&mut async_samples));
        report.hybrid = strategy.snapshot_counters();
    }
    report
}

/// Builds the strategy from `config` and replays `log` once.
pub fn replay<C: Clock + ?Sized>(
    log: &RequestLog,
    config: StrategyConfig,
    suffixes: &SuffixTable,
    clock: &C,
    options: ReplayOptions,
) -> Result<ReplayReport, StrategyError> {
    let mut strategy = Strategy::new(config)?;
    Ok(replay_with(log, &mut strategy, suffixes, clock, options))
}

/// Usage shares over the network and exception rules of a full list.
#[derive(Debug, Clone, PartialEq)]
pub struct UsageSummary {
    pub rules: usize,
    pub used: usize,
    pub used_fraction: f64,
    pub unused_fraction: f64,
    /// (count, cumulative fraction of rules with at most that count).
    pub cdf: Vec<(u64, f64)>,
    /// Shares of rules used 0, 1–100, 101–1,000, and more than 1,000 times.
    pub bucket_shares: [f64; 4],
}

pub fn usage_summary(profile: &UsageProfile, full_rules: &[FilterRule]) -> UsageSummary {
    let ids: BTreeSet<&RuleId> = full_rules
        .iter()
        .filter(|r| r.kind().is_matchable())
        .map(FilterRule::id)
        .collect();
    let mut counts: Vec<u64> = ids.iter().map(|id| profile.count(id)).collect();
    counts.sort_unstable();
    let n = counts.len();
    let used = counts.iter().filter(|&&c| c >= 1).count();
    let fraction = |k: usize| if n == 0 { 0.0 } else { k as f64 / n as f64 };

    let mut cdf: Vec<(u64, f64)> = Vec::new();
    for (i, &count) in counts.iter().enumerate() {
        let share = fraction(i + 1);
        match cdf.last_mut() {
            Some(last) if last.0 == count => last.1 = share,
            _ => cdf.push((count, share)),
        }
    }

    let mut buckets = [0usize; 4];
    for &count in &counts {
        let slot = match count {
            0 => 0,
            1..=100 => 1,
            101..=1000 => 2,
            _ => 3,
        };
        buckets[slot] += 1;
    }

    UsageSummary {
        rules: n,
        used,
        used_fraction: fraction(used),
        unused_fraction: fraction(n - used),
        cdf,
        bucket_shares: buckets.map(fraction),
    }
}
