//! Brute-force versus indexed matcher timing.

use std::time::Instant;

use listwise_core::index::decide_linear;
use listwise_core::matcher::PreparedRequest;
use listwise_core::replay::{LatencySummary, RequestLog};
use listwise_core::{FilterRule, RuleIndex, SuffixTable};

#[derive(Debug, Clone, PartialEq)]
pub struct MatcherBench {
    pub rules: usize,
    /// Requests timed on both sides.
    pub sampled: usize,
    pub indexed: LatencySummary,
    pub brute: LatencySummary,
    pub indexed_total_ns: u64,
    pub brute_total_ns: u64,
    /// Sampled requests on which the two sides disagreed.
    pub disagreements: usize,
}

impl MatcherBench {
    /// Total brute-force time over total indexed time.
    pub fn speedup(&self) -> f64 {
        self.brute_total_ns as f64 / self.indexed_total_ns.max(1) as f64
    }
}

/// Times every `sample_every`-th decidable request of `log` against an
/// index over `rules` and against a linear scan of the same rules. Each
/// sampled request is decided once untimed on both sides first.
pub fn bench_matchers(rules: &[FilterRule], log: &RequestLog, suffixes: &SuffixTable, sample_every: usize) -> MatcherBench {
    let index = RuleIndex::build(rules);
    let matchable: Vec<FilterRule> = rules.iter().filter(|r| r.kind().is_matchable()).cloned().collect();
    let prepared: Vec<PreparedRequest<'_>> = log
        .records
        .iter()
        .step_by(sample_every.max(1))
        .filter_map(|r| PreparedRequest::for_decision(&r.request, suffixes).ok().flatten())
        .collect();

    let mut disagreements = 0;
    for request in &prepared {
        let a = index.decide_prepared(request);
        let b = decide_linear(&matchable, request);
        if a != b {
            disagreements += 1;
        }
    }

    let mut indexed = Vec::with_capacity(prepared.len());
    let mut brute = Vec::with_capacity(prepared.len());
    for request in &prepared {
        let start = Instant::now();
        std::hint::black_box(index.decide_prepared(request));
        indexed.push(start.elapsed().as_nanos() as u64);
        let start = Instant::now();
        std::hint::black_box(decide_linear(&matchable, request));
        brute.push(start.elapsed().as_nanos() as u64);
    }
    MatcherBench {
        rules: matchable.len(),
        sampled: prepared.len(),
        indexed_total_ns: indexed.iter().sum(),
        brute_total_ns: brute.iter().sum(),
        indexed: LatencySummary::from_samples(&mut indexed),
        brute: LatencySummary::from_samples(&mut brute),
        disagreements,
    }
}
