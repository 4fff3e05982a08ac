//! Thread-safe wrapper for running synchronous decisions and background
//! hybrid evaluation concurrently.

use std::sync::{PoisonError, RwLock};
use std::time::Instant;

use listwise_core::matcher::PreparedRequest;
use listwise_core::replay::Clock;
use listwise_core::strategy::{AsyncOutcome, HybridCounters};
use listwise_core::{Decision, MatchError, Request, Strategy, SuffixTable};

/// Nanoseconds since the clock was created.
#[derive(Debug, Clone, Copy)]
pub struct MonotonicClock {
    origin: Instant,
}

impl MonotonicClock {
    pub fn new() -> Self {
        MonotonicClock { origin: Instant::now() }
    }
}

impl Default for MonotonicClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for MonotonicClock {
    fn now_ns(&self) -> u64 {
        self.origin.elapsed().as_nanos() as u64
    }
}

/// A strategy shared between request threads and async evaluators.
///
/// Decisions and cold-set inspection take the read lock; only applying a
/// finding (counting it and promoting rules) takes the write lock, so a
/// decision sees the hot set either before or after a promotion.
#[derive(Debug)]
pub struct SharedStrategy {
    inner: RwLock<Strategy>,
}

impl SharedStrategy {
    pub fn new(strategy: Strategy) -> Self {
        SharedStrategy {
            inner: RwLock::new(strategy),
        }
    }

    pub fn decide_sync(&self, request: &Request, suffixes: &SuffixTable) -> Result<Decision, MatchError> {
        self.inner
            .read()
            .unwrap_or_else(PoisonError::into_inner)
            .decide_sync(request, suffixes)
    }

    /// Background half of the hybrid strategy. A no-op for other modes.
    pub fn evaluate_async(&self, request: &Request, sync: &Decision, suffixes: &SuffixTable) -> AsyncOutcome {
        let Ok(Some(prepared)) = PreparedRequest::for_decision(request, suffixes) else {
            return AsyncOutcome::None;
        };
        let finding = {
            let guard = self.inner.read().unwrap_or_else(PoisonError::into_inner);
            match guard.hybrid() {
                Some(state) => state.inspect(&prepared, sync),
                None => return AsyncOutcome::None,
            }
        };
        if finding.is_none() {
            return AsyncOutcome::None;
        }
        let mut guard = self.inner.write().unwrap_or_else(PoisonError::into_inner);
        match guard.hybrid_mut() {
            Some(state) => state.apply(finding, request),
            None => AsyncOutcome::None,
        }
    }

    pub fn snapshot_counters(&self) -> Option<HybridCounters> {
        self.inner
            .read()
            .unwrap_or_else(PoisonError::into_inner)
            .snapshot_counters()
    }

    pub fn into_inner(self) -> Strategy {
        self.inner.into_inner().unwrap_or_else(PoisonError::into_inner)
    }
}
