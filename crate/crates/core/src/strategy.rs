//! The three ways of applying a list: everything synchronously, only a hot
//! subset synchronously, or the hot subset synchronously with the cold
//! remainder checked after the request has been issued.
//!
//! In hybrid mode a cold rule that turns out to matter is promoted into the
//! synchronous set, so each such rule can let at most one request through.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::index::RuleIndex;
use crate::matcher::{Decision, DecisionStatus, MatchError, PreparedRequest, Request};
use crate::rule::{FilterRule, RuleId, RuleKind};
use crate::suffix::SuffixTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StrategyMode {
    FullSync,
    ReducedSync,
    Hybrid,
}

impl StrategyMode {
    pub fn name(self) -> &'static str {
        match self {
            StrategyMode::FullSync => "full",
            StrategyMode::ReducedSync => "reduced",
            StrategyMode::Hybrid => "hybrid",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "full" | "full-sync" => Some(StrategyMode::FullSync),
            "reduced" | "reduced-sync" => Some(StrategyMode::ReducedSync),
            "hybrid" => Some(StrategyMode::Hybrid),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StrategyConfig {
    pub mode: StrategyMode,
    pub full_rules: Vec<FilterRule>,
    /// Ignored by `FullSync`. An empty set is valid for the other modes.
    pub hot_rule_ids: BTreeSet<RuleId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StrategyError {
    /// A hot-set id names no rule of the full list.
    UnknownHotRule(RuleId),
    AlreadyHot(RuleId),
    /// The id names no cold rule (unknown, or not matchable).
    NotCold(RuleId),
    Match(MatchError),
}

impl fmt::Display for StrategyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StrategyError::UnknownHotRule(id) => write!(f, "hot-set rule {id:?} is not in the full list"),
            StrategyError::AlreadyHot(id) => write!(f, "rule {id:?} is already in the synchronous set"),
            StrategyError::NotCold(id) => write!(f, "rule {id:?} is not in the cold set"),
            StrategyError::Match(err) => err.fmt(f),
        }
    }
}

impl core::error::Error for StrategyError {}

impl From<MatchError> for StrategyError {
    fn from(err: MatchError) -> Self {
        StrategyError::Match(err)
    }
}

/// One cold-to-hot move.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Promotion {
    pub rule: RuleId,
    pub request_url: String,
    pub timestamp: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LateEvents {
    /// Requests issued although the full list blocks them.
    pub late_blocks: u64,
    /// Requests issued on an `Allowed` verdict for which the full list also
    /// names an exception rule.
    pub late_exceptions: u64,
    /// Requests blocked synchronously that a cold exception rule overrides.
    pub late_unblocks: u64,
}

/// Point-in-time hybrid bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct HybridCounters {
    pub hot_size_start: usize,
    pub hot_size_end: usize,
    pub cold_size: usize,
    pub late_blocks: u64,
    pub late_exceptions: u64,
    pub late_unblocks: u64,
    pub promotions: usize,
}

/// What the background check found for one issued request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AsyncOutcome {
    None,
    /// The full list blocks the request; `rule` is now hot.
    LateBlock { rule: RuleId },
    /// The full list excepts (or merely names an exception for) the request.
    /// `network` is set, and promoted, when a cold network rule matched too.
    LateException { exception: RuleId, network: Option<RuleId> },
    /// A cold exception overrides a synchronous block; it is now hot.
    LateUnblock { exception: RuleId },
}

/// Read-only result of checking a request against the cold set. Applying it
/// is a separate step so that concurrent callers can check under a shared
/// lock and promote under an exclusive one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AsyncFinding {
    outcome: AsyncOutcome,
    promote: Vec<usize>,
}

impl AsyncFinding {
    pub fn outcome(&self) -> &AsyncOutcome {
        &self.outcome
    }

    pub fn is_none(&self) -> bool {
        self.outcome == AsyncOutcome::None
    }
}

/// Hot/cold partition with the promotion log.
#[derive(Debug, Clone)]
pub struct HybridState {
    rules: Arc<[FilterRule]>,
    sync_index: RuleIndex,
    async_index: RuleIndex,
    positions: BTreeMap<RuleId, Vec<usize>>,
    promotions: Vec<Promotion>,
    late: LateEvents,
    hot_size_start: usize,
}

impl HybridState {
    fn new(rules: Arc<[FilterRule]>, hot: &[usize]) -> Self {
        let hot_set: BTreeSet<usize> = hot.iter().copied().collect();
        let cold: Vec<usize> = (0..rules.len())
            .filter(|p| rules[*p].kind().is_matchable() && !hot_set.contains(p))
            .collect();
        let mut positions: BTreeMap<RuleId, Vec<usize>> = BTreeMap::new();
        for (p, rule) in rules.iter().enumerate() {
            if rule.kind().is_matchable() {
                positions.entry(rule.id().clone()).or_default().push(p);
            }
        }
        let sync_index = RuleIndex::with_members(rules.clone(), hot.iter().copied());
        let async_index = RuleIndex::with_members(rules.clone(), cold);
        HybridState {
            hot_size_start: sync_index.len(),
            rules,
            sync_index,
            async_index,
            positions,
            promotions: Vec::new(),
            late: LateEvents::default(),
        }
    }

    pub fn sync_index(&self) -> &RuleIndex {
        &self.sync_index
    }

    pub fn async_index(&self) -> &RuleIndex {
        &self.async_index
    }

    pub fn promotions(&self) -> &[Promotion] {
        &self.promotions
    }

    pub fn late_events(&self) -> LateEvents {
        self.late
    }

    pub fn is_hot(&self, id: &RuleId) -> bool {
        self.positions
            .get(id)
            .is_some_and(|ps| ps.iter().any(|&p| self.sync_index.contains(p)))
    }

    /// Ids of every rule currently in the synchronous set, sorted.
    pub fn hot_ids(&self) -> BTreeSet<RuleId> {
        self.sync_index
            .members()
            .into_iter()
            .map(|p| self.rules[p].id().clone())
            .collect()
    }

    pub fn counters(&self) -> HybridCounters {
        HybridCounters {
            hot_size_start: self.hot_size_start,
            hot_size_end: self.sync_index.len(),
            cold_size: self.async_index.len(),
            late_blocks: self.late.late_blocks,
            late_exceptions: self.late.late_exceptions,
            late_unblocks: self.late.late_unblocks,
            promotions: self.promotions.len(),
        }
    }

    /// Checks an issued (or synchronously blocked) request against the cold
    /// set. Requests with any other verdict need no check.
    pub fn inspect(&self, request: &PreparedRequest<'_>, sync: &Decision) -> AsyncFinding {
        let none = AsyncFinding {
            outcome: AsyncOutcome::None,
            promote: Vec::new(),
        };
        if sync.heuristic_allowed {
            return none;
        }
        match sync.status {
            DecisionStatus::Allowed => {
                let (network, _) = self.async_index.first_matches(request);
                let cold_exceptions = self.async_index.matching_exceptions(request);
                match network {
                    Some(network) => {
                        let exception = sync
                            .exception_rule
                            .clone()
                            .or_else(|| cold_exceptions.first().map(|&p| self.rules[p].id().clone()));
                        let mut promote = Vec::with_capacity(1 + cold_exceptions.len());
                        promote.push(network);
                        promote.extend(cold_exceptions);
                        let network_id = self.rules[network].id().clone();
                        let outcome = match exception {
                            None => AsyncOutcome::LateBlock { rule: network_id },
                            Some(exception) => AsyncOutcome::LateException {
                                exception,
                                network: Some(network_id),
                            },
                        };
                        AsyncFinding { outcome, promote }
                    }
                    None => match cold_exceptions.first() {
                        // Only an exception fired and nothing would be blocked:
                        // counted, not promoted.
                        Some(&exception) if sync.exception_rule.is_none() => AsyncFinding {
                            outcome: AsyncOutcome::LateException {
                                exception: self.rules[exception].id().clone(),
                                network: None,
                            },
                            promote: Vec::new(),
                        },
                        _ => none,
                    },
                }
            }
            DecisionStatus::Blocked => match self.async_index.first_exception(request) {
                Some(exception) => AsyncFinding {
                    outcome: AsyncOutcome::LateUnblock {
                        exception: self.rules[exception].id().clone(),
                    },
                    promote: self.async_index.matching_exceptions(request),
                },
                None => none,
            },
            DecisionStatus::Excepted => none,
        }
    }

    /// Counts the finding and performs its promotions. Positions that are no
    /// longer cold (another caller promoted them first) are skipped.
    pub fn apply(&mut self, finding: AsyncFinding, request: &Request) -> AsyncOutcome {
        match &finding.outcome {
            AsyncOutcome::None => return AsyncOutcome::None,
            AsyncOutcome::LateBlock { .. } => self.late.late_blocks += 1,
            AsyncOutcome::LateException { .. } => self.late.late_exceptions += 1,
            AsyncOutcome::LateUnblock { .. } => self.late.late_unblocks += 1,
        }
        for position in finding.promote {
            self.move_to_hot(position, request);
        }
        finding.outcome
    }

    fn move_to_hot(&mut self, position: usize, request: &Request) -> bool {
        if !self.async_index.remove(position) {
            return false;
        }
        self.sync_index.insert(position);
        self.promotions.push(Promotion {
            rule: self.rules[position].id().clone(),
            request_url: request.url.clone(),
            timestamp: request.timestamp,
        });
        true
    }

    /// Moves every cold rule with this id into the synchronous set, together
    /// with the cold exception rules that match `request`.
    pub fn promote(&mut self, id: &RuleId, request: &Request, suffixes: &SuffixTable) -> Result<usize, StrategyError> {
        let positions: Vec<usize> = self.positions.get(id).cloned().unwrap_or_default();
        let cold: Vec<usize> = positions
            .iter()
            .copied()
            .filter(|&p| self.async_index.contains(p))
            .collect();
        if cold.is_empty() {
            return Err(if positions.iter().any(|&p| self.sync_index.contains(p)) {
                StrategyError::AlreadyHot(id.clone())
            } else {
                StrategyError::NotCold(id.clone())
            });
        }
        let exceptions = match PreparedRequest::new(request, suffixes) {
            Ok(prepared) => self.async_index.matching_exceptions(&prepared),
            Err(_) => Vec::new(),
        };
        let mut moved = 0;
        for position in cold.into_iter().chain(exceptions) {
            if self.move_to_hot(position, request) {
                moved += 1;
            }
        }
        Ok(moved)
    }
}

// One per strategy; boxing either variant buys nothing.
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone)]
enum Engine {
    Single(RuleIndex),
    Hybrid(HybridState),
}

/// A configured list-application strategy.
#[derive(Debug, Clone)]
pub struct Strategy {
    mode: StrategyMode,
    rules: Arc<[FilterRule]>,
    engine: Engine,
}

impl Strategy {
    pub fn new(config: StrategyConfig) -> Result<Self, StrategyError> {
        let rules: Arc<[FilterRule]> = config.full_rules.into();
        let matchable: Vec<usize> = (0..rules.len()).filter(|&p| rules[p].kind().is_matchable()).collect();

        let hot: Vec<usize> = if config.mode == StrategyMode::FullSync {
            Vec::new()
        } else {
            let known: BTreeSet<&RuleId> = rules.iter().map(FilterRule::id).collect();
            if let Some(missing) = config.hot_rule_ids.iter().find(|id| !known.contains(id)) {
                return Err(StrategyError::UnknownHotRule(missing.clone()));
            }
            matchable
                .iter()
                .copied()
                .filter(|&p| config.hot_rule_ids.contains(rules[p].id()))
                .collect()
        };

        let engine = match config.mode {
            StrategyMode::FullSync => Engine::Single(RuleIndex::with_members(rules.clone(), matchable)),
            StrategyMode::ReducedSync => Engine::Single(RuleIndex::with_members(rules.clone(), hot)),
            StrategyMode::Hybrid => Engine::Hybrid(HybridState::new(rules.clone(), &hot)),
        };
        Ok(Strategy {
            mode: config.mode,
            rules,
            engine,
        })
    }

    pub fn mode(&self) -> StrategyMode {
        self.mode
    }

    pub fn rules(&self) -> &Arc<[FilterRule]> {
        &self.rules
    }

    /// The index consulted before a request is issued.
    pub fn sync_index(&self) -> &RuleIndex {
        match &self.engine {
            Engine::Single(index) => index,
            Engine::Hybrid(state) => state.sync_index(),
        }
    }

    pub fn hybrid(&self) -> Option<&HybridState> {
        match &self.engine {
            Engine::Hybrid(state) => Some(state),
            Engine::Single(_) => None,
        }
    }

    pub fn hybrid_mut(&mut self) -> Option<&mut HybridState> {
        match &mut self.engine {
            Engine::Hybrid(state) => Some(state),
            Engine::Single(_) => None,
        }
    }

    /// The verdict that decides whether the request is issued.
    pub fn decide_sync(&self, request: &Request, suffixes: &SuffixTable) -> Result<Decision, MatchError> {
        crate::matcher::decide(self.sync_index(), request, suffixes)
    }

    pub fn decide_sync_prepared(&self, request: &PreparedRequest<'_>) -> Decision {
        self.sync_index().decide_prepared(request)
    }

    /// Background check of the cold set. A no-op outside hybrid mode.
    pub fn evaluate_async(&mut self, request: &Request, sync: &Decision, suffixes: &SuffixTable) -> AsyncOutcome {
        let Engine::Hybrid(state) = &mut self.engine else {
            return AsyncOutcome::None;
        };
        let finding = match PreparedRequest::for_decision(request, suffixes) {
            Ok(Some(prepared)) => state.inspect(&prepared, sync),
            _ => return AsyncOutcome::None,
        };
        state.apply(finding, request)
    }

    pub fn promote(&mut self, id: &RuleId, request: &Request, suffixes: &SuffixTable) -> Result<usize, StrategyError> {
        match &mut self.engine {
            Engine::Hybrid(state) => state.promote(id, request, suffixes),
            Engine::Single(_) => Err(StrategyError::NotCold(id.clone())),
        }
    }

    pub fn snapshot_counters(&self) -> Option<HybridCounters> {
        self.hybrid().map(HybridState::counters)
    }

    /// Matchable rules by kind, for reporting.
    pub fn rule_counts(&self) -> (usize, usize) {
        let network = self.rules.iter().filter(|r| r.kind() == RuleKind::Network).count();
        let exception = self.rules.iter().filter(|r| r.kind() == RuleKind::Exception).count();
        (network, exception)
    }
}
