//! Core of the `listwise` filter-list engine.
//!
//! Everything in this crate is pure computation over in-memory inputs and
//! needs only `alloc`: EasyList-style rule parsing, request matching with a
//! token-bucket index, the full/reduced/hybrid list application strategies,
//! replay accounting, list analytics, and translation to the declarative
//! content-blocker format. Reading files, clocks, and the command line live in
//! the `listwise` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod analytics;
pub mod day;
pub mod index;
pub mod ios;
pub mod matcher;
pub mod replay;
pub mod rule;
pub mod strategy;
pub mod suffix;
pub mod url;

pub use day::Day;
pub use index::RuleIndex;
pub use matcher::{decide, match_rule, Decision, DecisionStatus, MatchError, Request};
pub use rule::{parse_list, parse_rule, FilterRule, ParseStats, ResourceType, RuleId, RuleKind};
pub use strategy::{Strategy, StrategyConfig, StrategyMode};
pub use suffix::{etld_plus_one, SuffixTable};
