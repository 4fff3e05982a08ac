//! Text renderings. Deterministic sections never include wall-clock data;
//! timing goes through [`timing_text`] into its own file.

use std::fmt::Write as _;

use listwise_core::analytics::{AgeComparison, EvasionCandidate, KsResult, SnapshotDiff};
use listwise_core::replay::{LatencySummary, ReplayReport, UsageSummary};
use listwise_core::{ParseStats, RuleKind};

/// Appends `key=value` lines.
pub struct KeyValues(String);

impl KeyValues {
    pub fn new() -> Self {
        KeyValues(String::new())
    }

    pub fn put(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        let _ = writeln!(self.0, "{key}={value}");
        self
    }

    pub fn finish(self) -> String {
        self.0
    }
}

impl Default for KeyValues {
    fn default() -> Self {
        Self::new()
    }
}

pub fn percent(share: f64) -> String {
    format!("{:.2}%", share * 100.0)
}

/// Two-column `value<TAB>cumulative` table.
pub fn cdf_table<V: std::fmt::Display>(points: &[(V, f64)]) -> String {
    let mut out = String::from("value\tcumulative_fraction\n");
    for (value, fraction) in points {
        let _ = writeln!(out, "{value}\t{fraction:.6}");
    }
    out
}

pub fn inspect_text(stats: &ParseStats) -> String {
    let mut out = String::from("kind\tcount\tshare\n");
    for kind in RuleKind::ALL {
        let count = stats.count(kind);
        let share = if kind == RuleKind::Comment { String::from("-") } else { percent(stats.share(count)) };
        let _ = writeln!(out, "{}\t{count}\t{share}", kind.name());
    }
    let _ = writeln!(out, "element+exception\t{}\t{}", stats.cosmetic(), percent(stats.share(stats.cosmetic())));
    out.push('\n');
    let mut kv = KeyValues::new();
    kv.put("total_lines", stats.total)
        .put("network", stats.network)
        .put("exception", stats.exception)
        .put("element", stats.element)
        .put("element_exception", stats.element_exception)
        .put("comment", stats.comment)
        .put("unsupported", stats.unsupported);
    out.push_str(&kv.finish());
    out
}

/// Strategy-table row plus the machine-readable section.
pub fn replay_text(report: &ReplayReport, full_rules: usize, sync_rules: usize) -> String {
    let mode = report.mode.map_or("-", |m| m.name());
    let mut out = String::new();
    let _ = writeln!(out, "strategy\trules_start\trules_end\tblocked\texcepted\tallowed\tlate_blocks\tthird_parties");
    let (start, end, late) = match &report.hybrid {
        Some(h) => (h.hot_size_start, h.hot_size_end, h.late_blocks.to_string()),
        None => (sync_rules, sync_rules, String::from("-")),
    };
    let c = &report.counts;
    let _ = writeln!(
        out,
        "{mode}\t{start}\t{end}\t{}\t{}\t{}\t{late}\t{}",
        c.blocked, c.excepted, c.allowed, report.third_parties_contacted
    );
    out.push('\n');
    let mut kv = KeyValues::new();
    kv.put("mode", mode)
        .put("full_rules", full_rules)
        .put("sync_rules_start", start)
        .put("sync_rules_end", end)
        .put("total_requests", c.total_requests)
        .put("blocked", c.blocked)
        .put("excepted", c.excepted)
        .put("allowed", c.allowed)
        .put("exception_only", c.exception_only)
        .put("heuristic_allowed", c.heuristic)
        .put("malformed_requests", report.malformed_requests)
        .put("third_parties_contacted", report.third_parties_contacted)
        .put("used_rules", report.rule_usage.counts.len());
    if let Some(h) = &report.hybrid {
        kv.put("cold_rules", h.cold_size)
            .put("late_blocks", h.late_blocks)
            .put("late_exceptions", h.late_exceptions)
            .put("late_unblocks", h.late_unblocks)
            .put("promotions", h.promotions)
            .put("blocked_combined", report.blocked_combined());
    }
    out.push_str(&kv.finish());
    out
}

fn latency(kv: &mut KeyValues, prefix: &str, summary: &LatencySummary) {
    kv.put(&format!("{prefix}_samples"), summary.samples)
        .put(&format!("{prefix}_median_ms"), format!("{:.2}", summary.median_ms()))
        .put(&format!("{prefix}_p90_ms"), format!("{:.2}", summary.p90_ms()))
        .put(&format!("{prefix}_median_ns"), summary.median_ns)
        .put(&format!("{prefix}_p90_ns"), summary.p90_ns);
}

pub fn timing_text(report: &ReplayReport) -> String {
    let mut kv = KeyValues::new();
    kv.put("mode", report.mode.map_or("-", |m| m.name()));
    latency(&mut kv, "sync", &report.sync_time);
    if let Some(async_time) = &report.async_time {
        latency(&mut kv, "async", async_time);
    }
    kv.finish()
}

pub fn usage_text(summary: &UsageSummary) -> String {
    let mut out = String::new();
    let labels = ["0", "1-100", "101-1000", ">1000"];
    let _ = writeln!(out, "uses\tshare");
    for (label, share) in labels.iter().zip(summary.bucket_shares) {
        let _ = writeln!(out, "{label}\t{}", percent(share));
    }
    out.push('\n');
    let mut kv = KeyValues::new();
    kv.put("rules", summary.rules)
        .put("used", summary.used)
        .put("used_fraction", format!("{:.6}", summary.used_fraction))
        .put("unused_fraction", format!("{:.6}", summary.unused_fraction));
    out.push_str(&kv.finish());
    out.push('\n');
    out.push_str(&cdf_table(&summary.cdf));
    out
}

pub fn snapshots_text(diff: &SnapshotDiff) -> String {
    let mut out = String::from("date\tinsertions\tremovals\tsize\n");
    for day in &diff.days {
        let _ = writeln!(out, "{}\t{}\t{}\t{}", day.date, day.insertions, day.removals, day.size);
    }
    out.push('\n');
    let ended = diff.removed_lifetimes().count();
    let mut kv = KeyValues::new();
    kv.put("snapshots", diff.days.len())
        .put("inserted", diff.total_insertions())
        .put("removed", diff.total_removals())
        .put("lifetimes", diff.lifetimes.len())
        .put("ended_lifetimes", ended);
    out.push_str(&kv.finish());
    out
}

pub fn ks_text(result: &KsResult, n: usize, m: usize) -> String {
    let mut kv = KeyValues::new();
    kv.put("n_a", n)
        .put("n_b", m)
        .put("d", format!("{:.6}", result.d))
        .put("p_value", format!("{:.6e}", result.p_value));
    kv.finish()
}

pub fn age_tests_text(tests: &[AgeComparison]) -> String {
    let mut out = String::from("year\tbaseline\tn_year\tn_baseline\td\tp_value\n");
    for t in tests {
        let baseline = match t.baseline {
            listwise_core::analytics::AgeBaseline::UnderOneYear => "under-one-year",
            listwise_core::analytics::AgeBaseline::PreviousYear => "previous-year",
        };
        let _ = writeln!(
            out,
            "{}\t{baseline}\t{}\t{}\t{:.6}\t{:.6e}",
            t.year, t.n_year, t.n_baseline, t.result.d, t.result.p_value
        );
    }
    out
}

pub fn evasions_text(candidates: &[EvasionCandidate]) -> String {
    let mut out = String::from("hash\trule\tadded\thint\turls_before\turls_after\trate_before\trate_after\n");
    for c in candidates {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{:.4}\t{:.4}",
            c.content_hash,
            c.rule,
            c.rule_added,
            c.hint.name(),
            c.urls_before.len(),
            c.urls_after.len(),
            c.rate_before,
            c.rate_after
        );
    }
    out.push('\n');
    let mut kv = KeyValues::new();
    kv.put("candidates", candidates.len())
        .put("criterion", "rate_after > rate_before (fixed convention)");
    for hint in listwise_core::analytics::EvasionHint::ALL {
        kv.put(hint.name(), candidates.iter().filter(|c| c.hint == hint).count());
    }
    out.push_str(&kv.finish());
    out
}
