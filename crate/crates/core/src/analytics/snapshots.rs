use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use super::AnalyticsError;
use crate::day::Day;
use crate::rule::{parse_list, RuleId, RuleKind};

/// One dated list. Only non-comment lines count as rules, identified by their
/// trimmed text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    pub date: Day,
    pub rules: BTreeSet<RuleId>,
}

impl Snapshot {
    pub fn parse(date: Day, text: &str) -> Self {
        let (rules, _) = parse_list(text);
        Snapshot {
            date,
            rules: rules
                .into_iter()
                .filter(|r| r.kind() != RuleKind::Comment)
                .map(|r| r.id().clone())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnapshotSeries {
    snapshots: Vec<Snapshot>,
}

impl SnapshotSeries {
    pub fn new(snapshots: Vec<Snapshot>) -> Result<Self, AnalyticsError> {
        if snapshots.windows(2).any(|w| w[0].date >= w[1].date) {
            return Err(AnalyticsError::UnorderedSnapshots);
        }
        Ok(SnapshotSeries { snapshots })
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    pub fn first_date(&self) -> Option<Day> {
        self.snapshots.first().map(|s| s.date)
    }

    pub fn last_date(&self) -> Option<Day> {
        self.snapshots.last().map(|s| s.date)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DayDelta {
    pub date: Day,
    pub insertions: usize,
    pub removals: usize,
    pub size: usize,
}

/// One add-to-remove span of a rule. Re-insertion after removal opens a new
/// span.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct RuleLifetime {
    pub first_seen: Day,
    pub rule: RuleId,
    pub removed: Option<Day>,
}

impl RuleLifetime {
    pub fn lifetime_days(&self) -> Option<i64> {
        self.removed.map(|r| r.days_since(self.first_seen))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnapshotDiff {
    /// One entry per snapshot; the first has zero insertions and removals.
    pub days: Vec<DayDelta>,
    pub lifetimes: Vec<RuleLifetime>,
}

impl SnapshotDiff {
    pub fn total_insertions(&self) -> usize {
        self.days.iter().map(|d| d.insertions).sum()
    }

    pub fn total_removals(&self) -> usize {
        self.days.iter().map(|d| d.removals).sum()
    }

    /// Days with at least one insertion.
    pub fn insertions(&self) -> BTreeMap<Day, usize> {
        self.days.iter().filter(|d| d.insertions > 0).map(|d| (d.date, d.insertions)).collect()
    }

    pub fn removals(&self) -> BTreeMap<Day, usize> {
        self.days.iter().filter(|d| d.removals > 0).map(|d| (d.date, d.removals)).collect()
    }

    /// Lifetimes that ended.
    pub fn removed_lifetimes(&self) -> impl Iterator<Item = &RuleLifetime> {
        self.lifetimes.iter().filter(|l| l.removed.is_some())
    }
}

pub fn diff_snapshots(series: &SnapshotSeries) -> Result<SnapshotDiff, AnalyticsError> {
    let snapshots = series.snapshots();
    if snapshots.len() < 2 {
        return Err(AnalyticsError::TooFewSnapshots);
    }
    let first = &snapshots[0];
    let mut open: BTreeMap<&RuleId, Day> = first.rules.iter().map(|r| (r, first.date)).collect();
    let mut lifetimes = Vec::new();
    let mut days = Vec::with_capacity(snapshots.len());
    days.push(DayDelta {
        date: first.date,
        insertions: 0,
        removals: 0,
        size: first.rules.len(),
    });

    for pair in snapshots.windows(2) {
        let (before, after) = (&pair[0], &pair[1]);
        let removed: Vec<&RuleId> = before.rules.difference(&after.rules).collect();
        let inserted: Vec<&RuleId> = after.rules.difference(&before.rules).collect();
        for rule in &removed {
            let first_seen = open.remove(*rule).expect("rules present before are open");
            lifetimes.push(RuleLifetime {
                first_seen,
                rule: (*rule).clone(),
                removed: Some(after.date),
            });
        }
        for rule in &inserted {
            open.insert(rule, after.date);
        }
        days.push(DayDelta {
            date: after.date,
            insertions: inserted.len(),
            removals: removed.len(),
            size: after.rules.len(),
        });
    }

    lifetimes.extend(open.into_iter().map(|(rule, first_seen)| RuleLifetime {
        first_seen,
        rule: rule.clone(),
        removed: None,
    }));
    lifetimes.sort();
    Ok(SnapshotDiff { days, lifetimes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn snap(day: i64, text: &str) -> Snapshot {
        Snapshot::parse(Day(day), text)
    }

    #[test]
    fn three_day_example() {
        let series = SnapshotSeries::new(vec![snap(1, "A\nB"), snap(2, "A\nB\nC"), snap(3, "A\nC")]).unwrap();
        let diff = diff_snapshots(&series).unwrap();
        assert_eq!(diff.insertions(), [(Day(2), 1)].into_iter().collect());
        assert_eq!(diff.removals(), [(Day(3), 1)].into_iter().collect());
        let b = diff.lifetimes.iter().find(|l| l.rule.as_str() == "B").unwrap();
        assert_eq!(b.lifetime_days(), Some(2));
        assert_eq!(diff.removed_lifetimes().count(), 1);
    }

    #[test]
    fn identical_snapshots_and_comments() {
        let series = SnapshotSeries::new(vec![snap(1, "! v1\nA"), snap(2, "! v2\nA")]).unwrap();
        let diff = diff_snapshots(&series).unwrap();
        assert_eq!(diff.total_insertions() + diff.total_removals(), 0);
    }

    #[test]
    fn reinsertion_opens_a_new_lifetime() {
        let series = SnapshotSeries::new(vec![snap(0, "A"), snap(5, ""), snap(9, "A"), snap(20, "")]).unwrap();
        let diff = diff_snapshots(&series).unwrap();
        let spans: Vec<Option<i64>> = diff.lifetimes.iter().map(RuleLifetime::lifetime_days).collect();
        assert_eq!(spans, vec![Some(5), Some(11)]);
    }

    #[test]
    fn validation() {
        assert_eq!(
            SnapshotSeries::new(vec![snap(2, "A"), snap(2, "B")]),
            Err(AnalyticsError::UnorderedSnapshots)
        );
        let one = SnapshotSeries::new(vec![snap(1, "A")]).unwrap();
        assert_eq!(diff_snapshots(&one), Err(AnalyticsError::TooFewSnapshots));
    }
}
