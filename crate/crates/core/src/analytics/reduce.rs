use alloc::vec::Vec;

use super::AnalyticsError;
use crate::replay::UsageProfile;
use crate::rule::FilterRule;

/// Keeps the network and exception rules used at least `min_count` times, in
/// list order. Everything else is dropped.
pub fn reduce_list(full_rules: &[FilterRule], profile: &UsageProfile, min_count: u64) -> Result<Vec<FilterRule>, AnalyticsError> {
    if min_count == 0 {
        return Err(AnalyticsError::InvalidMinCount);
    }
    Ok(full_rules
        .iter()
        .filter(|r| r.kind().is_matchable() && profile.count(r.id()) >= min_count)
        .cloned()
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rule::parse_list;

    #[test]
    fn keeps_used_rules_in_order() {
        let (rules, _) = parse_list("! header\n/a1/*\n/a2/*\n/a3/*\nx.com##.ad\n/a4/*\n@@/a5/*\n/a6/*\n/a7/*\n/a8/*\n/a9/*");
        let mut profile = UsageProfile::default();
        for (id, times) in [("/a9/*", 1), ("/a2/*", 4), ("@@/a5/*", 2)] {
            for _ in 0..times {
                profile.increment(&id.into());
            }
        }
        profile.increment(&"x.com##.ad".into());
        let reduced = reduce_list(&rules, &profile, 1).unwrap();
        let ids: Vec<&str> = reduced.iter().map(|r| r.raw()).collect();
        assert_eq!(ids, ["/a2/*", "@@/a5/*", "/a9/*"]);
        assert_eq!(reduce_list(&rules, &profile, 2).unwrap().len(), 2);
        assert!(reduce_list(&rules, &profile, 5).unwrap().is_empty());
        assert_eq!(reduce_list(&rules, &profile, 0), Err(AnalyticsError::InvalidMinCount));
    }
}
