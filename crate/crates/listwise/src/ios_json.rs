//! Content-blocker JSON output and a semantic check of exported documents
//! against the matcher.

use listwise_core::ios::{ActionType, ContentBlockerRule, IosExport, ResourceClass, SkipReason, Trigger};
use listwise_core::matcher::PreparedRequest;
use listwise_core::{DecisionStatus, FilterRule, Request, RuleId, RuleIndex, SuffixTable};
use regex::bytes::{Regex, RegexBuilder};

/// Pretty-printed JSON array with a trailing newline. Field order is fixed by
/// the type definitions, so equal inputs give byte-identical output.
pub fn to_json(rules: &[ContentBlockerRule]) -> String {
    let mut text = serde_json::to_string_pretty(rules).expect("content-blocker rules always serialize");
    text.push('\n');
    text
}

pub fn from_json(text: &str) -> serde_json::Result<Vec<ContentBlockerRule>> {
    serde_json::from_str(text)
}

/// Plain-text summary of an export.
pub fn export_report_text(export: &IosExport) -> String {
    let r = &export.report;
    let mut out = String::new();
    out.push_str(&format!("exported_count={}\n", r.exported_count));
    out.push_str(&format!("blocks={}\n", r.blocks));
    out.push_str(&format!("exceptions={}\n", r.exceptions));
    out.push_str(&format!("skipped={}\n", r.skipped.len()));
    out.push_str(&format!("truncated={}\n", r.truncated));
    out.push_str(&format!("limit={}\n", r.limit));
    out.push_str("note=separator and trailing-anchor translation relies on optional groups; no alternation is emitted\n");
    for skip in &r.skipped {
        out.push_str(&format!("skip\t{}\t{}\n", skip.reason.describe(), skip.rule));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub url: String,
    pub expected: DecisionStatus,
    pub exported: DecisionStatus,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnownGap {
    pub url: String,
    /// A skipped or truncated rule matching the request.
    pub rule: RuleId,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerifyReport {
    pub checked: usize,
    pub mismatches: Vec<Mismatch>,
    pub known_gaps: Vec<KnownGap>,
    /// Requests whose URLs could not be parsed.
    pub unparsable: usize,
}

#[derive(Debug, thiserror::Error)]
#[error("entry {index}: url-filter {filter:?} does not compile: {source}")]
pub struct BadFilter {
    pub index: usize,
    pub filter: String,
    #[source]
    pub source: regex::Error,
}

struct CompiledEntry<'a> {
    regex: Regex,
    trigger: &'a Trigger,
    action: ActionType,
}

fn domain_listed(host: &str, entries: &[String]) -> bool {
    entries.iter().any(|entry| match entry.strip_prefix('*') {
        Some(domain) => host == domain || host.strip_suffix(domain).is_some_and(|rest| rest.ends_with('.')),
        None => host == entry,
    })
}

fn triggers(entry: &CompiledEntry<'_>, request: &PreparedRequest<'_>) -> bool {
    let t = entry.trigger;
    if let Some(classes) = &t.resource_type {
        if !classes.contains(&ResourceClass::of(request.resource_type)) {
            return false;
        }
    }
    if let Some(loads) = &t.load_type {
        let wanted = if request.third_party {
            listwise_core::ios::LoadType::ThirdParty
        } else {
            listwise_core::ios::LoadType::FirstParty
        };
        if !loads.contains(&wanted) {
            return false;
        }
    }
    let host = request.initiator_host.as_deref();
    if let Some(domains) = &t.if_domain {
        if !host.is_some_and(|h| domain_listed(h, domains)) {
            return false;
        }
    }
    if let Some(domains) = &t.unless_domain {
        if host.is_some_and(|h| domain_listed(h, domains)) {
            return false;
        }
    }
    entry.regex.is_match(request.url.as_bytes())
}

fn evaluate(entries: &[CompiledEntry<'_>], request: &PreparedRequest<'_>) -> DecisionStatus {
    let (mut blocked, mut excepted) = (false, false);
    for entry in entries {
        if !triggers(entry, request) {
            continue;
        }
        match entry.action {
            ActionType::Block => {
                blocked = true;
                excepted = false;
            }
            ActionType::IgnorePreviousRules => {
                if blocked {
                    blocked = false;
                    excepted = true;
                }
            }
        }
    }
    match (blocked, excepted) {
        (true, _) => DecisionStatus::Blocked,
        (false, true) => DecisionStatus::Excepted,
        (false, false) => DecisionStatus::Allowed,
    }
}

/// Compares the matcher's verdict over `rules` with an in-order evaluation
/// of the exported entries for every request of `corpus`. Requests matched
/// by a rule that was skipped or truncated away are reported as known gaps
/// and not compared. Both sides share the matcher's pre-checks (top-level
/// documents and non-web schemes are never blocked) and its first/third-party
/// classification.
pub fn verify_export(rules: &[FilterRule], export: &IosExport, corpus: &[Request], suffixes: &SuffixTable) -> Result<VerifyReport, BadFilter> {
    let entries = export
        .rules
        .iter()
        .enumerate()
        .map(|(index, rule)| {
            let regex = RegexBuilder::new(&rule.trigger.url_filter)
                .unicode(false)
                .case_insensitive(!rule.trigger.url_filter_is_case_sensitive)
                .dot_matches_new_line(true)
                .build()
                .map_err(|source| BadFilter {
                    index,
                    filter: rule.trigger.url_filter.clone(),
                    source,
                })?;
            Ok(CompiledEntry {
                regex,
                trigger: &rule.trigger,
                action: rule.action.kind,
            })
        })
        .collect::<Result<Vec<_>, BadFilter>>()?;

    let exported: std::collections::BTreeSet<&RuleId> = export.sources.iter().collect();
    let left_out: Vec<&FilterRule> = rules
        .iter()
        .filter(|r| r.kind().is_matchable() && !exported.contains(r.id()))
        .collect();
    let index = RuleIndex::build(rules);

    let mut report = VerifyReport::default();
    for request in corpus {
        let prepared = match PreparedRequest::for_decision(request, suffixes) {
            Ok(Some(p)) => p,
            Ok(None) => {
                report.checked += 1;
                continue;
            }
            Err(_) => {
                report.unparsable += 1;
                continue;
            }
        };
        if let Some(rule) = left_out
            .iter()
            .find(|r| listwise_core::matcher::rule_matches_prepared(r, &prepared))
        {
            report.known_gaps.push(KnownGap {
                url: request.url.clone(),
                rule: rule.id().clone(),
            });
            continue;
        }
        report.checked += 1;
        let expected = index.decide_prepared(&prepared).status;
        let got = evaluate(&entries, &prepared);
        if expected != got {
            report.mismatches.push(Mismatch {
                url: request.url.clone(),
                expected,
                exported: got,
            });
        }
    }
    Ok(report)
}

/// Count of skipped rules per reason, in a stable order.
pub fn skip_counts(export: &IosExport) -> Vec<(&'static str, usize)> {
    let mut counts: std::collections::BTreeMap<&'static str, usize> = Default::default();
    for skip in &export.report.skipped {
        *counts.entry(SkipReason::describe(skip.reason)).or_default() += 1;
    }
    counts.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use listwise_core::ios::{export_ios, ExportOptions};
    use listwise_core::{parse_list, ResourceType};

    #[test]
    fn json_shape() {
        let (rules, _) = parse_list("||ads.example^$third-party\n@@||ads.example/ok$script");
        let export = export_ios(&rules, ExportOptions::default()).unwrap();
        let json = to_json(&export.rules);
        let first = json.find("\"url-filter\"").unwrap();
        assert!(first < json.find("url-filter-is-case-sensitive").unwrap());
        assert!(json.find("\"trigger\"").unwrap() < json.find("\"action\"").unwrap());
        assert!(json.contains("\"load-type\": [\n        \"third-party\"\n      ]"));
        assert!(json.contains("\"type\": \"ignore-previous-rules\""));
        assert!(!json.contains("if-domain"));
        assert_eq!(from_json(&json).unwrap(), export.rules);
    }

    #[test]
    fn single_rule_blocks_on_both_sides() {
        let (rules, _) = parse_list("||ads.example^");
        let export = export_ios(&rules, ExportOptions::default()).unwrap();
        let corpus = vec![
            Request::new("https://ads.example/x", "https://site.com/", ResourceType::Image),
            Request::new("https://ads.example.org/x", "https://site.com/", ResourceType::Image),
            Request::new("https://sub.ads.example:8080/x", "https://site.com/", ResourceType::Image),
            Request::new("https://notads.example/x", "https://site.com/", ResourceType::Image),
        ];
        let report = verify_export(&rules, &export, &corpus, &SuffixTable::builtin()).unwrap();
        assert_eq!(report.checked, 4);
        assert!(report.mismatches.is_empty(), "{:?}", report.mismatches);
    }

    #[test]
    fn skipped_rules_are_known_gaps() {
        let (rules, _) = parse_list("/banner.$domain=a.com|~b.a.com");
        let export = export_ios(&rules, ExportOptions::default()).unwrap();
        assert_eq!(export.report.skipped.len(), 1);
        let corpus = vec![Request::new("https://x.com/banner.gif", "https://a.com/", ResourceType::Image)];
        let report = verify_export(&rules, &export, &corpus, &SuffixTable::builtin()).unwrap();
        assert_eq!((report.checked, report.known_gaps.len(), report.mismatches.len()), (0, 1, 0));
    }
}
