use listwise_core::analytics::{kolmogorov_survival, ks_two_sample, Ecdf};
use listwise_core::index::decide_linear;
use listwise_core::matcher::{pattern_matches, PreparedRequest};
use listwise_core::rule::{Anchor, PatternPart, PatternSpec};
use listwise_core::{match_rule, parse_list, parse_rule, Request, ResourceType, RuleIndex, RuleKind, SuffixTable};
use proptest::prelude::*;

fn is_separator(b: u8) -> bool {
    !(b.is_ascii_alphanumeric() || matches!(b, b'_' | b'-' | b'.' | b'%'))
}

/// Straightforward backtracking matcher used as the reference.
fn naive_from(parts: &[PatternPart], text: &[u8], pos: usize, end_anchored: bool, fold: bool) -> bool {
    let Some((first, rest)) = parts.split_first() else {
        return !end_anchored || pos == text.len();
    };
    match first {
        PatternPart::Literal(lit) => {
            let lit = lit.as_bytes();
            let end = pos + lit.len();
            end <= text.len()
                && (if fold { text[pos..end].eq_ignore_ascii_case(lit) } else { &text[pos..end] == lit })
                && naive_from(rest, text, end, end_anchored, fold)
        }
        PatternPart::Separator => {
            if pos == text.len() {
                naive_from(rest, text, pos, end_anchored, fold)
            } else {
                is_separator(text[pos]) && naive_from(rest, text, pos + 1, end_anchored, fold)
            }
        }
        PatternPart::Wildcard => (pos..=text.len()).any(|k| naive_from(rest, text, k, end_anchored, fold)),
    }
}

fn naive_match(pattern: &PatternSpec, url: &str, host: Option<std::ops::Range<usize>>) -> bool {
    let text = url.as_bytes();
    let fold = !pattern.match_case;
    let starts: Vec<usize> = match pattern.anchor {
        Anchor::StartOfUrl => vec![0],
        Anchor::None => (0..=text.len()).collect(),
        Anchor::DomainBoundary => match host {
            None => vec![],
            Some(h) => std::iter::once(h.start)
                .chain((h.start..h.end).filter(|&i| text[i] == b'.' && i + 1 < h.end).map(|i| i + 1))
                .collect(),
        },
    };
    starts
        .into_iter()
        .any(|s| naive_from(&pattern.parts, text, s, pattern.end_anchored, fold))
}

fn piece() -> impl Strategy<Value = String> {
    prop_oneof![
        3 => prop::sample::select(vec!["ads", "ad", "x", "banner", "b.c", "160x600", "js", "Ad", "a-b", "a_b", "%2f"]).prop_map(String::from),
        1 => Just("*".to_string()),
        2 => Just("^".to_string()),
        1 => prop::sample::select(vec!["/", ".", "?", "=", "&", ":", "-", "_"]).prop_map(String::from),
    ]
}

fn rule_text() -> impl Strategy<Value = String> {
    (
        prop::bool::weighted(0.15),
        prop::sample::select(vec!["", "", "", "||", "|", "||x.", "|https://"]),
        prop::collection::vec(piece(), 1..5),
        prop::bool::weighted(0.1),
        prop::sample::select(vec!["", "", "", "$third-party", "$~third-party", "$script", "$~image", "$match-case", "$domain=x.com|~a.x.com"]),
    )
        .prop_map(|(exception, anchor, pieces, end, options)| {
            let mut text = String::new();
            if exception {
                text.push_str("@@");
            }
            text.push_str(anchor);
            text.push_str(&pieces.concat());
            if end {
                text.push('|');
            }
            text.push_str(options);
            text
        })
}

fn url_text() -> impl Strategy<Value = String> {
    (
        prop::sample::select(vec!["http", "https", "wss"]),
        prop::sample::select(vec!["x.com", "ads.x.com", "a.x.com", "cdn.ads.net", "ADS.example.org", "b.c.io"]),
        prop::sample::select(vec!["", ":8080"]),
        prop::collection::vec(prop::sample::select(vec!["/", "ads", "Ad", "x", "banner", "-", "_", ".", "?", "=", "160x600", "js", "%2F", "b.c"]), 0..8),
    )
        .prop_map(|(scheme, host, port, path)| format!("{scheme}://{host}{port}{}", path.concat()))
}

fn page_text() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["https://x.com/", "https://a.x.com/p", "https://site.org/", "https://cdn.ads.net/"]).prop_map(String::from)
}

fn resource_type() -> impl Strategy<Value = ResourceType> {
    prop::sample::select(ResourceType::RULE_TYPES.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 2_000,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn pattern_matching_agrees_with_naive_backtracking(rule in rule_text(), url in url_text()) {
        let parsed = parse_rule(&rule);
        if let Some(pattern) = parsed.pattern() {
            let table = SuffixTable::builtin();
            let request = Request::new(&url, "https://x.com/", ResourceType::Script);
            let prepared = PreparedRequest::new(&request, &table).unwrap();
            let fast = pattern_matches(pattern, &url, &prepared.url_lower, prepared.host.clone());
            prop_assert_eq!(fast, naive_match(pattern, &url, prepared.host.clone()), "{} on {}", rule, url);
        }
    }

    #[test]
    fn index_agrees_with_linear_scan(
        rules in prop::collection::vec(rule_text(), 0..60),
        url in url_text(),
        page in page_text(),
        ty in resource_type(),
    ) {
        let (rules, _) = parse_list(&rules.join("\n"));
        let table = SuffixTable::builtin();
        let request = Request::new(&url, &page, ty);
        let prepared = PreparedRequest::new(&request, &table).unwrap();
        let index = RuleIndex::build(&rules);
        prop_assert_eq!(index.decide_prepared(&prepared), decide_linear(&rules, &prepared));
    }

    #[test]
    fn case_insensitive_rules_ignore_url_case(rule in rule_text(), url in url_text(), flips in prop::collection::vec(any::<bool>(), 64)) {
        let parsed = parse_rule(&rule);
        prop_assume!(parsed.pattern().is_some_and(|p| !p.match_case));
        let flipped: String = url
            .chars()
            .zip(flips.iter().cycle())
            .map(|(c, &f)| if f { c.to_ascii_uppercase() } else { c })
            .collect();
        let table = SuffixTable::builtin();
        let a = match_rule(&parsed, &Request::new(&url, "https://x.com/", ResourceType::Image), &table).unwrap();
        let b = match_rule(&parsed, &Request::new(&flipped, "https://x.com/", ResourceType::Image), &table).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn party_is_symmetric(url in url_text(), page in url_text()) {
        let table = SuffixTable::builtin();
        let forward = Request::new(&url, &page, ResourceType::Image);
        let backward = Request::new(&page, &url, ResourceType::Image);
        let f = PreparedRequest::new(&forward, &table).unwrap().third_party;
        let b = PreparedRequest::new(&backward, &table).unwrap().third_party;
        prop_assert_eq!(f, b);
    }

    #[test]
    fn parsing_is_total(lines in prop::collection::vec(any::<String>(), 0..40)) {
        let lines: Vec<String> = lines.into_iter().map(|l| l.replace(['\n', '\r'], " ")).collect();
        let text = lines.join("\n");
        let (rules, stats) = parse_list(&text);
        prop_assert_eq!(rules.len(), text.lines().count());
        let sum: usize = RuleKind::ALL.iter().map(|&k| stats.count(k)).sum();
        prop_assert_eq!(sum, stats.total);
        prop_assert_eq!(stats.total, rules.len());
    }

    #[test]
    fn ks_is_symmetric_and_matches_a_sweep(
        a in prop::collection::vec(0u8..20, 1..40),
        b in prop::collection::vec(0u8..20, 1..40),
    ) {
        let a: Vec<f64> = a.into_iter().map(f64::from).collect();
        let b: Vec<f64> = b.into_iter().map(f64::from).collect();
        let ab = ks_two_sample(&a, &b).unwrap();
        let ba = ks_two_sample(&b, &a).unwrap();
        prop_assert_eq!(ab, ba);
        let (fa, fb) = (Ecdf::new(&a).unwrap(), Ecdf::new(&b).unwrap());
        let sweep = a.iter().chain(&b).map(|&x| (fa.value_at(x) - fb.value_at(x)).abs()).fold(0.0, f64::max);
        prop_assert!((ab.d - sweep).abs() <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&ab.p_value));
    }

    #[test]
    fn kolmogorov_survival_is_a_decreasing_probability(x in 0.0f64..5.0, dx in 0.0f64..1.0) {
        let (lo, hi) = (kolmogorov_survival(x), kolmogorov_survival(x + dx));
        prop_assert!((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi));
        prop_assert!(hi <= lo + 1e-12);
    }
}

#[test]
fn regex_rules_are_not_matchable() {
    assert_eq!(parse_rule("/banner\\d+/").kind(), RuleKind::Unsupported);
    assert_eq!(parse_rule("/banner/*").kind(), RuleKind::Network);
}
