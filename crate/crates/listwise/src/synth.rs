//! Seeded generators for rules, URLs, request logs, and EasyList-sized
//! lists. Everything here is deterministic for a given seed.

use std::collections::HashSet;

use listwise_core::replay::{LogRecord, RequestLog, SECONDS_PER_DAY};
use listwise_core::{Request, ResourceType};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DEFAULT_SEED: u64 = 0x5eed_1157;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// Small vocabularies make random rules and URLs collide often.
const LABELS: &[&str] = &["ads", "ad", "cdn", "track", "img", "x", "example", "static", "a", "b"];
const TLDS: &[&str] = &["com", "net", "org", "co.uk"];
const PATH_WORDS: &[&str] = &[
    "ads", "ad", "banner", "img", "x", "track", "160x600", "js", "pixel", "a", "gen", "b.c", "ok",
];
const PATH_SEPS: &[&str] = &["/", "/", ".", "-", "_", "?", "=", "&", "%20", "/"];
const TYPE_TOKENS: &[&str] = &[
    "script",
    "image",
    "stylesheet",
    "object",
    "subdocument",
    "document",
    "xmlhttprequest",
    "websocket",
    "font",
    "media",
    "ping",
    "other",
];

fn pick<'a, R: Rng>(rng: &mut R, items: &[&'a str]) -> &'a str {
    items.choose(rng).copied().expect("non-empty vocabulary")
}

fn random_host<R: Rng>(rng: &mut R) -> String {
    let labels = rng.random_range(1..=3);
    let mut host: Vec<&str> = (0..labels).map(|_| pick(rng, LABELS)).collect();
    host.push(pick(rng, TLDS));
    host.join(".")
}

fn maybe_upper<R: Rng>(rng: &mut R, text: &str) -> String {
    if rng.random_bool(0.15) {
        text.chars()
            .map(|c| if rng.random_bool(0.5) { c.to_ascii_uppercase() } else { c })
            .collect()
    } else {
        text.to_string()
    }
}

/// A URL over the shared vocabulary. Mostly http(s), with the occasional
/// websocket, non-web scheme, port, or upper-case run.
pub fn random_url<R: Rng>(rng: &mut R) -> String {
    let scheme = match rng.random_range(0..20) {
        0 => "wss",
        1 => "data",
        2..=9 => "http",
        _ => "https",
    };
    if scheme == "data" {
        return "data:text/plain,ads".into();
    }
    let host = random_host(rng);
    let mut url = format!("{scheme}://{}", maybe_upper(rng, &host));
    if rng.random_bool(0.1) {
        url.push_str(&format!(":{}", rng.random_range(1..9000)));
    }
    let pieces = rng.random_range(0..6);
    for _ in 0..pieces {
        url.push_str(pick(rng, PATH_SEPS));
        let word = pick(rng, PATH_WORDS);
        url.push_str(&maybe_upper(rng, word));
    }
    url
}

pub fn random_page<R: Rng>(rng: &mut R) -> String {
    format!("https://{}/", random_host(rng))
}

pub fn random_type<R: Rng>(rng: &mut R) -> ResourceType {
    if rng.random_bool(0.03) {
        ResourceType::MainDocument
    } else {
        *ResourceType::RULE_TYPES.choose(rng).expect("types")
    }
}

pub fn random_request<R: Rng>(rng: &mut R) -> Request {
    let url = random_url(rng);
    let page = if rng.random_bool(0.3) {
        // Same host as the request, so first-party cases are common.
        match url.split_once("://").and_then(|(s, rest)| rest.split(['/', ':', '?']).next().map(|h| (s, h))) {
            Some((_, host)) if !host.is_empty() => format!("https://{host}/"),
            _ => random_page(rng),
        }
    } else {
        random_page(rng)
    };
    Request::new(&url, &page, random_type(rng))
}

fn random_options<R: Rng>(rng: &mut R) -> Vec<String> {
    let mut options = Vec::new();
    if rng.random_bool(0.2) {
        options.push(if rng.random_bool(0.7) { "third-party" } else { "~third-party" }.to_string());
    }
    if rng.random_bool(0.25) {
        let negate = rng.random_bool(0.3);
        let n = rng.random_range(1..=3);
        for _ in 0..n {
            let t = pick(rng, TYPE_TOKENS);
            options.push(if negate { format!("~{t}") } else { t.to_string() });
        }
    }
    if rng.random_bool(0.15) {
        let mut domains = Vec::new();
        let negate = rng.random_bool(0.4);
        for _ in 0..rng.random_range(1..=2) {
            let d = random_host(rng);
            domains.push(if negate { format!("~{d}") } else { d });
        }
        options.push(format!("domain={}", domains.join("|")));
    }
    if rng.random_bool(0.05) {
        options.push("match-case".into());
    }
    if rng.random_bool(0.02) {
        options.push("popup".into());
    }
    options
}

/// One rule line over the shared vocabulary: any anchor, wildcards,
/// separators, options, and about one exception in five.
pub fn random_rule<R: Rng>(rng: &mut R) -> String {
    let mut text = String::new();
    let exception = rng.random_bool(0.12);
    if exception {
        text.push_str("@@");
    }
    let mut has_literal = false;
    match rng.random_range(0..10) {
        0..=2 => {
            text.push_str("||");
            text.push_str(&random_host(rng));
            has_literal = true;
        }
        3 => text.push_str(&format!("|{}://", if rng.random_bool(0.5) { "https" } else { "http" })),
        _ => {}
    }
    let pieces = rng.random_range(usize::from(has_literal)..=4);
    for _ in 0..pieces {
        match rng.random_range(0..10) {
            0 => text.push('*'),
            1 | 2 => text.push('^'),
            3 => text.push_str(pick(rng, PATH_SEPS)),
            _ => {
                let word = pick(rng, PATH_WORDS);
                text.push_str(&maybe_upper(rng, word));
                has_literal = true;
                if rng.random_bool(0.5) {
                    text.push_str(pick(rng, PATH_SEPS));
                }
            }
        }
    }
    // Lone wildcards and separators match nearly everything.
    if !has_literal || (exception && text.len() < 8) {
        let word = pick(rng, PATH_WORDS);
        text.push_str(word);
        text.push_str(pick(rng, PATH_SEPS));
    }
    if rng.random_bool(0.08) {
        text.push('|');
    }
    let options = random_options(rng);
    if !options.is_empty() {
        text.push('$');
        text.push_str(&options.join(","));
    }
    text
}

pub fn random_rules<R: Rng>(rng: &mut R, n: usize) -> Vec<String> {
    (0..n).map(|_| random_rule(rng)).collect()
}

/// Random printable-or-not byte line, for parser totality checks.
pub fn random_line<R: Rng>(rng: &mut R) -> String {
    const INTERESTING: &[u8] = b"@@||^*$,~=|#!/.-_ adsxcom?:[]%";
    let len = rng.random_range(0..40);
    let bytes: Vec<u8> = (0..len)
        .map(|_| {
            let b = if rng.random_bool(0.6) {
                *INTERESTING.choose(rng).expect("bytes")
            } else {
                rng.random()
            };
            // Keep it a single line.
            if matches!(b, b'\n' | b'\r') {
                b' '
            } else {
                b
            }
        })
        .collect();
    String::from_utf8_lossy(&bytes).into_owned()
}

/// A request that a given network rule of a [`ScaleList`] blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hit {
    pub url: String,
    pub resource_type: ResourceType,
}

/// An EasyList-sized list with a known blockable request per network rule.
#[derive(Debug, Clone)]
pub struct ScaleList {
    pub text: String,
    pub network: usize,
    pub exception: usize,
    pub element: usize,
    /// Indexed by network rule, in list order.
    pub hits: Vec<Hit>,
}

const AD_WORDS: &[&str] = &[
    "adsrv", "banner", "promo", "sponsor", "track", "pixel", "click", "metric", "serve", "beacon", "affil", "popunder",
];
const COMMON: &[&str] = &[
    "ads", "banner", "advert", "sponsor", "promo", "track", "pixel", "popup", "adserver", "adframe", "adimg", "affiliate",
];
const COMMON_SEPS: &[&str] = &["/", "_", "-", "."];
const CLEAN_WORDS: &[&str] = &[
    "static", "main", "assets", "app", "bundle", "vendor", "images", "photo", "style", "fonts", "video", "api", "v2",
    "home", "news", "article", "thumb", "player", "data", "lib",
];

/// Builds a list with `network` network rules, `exception` exception rules
/// and `element` element rules, shaped like EasyList: mostly domain rules,
/// path rules with rare tokens, a block of rules sharing a few common
/// tokens, and a small set of rules with no usable token at all.
pub fn scale_list<R: Rng>(rng: &mut R, network: usize, exception: usize, element: usize) -> ScaleList {
    let mut lines: Vec<String> = vec!["[Adblock Plus 2.0]".into(), "! Title: synthetic list".into()];
    let mut hits = Vec::with_capacity(network);
    let mut seen = HashSet::new();
    let mut ad_domains = Vec::new();
    let mut i = 0usize;
    while hits.len() < network {
        i += 1;
        let word = pick(rng, AD_WORDS);
        let tld = pick(rng, &["com", "net", "io"]);
        let roll = rng.random_range(0..1000);
        let (rule, hit) = match roll {
            0..=449 => {
                let domain = format!("{word}{i}.{tld}");
                ad_domains.push(domain.clone());
                let third = rng.random_bool(0.4);
                let sub = if rng.random_bool(0.5) { "cdn." } else { "" };
                let rule = if third { format!("||{domain}^$third-party") } else { format!("||{domain}^") };
                (rule, Hit { url: format!("https://{sub}{domain}/{}/{i}.js", pick(rng, CLEAN_WORDS)), resource_type: ResourceType::Script })
            }
            450..=699 => {
                let second = pick(rng, CLEAN_WORDS);
                if rng.random_bool(0.5) {
                    let rule = format!("/{word}{i}/{second}.");
                    (rule, Hit { url: format!("https://site{}.com/{word}{i}/{second}.gif", i % 97), resource_type: ResourceType::Image })
                } else {
                    let rule = format!("-{word}-{i}.$image");
                    (rule, Hit { url: format!("https://img{}.org/p/x-{word}-{i}.png", i % 53), resource_type: ResourceType::Image })
                }
            }
            700..=994 => {
                let (a, b) = (pick(rng, COMMON), pick(rng, COMMON));
                let (s1, s2) = (pick(rng, COMMON_SEPS), pick(rng, COMMON_SEPS));
                // `/.../` would read as a regular expression.
                let s3 = if s1 == "/" { pick(rng, &COMMON_SEPS[1..]) } else { pick(rng, COMMON_SEPS) };
                let rule = format!("{s1}{a}{s2}{b}{s3}");
                // Fall back to a rare token once the combinations run out.
                let rule = if seen.contains(&rule) { format!("{s1}{a}{s2}{b}{i}{s3}") } else { rule };
                let body = rule.clone();
                (rule, Hit { url: format!("https://pub{}.net/x{body}y.js", i % 89), resource_type: ResourceType::Script })
            }
            _ => {
                let letters: String = (0..2).map(|_| rng.random_range(b'a'..=b'z') as char).collect();
                let (s1, s2) = (pick(rng, &["_", "-"]), pick(rng, &["_", "-", "^"]));
                let rule = format!("{s1}{letters}{s2}");
                let url_s2 = if s2 == "^" { "/" } else { s2 };
                (rule, Hit { url: format!("https://media{}.com/q{s1}{letters}{url_s2}z", i % 31), resource_type: ResourceType::Image })
            }
        };
        if seen.insert(rule.clone()) {
            lines.push(rule);
            hits.push(hit);
        }
    }
    let mut exceptions = 0;
    while exceptions < exception {
        i += 1;
        let rule = match rng.random_range(0..10) {
            0..=3 if !ad_domains.is_empty() => format!("@@||{}^$script", ad_domains.choose(rng).expect("domains")),
            4..=6 => format!("@@||cdn{i}.net/{}/*", pick(rng, CLEAN_WORDS)),
            _ => format!("@@/{}/{}_$domain=site{}.com", pick(rng, COMMON), pick(rng, COMMON), i % 97),
        };
        if seen.insert(rule.clone()) {
            lines.push(rule);
            exceptions += 1;
        }
    }
    for k in 0..element {
        lines.push(if k % 3 == 0 {
            format!("site{}.com##.ad-{k}", k % 97)
        } else {
            format!("##.{}-{k}", pick(rng, AD_WORDS))
        });
        if k % 500 == 0 {
            lines.push(format!("! section {k}"));
        }
    }
    // Interleave so rule kinds are not in contiguous blocks.
    let header = lines.drain(..2).collect::<Vec<_>>();
    let mut body = lines;
    let mut network_lines: Vec<(usize, String)> = Vec::new();
    let mut other = Vec::new();
    for line in body.drain(..) {
        let is_network = !line.starts_with("@@") && !line.contains("##") && !line.starts_with('!');
        if is_network {
            network_lines.push((network_lines.len(), line));
        } else {
            other.push(line);
        }
    }
    let mut merged = header;
    let mut other_iter = other.into_iter();
    for (n, (_, line)) in network_lines.into_iter().enumerate() {
        merged.push(line);
        if n % 2 == 1 {
            merged.extend(other_iter.next());
        }
    }
    merged.extend(other_iter);
    let mut text = merged.join("\n");
    text.push('\n');
    ScaleList {
        text,
        network,
        exception,
        element,
        hits,
    }
}

/// Shape of a synthetic crawl log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogShape {
    pub requests: usize,
    /// Share of requests built from a network rule's hit.
    pub blockable: f64,
    /// Share of network rules that receive most of the blockable traffic.
    pub popular_rules: f64,
    /// Share of blockable requests drawn uniformly from all network rules.
    pub tail: f64,
    pub days: u32,
    pub start_day: i64,
}

impl Default for LogShape {
    fn default() -> Self {
        LogShape {
            requests: 10_000,
            blockable: 0.3,
            popular_rules: 0.03,
            tail: 0.03,
            days: 7,
            start_day: 17_928,
        }
    }
}

fn clean_url<R: Rng>(rng: &mut R, page_host: &str) -> (String, ResourceType) {
    let host = if rng.random_bool(0.5) {
        page_host.to_string()
    } else {
        format!("{}.cdn{}.net", pick(rng, CLEAN_WORDS), rng.random_range(0..40))
    };
    let mut url = format!("https://{host}");
    for _ in 0..rng.random_range(1..4) {
        url.push('/');
        url.push_str(pick(rng, CLEAN_WORDS));
    }
    let (ext, ty) = *[
        (".js", ResourceType::Script),
        (".png", ResourceType::Image),
        (".css", ResourceType::Stylesheet),
        (".woff", ResourceType::Font),
        ("", ResourceType::Xmlhttprequest),
    ]
    .choose(rng)
    .expect("kinds");
    url.push_str(ext);
    (url, ty)
}

/// A day-ordered log over `list`. Blockable requests come from rule hits,
/// skewed towards a small popular subset; the rest use a vocabulary that no
/// rule of the list matches.
pub fn scale_log<R: Rng>(rng: &mut R, list: &ScaleList, shape: LogShape) -> RequestLog {
    let n_rules = list.hits.len();
    let popular: Vec<usize> = {
        let k = ((n_rules as f64 * shape.popular_rules).ceil() as usize).clamp(1, n_rules.max(1));
        let mut all: Vec<usize> = (0..n_rules).collect();
        let (chosen, _) = rand::seq::SliceRandom::partial_shuffle(&mut all[..], rng, k);
        chosen.to_vec()
    };
    let days = shape.days.max(1) as usize;
    let per_day = shape.requests.div_ceil(days);
    let mut records = Vec::with_capacity(shape.requests);
    for n in 0..shape.requests {
        let day = shape.start_day + (n / per_day) as i64;
        let second = ((n % per_day) as i64 * (SECONDS_PER_DAY - 1)) / per_day as i64;
        let page_host = format!("www.site{}.com", rng.random_range(0..200));
        let page = format!("https://{page_host}/");
        let (url, ty) = if n_rules > 0 && rng.random_bool(shape.blockable) {
            let rule = if rng.random_bool(shape.tail) {
                rng.random_range(0..n_rules)
            } else {
                *popular.choose(rng).expect("popular")
            };
            let hit = &list.hits[rule];
            (hit.url.clone(), hit.resource_type)
        } else if rng.random_bool(0.02) {
            (page.clone(), ResourceType::MainDocument)
        } else {
            clean_url(rng, &page_host)
        };
        let mut request = Request::new(&url, &page, ty);
        request.timestamp = day * SECONDS_PER_DAY + second;
        records.push(LogRecord::new(&page, request));
    }
    RequestLog { records }
}

/// Random requests over the shared vocabulary, as a day-ordered log.
pub fn random_log<R: Rng>(rng: &mut R, n: usize, start_day: i64) -> RequestLog {
    let records = (0..n)
        .map(|k| {
            let mut request = random_request(rng);
            request.timestamp = start_day * SECONDS_PER_DAY + k as i64;
            let page = request.initiator_url.clone();
            LogRecord::new(&page, request)
        })
        .collect();
    RequestLog { records }
}

#[cfg(test)]
mod tests {
    use super::*;
    use listwise_core::{match_rule, parse_list, RuleKind, SuffixTable};

    #[test]
    fn deterministic() {
        assert_eq!(random_rules(&mut rng(7), 50), random_rules(&mut rng(7), 50));
        assert_eq!(scale_list(&mut rng(3), 200, 30, 50).text, scale_list(&mut rng(3), 200, 30, 50).text);
    }

    #[test]
    fn scale_hits_match_their_rules() {
        let list = scale_list(&mut rng(11), 2_000, 300, 100);
        let (rules, stats) = parse_list(&list.text);
        let bad: Vec<_> = rules.iter().filter_map(|r| r.unsupported().map(|u| (r.raw().to_string(), u.reason))).take(5).collect();
        assert_eq!((stats.network, stats.exception, stats.unsupported), (2_000, 300, 0), "{bad:?}");
        let network: Vec<_> = rules.iter().filter(|r| r.kind() == RuleKind::Network).collect();
        let table = SuffixTable::builtin();
        for (rule, hit) in network.iter().zip(&list.hits) {
            let request = Request::new(&hit.url, "https://www.site5.com/", hit.resource_type);
            assert!(match_rule(rule, &request, &table).unwrap(), "{} vs {}", rule.raw(), hit.url);
        }
    }
}
