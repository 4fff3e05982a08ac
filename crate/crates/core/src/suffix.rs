//! Public-suffix table and registrable-domain (eTLD+1) derivation.

use alloc::borrow::ToOwned;
use alloc::string::String;
use hashbrown::HashSet;

/// Suffixes shipped with the crate: common generic and country TLDs plus a
/// handful of multi-label registries.
const BUILTIN: &[&str] = &[
    "com", "net", "org", "edu", "gov", "mil", "int", "info", "biz", "io", "co", "me", "tv", "cc",
    "app", "dev", "xyz", "online", "site", "top", "news", "blog", "cloud", "ai", "us", "uk", "de",
    "fr", "it", "es", "nl", "be", "ch", "at", "se", "no", "dk", "fi", "pl", "cz", "ru", "ua", "jp",
    "cn", "kr", "in", "br", "au", "ca", "mx", "ar", "za", "nz", "ie", "pt", "gr", "tr", "il", "sg",
    "hk", "tw", "id", "vn", "th", "my", "ph", "eu", "asia", "example", "test", "invalid",
    "co.uk", "org.uk", "ac.uk", "gov.uk", "me.uk", "net.uk", "ltd.uk", "plc.uk", "sch.uk",
    "com.au", "net.au", "org.au", "edu.au", "gov.au", "co.jp", "ne.jp", "or.jp", "ac.jp",
    "com.br", "net.br", "org.br", "co.nz", "org.nz", "co.za", "com.cn", "net.cn", "org.cn",
    "co.in", "com.mx", "com.ar", "com.tr", "co.kr", "com.sg", "com.hk", "com.tw",
    "github.io", "blogspot.com", "cloudfront.net", "herokuapp.com", "appspot.com",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuffixTable {
    suffixes: HashSet<String>,
}

impl SuffixTable {
    pub fn builtin() -> Self {
        SuffixTable::from_suffixes(BUILTIN.iter().copied()).expect("builtin table is non-empty")
    }

    /// Returns `None` when no suffix survives normalization.
    pub fn from_suffixes<'a, I: IntoIterator<Item = &'a str>>(suffixes: I) -> Option<Self> {
        let suffixes: HashSet<String> = suffixes
            .into_iter()
            .map(|s| s.trim().trim_matches('.').to_ascii_lowercase())
            .filter(|s| !s.is_empty())
            .collect();
        (!suffixes.is_empty()).then_some(SuffixTable { suffixes })
    }

    /// Parses the table file format: one suffix per line, `#` starts a
    /// comment. Wildcard (`*.`) and exception (`!`) entries from the full
    /// public-suffix syntax are skipped.
    pub fn parse(text: &str) -> Option<Self> {
        SuffixTable::from_suffixes(
            text.lines()
                .map(|line| line.split('#').next().unwrap_or("").trim())
                .filter(|line| !line.starts_with("//") && !line.starts_with('!') && !line.contains('*')),
        )
    }

    pub fn contains(&self, suffix: &str) -> bool {
        self.suffixes.contains(suffix)
    }

    pub fn len(&self) -> usize {
        self.suffixes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.suffixes.is_empty()
    }
}

impl Default for SuffixTable {
    fn default() -> Self {
        SuffixTable::builtin()
    }
}

fn is_ip_literal(host: &str) -> bool {
    host.starts_with('[')
        || host.contains(':')
        || (host.bytes().all(|b| b.is_ascii_digit() || b == b'.') && host.contains('.'))
}

/// Registrable domain of `host`: the longest matching public suffix plus one
/// label. Without a matching suffix the last two labels are used; a
/// single-label host, an IP literal, or a host that is itself a suffix comes
/// back unchanged. `host` is expected to be lowercase already.
pub fn etld_plus_one<'a>(host: &'a str, suffixes: &SuffixTable) -> &'a str {
    let host = host.strip_suffix('.').unwrap_or(host);
    if is_ip_literal(host) {
        return host;
    }
    // Label start offsets, leftmost first.
    let mut previous_label: Option<usize> = None;
    let mut start = 0;
    loop {
        if suffixes.contains(&host[start..]) {
            return match previous_label {
                Some(prev) => &host[prev..],
                None => host,
            };
        }
        match host[start..].find('.') {
            Some(dot) => {
                previous_label = Some(start);
                start += dot + 1;
            }
            None => break,
        }
    }
    match host.rfind('.').and_then(|last| host[..last].rfind('.')) {
        Some(dot) => &host[dot + 1..],
        None => host,
    }
}

/// Owned convenience wrapper that lowercases first.
pub fn registrable_domain(host: &str, suffixes: &SuffixTable) -> String {
    let lower = host.to_ascii_lowercase();
    etld_plus_one(&lower, suffixes).to_owned()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let table = SuffixTable::builtin();
        assert_eq!(etld_plus_one("c.betrad.com", &table), "betrad.com");
        assert_eq!(etld_plus_one("a.b.co.uk", &table), "b.co.uk");
        assert_eq!(etld_plus_one("localhost", &table), "localhost");
        assert_eq!(etld_plus_one("ssl.cdn.turner.com", &table), "turner.com");
    }

    #[test]
    fn fallbacks() {
        let table = SuffixTable::from_suffixes(["com"]).unwrap();
        assert_eq!(etld_plus_one("x.y.unknowntld", &table), "y.unknowntld");
        assert_eq!(etld_plus_one("co.uk", &SuffixTable::builtin()), "co.uk");
        assert_eq!(etld_plus_one("192.168.0.1", &table), "192.168.0.1");
        assert_eq!(etld_plus_one("a.example.com.", &table), "example.com");
    }

    #[test]
    fn longest_suffix_wins() {
        let table = SuffixTable::from_suffixes(["io", "github.io"]).unwrap();
        assert_eq!(etld_plus_one("me.user.github.io", &table), "user.github.io");
    }

    #[test]
    fn table_file_format() {
        let table = SuffixTable::parse("# comment\ncom\n  CO.UK  # trailing\n*.ck\n!www.ck\n\n").unwrap();
        assert_eq!(table.len(), 2);
        assert!(table.contains("co.uk"));
        assert!(SuffixTable::parse("# only comments\n").is_none());
    }
}
