//! Filter-list line classification and network-rule parsing.
//!
//! Every line of a list lands in exactly one [`RuleKind`]. Network and
//! exception rules are further split into a [`PatternSpec`] (anchors, literal
//! runs, `*` wildcards, `^` separators) and [`RuleOptions`]. Anything outside
//! the supported option set is kept as [`RuleKind::Unsupported`] instead of
//! being matched with partial semantics.

use alloc::borrow::ToOwned;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::borrow::Borrow;
use core::fmt;

/// Stable identity of a rule: its text with surrounding whitespace removed.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RuleId(Arc<str>);

impl RuleId {
    pub fn new(text: &str) -> Self {
        RuleId(Arc::from(text.trim()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RuleId({:?})", &*self.0)
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Borrow<str> for RuleId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl From<&str> for RuleId {
    fn from(text: &str) -> Self {
        RuleId::new(text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleKind {
    Network,
    Exception,
    Element,
    ElementException,
    Comment,
    Unsupported,
}

impl RuleKind {
    pub const ALL: [RuleKind; 6] = [
        RuleKind::Network,
        RuleKind::Exception,
        RuleKind::Element,
        RuleKind::ElementException,
        RuleKind::Comment,
        RuleKind::Unsupported,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RuleKind::Network => "network",
            RuleKind::Exception => "exception",
            RuleKind::Element => "element",
            RuleKind::ElementException => "element-exception",
            RuleKind::Comment => "comment",
            RuleKind::Unsupported => "unsupported",
        }
    }

    /// Network and exception rules are the only kinds the matcher evaluates.
    pub fn is_matchable(self) -> bool {
        matches!(self, RuleKind::Network | RuleKind::Exception)
    }
}

/// Request resource types. `MainDocument` only ever appears on requests; no
/// rule option names it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ResourceType {
    Script,
    Image,
    Stylesheet,
    Object,
    Subdocument,
    Document,
    Xmlhttprequest,
    Websocket,
    Font,
    Media,
    Ping,
    Other,
    MainDocument,
}

impl ResourceType {
    /// The twelve types a rule option can name, in option-table order.
    pub const RULE_TYPES: [ResourceType; 12] = [
        ResourceType::Script,
        ResourceType::Image,
        ResourceType::Stylesheet,
        ResourceType::Object,
        ResourceType::Subdocument,
        ResourceType::Document,
        ResourceType::Xmlhttprequest,
        ResourceType::Websocket,
        ResourceType::Font,
        ResourceType::Media,
        ResourceType::Ping,
        ResourceType::Other,
    ];

    pub fn token(self) -> &'static str {
        match self {
            ResourceType::Script => "script",
            ResourceType::Image => "image",
            ResourceType::Stylesheet => "stylesheet",
            ResourceType::Object => "object",
            ResourceType::Subdocument => "subdocument",
            ResourceType::Document => "document",
            ResourceType::Xmlhttprequest => "xmlhttprequest",
            ResourceType::Websocket => "websocket",
            ResourceType::Font => "font",
            ResourceType::Media => "media",
            ResourceType::Ping => "ping",
            ResourceType::Other => "other",
            ResourceType::MainDocument => "main_document",
        }
    }

    /// Option-name lookup; `main_document` is not a rule option.
    pub fn from_option(name: &str) -> Option<ResourceType> {
        ResourceType::RULE_TYPES
            .iter()
            .copied()
            .find(|t| t.token() == name)
    }

    /// Lossy mapping used for request logs: unknown tokens become `Other`.
    pub fn from_log_token(token: &str) -> ResourceType {
        if token == "main_document" {
            ResourceType::MainDocument
        } else {
            ResourceType::from_option(token).unwrap_or(ResourceType::Other)
        }
    }

    fn bit(self) -> u16 {
        match self {
            ResourceType::MainDocument => 0,
            other => 1 << (other as u16),
        }
    }
}

impl fmt::Display for ResourceType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Bit set over [`ResourceType::RULE_TYPES`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct TypeMask(u16);

impl TypeMask {
    pub const EMPTY: TypeMask = TypeMask(0);
    pub const ALL: TypeMask = TypeMask((1 << 12) - 1);

    pub fn contains(self, ty: ResourceType) -> bool {
        let bit = ty.bit();
        bit != 0 && self.0 & bit != 0
    }

    pub fn insert(&mut self, ty: ResourceType) {
        self.0 |= ty.bit();
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn difference(self, other: TypeMask) -> TypeMask {
        TypeMask(self.0 & !other.0)
    }

    pub fn complement(self) -> TypeMask {
        TypeMask(TypeMask::ALL.0 & !self.0)
    }

    pub fn iter(self) -> impl Iterator<Item = ResourceType> {
        ResourceType::RULE_TYPES
            .into_iter()
            .filter(move |t| self.contains(*t))
    }
}

impl FromIterator<ResourceType> for TypeMask {
    fn from_iter<I: IntoIterator<Item = ResourceType>>(iter: I) -> Self {
        let mut mask = TypeMask::EMPTY;
        for ty in iter {
            mask.insert(ty);
        }
        mask
    }
}

/// Resource-type restriction with polarity. `Only` and `Except` never carry an
/// empty mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum TypeFilter {
    #[default]
    Any,
    Only(TypeMask),
    Except(TypeMask),
}

impl TypeFilter {
    pub fn allows(self, ty: ResourceType) -> bool {
        match self {
            TypeFilter::Any => true,
            TypeFilter::Only(mask) => mask.contains(ty),
            TypeFilter::Except(mask) => !mask.contains(ty),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Party {
    #[default]
    Any,
    ThirdOnly,
    FirstOnly,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct RuleOptions {
    pub resource_types: TypeFilter,
    pub party: Party,
    /// Lowercased; a domain also covers its subdomains.
    pub include_domains: Vec<String>,
    pub exclude_domains: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Anchor {
    #[default]
    None,
    /// `|` prefix.
    StartOfUrl,
    /// `||` prefix.
    DomainBoundary,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PatternPart {
    Literal(String),
    Wildcard,
    Separator,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct PatternSpec {
    pub anchor: Anchor,
    pub end_anchored: bool,
    /// Literals are lowercased unless `match_case` is set. No two wildcards
    /// are adjacent and none lead or trail.
    pub parts: Vec<PatternPart>,
    pub match_case: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnsupportedReason {
    UnknownOption,
    EmptyOption,
    ConflictingParty,
    EmptyTypeSet,
    BadDomainOption,
    RegexPattern,
    DomainAnchorWithoutLiteral,
    CosmeticExtension,
}

impl UnsupportedReason {
    pub fn describe(self) -> &'static str {
        match self {
            UnsupportedReason::UnknownOption => "unknown option",
            UnsupportedReason::EmptyOption => "empty option",
            UnsupportedReason::ConflictingParty => "conflicting party options",
            UnsupportedReason::EmptyTypeSet => "type options exclude every type",
            UnsupportedReason::BadDomainOption => "malformed domain option",
            UnsupportedReason::RegexPattern => "regular-expression pattern",
            UnsupportedReason::DomainAnchorWithoutLiteral => "domain anchor not followed by a literal",
            UnsupportedReason::CosmeticExtension => "extended cosmetic syntax",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Unsupported {
    pub reason: UnsupportedReason,
    /// The part of the line that could not be handled.
    pub fragment: String,
    /// Unrecognized option tokens (empty unless `reason` is `UnknownOption`).
    pub unknown_options: Vec<String>,
}

/// One parsed list line.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FilterRule {
    raw: String,
    id: RuleId,
    kind: RuleKind,
    pattern: Option<PatternSpec>,
    options: Option<RuleOptions>,
    unsupported: Option<Unsupported>,
}

impl FilterRule {
    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn id(&self) -> &RuleId {
        &self.id
    }

    pub fn kind(&self) -> RuleKind {
        self.kind
    }

    /// Present iff the rule is a network or exception rule.
    pub fn pattern(&self) -> Option<&PatternSpec> {
        self.pattern.as_ref()
    }

    /// Present iff the rule is a network or exception rule.
    pub fn options(&self) -> Option<&RuleOptions> {
        self.options.as_ref()
    }

    pub fn unsupported(&self) -> Option<&Unsupported> {
        self.unsupported.as_ref()
    }

    pub fn is_exception(&self) -> bool {
        self.kind == RuleKind::Exception
    }

    fn simple(raw: &str, kind: RuleKind) -> Self {
        FilterRule {
            raw: raw.to_owned(),
            id: RuleId::new(raw),
            kind,
            pattern: None,
            options: None,
            unsupported: None,
        }
    }

    fn rejected(raw: &str, reason: UnsupportedReason, fragment: &str, unknown: Vec<String>) -> Self {
        FilterRule {
            unsupported: Some(Unsupported {
                reason,
                fragment: fragment.to_owned(),
                unknown_options: unknown,
            }),
            ..FilterRule::simple(raw, RuleKind::Unsupported)
        }
    }
}

impl fmt::Display for FilterRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}

enum Cosmetic {
    Hide,
    Unhide,
    Extended,
}

/// Finds the first cosmetic marker that is not inside an option section.
fn cosmetic_marker(text: &str) -> Option<Cosmetic> {
    const MARKERS: [(&str, Cosmetic); 8] = [
        ("##", Cosmetic::Hide),
        ("#@#", Cosmetic::Unhide),
        ("#?#", Cosmetic::Extended),
        ("#$#", Cosmetic::Extended),
        ("#%#", Cosmetic::Extended),
        ("#@?#", Cosmetic::Extended),
        ("#@$#", Cosmetic::Extended),
        ("#@%#", Cosmetic::Extended),
    ];
    let options_start = text.find('$').unwrap_or(text.len());
    for (pos, _) in text.match_indices('#') {
        if pos > options_start {
            return None;
        }
        let rest = &text[pos..];
        for (marker, kind) in MARKERS {
            if rest.starts_with(marker) {
                return Some(kind);
            }
        }
    }
    None
}

/// Classifies and parses one list line. Never fails: lines that cannot be
/// matched faithfully come back as [`RuleKind::Unsupported`].
pub fn parse_rule(line: &str) -> FilterRule {
    let text = line.trim();
    if text.is_empty() || text.starts_with('!') || (text.starts_with('[') && text.ends_with(']')) {
        return FilterRule::simple(line, RuleKind::Comment);
    }

    match cosmetic_marker(text) {
        Some(Cosmetic::Hide) => return FilterRule::simple(line, RuleKind::Element),
        Some(Cosmetic::Unhide) => return FilterRule::simple(line, RuleKind::ElementException),
        Some(Cosmetic::Extended) => {
            return FilterRule::rejected(line, UnsupportedReason::CosmeticExtension, text, Vec::new())
        }
        None => {}
    }

    let (kind, body) = match text.strip_prefix("@@") {
        Some(body) => (RuleKind::Exception, body),
        None => (RuleKind::Network, text),
    };

    let (pattern_text, options_text) = match body.rfind('$') {
        Some(at) => (&body[..at], Some(&body[at + 1..])),
        None => (body, None),
    };

    let mut match_case = false;
    let options = match options_text {
        Some(opts) => match parse_options(opts, &mut match_case) {
            Ok(options) => options,
            Err((reason, fragment, unknown)) => {
                return FilterRule::rejected(line, reason, &fragment, unknown);
            }
        },
        None => RuleOptions::default(),
    };

    if pattern_text.len() >= 2 && pattern_text.starts_with('/') && pattern_text.ends_with('/') {
        return FilterRule::rejected(line, UnsupportedReason::RegexPattern, pattern_text, Vec::new());
    }

    let pattern = match parse_pattern(pattern_text, match_case) {
        Some(pattern) => pattern,
        None => {
            return FilterRule::rejected(
                line,
                UnsupportedReason::DomainAnchorWithoutLiteral,
                pattern_text,
                Vec::new(),
            )
        }
    };

    FilterRule {
        pattern: Some(pattern),
        options: Some(options),
        ..FilterRule::simple(line, kind)
    }
}

type OptionError = (UnsupportedReason, String, Vec<String>);

fn parse_options(text: &str, match_case: &mut bool) -> Result<RuleOptions, OptionError> {
    let mut options = RuleOptions::default();
    let mut include = TypeMask::EMPTY;
    let mut exclude = TypeMask::EMPTY;
    let mut party: Option<Party> = None;
    let mut unknown = Vec::new();

    for token in text.split(',') {
        let token = token.trim();
        if token.is_empty() {
            return Err((UnsupportedReason::EmptyOption, text.to_string(), Vec::new()));
        }
        let lower = token.to_ascii_lowercase();
        let (negated, name) = match lower.strip_prefix('~') {
            Some(name) => (true, name),
            None => (false, lower.as_str()),
        };

        if let Some(ty) = ResourceType::from_option(name) {
            if negated {
                exclude.insert(ty);
            } else {
                include.insert(ty);
            }
        } else if name == "third-party" {
            let wanted = if negated { Party::FirstOnly } else { Party::ThirdOnly };
            match party {
                Some(existing) if existing != wanted => {
                    return Err((UnsupportedReason::ConflictingParty, token.to_string(), Vec::new()));
                }
                _ => party = Some(wanted),
            }
        } else if name == "match-case" && !negated {
            *match_case = true;
        } else if let (false, Some(list)) = (negated, name.strip_prefix("domain=")) {
            for entry in list.split('|') {
                let (excluded, domain) = match entry.strip_prefix('~') {
                    Some(domain) => (true, domain),
                    None => (false, entry),
                };
                if domain.is_empty() || domain.contains('*') || domain.contains('~') || domain.contains('/') {
                    return Err((UnsupportedReason::BadDomainOption, token.to_string(), Vec::new()));
                }
                if excluded {
                    options.exclude_domains.push(domain.to_string());
                } else {
                    options.include_domains.push(domain.to_string());
                }
            }
        } else {
            unknown.push(token.to_string());
        }
    }

    if !unknown.is_empty() {
        let fragment = unknown.join(",");
        return Err((UnsupportedReason::UnknownOption, fragment, unknown));
    }

    options.resource_types = match (include.is_empty(), exclude.is_empty()) {
        (true, true) => TypeFilter::Any,
        (false, true) => TypeFilter::Only(include),
        (true, false) if exclude == TypeMask::ALL => {
            return Err((UnsupportedReason::EmptyTypeSet, text.to_string(), Vec::new()));
        }
        (true, false) => TypeFilter::Except(exclude),
        (false, false) => {
            let effective = include.difference(exclude);
            if effective.is_empty() {
                return Err((UnsupportedReason::EmptyTypeSet, text.to_string(), Vec::new()));
            }
            TypeFilter::Only(effective)
        }
    };
    options.party = party.unwrap_or_default();
    Ok(options)
}

/// Returns `None` when a domain anchor is not followed by a literal.
fn parse_pattern(text: &str, match_case: bool) -> Option<PatternSpec> {
    let mut rest = text;
    let mut anchor = Anchor::None;
    if let Some(stripped) = rest.strip_prefix("||") {
        anchor = Anchor::DomainBoundary;
        rest = stripped;
    } else if let Some(stripped) = rest.strip_prefix('|') {
        anchor = Anchor::StartOfUrl;
        rest = stripped;
    }
    let mut end_anchored = false;
    if let Some(stripped) = rest.strip_suffix('|') {
        end_anchored = true;
        rest = stripped;
    }

    let mut parts: Vec<PatternPart> = Vec::new();
    let mut literal = String::new();
    for ch in rest.chars() {
        match ch {
            '*' | '^' => {
                if !literal.is_empty() {
                    parts.push(PatternPart::Literal(core::mem::take(&mut literal)));
                }
                if ch == '^' {
                    parts.push(PatternPart::Separator);
                } else if parts.last() != Some(&PatternPart::Wildcard) {
                    parts.push(PatternPart::Wildcard);
                }
            }
            _ if match_case => literal.push(ch),
            _ => literal.push(ch.to_ascii_lowercase()),
        }
    }
    if !literal.is_empty() {
        parts.push(PatternPart::Literal(literal));
    }

    if parts.first() == Some(&PatternPart::Wildcard) {
        parts.remove(0);
        match anchor {
            Anchor::DomainBoundary => return None,
            Anchor::StartOfUrl => anchor = Anchor::None,
            Anchor::None => {}
        }
    }
    if parts.last() == Some(&PatternPart::Wildcard) {
        parts.pop();
        end_anchored = false;
    }
    if anchor == Anchor::DomainBoundary && !matches!(parts.first(), Some(PatternPart::Literal(_))) {
        return None;
    }

    Some(PatternSpec {
        anchor,
        end_anchored,
        parts,
        match_case,
    })
}

/// Per-kind line counts for a parsed list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ParseStats {
    pub total: usize,
    pub network: usize,
    pub exception: usize,
    pub element: usize,
    pub element_exception: usize,
    pub comment: usize,
    pub unsupported: usize,
}

impl ParseStats {
    pub fn record(&mut self, kind: RuleKind) {
        self.total += 1;
        *self.slot(kind) += 1;
    }

    pub fn count(&self, kind: RuleKind) -> usize {
        match kind {
            RuleKind::Network => self.network,
            RuleKind::Exception => self.exception,
            RuleKind::Element => self.element,
            RuleKind::ElementException => self.element_exception,
            RuleKind::Comment => self.comment,
            RuleKind::Unsupported => self.unsupported,
        }
    }

    /// Element rules including element exceptions.
    pub fn cosmetic(&self) -> usize {
        self.element + self.element_exception
    }

    /// Share of `kind` among all non-comment lines.
    pub fn share(&self, count: usize) -> f64 {
        let rules = self.total - self.comment;
        if rules == 0 {
            0.0
        } else {
            count as f64 / rules as f64
        }
    }

    fn slot(&mut self, kind: RuleKind) -> &mut usize {
        match kind {
            RuleKind::Network => &mut self.network,
            RuleKind::Exception => &mut self.exception,
            RuleKind::Element => &mut self.element,
            RuleKind::ElementException => &mut self.element_exception,
            RuleKind::Comment => &mut self.comment,
            RuleKind::Unsupported => &mut self.unsupported,
        }
    }
}

/// Parses every line of `text` (LF or CRLF), preserving order.
pub fn parse_list(text: &str) -> (Vec<FilterRule>, ParseStats) {
    let mut stats = ParseStats::default();
    let rules = text
        .lines()
        .map(|line| {
            let rule = parse_rule(line);
            stats.record(rule.kind());
            rule
        })
        .collect();
    (rules, stats)
}
