//! Translation of network and exception rules into the iOS/Safari
//! content-blocker rule format.
//!
//! Only the exact-translation subset is exported; everything else is skipped
//! with a reason. The generated `url-filter` expressions use literals, `.`,
//! `*`, `?` on groups, bracket classes and `^`/`$` anchors, but no
//! alternation.

use alloc::string::String;
use alloc::vec::Vec;

use crate::rule::{Anchor, FilterRule, Party, PatternPart, PatternSpec, ResourceType, RuleId, RuleKind, TypeFilter, TypeMask, UnsupportedReason};

pub const DEFAULT_MAX_RULES: usize = 50_000;

/// Matches one separator character.
pub const SEPARATOR_CLASS: &str = "[^A-Za-z0-9_.%-]";

/// Scheme, optional userinfo, and any run of subdomain labels.
pub const DOMAIN_ANCHOR_PREFIX: &str = "^[A-Za-z][A-Za-z0-9.+-]*://([^/?#@]*@)?([^/?#@:]*\\.)?";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum ResourceClass {
    Document,
    Image,
    StyleSheet,
    Script,
    Font,
    Raw,
    Media,
}

impl ResourceClass {
    pub const ALL: [ResourceClass; 7] = [
        ResourceClass::Document,
        ResourceClass::Image,
        ResourceClass::StyleSheet,
        ResourceClass::Script,
        ResourceClass::Font,
        ResourceClass::Raw,
        ResourceClass::Media,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ResourceClass::Document => "document",
            ResourceClass::Image => "image",
            ResourceClass::StyleSheet => "style-sheet",
            ResourceClass::Script => "script",
            ResourceClass::Font => "font",
            ResourceClass::Raw => "raw",
            ResourceClass::Media => "media",
        }
    }

    pub fn of(ty: ResourceType) -> ResourceClass {
        match ty {
            ResourceType::Script => ResourceClass::Script,
            ResourceType::Image => ResourceClass::Image,
            ResourceType::Stylesheet => ResourceClass::StyleSheet,
            ResourceType::Font => ResourceClass::Font,
            ResourceType::Media => ResourceClass::Media,
            ResourceType::Subdocument | ResourceType::Document | ResourceType::MainDocument => ResourceClass::Document,
            ResourceType::Object
            | ResourceType::Xmlhttprequest
            | ResourceType::Websocket
            | ResourceType::Ping
            | ResourceType::Other => ResourceClass::Raw,
        }
    }

    /// The rule-option types belonging to this class.
    pub fn members(self) -> TypeMask {
        ResourceType::RULE_TYPES
            .into_iter()
            .filter(|t| ResourceClass::of(*t) == self)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum LoadType {
    FirstParty,
    ThirdParty,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub struct Trigger {
    pub url_filter: String,
    pub url_filter_is_case_sensitive: bool,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub resource_type: Option<Vec<ResourceClass>>,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub load_type: Option<Vec<LoadType>>,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub if_domain: Option<Vec<String>>,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub unless_domain: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum ActionType {
    Block,
    IgnorePreviousRules,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Action {
    #[cfg_attr(feature = "serde", serde(rename = "type"))]
    pub kind: ActionType,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ContentBlockerRule {
    pub trigger: Trigger,
    pub action: Action,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkipReason {
    Unsupported(UnsupportedReason),
    /// Both included and excluded initiator domains.
    MixedDomains,
    /// The type set splits one of the platform's resource classes.
    PartialResourceClass,
    NonAsciiPattern,
    /// A `||` literal starting with a character that cannot begin a host.
    UnanchorableDomain,
}

impl SkipReason {
    pub fn describe(self) -> &'static str {
        match self {
            SkipReason::Unsupported(reason) => reason.describe(),
            SkipReason::MixedDomains => "mixes included and excluded domains",
            SkipReason::PartialResourceClass => "resource types do not form whole platform classes",
            SkipReason::NonAsciiPattern => "pattern is not ASCII",
            SkipReason::UnanchorableDomain => "domain-anchored literal cannot start a host",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedRule {
    pub rule: RuleId,
    pub reason: SkipReason,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExportReport {
    pub exported_count: usize,
    pub blocks: usize,
    pub exceptions: usize,
    pub skipped: Vec<SkippedRule>,
    pub limit: usize,
    /// Translated entries left out by truncation.
    pub truncated: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExportOptions {
    pub max_rules: usize,
    pub truncate: bool,
}

impl Default for ExportOptions {
    fn default() -> Self {
        ExportOptions {
            max_rules: DEFAULT_MAX_RULES,
            truncate: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExportError {
    #[error("max_rules must be at least 1")]
    InvalidLimit,
    #[error("{count} translated rules exceed the limit of {limit}")]
    RuleLimitExceeded { count: usize, limit: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IosExport {
    pub rules: Vec<ContentBlockerRule>,
    /// Source rule of each entry in `rules`.
    pub sources: Vec<RuleId>,
    pub report: ExportReport,
}

fn push_escaped(out: &mut String, literal: &str) {
    for ch in literal.chars() {
        if matches!(ch, '\\' | '.' | '*' | '+' | '?' | '^' | '$' | '(' | ')' | '[' | ']' | '{' | '}' | '|') {
            out.push('\\');
        }
        out.push(ch);
    }
}

/// Trailing run of separators and wildcards. A separator there may also
/// match the end of the URL, and after a wildcard anything goes.
fn push_trailing(out: &mut String, run: &[PatternPart], end_anchored: bool) {
    match run.first() {
        None if !end_anchored => out.push_str(".*"),
        None => {}
        Some(PatternPart::Wildcard) => out.push_str(".*"),
        Some(_) => {
            out.push('(');
            out.push_str(SEPARATOR_CLASS);
            push_trailing(out, &run[1..], end_anchored);
            out.push_str(")?");
        }
    }
}

/// Regular expression equivalent to the URL pattern of a rule.
pub fn translate_pattern(pattern: &PatternSpec) -> Result<String, SkipReason> {
    let parts = &pattern.parts;
    if parts.iter().any(|p| matches!(p, PatternPart::Literal(l) if !l.is_ascii())) {
        return Err(SkipReason::NonAsciiPattern);
    }
    let mut out = String::new();
    match pattern.anchor {
        Anchor::None => {}
        Anchor::StartOfUrl => out.push('^'),
        Anchor::DomainBoundary => {
            let first = match parts.first() {
                Some(PatternPart::Literal(l)) => l.as_bytes()[0],
                _ => return Err(SkipReason::Unsupported(UnsupportedReason::DomainAnchorWithoutLiteral)),
            };
            if !(first.is_ascii_alphanumeric() || matches!(first, b'-' | b'_' | b'.')) {
                return Err(SkipReason::UnanchorableDomain);
            }
            out.push_str(DOMAIN_ANCHOR_PREFIX);
        }
    }
    let body_len = parts
        .iter()
        .rposition(|p| matches!(p, PatternPart::Literal(_)))
        .map_or(0, |i| i + 1);
    for part in &parts[..body_len] {
        match part {
            PatternPart::Literal(l) => push_escaped(&mut out, l),
            PatternPart::Wildcard => out.push_str(".*"),
            PatternPart::Separator => out.push_str(SEPARATOR_CLASS),
        }
    }
    let run = &parts[body_len..];
    if run.is_empty() && !pattern.end_anchored {
        if out.is_empty() {
            out.push_str(".*");
        }
        return Ok(out);
    }
    push_trailing(&mut out, run, pattern.end_anchored);
    out.push('$');
    Ok(out)
}

fn resource_classes(filter: TypeFilter) -> Result<Option<Vec<ResourceClass>>, SkipReason> {
    let allowed = match filter {
        TypeFilter::Any => return Ok(None),
        TypeFilter::Only(mask) => mask,
        TypeFilter::Except(mask) => mask.complement(),
    };
    if allowed == TypeMask::ALL {
        return Ok(None);
    }
    let mut classes = Vec::new();
    for class in ResourceClass::ALL {
        let members = class.members();
        let covered = members.difference(allowed).is_empty();
        let touched = members.difference(members.difference(allowed)) != TypeMask::EMPTY;
        match (covered, touched) {
            (true, _) => classes.push(class),
            (false, true) => return Err(SkipReason::PartialResourceClass),
            (false, false) => {}
        }
    }
    Ok(Some(classes))
}

fn wildcard_domains(domains: &[String]) -> Vec<String> {
    domains.iter().map(|d| alloc::format!("*{d}")).collect()
}

/// Translates one network or exception rule; other kinds yield `None`.
pub fn translate_rule(rule: &FilterRule) -> Option<Result<ContentBlockerRule, SkipReason>> {
    let kind = match rule.kind() {
        RuleKind::Network => ActionType::Block,
        RuleKind::Exception => ActionType::IgnorePreviousRules,
        RuleKind::Unsupported => {
            let reason = rule.unsupported().map(|u| u.reason)?;
            return Some(Err(SkipReason::Unsupported(reason)));
        }
        _ => return None,
    };
    let (pattern, options) = (rule.pattern()?, rule.options()?);
    Some((|| {
        if !options.include_domains.is_empty() && !options.exclude_domains.is_empty() {
            return Err(SkipReason::MixedDomains);
        }
        let url_filter = translate_pattern(pattern)?;
        let resource_type = resource_classes(options.resource_types)?;
        let load_type = match options.party {
            Party::Any => None,
            Party::ThirdOnly => Some(alloc::vec![LoadType::ThirdParty]),
            Party::FirstOnly => Some(alloc::vec![LoadType::FirstParty]),
        };
        let non_empty = |d: &[String]| (!d.is_empty()).then(|| wildcard_domains(d));
        Ok(ContentBlockerRule {
            trigger: Trigger {
                url_filter,
                url_filter_is_case_sensitive: pattern.match_case,
                resource_type,
                load_type,
                if_domain: non_empty(&options.include_domains),
                unless_domain: non_empty(&options.exclude_domains),
            },
            action: Action { kind },
        })
    })())
}

/// Blocks in source order, then exceptions in source order.
pub fn export_ios(rules: &[FilterRule], options: ExportOptions) -> Result<IosExport, ExportError> {
    if options.max_rules == 0 {
        return Err(ExportError::InvalidLimit);
    }
    let mut blocks = Vec::new();
    let mut exceptions = Vec::new();
    let mut skipped = Vec::new();
    for rule in rules {
        match translate_rule(rule) {
            None => {}
            Some(Err(reason)) => skipped.push(SkippedRule {
                rule: rule.id().clone(),
                reason,
            }),
            Some(Ok(entry)) => match entry.action.kind {
                ActionType::Block => blocks.push((entry, rule.id().clone())),
                ActionType::IgnorePreviousRules => exceptions.push((entry, rule.id().clone())),
            },
        }
    }
    let count = blocks.len() + exceptions.len();
    if count > options.max_rules && !options.truncate {
        return Err(ExportError::RuleLimitExceeded {
            count,
            limit: options.max_rules,
        });
    }
    blocks.truncate(options.max_rules);
    exceptions.truncate(options.max_rules - blocks.len());
    let (block_count, exception_count) = (blocks.len(), exceptions.len());
    let (entries, sources): (Vec<_>, Vec<_>) = blocks.into_iter().chain(exceptions).unzip();
    Ok(IosExport {
        report: ExportReport {
            exported_count: entries.len(),
            blocks: block_count,
            exceptions: exception_count,
            skipped,
            limit: options.max_rules,
            truncated: count - entries.len(),
        },
        rules: entries,
        sources,
    })
}
