//! Just enough URL structure for matching: scheme and host spans.

use core::fmt;
use core::ops::Range;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UrlError {
    MissingScheme,
    EmptyHost,
}

impl fmt::Display for UrlError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UrlError::MissingScheme => f.write_str("missing scheme"),
            UrlError::EmptyHost => f.write_str("empty host"),
        }
    }
}

impl core::error::Error for UrlError {}

/// Byte spans into the original URL text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UrlSpans {
    pub scheme: Range<usize>,
    /// `None` for non-hierarchical URLs such as `data:` or `about:blank`.
    pub host: Option<Range<usize>>,
}

impl UrlSpans {
    pub fn scheme<'a>(&self, url: &'a str) -> &'a str {
        &url[self.scheme.clone()]
    }

    pub fn host<'a>(&self, url: &'a str) -> Option<&'a str> {
        self.host.clone().map(|r| &url[r])
    }
}

pub fn parse_url(url: &str) -> Result<UrlSpans, UrlError> {
    let bytes = url.as_bytes();
    let colon = url.find(':').ok_or(UrlError::MissingScheme)?;
    let scheme = &bytes[..colon];
    let valid_scheme = !scheme.is_empty()
        && scheme[0].is_ascii_alphabetic()
        && scheme
            .iter()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'+' | b'-' | b'.'));
    if !valid_scheme {
        return Err(UrlError::MissingScheme);
    }

    let after = &url[colon + 1..];
    if !after.starts_with("//") {
        return Ok(UrlSpans {
            scheme: 0..colon,
            host: None,
        });
    }

    let authority_start = colon + 3;
    let authority_len = url[authority_start..]
        .find(['/', '?', '#'])
        .unwrap_or(url.len() - authority_start);
    let authority = &url[authority_start..authority_start + authority_len];
    let host_start = authority_start + authority.rfind('@').map_or(0, |at| at + 1);
    let host_text = &url[host_start..authority_start + authority_len];
    let host_len = if host_text.starts_with('[') {
        host_text.find(']').map_or(host_text.len(), |end| end + 1)
    } else {
        host_text.find(':').unwrap_or(host_text.len())
    };
    if host_len == 0 {
        return Err(UrlError::EmptyHost);
    }
    Ok(UrlSpans {
        scheme: 0..colon,
        host: Some(host_start..host_start + host_len),
    })
}

/// Schemes the engine filters; everything else is let through unmatched.
pub fn is_web_scheme(scheme: &str) -> bool {
    ["http", "https", "ws", "wss"]
        .iter()
        .any(|web| scheme.eq_ignore_ascii_case(web))
}
