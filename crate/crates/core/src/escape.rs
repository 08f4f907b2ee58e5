//! Backslash escaping for texts embedded in tab-separated line formats.
//!
//! Tabs, newlines, carriage returns and the backslash itself are escaped so a
//! field never contains a raw separator. The mapping is a bijection on strings.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UnescapeError {
    #[error("dangling backslash at end of field")]
    Dangling,
    #[error("unknown escape sequence \\{0}")]
    Unknown(char),
}

pub fn escape_field(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        match ch {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

pub fn unescape_field(field: &str) -> Result<String, UnescapeError> {
    let mut out = String::with_capacity(field.len());
    let mut chars = field.chars();
    while let Some(ch) = chars.next() {
        if ch != '\\' {
            out.push(ch);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some(other) => return Err(UnescapeError::Unknown(other)),
            None => return Err(UnescapeError::Dangling),
        }
    }
    Ok(out)
}
