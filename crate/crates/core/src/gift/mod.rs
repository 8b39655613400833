//! GIFT: brace-delimited questions separated by blank lines.
//!
//! ```text
//! // comment lines are ignored
//! ::Title::[html]Question text {
//!     =correct answer#feedback
//!     ~wrong answer
//! }
//! ```
//!
//! `{ } = ~ # :` are special and escaped with a backslash in text.

mod emit;
mod lexer;
mod parser;

use std::sync::OnceLock;

use regex::Regex;

pub use emit::{emit_gift, escape, format_weight};
pub use lexer::{tokenize_gift, tokenize_with_diagnostics, GiftToken, TokenKind};
pub use parser::parse_gift;

pub(crate) use emit::format_number;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FormattingPolicy {
    /// Leave markup untouched.
    #[default]
    Passthrough,
    /// Remove the basic formatting tags, keeping their inner text.
    Plain,
}

fn formatting_tag() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)</?\s*(?:h1|p|br|hr|b|i|sub|sup|ol|ul|li|a)(?:\s[^<>]*)?/?>").unwrap())
}

/// Removes the basic HTML formatting tags (`h1 p br hr b i sub sup ol ul
/// li a`) under [`FormattingPolicy::Plain`]. Other tags are left alone.
pub fn strip_formatting(text: &str, policy: FormattingPolicy) -> String {
    match policy {
        FormattingPolicy::Passthrough => text.to_owned(),
        FormattingPolicy::Plain => formatting_tag().replace_all(text, "").into_owned(),
    }
}
