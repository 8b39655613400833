//! Question-bank interchange for Moodle's Aiken, GIFT and Moodle XML import
//! formats.
//!
//! Every format parses into and emits from one typed model
//! ([`QuestionBank`]). Parsers never fail outright: malformed questions are
//! dropped from the bank and reported as [`Diagnostic`]s with source
//! positions. Emitters refuse questions a format cannot hold, and
//! [`convert`](convert::convert) applies the per-format capability matrix
//! with a strict or lossy policy.
//!
//! ```
//! use qbank::{gift, moodlexml};
//!
//! let bank = gift::parse_gift("Question Yes/No? {TRUE}");
//! assert!(bank.diagnostics.is_empty());
//! let xml = moodlexml::emit_moodlexml(&bank);
//! assert!(xml.contains(r#"<question type="truefalse">"#));
//! ```

pub mod aiken;
pub mod capability;
pub mod convert;
pub mod error;
pub mod gift;
pub mod mediapack;
pub mod model;
pub mod moodlexml;
pub mod validate;

pub use capability::{capability_check, CapabilityVerdict, Feature, FormatCapability};
pub use convert::{convert, ConversionOutput, ConversionPolicy, ConversionReport};
pub use error::{ConvertError, EmitError, MediaError};
pub use model::*;
pub use validate::validate;

/// Drops a leading UTF-8 byte-order mark.
pub fn strip_bom(source: &str) -> &str {
    source.strip_prefix('\u{feff}').unwrap_or(source)
}

/// Parses `source` in the given format.
pub fn parse(format: Format, source: &str) -> QuestionBank {
    match format {
        Format::Aiken => aiken::parse_aiken(source),
        Format::Gift => gift::parse_gift(source),
        Format::MoodleXml => moodlexml::parse_moodlexml(source),
    }
}
