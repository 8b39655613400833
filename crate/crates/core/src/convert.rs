//! Bank-level conversion under the per-format capability matrix.

use std::path::Path;

use crate::aiken::emit_aiken;
use crate::capability::capability_check;
use crate::error::ConvertError;
use crate::gift::{emit_gift, strip_formatting, FormattingPolicy};
use crate::mediapack::{bundle_gift_media_with, BundleOptions};
use crate::model::{codes, Diagnostic, Format, Location, Question, QuestionBank, TextFormat, DEFAULT_PENALTY};
use crate::moodlexml::emit_moodlexml;
use crate::validate::validate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Strict,
    Lossy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OnUnsupported {
    #[default]
    Fail,
    SkipWithWarning,
}

/// Strict mode always fails on unsupported questions; construct policies
/// through [`ConversionPolicy::new`] to keep it that way.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConversionPolicy {
    mode: Mode,
    on_unsupported: OnUnsupported,
}

impl ConversionPolicy {
    pub fn new(mode: Mode, on_unsupported: OnUnsupported) -> Result<Self, ConvertError> {
        if mode == Mode::Strict && on_unsupported != OnUnsupported::Fail {
            return Err(ConvertError::BadPolicy);
        }
        Ok(ConversionPolicy { mode, on_unsupported })
    }

    pub fn strict() -> Self {
        ConversionPolicy { mode: Mode::Strict, on_unsupported: OnUnsupported::Fail }
    }

    pub fn lossy() -> Self {
        ConversionPolicy { mode: Mode::Lossy, on_unsupported: OnUnsupported::SkipWithWarning }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn on_unsupported(&self) -> OnUnsupported {
        self.on_unsupported
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skip {
    pub index: usize,
    pub code: &'static str,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConversionReport {
    pub converted: usize,
    pub skipped: Vec<Skip>,
    pub warnings: Vec<Diagnostic>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConversionOutput {
    Text(String),
    /// GIFT-with-media zip archive.
    Archive(Vec<u8>),
}

impl ConversionOutput {
    pub fn as_bytes(&self) -> &[u8] {
        match self {
            ConversionOutput::Text(s) => s.as_bytes(),
            ConversionOutput::Archive(b) => b,
        }
    }
}

/// Extra inputs for conversions that may need media files.
#[derive(Debug, Clone, Default)]
pub struct ConvertOptions<'a> {
    pub media_dir: Option<&'a Path>,
    pub bundle: BundleOptions,
}

pub fn convert(
    bank: &QuestionBank,
    target: Format,
    policy: ConversionPolicy,
) -> Result<(ConversionOutput, ConversionReport), ConvertError> {
    convert_with(bank, target, policy, &ConvertOptions::default())
}

pub fn convert_with(
    bank: &QuestionBank,
    target: Format,
    policy: ConversionPolicy,
    options: &ConvertOptions<'_>,
) -> Result<(ConversionOutput, ConversionReport), ConvertError> {
    let errors = validate(bank).iter().filter(|d| d.is_error()).count();
    if errors > 0 {
        return Err(ConvertError::InvalidBank(errors));
    }

    let mut report = ConversionReport::default();
    let mut kept = Vec::with_capacity(bank.len());
    for (index, q) in bank.questions.iter().enumerate() {
        let verdict = capability_check(q, target);
        if !verdict.supported {
            let reason = verdict.reason.unwrap_or_default();
            if policy.on_unsupported == OnUnsupported::Fail {
                return Err(ConvertError::Unsupported { index, format: target, reason });
            }
            let at = q.origin.unwrap_or(Location::START);
            report.warnings.push(
                Diagnostic::warning(at, verdict.code.unwrap_or("unsupported"), format!("skipped: {reason}")).for_question(index),
            );
            report.skipped.push(Skip { index, code: verdict.code.unwrap_or("unsupported"), reason });
            continue;
        }
        kept.push(adapt(q, index, target, &mut report.warnings));
    }
    report.converted = kept.len();

    let out = QuestionBank::new(kept);
    let output = match target {
        Format::Aiken => ConversionOutput::Text(emit_aiken(&out)?),
        Format::MoodleXml => ConversionOutput::Text(emit_moodlexml(&out)),
        Format::Gift if out.questions.iter().any(|q| !q.media.is_empty()) => {
            ConversionOutput::Archive(bundle_gift_media_with(&out, options.media_dir, &options.bundle)?)
        }
        Format::Gift => ConversionOutput::Text(emit_gift(&out)?),
    };
    Ok((output, report))
}

/// Copy of `q` reduced to what `target` can carry, with a warning for each
/// dropped detail.
fn adapt(q: &Question, index: usize, target: Format, warnings: &mut Vec<Diagnostic>) -> Question {
    let at = q.origin.unwrap_or(Location::START);
    let mut warn = |code, msg: &str| warnings.push(Diagnostic::warning(at, code, msg).for_question(index));
    let mut out = q.clone();
    if target == Format::MoodleXml {
        return out;
    }

    if q.general_feedback.as_deref().is_some_and(|f| !f.trim().is_empty())
        || q.penalty != DEFAULT_PENALTY
        || q.hidden
    {
        warn(codes::CONVERT_METADATA_DROPPED, "general feedback, penalty and hidden flag are not kept");
        out.general_feedback = None;
        out.penalty = DEFAULT_PENALTY;
        out.hidden = false;
    }

    if target == Format::Aiken {
        if q.title.as_deref().is_some_and(|t| !t.trim().is_empty()) {
            warn(codes::CONVERT_TITLE_DROPPED, "title dropped; Aiken has no title syntax");
        }
        out.title = None;
        if q.body.answers().iter().any(|a| a.feedback.is_some()) {
            warn(codes::CONVERT_FEEDBACK_DROPPED, "answer feedback dropped; Aiken cannot carry it");
        }
        for a in out.body.answers_mut() {
            a.feedback = None;
        }
        let plain = |s: &str| strip_formatting(s, FormattingPolicy::Plain);
        let changed = plain(&q.stem) != q.stem || q.body.answers().iter().any(|a| plain(&a.text) != a.text);
        if q.stem_format == TextFormat::Html || changed {
            if changed {
                warn(codes::CONVERT_FORMATTING_STRIPPED, "formatting tags removed for Aiken");
            }
            out.stem = plain(&q.stem);
            for a in out.body.answers_mut() {
                a.text = plain(&a.text);
            }
            out.stem_format = TextFormat::Plain;
        }
    }
    out
}
