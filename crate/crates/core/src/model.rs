//! The format-neutral question model shared by every parser and emitter.

use std::fmt;

/// Penalty applied when a question carries no explicit value.
pub const DEFAULT_PENALTY: f64 = 0.1;

/// Tolerance, in percentage points, for the positive-fraction sum of
/// multi-answer questions. Three answers at 33.333 must pass.
pub const FRACTION_SUM_TOLERANCE: f64 = 0.1;

/// Characters of question text used as the name of an untitled question.
pub const NAME_FALLBACK_CHARS: usize = 40;

/// Maximum number of options an Aiken block may carry.
pub const AIKEN_MAX_OPTIONS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Format {
    Aiken,
    Gift,
    MoodleXml,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Aiken => "aiken",
            Format::Gift => "gift",
            Format::MoodleXml => "moodlexml",
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "aiken" => Ok(Format::Aiken),
            "gift" => Ok(Format::Gift),
            "moodlexml" | "xml" | "moodle" => Ok(Format::MoodleXml),
            other => Err(format!("unknown format `{other}` (expected aiken, gift or moodlexml)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TextFormat {
    #[default]
    Plain,
    Html,
}

/// 1-based position in a source file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Location {
    pub line: usize,
    pub column: usize,
}

impl Location {
    pub const START: Location = Location { line: 1, column: 1 };

    pub fn new(line: usize, column: usize) -> Self {
        Location { line, column }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Error,
    Warning,
    Info,
}

impl Severity {
    pub fn label(self) -> &'static str {
        match self {
            Severity::Error => "ERROR",
            Severity::Warning => "WARNING",
            Severity::Info => "INFO",
        }
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A structured finding produced while parsing, validating or converting.
///
/// `code` is a stable short identifier (see [`codes`]); `message` is for
/// humans and may change between releases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub line: usize,
    pub column: usize,
    pub code: &'static str,
    pub message: String,
    /// Index of the affected question in the bank, when one applies.
    pub question: Option<usize>,
}

impl Diagnostic {
    pub fn new(severity: Severity, at: Location, code: &'static str, message: impl Into<String>) -> Self {
        Diagnostic {
            severity,
            line: at.line.max(1),
            column: at.column.max(1),
            code,
            message: message.into(),
            question: None,
        }
    }

    pub fn error(at: Location, code: &'static str, message: impl Into<String>) -> Self {
        Self::new(Severity::Error, at, code, message)
    }

    pub fn warning(at: Location, code: &'static str, message: impl Into<String>) -> Self {
        Self::new(Severity::Warning, at, code, message)
    }

    pub fn info(at: Location, code: &'static str, message: impl Into<String>) -> Self {
        Self::new(Severity::Info, at, code, message)
    }

    pub fn for_question(mut self, index: usize) -> Self {
        self.question = Some(index);
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    pub fn location(&self) -> Location {
        Location::new(self.line, self.column)
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}:{} {} {}", self.severity, self.line, self.column, self.code, self.message)
    }
}

/// Stable diagnostic codes.
pub mod codes {
    pub const EMPTY_STEM: &str = "empty-stem";
    pub const EMPTY_ANSWER: &str = "empty-answer";
    pub const NO_ANSWERS: &str = "no-answers";
    pub const PENALTY_RANGE: &str = "penalty-range";
    pub const FRACTION_RANGE: &str = "fraction-range";
    pub const FRACTION_OFF_GRID: &str = "fraction-off-grid";
    pub const FRACTION_SUM: &str = "fraction-sum";
    pub const MC_TOO_FEW_ANSWERS: &str = "mc-too-few-answers";
    pub const MC_SINGLE_FRACTIONS: &str = "mc-single-fractions";
    pub const MC_MULTI_FULL_CREDIT: &str = "mc-multi-full-credit";
    pub const MATCHING_TOO_FEW_PAIRS: &str = "matching-too-few-pairs";
    pub const MATCHING_EMPTY_SIDE: &str = "matching-empty-side";
    pub const NUMERIC_RANGE_INVERTED: &str = "numeric-range-inverted";
    pub const NUMERIC_NEGATIVE_TOLERANCE: &str = "numeric-negative-tolerance";
    pub const NUMERIC_NOT_FINITE: &str = "numeric-not-finite";
    pub const SHORTANSWER_FRACTION: &str = "shortanswer-fraction";

    pub const AIKEN_TOO_MANY_OPTIONS: &str = "aiken-too-many-options";
    pub const AIKEN_ANSWER_OUT_OF_RANGE: &str = "aiken-answer-out-of-range";
    pub const AIKEN_MISSING_ANSWER: &str = "aiken-missing-answer";
    pub const AIKEN_MISSING_OPTIONS: &str = "aiken-missing-options";
    pub const AIKEN_LABEL_ORDER: &str = "aiken-label-order";
    pub const AIKEN_BAD_LABEL: &str = "aiken-bad-label";
    pub const AIKEN_BAD_ANSWER_LINE: &str = "aiken-bad-answer-line";

    pub const GIFT_UNTERMINATED_ESCAPE: &str = "gift-unterminated-escape";
    pub const GIFT_BLANK_LINE_IN_BLOCK: &str = "gift-blank-line-in-block";
    pub const GIFT_UNBALANCED_BRACE: &str = "gift-unbalanced-brace";
    pub const GIFT_BAD_WEIGHT: &str = "gift-bad-weight";
    pub const GIFT_MISSING_BLOCK: &str = "gift-missing-block";
    pub const GIFT_MULTIPLE_BLOCKS: &str = "gift-multiple-blocks";
    pub const GIFT_TEXT_AFTER_BLOCK: &str = "gift-text-after-block";
    pub const GIFT_STRAY_TEXT: &str = "gift-stray-text";
    pub const GIFT_BAD_NUMERIC: &str = "gift-bad-numeric";
    pub const GIFT_MATCHING_MIXED: &str = "gift-matching-mixed";
    pub const GIFT_UNTERMINATED_TITLE: &str = "gift-unterminated-title";
    pub const GIFT_UNESCAPED_SPECIAL: &str = "gift-unescaped-special";
    pub const GIFT_DROPPED_FEEDBACK: &str = "gift-dropped-feedback";

    pub const XML_MALFORMED: &str = "xml-malformed";
    pub const XML_UNKNOWN_TYPE: &str = "xml-unknown-type";
    pub const XML_SKIPPED_CATEGORY: &str = "xml-skipped-category";
    pub const XML_BAD_FRACTION: &str = "xml-bad-fraction";
    pub const XML_BAD_VALUE: &str = "xml-bad-value";
    pub const XML_BAD_ROOT: &str = "xml-bad-root";
    pub const XML_BAD_BASE64: &str = "xml-bad-base64";

    pub const MEDIA_DANGLING: &str = "media-dangling";

    pub const CONVERT_TITLE_DROPPED: &str = "convert-title-dropped";
    pub const CONVERT_FORMATTING_STRIPPED: &str = "convert-formatting-stripped";
    pub const CONVERT_FEEDBACK_DROPPED: &str = "convert-feedback-dropped";
    pub const CONVERT_METADATA_DROPPED: &str = "convert-metadata-dropped";
}

/// A file attached to a question, referenced from its text by name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MediaFile {
    /// Path relative to the media folder, case-sensitive.
    pub name: String,
    pub payload: Option<Vec<u8>>,
}

impl MediaFile {
    pub fn named(name: impl Into<String>) -> Self {
        MediaFile { name: name.into(), payload: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Answer {
    pub text: String,
    /// Grade weight in percent, within [-100, 100].
    pub fraction: f64,
    pub feedback: Option<String>,
}

impl Answer {
    pub fn new(text: impl Into<String>, fraction: f64) -> Self {
        Answer { text: text.into(), fraction, feedback: None }
    }

    pub fn with_feedback(mut self, feedback: impl Into<String>) -> Self {
        self.feedback = Some(feedback.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NumericSpec {
    Exact(f64),
    Range { min: f64, max: f64 },
    Tolerance { value: f64, tolerance: f64 },
}

impl NumericSpec {
    /// Value and tolerance form. Ranges become midpoint plus half-width.
    pub fn as_tolerance(self) -> (f64, f64) {
        match self {
            NumericSpec::Exact(v) => (v, 0.0),
            NumericSpec::Range { min, max } => ((min + max) / 2.0, (max - min) / 2.0),
            NumericSpec::Tolerance { value, tolerance } => (value, tolerance),
        }
    }

    /// Canonical form used for structural comparison: ranges are rewritten
    /// as tolerance specs and zero tolerance collapses to an exact value.
    pub fn canonical(self) -> NumericSpec {
        match self.as_tolerance() {
            (v, t) if t == 0.0 => NumericSpec::Exact(v),
            (value, tolerance) => NumericSpec::Tolerance { value, tolerance },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BodyKind {
    TrueFalse,
    MultipleChoice,
    Matching,
    Numerical,
    ShortAnswer,
    Essay,
}

impl BodyKind {
    pub const ALL: [BodyKind; 6] = [
        BodyKind::TrueFalse,
        BodyKind::MultipleChoice,
        BodyKind::Matching,
        BodyKind::Numerical,
        BodyKind::ShortAnswer,
        BodyKind::Essay,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BodyKind::TrueFalse => "truefalse",
            BodyKind::MultipleChoice => "multichoice",
            BodyKind::Matching => "matching",
            BodyKind::Numerical => "numerical",
            BodyKind::ShortAnswer => "shortanswer",
            BodyKind::Essay => "essay",
        }
    }
}

impl fmt::Display for BodyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchPair {
    pub premise: String,
    pub response: String,
}

impl MatchPair {
    pub fn new(premise: impl Into<String>, response: impl Into<String>) -> Self {
        MatchPair { premise: premise.into(), response: response.into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum QuestionBody {
    TrueFalse { answer: bool },
    MultipleChoice { single: bool, answers: Vec<Answer> },
    Matching { pairs: Vec<MatchPair>, extra_responses: Vec<String> },
    Numerical { specs: Vec<NumericSpec> },
    ShortAnswer { answers: Vec<Answer> },
    Essay,
}

impl QuestionBody {
    pub fn kind(&self) -> BodyKind {
        match self {
            QuestionBody::TrueFalse { .. } => BodyKind::TrueFalse,
            QuestionBody::MultipleChoice { .. } => BodyKind::MultipleChoice,
            QuestionBody::Matching { .. } => BodyKind::Matching,
            QuestionBody::Numerical { .. } => BodyKind::Numerical,
            QuestionBody::ShortAnswer { .. } => BodyKind::ShortAnswer,
            QuestionBody::Essay => BodyKind::Essay,
        }
    }

    pub fn answers(&self) -> &[Answer] {
        match self {
            QuestionBody::MultipleChoice { answers, .. } | QuestionBody::ShortAnswer { answers } => answers,
            _ => &[],
        }
    }

    pub fn answers_mut(&mut self) -> &mut [Answer] {
        match self {
            QuestionBody::MultipleChoice { answers, .. } | QuestionBody::ShortAnswer { answers } => answers,
            _ => &mut [],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Question {
    pub title: Option<String>,
    pub stem: String,
    pub stem_format: TextFormat,
    pub general_feedback: Option<String>,
    /// Fraction of the grade lost per wrong attempt, within [0, 1].
    pub penalty: f64,
    pub hidden: bool,
    pub media: Vec<MediaFile>,
    pub body: QuestionBody,
    /// Where the question started in its source file, when parsed.
    pub origin: Option<Location>,
}

impl Question {
    pub fn new(stem: impl Into<String>, body: QuestionBody) -> Self {
        Question {
            title: None,
            stem: stem.into(),
            stem_format: TextFormat::Plain,
            general_feedback: None,
            penalty: DEFAULT_PENALTY,
            hidden: false,
            media: Vec::new(),
            body,
            origin: None,
        }
    }

    pub fn with_title(mut self, title: impl Into<String>) -> Self {
        self.title = Some(title.into());
        self
    }

    pub fn html(mut self) -> Self {
        self.stem_format = TextFormat::Html;
        self
    }

    pub fn kind(&self) -> BodyKind {
        self.body.kind()
    }

    /// Name Moodle gives an untitled question: the first 40 characters of
    /// its text with formatting removed and whitespace collapsed. A title
    /// equal to this name is equivalent to no title.
    pub fn default_name(&self) -> String {
        let plain = crate::gift::strip_formatting(&self.stem, crate::gift::FormattingPolicy::Plain);
        let collapsed = plain.split_whitespace().collect::<Vec<_>>().join(" ");
        let name: String = collapsed.chars().take(NAME_FALLBACK_CHARS).collect();
        match name.trim_end() {
            "" => "Question".to_owned(),
            n => n.to_owned(),
        }
    }

    /// Every text field that may reference media, in a fixed order:
    /// the stem first, then answers.
    pub fn texts(&self) -> Vec<(MediaField, &str)> {
        let mut out = vec![(MediaField::Stem, self.stem.as_str())];
        out.extend(
            self.body
                .answers()
                .iter()
                .enumerate()
                .map(|(i, a)| (MediaField::Answer(i), a.text.as_str())),
        );
        if let QuestionBody::Matching { pairs, extra_responses } = &self.body {
            let mut ordinal = 0;
            for pair in pairs {
                out.push((MediaField::Answer(ordinal), pair.premise.as_str()));
                out.push((MediaField::Answer(ordinal), pair.response.as_str()));
                ordinal += 1;
            }
            for extra in extra_responses {
                out.push((MediaField::Answer(ordinal), extra.as_str()));
                ordinal += 1;
            }
        }
        out
    }

    /// Copy with whitespace trimmed, empty optionals cleared, numeric specs
    /// canonicalised, media reduced to sorted names and source position
    /// dropped. Two questions are structurally equal when their normalised
    /// forms are equal.
    pub fn normalized(&self) -> Question {
        fn opt(s: &Option<String>) -> Option<String> {
            s.as_deref().map(str::trim).filter(|s| !s.is_empty()).map(str::to_owned)
        }
        let body = match &self.body {
            QuestionBody::TrueFalse { answer } => QuestionBody::TrueFalse { answer: *answer },
            QuestionBody::MultipleChoice { single, answers } => QuestionBody::MultipleChoice {
                single: *single,
                answers: answers.iter().map(normalize_answer).collect(),
            },
            QuestionBody::Matching { pairs, extra_responses } => QuestionBody::Matching {
                pairs: pairs
                    .iter()
                    .map(|p| MatchPair::new(p.premise.trim(), p.response.trim()))
                    .collect(),
                extra_responses: extra_responses.iter().map(|s| s.trim().to_owned()).collect(),
            },
            QuestionBody::Numerical { specs } => QuestionBody::Numerical {
                specs: specs.iter().map(|s| s.canonical()).collect(),
            },
            QuestionBody::ShortAnswer { answers } => QuestionBody::ShortAnswer {
                answers: answers.iter().map(normalize_answer).collect(),
            },
            QuestionBody::Essay => QuestionBody::Essay,
        };
        let mut media: Vec<MediaFile> = self.media.iter().map(|m| MediaFile::named(m.name.clone())).collect();
        media.sort_by(|a, b| a.name.cmp(&b.name));
        media.dedup();
        Question {
            title: opt(&self.title).filter(|t| *t != self.default_name()),
            stem: self.stem.trim().to_owned(),
            stem_format: self.stem_format,
            general_feedback: opt(&self.general_feedback),
            penalty: self.penalty,
            hidden: self.hidden,
            media,
            body,
            origin: None,
        }
    }

    pub fn structurally_eq(&self, other: &Question) -> bool {
        self.normalized() == other.normalized()
    }
}

fn normalize_answer(a: &Answer) -> Answer {
    Answer {
        text: a.text.trim().to_owned(),
        fraction: a.fraction,
        feedback: a.feedback.as_deref().map(str::trim).filter(|s| !s.is_empty()).map(str::to_owned),
    }
}

/// Which text of a question a media reference was found in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MediaField {
    Stem,
    /// Answer ordinal; for matching questions, the pair or extra-response index.
    Answer(usize),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct QuestionBank {
    pub questions: Vec<Question>,
    pub diagnostics: Vec<Diagnostic>,
}

impl QuestionBank {
    pub fn new(questions: Vec<Question>) -> Self {
        QuestionBank { questions, diagnostics: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.questions.is_empty()
    }

    pub fn len(&self) -> usize {
        self.questions.len()
    }

    pub fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(Diagnostic::is_error)
    }

    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics.iter().filter(|d| d.is_error())
    }

    /// Question-by-question structural equality; diagnostics are ignored.
    pub fn structurally_eq(&self, other: &QuestionBank) -> bool {
        self.questions.len() == other.questions.len()
            && self.questions.iter().zip(&other.questions).all(|(a, b)| a.structurally_eq(b))
    }
}
