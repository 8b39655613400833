//! Aiken: single-correct multiple choice, one option per line, closed by an
//! `ANSWER: <letter>` line.

use std::sync::OnceLock;

use regex::Regex;

use crate::capability::capability_check;
use crate::error::EmitError;
use crate::model::{
    codes, Answer, Diagnostic, Format, Location, Question, QuestionBank, QuestionBody, AIKEN_MAX_OPTIONS,
};
use crate::{mediapack, strip_bom, validate};

fn option_line() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\s*([A-Z])[.)]\s+(.*?)\s*$").unwrap())
}

fn lowercase_option_line() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\s*[a-z][.)]\s+").unwrap())
}

fn answer_line() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\s*ANSWER:\s*(.*?)\s*$").unwrap())
}

#[derive(Debug, Default)]
struct Block {
    start: usize,
    stem: Vec<String>,
    options: Vec<(usize, String)>,
    error: Option<Diagnostic>,
}

impl Block {
    fn is_empty(&self) -> bool {
        self.stem.is_empty() && self.options.is_empty()
    }

    fn fail(&mut self, d: Diagnostic) {
        self.error.get_or_insert(d);
    }
}

pub fn parse_aiken(source: &str) -> QuestionBank {
    let source = strip_bom(source);
    let mut bank = QuestionBank::default();
    let mut block = Block::default();

    for (i, raw) in source.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if block.is_empty() {
            block.start = line_no;
        }

        if let Some(caps) = answer_line().captures(line) {
            let letter = caps[1].to_owned();
            let finished = std::mem::take(&mut block);
            finish_block(finished, &letter, line_no, &mut bank);
            continue;
        }

        if let Some(caps) = option_line().captures(line) {
            let label = caps[1].chars().next().unwrap();
            let expected = (b'A' + block.options.len() as u8) as char;
            if block.stem.is_empty() && block.options.is_empty() {
                block.fail(Diagnostic::error(
                    Location::new(line_no, 1),
                    codes::AIKEN_MISSING_OPTIONS,
                    "option line before any question text",
                ));
            } else if label != expected && block.options.len() < AIKEN_MAX_OPTIONS {
                block.fail(Diagnostic::error(
                    Location::new(line_no, 1),
                    codes::AIKEN_LABEL_ORDER,
                    format!("expected option label {expected}, found {label}"),
                ));
            }
            block.options.push((line_no, caps[2].to_owned()));
            continue;
        }

        if block.options.is_empty() {
            block.stem.push(line.trim().to_owned());
            continue;
        }

        if lowercase_option_line().is_match(line) {
            block.fail(Diagnostic::error(
                Location::new(line_no, 1),
                codes::AIKEN_BAD_LABEL,
                "option labels must be uppercase letters A-J",
            ));
            continue;
        }

        // Text after options without an ANSWER line: the previous block is
        // unterminated and this line starts a new question.
        let unfinished = std::mem::take(&mut block);
        bank.diagnostics.push(missing_answer(&unfinished));
        block.start = line_no;
        block.stem.push(line.trim().to_owned());
    }

    if !block.is_empty() {
        bank.diagnostics.push(missing_answer(&block));
    }
    bank
}

fn missing_answer(block: &Block) -> Diagnostic {
    if let Some(d) = &block.error {
        return d.clone();
    }
    Diagnostic::error(
        Location::new(block.start, 1),
        codes::AIKEN_MISSING_ANSWER,
        "question has no ANSWER line",
    )
}

fn finish_block(block: Block, letter: &str, line_no: usize, bank: &mut QuestionBank) {
    let at = Location::new(block.start, 1);
    if let Some(d) = block.error {
        bank.diagnostics.push(d);
        return;
    }
    if block.stem.is_empty() && block.options.is_empty() {
        bank.diagnostics.push(Diagnostic::error(
            Location::new(line_no, 1),
            codes::AIKEN_MISSING_OPTIONS,
            "ANSWER line without a question",
        ));
        return;
    }
    if block.options.is_empty() {
        bank.diagnostics.push(Diagnostic::error(at, codes::AIKEN_MISSING_OPTIONS, "question has no options"));
        return;
    }
    if block.options.len() > AIKEN_MAX_OPTIONS {
        bank.diagnostics.push(Diagnostic::error(
            at,
            codes::AIKEN_TOO_MANY_OPTIONS,
            format!(
                "question has {} options; the number of alternatives cannot exceed {AIKEN_MAX_OPTIONS}",
                block.options.len()
            ),
        ));
        return;
    }
    let mut chars = letter.chars();
    let index = match (chars.next(), chars.next()) {
        (Some(c @ 'A'..='Z'), None) => (c as u8 - b'A') as usize,
        _ => {
            bank.diagnostics.push(Diagnostic::error(
                Location::new(line_no, 1),
                codes::AIKEN_BAD_ANSWER_LINE,
                format!("ANSWER must name a single option letter, found `{letter}`"),
            ));
            return;
        }
    };
    if index >= block.options.len() {
        let last = (b'A' + block.options.len() as u8 - 1) as char;
        bank.diagnostics.push(Diagnostic::error(
            Location::new(line_no, 1),
            codes::AIKEN_ANSWER_OUT_OF_RANGE,
            format!("ANSWER {letter} on line {line_no} names no option (options run A-{last})"),
        ));
        return;
    }

    let answers = block
        .options
        .into_iter()
        .enumerate()
        .map(|(i, (_, text))| Answer::new(text, if i == index { 100.0 } else { 0.0 }))
        .collect();
    let mut q = Question::new(block.stem.join(" "), QuestionBody::MultipleChoice { single: true, answers });
    q.origin = Some(at);
    mediapack::attach_media_names(&mut q);
    admit(q, bank);
}

/// Runs question-level validation and appends the question unless it has
/// errors. Shared by every parser.
pub(crate) fn admit(q: Question, bank: &mut QuestionBank) {
    let index = bank.questions.len();
    let diags = validate::validate_question(&q, index);
    let failed = diags.iter().any(Diagnostic::is_error);
    bank.diagnostics.extend(diags.into_iter().map(|mut d| {
        if failed {
            d.question = None;
        }
        d
    }));
    if !failed {
        bank.questions.push(q);
    }
}

pub fn emit_aiken(bank: &QuestionBank) -> Result<String, EmitError> {
    for (i, q) in bank.questions.iter().enumerate() {
        let verdict = capability_check(q, Format::Aiken);
        if !verdict.supported {
            return Err(EmitError::Unsupported {
                index: i,
                format: Format::Aiken,
                reason: verdict.reason.unwrap_or_default(),
            });
        }
    }

    let mut blocks = Vec::with_capacity(bank.len());
    for (i, q) in bank.questions.iter().enumerate() {
        let answers = q.body.answers();
        if answers.len() > AIKEN_MAX_OPTIONS {
            return Err(EmitError::Unrepresentable {
                index: i,
                format: Format::Aiken,
                reason: format!("{} options exceed the limit of {AIKEN_MAX_OPTIONS}", answers.len()),
            });
        }
        let stem = one_line(&q.stem);
        if stem.is_empty() || option_line().is_match(&stem) || answer_line().is_match(&stem) {
            return Err(EmitError::Unrepresentable {
                index: i,
                format: Format::Aiken,
                reason: "question text would be read back as an option or ANSWER line".into(),
            });
        }
        let mut block = stem;
        block.push('\n');
        let mut correct = 'A';
        for (j, a) in answers.iter().enumerate() {
            let label = (b'A' + j as u8) as char;
            if a.fraction == 100.0 {
                correct = label;
            }
            let text = one_line(&a.text);
            if text.is_empty() {
                return Err(EmitError::Unrepresentable {
                    index: i,
                    format: Format::Aiken,
                    reason: format!("option {label} is empty"),
                });
            }
            block.push_str(&format!("{label}. {text}\n"));
        }
        block.push_str(&format!("ANSWER: {correct}\n"));
        blocks.push(block);
    }
    Ok(blocks.join("\n"))
}

fn one_line(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}
