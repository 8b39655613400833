use crate::capability::capability_check;
use crate::error::EmitError;
use crate::gift::lexer::HTML_PREFIX;
use crate::model::{Answer, Format, NumericSpec, Question, QuestionBank, QuestionBody, TextFormat};

#[derive(Clone, Copy, PartialEq, Eq)]
enum Context {
    /// Question text or title, outside the answer block.
    Outside,
    /// Answer, response or feedback text inside the block.
    Block,
}

/// Backslash-escapes `text` so the tokenizer reads it back verbatim.
pub fn escape(text: &str) -> String {
    escape_in(text, Context::Outside)
}

fn escape_in(text: &str, ctx: Context) -> String {
    let mut out = String::with_capacity(text.len() + 8);
    let chars: Vec<char> = text.chars().collect();
    let mut line_start = true;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if line_start && !c.is_whitespace() {
            line_start = false;
            if c == '/' && chars.get(i + 1) == Some(&'/') {
                out.push('\\');
            }
        }
        match c {
            '\\' | '{' | '}' | '=' | '~' | '#' | ':' => {
                out.push('\\');
                out.push(c);
            }
            '>' if ctx == Context::Block && i > 0 && chars[i - 1] == '-' => out.push_str("\\>"),
            '\n' => {
                out.push(c);
                line_start = true;
            }
            _ => out.push(c),
        }
        i += 1;
    }
    if ctx == Context::Outside && text.trim_start().starts_with(HTML_PREFIX) {
        if let Some(p) = out.find('[') {
            out.insert(p, '\\');
        }
    }
    if ctx == Context::Block {
        if let Some(p) = out.find(|c: char| !c.is_whitespace()).filter(|p| out[*p..].starts_with('%')) {
            out.insert(p, '\\');
        }
    }
    out
}

/// Formats a weight with at most five significant digits.
pub fn format_weight(fraction: f64) -> String {
    if fraction == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{fraction:.4e}").parse().unwrap_or(fraction);
    format!("{rounded}")
}

pub fn format_number(v: f64) -> String {
    format!("{v}")
}

fn format_spec(spec: &NumericSpec) -> String {
    match *spec {
        NumericSpec::Exact(v) => format_number(v),
        NumericSpec::Range { min, max } => format!("{}..{}", format_number(min), format_number(max)),
        NumericSpec::Tolerance { value, tolerance } => format!("{}:{}", format_number(value), format_number(tolerance)),
    }
}

fn has_empty_line(text: &str) -> bool {
    text.trim().lines().any(|l| l.trim().is_empty())
}

pub fn emit_gift(bank: &QuestionBank) -> Result<String, EmitError> {
    let mut out = Vec::with_capacity(bank.len());
    for (index, q) in bank.questions.iter().enumerate() {
        let verdict = capability_check(q, Format::Gift);
        if !verdict.supported {
            return Err(EmitError::Unsupported { index, format: Format::Gift, reason: verdict.reason.unwrap_or_default() });
        }
        out.push(emit_question(q).map_err(|reason| EmitError::Unrepresentable { index, format: Format::Gift, reason })?);
    }
    if out.is_empty() {
        return Ok(String::new());
    }
    Ok(out.join("\n\n") + "\n")
}

fn emit_question(q: &Question) -> Result<String, String> {
    let texts = q.texts();
    let feedback = q.body.answers().iter().filter_map(|a| a.feedback.as_deref());
    let title = q.title.as_deref().into_iter();
    if texts.iter().map(|(_, t)| *t).chain(feedback).chain(title).any(has_empty_line) {
        return Err("text contains an empty line, which GIFT reads as a question separator".into());
    }

    let mut s = String::new();
    if let Some(title) = q.title.as_deref().map(str::trim).filter(|t| !t.is_empty()) {
        s.push_str("::");
        s.push_str(&escape_in(title, Context::Outside));
        s.push_str("::");
    }
    if q.stem_format == TextFormat::Html {
        s.push_str(HTML_PREFIX);
    }
    s.push_str(&escape_in(q.stem.trim(), Context::Outside));
    s.push(' ');

    match &q.body {
        QuestionBody::TrueFalse { answer } => s.push_str(if *answer { "{TRUE}" } else { "{FALSE}" }),
        QuestionBody::Essay => s.push_str("{}"),
        QuestionBody::Numerical { specs } if specs.len() == 1 => {
            s.push_str("{#");
            s.push_str(&format_spec(&specs[0]));
            s.push('}');
        }
        QuestionBody::Numerical { specs } => {
            s.push_str("{#\n");
            for spec in specs {
                s.push_str(&format!("\t={}\n", format_spec(spec)));
            }
            s.push('}');
        }
        QuestionBody::MultipleChoice { single, answers } => {
            s.push_str("{\n");
            for a in answers {
                let marker = match (*single, a.fraction) {
                    (true, f) if f == 100.0 => "=".to_owned(),
                    (true, f) if f == 0.0 => "~".to_owned(),
                    (_, f) => format!("~%{}%", format_weight(f)),
                };
                push_answer(&mut s, &marker, a);
            }
            s.push('}');
        }
        QuestionBody::ShortAnswer { answers } => {
            s.push_str("{\n");
            for a in answers {
                let marker = if a.fraction == 100.0 { "=".to_owned() } else { format!("=%{}%", format_weight(a.fraction)) };
                push_answer(&mut s, &marker, a);
            }
            s.push('}');
        }
        QuestionBody::Matching { pairs, extra_responses } => {
            s.push_str("{\n");
            for p in pairs {
                s.push_str(&format!(
                    "\t={} -> {}\n",
                    escape_in(p.premise.trim(), Context::Block),
                    escape_in(p.response.trim(), Context::Block)
                ));
            }
            for r in extra_responses {
                s.push_str(&format!("\t= -> {}\n", escape_in(r.trim(), Context::Block)));
            }
            s.push('}');
        }
    }
    Ok(s)
}

fn push_answer(s: &mut String, marker: &str, a: &Answer) {
    s.push('\t');
    s.push_str(marker);
    s.push_str(&escape_in(a.text.trim(), Context::Block));
    if let Some(fb) = a.feedback.as_deref().map(str::trim).filter(|f| !f.is_empty()) {
        s.push('#');
        s.push_str(&escape_in(fb, Context::Block));
    }
    s.push('\n');
}
