//! Moodle XML question banks.
//!
//! Emission is deterministic: two-space indentation, a fixed element order
//! and `name` first in every question. Parsing accepts any element order.

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use roxmltree::{Document, Node};

use crate::aiken::admit;
use crate::gift::format_number;
use crate::mediapack;
use crate::model::{
    codes, Answer, Diagnostic, Location, MatchPair, MediaFile, NumericSpec, Question, QuestionBank, QuestionBody,
    TextFormat, DEFAULT_PENALTY,
};

pub const ROOT: &str = "quiz";

/// Name written for an untitled question.
pub fn fallback_name(stem: &str) -> String {
    Question::new(stem, QuestionBody::Essay).default_name()
}

pub fn escape_text(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\r' => out.push_str("&#13;"),
            _ => out.push(c),
        }
    }
    out
}

struct Writer {
    out: String,
    depth: usize,
}

impl Writer {
    fn line(&mut self, s: &str) {
        for _ in 0..self.depth {
            self.out.push_str("  ");
        }
        self.out.push_str(s);
        self.out.push('\n');
    }

    fn open(&mut self, tag: &str) {
        self.line(&format!("<{tag}>"));
        self.depth += 1;
    }

    fn close(&mut self, name: &str) {
        self.depth -= 1;
        self.line(&format!("</{name}>"));
    }

    fn leaf(&mut self, name: &str, text: &str) {
        self.line(&format!("<{name}>{}</{name}>", escape_text(text)));
    }

    /// `<name attrs><text>..</text></name>`
    fn text_block(&mut self, name: &str, attrs: &str, text: &str) {
        self.open(&format!("{name}{attrs}"));
        self.leaf("text", text);
        self.close(name);
    }
}

fn format_attr(format: TextFormat) -> &'static str {
    match format {
        TextFormat::Html => " format=\"html\"",
        TextFormat::Plain => " format=\"plain_text\"",
    }
}

pub fn emit_moodlexml(bank: &QuestionBank) -> String {
    let mut w = Writer { out: String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"), depth: 0 };
    w.open(ROOT);
    for q in &bank.questions {
        emit_question(&mut w, q);
    }
    w.close(ROOT);
    w.out
}

fn emit_question(w: &mut Writer, q: &Question) {
    w.open(&format!("question type=\"{}\"", q.kind().name()));
    let name = match q.title.as_deref().map(str::trim).filter(|t| !t.is_empty()) {
        Some(t) => t.to_owned(),
        None => fallback_name(q.stem.trim()),
    };
    w.text_block("name", "", &name);

    w.open(&format!("questiontext{}", format_attr(q.stem_format)));
    w.leaf("text", q.stem.trim());
    for m in &q.media {
        if let Some(bytes) = &m.payload {
            w.line(&format!(
                "<file name=\"{}\" path=\"/\" encoding=\"base64\">{}</file>",
                escape_text(&m.name),
                BASE64.encode(bytes)
            ));
        }
    }
    w.close("questiontext");

    if let Some(fb) = q.general_feedback.as_deref().map(str::trim).filter(|f| !f.is_empty()) {
        w.text_block("generalfeedback", format_attr(q.stem_format), fb);
    }
    w.leaf("penalty", &format_number(q.penalty));
    w.leaf("hidden", if q.hidden { "1" } else { "0" });

    match &q.body {
        QuestionBody::TrueFalse { answer } => {
            let (t, f) = if *answer { (100.0, 0.0) } else { (0.0, 100.0) };
            emit_answer(w, &Answer::new("true", t), None);
            emit_answer(w, &Answer::new("false", f), None);
        }
        QuestionBody::MultipleChoice { single, answers } => {
            w.leaf("single", if *single { "true" } else { "false" });
            for a in answers {
                emit_answer(w, a, None);
            }
        }
        QuestionBody::ShortAnswer { answers } => {
            for a in answers {
                emit_answer(w, a, None);
            }
        }
        QuestionBody::Numerical { specs } => {
            for spec in specs {
                let (value, tolerance) = spec.as_tolerance();
                emit_answer(w, &Answer::new(format_number(value), 100.0), Some(tolerance));
            }
        }
        QuestionBody::Matching { pairs, extra_responses } => {
            let subs = pairs
                .iter()
                .map(|p| (p.premise.trim(), p.response.trim()))
                .chain(extra_responses.iter().map(|r| ("", r.trim())));
            for (premise, response) in subs {
                w.open(&format!("subquestion{}", format_attr(q.stem_format)));
                w.leaf("text", premise);
                w.text_block("answer", "", response);
                w.close("subquestion");
            }
        }
        QuestionBody::Essay => {}
    }
    w.close("question");
}

fn emit_answer(w: &mut Writer, a: &Answer, tolerance: Option<f64>) {
    w.open(&format!("answer fraction=\"{}\"", format_number(a.fraction)));
    w.leaf("text", a.text.trim());
    if let Some(fb) = a.feedback.as_deref().map(str::trim).filter(|f| !f.is_empty()) {
        w.text_block("feedback", "", fb);
    }
    if let Some(t) = tolerance {
        w.leaf("tolerance", &format_number(t));
    }
    w.close("answer");
}

const KNOWN_TYPES: [&str; 6] = ["truefalse", "multichoice", "matching", "numerical", "shortanswer", "essay"];

pub fn parse_moodlexml(source: &str) -> QuestionBank {
    let source = crate::strip_bom(source);
    let mut bank = QuestionBank::default();
    let doc = match Document::parse(source) {
        Ok(doc) => doc,
        Err(e) => {
            let pos = e.pos();
            bank.diagnostics.push(Diagnostic::error(
                Location::new(pos.row as usize, pos.col as usize),
                codes::XML_MALFORMED,
                format!("malformed XML: {e}"),
            ));
            return bank;
        }
    };

    let root = doc.root_element();
    let questions: Vec<Node> = if root.has_tag_name("question") {
        vec![root]
    } else {
        if !root.has_tag_name(ROOT) {
            bank.diagnostics.push(Diagnostic::warning(
                location(&doc, root),
                codes::XML_BAD_ROOT,
                format!("expected <{ROOT}> root element, found <{}>", root.tag_name().name()),
            ));
        }
        root.children().filter(|n| n.has_tag_name("question")).collect()
    };

    for node in questions {
        let at = location(&doc, node);
        let ty = node.attribute("type").unwrap_or("");
        if ty == "category" {
            bank.diagnostics.push(Diagnostic::info(at, codes::XML_SKIPPED_CATEGORY, "category entries are skipped"));
            continue;
        }
        if !KNOWN_TYPES.contains(&ty) {
            bank.diagnostics.push(Diagnostic::warning(
                at,
                codes::XML_UNKNOWN_TYPE,
                format!("question type `{ty}` is not supported; skipped"),
            ));
            continue;
        }
        match parse_question(&doc, node, ty) {
            Ok((q, warnings)) => {
                let index = bank.len();
                admit(q, &mut bank);
                if bank.len() > index {
                    bank.diagnostics.extend(warnings.into_iter().map(|d| d.for_question(index)));
                }
            }
            Err(d) => bank.diagnostics.push(d),
        }
    }
    bank
}

fn location(doc: &Document, node: Node) -> Location {
    let pos = doc.text_pos_at(node.range().start);
    Location::new(pos.row as usize, pos.col as usize)
}

fn child<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    node.children().find(|n| n.has_tag_name(name))
}

fn children<'a, 'i>(node: Node<'a, 'i>, name: &'a str) -> impl Iterator<Item = Node<'a, 'i>> + 'a {
    node.children().filter(move |n| n.has_tag_name(name))
}

/// Text of the `<text>` child, trimmed.
fn text_of(node: Node) -> String {
    child(node, "text").map(|t| collect_text(t).trim().to_owned()).unwrap_or_default()
}

fn collect_text(node: Node) -> String {
    node.children().filter(|n| n.is_text()).filter_map(|n| n.text()).collect()
}

fn leaf_text(node: Node, name: &str) -> Option<String> {
    child(node, name).map(|n| collect_text(n).trim().to_owned())
}

fn parse_question(doc: &Document, node: Node, ty: &str) -> Result<(Question, Vec<Diagnostic>), Diagnostic> {
    let at = location(doc, node);
    let mut warnings = Vec::new();
    let bad_value = |n: Node, what: &str, value: &str| {
        Diagnostic::error(location(doc, n), codes::XML_BAD_VALUE, format!("{what} `{value}` is not valid"))
    };

    let qtext = child(node, "questiontext");
    let stem = qtext.map(text_of).unwrap_or_default();
    let stem_format = match qtext.and_then(|n| n.attribute("format")) {
        Some("html") => TextFormat::Html,
        _ => TextFormat::Plain,
    };

    let mut media = Vec::new();
    if let Some(qt) = qtext {
        for f in children(qt, "file") {
            let name = f.attribute("name").unwrap_or("").to_owned();
            let raw: String = collect_text(f).split_whitespace().collect();
            match BASE64.decode(raw.as_bytes()) {
                Ok(bytes) => media.push(MediaFile { name, payload: Some(bytes) }),
                Err(_) => warnings.push(Diagnostic::warning(
                    location(doc, f),
                    codes::XML_BAD_BASE64,
                    format!("file `{name}` is not valid base64; ignored"),
                )),
            }
        }
    }

    let penalty = match child(node, "penalty") {
        Some(n) => {
            let raw = collect_text(n);
            raw.trim().parse::<f64>().map_err(|_| bad_value(n, "penalty", raw.trim()))?
        }
        None => DEFAULT_PENALTY,
    };
    let hidden = match child(node, "hidden") {
        Some(n) => match collect_text(n).trim() {
            "1" | "true" => true,
            "0" | "false" | "" => false,
            other => return Err(bad_value(n, "hidden flag", other)),
        },
        None => false,
    };
    let general_feedback = child(node, "generalfeedback").map(text_of).filter(|s| !s.is_empty());

    let answers = || -> Result<Vec<(Node, Answer)>, Diagnostic> {
        children(node, "answer")
            .map(|a| {
                let raw = a.attribute("fraction").unwrap_or("0");
                let fraction = match raw.trim().parse::<f64>() {
                    Ok(f) if (-100.0..=100.0).contains(&f) => f,
                    _ => {
                        return Err(Diagnostic::error(
                            location(doc, a),
                            codes::XML_BAD_FRACTION,
                            format!("fraction `{raw}` is not a number in [-100, 100]"),
                        ))
                    }
                };
                let feedback = child(a, "feedback").map(text_of).filter(|s| !s.is_empty());
                Ok((a, Answer { text: text_of(a), fraction, feedback }))
            })
            .collect()
    };

    let body = match ty {
        "truefalse" => {
            let answers = answers()?;
            let best = answers
                .iter()
                .max_by(|a, b| a.1.fraction.total_cmp(&b.1.fraction))
                .map(|(_, a)| a.text.to_ascii_lowercase());
            let answer = match best.as_deref() {
                Some(t) if t.contains("true") => true,
                Some(t) if t.contains("false") => false,
                _ => {
                    return Err(Diagnostic::error(at, codes::XML_BAD_VALUE, "true/false question has no `true` or `false` answer"))
                }
            };
            QuestionBody::TrueFalse { answer }
        }
        "multichoice" => {
            let single = match leaf_text(node, "single").as_deref() {
                Some("false") | Some("0") => false,
                _ => true,
            };
            QuestionBody::MultipleChoice { single, answers: answers()?.into_iter().map(|(_, a)| a).collect() }
        }
        "shortanswer" => QuestionBody::ShortAnswer { answers: answers()?.into_iter().map(|(_, a)| a).collect() },
        "numerical" => {
            let mut specs = Vec::new();
            for (n, a) in answers()? {
                let value: f64 = a.text.parse().map_err(|_| bad_value(n, "numeric answer", &a.text))?;
                let tolerance = match leaf_text(n, "tolerance") {
                    Some(t) if !t.is_empty() => t.parse::<f64>().map_err(|_| bad_value(n, "tolerance", &t))?,
                    _ => 0.0,
                };
                if a.fraction != 100.0 {
                    warnings.push(Diagnostic::warning(
                        location(doc, n),
                        codes::XML_BAD_FRACTION,
                        format!("numeric partial credit {}% is not kept", a.fraction),
                    ));
                }
                specs.push(if tolerance == 0.0 {
                    NumericSpec::Exact(value)
                } else {
                    NumericSpec::Tolerance { value, tolerance }
                });
            }
            QuestionBody::Numerical { specs }
        }
        "matching" => {
            let mut pairs = Vec::new();
            let mut extra_responses = Vec::new();
            for sub in children(node, "subquestion") {
                let premise = text_of(sub);
                let response = child(sub, "answer").map(text_of).unwrap_or_default();
                if premise.is_empty() {
                    extra_responses.push(response);
                } else {
                    pairs.push(MatchPair::new(premise, response));
                }
            }
            QuestionBody::Matching { pairs, extra_responses }
        }
        _ => QuestionBody::Essay,
    };

    let mut q = Question::new(stem, body);
    q.stem_format = stem_format;
    q.penalty = penalty;
    q.hidden = hidden;
    q.general_feedback = general_feedback;
    q.origin = Some(at);
    q.title = child(node, "name").map(text_of).filter(|n| !n.is_empty() && *n != fallback_name(&q.stem));
    q.media = media;
    mediapack::attach_media_names(&mut q);
    // Embedded files not referenced from the text are still kept.
    for f in children_files(qtext) {
        if !q.media.iter().any(|m| m.name == f.name) {
            q.media.push(f);
        }
    }
    Ok((q, warnings))
}

fn children_files(qtext: Option<Node>) -> Vec<MediaFile> {
    let Some(qt) = qtext else { return Vec::new() };
    children(qt, "file")
        .filter_map(|f| {
            let raw: String = collect_text(f).split_whitespace().collect();
            let bytes = BASE64.decode(raw.as_bytes()).ok()?;
            Some(MediaFile { name: f.attribute("name").unwrap_or("").to_owned(), payload: Some(bytes) })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tf() -> Question {
        Question::new("для створення публікацій використовують MS Publisher?", QuestionBody::TrueFalse { answer: true })
            .with_title("питання Так/ні - відповідь Так")
            .html()
    }

    #[test]
    fn true_false_elements() {
        let xml = emit_moodlexml(&QuestionBank::new(vec![tf()]));
        assert!(xml.starts_with("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<quiz>\n"));
        assert!(xml.contains("<question type=\"truefalse\">"));
        assert!(xml.contains("<answer fraction=\"100\">\n      <text>true</text>"));
        assert!(xml.contains("<answer fraction=\"0\">\n      <text>false</text>"));
        assert!(xml.contains("<penalty>0.1</penalty>"));
        assert!(xml.contains("<hidden>0</hidden>"));
        assert!(xml.contains("<text>питання Так/ні - відповідь Так</text>"));
        let back = parse_moodlexml(&xml);
        assert!(back.diagnostics.is_empty(), "{:?}", back.diagnostics);
        assert!(back.questions[0].structurally_eq(&tf()));
    }

    #[test]
    fn empty_bank_document() {
        let xml = emit_moodlexml(&QuestionBank::default());
        assert_eq!(xml, "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<quiz>\n</quiz>\n");
        let back = parse_moodlexml(&xml);
        assert!(back.is_empty() && back.diagnostics.is_empty());
    }

    #[test]
    fn range_becomes_midpoint_tolerance() {
        let q = Question::new("n", QuestionBody::Numerical { specs: vec![NumericSpec::Range { min: 2.0, max: 6.0 }] });
        let xml = emit_moodlexml(&QuestionBank::new(vec![q.clone()]));
        assert!(xml.contains("<text>4</text>"));
        assert!(xml.contains("<tolerance>2</tolerance>"));
        let back = parse_moodlexml(&xml);
        assert_eq!(
            back.questions[0].body,
            QuestionBody::Numerical { specs: vec![NumericSpec::Tolerance { value: 4.0, tolerance: 2.0 }] }
        );
        assert!(back.questions[0].structurally_eq(&q));
    }

    #[test]
    fn unknown_type_skipped_with_warning() {
        let bank = parse_moodlexml("<quiz><question type=\"cloze\"><name><text>x</text></name></question></quiz>");
        assert!(bank.is_empty());
        assert_eq!(bank.diagnostics.len(), 1);
        assert_eq!(bank.diagnostics[0].code, codes::XML_UNKNOWN_TYPE);
        assert!(!bank.diagnostics[0].is_error());
    }

    #[test]
    fn malformed_xml_single_error() {
        let bank = parse_moodlexml("<quiz>\n  <question type=\"essay\">\n</quiz>");
        assert_eq!(bank.diagnostics.len(), 1);
        assert_eq!(bank.diagnostics[0].code, codes::XML_MALFORMED);
        assert_eq!(bank.diagnostics[0].line, 3);
    }

    #[test]
    fn fraction_out_of_range() {
        let src = r#"<quiz><question type="shortanswer"><questiontext><text>q</text></questiontext>
            <answer fraction="150"><text>a</text></answer></question>
            <question type="essay"><questiontext><text>ok</text></questiontext></question></quiz>"#;
        let bank = parse_moodlexml(src);
        assert_eq!(bank.len(), 1);
        assert_eq!(bank.errors().map(|d| d.code).collect::<Vec<_>>(), vec![codes::XML_BAD_FRACTION]);
        assert_eq!(bank.errors().next().unwrap().line, 2);
    }

    #[test]
    fn defaults_when_missing() {
        let bank = parse_moodlexml("<quiz><question type=\"essay\"><questiontext><text>q</text></questiontext></question></quiz>");
        let q = &bank.questions[0];
        assert_eq!((q.penalty, q.hidden, q.title.as_deref()), (0.1, false, None));
    }

    #[test]
    fn xml_specials_survive() {
        let q = Question::new("a < b && c > \"d\"", QuestionBody::Essay);
        let back = parse_moodlexml(&emit_moodlexml(&QuestionBank::new(vec![q])));
        assert_eq!(back.questions[0].stem, "a < b && c > \"d\"");
    }

    #[test]
    fn name_fallback() {
        assert_eq!(fallback_name("<p>Short</p>"), "Short");
        assert_eq!(fallback_name(&"x".repeat(50)).len(), 40);
        assert_eq!(fallback_name("<img src=\"a.png\">"), "<img src=\"a.png\">");
        let q = Question::new("A question without a title", QuestionBody::Essay);
        let xml = emit_moodlexml(&QuestionBank::new(vec![q]));
        assert!(xml.contains("<name>\n      <text>A question without a title</text>"));
        assert_eq!(parse_moodlexml(&xml).questions[0].title, None);
    }

    #[test]
    fn media_payloads_embedded() {
        let mut q = Question::new("<img src=\"@@PLUGINFILE@@/a.png\">", QuestionBody::Essay).html();
        q.media.push(MediaFile { name: "a.png".into(), payload: Some(vec![0, 255, 7]) });
        let xml = emit_moodlexml(&QuestionBank::new(vec![q]));
        assert!(xml.contains("<file name=\"a.png\" path=\"/\" encoding=\"base64\">AP8H</file>"));
        let back = parse_moodlexml(&xml);
        assert_eq!(back.questions[0].media, vec![MediaFile { name: "a.png".into(), payload: Some(vec![0, 255, 7]) }]);
    }
}
