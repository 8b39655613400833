//! Acceptance checks, one PASS/FAIL line each. Exits non-zero on failure.

mod common;

use std::collections::BTreeSet;
use std::fs;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

use common::{bank, first_difference, Profile};
use qbank::gift::{emit_gift, parse_gift};
use qbank::mediapack::{attach_media_names, bundle_gift_media, unbundle_gift_media};
use qbank::moodlexml::{emit_moodlexml, parse_moodlexml};
use qbank::{
    aiken, convert, validate, Answer, BodyKind, ConversionPolicy, ConvertError, Format, MatchPair, MediaError,
    NumericSpec, Question, QuestionBank, QuestionBody, TextFormat,
};

type Check = Result<(), String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn single(source: &str) -> Result<Question, String> {
    let b = parse_gift(source);
    if b.has_errors() || b.len() != 1 {
        return Err(format!("{source:?}: {} questions, diagnostics {:?}", b.len(), b.diagnostics));
    }
    Ok(b.questions.into_iter().next().unwrap())
}

fn expect_gift(source: &str, expected: Question) -> Check {
    let q = single(source)?;
    ensure(q.structurally_eq(&expected), || format!("{source:?}\n  got      {:?}\n  expected {:?}", q.normalized(), expected.normalized()))
}

const AIKEN_BLOCK: &str = "The text of the question\nA. correct answer\nB. wrong answer 1\nC. wrong answer 2\nD. wrong answer 3\nANSWER: A";

fn golden_corpus() -> Check {
    let started = Instant::now();
    let mc = |single, answers: &[(&str, f64)]| QuestionBody::MultipleChoice {
        single,
        answers: answers.iter().map(|&(t, f)| Answer::new(t, f)).collect(),
    };

    expect_gift("Question {TRUE}", Question::new("Question", QuestionBody::TrueFalse { answer: true }))?;
    expect_gift("Question {FALSE}", Question::new("Question", QuestionBody::TrueFalse { answer: false }))?;
    expect_gift("Question Yes/No? {TRUE}", Question::new("Question Yes/No?", QuestionBody::TrueFalse { answer: true }))?;
    expect_gift(
        "The question with one correct answer? { = The correct answer ~ Wrong answer 1 ~ Wrong answer 2 ~ Wrong answer 3 }",
        Question::new(
            "The question with one correct answer?",
            mc(true, &[("The correct answer", 100.0), ("Wrong answer 1", 0.0), ("Wrong answer 2", 0.0), ("Wrong answer 3", 0.0)]),
        ),
    )?;
    expect_gift(
        "The questions with several correct answers? { ~% 50% Correct answer 1 ~% 50% Correct answer 2 ~% -50% Wrong answer 1 ~% -50% Wrong answer 2 }",
        Question::new(
            "The questions with several correct answers?",
            mc(false, &[("Correct answer 1", 50.0), ("Correct answer 2", 50.0), ("Wrong answer 1", -50.0), ("Wrong answer 2", -50.0)]),
        ),
    )?;
    expect_gift(
        "Questions about matching: { = Question 1 -> Answer 1 = Question 2 -> Answer 2 = Question 3 -> Answer 3 = Question 4 -> Answer 4 = -> Answer 5 }",
        Question::new(
            "Questions about matching:",
            QuestionBody::Matching {
                pairs: (1..=4).map(|i| MatchPair::new(format!("Question {i}"), format!("Answer {i}"))).collect(),
                extra_responses: vec!["Answer 5".into()],
            },
        ),
    )?;
    expect_gift(
        "Numerical question 2 + 2? {# 4}",
        Question::new("Numerical question 2 + 2?", QuestionBody::Numerical { specs: vec![NumericSpec::Exact(4.0)] }),
    )?;
    expect_gift(
        "Numerical range question? {#2..6}",
        Question::new(
            "Numerical range question?",
            QuestionBody::Numerical { specs: vec![NumericSpec::Range { min: 2.0, max: 6.0 }] },
        ),
    )?;
    expect_gift(
        "The question with a short answer? { = yes }",
        Question::new("The question with a short answer?", QuestionBody::ShortAnswer { answers: vec![Answer::new("yes", 100.0)] }),
    )?;
    expect_gift("Task - essay. { }", Question::new("Task - essay.", QuestionBody::Essay))?;
    let titled = single(":: The title of the question :: The text of the question { = yes }")?;
    ensure(titled.title.as_deref().map(str::trim) == Some("The title of the question"), || format!("title {:?}", titled.title))?;

    let b = aiken::parse_aiken(AIKEN_BLOCK);
    ensure(!b.has_errors() && b.len() == 1, || format!("aiken: {:?}", b.diagnostics))?;
    let expected = Question::new(
        "The text of the question",
        mc(true, &[("correct answer", 100.0), ("wrong answer 1", 0.0), ("wrong answer 2", 0.0), ("wrong answer 3", 0.0)]),
    );
    ensure(b.questions[0].structurally_eq(&expected), || format!("aiken model {:?}", b.questions[0]))?;
    let emitted = aiken::emit_aiken(&b).map_err(|e| e.to_string())?;
    ensure(emitted.trim_end() == AIKEN_BLOCK, || format!("aiken emit {emitted:?}"))?;

    let elapsed = started.elapsed();
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))
}

const FIG2: &str = r#"<question type="truefalse">
  <questiontext format="html">
    <text>для створення публікацій використовують MS Publisher?</text>
  </questiontext>
  <image></image>
  <image_base64></image_base64>
  <generalfeedback>
    <text></text>
  </generalfeedback>
  <penalty>0.1</penalty>
  <hidden>0</hidden>
  <answer fraction="100">
    <text>true</text>
    <feedback>
      <text></text>
    </feedback>
  </answer>
  <answer fraction="0">
    <text>>false</text>
    <feedback>
      <text></text>
    </feedback>
  </answer>
  <name>
    <text>питання Так/ні - відповідь Так</text>
  </name>
</question>"#;

/// Non-empty leaf facts of every `<question>`: element path, attributes
/// along the path and trimmed text, ignoring order and whitespace.
fn element_set(xml: &str) -> Result<BTreeSet<String>, String> {
    let doc = roxmltree::Document::parse(xml).map_err(|e| e.to_string())?;
    let mut facts = BTreeSet::new();
    for q in doc.descendants().filter(|n| n.has_tag_name("question")) {
        for leaf in q.descendants().filter(|n| n.is_element() && !n.children().any(|c| c.is_element())) {
            let text = leaf.text().unwrap_or("").trim();
            if text.is_empty() {
                continue;
            }
            let path: Vec<String> = leaf
                .ancestors()
                .take_while(|n| n.id() != q.parent().map(|p| p.id()).unwrap_or(q.id()))
                .filter(|n| n.is_element())
                .map(|n| {
                    let attrs: Vec<String> = n.attributes().map(|a| format!("{}={}", a.name(), a.value())).collect();
                    format!("{}[{}]", n.tag_name().name(), attrs.join(","))
                })
                .collect();
            facts.insert(format!("{} = {text}", path.into_iter().rev().collect::<Vec<_>>().join("/")));
        }
    }
    Ok(facts)
}

fn fig2_conformance() -> Check {
    let mut q = Question::new("для створення публікацій використовують MS Publisher?", QuestionBody::TrueFalse { answer: true });
    q.title = Some("питання Так/ні - відповідь Так".into());
    q.stem_format = TextFormat::Html;
    let emitted = element_set(&emit_moodlexml(&QuestionBank::new(vec![q.clone()])))?;
    // The figure's second answer reads ">false"; the stray ">" is a typesetting slip.
    let figure = element_set(&FIG2.replace("<text>>false", "<text>false"))?;
    ensure(emitted == figure, || format!("emitted {emitted:#?}\nfigure {figure:#?}"))?;

    let parsed = parse_moodlexml(&format!("<quiz>\n{FIG2}\n</quiz>"));
    ensure(!parsed.has_errors() && parsed.len() == 1, || format!("{:?}", parsed.diagnostics))?;
    let p = &parsed.questions[0];
    ensure(p.structurally_eq(&q) && p.penalty == 0.1 && !p.hidden, || format!("parsed {p:?}"))
}

fn run_banks(profile: Profile, cases: u32, mut check: impl FnMut(&QuestionBank) -> Check) -> Check {
    let mut runner = TestRunner::new_with_rng(Config::with_cases(cases), TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    let strategy = bank(profile);
    let mut kinds = BTreeSet::new();
    for _ in 0..cases {
        let b = strategy.new_tree(&mut runner).map_err(|e| e.to_string())?.current();
        kinds.extend(b.questions.iter().map(Question::kind));
        check(&b)?;
    }
    let expected = if profile == Profile::Aiken { 1 } else { 6 };
    ensure(kinds.len() == expected, || format!("generated kinds {kinds:?}"))
}

fn identity(b: &QuestionBank, back: &QuestionBank, label: &str) -> Check {
    ensure(!back.has_errors() && b.structurally_eq(back), || format!("{label}: {}", first_difference(b, back)))
}

fn round_trip() -> Check {
    let started = Instant::now();
    run_banks(Profile::Gift, 1000, |b| {
        let text = emit_gift(b).map_err(|e| e.to_string())?;
        identity(b, &parse_gift(&text), "gift")
    })?;
    run_banks(Profile::Xml, 1000, |b| identity(b, &parse_moodlexml(&emit_moodlexml(b)), "moodlexml"))?;
    run_banks(Profile::Aiken, 1000, |b| {
        let text = aiken::emit_aiken(b).map_err(|e| e.to_string())?;
        identity(b, &aiken::parse_aiken(&text), "aiken")
    })?;
    let elapsed = started.elapsed();
    ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))
}

fn fraction_sum() -> Check {
    let multi = |fractions: &[f64]| {
        QuestionBank::new(vec![Question::new(
            "Q",
            QuestionBody::MultipleChoice {
                single: false,
                answers: fractions.iter().enumerate().map(|(i, &f)| Answer::new(format!("a{i}"), f)).collect(),
            },
        )])
    };
    let clean = validate(&multi(&[33.333, 33.333, 33.333]));
    ensure(clean.iter().all(|d| !d.is_error()), || format!("33.333 x3: {clean:?}"))?;
    let bad = validate(&multi(&[50.0, 20.0]));
    let errors: Vec<_> = bad.iter().filter(|d| d.is_error()).collect();
    ensure(errors.len() == 1, || format!("[50, 20]: {bad:?}"))
}

fn capability_matrix() -> Check {
    for q in common::one_of_each_kind() {
        let kind = q.kind();
        let result = convert(&QuestionBank::new(vec![q]), Format::Aiken, ConversionPolicy::strict());
        match (kind, result) {
            (BodyKind::MultipleChoice, r) => {
                r.map_err(|e| format!("multichoice to aiken: {e}"))?;
            }
            (_, Err(e @ ConvertError::Unsupported { .. })) => {
                ensure(e.to_string().contains(kind.name()), || format!("{kind:?}: message lacks kind: {e}"))?;
            }
            (_, other) => return Err(format!("{kind:?} to aiken: {other:?}")),
        }
    }
    run_banks(Profile::Gift, 1000, |b| {
        let first = parse_gift(&emit_gift(b).map_err(|e| e.to_string())?);
        let via = parse_moodlexml(&emit_moodlexml(&first));
        let back = parse_gift(&emit_gift(&via).map_err(|e| e.to_string())?);
        identity(b, &back, "gift->moodlexml->gift")
    })
}

fn aiken_limits() -> Check {
    let mut eleven = String::from("Which one?\n");
    for (i, label) in ('A'..='K').enumerate() {
        eleven.push_str(&format!("{label}. option {i}\n"));
    }
    eleven.push_str("ANSWER: A\n");
    let b = aiken::parse_aiken(&eleven);
    let errors: Vec<_> = b.errors().collect();
    ensure(b.is_empty() && errors.len() == 1 && errors[0].message.contains("10"), || format!("{:?}", b.diagnostics))?;

    let out_of_range = "Question?\nA. one\nB. two\nANSWER: E\n";
    let b = aiken::parse_aiken(out_of_range);
    let errors: Vec<_> = b.errors().collect();
    ensure(b.is_empty() && errors.len() == 1 && errors[0].line == 4 && errors[0].message.contains("line 4"), || {
        format!("{:?}", b.diagnostics)
    })
}

fn media_bundle() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let files: [(&str, Vec<u8>); 3] = [
        ("chart.png", (0..=255u8).collect()),
        ("photo.jpg", vec![0xAB; 4096]),
        ("diagram.gif", b"GIF89a tiny".to_vec()),
    ];
    for (name, bytes) in &files {
        fs::write(dir.path().join(name), bytes).map_err(|e| e.to_string())?;
    }
    let mut questions = Vec::new();
    for (i, (name, _)) in files.iter().enumerate() {
        let mut q = Question::new(
            format!("Picture {i} <img src=\"{name}\">"),
            QuestionBody::TrueFalse { answer: i % 2 == 0 },
        );
        q.stem_format = TextFormat::Html;
        attach_media_names(&mut q);
        questions.push(q);
    }
    let b = QuestionBank::new(questions);

    let first = bundle_gift_media(&b, dir.path()).map_err(|e| e.to_string())?;
    let second = bundle_gift_media(&b, dir.path()).map_err(|e| e.to_string())?;
    ensure(first == second, || "archives differ between runs".into())?;

    let un = unbundle_gift_media(&first).map_err(|e| e.to_string())?;
    identity(&b, &un.bank, "unbundle")?;
    for (name, bytes) in &files {
        let got = un.media.iter().find(|m| m.name == *name).and_then(|m| m.payload.as_ref());
        ensure(got == Some(bytes), || format!("payload of {name} differs"))?;
    }

    let mut wrong_case = b.clone();
    wrong_case.questions[0].stem = "Picture <img src=\"Chart.PNG\">".into();
    attach_media_names(&mut wrong_case.questions[0]);
    match bundle_gift_media(&wrong_case, dir.path()) {
        Err(MediaError::Unresolved(names)) if names == ["Chart.PNG"] => Ok(()),
        other => Err(format!("case mismatch: {other:?}")),
    }
}

fn encoding() -> Check {
    let xml = emit_moodlexml(&QuestionBank::new(common::one_of_each_kind()));
    let gift = emit_gift(&QuestionBank::new(common::one_of_each_kind())).map_err(|e| e.to_string())?;
    let samples = [(Format::Aiken, AIKEN_BLOCK.replace('\n', "\r\n")), (Format::Gift, gift.clone()), (Format::MoodleXml, xml.clone())];
    for (format, source) in &samples {
        let plain = qbank::parse(*format, source);
        let bom = qbank::parse(*format, &format!("\u{feff}{source}"));
        ensure(!plain.has_errors() && !plain.is_empty(), || format!("{format}: {:?}", plain.diagnostics))?;
        ensure(plain.structurally_eq(&bom) && plain.diagnostics == bom.diagnostics, || format!("{format}: BOM changes the parse"))?;
    }
    let aiken = aiken::emit_aiken(&aiken::parse_aiken(&samples[0].1)).map_err(|e| e.to_string())?;
    for (label, out) in [("aiken", aiken), ("gift", gift), ("moodlexml", xml)] {
        ensure(!out.starts_with('\u{feff}') && !out.contains('\r'), || format!("{label} output has a BOM or CR"))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let checks: [(&str, fn() -> Check); 8] = [
        ("golden corpus", golden_corpus),
        ("moodle xml fragment conformance", fig2_conformance),
        ("round trip gift/moodlexml/aiken x1000", round_trip),
        ("fraction-sum rule", fraction_sum),
        ("capability matrix", capability_matrix),
        ("aiken limits", aiken_limits),
        ("media bundle round trip", media_bundle),
        ("encoding", encoding),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let started = Instant::now();
        match check() {
            Ok(()) => println!("PASS {name} ({:.2?})", started.elapsed()),
            Err(reason) => {
                failed += 1;
                println!("FAIL {name}: {reason}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
