//! Question-bank generators shared by the property and acceptance suites.

#![allow(dead_code)]

use proptest::collection::vec;
use proptest::prelude::*;
use proptest::sample::select;

use qbank::mediapack::attach_media_names;
use qbank::{Answer, MatchPair, NumericSpec, Question, QuestionBank, QuestionBody, TextFormat, DEFAULT_PENALTY};

/// Which format's expressive range a generated bank must stay within.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// Everything the model holds.
    Xml,
    /// No general feedback, default penalty, not hidden.
    Gift,
    /// Plain single-answer multiple choice only.
    Aiken,
}

/// Characters that exercise every escape path, plus markup and non-ASCII.
const ALPHABET: &[char] = &[
    'a', 'b', 'c', 'x', 'Y', 'Z', '0', '7', ' ', ' ', ' ', '{', '}', '=', '~', '#', ':', '\\', '%', '[', ']', '/',
    '-', '>', '<', '&', '"', '\'', '.', '?', 'ї', 'Ж', 'é', '→',
];

pub fn text() -> impl Strategy<Value = String> {
    prop_oneof![
        3 => vec(select(ALPHABET), 1..24).prop_map(|cs| cs.into_iter().collect::<String>()),
        1 => select(vec![
            "// looks like a comment",
            "[html] not a prefix",
            "::fake title::",
            "%50% of it",
            "a -> b",
            "ends with \\",
            "TRUE",
            "<p>para</p>",
            "x = y",
            "{#4}",
        ])
        .prop_map(str::to_owned),
    ]
    .prop_map(|s| s.trim().to_owned())
    .prop_filter("non-empty after trim", |s| !s.is_empty())
}

fn aiken_text() -> impl Strategy<Value = String> {
    vec(select(vec!["alpha", "Beta", "це", "2+2", "x=y", "{a}", "<b>", "%", "ANSWER", "a.b", "Q?"]), 1..6)
        .prop_map(|w| w.join(" "))
        .prop_filter("not an option or answer line", |s| {
            let b = s.as_bytes();
            !(b.len() > 2 && b[0].is_ascii_uppercase() && (b[1] == b'.' || b[1] == b')') && b[2] == b' ')
                && !s.starts_with("ANSWER:")
        })
}

fn feedback() -> impl Strategy<Value = Option<String>> {
    prop_oneof![2 => Just(None), 1 => text().prop_map(Some)]
}

fn number() -> impl Strategy<Value = f64> {
    prop_oneof![(-1000i32..1000).prop_map(f64::from), (-1.0e6f64..1.0e6), (0i32..400).prop_map(|i| f64::from(i) / 8.0)]
}

fn numeric_spec() -> impl Strategy<Value = NumericSpec> {
    prop_oneof![
        number().prop_map(NumericSpec::Exact),
        (number(), number()).prop_map(|(a, b)| NumericSpec::Range { min: a.min(b), max: a.max(b) }),
        (number(), number()).prop_map(|(value, t)| NumericSpec::Tolerance { value, tolerance: t.abs() }),
    ]
}

/// Positive weights summing to 100 at five significant digits.
fn positive_weights() -> impl Strategy<Value = Vec<f64>> {
    select(vec![vec![50.0, 50.0], vec![33.333, 33.333, 33.333], vec![25.0; 4], vec![20.0; 5], vec![75.0, 25.0], vec![
        60.0, 40.0,
    ]])
}

fn multi_choice() -> impl Strategy<Value = QuestionBody> {
    (positive_weights(), vec(select(vec![0.0, -100.0, -50.0, -33.333, -25.0, -20.0]), 0..3))
        .prop_flat_map(|(pos, neg)| {
            let fractions: Vec<f64> = pos.into_iter().chain(neg).collect();
            let n = fractions.len();
            (Just(fractions), vec((text(), feedback()), n), Just(n))
        })
        .prop_flat_map(|(fractions, texts, n)| {
            let answers: Vec<Answer> = fractions
                .into_iter()
                .zip(texts)
                .map(|(f, (t, fb))| Answer { text: t, fraction: f, feedback: fb })
                .collect();
            Just(answers).prop_shuffle().prop_map(move |answers| {
                debug_assert_eq!(answers.len(), n);
                QuestionBody::MultipleChoice { single: false, answers }
            })
        })
}

fn single_choice(texts: BoxedStrategy<String>, with_feedback: bool) -> impl Strategy<Value = QuestionBody> {
    (2usize..=10)
        .prop_flat_map(move |n| {
            let fb = if with_feedback { feedback().boxed() } else { Just(None).boxed() };
            (vec((texts.clone(), fb), n), 0..n)
        })
        .prop_map(|(items, correct)| QuestionBody::MultipleChoice {
            single: true,
            answers: items
                .into_iter()
                .enumerate()
                .map(|(i, (t, fb))| Answer { text: t, fraction: if i == correct { 100.0 } else { 0.0 }, feedback: fb })
                .collect(),
        })
}

fn short_answer() -> impl Strategy<Value = QuestionBody> {
    vec((text(), select(vec![100.0, 50.0, 33.333, 25.0, 90.0, 10.0]), feedback()), 1..4).prop_map(|items| {
        QuestionBody::ShortAnswer {
            answers: items.into_iter().map(|(t, f, fb)| Answer { text: t, fraction: f, feedback: fb }).collect(),
        }
    })
}

fn matching() -> impl Strategy<Value = QuestionBody> {
    (vec((text(), text()), 2..5), vec(text(), 0..3)).prop_map(|(pairs, extra)| QuestionBody::Matching {
        pairs: pairs.into_iter().map(|(p, r)| MatchPair::new(p, r)).collect(),
        extra_responses: extra,
    })
}

pub fn body() -> impl Strategy<Value = QuestionBody> {
    prop_oneof![
        any::<bool>().prop_map(|answer| QuestionBody::TrueFalse { answer }),
        single_choice(text().boxed(), true),
        multi_choice(),
        matching(),
        vec(numeric_spec(), 1..4).prop_map(|specs| QuestionBody::Numerical { specs }),
        short_answer(),
        Just(QuestionBody::Essay),
    ]
}

pub fn question(profile: Profile) -> BoxedStrategy<Question> {
    if profile == Profile::Aiken {
        return (aiken_text(), single_choice(aiken_text().boxed(), false))
            .prop_map(|(stem, body)| Question::new(stem, body))
            .boxed();
    }
    let image = prop_oneof![3 => Just(None), 1 => select(vec!["pic1.png", "Pic2.PNG", "sub/pic3.jpg"]).prop_map(Some)];
    (
        text(),
        body(),
        proptest::option::of(text()),
        any::<bool>(),
        image,
        feedback(),
        select(vec![DEFAULT_PENALTY, 0.0, 0.3333333, 1.0]),
        any::<bool>(),
    )
        .prop_map(move |(stem, body, title, html, image, general, penalty, hidden)| {
            let mut q = Question::new(stem, body);
            q.title = title;
            if html {
                q.stem_format = TextFormat::Html;
            }
            if let Some(name) = image {
                q.stem.push_str(&format!(" <img src=\"{name}\">"));
            }
            if profile == Profile::Xml {
                q.general_feedback = general;
                q.penalty = penalty;
                q.hidden = hidden;
            }
            attach_media_names(&mut q);
            q
        })
        .boxed()
}

pub fn bank(profile: Profile) -> impl Strategy<Value = QuestionBank> {
    vec(question(profile), 0..8).prop_map(QuestionBank::new)
}

/// The kind-diverse corpus used to cover every body kind at least once.
pub fn one_of_each_kind() -> Vec<Question> {
    vec![
        Question::new("tf", QuestionBody::TrueFalse { answer: true }),
        Question::new(
            "mc",
            QuestionBody::MultipleChoice { single: true, answers: vec![Answer::new("a", 100.0), Answer::new("b", 0.0)] },
        ),
        Question::new(
            "match",
            QuestionBody::Matching { pairs: vec![MatchPair::new("a", "1"), MatchPair::new("b", "2")], extra_responses: vec![] },
        ),
        Question::new("num", QuestionBody::Numerical { specs: vec![NumericSpec::Exact(4.0)] }),
        Question::new("sa", QuestionBody::ShortAnswer { answers: vec![Answer::new("yes", 100.0)] }),
        Question::new("essay", QuestionBody::Essay),
    ]
}

/// Describes the first question that differs, for failure messages.
pub fn first_difference(expected: &QuestionBank, actual: &QuestionBank) -> String {
    if expected.len() != actual.len() {
        return format!("question count {} != {}; diagnostics {:?}", expected.len(), actual.len(), actual.diagnostics);
    }
    for (i, (a, b)) in expected.questions.iter().zip(&actual.questions).enumerate() {
        if !a.structurally_eq(b) {
            return format!("question {i}:\n  expected {:?}\n  actual   {:?}", a.normalized(), b.normalized());
        }
    }
    "no difference".into()
}
