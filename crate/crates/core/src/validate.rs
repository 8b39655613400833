//! Invariant checks over the question model.

use crate::model::{codes, Diagnostic, Location, NumericSpec, Question, QuestionBank, QuestionBody};

/// Grade percentages offered by Moodle's answer editors. Fractions off this
/// grid are legal but unusual and raise a warning.
const GRADE_GRID: [f64; 21] = [
    100.0, 90.0, 83.33333, 80.0, 75.0, 70.0, 66.66667, 60.0, 50.0, 40.0, 33.33333, 30.0, 25.0, 20.0,
    16.66667, 14.28571, 12.5, 11.11111, 10.0, 5.0, 0.0,
];
const GRID_TOLERANCE: f64 = 0.01;

/// Checks every question and returns each invariant violation. The bank is
/// not modified and repeated calls return identical lists.
pub fn validate(bank: &QuestionBank) -> Vec<Diagnostic> {
    bank.questions
        .iter()
        .enumerate()
        .flat_map(|(i, q)| validate_question(q, i))
        .collect()
}

pub fn validate_question(q: &Question, index: usize) -> Vec<Diagnostic> {
    let at = q.origin.unwrap_or(Location::START);
    let mut out = Vec::new();
    let mut error = |code, msg: String| out.push(Diagnostic::error(at, code, msg).for_question(index));

    if q.stem.trim().is_empty() {
        error(codes::EMPTY_STEM, "question text is empty".into());
    }
    if !(0.0..=1.0).contains(&q.penalty) {
        error(codes::PENALTY_RANGE, format!("penalty {} is outside [0, 1]", q.penalty));
    }

    match &q.body {
        QuestionBody::TrueFalse { .. } | QuestionBody::Essay => {}
        QuestionBody::MultipleChoice { single, answers } => {
            check_answers(answers, &mut error);
            if answers.len() < 2 {
                error(codes::MC_TOO_FEW_ANSWERS, format!("multiple choice needs at least 2 answers, found {}", answers.len()));
            }
            let full = answers.iter().filter(|a| a.fraction == 100.0).count();
            if *single {
                if full != 1 || answers.iter().any(|a| a.fraction != 100.0 && a.fraction != 0.0) {
                    error(
                        codes::MC_SINGLE_FRACTIONS,
                        "single-answer question needs exactly one answer at 100% and all others at 0%".into(),
                    );
                }
            } else {
                if full > 0 {
                    error(codes::MC_MULTI_FULL_CREDIT, "multi-answer question must not give any answer 100%".into());
                }
                let sum: f64 = answers.iter().map(|a| a.fraction).filter(|f| *f > 0.0).sum();
                if (sum - 100.0).abs() > crate::model::FRACTION_SUM_TOLERANCE {
                    error(codes::FRACTION_SUM, format!("positive fractions sum to {sum}, expected 100"));
                }
            }
        }
        QuestionBody::ShortAnswer { answers } => {
            check_answers(answers, &mut error);
            if answers.iter().any(|a| !(a.fraction > 0.0 && a.fraction <= 100.0)) {
                error(codes::SHORTANSWER_FRACTION, "short-answer fractions must lie in (0, 100]".into());
            }
        }
        QuestionBody::Matching { pairs, extra_responses } => {
            if pairs.len() < 2 {
                error(codes::MATCHING_TOO_FEW_PAIRS, format!("matching needs at least 2 pairs, found {}", pairs.len()));
            }
            if pairs.iter().any(|p| p.premise.trim().is_empty() || p.response.trim().is_empty())
                || extra_responses.iter().any(|r| r.trim().is_empty())
            {
                error(codes::MATCHING_EMPTY_SIDE, "matching pair or extra response is empty".into());
            }
        }
        QuestionBody::Numerical { specs } => {
            if specs.is_empty() {
                error(codes::NO_ANSWERS, "numerical question has no answers".into());
            }
            for spec in specs {
                let finite = match *spec {
                    NumericSpec::Exact(v) => v.is_finite(),
                    NumericSpec::Range { min, max } => min.is_finite() && max.is_finite(),
                    NumericSpec::Tolerance { value, tolerance } => value.is_finite() && tolerance.is_finite(),
                };
                if !finite {
                    error(codes::NUMERIC_NOT_FINITE, "numeric answer is not a finite number".into());
                    continue;
                }
                match *spec {
                    NumericSpec::Range { min, max } if min > max => {
                        error(codes::NUMERIC_RANGE_INVERTED, format!("range {min}..{max} has min > max"))
                    }
                    NumericSpec::Tolerance { tolerance, .. } if tolerance < 0.0 => {
                        error(codes::NUMERIC_NEGATIVE_TOLERANCE, format!("tolerance {tolerance} is negative"))
                    }
                    _ => {}
                }
            }
        }
    }

    for answer in q.body.answers() {
        if (-100.0..=100.0).contains(&answer.fraction) && !on_grid(answer.fraction) {
            out.push(
                Diagnostic::warning(
                    at,
                    codes::FRACTION_OFF_GRID,
                    format!("fraction {} is not one of Moodle's standard grades", answer.fraction),
                )
                .for_question(index),
            );
        }
    }
    out
}

fn check_answers(answers: &[crate::model::Answer], error: &mut impl FnMut(&'static str, String)) {
    if answers.is_empty() {
        error(codes::NO_ANSWERS, "question has no answers".into());
    }
    for (i, a) in answers.iter().enumerate() {
        if a.text.trim().is_empty() {
            error(codes::EMPTY_ANSWER, format!("answer {} is empty", i + 1));
        }
        if !(-100.0..=100.0).contains(&a.fraction) {
            error(codes::FRACTION_RANGE, format!("fraction {} is outside [-100, 100]", a.fraction));
        }
    }
}

fn on_grid(fraction: f64) -> bool {
    let f = fraction.abs();
    GRADE_GRID.iter().any(|g| (g - f).abs() <= GRID_TOLERANCE)
}
