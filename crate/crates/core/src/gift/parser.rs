use crate::aiken::admit;
use crate::gift::lexer::{lex, GiftToken, TokenKind};
use crate::mediapack;
use crate::model::{
    codes, Answer, Diagnostic, Location, MatchPair, NumericSpec, Question, QuestionBank, QuestionBody, TextFormat,
};

/// One blank-line-delimited question: its tokens and any errors already
/// charged to it.
struct Chunk {
    tokens: Vec<GiftToken>,
    errors: Vec<Diagnostic>,
}

pub fn parse_gift(source: &str) -> QuestionBank {
    let lexed = lex(source);
    let mut bank = QuestionBank::default();

    let mut chunks: Vec<(usize, usize, Chunk)> = Vec::new();
    let mut current = Chunk { tokens: Vec::new(), errors: Vec::new() };
    let mut first = 0;
    let mut depth = 0usize;
    for (i, tok) in lexed.tokens.iter().enumerate() {
        match tok.kind {
            TokenKind::Comment => continue,
            TokenKind::BlankLine if depth == 0 => {
                if !current.tokens.is_empty() {
                    let done = std::mem::replace(&mut current, Chunk { tokens: Vec::new(), errors: Vec::new() });
                    chunks.push((first, i, done));
                }
                continue;
            }
            TokenKind::BlankLine => {
                current.errors.push(Diagnostic::error(
                    tok.location(),
                    codes::GIFT_BLANK_LINE_IN_BLOCK,
                    "empty line inside an answer block; questions cannot contain empty lines",
                ));
                continue;
            }
            TokenKind::OpenBrace => depth += 1,
            TokenKind::CloseBrace => depth = depth.saturating_sub(1),
            _ => {}
        }
        if current.tokens.is_empty() {
            first = i;
        }
        current.tokens.push(tok.clone());
    }
    if !current.tokens.is_empty() {
        chunks.push((first, lexed.tokens.len(), current));
    }

    for (index, d) in lexed.errors {
        // Errors past the last token (a trailing backslash) belong to the
        // last question.
        let owner = chunks
            .iter()
            .position(|(a, b, _)| index >= *a && index < *b)
            .or_else(|| chunks.len().checked_sub(1));
        match owner {
            Some(c) => chunks[c].2.errors.push(d),
            None => bank.diagnostics.push(d),
        }
    }

    for (_, _, chunk) in chunks {
        parse_question(chunk, &mut bank);
    }
    bank
}

fn parse_question(chunk: Chunk, bank: &mut QuestionBank) {
    let Chunk { tokens, mut errors } = chunk;
    let start = tokens[0].location();
    let mut warnings = Vec::new();
    let mut title: Option<String> = None;
    let mut format = TextFormat::Plain;
    let mut i = 0;

    // Prefixes: "::title::" and "[html]" in either order.
    while i < tokens.len() {
        match tokens[i].kind {
            TokenKind::FormatPrefix => {
                format = TextFormat::Html;
                i += 1;
            }
            TokenKind::TitleDelim => {
                let close = tokens[i + 1..].iter().position(|t| t.kind == TokenKind::TitleDelim);
                match close {
                    Some(offset) => {
                        let text = concat(&tokens[i + 1..i + 1 + offset]);
                        let text = text.trim();
                        title = (!text.is_empty()).then(|| text.to_owned());
                        i += offset + 2;
                    }
                    None => {
                        errors.push(Diagnostic::error(
                            tokens[i].location(),
                            codes::GIFT_UNTERMINATED_TITLE,
                            "question title is not closed with `::`",
                        ));
                        i = tokens.len();
                    }
                }
            }
            _ => break,
        }
    }

    let mut stem = String::new();
    let mut block: Option<(Location, Vec<GiftToken>)> = None;
    let mut unescaped: Option<Location> = None;
    while i < tokens.len() {
        let tok = &tokens[i];
        match tok.kind {
            TokenKind::OpenBrace => {
                let close = tokens[i + 1..].iter().position(|t| matches!(t.kind, TokenKind::OpenBrace | TokenKind::CloseBrace));
                match close.map(|o| (o, tokens[i + 1 + o].kind)) {
                    Some((offset, TokenKind::CloseBrace)) => {
                        if block.is_some() {
                            errors.push(Diagnostic::error(
                                tok.location(),
                                codes::GIFT_MULTIPLE_BLOCKS,
                                "question has more than one answer block",
                            ));
                        } else {
                            block = Some((tok.location(), tokens[i + 1..i + 1 + offset].to_vec()));
                        }
                        i += offset + 2;
                        continue;
                    }
                    _ => {
                        errors.push(Diagnostic::error(tok.location(), codes::GIFT_UNBALANCED_BRACE, "`{` is never closed"));
                        break;
                    }
                }
            }
            TokenKind::CloseBrace => {
                errors.push(Diagnostic::error(tok.location(), codes::GIFT_UNBALANCED_BRACE, "`}` without matching `{`"));
                break;
            }
            TokenKind::Text if block.is_some() => {
                if !tok.lexeme.trim().is_empty() {
                    errors.push(Diagnostic::error(
                        tok.location(),
                        codes::GIFT_TEXT_AFTER_BLOCK,
                        "text after the answer block (missing-word questions are not supported)",
                    ));
                    break;
                }
            }
            TokenKind::Text => stem.push_str(&tok.lexeme),
            _ if block.is_some() => {
                errors.push(Diagnostic::error(
                    tok.location(),
                    codes::GIFT_TEXT_AFTER_BLOCK,
                    "text after the answer block (missing-word questions are not supported)",
                ));
                break;
            }
            _ => {
                unescaped.get_or_insert(tok.location());
                stem.push_str(&tok.lexeme);
            }
        }
        i += 1;
    }
    if let Some(at) = unescaped {
        warnings.push(Diagnostic::warning(
            at,
            codes::GIFT_UNESCAPED_SPECIAL,
            "special character in question text should be escaped with `\\`",
        ));
    }

    let Some((block_at, block)) = block else {
        if errors.is_empty() {
            errors.push(Diagnostic::error(start, codes::GIFT_MISSING_BLOCK, "question has no `{...}` answer block"));
        }
        bank.diagnostics.extend(errors);
        return;
    };
    if !errors.is_empty() {
        bank.diagnostics.extend(errors);
        return;
    }

    let body = match classify(&block, block_at, &mut warnings) {
        Ok(body) => body,
        Err(d) => {
            bank.diagnostics.push(d);
            return;
        }
    };

    let mut q = Question::new(stem.trim(), body);
    q.title = title;
    q.stem_format = format;
    q.origin = Some(start);
    mediapack::attach_media_names(&mut q);
    let index = bank.questions.len();
    let before = bank.len();
    admit(q, bank);
    if bank.len() > before {
        bank.diagnostics.extend(warnings.into_iter().map(|d| d.for_question(index)));
    }
}

fn concat(tokens: &[GiftToken]) -> String {
    tokens.iter().map(|t| t.lexeme.as_str()).collect()
}

fn is_marker(t: &GiftToken) -> bool {
    matches!(t.kind, TokenKind::Equals | TokenKind::Tilde)
}

/// Maps the contents of an answer block to a body kind.
fn classify(block: &[GiftToken], at: Location, warnings: &mut Vec<Diagnostic>) -> Result<QuestionBody, Diagnostic> {
    let significant: Vec<&GiftToken> = block.iter().filter(|t| !t.is_blank_text()).collect();
    let Some(first) = significant.first() else {
        return Ok(QuestionBody::Essay);
    };

    if first.kind == TokenKind::Hash {
        let pos = block.iter().position(|t| t.kind == TokenKind::Hash).unwrap();
        return numerical(&block[pos + 1..], first.location(), warnings);
    }

    if !block.iter().any(is_marker) {
        let (answer, feedback) = match block.iter().position(|t| t.kind == TokenKind::Hash) {
            Some(p) => (&block[..p], Some(&block[p..])),
            None => (block, None),
        };
        if answer.iter().any(|t| t.kind != TokenKind::Text) {
            return Err(stray(first.location()));
        }
        let value = match concat(answer).trim().to_ascii_uppercase().as_str() {
            "TRUE" | "T" => true,
            "FALSE" | "F" => false,
            _ => return Err(stray(first.location())),
        };
        if feedback.is_some() {
            warnings.push(Diagnostic::warning(
                first.location(),
                codes::GIFT_DROPPED_FEEDBACK,
                "true/false feedback is not kept",
            ));
        }
        return Ok(QuestionBody::TrueFalse { answer: value });
    }

    let lead = block.iter().position(is_marker).unwrap();
    if block[..lead].iter().any(|t| !t.is_blank_text()) {
        return Err(stray(block[0].location()));
    }

    let entries = split_entries(&block[lead..])?;
    if entries.iter().any(|e| e.response.is_some()) {
        return matching(entries, at, warnings);
    }

    let all_equals = entries.iter().all(|e| e.marker == TokenKind::Equals);
    let answers: Vec<Answer> = entries
        .into_iter()
        .map(|e| {
            let fraction = e.weight.unwrap_or(if e.marker == TokenKind::Equals { 100.0 } else { 0.0 });
            Answer { text: e.text.trim().to_owned(), fraction, feedback: e.feedback }
        })
        .collect();
    if all_equals {
        Ok(QuestionBody::ShortAnswer { answers })
    } else {
        let single = answers.iter().any(|a| a.fraction == 100.0);
        Ok(QuestionBody::MultipleChoice { single, answers })
    }
}

fn stray(at: Location) -> Diagnostic {
    Diagnostic::error(
        at,
        codes::GIFT_STRAY_TEXT,
        "answer block must hold TRUE/FALSE, a `#` numeric answer, or `=`/`~` entries",
    )
}

struct Entry {
    marker: TokenKind,
    at: Location,
    weight: Option<f64>,
    text: String,
    response: Option<String>,
    feedback: Option<String>,
}

fn parse_weight(tok: &GiftToken) -> Result<f64, Diagnostic> {
    tok.lexeme
        .trim_matches('%')
        .trim()
        .parse::<f64>()
        .map_err(|_| Diagnostic::error(tok.location(), codes::GIFT_BAD_WEIGHT, format!("malformed weight `{}`", tok.lexeme)))
}

/// Splits `=`/`~` entries. Within an entry: optional weight, answer text,
/// optional `->` response, optional `#` feedback. A second `#` or `->` is
/// literal text.
fn split_entries(tokens: &[GiftToken]) -> Result<Vec<Entry>, Diagnostic> {
    let mut entries: Vec<Entry> = Vec::new();
    let mut in_feedback = false;
    for tok in tokens {
        if is_marker(tok) {
            entries.push(Entry {
                marker: tok.kind,
                at: tok.location(),
                weight: None,
                text: String::new(),
                response: None,
                feedback: None,
            });
            in_feedback = false;
            continue;
        }
        let entry = entries.last_mut().expect("tokens start with a marker");
        match tok.kind {
            TokenKind::Weight if entry.text.trim().is_empty() && entry.weight.is_none() => {
                entry.weight = Some(parse_weight(tok)?);
            }
            TokenKind::Hash if !in_feedback => {
                in_feedback = true;
                entry.feedback = Some(String::new());
            }
            TokenKind::Arrow if !in_feedback && entry.response.is_none() => entry.response = Some(String::new()),
            _ => {
                let target = if in_feedback {
                    entry.feedback.as_mut().unwrap()
                } else if let Some(r) = entry.response.as_mut() {
                    r
                } else {
                    &mut entry.text
                };
                target.push_str(&tok.lexeme);
            }
        }
    }
    for e in &mut entries {
        e.feedback = e.feedback.take().map(|f| f.trim().to_owned()).filter(|f| !f.is_empty());
    }
    Ok(entries)
}

fn matching(entries: Vec<Entry>, _at: Location, warnings: &mut Vec<Diagnostic>) -> Result<QuestionBody, Diagnostic> {
    let mut pairs = Vec::new();
    let mut extra_responses = Vec::new();
    for e in entries {
        let Some(response) = e.response.filter(|_| e.marker == TokenKind::Equals && e.weight.is_none()) else {
            return Err(Diagnostic::error(
                e.at,
                codes::GIFT_MATCHING_MIXED,
                "every matching entry must have the form `= premise -> response`",
            ));
        };
        if e.feedback.is_some() {
            warnings.push(Diagnostic::warning(e.at, codes::GIFT_DROPPED_FEEDBACK, "matching feedback is not kept"));
        }
        let premise = e.text.trim();
        if premise.is_empty() {
            extra_responses.push(response.trim().to_owned());
        } else {
            pairs.push(MatchPair::new(premise, response.trim()));
        }
    }
    Ok(QuestionBody::Matching { pairs, extra_responses })
}

fn numerical(payload: &[GiftToken], at: Location, warnings: &mut Vec<Diagnostic>) -> Result<QuestionBody, Diagnostic> {
    let mut specs = Vec::new();
    if payload.iter().any(is_marker) {
        let lead = payload.iter().position(is_marker).unwrap();
        if payload[..lead].iter().any(|t| !t.is_blank_text()) {
            return Err(stray(payload[0].location()));
        }
        for e in split_entries(&payload[lead..])? {
            if e.marker != TokenKind::Equals || e.response.is_some() {
                return Err(Diagnostic::error(e.at, codes::GIFT_BAD_NUMERIC, "numeric answers take the form `=value`"));
            }
            if e.weight.is_some_and(|w| w != 100.0) || e.feedback.is_some() {
                warnings.push(Diagnostic::warning(
                    e.at,
                    codes::GIFT_DROPPED_FEEDBACK,
                    "numeric partial credit and feedback are not kept",
                ));
            }
            specs.push(numeric_spec(&e.text, e.at)?);
        }
    } else {
        let (value, rest) = match payload.iter().position(|t| t.kind == TokenKind::Hash) {
            Some(p) => (&payload[..p], &payload[p..]),
            None => (payload, &payload[payload.len()..]),
        };
        if value.iter().any(|t| t.kind != TokenKind::Text) {
            return Err(Diagnostic::error(at, codes::GIFT_BAD_NUMERIC, "unexpected syntax in numeric answer"));
        }
        if !rest.is_empty() {
            warnings.push(Diagnostic::warning(at, codes::GIFT_DROPPED_FEEDBACK, "numeric feedback is not kept"));
        }
        specs.push(numeric_spec(&concat(value), at)?);
    }
    Ok(QuestionBody::Numerical { specs })
}

fn parse_number(s: &str, at: Location) -> Result<f64, Diagnostic> {
    match s.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Diagnostic::error(at, codes::GIFT_BAD_NUMERIC, format!("`{}` is not a number", s.trim()))),
    }
}

/// `n`, `min..max` or `value:tolerance`.
fn numeric_spec(text: &str, at: Location) -> Result<NumericSpec, Diagnostic> {
    let text = text.trim();
    if let Some((min, max)) = text.split_once("..") {
        Ok(NumericSpec::Range { min: parse_number(min, at)?, max: parse_number(max, at)? })
    } else if let Some((value, tol)) = text.split_once(':') {
        Ok(NumericSpec::Tolerance { value: parse_number(value, at)?, tolerance: parse_number(tol, at)? })
    } else {
        Ok(NumericSpec::Exact(parse_number(text, at)?))
    }
}
