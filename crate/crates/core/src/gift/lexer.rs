use std::sync::OnceLock;

use regex::Regex;

use crate::model::{codes, Diagnostic, Location};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Text,
    OpenBrace,
    CloseBrace,
    Equals,
    Tilde,
    Hash,
    Arrow,
    TitleDelim,
    Weight,
    FormatPrefix,
    Comment,
    BlankLine,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GiftToken {
    pub kind: TokenKind,
    /// Source text of the token; for text runs, with escapes resolved.
    pub lexeme: String,
    pub line: usize,
    pub column: usize,
}

impl GiftToken {
    pub fn location(&self) -> Location {
        Location::new(self.line, self.column)
    }

    pub fn is_blank_text(&self) -> bool {
        self.kind == TokenKind::Text && self.lexeme.trim().is_empty()
    }
}

/// Characters a backslash may escape. Only `{ } = ~ # :` and the backslash
/// itself are escaped routinely; the rest are emitted in the few contexts
/// where they would otherwise be read as syntax (`//` at line start,
/// `[html]` at question start, `%` opening an answer, `->` in a block).
pub const ESCAPABLE: &[char] = &['{', '}', '=', '~', '#', ':', '\\', '%', '[', '/', '>'];

pub const HTML_PREFIX: &str = "[html]";

fn weight_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^%[ \t]*[+-]?[0-9]+(?:\.[0-9]+)?[ \t]*%").unwrap())
}

/// Token stream plus lexical errors. Each error carries the index of the
/// token being built when it was found, so the parser can charge it to the
/// right question.
pub(crate) struct Lexed {
    pub tokens: Vec<GiftToken>,
    pub errors: Vec<(usize, Diagnostic)>,
}

pub fn tokenize_gift(source: &str) -> Vec<GiftToken> {
    lex(source).tokens
}

/// Like [`tokenize_gift`], also returning lexical diagnostics.
pub fn tokenize_with_diagnostics(source: &str) -> (Vec<GiftToken>, Vec<Diagnostic>) {
    let lexed = lex(source);
    (lexed.tokens, lexed.errors.into_iter().map(|(_, d)| d).collect())
}

pub(crate) fn lex(source: &str) -> Lexed {
    let source = crate::strip_bom(source).replace("\r\n", "\n");
    let mut lx = Lexer {
        chars: source.chars().collect(),
        pos: 0,
        line: 1,
        column: 1,
        tokens: Vec::new(),
        errors: Vec::new(),
        text: String::new(),
        text_at: Location::START,
        depth: 0,
        at_question_start: true,
        title_open: false,
        title_seen: false,
        format_seen: false,
        expect_weight: false,
    };
    lx.run();
    Lexed { tokens: lx.tokens, errors: lx.errors }
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    column: usize,
    tokens: Vec<GiftToken>,
    errors: Vec<(usize, Diagnostic)>,
    text: String,
    text_at: Location,
    depth: usize,
    at_question_start: bool,
    title_open: bool,
    title_seen: bool,
    format_seen: bool,
    expect_weight: bool,
}

impl Lexer {
    fn here(&self) -> Location {
        Location::new(self.line, self.column)
    }

    fn peek(&self, offset: usize) -> Option<char> {
        self.chars.get(self.pos + offset).copied()
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars().enumerate().all(|(i, c)| self.peek(i) == Some(c))
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek(0)?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn push_text(&mut self, c: char) {
        if self.text.is_empty() {
            self.text_at = self.here();
        }
        self.text.push(c);
    }

    fn flush(&mut self) {
        if !self.text.is_empty() {
            let at = self.text_at;
            let lexeme = std::mem::take(&mut self.text);
            self.tokens.push(GiftToken { kind: TokenKind::Text, lexeme, line: at.line, column: at.column });
        }
    }

    fn emit(&mut self, kind: TokenKind, lexeme: &str, at: Location) {
        self.flush();
        self.tokens.push(GiftToken { kind, lexeme: lexeme.to_owned(), line: at.line, column: at.column });
    }

    /// Consumes `n` characters and emits them as one token.
    fn take(&mut self, kind: TokenKind, n: usize) {
        let at = self.here();
        let lexeme: String = (0..n).filter_map(|_| self.bump()).collect();
        self.emit(kind, &lexeme, at);
    }

    fn error(&mut self, at: Location, code: &'static str, message: String) {
        // The pending text run, if any, becomes token `tokens.len()`.
        self.errors.push((self.tokens.len(), Diagnostic::error(at, code, message)));
    }

    /// Remainder of the current physical line, excluding the newline.
    fn rest_of_line(&self) -> String {
        self.chars[self.pos..].iter().take_while(|c| **c != '\n').collect()
    }

    fn run(&mut self) {
        while self.pos < self.chars.len() {
            if self.column == 1 && self.line_start() {
                continue;
            }
            self.step();
        }
        self.flush();
    }

    /// Handles whole blank and comment lines. Returns true if the line was
    /// consumed.
    fn line_start(&mut self) -> bool {
        let line = self.rest_of_line();
        let trimmed = line.trim_start();
        if trimmed.trim().is_empty() {
            let at = self.here();
            for _ in 0..line.chars().count() {
                self.bump();
            }
            self.bump();
            self.emit(TokenKind::BlankLine, "", at);
            if self.depth == 0 {
                self.reset_question();
            }
            return true;
        }
        if trimmed.starts_with("//") {
            let indent = line.chars().count() - trimmed.chars().count();
            for _ in 0..indent {
                self.bump();
            }
            let at = self.here();
            for _ in 0..trimmed.chars().count() {
                self.bump();
            }
            self.bump();
            self.emit(TokenKind::Comment, trimmed, at);
            return true;
        }
        false
    }

    fn reset_question(&mut self) {
        self.at_question_start = true;
        self.title_open = false;
        self.title_seen = false;
        self.format_seen = false;
        self.expect_weight = false;
    }

    fn step(&mut self) {
        let c = self.peek(0).unwrap();

        if self.at_question_start && !self.title_open && self.depth == 0 {
            if c.is_whitespace() {
                self.bump();
                return;
            }
            if !self.title_seen && self.starts_with("::") {
                self.take(TokenKind::TitleDelim, 2);
                self.title_open = true;
                self.title_seen = true;
                return;
            }
            if !self.format_seen && self.starts_with(HTML_PREFIX) {
                self.take(TokenKind::FormatPrefix, HTML_PREFIX.len());
                self.format_seen = true;
                return;
            }
            self.at_question_start = false;
        }

        if self.title_open && self.starts_with("::") {
            self.take(TokenKind::TitleDelim, 2);
            self.title_open = false;
            return;
        }

        match c {
            '\\' => {
                let at = self.here();
                match self.peek(1) {
                    None => {
                        self.bump();
                        self.error(at, codes::GIFT_UNTERMINATED_ESCAPE, "backslash at end of input escapes nothing".into());
                    }
                    Some(next) if ESCAPABLE.contains(&next) => {
                        self.push_text(next);
                        self.bump();
                        self.bump();
                        self.expect_weight = false;
                    }
                    Some(_) => {
                        self.push_text('\\');
                        self.bump();
                        self.expect_weight = false;
                    }
                }
            }
            '{' => {
                self.take(TokenKind::OpenBrace, 1);
                self.depth += 1;
                self.expect_weight = false;
            }
            '}' => {
                self.take(TokenKind::CloseBrace, 1);
                self.depth = self.depth.saturating_sub(1);
                self.expect_weight = false;
            }
            '=' | '~' => {
                let kind = if c == '=' { TokenKind::Equals } else { TokenKind::Tilde };
                self.take(kind, 1);
                self.expect_weight = self.depth > 0;
            }
            '#' => {
                self.take(TokenKind::Hash, 1);
                self.expect_weight = false;
            }
            '-' if self.depth > 0 && self.peek(1) == Some('>') => {
                self.take(TokenKind::Arrow, 2);
                self.expect_weight = false;
            }
            '%' if self.expect_weight => {
                self.expect_weight = false;
                let rest = self.rest_of_line();
                match weight_re().find(&rest) {
                    Some(m) => {
                        let n = m.as_str().chars().count();
                        self.take(TokenKind::Weight, n);
                    }
                    None => {
                        let at = self.here();
                        self.error(at, codes::GIFT_BAD_WEIGHT, format!("malformed weight near `{}`", rest.trim()));
                        self.push_text('%');
                        self.bump();
                    }
                }
            }
            _ => {
                if !c.is_whitespace() {
                    self.expect_weight = false;
                }
                self.push_text(c);
                self.bump();
            }
        }
    }
}
