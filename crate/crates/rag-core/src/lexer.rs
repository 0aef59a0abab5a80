//! Tokenizer for `.rag` documents.
//!
//! Tokenization is total: unknown characters become error diagnostics with
//! their spans and an `Error` token, so the parser can keep going. Newlines
//! are significant (they separate fields inside blocks) and are emitted as
//! tokens with consecutive runs collapsed; `#` starts a line comment.

use crate::diag::{codes, Diagnostic};
use crate::span::SourceSpan;

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    /// Identifier or keyword; keywords are contextual.
    Ident(String),
    /// Quoted string, unescaped.
    Str(String),
    /// Numeric literal (integers and decimals; may be negative).
    Number(f64),
    Newline,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Semi,
    Comma,
    Eq,
    Arrow,
    DotDot,
    At,
    Percent,
    /// Placeholder for an unrecognized character (already diagnosed).
    Error(char),
    Eof,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Ident(s) => format!("`{s}`"),
            TokenKind::Str(_) => "string".to_string(),
            TokenKind::Number(n) => format!("number `{n}`"),
            TokenKind::Newline => "end of line".to_string(),
            TokenKind::LBrace => "`{`".to_string(),
            TokenKind::RBrace => "`}`".to_string(),
            TokenKind::LParen => "`(`".to_string(),
            TokenKind::RParen => "`)`".to_string(),
            TokenKind::Semi => "`;`".to_string(),
            TokenKind::Comma => "`,`".to_string(),
            TokenKind::Eq => "`=`".to_string(),
            TokenKind::Arrow => "`->`".to_string(),
            TokenKind::DotDot => "`..`".to_string(),
            TokenKind::At => "`@`".to_string(),
            TokenKind::Percent => "`%`".to_string(),
            TokenKind::Error(c) => format!("`{c}`"),
            TokenKind::Eof => "end of input".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: SourceSpan,
}

struct Lexer<'a> {
    file: &'a str,
    chars: Vec<char>,
    pos: usize,
    line: u32,
    col: u32,
    tokens: Vec<Token>,
    diagnostics: Vec<Diagnostic>,
}

/// Tokenize a document. Always returns the token stream; malformed input is
/// reported through the accompanying diagnostics.
pub fn tokenize(text: &str, file: &str) -> (Vec<Token>, Vec<Diagnostic>) {
    let mut lx = Lexer {
        file,
        chars: text.chars().collect(),
        pos: 0,
        line: 1,
        col: 1,
        tokens: Vec::new(),
        diagnostics: Vec::new(),
    };
    lx.run();
    (lx.tokens, lx.diagnostics)
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek2(&self) -> Option<char> {
        self.chars.get(self.pos + 1).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn here(&self) -> (u32, u32) {
        (self.line, self.col)
    }

    fn push(&mut self, kind: TokenKind, start: (u32, u32)) {
        let end = if self.col > 1 { (self.line, self.col - 1) } else { (self.line, 1) };
        self.tokens.push(Token {
            kind,
            span: SourceSpan::new(self.file, start.0, start.1, end.0, end.1),
        });
    }

    fn push_newline(&mut self, start: (u32, u32)) {
        // Collapse runs: a newline after a newline adds nothing.
        if matches!(self.tokens.last().map(|t| &t.kind), Some(TokenKind::Newline) | None) {
            return;
        }
        self.tokens.push(Token {
            kind: TokenKind::Newline,
            span: SourceSpan::point(self.file, start.0, start.1),
        });
    }

    fn run(&mut self) {
        while let Some(c) = self.peek() {
            let start = self.here();
            match c {
                ' ' | '\t' | '\r' => {
                    self.bump();
                }
                '\n' => {
                    self.bump();
                    self.push_newline(start);
                }
                '#' => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                '{' => {
                    self.bump();
                    self.push(TokenKind::LBrace, start);
                }
                '}' => {
                    self.bump();
                    self.push(TokenKind::RBrace, start);
                }
                '(' => {
                    self.bump();
                    self.push(TokenKind::LParen, start);
                }
                ')' => {
                    self.bump();
                    self.push(TokenKind::RParen, start);
                }
                ';' => {
                    self.bump();
                    self.push(TokenKind::Semi, start);
                }
                ',' => {
                    self.bump();
                    self.push(TokenKind::Comma, start);
                }
                '=' => {
                    self.bump();
                    self.push(TokenKind::Eq, start);
                }
                '@' => {
                    self.bump();
                    self.push(TokenKind::At, start);
                }
                '%' => {
                    self.bump();
                    self.push(TokenKind::Percent, start);
                }
                '-' => {
                    self.bump();
                    if self.peek() == Some('>') {
                        self.bump();
                        self.push(TokenKind::Arrow, start);
                    } else if self.peek().is_some_and(|c| c.is_ascii_digit()) {
                        self.number(start, true);
                    } else {
                        self.unknown('-', start);
                    }
                }
                '.' => {
                    self.bump();
                    if self.peek() == Some('.') {
                        self.bump();
                        self.push(TokenKind::DotDot, start);
                    } else {
                        self.unknown('.', start);
                    }
                }
                '"' => self.string(start),
                c if c.is_ascii_digit() => self.number(start, false),
                c if c.is_alphabetic() || c == '_' => self.ident(start),
                other => {
                    self.bump();
                    self.unknown(other, start);
                }
            }
        }
        let end = self.here();
        self.tokens.push(Token {
            kind: TokenKind::Eof,
            span: SourceSpan::point(self.file, end.0, end.1),
        });
    }

    fn unknown(&mut self, c: char, start: (u32, u32)) {
        self.diagnostics.push(
            Diagnostic::error(codes::UNKNOWN_CHAR, format!("unknown character `{c}`"))
                .with_span(SourceSpan::point(self.file, start.0, start.1)),
        );
        self.push(TokenKind::Error(c), start);
    }

    fn ident(&mut self, start: (u32, u32)) {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            // Dots inside identifiers carry plugin namespaces (`pesto.blend`).
            if c.is_alphanumeric() || c == '_' || (c == '.' && self.peek2().is_some_and(|n| n.is_alphanumeric() || n == '_'))
            {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        self.push(TokenKind::Ident(s), start);
    }

    fn number(&mut self, start: (u32, u32), negative: bool) {
        let mut s = String::new();
        if negative {
            s.push('-');
        }
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() {
                s.push(c);
                self.bump();
            } else if c == '.' && self.peek2().is_some_and(|n| n.is_ascii_digit()) && !s.contains('.') {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        match s.parse::<f64>() {
            Ok(n) => self.push(TokenKind::Number(n), start),
            Err(_) => {
                self.diagnostics.push(
                    Diagnostic::error(codes::MALFORMED_NUMBER, format!("malformed number `{s}`"))
                        .with_span(SourceSpan::point(self.file, start.0, start.1)),
                );
                self.push(TokenKind::Error('0'), start);
            }
        }
    }

    fn string(&mut self, start: (u32, u32)) {
        self.bump(); // opening quote
        let mut s = String::new();
        loop {
            match self.peek() {
                None | Some('\n') => {
                    self.diagnostics.push(
                        Diagnostic::error(codes::UNTERMINATED_STRING, "unterminated string literal")
                            .with_span(SourceSpan::point(self.file, start.0, start.1)),
                    );
                    self.push(TokenKind::Str(s), start);
                    return;
                }
                Some('"') => {
                    self.bump();
                    self.push(TokenKind::Str(s), start);
                    return;
                }
                Some('\\') => {
                    self.bump();
                    match self.peek() {
                        Some('"') => {
                            s.push('"');
                            self.bump();
                        }
                        Some('\\') => {
                            s.push('\\');
                            self.bump();
                        }
                        _ => s.push('\\'),
                    }
                }
                Some(c) => {
                    s.push(c);
                    self.bump();
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(text: &str) -> Vec<TokenKind> {
        let (tokens, diags) = tokenize(text, "test.rag");
        assert!(diags.is_empty(), "unexpected diagnostics: {diags:?}");
        tokens.into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn transfer_line_tokenizes_with_arrow() {
        let ks = kinds("transfer sausages -> env(pan, stove)");
        assert!(ks.contains(&TokenKind::Arrow));
        // transfer, sausages, ->, env, (, pan, `,`, stove, ), EOF
        assert_eq!(ks.len(), 10);
        assert_eq!(ks[0], TokenKind::Ident("transfer".into()));
        assert_eq!(ks[2], TokenKind::Arrow);
    }

    #[test]
    fn empty_document_is_just_eof() {
        let (tokens, diags) = tokenize("", "test.rag");
        assert!(diags.is_empty());
        assert_eq!(tokens.len(), 1);
        assert_eq!(tokens[0].kind, TokenKind::Eof);
    }

    #[test]
    fn stray_section_sign_yields_e001_at_its_span() {
        let (tokens, diags) = tokenize("env pan {\n  container §\n}", "test.rag");
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, codes::UNKNOWN_CHAR);
        let span = diags[0].span.as_ref().unwrap();
        assert_eq!((span.line_start, span.col_start), (2, 13));
        assert!(tokens.iter().any(|t| matches!(t.kind, TokenKind::Error('§'))));
    }

    #[test]
    fn comments_and_blank_lines_collapse() {
        let ks = kinds("a\n# comment only\n\n\nb");
        assert_eq!(
            ks,
            vec![
                TokenKind::Ident("a".into()),
                TokenKind::Newline,
                TokenKind::Ident("b".into()),
                TokenKind::Eof,
            ]
        );
    }

    #[test]
    fn numbers_ranges_and_percents() {
        let ks = kinds("150..180 12.5 50% -18");
        assert_eq!(
            ks,
            vec![
                TokenKind::Number(150.0),
                TokenKind::DotDot,
                TokenKind::Number(180.0),
                TokenKind::Number(12.5),
                TokenKind::Number(50.0),
                TokenKind::Percent,
                TokenKind::Number(-18.0),
                TokenKind::Eof,
            ]
        );
    }

    #[test]
    fn strings_unescape_and_report_unterminated() {
        let (tokens, diags) = tokenize(r#""frying pan" "say \"hi\"" "open"#, "t");
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, codes::UNTERMINATED_STRING);
        assert_eq!(tokens[0].kind, TokenKind::Str("frying pan".into()));
        assert_eq!(tokens[1].kind, TokenKind::Str("say \"hi\"".into()));
    }

    #[test]
    fn dotted_identifiers_stay_whole() {
        let ks = kinds("pesto.blend_pesto");
        assert_eq!(ks[0], TokenKind::Ident("pesto.blend_pesto".into()));
    }

    #[test]
    fn spans_are_one_based_and_cover_tokens() {
        let (tokens, _) = tokenize("recipe \"x\"", "t");
        let span = &tokens[0].span;
        assert_eq!((span.line_start, span.col_start), (1, 1));
        assert_eq!((span.line_end, span.col_end), (1, 6));
    }
}
