//! Tolerant lexer for the subject language.
//!
//! Characters the language has no use for are recorded as issues and the
//! lexer resumes at the next line, so one stray byte never hides the rest of
//! a file. Columns count bytes (1-based) and spans are inclusive, which keeps
//! evidence positions exact even in files with multi-byte characters.

use super::token::{Token, TokenKind};
use crate::location::Location;

/// A problem found while tokenizing or parsing. Collected, never fatal.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ParseIssue {
    pub loc: Location,
    pub message: String,
}

pub fn tokenize(source: &str, file_name: &str) -> (Vec<Token>, Vec<ParseIssue>) {
    Lexer::new(source, file_name).run()
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    file: &'a str,
    pos: usize,
    line: u32,
    col: u32,
    tokens: Vec<Token>,
    issues: Vec<ParseIssue>,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str, file: &'a str) -> Self {
        Lexer {
            src,
            bytes: src.as_bytes(),
            file,
            pos: 0,
            line: 1,
            col: 1,
            tokens: Vec::new(),
            issues: Vec::new(),
        }
    }

    fn run(mut self) -> (Vec<Token>, Vec<ParseIssue>) {
        while self.pos < self.bytes.len() {
            let start_line = self.line;
            let start_col = self.col;
            let c = self.bytes[self.pos];
            match c {
                b' ' | b'\t' | b'\r' => self.advance(1),
                b'\n' => self.newline(),
                b'/' => {
                    if self.peek(1) == Some(b'/') {
                        self.skip_line_comment();
                    } else if self.peek(1) == Some(b'*') {
                        self.skip_block_comment();
                    } else {
                        self.advance(1);
                        self.push(TokenKind::Slash, start_line, start_col, 1);
                    }
                }
                b'"' => self.lex_string(start_line, start_col),
                b'0'..=b'9' => self.lex_number(start_line, start_col),
                b'a'..=b'z' | b'A'..=b'Z' | b'_' | b'$' => self.lex_word(start_line, start_col),
                _ => self.lex_operator(start_line, start_col),
            }
        }
        (self.tokens, self.issues)
    }

    fn peek(&self, ahead: usize) -> Option<u8> {
        self.bytes.get(self.pos + ahead).copied()
    }

    fn advance(&mut self, n: usize) {
        self.pos += n;
        self.col += n as u32;
    }

    fn newline(&mut self) {
        self.pos += 1;
        self.line += 1;
        self.col = 1;
    }

    fn push(&mut self, kind: TokenKind, line: u32, start_col: u32, _len: usize) {
        // end column is the column of the token's final byte
        let end_col = self.col - 1;
        self.tokens.push(Token {
            kind,
            loc: Location::new(self.file, line, start_col, self.line, end_col.max(start_col)),
        });
    }

    fn issue(&mut self, line: u32, col: u32, message: impl Into<String>) {
        self.issues.push(ParseIssue {
            loc: Location::point(self.file, line, col),
            message: message.into(),
        });
    }

    /// Recovery for illegal bytes: drop everything up to the next newline.
    fn skip_to_next_line(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
            self.pos += 1;
        }
        if self.pos < self.bytes.len() {
            self.newline();
        }
    }

    fn skip_line_comment(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
            self.advance(1);
        }
    }

    fn skip_block_comment(&mut self) {
        let (line, col) = (self.line, self.col);
        self.advance(2);
        loop {
            match self.bytes.get(self.pos) {
                None => {
                    self.issue(line, col, "unterminated block comment");
                    return;
                }
                Some(b'\n') => self.newline(),
                Some(b'*') if self.peek(1) == Some(b'/') => {
                    self.advance(2);
                    return;
                }
                Some(_) => self.advance(1),
            }
        }
    }

    fn lex_string(&mut self, line: u32, col: u32) {
        self.advance(1); // opening quote
        let mut value = String::new();
        loop {
            match self.bytes.get(self.pos) {
                None | Some(b'\n') => {
                    self.issue(line, col, "unterminated string literal");
                    // Emit what we have so the parser can keep going.
                    self.push(TokenKind::Str(value), line, col, 0);
                    return;
                }
                Some(b'"') => {
                    self.advance(1);
                    self.push(TokenKind::Str(value), line, col, 0);
                    return;
                }
                Some(b'\\') => {
                    let esc_line = self.line;
                    let esc_col = self.col;
                    self.advance(1);
                    match self.bytes.get(self.pos) {
                        Some(b'n') => {
                            value.push('\n');
                            self.advance(1);
                        }
                        Some(b't') => {
                            value.push('\t');
                            self.advance(1);
                        }
                        Some(b'r') => {
                            value.push('\r');
                            self.advance(1);
                        }
                        Some(b'b') => {
                            value.push('\u{0008}');
                            self.advance(1);
                        }
                        Some(b'f') => {
                            value.push('\u{000C}');
                            self.advance(1);
                        }
                        Some(b'0') => {
                            value.push('\0');
                            self.advance(1);
                        }
                        Some(b'\\') => {
                            value.push('\\');
                            self.advance(1);
                        }
                        Some(b'"') => {
                            value.push('"');
                            self.advance(1);
                        }
                        Some(b'\'') => {
                            value.push('\'');
                            self.advance(1);
                        }
                        Some(b'u') => {
                            self.advance(1);
                            let mut code = 0u32;
                            let mut ok = true;
                            for _ in 0..4 {
                                match self.bytes.get(self.pos).and_then(|b| (*b as char).to_digit(16)) {
                                    Some(d) => {
                                        code = code * 16 + d;
                                        self.advance(1);
                                    }
                                    None => {
                                        ok = false;
                                        break;
                                    }
                                }
                            }
                            if ok {
                                value.push(char::from_u32(code).unwrap_or('\u{FFFD}'));
                            } else {
                                self.issue(esc_line, esc_col, "malformed \\u escape");
                            }
                        }
                        _ => {
                            self.issue(esc_line, esc_col, "unknown escape sequence");
                            self.advance(1);
                        }
                    }
                }
                Some(_) => {
                    let ch = self.src[self.pos..].chars().next().unwrap();
                    value.push(ch);
                    self.advance(ch.len_utf8());
                }
            }
        }
    }

    fn lex_number(&mut self, line: u32, col: u32) {
        let start = self.pos;
        if self.bytes[self.pos] == b'0' && matches!(self.peek(1), Some(b'x') | Some(b'X')) {
            self.advance(2);
            while matches!(self.bytes.get(self.pos), Some(b) if b.is_ascii_hexdigit()) {
                self.advance(1);
            }
            let text = &self.src[start + 2..self.pos];
            let value = i64::from_str_radix(text, 16).unwrap_or_else(|_| {
                self.issues.push(ParseIssue {
                    loc: Location::point(self.file, line, col),
                    message: "integer literal out of range".into(),
                });
                0
            });
            self.eat_long_suffix();
            self.push(TokenKind::Int(value), line, col, 0);
            return;
        }
        while matches!(self.bytes.get(self.pos), Some(b) if b.is_ascii_digit()) {
            self.advance(1);
        }
        let text = &self.src[start..self.pos];
        let value = text.parse::<i64>().unwrap_or_else(|_| {
            self.issues.push(ParseIssue {
                loc: Location::point(self.file, line, col),
                message: "integer literal out of range".into(),
            });
            0
        });
        self.eat_long_suffix();
        self.push(TokenKind::Int(value), line, col, 0);
    }

    fn eat_long_suffix(&mut self) {
        if matches!(self.bytes.get(self.pos), Some(b'L') | Some(b'l')) {
            self.advance(1);
        }
    }

    fn lex_word(&mut self, line: u32, col: u32) {
        let start = self.pos;
        while matches!(self.bytes.get(self.pos), Some(b) if b.is_ascii_alphanumeric() || *b == b'_' || *b == b'$')
        {
            self.advance(1);
        }
        let word = &self.src[start..self.pos];
        let kind = match word {
            "import" => TokenKind::KwImport,
            "class" => TokenKind::KwClass,
            "new" => TokenKind::KwNew,
            "if" => TokenKind::KwIf,
            "else" => TokenKind::KwElse,
            "while" => TokenKind::KwWhile,
            "for" => TokenKind::KwFor,
            "return" => TokenKind::KwReturn,
            "try" => TokenKind::KwTry,
            "catch" => TokenKind::KwCatch,
            "finally" => TokenKind::KwFinally,
            "true" => TokenKind::KwTrue,
            "false" => TokenKind::KwFalse,
            "null" => TokenKind::KwNull,
            "void" => TokenKind::KwVoid,
            "public" => TokenKind::KwPublic,
            "private" => TokenKind::KwPrivate,
            "protected" => TokenKind::KwProtected,
            "static" => TokenKind::KwStatic,
            "final" => TokenKind::KwFinal,
            "throws" => TokenKind::KwThrows,
            other => TokenKind::Ident(other.to_string()),
        };
        self.push(kind, line, col, 0);
    }

    fn lex_operator(&mut self, line: u32, col: u32) {
        let two = |a: u8, b: u8, lx: &Lexer| lx.bytes[lx.pos] == a && lx.peek(1) == Some(b);
        let kind = if two(b'=', b'=', self) {
            self.advance(2);
            TokenKind::EqEq
        } else if two(b'!', b'=', self) {
            self.advance(2);
            TokenKind::Ne
        } else if two(b'<', b'=', self) {
            self.advance(2);
            TokenKind::Le
        } else if two(b'>', b'=', self) {
            self.advance(2);
            TokenKind::Ge
        } else if two(b'&', b'&', self) {
            self.advance(2);
            TokenKind::AndAnd
        } else if two(b'|', b'|', self) {
            self.advance(2);
            TokenKind::OrOr
        } else if two(b'+', b'+', self) {
            self.advance(2);
            TokenKind::PlusPlus
        } else if two(b'-', b'-', self) {
            self.advance(2);
            TokenKind::MinusMinus
        } else if two(b'-', b'>', self) {
            self.advance(2);
            TokenKind::Arrow
        } else {
            let single = match self.bytes[self.pos] {
                b'(' => Some(TokenKind::LParen),
                b')' => Some(TokenKind::RParen),
                b'{' => Some(TokenKind::LBrace),
                b'}' => Some(TokenKind::RBrace),
                b'[' => Some(TokenKind::LBracket),
                b']' => Some(TokenKind::RBracket),
                b';' => Some(TokenKind::Semi),
                b',' => Some(TokenKind::Comma),
                b'.' => Some(TokenKind::Dot),
                b'=' => Some(TokenKind::Assign),
                b'+' => Some(TokenKind::Plus),
                b'-' => Some(TokenKind::Minus),
                b'*' => Some(TokenKind::Star),
                b'%' => Some(TokenKind::Percent),
                b'<' => Some(TokenKind::Lt),
                b'>' => Some(TokenKind::Gt),
                b'!' => Some(TokenKind::Not),
                b'@' => Some(TokenKind::At),
                b':' => Some(TokenKind::Colon),
                b'?' => Some(TokenKind::Question),
                _ => None,
            };
            match single {
                Some(kind) => {
                    self.advance(1);
                    kind
                }
                None => {
                    let ch = self.src[self.pos..].chars().next().unwrap();
                    self.issue(line, col, format!("illegal character `{ch}`"));
                    self.skip_to_next_line();
                    return;
                }
            }
        };
        self.push(kind, line, col, 0);
    }
}
