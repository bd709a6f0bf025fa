//! Hand-rolled lexer. `//` starts a line comment; numbers are decimal with
//! an optional fraction part and lex to exact rationals.

use super::token::{Keyword, Token, TokenKind};
use crate::diag::{Diagnostic, Span};
use num::{BigInt, BigRational, One};

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    line: u32,
    col: u32,
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut lx = Lexer { src, bytes: src.as_bytes(), pos: 0, line: 1, col: 1 };
    let mut out = Vec::new();
    loop {
        let tok = lx.next_token()?;
        let eof = tok.kind == TokenKind::Eof;
        out.push(tok);
        if eof {
            return Ok(out);
        }
    }
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn peek2(&self) -> Option<u8> {
        self.bytes.get(self.pos + 1).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek()?;
        self.pos += 1;
        if b == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(b)
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(b' ') | Some(b'\t') | Some(b'\r') | Some(b'\n') => {
                    self.bump();
                }
                Some(b'/') if self.peek2() == Some(b'/') => {
                    while let Some(b) = self.peek() {
                        if b == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => break,
            }
        }
    }

    fn span_from(&self, start: usize, line: u32, col: u32) -> Span {
        Span::new(start, self.pos, line, col)
    }

    fn next_token(&mut self) -> Result<Token, Diagnostic> {
        self.skip_trivia();
        let (start, line, col) = (self.pos, self.line, self.col);
        let b = match self.peek() {
            None => {
                return Ok(Token {
                    kind: TokenKind::Eof,
                    span: Span::new(start, start, line, col),
                })
            }
            Some(b) => b,
        };

        if b.is_ascii_alphabetic() || b == b'_' {
            while let Some(c) = self.peek() {
                if c.is_ascii_alphanumeric() || c == b'_' {
                    self.bump();
                } else {
                    break;
                }
            }
            let text = &self.src[start..self.pos];
            let kind = match Keyword::from_ident(text) {
                Some(k) => TokenKind::Keyword(k),
                None => TokenKind::Ident(text.to_string()),
            };
            return Ok(Token { kind, span: self.span_from(start, line, col) });
        }

        if b.is_ascii_digit() {
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.bump();
            }
            if self.peek() == Some(b'.') && self.peek2().is_some_and(|c| c.is_ascii_digit()) {
                self.bump();
                while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    self.bump();
                }
            }
            let text = &self.src[start..self.pos];
            let value = rational_from_decimal(text);
            return Ok(Token {
                kind: TokenKind::Number { text: text.to_string(), value },
                span: self.span_from(start, line, col),
            });
        }

        self.bump();
        let two = |lx: &mut Self, kind: TokenKind| {
            lx.bump();
            kind
        };
        let kind = match b {
            b'(' => TokenKind::LParen,
            b')' => TokenKind::RParen,
            b'{' => TokenKind::LBrace,
            b'}' => TokenKind::RBrace,
            b'[' => TokenKind::LBracket,
            b']' => TokenKind::RBracket,
            b',' => TokenKind::Comma,
            b';' => TokenKind::Semi,
            b':' => TokenKind::Colon,
            b'.' => TokenKind::Dot,
            b'~' => TokenKind::Tilde,
            b'+' if self.peek() == Some(b'=') => two(self, TokenKind::PlusEq),
            b'+' => TokenKind::Plus,
            b'-' => TokenKind::Minus,
            b'*' if self.peek() == Some(b'*') => two(self, TokenKind::StarStar),
            b'*' => TokenKind::Star,
            b'/' => TokenKind::Slash,
            b'|' if self.peek() == Some(b'=') => two(self, TokenKind::PipeEq),
            b'|' => TokenKind::Pipe,
            b'^' if self.peek() == Some(b'=') => two(self, TokenKind::CaretEq),
            b'^' => TokenKind::Caret,
            b'&' => TokenKind::Amp,
            b'<' if self.peek() == Some(b'<') => two(self, TokenKind::Shl),
            b'<' if self.peek() == Some(b'=') => two(self, TokenKind::Le),
            b'<' => TokenKind::Lt,
            b'>' if self.peek() == Some(b'>') => two(self, TokenKind::Shr),
            b'>' if self.peek() == Some(b'=') => two(self, TokenKind::Ge),
            b'>' => TokenKind::Gt,
            b'=' if self.peek() == Some(b'=') => two(self, TokenKind::EqEq),
            b'!' if self.peek() == Some(b'=') => two(self, TokenKind::Ne),
            other => {
                return Err(Diagnostic::error(
                    format!("unrecognized character '{}'", other as char),
                    Span::new(start, self.pos, line, col),
                ));
            }
        };
        Ok(Token { kind, span: self.span_from(start, line, col) })
    }
}

/// Exact rational value of a decimal literal like `0.8125` or `12`.
fn rational_from_decimal(text: &str) -> BigRational {
    match text.split_once('.') {
        None => BigRational::from_integer(text.parse::<BigInt>().unwrap()),
        Some((int, frac)) => {
            let digits: BigInt = format!("{int}{frac}").parse().unwrap();
            let mut denom = BigInt::one();
            for _ in 0..frac.len() {
                denom *= 10;
            }
            BigRational::new(digits, denom)
        }
    }
}
