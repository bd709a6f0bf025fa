//! Token stream produced by the lexer.

use crate::diag::Span;
use num::BigRational;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Ident(String),
    /// Numeric literal. `text` preserves the source spelling for
    /// round-trip printing; `value` is the exact rational it denotes.
    Number { text: String, value: BigRational },
    Keyword(Keyword),
    // Punctuation / operators.
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Colon,
    Dot,
    Pipe,
    PipeEq,   // |=
    CaretEq,  // ^=
    PlusEq,   // +=
    StarStar, // **
    Shl,      // <<
    Shr,      // >>
    Le,
    Ge,
    EqEq,
    Ne,
    Lt,
    Gt,
    Plus,
    Minus,
    Star,
    Slash,
    Amp,
    Caret,
    Tilde,
    Eof,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keyword {
    Qfunc,
    Qstruct,
    Output,
    Qbit,
    Qnum,
    Qarray,
    Signed,
    Unsigned,
    Int,
    Real,
    Array,
    Allocate,
    Phase,
    AssignAmplitude,
    Control,
    Repeat,
    Within,
    Apply,
    Invert,
    Power,
    And,
    Or,
    Xor,
    Not,
}

impl Keyword {
    pub fn from_ident(s: &str) -> Option<Keyword> {
        Some(match s {
            "qfunc" => Keyword::Qfunc,
            "qstruct" => Keyword::Qstruct,
            "output" => Keyword::Output,
            "qbit" => Keyword::Qbit,
            "qnum" => Keyword::Qnum,
            "qarray" => Keyword::Qarray,
            "signed" => Keyword::Signed,
            "unsigned" => Keyword::Unsigned,
            "int" => Keyword::Int,
            "real" => Keyword::Real,
            "array" => Keyword::Array,
            "allocate" => Keyword::Allocate,
            "phase" => Keyword::Phase,
            "assign_amplitude" => Keyword::AssignAmplitude,
            "control" => Keyword::Control,
            "repeat" => Keyword::Repeat,
            "within" => Keyword::Within,
            "apply" => Keyword::Apply,
            "invert" => Keyword::Invert,
            "power" => Keyword::Power,
            "and" => Keyword::And,
            "or" => Keyword::Or,
            "xor" => Keyword::Xor,
            "not" => Keyword::Not,
            _ => return None,
        })
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Keyword::Qfunc => "qfunc",
            Keyword::Qstruct => "qstruct",
            Keyword::Output => "output",
            Keyword::Qbit => "qbit",
            Keyword::Qnum => "qnum",
            Keyword::Qarray => "qarray",
            Keyword::Signed => "signed",
            Keyword::Unsigned => "unsigned",
            Keyword::Int => "int",
            Keyword::Real => "real",
            Keyword::Array => "array",
            Keyword::Allocate => "allocate",
            Keyword::Phase => "phase",
            Keyword::AssignAmplitude => "assign_amplitude",
            Keyword::Control => "control",
            Keyword::Repeat => "repeat",
            Keyword::Within => "within",
            Keyword::Apply => "apply",
            Keyword::Invert => "invert",
            Keyword::Power => "power",
            Keyword::And => "and",
            Keyword::Or => "or",
            Keyword::Xor => "xor",
            Keyword::Not => "not",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Ident(s) => write!(f, "identifier '{s}'"),
            TokenKind::Number { text, .. } => write!(f, "number '{text}'"),
            TokenKind::Keyword(k) => write!(f, "'{}'", k.as_str()),
            TokenKind::LParen => write!(f, "'('"),
            TokenKind::RParen => write!(f, "')'"),
            TokenKind::LBrace => write!(f, "'{{'"),
            TokenKind::RBrace => write!(f, "'}}'"),
            TokenKind::LBracket => write!(f, "'['"),
            TokenKind::RBracket => write!(f, "']'"),
            TokenKind::Comma => write!(f, "','"),
            TokenKind::Semi => write!(f, "';'"),
            TokenKind::Colon => write!(f, "':'"),
            TokenKind::Dot => write!(f, "'.'"),
            TokenKind::Pipe => write!(f, "'|'"),
            TokenKind::PipeEq => write!(f, "'|='"),
            TokenKind::CaretEq => write!(f, "'^='"),
            TokenKind::PlusEq => write!(f, "'+='"),
            TokenKind::StarStar => write!(f, "'**'"),
            TokenKind::Shl => write!(f, "'<<'"),
            TokenKind::Shr => write!(f, "'>>'"),
            TokenKind::Le => write!(f, "'<='"),
            TokenKind::Ge => write!(f, "'>='"),
            TokenKind::EqEq => write!(f, "'=='"),
            TokenKind::Ne => write!(f, "'!='"),
            TokenKind::Lt => write!(f, "'<'"),
            TokenKind::Gt => write!(f, "'>'"),
            TokenKind::Plus => write!(f, "'+'"),
            TokenKind::Minus => write!(f, "'-'"),
            TokenKind::Star => write!(f, "'*'"),
            TokenKind::Slash => write!(f, "'/'"),
            TokenKind::Amp => write!(f, "'&'"),
            TokenKind::Caret => write!(f, "'^'"),
            TokenKind::Tilde => write!(f, "'~'"),
            TokenKind::Eof => write!(f, "end of input"),
        }
    }
}
