//! Token stream produced by the lexer.

use crate::location::Location;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum TokenKind {
    Ident(String),
    Str(String),
    Int(i64),
    // Keywords that change how parsing proceeds. Primitive type names
    // (`int`, `byte`, ...) are deliberately plain identifiers so type
    // positions parse uniformly.
    KwImport,
    KwClass,
    KwNew,
    KwIf,
    KwElse,
    KwWhile,
    KwFor,
    KwReturn,
    KwTry,
    KwCatch,
    KwFinally,
    KwTrue,
    KwFalse,
    KwNull,
    KwVoid,
    KwPublic,
    KwPrivate,
    KwProtected,
    KwStatic,
    KwFinal,
    KwThrows,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Semi,
    Comma,
    Dot,
    Assign,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    Lt,
    Gt,
    Le,
    Ge,
    EqEq,
    Ne,
    Not,
    AndAnd,
    OrOr,
    PlusPlus,
    MinusMinus,
    Arrow,
    At,
    Colon,
    Question,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Ident(name) => format!("identifier `{name}`"),
            TokenKind::Str(_) => "string literal".to_string(),
            TokenKind::Int(v) => format!("integer literal `{v}`"),
            TokenKind::KwImport => "`import`".to_string(),
            TokenKind::KwClass => "`class`".to_string(),
            TokenKind::KwNew => "`new`".to_string(),
            TokenKind::KwIf => "`if`".to_string(),
            TokenKind::KwElse => "`else`".to_string(),
            TokenKind::KwWhile => "`while`".to_string(),
            TokenKind::KwFor => "`for`".to_string(),
            TokenKind::KwReturn => "`return`".to_string(),
            TokenKind::KwTry => "`try`".to_string(),
            TokenKind::KwCatch => "`catch`".to_string(),
            TokenKind::KwFinally => "`finally`".to_string(),
            TokenKind::KwTrue => "`true`".to_string(),
            TokenKind::KwFalse => "`false`".to_string(),
            TokenKind::KwNull => "`null`".to_string(),
            TokenKind::KwVoid => "`void`".to_string(),
            TokenKind::KwPublic => "`public`".to_string(),
            TokenKind::KwPrivate => "`private`".to_string(),
            TokenKind::KwProtected => "`protected`".to_string(),
            TokenKind::KwStatic => "`static`".to_string(),
            TokenKind::KwFinal => "`final`".to_string(),
            TokenKind::KwThrows => "`throws`".to_string(),
            TokenKind::LParen => "`(`".to_string(),
            TokenKind::RParen => "`)`".to_string(),
            TokenKind::LBrace => "`{`".to_string(),
            TokenKind::RBrace => "`}`".to_string(),
            TokenKind::LBracket => "`[`".to_string(),
            TokenKind::RBracket => "`]`".to_string(),
            TokenKind::Semi => "`;`".to_string(),
            TokenKind::Comma => "`,`".to_string(),
            TokenKind::Dot => "`.`".to_string(),
            TokenKind::Assign => "`=`".to_string(),
            TokenKind::Plus => "`+`".to_string(),
            TokenKind::Minus => "`-`".to_string(),
            TokenKind::Star => "`*`".to_string(),
            TokenKind::Slash => "`/`".to_string(),
            TokenKind::Percent => "`%`".to_string(),
            TokenKind::Lt => "`<`".to_string(),
            TokenKind::Gt => "`>`".to_string(),
            TokenKind::Le => "`<=`".to_string(),
            TokenKind::Ge => "`>=`".to_string(),
            TokenKind::EqEq => "`==`".to_string(),
            TokenKind::Ne => "`!=`".to_string(),
            TokenKind::Not => "`!`".to_string(),
            TokenKind::AndAnd => "`&&`".to_string(),
            TokenKind::OrOr => "`||`".to_string(),
            TokenKind::PlusPlus => "`++`".to_string(),
            TokenKind::MinusMinus => "`--`".to_string(),
            TokenKind::Arrow => "`->`".to_string(),
            TokenKind::At => "`@`".to_string(),
            TokenKind::Colon => "`:`".to_string(),
            TokenKind::Question => "`?`".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Token {
    pub kind: TokenKind,
    pub loc: Location,
}
