//! Tokenizer shared by the formula, sequent, proof and arithmetic readers.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    LParen,
    RParen,
    Comma,
    Turnstile,
    DoubleColon,
    Plus,
    Star,
    Equals,
    Less,
    Ident(String),
    Number(u64),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::LParen => f.write_str("("),
            Tok::RParen => f.write_str(")"),
            Tok::Comma => f.write_str(","),
            Tok::Turnstile => f.write_str("|-"),
            Tok::DoubleColon => f.write_str("::"),
            Tok::Plus => f.write_str("+"),
            Tok::Star => f.write_str("*"),
            Tok::Equals => f.write_str("="),
            Tok::Less => f.write_str("<"),
            Tok::Ident(s) => f.write_str(s),
            Tok::Number(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub pos: usize,
}

/// Error produced by the tokenizer or by a reader built on it.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("parse error at {pos}: {msg}")]
pub struct SyntaxError {
    pub pos: usize,
    pub msg: String,
}

impl SyntaxError {
    pub fn new(pos: usize, msg: impl Into<String>) -> Self {
        SyntaxError { pos, msg: msg.into() }
    }
}

pub fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

pub fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

/// True when `s` is a well-formed identifier.
pub fn is_ident(s: &str) -> bool {
    let mut cs = s.chars();
    match cs.next() {
        Some(c) if is_ident_start(c) => cs.all(is_ident_char),
        _ => false,
    }
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, SyntaxError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let pos = i;
        let tok = match c {
            '(' => {
                i += 1;
                Tok::LParen
            }
            ')' => {
                i += 1;
                Tok::RParen
            }
            ',' => {
                i += 1;
                Tok::Comma
            }
            '+' => {
                i += 1;
                Tok::Plus
            }
            '*' => {
                i += 1;
                Tok::Star
            }
            '=' => {
                i += 1;
                Tok::Equals
            }
            '<' => {
                i += 1;
                Tok::Less
            }
            '|' if bytes.get(i + 1) == Some(&b'-') => {
                i += 2;
                Tok::Turnstile
            }
            ':' if bytes.get(i + 1) == Some(&b':') => {
                i += 2;
                Tok::DoubleColon
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                    i += 1;
                }
                let text = &src[start..i];
                let n =
                    text.parse::<u64>().map_err(|_| SyntaxError::new(start, format!("number out of range: {text}")))?;
                Tok::Number(n)
            }
            c if is_ident_start(c) => {
                let start = i;
                while i < bytes.len() && is_ident_char(bytes[i] as char) {
                    i += 1;
                }
                Tok::Ident(src[start..i].to_string())
            }
            other => return Err(SyntaxError::new(pos, format!("unexpected character {other:?}"))),
        };
        out.push(Token { tok, pos });
    }
    Ok(out)
}

/// Cursor over a token list with the end-of-input position remembered.
pub struct Cursor<'a> {
    toks: &'a [Token],
    idx: usize,
    end: usize,
}

impl<'a> Cursor<'a> {
    pub fn new(toks: &'a [Token], end: usize) -> Self {
        Cursor { toks, idx: 0, end }
    }

    pub fn peek(&self) -> Option<&'a Tok> {
        self.toks.get(self.idx).map(|t| &t.tok)
    }

    pub fn pos(&self) -> usize {
        self.toks.get(self.idx).map(|t| t.pos).unwrap_or(self.end)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn next(&mut self) -> Option<&'a Tok> {
        let t = self.toks.get(self.idx).map(|t| &t.tok);
        if t.is_some() {
            self.idx += 1;
        }
        t
    }

    pub fn at_end(&self) -> bool {
        self.idx >= self.toks.len()
    }

    pub fn expect(&mut self, want: &Tok) -> Result<(), SyntaxError> {
        let pos = self.pos();
        match self.next() {
            Some(t) if t == want => Ok(()),
            Some(t) => Err(SyntaxError::new(pos, format!("expected `{want}`, found `{t}`"))),
            None => Err(SyntaxError::new(pos, format!("expected `{want}`, found end of input"))),
        }
    }

    pub fn ident(&mut self) -> Result<&'a str, SyntaxError> {
        let pos = self.pos();
        match self.next() {
            Some(Tok::Ident(s)) => Ok(s),
            Some(t) => Err(SyntaxError::new(pos, format!("expected identifier, found `{t}`"))),
            None => Err(SyntaxError::new(pos, "expected identifier, found end of input")),
        }
    }

    pub fn finish(&self) -> Result<(), SyntaxError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(SyntaxError::new(self.pos(), format!("unexpected trailing `{t}`"))),
        }
    }
}
