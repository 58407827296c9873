//! Tokenizer shared by component, scenario and property files.

use crate::diag::Pos;
use std::fmt;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Keyword {
    Component,
    Port,
    In,
    Out,
    Inout,
    Exception,
    Ids,
    Task,
    Period,
    Codel,
    Async,
    Yield,
    Wcet,
    Min,
    Attribute,
    Function,
    Activity,
    Doc,
    Validate,
    Throw,
    Interrupt,
    Local,
    Ether,
    Pause,
}

impl Keyword {
    fn from_word(w: &str) -> Option<Keyword> {
        use Keyword::*;
        Some(match w {
            "component" => Component,
            "port" => Port,
            "in" => In,
            "out" => Out,
            "inout" => Inout,
            "exception" => Exception,
            "ids" => Ids,
            "task" => Task,
            "period" => Period,
            "codel" => Codel,
            "async" => Async,
            "yield" => Yield,
            "wcet" => Wcet,
            "min" => Min,
            "attribute" => Attribute,
            "function" => Function,
            "activity" => Activity,
            "doc" => Doc,
            "validate" => Validate,
            "throw" => Throw,
            "interrupt" => Interrupt,
            "local" => Local,
            "ether" => Ether,
            "pause" => Pause,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        use Keyword::*;
        match self {
            Component => "component",
            Port => "port",
            In => "in",
            Out => "out",
            Inout => "inout",
            Exception => "exception",
            Ids => "ids",
            Task => "task",
            Period => "period",
            Codel => "codel",
            Async => "async",
            Yield => "yield",
            Wcet => "wcet",
            Min => "min",
            Attribute => "attribute",
            Function => "function",
            Activity => "activity",
            Doc => "doc",
            Validate => "validate",
            Throw => "throw",
            Interrupt => "interrupt",
            Local => "local",
            Ether => "ether",
            Pause => "pause",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TokenKind {
    Keyword(Keyword),
    Ident(String),
    /// Numeric literal kept verbatim (scenario arguments, unit-less bounds).
    Number(String),
    /// Duration literal normalized to microseconds.
    Duration(u64),
    Str(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Lt,
    Gt,
    Semi,
    Comma,
    ColonColon,
    Dot,
    DotDot,
    Slash,
    FatArrow,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Keyword(k) => write!(f, "`{}`", k.as_str()),
            TokenKind::Ident(s) => write!(f, "identifier `{}`", s),
            TokenKind::Number(s) => write!(f, "number `{}`", s),
            TokenKind::Duration(us) => write!(f, "duration `{}us`", us),
            TokenKind::Str(_) => f.write_str("string literal"),
            TokenKind::LBrace => f.write_str("`{`"),
            TokenKind::RBrace => f.write_str("`}`"),
            TokenKind::LParen => f.write_str("`(`"),
            TokenKind::RParen => f.write_str("`)`"),
            TokenKind::LBracket => f.write_str("`[`"),
            TokenKind::RBracket => f.write_str("`]`"),
            TokenKind::Lt => f.write_str("`<`"),
            TokenKind::Gt => f.write_str("`>`"),
            TokenKind::Semi => f.write_str("`;`"),
            TokenKind::Comma => f.write_str("`,`"),
            TokenKind::ColonColon => f.write_str("`::`"),
            TokenKind::Dot => f.write_str("`.`"),
            TokenKind::DotDot => f.write_str("`..`"),
            TokenKind::Slash => f.write_str("`/`"),
            TokenKind::FatArrow => f.write_str("`=>`"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub pos: Pos,
}

#[derive(Debug, Clone, Error, PartialEq)]
#[error("{pos}: {message}")]
pub struct LexError {
    pub message: String,
    pub pos: Pos,
}

struct Cursor<'a> {
    chars: Vec<char>,
    idx: usize,
    line: u32,
    col: u32,
    _src: &'a str,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.idx).copied()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.chars.get(self.idx + n).copied()
    }

    fn pos(&self) -> Pos {
        Pos::new(self.line, self.col)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.idx).copied()?;
        self.idx += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }
}

/// Converts a decimal literal and a unit into integer microseconds.
///
/// The conversion is exact: `0.005s` and `5ms` both give 5000. A literal that
/// does not denote a whole number of microseconds is rejected.
pub fn duration_to_us(number: &str, unit: &str) -> Result<u64, String> {
    let scale_digits: u32 = match unit {
        "us" => 0,
        "ms" => 3,
        "s" => 6,
        _ => return Err(format!("unknown time unit `{}`", unit)),
    };
    let (int_part, frac_part) = match number.split_once('.') {
        Some((i, f)) => (i, f),
        None => (number, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err("empty duration".into());
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return Err(format!("malformed duration `{}{}`", number, unit));
    }
    let frac_trimmed = frac_part.trim_end_matches('0');
    if frac_trimmed.len() as u32 > scale_digits {
        return Err(format!("duration `{}{}` is not a whole number of microseconds", number, unit));
    }
    let mut digits = String::from(if int_part.is_empty() { "0" } else { int_part });
    digits.push_str(frac_trimmed);
    for _ in 0..(scale_digits - frac_trimmed.len() as u32) {
        digits.push('0');
    }
    digits
        .parse::<u64>()
        .map_err(|_| format!("duration `{}{}` out of range", number, unit))
}

/// Splits `source` into tokens. Comments (`/* */`, `//`, `#`) and whitespace
/// are discarded. A number directly followed (possibly after blanks) by one of
/// the units `us`, `ms`, `s` becomes a single duration token.
pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    let mut cur = Cursor { chars: source.chars().collect(), idx: 0, line: 1, col: 1, _src: source };
    let mut out = Vec::new();

    while let Some(c) = cur.peek() {
        let start = cur.pos();
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c == '/' && cur.peek_at(1) == Some('*') {
            cur.bump();
            cur.bump();
            loop {
                match cur.peek() {
                    None => {
                        return Err(LexError { message: "unterminated comment".into(), pos: start });
                    }
                    Some('*') if cur.peek_at(1) == Some('/') => {
                        cur.bump();
                        cur.bump();
                        break;
                    }
                    Some(_) => {
                        cur.bump();
                    }
                }
            }
            continue;
        }
        if (c == '/' && cur.peek_at(1) == Some('/')) || c == '#' {
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
            }
            continue;
        }
        if c == '"' {
            cur.bump();
            let mut s = String::new();
            loop {
                match cur.bump() {
                    None => return Err(LexError { message: "unterminated string".into(), pos: start }),
                    Some('"') => break,
                    Some('\\') => match cur.bump() {
                        Some('n') => s.push('\n'),
                        Some('t') => s.push('\t'),
                        Some(other) => s.push(other),
                        None => {
                            return Err(LexError { message: "unterminated string".into(), pos: start })
                        }
                    },
                    Some(ch) => s.push(ch),
                }
            }
            out.push(Token { kind: TokenKind::Str(s), pos: start });
            continue;
        }
        let starts_number = c.is_ascii_digit()
            || (c == '-' && cur.peek_at(1).is_some_and(|d| d.is_ascii_digit()))
            || (c == '.' && cur.peek_at(1).is_some_and(|d| d.is_ascii_digit()) && !matches!(out.last(), Some(Token { kind: TokenKind::Ident(_), .. })));
        if starts_number {
            let mut text = String::new();
            if c == '-' {
                text.push('-');
                cur.bump();
            }
            while let Some(d) = cur.peek() {
                if d.is_ascii_digit() {
                    text.push(d);
                    cur.bump();
                } else if d == '.' && cur.peek_at(1).is_some_and(|n| n.is_ascii_digit()) && !text.contains('.') {
                    text.push('.');
                    cur.bump();
                } else {
                    break;
                }
            }
            if matches!(cur.peek(), Some(ch) if ch.is_ascii_alphabetic() || ch == '_') && !text.is_empty() {
                // a number glued to letters must be a duration
                let upos = cur.pos();
                let mut unit = String::new();
                while let Some(ch) = cur.peek() {
                    if ch.is_ascii_alphanumeric() || ch == '_' {
                        unit.push(ch);
                        cur.bump();
                    } else {
                        break;
                    }
                }
                if text.starts_with('-') {
                    return Err(LexError { message: "negative duration".into(), pos: start });
                }
                let us = duration_to_us(&text, &unit).map_err(|m| LexError {
                    message: m,
                    pos: if unit.is_empty() { start } else { upos },
                })?;
                out.push(Token { kind: TokenKind::Duration(us), pos: start });
                continue;
            }
            // `5 ms`: look past blanks on the same line for a unit word
            let save = (cur.idx, cur.line, cur.col);
            let mut skipped = false;
            while matches!(cur.peek(), Some(' ') | Some('\t')) {
                cur.bump();
                skipped = true;
            }
            if skipped {
                let mut unit = String::new();
                let mut n = 0;
                while let Some(ch) = cur.peek_at(n) {
                    if ch.is_ascii_alphanumeric() || ch == '_' {
                        unit.push(ch);
                        n += 1;
                    } else {
                        break;
                    }
                }
                if matches!(unit.as_str(), "us" | "ms" | "s") && !text.starts_with('-') {
                    for _ in 0..n {
                        cur.bump();
                    }
                    let us = duration_to_us(&text, &unit).map_err(|m| LexError { message: m, pos: start })?;
                    out.push(Token { kind: TokenKind::Duration(us), pos: start });
                    continue;
                }
            }
            cur.idx = save.0;
            cur.line = save.1;
            cur.col = save.2;
            out.push(Token { kind: TokenKind::Number(text), pos: start });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut word = String::new();
            while let Some(ch) = cur.peek() {
                if ch.is_ascii_alphanumeric() || ch == '_' {
                    word.push(ch);
                    cur.bump();
                } else {
                    break;
                }
            }
            let kind = match Keyword::from_word(&word) {
                Some(k) => TokenKind::Keyword(k),
                None => TokenKind::Ident(word),
            };
            out.push(Token { kind, pos: start });
            continue;
        }
        let two = (c, cur.peek_at(1));
        let kind = match two {
            (':', Some(':')) => {
                cur.bump();
                TokenKind::ColonColon
            }
            ('.', Some('.')) => {
                cur.bump();
                TokenKind::DotDot
            }
            ('=', Some('>')) => {
                cur.bump();
                TokenKind::FatArrow
            }
            ('{', _) => TokenKind::LBrace,
            ('}', _) => TokenKind::RBrace,
            ('(', _) => TokenKind::LParen,
            (')', _) => TokenKind::RParen,
            ('[', _) => TokenKind::LBracket,
            (']', _) => TokenKind::RBracket,
            ('<', _) => TokenKind::Lt,
            ('>', _) => TokenKind::Gt,
            (';', _) => TokenKind::Semi,
            (',', _) => TokenKind::Comma,
            ('.', _) => TokenKind::Dot,
            ('/', _) => TokenKind::Slash,
            _ => {
                return Err(LexError { message: format!("illegal character `{}`", c), pos: start });
            }
        };
        cur.bump();
        out.push(Token { kind, pos: start });
    }
    Ok(out)
}
