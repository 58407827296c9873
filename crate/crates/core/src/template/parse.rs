//! Splitting template text into literal text and marker segments.

use crate::diag::Pos;
use serde::Serialize;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Segment {
    Literal(String),
    /// `<' code '>`: evaluated for effect, produces no text.
    Eval { code: String, pos: Pos },
    /// `<" expr ">`: replaced by the value of `expr`.
    Subst { code: String, pos: Pos },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Template {
    pub segments: Vec<Segment>,
}

impl Template {
    pub fn count(&self) -> (usize, usize, usize) {
        let mut n = (0, 0, 0);
        for s in &self.segments {
            match s {
                Segment::Literal(_) => n.0 += 1,
                Segment::Eval { .. } => n.1 += 1,
                Segment::Subst { .. } => n.2 += 1,
            }
        }
        n
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{pos}: {message}")]
pub struct TemplateError {
    pub message: String,
    pub pos: Pos,
}

impl TemplateError {
    pub(crate) fn new(message: impl Into<String>, pos: Pos) -> Self {
        TemplateError { message: message.into(), pos }
    }
}

/// Splits `source` at `<' '>` and `<" ">` markers.
///
/// A newline directly after an Eval marker is dropped so that lines holding
/// only control code leave no blank line in the output.
pub fn parse_template(source: &str) -> Result<Template, TemplateError> {
    let chars: Vec<char> = source.chars().collect();
    let mut segments = Vec::new();
    let mut lit = String::new();
    let (mut line, mut col) = (1u32, 1u32);
    let mut i = 0;
    let advance = |c: char, line: &mut u32, col: &mut u32| {
        if c == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        if c == '<' && matches!(chars.get(i + 1), Some('\'') | Some('"')) {
            let quote = chars[i + 1];
            let pos = Pos::new(line, col);
            let mut j = i + 2;
            let (mut l2, mut c2) = (line, col + 2);
            let mut code = String::new();
            let mut closed = false;
            while j < chars.len() {
                if chars[j] == quote && chars.get(j + 1) == Some(&'>') {
                    closed = true;
                    break;
                }
                if chars[j] == '<' && matches!(chars.get(j + 1), Some('\'') | Some('"')) {
                    return Err(TemplateError::new("nested template marker", Pos::new(l2, c2)));
                }
                code.push(chars[j]);
                advance(chars[j], &mut l2, &mut c2);
                j += 1;
            }
            if !closed {
                return Err(TemplateError::new(format!("unterminated `<{}` marker", quote), pos));
            }
            if !lit.is_empty() {
                segments.push(Segment::Literal(std::mem::take(&mut lit)));
            }
            line = l2;
            col = c2 + 2;
            i = j + 2;
            if quote == '\'' {
                segments.push(Segment::Eval { code, pos });
                if chars.get(i) == Some(&'\n') {
                    i += 1;
                    line += 1;
                    col = 1;
                } else if chars.get(i) == Some(&'\r') && chars.get(i + 1) == Some(&'\n') {
                    i += 2;
                    line += 1;
                    col = 1;
                }
            } else {
                segments.push(Segment::Subst { code, pos });
            }
            continue;
        }
        lit.push(c);
        advance(c, &mut line, &mut col);
        i += 1;
    }
    if !lit.is_empty() {
        segments.push(Segment::Literal(lit));
    }
    Ok(Template { segments })
}
