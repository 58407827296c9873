//! Source positions and diagnostics shared by every front-end stage.

use serde::Serialize;
use std::fmt;

/// A 1-based line/column position in a source file.
///
/// Positions never participate in structural equality: two syntax trees that
/// differ only in where their nodes came from compare equal. This is what
/// makes `parse(pretty(parse(src))) == parse(src)` a meaningful check.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl Pos {
    pub fn new(line: u32, col: u32) -> Self {
        Pos { line, col }
    }
}

impl PartialEq for Pos {
    fn eq(&self, _other: &Self) -> bool {
        true
    }
}

impl Eq for Pos {}

impl std::hash::Hash for Pos {
    fn hash<H: std::hash::Hasher>(&self, _state: &mut H) {}
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Info,
    Warning,
    Error,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Info => "info",
            Severity::Warning => "warning",
            Severity::Error => "error",
        })
    }
}

/// One diagnostic, rendered as `file:line:col: severity: message`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
    pub file: Option<String>,
    pub pos: Option<Pos>,
}

impl Diagnostic {
    pub fn error(message: impl Into<String>, pos: Option<Pos>) -> Self {
        Diagnostic { severity: Severity::Error, message: message.into(), file: None, pos }
    }

    pub fn warning(message: impl Into<String>, pos: Option<Pos>) -> Self {
        Diagnostic { severity: Severity::Warning, message: message.into(), file: None, pos }
    }

    pub fn info(message: impl Into<String>, pos: Option<Pos>) -> Self {
        Diagnostic { severity: Severity::Info, message: message.into(), file: None, pos }
    }

    pub fn in_file(mut self, file: impl Into<String>) -> Self {
        self.file = Some(file.into());
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let file = self.file.as_deref().unwrap_or("<input>");
        match self.pos {
            Some(p) => write!(f, "{}:{}:{}: {}: {}", file, p.line, p.col, self.severity, self.message),
            None => write!(f, "{}: {}: {}", file, self.severity, self.message),
        }
    }
}
