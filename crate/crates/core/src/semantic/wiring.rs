//! Port wiring files: one `writer.outport -> reader.inport` per line.

use crate::diag::{Diagnostic, Pos};
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PortRef {
    pub component: String,
    pub port: String,
}

impl std::fmt::Display for PortRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}.{}", self.component, self.port)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Connection {
    pub from: PortRef,
    pub to: PortRef,
    pub pos: Pos,
}

pub fn parse_wiring(source: &str) -> Result<Vec<Connection>, Diagnostic> {
    let mut out = Vec::new();
    for (i, raw) in source.lines().enumerate() {
        let line_no = i as u32 + 1;
        let line = raw.split('#').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        let col = (raw.len() - raw.trim_start().len()) as u32 + 1;
        let pos = Pos::new(line_no, col);
        let (lhs, rhs) = line
            .split_once("->")
            .ok_or_else(|| Diagnostic::error("expected `writer.port -> reader.port`", Some(pos)))?;
        let from = port_ref(lhs).ok_or_else(|| Diagnostic::error(format!("malformed port reference `{}`", lhs.trim()), Some(pos)))?;
        let to = port_ref(rhs).ok_or_else(|| {
            let c = line.find("->").map(|p| p as u32 + 3).unwrap_or(col);
            Diagnostic::error(format!("malformed port reference `{}`", rhs.trim()), Some(Pos::new(line_no, c)))
        })?;
        out.push(Connection { from, to, pos });
    }
    Ok(out)
}

fn port_ref(s: &str) -> Option<PortRef> {
    let (c, p) = s.trim().split_once('.')?;
    let ok = |w: &str| !w.is_empty() && w.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '_');
    (ok(c) && ok(p)).then(|| PortRef { component: c.to_string(), port: p.to_string() })
}
