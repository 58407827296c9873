//! Canonical printer for component specifications.
//!
//! Output re-parses to a structurally identical tree. Durations are always
//! printed in microseconds and declarations are grouped by category.

use super::ast::*;
use std::fmt::Write;

pub fn pretty_print(spec: &ComponentSpec) -> String {
    let services: Vec<&ServiceDecl> = spec.user_services().collect();
    if spec.ports.is_empty() && spec.exceptions.is_empty() && spec.ids.is_empty() && spec.tasks.is_empty() && services.is_empty()
    {
        return format!("component {} {{}};\n", spec.name);
    }
    let mut out = String::new();
    let _ = writeln!(out, "component {} {{", spec.name);
    for p in &spec.ports {
        let dir = match p.dir {
            PortDir::In => "in",
            PortDir::Out => "out",
        };
        let _ = writeln!(out, "  port {} {} {};", dir, p.type_name, p.name);
    }
    if !spec.exceptions.is_empty() {
        let _ = writeln!(out, "  exception {};", spec.exceptions.join(", "));
    }
    if !spec.ids.is_empty() {
        out.push_str("  ids {\n");
        for f in &spec.ids {
            let _ = writeln!(out, "    {} {};", f.type_name, f.name);
        }
        out.push_str("  };\n");
    }
    for t in &spec.tasks {
        let _ = writeln!(out, "  task {} {{", t.name);
        if let Timing::Periodic { period_us } = t.timing {
            let _ = writeln!(out, "    period {}us;", period_us);
        }
        for c in &t.codels {
            let _ = writeln!(out, "    {}", codel_line(c));
        }
        out.push_str("  };\n");
    }
    for s in services {
        let args: Vec<String> = s
            .args
            .iter()
            .map(|a| match &a.type_name {
                Some(t) => format!("{} {} {}", a.dir.as_str(), t, a.name),
                None => format!("{} {}", a.dir.as_str(), a.name),
            })
            .collect();
        let head = format!("  {} {}({})", s.kind.as_str(), s.name, args.join(", "));
        let has_body = s.doc.is_some()
            || s.task.is_some()
            || !s.locals.is_empty()
            || s.validate.is_some()
            || !s.codels.is_empty()
            || !s.throws.is_empty()
            || !s.interrupts.is_empty();
        if !has_body {
            let _ = writeln!(out, "{};", head);
            continue;
        }
        let _ = writeln!(out, "{} {{", head);
        if let Some(doc) = &s.doc {
            let _ = writeln!(out, "    doc \"{}\";", escape(doc));
        }
        if let Some(task) = &s.task {
            let _ = writeln!(out, "    task {};", task);
        }
        for l in &s.locals {
            let _ = writeln!(out, "    local {} {};", l.type_name, l.name);
        }
        if let Some(v) = &s.validate {
            let mut line = format!("    validate {}({})", v.function, codel_args(&v.args));
            push_timing(&mut line, v);
            let _ = writeln!(out, "{};", line);
        }
        for c in &s.codels {
            let _ = writeln!(out, "    {}", codel_line(c));
        }
        if !s.throws.is_empty() {
            let _ = writeln!(out, "    throw {};", s.throws.join(", "));
        }
        if !s.interrupts.is_empty() {
            let _ = writeln!(out, "    interrupt {};", s.interrupts.join(", "));
        }
        out.push_str("  };\n");
    }
    out.push_str("};\n");
    out
}

fn codel_line(c: &CodelDecl) -> String {
    let mut line = String::new();
    if c.is_async {
        line.push_str("async ");
    }
    line.push_str("codel");
    if let Some(st) = &c.state {
        let _ = write!(line, "<{}>", st);
    }
    let _ = write!(line, " {}({})", c.function, codel_args(&c.args));
    if !c.yields.is_empty() {
        let ys: Vec<String> = c
            .yields
            .iter()
            .map(|y| match y {
                YieldTarget::Ether => "ether".to_string(),
                YieldTarget::State { name, pause: true } => format!("pause::{}", name),
                YieldTarget::State { name, pause: false } => name.clone(),
            })
            .collect();
        let _ = write!(line, " yield {}", ys.join(", "));
    }
    push_timing(&mut line, c);
    line.push(';');
    line
}

fn push_timing(line: &mut String, c: &CodelDecl) {
    if let Some(w) = c.wcet_us {
        let _ = write!(line, " wcet {}us", w);
    }
    if let Some(m) = c.min_us {
        let _ = write!(line, " min {}us", m);
    }
}

fn codel_args(args: &[CodelArg]) -> String {
    args.iter()
        .map(|a| match &a.path {
            ArgPath::Name(n) => format!("{} {}", a.dir.as_str(), n),
            ArgPath::AllIds => format!("{} ::ids", a.dir.as_str()),
        })
        .collect::<Vec<_>>()
        .join(", ")
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out
}
