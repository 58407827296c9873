//! Graphviz rendering of codel state machines.

use crate::spec_ast::{CodelDecl, ServiceDecl, TaskDecl, YieldTarget};
use std::fmt::Write;

/// FSM of an activity: one node per state plus `ether`, one edge per yield.
/// Pause yields are dashed; async codels are annotated.
pub fn generate_dot(service: &ServiceDecl) -> String {
    machine(&service.name, &service.codels)
}

/// Permanent activity of a task.
pub fn generate_task_dot(task: &TaskDecl) -> String {
    machine(&task.name, &task.codels)
}

fn machine(name: &str, codels: &[CodelDecl]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph \"{}\" {{", name);
    out.push_str("  rankdir=LR;\n  node [shape=circle];\n");
    for c in codels {
        let state = c.state.as_deref().unwrap_or("");
        let wcet = c.wcet_us.map(|w| format!("\\n{}us", w)).unwrap_or_default();
        if c.is_async {
            let _ = writeln!(out, "  \"{}\" [label=\"{}\\n{}{}\\n(async)\", style=bold];", state, state, c.function, wcet);
        } else {
            let _ = writeln!(out, "  \"{}\" [label=\"{}\\n{}{}\"];", state, state, c.function, wcet);
        }
    }
    out.push_str("  \"ether\" [shape=doublecircle];\n");
    for c in codels {
        let from = c.state.as_deref().unwrap_or("");
        for y in &c.yields {
            match y {
                YieldTarget::Ether => {
                    let _ = writeln!(out, "  \"{}\" -> \"ether\";", from);
                }
                YieldTarget::State { name, pause: true } => {
                    let _ = writeln!(out, "  \"{}\" -> \"{}\" [style=dashed, label=\"pause\"];", from, name);
                }
                YieldTarget::State { name, pause: false } => {
                    let _ = writeln!(out, "  \"{}\" -> \"{}\";", from, name);
                }
            }
        }
    }
    out.push_str("}\n");
    out
}
