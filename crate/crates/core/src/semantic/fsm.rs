//! Structural checks on codel state machines.

use crate::diag::Diagnostic;
use crate::spec_ast::{CodelDecl, ServiceDecl, ServiceKind, TaskDecl, YieldTarget};
use std::collections::{BTreeSet, VecDeque};

/// Checks an activity's FSM, validate codel and body timings.
pub fn validate_fsm(service: &ServiceDecl) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    if let Some(v) = &service.validate {
        if v.wcet_us.is_none() {
            diags.push(Diagnostic::error(
                format!("validate codel `{}` of `{}` has no wcet", v.function, service.name),
                Some(v.pos),
            ));
        }
    }
    match service.kind {
        ServiceKind::Activity => {
            check_machine(&service.name, &service.codels, true, &mut diags);
            if service.codel_for_state("stop").is_none() {
                diags.push(Diagnostic::info(
                    format!("`{}`: no stop codel: interruption terminates at next yield", service.name),
                    Some(service.pos),
                ));
            }
        }
        ServiceKind::Function | ServiceKind::Attribute => {
            for c in &service.codels {
                if c.wcet_us.is_none() {
                    diags.push(Diagnostic::error(
                        format!("codel `{}` of `{}` has no wcet", c.function, service.name),
                        Some(c.pos),
                    ));
                }
            }
        }
    }
    diags
}

/// Checks a task's permanent activity, if it has one.
pub fn validate_task_fsm(task: &TaskDecl) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    if task.has_permanent() {
        check_machine(&task.name, &task.codels, false, &mut diags);
    }
    diags
}

/// Permanent activities may cycle forever (they end with the component), so
/// only requested activities must be able to reach `ether`.
fn check_machine(owner: &str, codels: &[CodelDecl], must_terminate: bool, diags: &mut Vec<Diagnostic>) {
    let states: BTreeSet<&str> = codels.iter().filter_map(|c| c.state.as_deref()).collect();
    let by_state = |s: &str| codels.iter().find(|c| c.state.as_deref() == Some(s));
    let Some(start) = by_state("start") else {
        diags.push(Diagnostic::error(format!("`{}` has no start codel", owner), None));
        return;
    };
    let mut bad_targets = false;
    for c in codels {
        if c.wcet_us.is_none() {
            diags.push(Diagnostic::error(format!("codel `{}` of `{}` has no wcet", c.function, owner), Some(c.pos)));
        }
        if c.yields.is_empty() {
            diags.push(Diagnostic::error(format!("codel `{}` of `{}` declares no yield", c.function, owner), Some(c.pos)));
        }
        for y in &c.yields {
            if let Some(t) = y.state_name() {
                if !states.contains(t) {
                    bad_targets = true;
                    diags.push(Diagnostic::error(
                        format!("yield target `{}` of codel `{}` is not a state of `{}`", t, c.function, owner),
                        Some(c.pos),
                    ));
                }
            }
        }
    }
    if bad_targets {
        return;
    }
    let reach = |from: &str| -> (BTreeSet<String>, bool) {
        let mut seen = BTreeSet::new();
        let mut ether = false;
        let mut q = VecDeque::from([from.to_string()]);
        seen.insert(from.to_string());
        while let Some(s) = q.pop_front() {
            if let Some(c) = by_state(&s) {
                for y in &c.yields {
                    match y {
                        YieldTarget::Ether => ether = true,
                        YieldTarget::State { name, .. } => {
                            if seen.insert(name.clone()) {
                                q.push_back(name.clone());
                            }
                        }
                    }
                }
            }
        }
        (seen, ether)
    };
    let (from_start, ether_from_start) = reach("start");
    let stop = by_state("stop");
    let (from_stop, ether_from_stop) = match stop {
        Some(_) => reach("stop"),
        None => (BTreeSet::new(), false),
    };
    if let Some(s) = stop {
        if !ether_from_stop {
            diags.push(Diagnostic::error(
                format!("`{}`: ether unreachable from the stop codel `{}`", owner, s.function),
                Some(s.pos),
            ));
        }
    }
    if must_terminate && !ether_from_start && !ether_from_stop {
        diags.push(Diagnostic::error(format!("`{}`: ether unreachable", owner), Some(start.pos)));
    }
    for c in codels {
        if let Some(st) = c.state.as_deref() {
            if !from_start.contains(st) && !from_stop.contains(st) {
                diags.push(Diagnostic::warning(
                    format!("`{}`: state `{}` is unreachable", owner, st),
                    Some(c.pos),
                ));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diag::Severity;
    use crate::spec_ast::parse_component;

    fn svc(body: &str) -> ServiceDecl {
        let src = format!("component x {{ task t {{}}; activity a() {{ task t; {} }}; }};", body);
        parse_component(&src).unwrap().service("a").unwrap().clone()
    }

    #[test]
    fn self_loop_without_pause_never_terminates() {
        let d = validate_fsm(&svc("codel<start> f() yield start wcet 1us;"));
        assert!(d.iter().any(|d| d.is_error() && d.message.ends_with("ether unreachable")), "{d:?}");
    }

    #[test]
    fn stop_provides_termination() {
        let d = validate_fsm(&svc("codel<start> f() yield pause::start wcet 1us; codel<stop> g() yield ether wcet 1us;"));
        assert!(d.is_empty(), "{d:?}");
    }

    #[test]
    fn missing_stop_is_info() {
        let d = validate_fsm(&svc("codel<start> f() yield ether wcet 1us;"));
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].severity, Severity::Info);
        assert!(d[0].message.contains("no stop codel: interruption terminates at next yield"));
    }

    #[test]
    fn undeclared_target_and_missing_wcet() {
        let d = validate_fsm(&svc("codel<start> f() yield nowhere;"));
        assert!(d.iter().any(|d| d.message.contains("`nowhere`")));
        assert!(d.iter().any(|d| d.message.contains("has no wcet")));
    }

    #[test]
    fn unreachable_state_warned() {
        let d = validate_fsm(&svc("codel<start> f() yield ether wcet 1us; codel<island> g() yield ether wcet 1us;"));
        assert!(d.iter().any(|d| d.severity == Severity::Warning && d.message.contains("`island`")));
    }
}
