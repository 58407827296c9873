//! Runtime checks on a finished trace, derived from the declared timing
//! only (not from the events the simulator chose to emit about itself).

use super::trace::{EventKind, Trace};
use crate::semantic::SystemModel;
use crate::spec_ast::Timing;
use serde::Serialize;
use std::collections::HashMap;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ViolationKind {
    WcetOverrun,
    DeadlineMiss,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub time: u64,
    pub kind: ViolationKind,
    /// Codel label or task name.
    pub subject: String,
    pub measured: u64,
    pub declared: u64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ViolationKind::WcetOverrun => write!(
                f,
                "{}us: WCET overrun of {}: ran {}us, declared {}us",
                self.time, self.subject, self.measured, self.declared
            ),
            ViolationKind::DeadlineMiss => write!(
                f,
                "{}us: deadline miss of {}: busy for {}us at its period signal (period {}us)",
                self.time, self.subject, self.measured, self.declared
            ),
        }
    }
}

/// Flags codels that ran longer than their WCET and period signals that
/// reach a task while it still holds a core.
pub fn monitor(trace: &Trace, model: &SystemModel) -> Vec<Violation> {
    let wcet: HashMap<&str, u64> = model.codels.iter().map(|c| (c.label.as_str(), c.wcet_us)).collect();
    let mut period: HashMap<String, u64> = HashMap::new();
    for c in &model.components {
        for t in &c.spec.tasks {
            if let Timing::Periodic { period_us } = t.timing {
                period.insert(format!("{}/{}", c.name(), t.name), period_us);
            }
        }
    }
    let mut started: HashMap<&str, u64> = HashMap::new();
    let mut busy_since: HashMap<&str, u64> = HashMap::new();
    let mut out = Vec::new();
    for e in &trace.events {
        match e.kind {
            EventKind::CodelStarted => {
                started.insert(&e.subject, e.time);
            }
            EventKind::CodelEnded => {
                let (Some(t0), Some(label)) = (started.remove(e.subject.as_str()), e.codel.as_deref()) else { continue };
                let declared = wcet.get(label).copied().unwrap_or(u64::MAX);
                if e.time - t0 > declared {
                    out.push(Violation {
                        time: e.time,
                        kind: ViolationKind::WcetOverrun,
                        subject: label.to_string(),
                        measured: e.time - t0,
                        declared,
                    });
                }
            }
            EventKind::CoreAcquired => {
                busy_since.insert(&e.subject, e.time);
            }
            EventKind::CycleEnded => {
                busy_since.remove(e.subject.as_str());
            }
            EventKind::PeriodSignal => {
                if let (Some(&since), Some(&p)) = (busy_since.get(e.subject.as_str()), period.get(&e.subject)) {
                    out.push(Violation {
                        time: e.time,
                        kind: ViolationKind::DeadlineMiss,
                        subject: e.subject.clone(),
                        measured: e.time - since,
                        declared: p,
                    });
                }
            }
            _ => {}
        }
    }
    out
}
