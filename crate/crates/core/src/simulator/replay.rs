//! Re-execution of a recorded trace against the timed semantics.
//!
//! The decisions of a trace (codel ends with their yield, request arrivals,
//! period signals) are extracted with their instants, checked for timing
//! feasibility one by one and re-fired; every event the re-execution emits
//! must then match the recorded one.

use super::trace::{EventKind, Trace, TraceEvent};
use super::Runner;
use crate::tts::{Executor, TimedEdge, Tts};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("event {index}: {message}")]
pub struct ReplayError {
    /// Index of the first offending trace event.
    pub index: usize,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ReplayOutcome {
    /// Number of decisions re-executed.
    pub steps: usize,
    /// Property violations and deadline misses confirmed by the replay.
    pub confirmed: Vec<String>,
}

/// Detail marking a bounded-response violation found by letting time pass.
pub const BOUND_EXCEEDED: &str = "bound exceeded";

fn executors(tts: &Tts) -> HashMap<String, Executor> {
    let mut m = HashMap::new();
    for t in 0..tts.tasks.len() {
        m.insert(tts.executor_name(Executor::Task(t as u16)), Executor::Task(t as u16));
    }
    for c in 0..tts.controls.len() {
        m.insert(tts.executor_name(Executor::Control(c as u16)), Executor::Control(c as u16));
    }
    for s in 0..tts.slots.len() {
        m.insert(tts.executor_name(Executor::Slot(s as u16)), Executor::Slot(s as u16));
    }
    m
}

/// Timed decisions of a trace, with the index of the event that records
/// each of them. Period signals at time zero belong to the launch.
pub fn schedule_of(tts: &Tts, trace: &Trace) -> Result<Vec<(u64, TimedEdge, usize)>, ReplayError> {
    let names = executors(tts);
    let mut out: Vec<(u64, TimedEdge, usize)> = Vec::new();
    let mut arrivals = 0u16;
    let mut i = 0;
    let ev = &trace.events;
    while i < ev.len() {
        let e = &ev[i];
        match e.kind {
            EventKind::CodelEnded => {
                let exec = *names
                    .get(&e.subject)
                    .ok_or_else(|| ReplayError { index: i, message: format!("unknown executor `{}`", e.subject) })?;
                out.push((e.time, TimedEdge::CodelEnd { exec, choice: e.choice.unwrap_or(0) }, i));
            }
            EventKind::RequestArrived => {
                out.push((e.time, TimedEdge::Arrival(arrivals), i));
                arrivals += 1;
            }
            EventKind::PeriodSignal if e.time > 0 => {
                let first = i;
                let mut set = Vec::new();
                while i < ev.len() && ev[i].time == e.time && matches!(ev[i].kind, EventKind::PeriodSignal | EventKind::DeadlineMiss) {
                    if ev[i].kind == EventKind::PeriodSignal {
                        let t = tts
                            .task_index(&ev[i].subject)
                            .ok_or_else(|| ReplayError { index: i, message: format!("unknown task `{}`", ev[i].subject) })?;
                        set.push(t as u16);
                    }
                    i += 1;
                }
                out.push((e.time, TimedEdge::Period(set), first));
                continue;
            }
            _ => {}
        }
        i += 1;
    }
    Ok(out)
}

/// Checks that `edge` may fire at `t` from the current run state.
fn feasible(run: &Runner, t: u64, edge: &TimedEdge) -> Result<(), String> {
    let tts = run.tts;
    if t < run.clocks.now {
        return Err(format!("time goes backwards ({} < {})", t, run.clocks.now));
    }
    for (exec, (start, codel)) in &run.starts {
        let c = &tts.codels[*codel as usize];
        if t - start > c.wcet as u64 {
            return Err(format!("{} would run {} past its WCET", tts.executor_name(*exec), c.label));
        }
    }
    for (due, task) in run.period_due() {
        if due < t {
            return Err(format!("period signal of {} due at {} is missing", tts.tasks[task as usize].name, due));
        }
    }
    if let Some(a) = tts.arrivals.get(run.d.arrivals_done as usize) {
        if t > a.hi as u64 {
            return Err(format!("request {} not sent by {}", tts.service_name(a.component, a.service), a.hi));
        }
    }
    match edge {
        TimedEdge::CodelEnd { exec, choice } => {
            let (start, codel) = run.starts.get(exec).ok_or_else(|| format!("{} runs no codel", tts.executor_name(*exec)))?;
            let c = &tts.codels[*codel as usize];
            if t - start < c.min as u64 {
                return Err(format!("{} ends before its minimum duration", c.label));
            }
            if *choice >= tts.choices(&run.d, *exec) {
                return Err(format!("{} has no yield #{}", c.label, choice));
            }
        }
        TimedEdge::Arrival(k) => {
            if *k != run.d.arrivals_done {
                return Err("request out of order".into());
            }
            let a = tts.arrivals.get(*k as usize).ok_or("no such request")?;
            if t < a.lo as u64 {
                return Err(format!("request {} sent before {}", tts.service_name(a.component, a.service), a.lo));
            }
        }
        TimedEdge::Period(set) => {
            let due: Vec<u16> = run.period_due().into_iter().filter(|(d, _)| *d == t).map(|(_, i)| i).collect();
            if set.is_empty() || *set != due {
                return Err("period signals do not match their due instants".into());
            }
        }
        TimedEdge::Diverge => {}
    }
    Ok(())
}

/// Runs a timed schedule from launch. Fails at the first infeasible step
/// (index into `schedule`).
pub(crate) fn run_schedule<'a>(tts: &'a Tts, schedule: &[(u64, TimedEdge)]) -> Result<Runner<'a>, (usize, String)> {
    let mut run = Runner::new(tts);
    run.launch();
    for (i, (t, edge)) in schedule.iter().enumerate() {
        feasible(&run, *t, edge).map_err(|m| (i, m))?;
        run.advance(*t);
        run.fire(edge);
    }
    Ok(run)
}

fn same(a: &TraceEvent, b: &TraceEvent) -> bool {
    a.time == b.time && a.kind == b.kind && a.subject == b.subject && a.codel == b.codel && a.choice == b.choice
}

/// Replays `trace` on `tts`; the TTS must carry the properties the trace
/// reports on.
pub fn replay(trace: &Trace, tts: &Tts) -> Result<ReplayOutcome, ReplayError> {
    let schedule = schedule_of(tts, trace)?;
    let plain: Vec<(u64, TimedEdge)> = schedule.iter().map(|(t, e, _)| (*t, e.clone())).collect();
    let run = run_schedule(tts, &plain).map_err(|(i, message)| ReplayError { index: schedule[i].2, message })?;
    let produced = &run.rec.events;
    let recorded = &trace.events;
    for (i, (p, r)) in produced.iter().zip(recorded).enumerate() {
        if !same(p, r) {
            return Err(ReplayError { index: i, message: format!("expected `{}`, replay produced `{}`", r, p) });
        }
    }
    if produced.len() > recorded.len() {
        return Err(ReplayError {
            index: recorded.len(),
            message: format!("trace ends early; replay continues with `{}`", produced[recorded.len()]),
        });
    }
    let mut confirmed: Vec<String> = produced
        .iter()
        .filter(|e| matches!(e.kind, EventKind::PropertyViolated | EventKind::DeadlineMiss))
        .map(|e| e.subject.clone())
        .collect();
    // trailing bound-exceeded events: time passes without the target
    for (i, r) in recorded.iter().enumerate().skip(produced.len()) {
        let ok = r.kind == EventKind::PropertyViolated && r.detail == BOUND_EXCEEDED && r.time >= run.clocks.now && {
            tts.observers.iter().enumerate().any(|(k, o)| {
                tts.property_names[o.property] == r.subject
                    && run.d.observers[k].pending
                    && run.clocks.reset_at[o.clock].is_some_and(|x0| r.time - x0 > o.hi as u64)
                    && tts.invariants_of(&run.d).iter().all(|&(c, v)| run.clocks.reset_at[c].is_none_or(|c0| r.time - c0 <= v as u64))
            })
        };
        if !ok {
            return Err(ReplayError { index: i, message: format!("unexpected event `{}`", r) });
        }
        confirmed.push(r.subject.clone());
    }
    Ok(ReplayOutcome { steps: schedule.len(), confirmed })
}
