//! Discrete-event execution of the timed model with concrete durations.
//!
//! The simulator drives the same discrete engine as the verifier, with
//! integer clocks instead of zones. Durations come from a [`DurationPolicy`];
//! yield choices and arrival instants inside scenario windows are drawn from
//! a seeded ChaCha generator, so a run is a pure function of its inputs.

mod monitor;
mod replay;
mod trace;

pub use monitor::{monitor, Violation, ViolationKind};
pub use replay::{replay, schedule_of, ReplayError, ReplayOutcome, BOUND_EXCEEDED};
pub(crate) use replay::run_schedule;
pub use trace::{EventKind, Trace, TraceEvent};

use crate::semantic::SystemModel;
use crate::spec_ast::Scenario;
use crate::tts::{build_tts, Clocks, ClockId, Discrete, Engine, EngineEvent, Executor, Sink, TimedEdge, Tts, TtsError, TtsOptions, PERMANENT};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DurationPolicy {
    /// Every codel runs exactly its WCET.
    Fixed,
    /// Uniform integer duration in `[min, wcet]`.
    Uniform,
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub seed: u64,
    pub cores: u32,
    pub policy: DurationPolicy,
    /// Duration overrides, keyed by codel function name or label.
    pub inject: Vec<(String, u64)>,
    pub horizon: u64,
    pub exclusive_locks: bool,
    pub max_events: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: 0,
            cores: 1,
            policy: DurationPolicy::Fixed,
            inject: Vec::new(),
            horizon: 1_000_000,
            exclusive_locks: false,
            max_events: 1_000_000,
        }
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Model(#[from] TtsError),
    #[error("horizon must be positive")]
    NoHorizon,
}

pub fn simulate(model: &SystemModel, scenario: &Scenario, cfg: &SimConfig) -> Result<Trace, SimError> {
    if cfg.horizon == 0 {
        return Err(SimError::NoHorizon);
    }
    let tts = build_tts(model, cfg.cores, scenario, &TtsOptions { exclusive_locks: cfg.exclusive_locks, ..Default::default() })?;
    Ok(simulate_tts(&tts, cfg))
}

/// Integer clocks stored as reset instants.
#[derive(Clone, Debug)]
pub(crate) struct ConcreteClocks {
    pub now: u64,
    pub reset_at: Vec<Option<u64>>,
}

impl ConcreteClocks {
    pub fn value(&self, c: ClockId) -> Option<u64> {
        self.reset_at[c].map(|r| self.now - r)
    }
}

impl Clocks for ConcreteClocks {
    fn reset(&mut self, c: ClockId) {
        self.reset_at[c] = Some(self.now);
    }

    fn free(&mut self, c: ClockId) {
        self.reset_at[c] = None;
    }

    fn may_be_below(&self, c: ClockId, v: u32) -> bool {
        self.value(c).is_some_and(|x| x < v as u64)
    }
}

/// Converts engine events to trace events at the current instant.
pub(crate) struct Recorder<'a> {
    tts: &'a Tts,
    now: u64,
    pub events: Vec<TraceEvent>,
    /// Codels started since the last drain.
    pub started: Vec<(Executor, u32)>,
}

impl<'a> Recorder<'a> {
    fn new(tts: &'a Tts) -> Self {
        Recorder { tts, now: 0, events: Vec::new(), started: Vec::new() }
    }

    pub(crate) fn push(&mut self, kind: EventKind, subject: String, codel: Option<u32>, choice: Option<u8>, detail: String) {
        self.events.push(TraceEvent {
            time: self.now,
            kind,
            subject,
            codel: codel.map(|c| self.tts.codels[c as usize].label.clone()),
            choice,
            detail,
        });
    }
}

impl Sink for Recorder<'_> {
    fn event(&mut self, ev: EngineEvent) {
        let tts = self.tts;
        match ev {
            EngineEvent::RequestArrived { component, service } => {
                self.push(EventKind::RequestArrived, tts.service_name(component, service), None, None, String::new())
            }
            EngineEvent::ValidateRun { component, service } => {
                self.push(EventKind::ValidateRun, tts.service_name(component, service), None, None, String::new())
            }
            EngineEvent::InstanceStarted { task, service } => {
                let t = &tts.tasks[task as usize];
                self.push(EventKind::InstanceStarted, tts.service_name(t.component, service), None, None, t.name.clone())
            }
            EngineEvent::CodelStarted { exec, codel } => {
                self.started.push((exec, codel));
                self.push(EventKind::CodelStarted, tts.executor_name(exec), Some(codel), None, String::new())
            }
            EngineEvent::CodelEnded { exec, codel, choice } => {
                let detail = if choice.is_none() && matches!(exec, Executor::Task(_) | Executor::Slot(_)) {
                    "interrupted".to_string()
                } else {
                    String::new()
                };
                self.push(EventKind::CodelEnded, tts.executor_name(exec), Some(codel), choice, detail)
            }
            EngineEvent::LockWaitStarted { exec, codel } => {
                self.push(EventKind::LockWaitStarted, tts.executor_name(exec), Some(codel), None, String::new())
            }
            EngineEvent::LockWaitEnded { exec, codel } => {
                self.push(EventKind::LockWaitEnded, tts.executor_name(exec), Some(codel), None, String::new())
            }
            EngineEvent::PeriodSignal { task } => {
                self.push(EventKind::PeriodSignal, tts.tasks[task as usize].name.clone(), None, None, String::new())
            }
            EngineEvent::DeadlineMiss { task } => {
                self.push(EventKind::DeadlineMiss, tts.tasks[task as usize].name.clone(), None, None, String::new())
            }
            EngineEvent::ReportSent { component, service, interrupted } => {
                let subject = if service == PERMANENT {
                    format!("{}.permanent", tts.component_names[component])
                } else {
                    tts.service_name(component, service)
                };
                self.push(EventKind::ReportSent, subject, None, None, if interrupted { "interrupted" } else { "ok" }.into())
            }
            EngineEvent::CoreAcquired { exec } => self.push(EventKind::CoreAcquired, tts.executor_name(exec), None, None, String::new()),
            EngineEvent::CycleEnded { exec } => self.push(EventKind::CycleEnded, tts.executor_name(exec), None, None, String::new()),
            EngineEvent::PropertyViolated { property } => {
                self.push(EventKind::PropertyViolated, tts.property_names[property].clone(), None, None, String::new())
            }
        }
    }
}

/// A concrete run in progress.
pub(crate) struct Runner<'a> {
    pub tts: &'a Tts,
    pub d: Discrete,
    pub clocks: ConcreteClocks,
    pub rec: Recorder<'a>,
    /// Start instant of the codel each executor runs.
    pub starts: BTreeMap<Executor, (u64, u32)>,
    pub violations: Vec<usize>,
}

impl<'a> Runner<'a> {
    pub fn new(tts: &'a Tts) -> Self {
        Runner {
            tts,
            d: Discrete::new(tts),
            clocks: ConcreteClocks { now: 0, reset_at: vec![Some(0); tts.clocks.len()] },
            rec: Recorder::new(tts),
            starts: BTreeMap::new(),
            violations: Vec::new(),
        }
    }

    fn collect(&mut self, v: Vec<usize>) {
        for p in v {
            if !self.violations.contains(&p) {
                self.violations.push(p);
            }
        }
        for (e, c) in std::mem::take(&mut self.rec.started) {
            self.starts.insert(e, (self.clocks.now, c));
        }
    }

    pub fn launch(&mut self) {
        let v = {
            let mut e = Engine::new(self.tts, &mut self.d, &mut self.clocks, &mut self.rec);
            e.launch();
            e.violations
        };
        self.collect(v);
    }

    pub fn advance(&mut self, t: u64) {
        self.clocks.now = t;
        self.rec.now = t;
    }

    pub fn fire(&mut self, edge: &TimedEdge) {
        if let TimedEdge::CodelEnd { exec, .. } = edge {
            if let Some((start, codel)) = self.starts.remove(exec) {
                let c = &self.tts.codels[codel as usize];
                let measured = self.clocks.now - start;
                if measured > c.wcet as u64 {
                    self.rec.push(
                        EventKind::WcetOverrun,
                        self.tts.executor_name(*exec),
                        Some(codel),
                        None,
                        format!("measured={} declared={}", measured, c.wcet),
                    );
                }
            }
        }
        let v = {
            let mut e = Engine::new(self.tts, &mut self.d, &mut self.clocks, &mut self.rec);
            e.fire(edge);
            e.violations
        };
        self.collect(v);
    }

    /// Instant of the next period signal of each periodic task.
    pub fn period_due(&self) -> Vec<(u64, u16)> {
        let mut out = Vec::new();
        for (i, t) in self.tts.tasks.iter().enumerate() {
            if let (Some(p), Some(c)) = (t.period, t.cycle_clock) {
                if let Some(r) = self.clocks.reset_at[c] {
                    out.push((r + p as u64, i as u16));
                }
            }
        }
        out
    }

    pub fn finish(self, truncated: bool) -> Trace {
        Trace { end_time: self.clocks.now, events: self.rec.events, truncated }
    }
}

pub fn simulate_tts(tts: &Tts, cfg: &SimConfig) -> Trace {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let arrival_times: Vec<u64> = tts
        .arrivals
        .iter()
        .map(|a| match cfg.policy {
            DurationPolicy::Fixed => a.lo as u64,
            DurationPolicy::Uniform => rng.gen_range(a.lo..=a.hi) as u64,
        })
        .collect();
    let mut ends: BTreeMap<Executor, u64> = BTreeMap::new();
    let mut run = Runner::new(tts);
    run.launch();
    let sample = |run: &Runner, ends: &mut BTreeMap<Executor, u64>, rng: &mut ChaCha8Rng| {
        for (e, (start, codel)) in &run.starts {
            if ends.contains_key(e) {
                continue;
            }
            let c = &tts.codels[*codel as usize];
            let injected = cfg
                .inject
                .iter()
                .find(|(k, _)| c.function.as_deref() == Some(k.as_str()) || &c.label == k)
                .map(|(_, d)| *d);
            let dur = injected.unwrap_or_else(|| match cfg.policy {
                DurationPolicy::Fixed => c.wcet as u64,
                DurationPolicy::Uniform => rng.gen_range(c.min.min(c.wcet)..=c.wcet) as u64,
            });
            ends.insert(*e, start + dur);
        }
    };
    sample(&run, &mut ends, &mut rng);
    let mut truncated = false;
    let mut end = cfg.horizon;
    loop {
        if run.rec.events.len() >= cfg.max_events {
            truncated = true;
            break;
        }
        let next_end = ends.iter().min_by_key(|(e, t)| (**t, **e)).map(|(e, t)| (*t, *e));
        let next_arrival = arrival_times.get(run.d.arrivals_done as usize).copied();
        let due = run.period_due();
        let next_period = due.iter().map(|(t, _)| *t).min();
        let candidates = [next_end.map(|(t, _)| t), next_arrival, next_period];
        let Some(t) = candidates.iter().flatten().min().copied() else {
            end = run.clocks.now;
            break;
        };
        if t > cfg.horizon {
            break;
        }
        run.advance(t);
        let edge = if let Some((_, e)) = next_end.filter(|(te, _)| *te == t) {
            ends.remove(&e);
            let n = tts.choices(&run.d, e);
            TimedEdge::CodelEnd { exec: e, choice: if n > 1 { rng.gen_range(0..n) } else { 0 } }
        } else if next_arrival == Some(t) {
            TimedEdge::Arrival(run.d.arrivals_done)
        } else {
            TimedEdge::Period(due.iter().filter(|(td, _)| *td == t).map(|(_, i)| *i).collect())
        };
        run.fire(&edge);
        sample(&run, &mut ends, &mut rng);
    }
    if !truncated {
        run.advance(end.max(run.clocks.now));
    }
    run.finish(truncated)
}
