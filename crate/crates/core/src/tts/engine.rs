//! Discrete execution semantics shared by the verifier and the simulator.
//!
//! Time-consuming behaviour is confined to [`TimedEdge`]s: codel ends,
//! request arrivals and period signals. Everything else (releases, core
//! grants, lock acquisition, interrupt dispatch, reports) happens in zero
//! time during [`Engine::settle`], one micro-step at a time in a fixed
//! order, so that the same discrete state always settles the same way.
//! Properties are observed after every micro-step.

use super::state::{Discrete, Exec, Instance, Phase, Queued, Status, PERMANENT};
use super::{ClockId, ServiceRt, Tts, YieldRt};
use serde::Serialize;

/// Clock valuation operations needed by the discrete semantics.
pub trait Clocks {
    fn reset(&mut self, c: ClockId);
    fn free(&mut self, c: ClockId);
    /// Whether clock `c` can currently be strictly below `v`.
    fn may_be_below(&self, c: ClockId, v: u32) -> bool;
}

pub trait Sink {
    fn event(&mut self, ev: EngineEvent);
}

pub struct NullSink;

impl Sink for NullSink {
    fn event(&mut self, _: EngineEvent) {}
}

impl Sink for Vec<EngineEvent> {
    fn event(&mut self, ev: EngineEvent) {
        self.push(ev);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Executor {
    Task(u16),
    Control(u16),
    Slot(u16),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum TimedEdge {
    /// End of the executor's codel, taking yield `choice`.
    CodelEnd { exec: Executor, choice: u8 },
    Arrival(u16),
    /// Period signals of these tasks (index order).
    Period(Vec<u16>),
    /// Time passes forever without any event.
    Diverge,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum EngineEvent {
    RequestArrived { component: usize, service: u16 },
    ValidateRun { component: usize, service: u16 },
    InstanceStarted { task: u16, service: u16 },
    CodelStarted { exec: Executor, codel: u32 },
    CodelEnded { exec: Executor, codel: u32, choice: Option<u8> },
    LockWaitStarted { exec: Executor, codel: u32 },
    LockWaitEnded { exec: Executor, codel: u32 },
    PeriodSignal { task: u16 },
    DeadlineMiss { task: u16 },
    ReportSent { component: usize, service: u16, interrupted: bool },
    CoreAcquired { exec: Executor },
    CycleEnded { exec: Executor },
    PropertyViolated { property: usize },
}

/// One discrete transformation of a state, borrowing a clock interpretation
/// and an event sink.
pub struct Engine<'a, C: Clocks, S: Sink> {
    pub tts: &'a Tts,
    pub d: &'a mut Discrete,
    pub clocks: &'a mut C,
    pub sink: &'a mut S,
    /// Indices of properties violated during this transformation.
    pub violations: Vec<usize>,
}

impl<'a, C: Clocks, S: Sink> Engine<'a, C, S> {
    pub fn new(tts: &'a Tts, d: &'a mut Discrete, clocks: &'a mut C, sink: &'a mut S) -> Self {
        Engine { tts, d, clocks, sink, violations: Vec::new() }
    }

    /// Time zero: permanent activities are instantiated, periodic tasks
    /// receive their first release.
    pub fn launch(&mut self) {
        for (t, rt) in self.tts.tasks.iter().enumerate() {
            if let Some(start) = rt.permanent_start {
                self.d.tasks[t].instances.push(Instance {
                    service: PERMANENT,
                    codel: start as u32,
                    status: Status::Runnable,
                    interrupted: false,
                    stopping: false,
                    cycle_done: false,
                });
            }
        }
        self.observe();
        for t in 0..self.tts.tasks.len() {
            if self.tts.tasks[t].period.is_some() {
                self.sink.event(EngineEvent::PeriodSignal { task: t as u16 });
                if self.has_work(t) {
                    self.enqueue(Queued::Task(t as u16));
                }
            }
        }
        self.observe();
        self.settle();
    }

    pub fn fire(&mut self, edge: &TimedEdge) {
        match edge {
            TimedEdge::CodelEnd { exec, choice } => self.codel_end(*exec, *choice),
            TimedEdge::Arrival(k) => {
                let a = &self.tts.arrivals[*k as usize];
                self.d.controls[a.component].requests.push(a.service);
                self.d.arrivals_done += 1;
                self.sink.event(EngineEvent::RequestArrived { component: a.component, service: a.service });
                if self.d.arrivals_done as usize == self.tts.arrivals.len() {
                    if let Some(g) = self.tts.global_clock {
                        self.clocks.free(g);
                    }
                }
            }
            TimedEdge::Period(set) => {
                for &t in set {
                    let ti = t as usize;
                    self.clocks.reset(self.tts.tasks[ti].cycle_clock.expect("periodic"));
                    self.sink.event(EngineEvent::PeriodSignal { task: t });
                    if self.d.tasks[ti].phase == Phase::Idle {
                        if self.has_work(ti) {
                            self.enqueue(Queued::Task(t));
                        }
                    } else {
                        self.d.tasks[ti].overrun = true;
                        self.sink.event(EngineEvent::DeadlineMiss { task: t });
                    }
                }
            }
            TimedEdge::Diverge => {}
        }
        self.observe();
        self.settle();
    }

    /// Zero-time micro-steps until none applies.
    pub fn settle(&mut self) {
        while self.micro_step() {
            self.observe();
        }
    }

    fn micro_step(&mut self) -> bool {
        let tts = self.tts;
        for t in 0..tts.tasks.len() {
            if tts.tasks[t].period.is_none() && self.d.tasks[t].phase == Phase::Idle && self.has_work(t) {
                self.enqueue(Queued::Task(t as u16));
                return true;
            }
        }
        for c in 0..tts.controls.len() {
            if self.d.controls[c].phase == Phase::Idle && !self.d.controls[c].requests.is_empty() {
                self.enqueue(Queued::Control(c as u16));
                return true;
            }
        }
        if self.d.free_cores > 0 && !self.d.fifo.is_empty() {
            let q = self.d.fifo.remove(0);
            self.d.free_cores -= 1;
            let exec = match q {
                Queued::Task(t) => {
                    self.d.tasks[t as usize].phase = Phase::Running;
                    Executor::Task(t)
                }
                Queued::Control(c) => {
                    self.d.controls[c as usize].phase = Phase::Running;
                    Executor::Control(c)
                }
            };
            self.sink.event(EngineEvent::CoreAcquired { exec });
            return true;
        }
        for t in 0..tts.tasks.len() {
            let ts = &self.d.tasks[t];
            if ts.phase == Phase::Running && !matches!(ts.exec, Some(e) if e.running) && self.task_step(t) {
                return true;
            }
        }
        for c in 0..tts.controls.len() {
            let cs = &self.d.controls[c];
            if cs.phase == Phase::Running && !matches!(cs.exec, Some(e) if e.running) && self.control_step(c) {
                return true;
            }
        }
        false
    }

    /// Properties are checked on every intermediate state.
    pub fn observe(&mut self) {
        let tts = self.tts;
        for (p, pred) in &tts.invariants {
            if !pred.eval(tts, self.d) && !self.violations.contains(p) {
                self.violations.push(*p);
                self.sink.event(EngineEvent::PropertyViolated { property: *p });
            }
        }
        for (i, o) in tts.observers.iter().enumerate() {
            let trig = o.trigger.eval(tts, self.d);
            let targ = o.target.eval(tts, self.d);
            let st = self.d.observers[i];
            let mut pending = st.pending;
            if !pending && trig && !st.trigger {
                pending = true;
                self.clocks.reset(o.clock);
            }
            if pending {
                let served = if o.leave { st.target && !targ } else { targ };
                if served {
                    if o.lo > 0 && self.clocks.may_be_below(o.clock, o.lo) && !self.violations.contains(&o.property) {
                        self.violations.push(o.property);
                        self.sink.event(EngineEvent::PropertyViolated { property: o.property });
                    }
                    pending = false;
                    self.clocks.free(o.clock);
                }
            }
            self.d.observers[i].pending = pending;
            self.d.observers[i].trigger = trig;
            self.d.observers[i].target = targ;
        }
    }

    fn enqueue(&mut self, q: Queued) {
        match q {
            Queued::Task(t) => self.d.tasks[t as usize].phase = Phase::Queued,
            Queued::Control(c) => self.d.controls[c as usize].phase = Phase::Queued,
        }
        self.d.fifo.push(q);
    }

    fn service(&self, component: usize, service: u16) -> Option<&'a ServiceRt> {
        let tts: &'a Tts = self.tts;
        (service != PERMANENT).then(|| &tts.services[component][service as usize])
    }

    /// Whether the cycle of task `t` would pick this instance.
    fn ready(&self, t: usize, inst: &Instance) -> bool {
        if inst.status != Status::Runnable || inst.cycle_done {
            return false;
        }
        if inst.interrupted && !inst.stopping {
            return true;
        }
        let _ = t;
        match self.tts.codels[inst.codel as usize].slot {
            Some(s) => self.d.slots[s].is_none(),
            None => true,
        }
    }

    pub fn has_work(&self, t: usize) -> bool {
        self.d.tasks[t].instances.iter().any(|i| self.ready(t, i))
    }

    fn try_lock(&mut self, codel: u32) -> bool {
        let c = &self.tts.codels[codel as usize];
        let ok = c.reads.iter().all(|&r| self.d.locks[r as usize] >= 0) && c.writes.iter().all(|&r| self.d.locks[r as usize] == 0);
        if ok {
            for &r in &c.reads {
                self.d.locks[r as usize] += 1;
            }
            for &r in &c.writes {
                self.d.locks[r as usize] = -1;
            }
        }
        ok
    }

    fn unlock(&mut self, codel: u32) {
        let c = &self.tts.codels[codel as usize];
        for &r in &c.reads {
            self.d.locks[r as usize] -= 1;
        }
        for &r in &c.writes {
            self.d.locks[r as usize] = 0;
        }
    }

    fn task_step(&mut self, t: usize) -> bool {
        if let Some(e) = self.d.tasks[t].exec {
            if !self.try_lock(e.codel) {
                return false;
            }
            self.sink.event(EngineEvent::LockWaitEnded { exec: Executor::Task(t as u16), codel: e.codel });
            self.d.tasks[t].exec = None;
            self.start_task_codel(t, e.instance as usize, e.codel);
            return true;
        }
        let pick = self.d.tasks[t].instances.iter().position(|i| self.ready(t, i));
        let Some(k) = pick else {
            self.cycle_end(t);
            return true;
        };
        let inst = self.d.tasks[t].instances[k].clone();
        if inst.interrupted && !inst.stopping {
            let comp = self.tts.tasks[t].component;
            match self.service(comp, inst.service).and_then(|s| s.stop) {
                Some(stop) => {
                    let i = &mut self.d.tasks[t].instances[k];
                    i.codel = stop as u32;
                    i.stopping = true;
                }
                None => self.terminate(t, k, true),
            }
            return true;
        }
        if self.try_lock(inst.codel) {
            self.start_task_codel(t, k, inst.codel);
        } else {
            self.d.tasks[t].exec = Some(Exec { instance: k as u16, codel: inst.codel, running: false });
            self.sink.event(EngineEvent::LockWaitStarted { exec: Executor::Task(t as u16), codel: inst.codel });
        }
        true
    }

    fn start_task_codel(&mut self, t: usize, k: usize, codel: u32) {
        let rt = &self.tts.codels[codel as usize];
        if let Some(s) = rt.slot {
            self.d.slots[s] = Some((t as u16, k as u16));
            self.clocks.reset(self.tts.slots[s].clock);
            let i = &mut self.d.tasks[t].instances[k];
            i.status = Status::InAsync;
            i.cycle_done = true;
            self.sink.event(EngineEvent::CodelStarted { exec: Executor::Slot(s as u16), codel });
        } else {
            self.d.tasks[t].exec = Some(Exec { instance: k as u16, codel, running: true });
            self.clocks.reset(self.tts.tasks[t].exec_clock);
            self.sink.event(EngineEvent::CodelStarted { exec: Executor::Task(t as u16), codel });
        }
    }

    fn cycle_end(&mut self, t: usize) {
        let ts = &mut self.d.tasks[t];
        ts.phase = Phase::Idle;
        for i in &mut ts.instances {
            i.cycle_done = false;
        }
        self.d.free_cores += 1;
        self.sink.event(EngineEvent::CycleEnded { exec: Executor::Task(t as u16) });
        if self.d.tasks[t].overrun {
            self.d.tasks[t].overrun = false;
            if self.has_work(t) {
                self.enqueue(Queued::Task(t as u16));
            }
        }
    }

    /// Removes instance `k` of task `t`, sends its report and wakes
    /// instances that were held for it.
    fn terminate(&mut self, t: usize, k: usize, interrupted: bool) {
        let inst = self.remove_instance(t, k);
        let component = self.tts.tasks[t].component;
        self.sink.event(EngineEvent::ReportSent { component, service: inst.service, interrupted });
        if inst.service != PERMANENT {
            self.wake_held(component);
        }
    }

    fn remove_instance(&mut self, t: usize, k: usize) -> Instance {
        let ts = &mut self.d.tasks[t];
        let inst = ts.instances.remove(k);
        if let Some(e) = &mut ts.exec {
            debug_assert_ne!(e.instance as usize, k);
            if e.instance as usize > k {
                e.instance -= 1;
            }
        }
        for s in self.d.slots.iter_mut().flatten() {
            if s.0 as usize == t && s.1 as usize > k {
                s.1 -= 1;
            }
        }
        inst
    }

    fn component_tasks(&self, component: usize) -> impl Iterator<Item = usize> + 'a {
        let tts: &'a Tts = self.tts;
        (0..tts.tasks.len()).filter(move |&t| tts.tasks[t].component == component)
    }

    fn blocked(&self, component: usize, service: u16) -> bool {
        let targets = &self.tts.services[component][service as usize].interrupts;
        self.component_tasks(component)
            .any(|t| self.d.tasks[t].instances.iter().any(|i| i.interrupted && targets.contains(&i.service)))
    }

    fn wake_held(&mut self, component: usize) {
        loop {
            let mut found = None;
            for t in self.component_tasks(component) {
                for (k, i) in self.d.tasks[t].instances.iter().enumerate() {
                    if i.status == Status::Held && !self.blocked(component, i.service) {
                        found = Some((t, k));
                        break;
                    }
                }
                if found.is_some() {
                    break;
                }
            }
            let Some((t, k)) = found else { return };
            let mut inst = self.remove_instance(t, k);
            inst.status = Status::Runnable;
            let service = inst.service;
            self.d.tasks[t].instances.push(inst);
            self.sink.event(EngineEvent::InstanceStarted { task: t as u16, service });
        }
    }

    fn mid_codel(&self, t: usize, k: usize) -> bool {
        matches!(self.d.tasks[t].exec, Some(e) if e.instance as usize == k) || self.d.tasks[t].instances[k].status == Status::InAsync
    }

    fn dispatch_interrupts(&mut self, component: usize, service: u16) {
        let targets = &self.tts.services[component][service as usize].interrupts;
        if targets.is_empty() {
            return;
        }
        loop {
            let mut found = None;
            'search: for t in self.component_tasks(component) {
                for (k, i) in self.d.tasks[t].instances.iter().enumerate() {
                    if targets.contains(&i.service) && (i.status == Status::Held || !i.interrupted) {
                        found = Some((t, k));
                        break 'search;
                    }
                }
            }
            let Some((t, k)) = found else { return };
            let inst = &mut self.d.tasks[t].instances[k];
            if inst.status == Status::Held {
                self.terminate(t, k, true);
                continue;
            }
            inst.interrupted = true;
            let has_stop = self.tts.services[component][inst.service as usize].stop.is_some();
            if !has_stop && !self.mid_codel(t, k) {
                self.terminate(t, k, true);
            }
        }
    }

    fn control_step(&mut self, c: usize) -> bool {
        let exec = Executor::Control(c as u16);
        if let Some(e) = self.d.controls[c].exec {
            if !self.try_lock(e.codel) {
                return false;
            }
            self.sink.event(EngineEvent::LockWaitEnded { exec, codel: e.codel });
            self.start_control_codel(c, e.codel);
            return true;
        }
        let component = self.tts.controls[c].component;
        let cs = &self.d.controls[c];
        let Some(&service) = cs.requests.first() else {
            self.d.controls[c].phase = Phase::Idle;
            self.d.free_cores += 1;
            self.sink.event(EngineEvent::CycleEnded { exec });
            return true;
        };
        let svc: &'a ServiceRt = &self.tts.services[component][service as usize];
        match cs.stage {
            0 => {
                match svc.validate {
                    Some(v) => {
                        self.sink.event(EngineEvent::ValidateRun { component, service });
                        self.start_or_wait(c, v as u32);
                    }
                    None => self.d.controls[c].stage = 1,
                }
                true
            }
            1 => {
                self.dispatch_interrupts(component, service);
                match (svc.task, svc.start) {
                    (Some(t), Some(start)) => {
                        let held = self.blocked(component, service);
                        self.d.tasks[t].instances.push(Instance {
                            service,
                            codel: start as u32,
                            status: if held { Status::Held } else { Status::Runnable },
                            interrupted: false,
                            stopping: false,
                            cycle_done: false,
                        });
                        if !held {
                            self.sink.event(EngineEvent::InstanceStarted { task: t as u16, service });
                        }
                        let cs = &mut self.d.controls[c];
                        cs.requests.remove(0);
                        cs.stage = 0;
                    }
                    _ => {
                        let body = svc.body.expect("functions and attributes have a body");
                        self.start_or_wait(c, body as u32);
                    }
                }
                true
            }
            _ => {
                self.sink.event(EngineEvent::ReportSent { component, service, interrupted: false });
                let cs = &mut self.d.controls[c];
                cs.requests.remove(0);
                cs.stage = 0;
                true
            }
        }
    }

    fn start_or_wait(&mut self, c: usize, codel: u32) {
        if self.try_lock(codel) {
            self.start_control_codel(c, codel);
        } else {
            self.d.controls[c].exec = Some(Exec { instance: 0, codel, running: false });
            self.sink.event(EngineEvent::LockWaitStarted { exec: Executor::Control(c as u16), codel });
        }
    }

    fn start_control_codel(&mut self, c: usize, codel: u32) {
        self.d.controls[c].exec = Some(Exec { instance: 0, codel, running: true });
        self.clocks.reset(self.tts.controls[c].exec_clock);
        self.sink.event(EngineEvent::CodelStarted { exec: Executor::Control(c as u16), codel });
    }

    fn codel_end(&mut self, exec: Executor, choice: u8) {
        match exec {
            Executor::Task(t) => {
                let t = t as usize;
                let e = self.d.tasks[t].exec.take().expect("task executing a codel");
                self.clocks.free(self.tts.tasks[t].exec_clock);
                self.finish_codel(exec, e.codel, t, e.instance as usize, choice);
            }
            Executor::Slot(s) => {
                let (t, k) = self.d.slots[s as usize].take().expect("slot busy");
                self.clocks.free(self.tts.slots[s as usize].clock);
                let codel = self.tts.slots[s as usize].codel as u32;
                self.d.tasks[t as usize].instances[k as usize].status = Status::Runnable;
                self.finish_codel(exec, codel, t as usize, k as usize, choice);
            }
            Executor::Control(c) => {
                let c = c as usize;
                let e = self.d.controls[c].exec.take().expect("control executing a codel");
                self.clocks.free(self.tts.controls[c].exec_clock);
                self.unlock(e.codel);
                self.sink.event(EngineEvent::CodelEnded { exec, codel: e.codel, choice: None });
                let component = self.tts.controls[c].component;
                let head = self.d.controls[c].requests[0];
                let is_validate = self.tts.services[component][head as usize].validate == Some(e.codel as usize);
                self.d.controls[c].stage = if is_validate { 1 } else { 2 };
            }
        }
    }

    fn finish_codel(&mut self, exec: Executor, codel: u32, t: usize, k: usize, choice: u8) {
        self.unlock(codel);
        let component = self.tts.tasks[t].component;
        let inst = self.d.tasks[t].instances[k].clone();
        if inst.interrupted && !inst.stopping {
            self.sink.event(EngineEvent::CodelEnded { exec, codel, choice: None });
            match self.service(component, inst.service).and_then(|s| s.stop) {
                Some(stop) => {
                    let i = &mut self.d.tasks[t].instances[k];
                    i.codel = stop as u32;
                    i.stopping = true;
                }
                None => self.terminate(t, k, true),
            }
            return;
        }
        self.sink.event(EngineEvent::CodelEnded { exec, codel, choice: Some(choice) });
        match self.tts.codels[codel as usize].yields[choice as usize] {
            YieldRt::Ether => self.terminate(t, k, inst.interrupted),
            YieldRt::State { codel: next, pause } => {
                let i = &mut self.d.tasks[t].instances[k];
                i.codel = next as u32;
                if pause {
                    i.cycle_done = true;
                }
            }
        }
    }
}

impl Tts {
    /// Yield choices at the end of the codel an executor runs; interrupted
    /// instances have a single (forced) continuation.
    pub fn choices(&self, d: &Discrete, exec: Executor) -> u8 {
        let (t, k, codel) = match exec {
            Executor::Control(_) => return 1,
            Executor::Task(t) => {
                let e = d.tasks[t as usize].exec.expect("executing");
                (t as usize, e.instance as usize, e.codel)
            }
            Executor::Slot(s) => {
                let (t, k) = d.slots[s as usize].expect("busy");
                (t as usize, k as usize, self.slots[s as usize].codel as u32)
            }
        };
        let inst = &d.tasks[t].instances[k];
        if inst.interrupted && !inst.stopping {
            1
        } else {
            self.codels[codel as usize].yields.len().max(1) as u8
        }
    }

    /// Executors currently running a codel, with the codel.
    pub fn running(&self, d: &Discrete) -> Vec<(Executor, u32)> {
        let mut out = Vec::new();
        for (t, ts) in d.tasks.iter().enumerate() {
            if let Some(e) = ts.exec.filter(|e| e.running) {
                out.push((Executor::Task(t as u16), e.codel));
            }
        }
        for (c, cs) in d.controls.iter().enumerate() {
            if let Some(e) = cs.exec.filter(|e| e.running) {
                out.push((Executor::Control(c as u16), e.codel));
            }
        }
        for (s, slot) in d.slots.iter().enumerate() {
            if slot.is_some() {
                out.push((Executor::Slot(s as u16), self.slots[s].codel as u32));
            }
        }
        out
    }

    pub fn exec_clock(&self, e: Executor) -> ClockId {
        match e {
            Executor::Task(t) => self.tasks[t as usize].exec_clock,
            Executor::Control(c) => self.controls[c as usize].exec_clock,
            Executor::Slot(s) => self.slots[s as usize].clock,
        }
    }

    /// Upper bounds `clock <= v` that stop time from elapsing in `d`.
    pub fn invariants_of(&self, d: &Discrete) -> Vec<(ClockId, u32)> {
        let mut out: Vec<(ClockId, u32)> =
            self.running(d).into_iter().map(|(e, c)| (self.exec_clock(e), self.codels[c as usize].wcet)).collect();
        if let (Some(a), Some(g)) = (self.arrivals.get(d.arrivals_done as usize), self.global_clock) {
            out.push((g, a.hi));
        }
        for t in &self.tasks {
            if let (Some(p), Some(c)) = (t.period, t.cycle_clock) {
                out.push((c, p));
            }
        }
        out
    }

    /// Discrete edges of `d` other than period signals, with their lower
    /// bound guard `clock >= v`.
    pub fn edges_of(&self, d: &Discrete) -> Vec<(TimedEdge, Option<(ClockId, u32)>)> {
        let mut out = Vec::new();
        for (e, c) in self.running(d) {
            let guard = (self.exec_clock(e), self.codels[c as usize].min);
            for choice in 0..self.choices(d, e) {
                out.push((TimedEdge::CodelEnd { exec: e, choice }, Some(guard)));
            }
        }
        if let Some(a) = self.arrivals.get(d.arrivals_done as usize) {
            out.push((TimedEdge::Arrival(d.arrivals_done), self.global_clock.map(|g| (g, a.lo))));
        }
        out
    }

    pub fn has_periodic(&self) -> bool {
        self.tasks.iter().any(|t| t.period.is_some())
    }
}
