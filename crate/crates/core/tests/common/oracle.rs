//! Exhaustive integer-time exploration used as a reference for the
//! zone-based verifier.
//!
//! It reads the resolved model directly and keeps its own scheduler state:
//! remaining execution times instead of clocks, every codel taking exactly
//! its WCET, every integer instant of a request window tried, every order
//! of simultaneous events. Two states that differ only by the age of a
//! pending response are merged, keeping the older one. States are expanded
//! in order of absolute time so that merged states are rarely revisited.

use codelv::semantic::{CodelOwner, SystemModel};
use codelv::spec_ast::{Pred, Property, Scenario, Timing, YieldTarget};
use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Ph {
    Idle,
    Queued,
    Running,
}

#[derive(Clone, Copy)]
enum Next {
    Ether,
    To { codel: usize, pause: bool },
}

struct Codel {
    wcet: u64,
    reads: Vec<usize>,
    writes: Vec<usize>,
    next: Vec<Next>,
    slot: Option<usize>,
}

struct Task {
    comp: usize,
    name: String,
    local: usize,
    period: Option<u64>,
    permanent: Option<usize>,
}

struct Service {
    task: Option<usize>,
    validate: Option<usize>,
    body: Option<usize>,
    start: Option<usize>,
    stop: Option<usize>,
    interrupts: Vec<usize>,
}

struct Request {
    comp: usize,
    svc: usize,
    lo: u64,
    hi: u64,
}

enum Expr {
    Const(bool),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    TaskPhase(usize, Ph),
    TaskBlocked(usize),
    TaskAt(usize, usize),
    Running(usize),
    CtlPhase(usize, Ph),
    CtlHas(usize, usize),
    Late(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Job {
    svc: Option<usize>,
    at: usize,
    held: bool,
    detached: bool,
    interrupted: bool,
    stopping: bool,
    served: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct Run {
    job: usize,
    codel: usize,
    /// Remaining execution time; `None` while waiting for locks.
    left: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct TaskSt {
    ph: Ph,
    late: bool,
    run: Option<Run>,
    jobs: Vec<Job>,
    since: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct CtlSt {
    ph: Ph,
    queue: Vec<usize>,
    stage: u8,
    run: Option<(usize, Option<u64>)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Who {
    Task(usize),
    Ctl(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Cfg {
    tasks: Vec<TaskSt>,
    ctls: Vec<CtlSt>,
    /// Detached codels: (task, job, remaining).
    slots: Vec<Option<(usize, usize, u64)>>,
    locks: Vec<i32>,
    fifo: Vec<Who>,
    free: usize,
    sent: usize,
    /// Absolute time, kept only while requests remain to be sent.
    clock: Option<u64>,
    pending: bool,
    trig: bool,
    targ: bool,
}

/// Largest age of a pending response.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sup {
    At(u64),
    Unbounded,
}

#[derive(Debug)]
pub struct Outcome {
    /// Names of the invariants found violated.
    pub violated: Vec<String>,
    /// `None` when the response was never pending.
    pub sup: Option<Sup>,
    pub states: usize,
}

struct Watch {
    trigger: Expr,
    target: Expr,
    leave: bool,
}

pub struct Oracle {
    codels: Vec<Codel>,
    slot_codel: Vec<usize>,
    tasks: Vec<Task>,
    services: Vec<Vec<Service>>,
    requests: Vec<Request>,
    resources: usize,
    cores: usize,
    invariants: Vec<(String, Expr)>,
    watch: Option<Watch>,
    /// An age beyond this is reported as unbounded.
    pub cap: u64,
    pub budget: usize,
}

struct Step<'v> {
    x: Option<u64>,
    violated: &'v mut [bool],
}

impl Oracle {
    /// `props` may hold any number of invariants and at most one
    /// bounded-response property, whose interval is ignored.
    pub fn new(model: &SystemModel, scenario: &Scenario, props: &[Property], cores: usize) -> Result<Oracle, String> {
        let mut slot_codel = Vec::new();
        let mut codels = Vec::new();
        for (id, c) in model.codels.iter().enumerate() {
            let comp = &model.components[c.component];
            let reads: Vec<usize> = c.access.reads.iter().copied().filter(|r| !c.access.writes.contains(r)).collect();
            let next = c
                .yields
                .iter()
                .map(|y| match y {
                    YieldTarget::Ether => Next::Ether,
                    YieldTarget::State { name, pause } => {
                        Next::To { codel: comp.state_codel(&c.owner, name).expect("resolved yield"), pause: *pause }
                    }
                })
                .collect();
            let slot = c.is_async.then(|| {
                slot_codel.push(id);
                slot_codel.len() - 1
            });
            codels.push(Codel { wcet: c.wcet_us, reads, writes: c.access.writes.iter().copied().collect(), next, slot });
        }

        let mut tasks = Vec::new();
        for (ci, comp) in model.components.iter().enumerate() {
            let mut names: Vec<(String, usize)> = comp.spec.tasks.iter().enumerate().map(|(i, t)| (t.name.clone(), i)).collect();
            names.sort();
            for (name, local) in names {
                let period = match comp.spec.tasks[local].timing {
                    Timing::Periodic { period_us } => Some(period_us),
                    Timing::Aperiodic => None,
                };
                let permanent = comp.state_codel(&CodelOwner::Task(local), "start");
                tasks.push(Task { comp: ci, name, local, period, permanent });
            }
        }
        let global = |ci: usize, local: usize, tasks: &[Task]| tasks.iter().position(|t| t.comp == ci && t.local == local);

        let mut services = Vec::new();
        for (ci, comp) in model.components.iter().enumerate() {
            let mut v = Vec::new();
            for si in 0..comp.spec.services.len() {
                let owner = CodelOwner::Service(si);
                let sc = &comp.service_codels[si];
                v.push(Service {
                    task: comp.service_task[si].and_then(|t| global(ci, t, &tasks)),
                    validate: sc.validate,
                    body: sc.body,
                    start: comp.state_codel(&owner, "start"),
                    stop: comp.state_codel(&owner, "stop"),
                    interrupts: comp.interrupts[si].clone(),
                });
            }
            services.push(v);
        }
        let mut requests = Vec::new();
        for ev in &scenario.events {
            let comp = model.component_index(&ev.component).ok_or("unknown component")?;
            let svc = model.components[comp].service_index(&ev.service).ok_or("unknown service")?;
            requests.push(Request { comp, svc, lo: ev.send_time, hi: ev.latest });
        }

        let mut o = Oracle {
            codels,
            slot_codel,
            tasks,
            services,
            requests,
            resources: model.resources.len(),
            cores,
            invariants: Vec::new(),
            watch: None,
            cap: 10_000_000,
            budget: 20_000_000,
        };
        for p in props {
            match p {
                Property::Invariant { name, pred } => {
                    let e = o.compile(model, pred)?;
                    o.invariants.push((name.clone(), e));
                }
                Property::LeadsToWithin { trigger, target, leave, lo, .. } => {
                    if o.watch.is_some() {
                        return Err("at most one bounded-response property".into());
                    }
                    if *lo > 0 {
                        return Err("lower bounds are not supported".into());
                    }
                    let watch = Watch { trigger: o.compile(model, trigger)?, target: o.compile(model, target)?, leave: *leave };
                    o.watch = Some(watch);
                }
            }
        }
        Ok(o)
    }

    fn compile(&self, model: &SystemModel, p: &Pred) -> Result<Expr, String> {
        Ok(match p {
            Pred::True => Expr::Const(true),
            Pred::False => Expr::Const(false),
            Pred::Not(a) => Expr::Not(Box::new(self.compile(model, a)?)),
            Pred::And(a, b) => Expr::And(Box::new(self.compile(model, a)?), Box::new(self.compile(model, b)?)),
            Pred::Or(a, b) => Expr::Or(Box::new(self.compile(model, a)?), Box::new(self.compile(model, b)?)),
            Pred::Implies(a, b) => {
                Expr::Or(Box::new(Expr::Not(Box::new(self.compile(model, a)?))), Box::new(self.compile(model, b)?))
            }
            Pred::PeriodSignal { component, task, .. } => {
                let found: Vec<usize> = (0..self.tasks.len())
                    .filter(|&t| &self.tasks[t].name == task)
                    .filter(|&t| component.as_ref().is_none_or(|c| model.components[self.tasks[t].comp].name() == c))
                    .collect();
                match found[..] {
                    [t] => Expr::Late(t),
                    _ => return Err(format!("cannot resolve `{}_period_signal`", task)),
                }
            }
            Pred::State { component, entity, state, .. } => {
                let ci = model.component_index(component).ok_or("unknown component")?;
                let comp = &model.components[ci];
                if entity == "control_task" {
                    return Ok(match state.as_str() {
                        "idle" => Expr::CtlPhase(ci, Ph::Idle),
                        "queued" => Expr::CtlPhase(ci, Ph::Queued),
                        "executing" => Expr::CtlPhase(ci, Ph::Running),
                        s => {
                            let svc = s.strip_suffix("_req").and_then(|n| comp.service_index(n)).ok_or("unknown request state")?;
                            Expr::CtlHas(ci, svc)
                        }
                    });
                }
                if let Some(local) = comp.task_index(entity) {
                    let t = self.tasks.iter().position(|x| x.comp == ci && x.local == local).expect("task");
                    return Ok(match state.as_str() {
                        "idle" => Expr::TaskPhase(t, Ph::Idle),
                        "queued" => Expr::TaskPhase(t, Ph::Queued),
                        "executing" => Expr::TaskPhase(t, Ph::Running),
                        "blocked" => Expr::TaskBlocked(t),
                        s => Expr::TaskAt(t, comp.state_codel(&CodelOwner::Task(local), s).ok_or("unknown task state")?),
                    });
                }
                let si = comp.service_index(entity).ok_or("unknown entity")?;
                Expr::Running(comp.state_codel(&CodelOwner::Service(si), state).ok_or("unknown service state")?)
            }
        })
    }

    fn eval(&self, e: &Expr, c: &Cfg) -> bool {
        match e {
            Expr::Const(b) => *b,
            Expr::Not(a) => !self.eval(a, c),
            Expr::And(a, b) => self.eval(a, c) && self.eval(b, c),
            Expr::Or(a, b) => self.eval(a, c) || self.eval(b, c),
            Expr::TaskPhase(t, p) => c.tasks[*t].ph == *p,
            Expr::TaskBlocked(t) => matches!(c.tasks[*t].run, Some(r) if r.left.is_none()),
            Expr::TaskAt(t, codel) => matches!(c.tasks[*t].run, Some(r) if r.left.is_some() && r.codel == *codel),
            Expr::Running(codel) => {
                c.tasks.iter().any(|t| matches!(t.run, Some(r) if r.left.is_some() && r.codel == *codel))
                    || c.slots.iter().enumerate().any(|(s, b)| b.is_some() && self.slot_codel[s] == *codel)
            }
            Expr::CtlPhase(k, p) => c.ctls[*k].ph == *p,
            Expr::CtlHas(k, svc) => c.ctls[*k].queue.contains(svc),
            Expr::Late(t) => c.tasks[*t].late,
        }
    }

    fn observe(&self, c: &mut Cfg, s: &mut Step) {
        for (i, (_, e)) in self.invariants.iter().enumerate() {
            if !self.eval(e, c) {
                s.violated[i] = true;
            }
        }
        if let Some(w) = &self.watch {
            let trig = self.eval(&w.trigger, c);
            let targ = self.eval(&w.target, c);
            if !c.pending && trig && !c.trig {
                c.pending = true;
                s.x = Some(0);
            }
            if c.pending && (if w.leave { c.targ && !targ } else { targ }) {
                c.pending = false;
                s.x = None;
            }
            c.trig = trig;
            c.targ = targ;
        }
    }

    // ---- locks and jobs ----

    fn lock(&self, c: &mut Cfg, codel: usize) -> bool {
        let k = &self.codels[codel];
        if k.reads.iter().any(|&r| c.locks[r] < 0) || k.writes.iter().any(|&r| c.locks[r] != 0) {
            return false;
        }
        for &r in &k.reads {
            c.locks[r] += 1;
        }
        for &r in &k.writes {
            c.locks[r] = -1;
        }
        true
    }

    fn unlock(&self, c: &mut Cfg, codel: usize) {
        let k = &self.codels[codel];
        for &r in &k.reads {
            c.locks[r] -= 1;
        }
        for &r in &k.writes {
            c.locks[r] = 0;
        }
    }

    fn ready(&self, c: &Cfg, j: &Job) -> bool {
        if j.held || j.detached || j.served {
            return false;
        }
        if j.interrupted && !j.stopping {
            return true;
        }
        self.codels[j.at].slot.is_none_or(|s| c.slots[s].is_none())
    }

    fn has_work(&self, c: &Cfg, t: usize) -> bool {
        c.tasks[t].jobs.iter().any(|j| self.ready(c, j))
    }

    fn enqueue(&self, c: &mut Cfg, w: Who) {
        match w {
            Who::Task(t) => c.tasks[t].ph = Ph::Queued,
            Who::Ctl(k) => c.ctls[k].ph = Ph::Queued,
        }
        c.fifo.push(w);
    }

    fn comp_jobs(&self, c: &Cfg, comp: usize) -> Vec<(usize, usize)> {
        let mut v = Vec::new();
        for t in (0..self.tasks.len()).filter(|&t| self.tasks[t].comp == comp) {
            v.extend((0..c.tasks[t].jobs.len()).map(|k| (t, k)));
        }
        v
    }

    fn take_job(&self, c: &mut Cfg, t: usize, k: usize) -> Job {
        let ts = &mut c.tasks[t];
        let j = ts.jobs.remove(k);
        if let Some(r) = &mut ts.run {
            if r.job > k {
                r.job -= 1;
            }
        }
        for (st, sk, _) in c.slots.iter_mut().flatten() {
            if *st == t && *sk > k {
                *sk -= 1;
            }
        }
        j
    }

    fn finish_job(&self, c: &mut Cfg, t: usize, k: usize) {
        let j = self.take_job(c, t, k);
        if j.svc.is_some() {
            self.release_held(c, self.tasks[t].comp);
        }
    }

    fn blocked(&self, c: &Cfg, comp: usize, svc: usize) -> bool {
        let targets = &self.services[comp][svc].interrupts;
        self.comp_jobs(c, comp).into_iter().any(|(t, k)| {
            let j = &c.tasks[t].jobs[k];
            j.interrupted && j.svc.is_some_and(|s| targets.contains(&s))
        })
    }

    fn release_held(&self, c: &mut Cfg, comp: usize) {
        while let Some((t, k)) = self.comp_jobs(c, comp).into_iter().find(|&(t, k)| {
            let j = &c.tasks[t].jobs[k];
            j.held && !self.blocked(c, comp, j.svc.expect("held jobs belong to services"))
        }) {
            let mut j = self.take_job(c, t, k);
            j.held = false;
            c.tasks[t].jobs.push(j);
        }
    }

    fn interrupt(&self, c: &mut Cfg, comp: usize, svc: usize) {
        let targets = self.services[comp][svc].interrupts.clone();
        while let Some((t, k)) = self.comp_jobs(c, comp).into_iter().find(|&(t, k)| {
            let j = &c.tasks[t].jobs[k];
            j.svc.is_some_and(|s| targets.contains(&s)) && (j.held || !j.interrupted)
        }) {
            if c.tasks[t].jobs[k].held {
                self.finish_job(c, t, k);
                continue;
            }
            let j = &mut c.tasks[t].jobs[k];
            j.interrupted = true;
            let has_stop = self.services[comp][j.svc.expect("service job")].stop.is_some();
            let busy = j.detached || matches!(c.tasks[t].run, Some(r) if r.job == k);
            if !has_stop && !busy {
                self.finish_job(c, t, k);
            }
        }
    }

    fn start(&self, c: &mut Cfg, t: usize, k: usize, codel: usize) {
        let wcet = self.codels[codel].wcet;
        match self.codels[codel].slot {
            Some(s) => {
                c.slots[s] = Some((t, k, wcet));
                let j = &mut c.tasks[t].jobs[k];
                j.detached = true;
                j.served = true;
            }
            None => c.tasks[t].run = Some(Run { job: k, codel, left: Some(wcet) }),
        }
    }

    fn stop_or_finish(&self, c: &mut Cfg, t: usize, k: usize) {
        let svc = c.tasks[t].jobs[k].svc;
        match svc.and_then(|s| self.services[self.tasks[t].comp][s].stop) {
            Some(stop) => {
                let j = &mut c.tasks[t].jobs[k];
                j.at = stop;
                j.stopping = true;
            }
            None => self.finish_job(c, t, k),
        }
    }

    fn task_step(&self, c: &mut Cfg, t: usize) -> bool {
        if let Some(r) = c.tasks[t].run {
            if !self.lock(c, r.codel) {
                return false;
            }
            c.tasks[t].run = None;
            self.start(c, t, r.job, r.codel);
            return true;
        }
        let Some(k) = (0..c.tasks[t].jobs.len()).find(|&k| self.ready(c, &c.tasks[t].jobs[k])) else {
            let ts = &mut c.tasks[t];
            ts.ph = Ph::Idle;
            ts.jobs.iter_mut().for_each(|j| j.served = false);
            c.free += 1;
            if ts.late {
                ts.late = false;
                if self.has_work(c, t) {
                    self.enqueue(c, Who::Task(t));
                }
            }
            return true;
        };
        let j = &c.tasks[t].jobs[k];
        if j.interrupted && !j.stopping {
            self.stop_or_finish(c, t, k);
            return true;
        }
        let codel = j.at;
        if self.lock(c, codel) {
            self.start(c, t, k, codel);
        } else {
            c.tasks[t].run = Some(Run { job: k, codel, left: None });
        }
        true
    }

    fn begin(&self, c: &mut Cfg, k: usize, codel: usize) {
        let left = self.lock(c, codel).then_some(self.codels[codel].wcet);
        c.ctls[k].run = Some((codel, left));
    }

    fn ctl_step(&self, c: &mut Cfg, k: usize) -> bool {
        if let Some((codel, _)) = c.ctls[k].run {
            if !self.lock(c, codel) {
                return false;
            }
            c.ctls[k].run = Some((codel, Some(self.codels[codel].wcet)));
            return true;
        }
        let Some(&svc) = c.ctls[k].queue.first() else {
            c.ctls[k].ph = Ph::Idle;
            c.free += 1;
            return true;
        };
        let s = &self.services[k][svc];
        match c.ctls[k].stage {
            0 => match s.validate {
                Some(v) => self.begin(c, k, v),
                None => c.ctls[k].stage = 1,
            },
            1 => {
                self.interrupt(c, k, svc);
                match (s.task, s.start) {
                    (Some(t), Some(start)) => {
                        let held = self.blocked(c, k, svc);
                        c.tasks[t].jobs.push(Job {
                            svc: Some(svc),
                            at: start,
                            held,
                            detached: false,
                            interrupted: false,
                            stopping: false,
                            served: false,
                        });
                        c.ctls[k].queue.remove(0);
                        c.ctls[k].stage = 0;
                    }
                    _ => self.begin(c, k, s.body.expect("non-activity services have a body")),
                }
            }
            _ => {
                c.ctls[k].queue.remove(0);
                c.ctls[k].stage = 0;
            }
        }
        true
    }

    fn micro(&self, c: &mut Cfg) -> bool {
        for t in 0..self.tasks.len() {
            if self.tasks[t].period.is_none() && c.tasks[t].ph == Ph::Idle && self.has_work(c, t) {
                self.enqueue(c, Who::Task(t));
                return true;
            }
        }
        for k in 0..c.ctls.len() {
            if c.ctls[k].ph == Ph::Idle && !c.ctls[k].queue.is_empty() {
                self.enqueue(c, Who::Ctl(k));
                return true;
            }
        }
        if c.free > 0 && !c.fifo.is_empty() {
            match c.fifo.remove(0) {
                Who::Task(t) => c.tasks[t].ph = Ph::Running,
                Who::Ctl(k) => c.ctls[k].ph = Ph::Running,
            }
            c.free -= 1;
            return true;
        }
        for t in 0..self.tasks.len() {
            let busy = matches!(c.tasks[t].run, Some(r) if r.left.is_some());
            if c.tasks[t].ph == Ph::Running && !busy && self.task_step(c, t) {
                return true;
            }
        }
        for k in 0..c.ctls.len() {
            let busy = matches!(c.ctls[k].run, Some((_, Some(_))));
            if c.ctls[k].ph == Ph::Running && !busy && self.ctl_step(c, k) {
                return true;
            }
        }
        false
    }

    fn settle(&self, c: &mut Cfg, s: &mut Step) {
        while self.micro(c) {
            self.observe(c, s);
        }
    }

    fn choices(&self, j: &Job, codel: usize) -> usize {
        if j.interrupted && !j.stopping {
            1
        } else {
            self.codels[codel].next.len().max(1)
        }
    }

    fn finish_codel(&self, c: &mut Cfg, t: usize, k: usize, codel: usize, choice: usize) {
        self.unlock(c, codel);
        let j = &c.tasks[t].jobs[k];
        if j.interrupted && !j.stopping {
            self.stop_or_finish(c, t, k);
            return;
        }
        match self.codels[codel].next[choice] {
            Next::Ether => self.finish_job(c, t, k),
            Next::To { codel, pause } => {
                let j = &mut c.tasks[t].jobs[k];
                j.at = codel;
                j.served |= pause;
            }
        }
    }

    // ---- timed behaviour ----

    fn initial(&self, s: &mut Step) -> Cfg {
        let mut c = Cfg {
            tasks: self
                .tasks
                .iter()
                .map(|t| TaskSt {
                    ph: Ph::Idle,
                    late: false,
                    run: None,
                    jobs: t
                        .permanent
                        .map(|at| Job { svc: None, at, held: false, detached: false, interrupted: false, stopping: false, served: false })
                        .into_iter()
                        .collect(),
                    since: 0,
                })
                .collect(),
            ctls: self.services.iter().map(|_| CtlSt { ph: Ph::Idle, queue: Vec::new(), stage: 0, run: None }).collect(),
            slots: vec![None; self.slot_codel.len()],
            locks: vec![0; self.resources],
            fifo: Vec::new(),
            free: self.cores,
            sent: 0,
            clock: (!self.requests.is_empty()).then_some(0),
            pending: false,
            trig: false,
            targ: false,
        };
        self.observe(&mut c, s);
        for t in 0..self.tasks.len() {
            if self.tasks[t].period.is_some() && self.has_work(&c, t) {
                self.enqueue(&mut c, Who::Task(t));
            }
        }
        self.observe(&mut c, s);
        self.settle(&mut c, s);
        c
    }

    /// Time until some event is forced.
    fn deadline(&self, c: &Cfg, now: u64) -> Option<u64> {
        let mut d: Option<u64> = None;
        let mut at = |v: u64| d = Some(d.map_or(v, |x| x.min(v)));
        for (t, ts) in c.tasks.iter().enumerate() {
            if let Some(Run { left: Some(l), .. }) = ts.run {
                at(l);
            }
            if let Some(p) = self.tasks[t].period {
                at(p - ts.since);
            }
        }
        for cs in &c.ctls {
            if let Some((_, Some(l))) = cs.run {
                at(l);
            }
        }
        for (_, _, l) in c.slots.iter().flatten() {
            at(*l);
        }
        if let Some(r) = self.requests.get(c.sent) {
            at(r.hi - now);
        }
        d
    }

    fn elapse(&self, c: &mut Cfg, d: u64) {
        for (t, ts) in c.tasks.iter_mut().enumerate() {
            if let Some(Run { left: Some(l), .. }) = &mut ts.run {
                *l -= d;
            }
            if self.tasks[t].period.is_some() {
                ts.since += d;
            }
        }
        for cs in &mut c.ctls {
            if let Some((_, Some(l))) = &mut cs.run {
                *l -= d;
            }
        }
        for (_, _, l) in c.slots.iter_mut().flatten() {
            *l -= d;
        }
        if let Some(g) = &mut c.clock {
            *g += d;
        }
    }

    /// Every discrete successor at the current instant.
    fn fire_all(&self, c: &Cfg, now: u64, x: Option<u64>, violated: &mut [bool], out: &mut Vec<(Cfg, u64, Option<u64>)>) {
        let mut go = |f: &dyn Fn(&mut Cfg, &mut Step)| {
            let mut n = c.clone();
            let mut s = Step { x, violated: &mut *violated };
            f(&mut n, &mut s);
            self.observe(&mut n, &mut s);
            self.settle(&mut n, &mut s);
            let x = s.x;
            out.push((n, now, x));
        };
        for t in 0..self.tasks.len() {
            if let Some(r) = c.tasks[t].run.filter(|r| r.left == Some(0)) {
                for ch in 0..self.choices(&c.tasks[t].jobs[r.job], r.codel) {
                    go(&|n, _| {
                        n.tasks[t].run = None;
                        self.finish_codel(n, t, r.job, r.codel, ch);
                    });
                }
            }
        }
        for k in 0..c.ctls.len() {
            if let Some((codel, Some(0))) = c.ctls[k].run {
                go(&|n, _| {
                    self.unlock(n, codel);
                    n.ctls[k].run = None;
                    let head = n.ctls[k].queue[0];
                    n.ctls[k].stage = if self.services[k][head].validate == Some(codel) { 1 } else { 2 };
                });
            }
        }
        for s in 0..c.slots.len() {
            if let Some((t, k, 0)) = c.slots[s] {
                let codel = self.slot_codel[s];
                for ch in 0..self.choices(&c.tasks[t].jobs[k], codel) {
                    go(&|n, _| {
                        n.slots[s] = None;
                        n.tasks[t].jobs[k].detached = false;
                        self.finish_codel(n, t, k, codel, ch);
                    });
                }
            }
        }
        let due: Vec<usize> = (0..self.tasks.len()).filter(|&t| self.tasks[t].period == Some(c.tasks[t].since)).collect();
        if !due.is_empty() {
            go(&|n, _| {
                for &t in &due {
                    n.tasks[t].since = 0;
                    if n.tasks[t].ph == Ph::Idle {
                        if self.has_work(n, t) {
                            self.enqueue(n, Who::Task(t));
                        }
                    } else {
                        n.tasks[t].late = true;
                    }
                }
            });
        }
        if let Some(r) = self.requests.get(c.sent).filter(|r| now >= r.lo) {
            go(&|n, _| {
                n.ctls[r.comp].queue.push(r.svc);
                n.sent += 1;
                if n.sent == self.requests.len() {
                    n.clock = None;
                }
            });
        }
    }

    pub fn run(&self) -> Outcome {
        let mut violated = vec![false; self.invariants.len()];
        let mut sup: Option<Sup> = None;
        let mut s = Step { x: None, violated: &mut violated };
        let c0 = self.initial(&mut s);
        let x0 = s.x;

        // key -> (largest age seen, age it was expanded with)
        let mut seen: HashMap<Cfg, (Option<u64>, Option<Option<u64>>)> = HashMap::new();
        let mut queue: BinaryHeap<Reverse<(u64, u64)>> = BinaryHeap::new();
        let mut store: Vec<Option<(Cfg, Option<u64>)>> = Vec::new();
        seen.insert(c0.clone(), (x0, None));
        store.push(Some((c0, x0)));
        queue.push(Reverse((0, 0)));
        let mut succ = Vec::new();

        while let Some(Reverse((now, idx))) = queue.pop() {
            if !self.invariants.is_empty() && self.watch.is_none() && violated.iter().all(|&v| v) {
                break;
            }
            let (c, x) = store[idx as usize].take().expect("queued once");
            let entry = seen.get_mut(&c).expect("stored");
            if entry.0 != x || entry.1 == Some(x) {
                continue;
            }
            entry.1 = Some(x);
            if seen.len() >= self.budget {
                panic!("oracle budget exhausted");
            }

            let d = self.deadline(&c, now);
            if c.pending {
                let worst = match d {
                    Some(d) => Sup::At(x.expect("pending age") + d),
                    None => Sup::Unbounded,
                };
                sup = Some(match (sup, worst) {
                    (Some(Sup::Unbounded), _) | (_, Sup::Unbounded) => Sup::Unbounded,
                    (Some(Sup::At(a)), Sup::At(b)) => Sup::At(a.max(b)),
                    (None, w) => w,
                });
                if let Some(Sup::At(v)) = sup {
                    if v > self.cap {
                        sup = Some(Sup::Unbounded);
                        break;
                    }
                }
            }

            succ.clear();
            self.fire_all(&c, now, x, &mut violated, &mut succ);
            if d != Some(0) {
                let step = match self.requests.get(c.sent) {
                    Some(r) if now >= r.lo => Some(1),
                    Some(r) => Some(d.map_or(r.lo - now, |d| d.min(r.lo - now))),
                    None => d,
                };
                if let Some(step) = step {
                    let mut n = c.clone();
                    self.elapse(&mut n, step);
                    succ.push((n, now + step, x.map(|x| x + step)));
                }
            }
            for (n, t, nx) in succ.drain(..) {
                let better = match seen.get_mut(&n) {
                    None => {
                        seen.insert(n.clone(), (nx, None));
                        true
                    }
                    Some(e) if nx > e.0 => {
                        e.0 = nx;
                        true
                    }
                    Some(_) => false,
                };
                if better {
                    store.push(Some((n, nx)));
                    queue.push(Reverse((t, store.len() as u64 - 1)));
                }
            }
        }
        let violated_names = self.invariants.iter().zip(&violated).filter(|(_, &v)| v).map(|((n, _), _)| n.clone()).collect();
        Outcome { violated: violated_names, sup, states: seen.len() }
    }
}
