//! Timed transition system of a resolved system on N cores.
//!
//! The static tables built here ([`Tts`]) are shared by the discrete engine
//! ([`engine`]), which implements control tasks, task cycles, locks and the
//! cooperative FIFO core queue, and by two clock interpretations: zones
//! ([`symbolic`]) for the verifier and concrete integer clocks for the
//! simulator.

pub mod engine;
mod pred;
mod state;
pub mod symbolic;

pub use engine::{Clocks, Engine, EngineEvent, Executor, NullSink, Sink, TimedEdge};
pub use pred::{default_schedulability, CPred};
pub use state::{Discrete, Exec, Instance, ObsState, Phase, Queued, Status, PERMANENT};
pub use symbolic::{Abstraction, SymbolicState, Successor};

use crate::semantic::{CodelId, CodelOwner, SystemModel};
use crate::spec_ast::{Property, Scenario, ServiceKind, Timing, YieldTarget};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use thiserror::Error;

pub type ClockId = usize;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum TtsError {
    #[error("core count must be at least 1")]
    NoCores,
    #[error("scenario requests unknown component `{0}`")]
    UnknownComponent(String),
    #[error("scenario requests unknown service `{0}.{1}`")]
    UnknownService(String, String),
    #[error("property `{property}`: {message}")]
    Predicate { property: String, message: String },
    #[error("property `{0}`: lower bound exceeds upper bound")]
    BadInterval(String),
}

#[derive(Clone, Debug, Default)]
pub struct TtsOptions {
    /// Every resource access takes the lock exclusively.
    pub exclusive_locks: bool,
    /// Properties monitored during exploration or simulation.
    pub properties: Vec<Property>,
    /// Every codel takes exactly its WCET.
    pub pinned_durations: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum YieldRt {
    Ether,
    State { codel: CodelId, pause: bool },
}

#[derive(Clone, Debug)]
pub struct CodelRt {
    pub label: String,
    pub function: Option<String>,
    pub wcet: u32,
    pub min: u32,
    pub reads: Vec<u16>,
    pub writes: Vec<u16>,
    pub is_async: bool,
    pub slot: Option<usize>,
    pub yields: Vec<YieldRt>,
    /// Name of the FSM state, empty for validate and body codels.
    pub state: String,
}

#[derive(Clone, Debug)]
pub struct TaskRt {
    pub component: usize,
    /// Index in the component's task list.
    pub local: usize,
    /// `comp/task`
    pub name: String,
    pub period: Option<u32>,
    pub cycle_clock: Option<ClockId>,
    pub exec_clock: ClockId,
    pub permanent_start: Option<CodelId>,
}

#[derive(Clone, Debug)]
pub struct ControlRt {
    pub component: usize,
    pub name: String,
    pub exec_clock: ClockId,
}

#[derive(Clone, Debug)]
pub struct SlotRt {
    pub codel: CodelId,
    pub clock: ClockId,
    pub task: usize,
}

#[derive(Clone, Debug)]
pub struct ServiceRt {
    pub name: String,
    pub kind: ServiceKind,
    pub implicit: bool,
    /// Global task index of an activity.
    pub task: Option<usize>,
    pub validate: Option<CodelId>,
    pub body: Option<CodelId>,
    pub start: Option<CodelId>,
    pub stop: Option<CodelId>,
    pub interrupts: Vec<u16>,
}

#[derive(Clone, Debug)]
pub struct ArrivalRt {
    pub component: usize,
    pub service: u16,
    pub lo: u32,
    pub hi: u32,
}

#[derive(Clone, Debug)]
pub struct ObserverRt {
    pub property: usize,
    pub trigger: CPred,
    pub target: CPred,
    pub lo: u32,
    pub hi: u32,
    pub leave: bool,
    pub clock: ClockId,
}

#[derive(Clone, Debug)]
pub struct ClockRt {
    pub name: String,
    /// Largest constant the clock is compared with.
    pub max: i32,
}

#[derive(Clone, Debug)]
pub struct Tts {
    pub cores: u8,
    pub component_names: Vec<String>,
    pub resource_names: Vec<String>,
    /// Sorted by (component, task) name; the index is the FIFO tie order.
    pub tasks: Vec<TaskRt>,
    pub controls: Vec<ControlRt>,
    pub slots: Vec<SlotRt>,
    pub codels: Vec<CodelRt>,
    pub services: Vec<Vec<ServiceRt>>,
    pub arrivals: Vec<ArrivalRt>,
    /// Index 0 is the reference clock.
    pub clocks: Vec<ClockRt>,
    pub global_clock: Option<ClockId>,
    pub property_names: Vec<String>,
    pub invariants: Vec<(usize, CPred)>,
    pub observers: Vec<ObserverRt>,
}

pub fn build_tts(model: &SystemModel, cores: u32, scenario: &Scenario, opts: &TtsOptions) -> Result<Tts, TtsError> {
    if cores < 1 {
        return Err(TtsError::NoCores);
    }
    let mut clocks = vec![ClockRt { name: "0".into(), max: 0 }];
    let new_clock = |name: String, max: i32, clocks: &mut Vec<ClockRt>| {
        clocks.push(ClockRt { name, max });
        clocks.len() - 1
    };

    let mut arrivals = Vec::new();
    for ev in &scenario.events {
        let ci = model.component_index(&ev.component).ok_or_else(|| TtsError::UnknownComponent(ev.component.clone()))?;
        let si = model.components[ci]
            .service_index(&ev.service)
            .ok_or_else(|| TtsError::UnknownService(ev.component.clone(), ev.service.clone()))?;
        arrivals.push(ArrivalRt { component: ci, service: si as u16, lo: ev.send_time as u32, hi: ev.latest as u32 });
    }
    let global_clock =
        (!arrivals.is_empty()).then(|| new_clock("g".into(), arrivals.iter().map(|a| a.hi as i32).max().unwrap_or(0), &mut clocks));

    // codels
    let mut codels: Vec<CodelRt> = Vec::with_capacity(model.codels.len());
    let mut slots_of: Vec<CodelId> = Vec::new();
    for (id, c) in model.codels.iter().enumerate() {
        let comp = &model.components[c.component];
        let mut reads: Vec<u16> = c.access.reads.difference(&c.access.writes).map(|&r| r as u16).collect();
        let mut writes: Vec<u16> = c.access.writes.iter().map(|&r| r as u16).collect();
        if opts.exclusive_locks {
            writes.append(&mut reads);
            writes.sort_unstable();
        }
        let yields = c
            .yields
            .iter()
            .map(|y| match y {
                YieldTarget::Ether => YieldRt::Ether,
                YieldTarget::State { name, pause } => YieldRt::State {
                    codel: comp.state_codel(&c.owner, name).expect("yield targets are resolved"),
                    pause: *pause,
                },
            })
            .collect();
        let slot = c.is_async.then(|| {
            slots_of.push(id);
            slots_of.len() - 1
        });
        let state = match &c.role {
            crate::semantic::CodelRole::State(s) => s.clone(),
            _ => String::new(),
        };
        codels.push(CodelRt {
            label: c.label.clone(),
            function: c.function.clone(),
            wcet: c.wcet_us as u32,
            min: if opts.pinned_durations { c.wcet_us as u32 } else { c.min_us as u32 },
            reads,
            writes,
            is_async: c.is_async,
            slot,
            yields,
            state,
        });
    }
    let span = |ids: &mut dyn Iterator<Item = &CodelId>| ids.map(|&i| codels[i].wcet.max(codels[i].min) as i32).max().unwrap_or(0);

    // tasks in lexicographic (component, task) order
    let mut order: Vec<(usize, usize)> = Vec::new();
    for (ci, comp) in model.components.iter().enumerate() {
        let mut local: Vec<usize> = (0..comp.spec.tasks.len()).collect();
        local.sort_by(|&a, &b| comp.spec.tasks[a].name.cmp(&comp.spec.tasks[b].name));
        order.extend(local.into_iter().map(|t| (ci, t)));
    }
    let mut task_index: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut tasks = Vec::new();
    for (gi, &(ci, ti)) in order.iter().enumerate() {
        task_index.insert((ci, ti), gi);
        let comp = &model.components[ci];
        let decl = &comp.spec.tasks[ti];
        let name = format!("{}/{}", comp.name(), decl.name);
        let period = match decl.timing {
            Timing::Periodic { period_us } => Some(period_us as u32),
            Timing::Aperiodic => None,
        };
        let cycle_clock = period.map(|p| new_clock(format!("{}.cycle", name), p as i32, &mut clocks));
        let mut runs: Vec<CodelId> = comp.task_codels[ti].clone();
        for (si, st) in comp.service_task.iter().enumerate() {
            if *st == Some(ti) {
                runs.extend(comp.service_codels[si].fsm.iter().filter(|&&c| !codels[c].is_async));
            }
        }
        let exec_clock = new_clock(format!("{}.exec", name), span(&mut runs.iter()), &mut clocks);
        let permanent_start = comp.state_codel(&CodelOwner::Task(ti), "start");
        tasks.push(TaskRt { component: ci, local: ti, name, period, cycle_clock, exec_clock, permanent_start });
    }

    let mut services = Vec::new();
    let mut controls = Vec::new();
    for (ci, comp) in model.components.iter().enumerate() {
        let mut v = Vec::new();
        let mut ctl_codels: Vec<CodelId> = Vec::new();
        for (si, s) in comp.spec.services.iter().enumerate() {
            let sc = &comp.service_codels[si];
            ctl_codels.extend(sc.validate);
            ctl_codels.extend(sc.body);
            let owner = CodelOwner::Service(si);
            v.push(ServiceRt {
                name: s.name.clone(),
                kind: s.kind,
                implicit: s.implicit,
                task: comp.service_task[si].map(|t| task_index[&(ci, t)]),
                validate: sc.validate,
                body: sc.body,
                start: comp.state_codel(&owner, "start"),
                stop: comp.state_codel(&owner, "stop"),
                interrupts: comp.interrupts[si].iter().map(|&i| i as u16).collect(),
            });
        }
        services.push(v);
        let name = format!("{}/control_task", comp.name());
        let exec_clock = new_clock(format!("{}.exec", name), span(&mut ctl_codels.iter()), &mut clocks);
        controls.push(ControlRt { component: ci, name, exec_clock });
    }

    let mut slots = Vec::new();
    for &codel in &slots_of {
        let c = &model.codels[codel];
        let ti = match c.owner {
            CodelOwner::Task(t) => t,
            CodelOwner::Service(s) => model.components[c.component].service_task[s].expect("activities have a task"),
        };
        let clock = new_clock(format!("{}.async", codels[codel].label), span(&mut [codel].iter()), &mut clocks);
        slots.push(SlotRt { codel, clock, task: task_index[&(c.component, ti)] });
    }

    let mut tts = Tts {
        cores: cores.min(u8::MAX as u32) as u8,
        component_names: model.components.iter().map(|c| c.name().to_string()).collect(),
        resource_names: model.resources.iter().map(|r| r.name.clone()).collect(),
        tasks,
        controls,
        slots,
        codels,
        services,
        arrivals,
        clocks,
        global_clock,
        property_names: Vec::new(),
        invariants: Vec::new(),
        observers: Vec::new(),
    };

    for (pi, p) in opts.properties.iter().enumerate() {
        tts.property_names.push(p.name().to_string());
        let err = |message: String| TtsError::Predicate { property: p.name().to_string(), message };
        match p {
            Property::Invariant { pred, .. } => {
                let c = pred::compile(&tts, model, pred, pred::context_component(pred)).map_err(err)?;
                tts.invariants.push((pi, c));
            }
            Property::LeadsToWithin { trigger, target, lo, hi, leave, name } => {
                if lo > hi {
                    return Err(TtsError::BadInterval(name.clone()));
                }
                let ctx = pred::context_component(trigger).or_else(|| pred::context_component(target));
                let trigger = pred::compile(&tts, model, trigger, ctx.clone()).map_err(err)?;
                let target = pred::compile(&tts, model, target, ctx).map_err(err)?;
                let clock = tts.clocks.len();
                tts.clocks.push(ClockRt { name: format!("{}.x", name), max: (*hi).max(*lo) as i32 });
                tts.observers.push(ObserverRt {
                    property: pi,
                    trigger,
                    target,
                    lo: *lo as u32,
                    hi: *hi as u32,
                    leave: *leave,
                    clock,
                });
            }
        }
    }
    Ok(tts)
}

impl Tts {
    pub fn clock_count(&self) -> usize {
        self.clocks.len() - 1
    }

    pub fn max_constants(&self) -> Vec<i32> {
        self.clocks.iter().map(|c| c.max).collect()
    }

    pub fn task_index(&self, name: &str) -> Option<usize> {
        self.tasks.iter().position(|t| t.name == name)
    }

    pub fn executor_name(&self, e: Executor) -> String {
        match e {
            Executor::Task(t) => self.tasks[t as usize].name.clone(),
            Executor::Control(c) => self.controls[c as usize].name.clone(),
            Executor::Slot(s) => format!("{}.async", self.codels[self.slots[s as usize].codel].label),
        }
    }

    pub fn service_name(&self, component: usize, service: u16) -> String {
        if service == PERMANENT {
            return "permanent".into();
        }
        format!("{}.{}", self.component_names[component], self.services[component][service as usize].name)
    }

    /// Structural dump: clocks, locations, codels with guards/invariants,
    /// arrivals and observers.
    pub fn to_json(&self) -> Value {
        let clocks: Vec<Value> = self.clocks.iter().skip(1).map(|c| json!({"name": c.name, "max": c.max})).collect();
        let tasks: Vec<Value> = self
            .tasks
            .iter()
            .map(|t| {
                json!({
                    "name": t.name,
                    "period": t.period,
                    "cycle_clock": t.cycle_clock.map(|c| &self.clocks[c].name),
                    "exec_clock": self.clocks[t.exec_clock].name,
                    "permanent": t.permanent_start.map(|c| &self.codels[c].label),
                    "locations": ["idle", "queued", "executing", "blocked"],
                })
            })
            .collect();
        let codels: Vec<Value> = self
            .codels
            .iter()
            .map(|c| {
                let yields: Vec<String> = c
                    .yields
                    .iter()
                    .map(|y| match y {
                        YieldRt::Ether => "ether".to_string(),
                        YieldRt::State { codel, pause } => {
                            format!("{}{}", if *pause { "pause::" } else { "" }, self.codels[*codel].state)
                        }
                    })
                    .collect();
                json!({
                    "label": c.label,
                    "function": c.function,
                    "guard": format!("exec >= {}", c.min),
                    "invariant": format!("exec <= {}", c.wcet),
                    "reads": c.reads.iter().map(|&r| &self.resource_names[r as usize]).collect::<Vec<_>>(),
                    "writes": c.writes.iter().map(|&r| &self.resource_names[r as usize]).collect::<Vec<_>>(),
                    "async": c.is_async,
                    "yields": yields,
                })
            })
            .collect();
        let arrivals: Vec<Value> = self
            .arrivals
            .iter()
            .map(|a| json!({"service": self.service_name(a.component, a.service), "guard": format!("g >= {}", a.lo), "invariant": format!("g <= {}", a.hi)}))
            .collect();
        let observers: Vec<Value> = self
            .observers
            .iter()
            .map(|o| json!({"property": self.property_names[o.property], "clock": self.clocks[o.clock].name, "lo": o.lo, "hi": o.hi, "leave": o.leave}))
            .collect();
        json!({
            "cores": self.cores,
            "clocks": clocks,
            "tasks": tasks,
            "controls": self.controls.iter().map(|c| &c.name).collect::<Vec<_>>(),
            "async_slots": self.slots.iter().map(|s| &self.codels[s.codel].label).collect::<Vec<_>>(),
            "resources": self.resource_names,
            "codels": codels,
            "arrivals": arrivals,
            "invariants": self.invariants.iter().map(|(p, _)| &self.property_names[*p]).collect::<Vec<_>>(),
            "observers": observers,
        })
    }
}
