//! Observable predicates compiled against a TTS.

use super::state::{Discrete, Phase};
use super::Tts;
use crate::semantic::{CodelOwner, SystemModel};
use crate::spec_ast::{Pred, Property, Timing};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CPred {
    Const(bool),
    Not(Box<CPred>),
    And(Box<CPred>, Box<CPred>),
    Or(Box<CPred>, Box<CPred>),
    Implies(Box<CPred>, Box<CPred>),
    TaskPhase(usize, Phase),
    TaskBlocked(usize),
    /// The task is executing one of these codels.
    TaskCodel(usize, u32),
    /// Some executor (task or async slot) is running this codel.
    CodelRunning(Vec<u32>),
    ControlPhase(usize, Phase),
    ControlRequest(usize, u16),
    Overrun(usize),
}

impl CPred {
    pub fn eval(&self, tts: &Tts, d: &Discrete) -> bool {
        match self {
            CPred::Const(b) => *b,
            CPred::Not(p) => !p.eval(tts, d),
            CPred::And(a, b) => a.eval(tts, d) && b.eval(tts, d),
            CPred::Or(a, b) => a.eval(tts, d) || b.eval(tts, d),
            CPred::Implies(a, b) => !a.eval(tts, d) || b.eval(tts, d),
            CPred::TaskPhase(t, p) => d.tasks[*t].phase == *p,
            CPred::TaskBlocked(t) => matches!(d.tasks[*t].exec, Some(e) if !e.running),
            CPred::TaskCodel(t, c) => matches!(d.tasks[*t].exec, Some(e) if e.running && e.codel == *c),
            CPred::CodelRunning(ids) => {
                d.tasks.iter().any(|t| matches!(t.exec, Some(e) if e.running && ids.contains(&e.codel)))
                    || d.slots.iter().enumerate().any(|(i, s)| s.is_some() && ids.contains(&(tts.slots[i].codel as u32)))
            }
            CPred::ControlPhase(c, p) => d.controls[*c].phase == *p,
            CPred::ControlRequest(c, s) => d.controls[*c].requests.contains(s),
            CPred::Overrun(t) => d.tasks[*t].overrun,
        }
    }
}

/// Component of the first qualified atom, used to resolve bare
/// `<task>_period_signal` names.
pub(crate) fn context_component(p: &Pred) -> Option<String> {
    match p {
        Pred::State { component, .. } => Some(component.clone()),
        Pred::PeriodSignal { component, .. } => component.clone(),
        Pred::Not(a) => context_component(a),
        Pred::And(a, b) | Pred::Or(a, b) | Pred::Implies(a, b) => context_component(a).or_else(|| context_component(b)),
        Pred::True | Pred::False => None,
    }
}

pub(crate) fn compile(tts: &Tts, model: &SystemModel, p: &Pred, ctx: Option<String>) -> Result<CPred, String> {
    let rec = |q: &Pred| compile(tts, model, q, ctx.clone());
    Ok(match p {
        Pred::True => CPred::Const(true),
        Pred::False => CPred::Const(false),
        Pred::Not(a) => CPred::Not(Box::new(rec(a)?)),
        Pred::And(a, b) => CPred::And(Box::new(rec(a)?), Box::new(rec(b)?)),
        Pred::Or(a, b) => CPred::Or(Box::new(rec(a)?), Box::new(rec(b)?)),
        Pred::Implies(a, b) => CPred::Implies(Box::new(rec(a)?), Box::new(rec(b)?)),
        Pred::PeriodSignal { component, task, .. } => {
            let candidates: Vec<usize> = tts
                .tasks
                .iter()
                .enumerate()
                .filter(|(_, t)| t.name.rsplit('/').next() == Some(task.as_str()))
                .filter(|(_, t)| component.as_ref().is_none_or(|c| &tts.component_names[t.component] == c))
                .map(|(i, _)| i)
                .collect();
            let pick = match candidates.len() {
                0 => return Err(format!("unknown task `{}` in `{}_period_signal`", task, task)),
                1 => candidates[0],
                _ => match &ctx {
                    Some(c) => *candidates
                        .iter()
                        .find(|&&i| &tts.component_names[tts.tasks[i].component] == c)
                        .ok_or_else(|| format!("ambiguous task `{}`", task))?,
                    None => return Err(format!("ambiguous task `{}`: qualify it with a component", task)),
                },
            };
            if tts.tasks[pick].period.is_none() {
                return Err(format!("task `{}` is not periodic", task));
            }
            CPred::Overrun(pick)
        }
        Pred::State { component, entity, state, .. } => {
            let ci = model.component_index(component).ok_or_else(|| format!("unknown component `{}`", component))?;
            let comp = &model.components[ci];
            if entity == "control_task" {
                let c = tts.controls.iter().position(|c| c.component == ci).expect("one control task per component");
                return match state.as_str() {
                    "idle" => Ok(CPred::ControlPhase(c, Phase::Idle)),
                    "executing" => Ok(CPred::ControlPhase(c, Phase::Running)),
                    "queued" => Ok(CPred::ControlPhase(c, Phase::Queued)),
                    s => match s.strip_suffix("_req").and_then(|svc| comp.service_index(svc)) {
                        Some(si) => Ok(CPred::ControlRequest(c, si as u16)),
                        None => Err(format!("unknown control task state `{}`", s)),
                    },
                };
            }
            if let Some(ti) = comp.task_index(entity) {
                let t = tts.tasks.iter().position(|t| t.component == ci && t.local == ti).expect("task indexed");
                return match state.as_str() {
                    "idle" => Ok(CPred::TaskPhase(t, Phase::Idle)),
                    "queued" => Ok(CPred::TaskPhase(t, Phase::Queued)),
                    "executing" => Ok(CPred::TaskPhase(t, Phase::Running)),
                    "blocked" => Ok(CPred::TaskBlocked(t)),
                    s => match comp.state_codel(&CodelOwner::Task(ti), s) {
                        Some(c) => Ok(CPred::TaskCodel(t, c as u32)),
                        None => Err(format!("task `{}/{}` has no state `{}`", component, entity, s)),
                    },
                };
            }
            if let Some(si) = comp.service_index(entity) {
                return match comp.state_codel(&CodelOwner::Service(si), state) {
                    Some(c) => Ok(CPred::CodelRunning(vec![c as u32])),
                    None => Err(format!("service `{}/{}` has no state `{}`", component, entity, state)),
                };
            }
            return Err(format!("unknown task or service `{}/{}`", component, entity));
        }
    })
}

/// `always (executing => not period_signal)` for every periodic task.
pub fn default_schedulability(model: &SystemModel) -> Vec<Property> {
    let mut out = Vec::new();
    for c in &model.components {
        let mut tasks: Vec<_> = c.spec.tasks.iter().filter(|t| matches!(t.timing, Timing::Periodic { .. })).collect();
        tasks.sort_by(|a, b| a.name.cmp(&b.name));
        for t in tasks {
            let pos = Default::default();
            out.push(Property::Invariant {
                name: format!("schedulability_{}_{}", c.name(), t.name),
                pred: Pred::Implies(
                    Box::new(Pred::State { component: c.name().into(), entity: t.name.clone(), state: "executing".into(), pos }),
                    Box::new(Pred::Not(Box::new(Pred::PeriodSignal { component: Some(c.name().into()), task: t.name.clone(), pos }))),
                ),
            });
        }
    }
    out
}
