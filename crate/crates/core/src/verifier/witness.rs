//! Concrete counterexamples from symbolic paths.
//!
//! The edge sequence to a violating node is recomputed on exact zones with
//! one extra clock that measures absolute time. Walking backwards, each step
//! keeps only the valuations from which the rest of the path (and the
//! violation) is still reachable; walking forwards again, every edge fires
//! at the earliest integer instant inside that region. The resulting timed
//! schedule is re-executed concretely to produce the trace.

use crate::simulator::{run_schedule, EventKind, Trace, BOUND_EXCEEDED};
use crate::tts::{Abstraction, ClockId, Clocks, Discrete, Engine, NullSink, TimedEdge, Tts};
use crate::zone::Dbm;
use serde::Serialize;
use std::cell::RefCell;

#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    /// Timed decisions from launch: `(instant in µs, edge)`.
    pub schedule: Vec<(u64, TimedEdge)>,
    pub trace: Trace,
}

#[derive(Clone, Copy, Debug)]
enum Op {
    Reset(ClockId),
    Free(ClockId),
    Below(ClockId, u32),
}

struct Recording {
    z: Dbm,
    ops: RefCell<Vec<Op>>,
}

impl Clocks for Recording {
    fn reset(&mut self, c: ClockId) {
        self.z.reset(c, 0);
        self.ops.get_mut().push(Op::Reset(c));
    }

    fn free(&mut self, c: ClockId) {
        self.z.free(c);
        self.ops.get_mut().push(Op::Free(c));
    }

    fn may_be_below(&self, c: ClockId, v: u32) -> bool {
        let r = Clocks::may_be_below(&self.z, c, v);
        if r {
            self.ops.borrow_mut().push(Op::Below(c, v));
        }
        r
    }
}

struct Step {
    /// Zone at the firing instant, guard applied (the zero zone for launch).
    pre: Dbm,
    ops: Vec<Op>,
    post_ops: Dbm,
    /// `post_ops` after delay, with the target observer left uncut.
    post_delay: Dbm,
    discrete: Discrete,
}

/// What the witness has to exhibit at its end.
#[derive(Clone, Copy, Debug)]
pub enum Goal {
    /// The property is violated while taking the last edge.
    OnEdge(usize),
    /// The observer of this property lets its clock pass the bound.
    BoundExceeded(usize),
}

fn undo(mut b: Dbm, ops: &[Op], below_clock: Option<ClockId>) -> Dbm {
    for op in ops.iter().rev() {
        match *op {
            Op::Reset(c) => {
                b.constrain_upper(c, 0, false);
                b.constrain_lower(c, 0, false);
                b.free(c);
            }
            Op::Free(c) => b.free(c),
            Op::Below(c, v) => {
                if below_clock == Some(c) {
                    b.constrain_upper(c, v as i32, true);
                }
            }
        }
    }
    b
}

fn replay_ops(z: &mut Dbm, ops: &[Op]) {
    for op in ops {
        match *op {
            Op::Reset(c) => z.reset(c, 0),
            Op::Free(c) => z.free(c),
            Op::Below(..) => {}
        }
    }
}

fn earliest(d: &mut Dbm, time_clock: ClockId) -> Option<u64> {
    if d.is_empty() {
        return None;
    }
    let (lo, strict) = d.lower(time_clock);
    let t = lo + strict as i32;
    if !d.constrain_upper(time_clock, t, false) || !d.constrain_lower(time_clock, t, false) {
        return None;
    }
    Some(t as u64)
}

/// Builds a concrete witness for `goal` along `path`.
pub fn build(tts: &Tts, path: &[TimedEdge], goal: Goal) -> Result<Witness, String> {
    let time_clock = tts.clock_count() + 1;
    let target_obs = |p: usize| tts.observers.iter().find(|o| o.property == p);
    let (goal_prop, bound_obs) = match goal {
        Goal::OnEdge(p) => (p, None),
        Goal::BoundExceeded(p) => (p, Some(target_obs(p).ok_or("bound goal on a property without observer")?)),
    };

    // forward pass on exact zones
    let mut steps: Vec<Step> = Vec::new();
    let mut d = Discrete::new(tts);
    let mut rec = Recording { z: Dbm::zero(tts.clock_count() + 1), ops: RefCell::new(Vec::new()) };
    let pre = rec.z.clone();
    {
        let mut sink = NullSink;
        Engine::new(tts, &mut d, &mut rec, &mut sink).launch();
    }
    let delayed = |d: &Discrete, z: &Dbm, last: bool| {
        let mut out = z.clone();
        let mut v = Vec::new();
        if last && bound_obs.is_some() {
            out.up();
            for (c, b) in tts.invariants_of(d) {
                out.constrain_upper(c, b as i32, false);
            }
        } else {
            tts.delay(d, &mut out, &mut v, Abstraction::None);
        }
        out
    };
    let n = path.len();
    steps.push(Step {
        pre,
        ops: rec.ops.take(),
        post_delay: delayed(&d, &rec.z, n == 0),
        post_ops: rec.z.clone(),
        discrete: d.clone(),
    });
    for (i, edge) in path.iter().enumerate() {
        let last = steps.last().expect("launch step");
        let mut g = last.post_delay.clone();
        let mut d = last.discrete.clone();
        if !tts.apply_guard(&d, edge, &mut g) {
            return Err(format!("step {}: edge not enabled on exact zones", i + 1));
        }
        let mut rec = Recording { z: g.clone(), ops: RefCell::new(Vec::new()) };
        {
            let mut sink = NullSink;
            Engine::new(tts, &mut d, &mut rec, &mut sink).fire(edge);
        }
        let post_delay = delayed(&d, &rec.z, i + 1 == n);
        if post_delay.is_empty() {
            return Err(format!("step {}: no time can elapse after the edge", i + 1));
        }
        steps.push(Step { pre: g, ops: rec.ops.take(), post_ops: rec.z, post_delay, discrete: d });
    }

    // backward pass: firing regions for every edge
    let below_clock = match goal {
        Goal::OnEdge(p) => target_obs(p).map(|o| o.clock),
        Goal::BoundExceeded(_) => None,
    };
    let mut final_region = None;
    let mut b = match bound_obs {
        Some(o) => {
            let mut w = steps[n].post_delay.clone();
            if !w.constrain_lower(o.clock, o.hi as i32, true) {
                return Err("the bound cannot be exceeded on exact zones".into());
            }
            final_region = Some(w.clone());
            w.down();
            w.intersect(&steps[n].post_ops);
            w
        }
        None => steps[n].post_ops.clone(),
    };
    let mut regions: Vec<Dbm> = vec![Dbm::zero(0); n + 1];
    for i in (0..=n).rev() {
        let below = if i == n { below_clock } else { None };
        let mut p = undo(std::mem::replace(&mut b, Dbm::zero(0)), &steps[i].ops, below);
        if !p.intersect(&steps[i].pre) {
            return Err(format!("step {}: no valuation completes the path", i));
        }
        regions[i] = p.clone();
        if i > 0 {
            p.down();
            p.intersect(&steps[i - 1].post_ops);
            b = p;
        }
    }

    // forward pass: earliest integer instants
    let mut f = Dbm::zero(tts.clock_count() + 1);
    replay_ops(&mut f, &steps[0].ops);
    let mut schedule = Vec::with_capacity(n);
    for i in 1..=n {
        f.up();
        if !f.intersect(&regions[i]) {
            return Err(format!("step {}: firing region unreachable", i));
        }
        let t = earliest(&mut f, time_clock).ok_or_else(|| format!("step {}: no integer firing instant", i))?;
        schedule.push((t, path[i - 1].clone()));
        replay_ops(&mut f, &steps[i].ops);
    }
    let end = match final_region {
        Some(w) => {
            f.up();
            f.intersect(&w);
            Some(earliest(&mut f, time_clock).ok_or("no integer instant exceeds the bound")?)
        }
        None => None,
    };

    // concrete re-execution
    let mut run = run_schedule(tts, &schedule).map_err(|(i, m)| format!("schedule step {}: {}", i + 1, m))?;
    match (goal, end) {
        (Goal::BoundExceeded(p), Some(t)) => {
            let o = bound_obs.expect("bound goal");
            let k = tts.observers.iter().position(|x| std::ptr::eq(x, o)).expect("observer");
            let x0 = run.clocks.reset_at[o.clock];
            if !run.d.observers[k].pending || x0.is_none_or(|x0| t - x0 <= o.hi as u64) {
                return Err("concrete run does not exceed the bound".into());
            }
            run.advance(t);
            run.rec.push(EventKind::PropertyViolated, tts.property_names[p].clone(), None, None, BOUND_EXCEEDED.into());
        }
        _ => {
            if !run.violations.contains(&goal_prop) {
                return Err("concrete run does not violate the property".into());
            }
        }
    }
    let trace: Trace = run.finish(false);
    Ok(Witness { schedule, trace })
}
