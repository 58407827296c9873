//! Zone-graph semantics: symbolic states and their successors.

use super::engine::{Clocks, Engine, NullSink, TimedEdge};
use super::state::Discrete;
use super::{ClockId, Tts};
use crate::zone::Dbm;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SymbolicState {
    pub discrete: Discrete,
    /// Time-closed: contains every valuation reachable by delaying.
    pub zone: Dbm,
}

#[derive(Clone, Debug)]
pub struct Successor {
    pub edge: TimedEdge,
    pub state: SymbolicState,
    /// Properties violated while taking the edge or delaying afterwards.
    pub violations: Vec<usize>,
    /// No event can ever occur again.
    pub diverging: bool,
}

impl Clocks for Dbm {
    fn reset(&mut self, c: ClockId) {
        Dbm::reset(self, c, 0);
    }

    fn free(&mut self, c: ClockId) {
        Dbm::free(self, c);
    }

    fn may_be_below(&self, c: ClockId, v: u32) -> bool {
        !self.is_empty() && self.lower(c).0 < v as i32
    }
}

/// How a zone is post-processed after each step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Abstraction {
    Extrapolate,
    /// Exact zones; used when reconstructing concrete witnesses.
    None,
}

impl Tts {
    pub fn initial_state(&self) -> (SymbolicState, Vec<usize>) {
        let mut d = Discrete::new(self);
        let mut z = Dbm::zero(self.clock_count());
        let mut violations = {
            let mut sink = NullSink;
            let mut e = Engine::new(self, &mut d, &mut z, &mut sink);
            e.launch();
            e.violations
        };
        self.delay(&d, &mut z, &mut violations, Abstraction::Extrapolate);
        (SymbolicState { discrete: d, zone: z }, violations)
    }

    /// Time elapse under the location invariants. A pending observer whose
    /// clock can exceed its bound records a violation; the zone is then
    /// restricted to the part where the bound still holds.
    pub fn delay(&self, d: &Discrete, z: &mut Dbm, violations: &mut Vec<usize>, abs: Abstraction) {
        z.up();
        for (c, v) in self.invariants_of(d) {
            z.constrain_upper(c, v as i32, false);
        }
        for (i, o) in self.observers.iter().enumerate() {
            if d.observers[i].pending {
                let mut probe = z.clone();
                if probe.constrain_lower(o.clock, o.hi as i32, true) && !violations.contains(&o.property) {
                    violations.push(o.property);
                }
                z.constrain_upper(o.clock, o.hi as i32, false);
            }
        }
        if abs == Abstraction::Extrapolate {
            z.extrapolate(&self.max_constants());
        }
    }

    /// Tasks whose period signal is due somewhere in `z`.
    pub fn due_periods(&self, z: &Dbm) -> Vec<u16> {
        let mut due = Vec::new();
        for (i, t) in self.tasks.iter().enumerate() {
            if let (Some(p), Some(c)) = (t.period, t.cycle_clock) {
                let mut probe = z.clone();
                if probe.constrain_lower(c, p as i32, false) {
                    due.push(i as u16);
                }
            }
        }
        due
    }

    /// Applies the guard of `edge` to `z`; `false` if it cannot fire.
    pub fn apply_guard(&self, d: &Discrete, edge: &TimedEdge, z: &mut Dbm) -> bool {
        match edge {
            TimedEdge::Period(set) => {
                for (i, t) in self.tasks.iter().enumerate() {
                    if let (Some(p), Some(c)) = (t.period, t.cycle_clock) {
                        let ok = if set.contains(&(i as u16)) {
                            z.constrain_lower(c, p as i32, false)
                        } else {
                            z.constrain_upper(c, p as i32, true)
                        };
                        if !ok {
                            return false;
                        }
                    }
                }
                !set.is_empty()
            }
            TimedEdge::Diverge => true,
            other => match self.edges_of(d).into_iter().find(|(e, _)| e == other) {
                Some((_, Some((c, v)))) => z.constrain_lower(c, v as i32, false),
                Some((_, None)) => true,
                None => false,
            },
        }
    }

    /// Takes `edge` from `s` with an explicit abstraction choice.
    pub fn step(&self, s: &SymbolicState, edge: &TimedEdge, abs: Abstraction) -> Option<Successor> {
        let mut z = s.zone.clone();
        if !self.apply_guard(&s.discrete, edge, &mut z) {
            return None;
        }
        let mut d = s.discrete.clone();
        let mut violations = {
            let mut sink = NullSink;
            let mut e = Engine::new(self, &mut d, &mut z, &mut sink);
            e.fire(edge);
            e.violations
        };
        self.delay(&d, &mut z, &mut violations, abs);
        if z.is_empty() {
            return None;
        }
        Some(Successor { edge: edge.clone(), state: SymbolicState { discrete: d, zone: z }, violations, diverging: false })
    }

    pub fn successors(&self, s: &SymbolicState) -> Vec<Successor> {
        let mut edges: Vec<TimedEdge> = self.edges_of(&s.discrete).into_iter().map(|(e, _)| e).collect();
        let due = self.due_periods(&s.zone);
        if !due.is_empty() {
            edges.push(TimedEdge::Period(due));
        }
        if edges.is_empty() {
            return vec![Successor { edge: TimedEdge::Diverge, state: s.clone(), violations: Vec::new(), diverging: true }];
        }
        edges.iter().filter_map(|e| self.step(s, e, Abstraction::Extrapolate)).collect()
    }
}
