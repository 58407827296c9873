//! Random small systems for property tests.
//!
//! A generated component has a few periodic tasks, each with a permanent
//! activity whose codels touch three IDS fields with random directions,
//! and optionally an aperiodic task running a requested activity.

use codelv::semantic::{resolve, SystemModel};
use codelv::spec_ast::{parse_component, parse_properties, parse_scenario, Property, Scenario};
use proptest::prelude::*;
use std::fmt::Write;

#[derive(Clone, Debug)]
pub struct CodelGen {
    /// Direction per IDS field: 0 none, 1 in, 2 out, 3 inout.
    pub access: [u8; 3],
    pub wcet: u32,
    pub min: u32,
    /// Pause before moving on to the next state.
    pub pause: bool,
    /// Extra yield target of the last codel, as a state index.
    pub branch: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct TaskGen {
    pub period_ms: u32,
    pub codels: Vec<CodelGen>,
}

#[derive(Clone, Debug)]
pub struct SystemGen {
    pub tasks: Vec<TaskGen>,
    /// WCETs of the requested activity's codels and its request window (µs).
    pub activity: Option<(Vec<CodelGen>, u32, u32)>,
}

fn codel() -> impl Strategy<Value = CodelGen> {
    (prop::array::uniform3(0u8..4), 1u32..=90, 0u32..=100, any::<bool>(), prop::option::of(0usize..3)).prop_map(
        |(access, w, min_pct, pause, branch)| {
            let wcet = w * 10;
            CodelGen { access, wcet, min: wcet * min_pct / 100, pause, branch }
        },
    )
}

fn task() -> impl Strategy<Value = TaskGen> {
    (prop::sample::select(vec![1u32, 2, 4]), prop::collection::vec(codel(), 1..=3))
        .prop_map(|(period_ms, codels)| TaskGen { period_ms, codels })
}

pub fn system() -> impl Strategy<Value = SystemGen> {
    (
        prop::collection::vec(task(), 1..=3),
        prop::option::of((prop::collection::vec(codel(), 1..=2), 0u32..=3000, 0u32..=500)),
    )
        .prop_map(|(tasks, act)| SystemGen { tasks, activity: act.map(|(c, lo, len)| (c, lo, lo + len)) })
}

fn args(access: &[u8; 3]) -> String {
    let mut v = Vec::new();
    for (f, d) in ["a", "b", "c"].iter().zip(access) {
        match d {
            1 => v.push(format!("in {}", f)),
            2 => v.push(format!("out {}", f)),
            3 => v.push(format!("inout {}", f)),
            _ => {}
        }
    }
    v.join(", ")
}

fn fsm(out: &mut String, prefix: &str, codels: &[CodelGen], last_yield: &str) {
    let state = |i: usize| if i == 0 { "start".to_string() } else { format!("s{}", i) };
    for (i, c) in codels.iter().enumerate() {
        let next = if i + 1 < codels.len() {
            format!("{}{}", if c.pause { "pause::" } else { "" }, state(i + 1))
        } else {
            match c.branch.filter(|&b| b < codels.len()) {
                Some(b) => format!("{}, pause::{}", last_yield, state(b)),
                None => last_yield.to_string(),
            }
        };
        let _ = writeln!(
            out,
            "    codel<{}> {}_{}({}) yield {} wcet {}us min {}us;",
            state(i),
            prefix,
            i,
            args(&c.access),
            next,
            c.wcet,
            c.min
        );
    }
}

impl SystemGen {
    pub fn source(&self) -> String {
        let mut s = String::from("component r {\n  ids { int a; int b; int c; };\n");
        for (k, t) in self.tasks.iter().enumerate() {
            let _ = writeln!(s, "  task t{} {{\n    period {}ms;", k, t.period_ms);
            fsm(&mut s, &format!("f{}", k), &t.codels, "pause::start");
            s.push_str("  };\n");
        }
        if let Some((codels, _, _)) = &self.activity {
            s.push_str("  task srv {\n  };\n  activity act() {\n    task srv;\n");
            fsm(&mut s, "g", codels, "ether");
            s.push_str("  };\n");
        }
        s.push_str("};\n");
        s
    }

    pub fn model(&self) -> SystemModel {
        let src = self.source();
        let spec = parse_component(&src).unwrap_or_else(|e| panic!("{:?}\n{}", e, src));
        resolve(vec![spec], &[]).unwrap_or_else(|e| panic!("{:?}\n{}", e.diagnostics, src))
    }

    pub fn scenario(&self) -> Scenario {
        match &self.activity {
            Some((_, lo, hi)) => parse_scenario(&format!("horizon 20ms\nat {}us..{}us request r.act()\n", lo, hi)).expect("scenario"),
            None => Scenario::default(),
        }
    }

    /// Response time from the request to the start of the activity.
    pub fn response(&self) -> Option<Property> {
        self.activity.as_ref()?;
        let src = "property reach_start is (r/control_task/state act_req) leadsto (r/act/state start) within [0, 1s]";
        Some(parse_properties(src).expect("property").properties.remove(0))
    }
}
