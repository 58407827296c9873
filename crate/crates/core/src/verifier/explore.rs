//! Breadth-first zone-graph exploration with inclusion subsumption.
//!
//! Successors of a whole BFS level are computed in parallel on a dedicated
//! rayon pool; they are then merged into the visited store sequentially in
//! frontier order, so the stored graph (and every verdict) does not depend
//! on the number of workers.

use crate::tts::{SymbolicState, TimedEdge, Tts};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

#[derive(Clone, Debug)]
pub struct ExploreConfig {
    /// Maximum number of stored states.
    pub budget: usize,
    pub subsumption: bool,
    pub workers: usize,
    /// Stop as soon as every monitored property is violated.
    pub stop_when_all_violated: bool,
}

impl Default for ExploreConfig {
    fn default() -> Self {
        ExploreConfig { budget: 5_000_000, subsumption: true, workers: 1, stop_when_all_violated: true }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Stats {
    /// States kept in the visited store (including ones later covered).
    pub states: usize,
    /// States whose successors were computed.
    pub explored: usize,
    /// New states discarded because a stored zone included them.
    pub subsumed: usize,
    /// Stored states removed because a new zone included them.
    pub covered: usize,
    pub transitions: usize,
    pub diverging: usize,
    pub peak_frontier: usize,
    pub elapsed_ms: u64,
}

pub struct Node {
    pub state: SymbolicState,
    pub parent: Option<usize>,
    pub edge: Option<TimedEdge>,
    covered: bool,
}

pub struct Exploration {
    pub nodes: Vec<Node>,
    pub stats: Stats,
    /// First node found violating each property (by property index).
    pub violations: BTreeMap<usize, usize>,
    /// The budget ran out before the graph was complete.
    pub exhausted: bool,
    /// Per observer: largest upper bound of its clock over pending states,
    /// `None` when never pending, `Some(i32::MAX)` when unbounded.
    pub observer_sup: Vec<Option<i32>>,
    /// Per observer: whether the trigger ever held.
    pub triggered: Vec<bool>,
}

impl Exploration {
    /// Edges from the initial state to `node`.
    pub fn path(&self, mut node: usize) -> Vec<TimedEdge> {
        let mut edges = Vec::new();
        while let Some(p) = self.nodes[node].parent {
            edges.push(self.nodes[node].edge.clone().expect("non-root nodes have an edge"));
            node = p;
        }
        edges.reverse();
        edges
    }
}

fn observe_node(tts: &Tts, s: &SymbolicState, sup: &mut [Option<i32>], triggered: &mut [bool]) {
    for (i, o) in tts.observers.iter().enumerate() {
        let st = &s.discrete.observers[i];
        if st.trigger || st.pending {
            triggered[i] = true;
        }
        if st.pending {
            let ub = s.zone.upper(o.clock).map(|(v, _)| v).unwrap_or(i32::MAX);
            sup[i] = Some(sup[i].map_or(ub, |x| x.max(ub)));
        }
    }
}

pub fn explore(tts: &Tts, cfg: &ExploreConfig) -> Exploration {
    let started = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers.max(1)).build().expect("thread pool");
    let n_props = tts.property_names.len();
    let mut ex = Exploration {
        nodes: Vec::new(),
        stats: Stats::default(),
        violations: BTreeMap::new(),
        exhausted: false,
        observer_sup: vec![None; tts.observers.len()],
        triggered: vec![false; tts.observers.len()],
    };
    let mut visited: HashMap<crate::tts::Discrete, Vec<usize>> = HashMap::new();

    let (root, root_viol) = tts.initial_state();
    observe_node(tts, &root, &mut ex.observer_sup, &mut ex.triggered);
    ex.nodes.push(Node { state: root.clone(), parent: None, edge: None, covered: false });
    visited.entry(root.discrete).or_default().push(0);
    for p in root_viol {
        ex.violations.entry(p).or_insert(0);
    }
    ex.stats.states = 1;
    let mut frontier = vec![0usize];
    let all_violated = |ex: &Exploration| cfg.stop_when_all_violated && n_props > 0 && ex.violations.len() == n_props;

    while !frontier.is_empty() && !all_violated(&ex) {
        ex.stats.peak_frontier = ex.stats.peak_frontier.max(frontier.len());
        let nodes = &ex.nodes;
        let succs: Vec<_> = pool.install(|| frontier.par_iter().map(|&i| tts.successors(&nodes[i].state)).collect());
        ex.stats.explored += frontier.len();
        let mut next = Vec::new();
        'merge: for (&parent, list) in frontier.iter().zip(succs) {
            for s in list {
                ex.stats.transitions += 1;
                if s.diverging {
                    ex.stats.diverging += 1;
                    continue;
                }
                let violating = s.violations.iter().any(|p| !ex.violations.contains_key(p));
                let bucket = visited.entry(s.state.discrete.clone()).or_default();
                if !violating {
                    let dominated = if cfg.subsumption {
                        bucket.iter().any(|&j| ex.nodes[j].state.zone.includes(&s.state.zone))
                    } else {
                        bucket.iter().any(|&j| ex.nodes[j].state.zone == s.state.zone)
                    };
                    if dominated {
                        ex.stats.subsumed += 1;
                        continue;
                    }
                }
                if cfg.subsumption {
                    let nodes = &mut ex.nodes;
                    bucket.retain(|&j| {
                        let inc = s.state.zone.includes(&nodes[j].state.zone);
                        if inc {
                            nodes[j].covered = true;
                        }
                        !inc
                    });
                }
                let idx = ex.nodes.len();
                bucket.push(idx);
                observe_node(tts, &s.state, &mut ex.observer_sup, &mut ex.triggered);
                for &p in &s.violations {
                    ex.violations.entry(p).or_insert(idx);
                }
                ex.nodes.push(Node { state: s.state, parent: Some(parent), edge: Some(s.edge), covered: false });
                ex.stats.states += 1;
                next.push(idx);
                if ex.stats.states >= cfg.budget {
                    ex.exhausted = true;
                    break 'merge;
                }
            }
        }
        if ex.exhausted {
            break;
        }
        ex.stats.covered = ex.nodes.iter().filter(|n| n.covered).count();
        frontier = next.into_iter().filter(|&i| !ex.nodes[i].covered).collect();
    }
    ex.stats.covered = ex.nodes.iter().filter(|n| n.covered).count();
    ex.stats.elapsed_ms = started.elapsed().as_millis() as u64;
    ex
}

/// Invariants that must hold in every stored state; checked by tests on the
/// whole corpus.
pub fn check_structural(tts: &Tts, ex: &Exploration) -> Result<(), String> {
    for (i, n) in ex.nodes.iter().enumerate() {
        let d = &n.state.discrete;
        if d.cores_held() > tts.cores as usize || d.cores_held() + d.free_cores as usize != tts.cores as usize {
            return Err(format!("state {}: core accounting broken", i));
        }
        let mut readers = vec![0i32; d.locks.len()];
        let mut writers = vec![0i32; d.locks.len()];
        let holders = tts.running(d);
        for (_, c) in &holders {
            let c = &tts.codels[*c as usize];
            for &r in &c.reads {
                readers[r as usize] += 1;
            }
            for &r in &c.writes {
                writers[r as usize] += 1;
            }
        }
        for r in 0..d.locks.len() {
            if writers[r] > 1 || (writers[r] == 1 && readers[r] > 0) {
                return Err(format!("state {}: resource {} held in conflict", i, tts.resource_names[r]));
            }
            let expect = if writers[r] == 1 { -1 } else { readers[r] as i8 };
            if d.locks[r] != expect {
                return Err(format!("state {}: lock table out of sync for {}", i, tts.resource_names[r]));
            }
        }
        for (t, ts) in d.tasks.iter().enumerate() {
            if ts.exec.is_some() && ts.phase != crate::tts::Phase::Running {
                return Err(format!("state {}: task {} executes without a core", i, tts.tasks[t].name));
            }
        }
    }
    Ok(())
}
