//! Zone-based model checking of the timed model.
//!
//! Invariant properties are checked together in a single exploration; each
//! bounded-response property gets its own observer and exploration. Every
//! violation comes with a concrete, replayable witness when one can be
//! built.

mod explore;
mod witness;

pub use explore::{check_structural, explore, ExploreConfig, Exploration, Node, Stats};
pub use witness::{build as build_witness, Goal, Witness};

use crate::semantic::SystemModel;
use crate::spec_ast::{Property, Scenario};
use crate::tts::{build_tts, default_schedulability, Tts, TtsError, TtsOptions};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Model(#[from] TtsError),
    #[error("property `{0}` is not a bounded-response property")]
    NotLeadsTo(String),
    #[error("no property to check")]
    NoProperty,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Holds,
    Violated,
    /// The state budget ran out before a verdict.
    Inconclusive,
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub explore: ExploreConfig,
    pub exclusive_locks: bool,
    /// Every codel takes exactly its WCET.
    pub pinned_durations: bool,
    pub witnesses: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { explore: ExploreConfig::default(), exclusive_locks: false, pinned_durations: false, witnesses: true }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PropertyResult {
    pub name: String,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub cores: u32,
    pub results: Vec<PropertyResult>,
    /// One entry per exploration.
    pub runs: Vec<Stats>,
}

impl Report {
    pub fn all_hold(&self) -> bool {
        self.results.iter().all(|r| r.verdict == Verdict::Holds)
    }

    pub fn any_violated(&self) -> bool {
        self.results.iter().any(|r| r.verdict == Verdict::Violated)
    }

    pub fn result(&self, name: &str) -> Option<&PropertyResult> {
        self.results.iter().find(|r| r.name == name)
    }

    pub fn total_states(&self) -> usize {
        self.runs.iter().map(|s| s.states).sum()
    }
}

fn tts_for(model: &SystemModel, scenario: &Scenario, cores: u32, props: Vec<Property>, opts: &VerifyOptions) -> Result<Tts, TtsError> {
    build_tts(
        model,
        cores,
        scenario,
        &TtsOptions { exclusive_locks: opts.exclusive_locks, properties: props, pinned_durations: opts.pinned_durations },
    )
}

/// Result of one exploration for every property of `tts`.
fn judge(tts: &Tts, ex: &Exploration, opts: &VerifyOptions) -> Vec<PropertyResult> {
    let mut out = Vec::new();
    for (p, name) in tts.property_names.iter().enumerate() {
        let mut warnings = Vec::new();
        let verdict = if ex.violations.contains_key(&p) {
            Verdict::Violated
        } else if ex.exhausted {
            Verdict::Inconclusive
        } else {
            Verdict::Holds
        };
        if let Some(k) = tts.observers.iter().position(|o| o.property == p) {
            if !ex.triggered[k] && !ex.exhausted {
                warnings.push(format!("`{}` holds vacuously: its trigger never occurs", name));
            }
        }
        let witness = if verdict == Verdict::Violated && opts.witnesses {
            match witness_for(tts, ex, p) {
                Ok(w) => Some(w),
                Err(e) => {
                    warnings.push(format!("no concrete witness: {}", e));
                    None
                }
            }
        } else {
            None
        };
        out.push(PropertyResult { name: name.clone(), verdict, witness, warnings });
    }
    out
}

fn witness_for(tts: &Tts, ex: &Exploration, p: usize) -> Result<Witness, String> {
    let node = ex.violations[&p];
    let path = ex.path(node);
    let n = &ex.nodes[node];
    let pending = tts.observers.iter().enumerate().any(|(k, o)| o.property == p && n.state.discrete.observers[k].pending);
    if pending {
        if let Ok(w) = build_witness(tts, &path, Goal::BoundExceeded(p)) {
            return Ok(w);
        }
    }
    build_witness(tts, &path, Goal::OnEdge(p))
}

/// Checks `props` (the default schedulability properties when empty) on
/// `cores` cores.
pub fn verify(model: &SystemModel, scenario: &Scenario, props: &[Property], cores: u32, opts: &VerifyOptions) -> Result<Report, VerifyError> {
    let props: Vec<Property> = if props.is_empty() { default_schedulability(model) } else { props.to_vec() };
    if props.is_empty() {
        return Err(VerifyError::NoProperty);
    }
    let invariants: Vec<Property> = props.iter().filter(|p| matches!(p, Property::Invariant { .. })).cloned().collect();
    let mut results = Vec::new();
    let mut runs = Vec::new();
    if !invariants.is_empty() {
        let tts = tts_for(model, scenario, cores, invariants, opts)?;
        let ex = explore(&tts, &opts.explore);
        results.extend(judge(&tts, &ex, opts));
        runs.push(ex.stats);
    }
    for p in props.iter().filter(|p| matches!(p, Property::LeadsToWithin { .. })) {
        let tts = tts_for(model, scenario, cores, vec![p.clone()], opts)?;
        let ex = explore(&tts, &opts.explore);
        results.extend(judge(&tts, &ex, opts));
        runs.push(ex.stats);
    }
    // report in declaration order
    results.sort_by_key(|r| props.iter().position(|p| p.name() == r.name));
    Ok(Report { cores, results, runs })
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundResult {
    pub property: String,
    /// Smallest integer bound (µs) under which the property holds; `None`
    /// when the trigger never occurs.
    pub bound: Option<u64>,
    /// Verdict with the bound and with the bound minus one.
    pub at_bound: Option<Verdict>,
    pub below_bound: Option<Verdict>,
    pub runs: Vec<Stats>,
}

const MAX_PROBE_GROWTHS: u32 = 3;

fn with_hi(p: &Property, new_hi: u64) -> Property {
    match p {
        Property::LeadsToWithin { name, trigger, target, leave, .. } => Property::LeadsToWithin {
            name: name.clone(),
            trigger: trigger.clone(),
            target: target.clone(),
            lo: 0,
            hi: new_hi,
            leave: *leave,
        },
        other => other.clone(),
    }
}

/// Tightest upper bound of a bounded-response property. The lower end of
/// the interval is ignored.
pub fn compute_bound(model: &SystemModel, scenario: &Scenario, prop: &Property, cores: u32, opts: &VerifyOptions) -> Result<BoundResult, VerifyError> {
    let Property::LeadsToWithin { hi, .. } = prop else {
        return Err(VerifyError::NotLeadsTo(prop.name().to_string()));
    };
    let quiet = VerifyOptions { witnesses: false, explore: ExploreConfig { stop_when_all_violated: true, ..opts.explore.clone() }, ..opts.clone() };
    let mut runs = Vec::new();
    let check = |h: u64, runs: &mut Vec<Stats>| -> Result<(Verdict, Option<i32>, bool), VerifyError> {
        let tts = tts_for(model, scenario, cores, vec![with_hi(prop, h)], &quiet)?;
        let cfg = ExploreConfig { stop_when_all_violated: false, ..quiet.explore.clone() };
        let ex = explore(&tts, &cfg);
        let r = judge(&tts, &ex, &quiet);
        runs.push(ex.stats.clone());
        Ok((r[0].verdict, ex.observer_sup[0], ex.triggered[0]))
    };

    // Probe with a generous bound and read off the largest observer clock.
    // A violation at every probe means the response is unbounded (or far
    // beyond the declared one); growth stops after a few attempts.
    let mut h = (*hi).max(1000) * 4;
    let mut growths = 0;
    let bound = loop {
        let (v, sup, triggered) = check(h, &mut runs)?;
        if !triggered && v != Verdict::Inconclusive {
            return Ok(BoundResult { property: prop.name().into(), bound: None, at_bound: None, below_bound: None, runs });
        }
        match v {
            Verdict::Holds => break sup.map(|s| s.max(0) as u64).unwrap_or(0),
            Verdict::Inconclusive => {
                return Ok(BoundResult { property: prop.name().into(), bound: None, at_bound: Some(v), below_bound: None, runs })
            }
            Verdict::Violated if growths < MAX_PROBE_GROWTHS && h < (i32::MAX as u64) / 8 => {
                growths += 1;
                h *= 4;
            }
            Verdict::Violated => {
                return Ok(BoundResult { property: prop.name().into(), bound: None, at_bound: Some(v), below_bound: None, runs })
            }
        }
    };

    // Confirm; fall back to a binary search if the probe was not tight.
    let mut b = bound;
    let mut at = check(b, &mut runs)?.0;
    let mut below = if b > 0 { Some(check(b - 1, &mut runs)?.0) } else { None };
    if at != Verdict::Holds || below.is_some_and(|v| v != Verdict::Violated) {
        let (mut lo, mut hi_b) = (0u64, h);
        while lo < hi_b {
            let mid = lo + (hi_b - lo) / 2;
            if check(mid, &mut runs)?.0 == Verdict::Holds {
                hi_b = mid;
            } else {
                lo = mid + 1;
            }
        }
        b = lo;
        at = check(b, &mut runs)?.0;
        below = if b > 0 { Some(check(b - 1, &mut runs)?.0) } else { None };
    }
    Ok(BoundResult { property: prop.name().into(), bound: Some(b), at_bound: Some(at), below_bound: below, runs })
}

#[derive(Clone, Debug, Serialize)]
pub struct MinCores {
    /// Smallest core count on which every property holds.
    pub cores: Option<u32>,
    /// Whether some smaller core count could not be decided.
    pub uncertain: bool,
    pub tried: Vec<(u32, Verdict)>,
    pub runs: Vec<Stats>,
}

/// Linear scan over `1..=max_cores`.
pub fn min_cores(model: &SystemModel, scenario: &Scenario, props: &[Property], max_cores: u32, opts: &VerifyOptions) -> Result<MinCores, VerifyError> {
    let quiet = VerifyOptions { witnesses: false, ..opts.clone() };
    let mut out = MinCores { cores: None, uncertain: false, tried: Vec::new(), runs: Vec::new() };
    for n in 1..=max_cores {
        let r = verify(model, scenario, props, n, &quiet)?;
        out.runs.extend(r.runs.iter().cloned());
        let v = if r.any_violated() {
            Verdict::Violated
        } else if r.all_hold() {
            Verdict::Holds
        } else {
            Verdict::Inconclusive
        };
        out.tried.push((n, v));
        match v {
            Verdict::Holds => {
                out.cores = Some(n);
                break;
            }
            Verdict::Inconclusive => out.uncertain = true,
            Verdict::Violated => {}
        }
    }
    Ok(out)
}
