//! Resolved multi-component systems.
//!
//! [`resolve`] binds every codel argument to a lockable resource (one per IDS
//! field, one per port connection), computes the conflict relation between
//! codels and resolves interrupt clauses.

mod access;
mod fsm;
mod wiring;

pub use access::{codel_resources, Scope};
pub use fsm::{validate_fsm, validate_task_fsm};
pub use wiring::{parse_wiring, Connection, PortRef};

use crate::diag::Diagnostic;
use crate::spec_ast::{ArgDir, ComponentSpec, PortDir, ServiceKind, Timing, YieldTarget};
use serde::Serialize;
use serde_json::{json, Value};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use thiserror::Error;

pub type ResId = usize;
pub type CodelId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ResourceKind {
    Ids,
    Port,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Resource {
    /// `component.field` or, for ports, the writer's `component.port`.
    pub name: String,
    pub kind: ResourceKind,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ResourceAccessSet {
    pub reads: BTreeSet<ResId>,
    pub writes: BTreeSet<ResId>,
}

impl ResourceAccessSet {
    /// Writer/reader or writer/writer overlap.
    pub fn conflicts_with(&self, other: &ResourceAccessSet) -> bool {
        let hits = |w: &BTreeSet<ResId>, o: &ResourceAccessSet| w.iter().any(|r| o.reads.contains(r) || o.writes.contains(r));
        hits(&self.writes, other) || hits(&other.writes, self)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum CodelOwner {
    Task(usize),
    Service(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum CodelRole {
    State(String),
    Validate,
    /// Body of a function or attribute (implicit for attributes and
    /// predefined services).
    Body,
}

#[derive(Clone, Debug, Serialize)]
pub struct CodelInfo {
    pub component: usize,
    pub owner: CodelOwner,
    pub role: CodelRole,
    /// User function name; `None` for implicit bodies.
    pub function: Option<String>,
    /// `component/owner/state`, `component/service/validate` or `component/service/body`.
    pub label: String,
    pub wcet_us: u64,
    pub min_us: u64,
    pub is_async: bool,
    pub yields: Vec<YieldTarget>,
    pub access: ResourceAccessSet,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ServiceCodels {
    pub validate: Option<CodelId>,
    /// Activity FSM codels in declaration order.
    pub fsm: Vec<CodelId>,
    pub body: Option<CodelId>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ComponentInfo {
    pub spec: ComponentSpec,
    /// Permanent-activity codels per task, parallel to `spec.tasks[i].codels`.
    pub task_codels: Vec<Vec<CodelId>>,
    pub service_codels: Vec<ServiceCodels>,
    /// Execution task of each activity.
    pub service_task: Vec<Option<usize>>,
    /// Direct interrupt targets of each service.
    pub interrupts: Vec<Vec<usize>>,
}

impl ComponentInfo {
    pub fn name(&self) -> &str {
        &self.spec.name
    }

    pub fn service_index(&self, name: &str) -> Option<usize> {
        self.spec.services.iter().position(|s| s.name == name)
    }

    pub fn task_index(&self, name: &str) -> Option<usize> {
        self.spec.tasks.iter().position(|t| t.name == name)
    }

    /// FSM codel of an activity (or permanent activity) for a state.
    pub fn state_codel(&self, owner: &CodelOwner, state: &str) -> Option<usize> {
        let (decls, ids) = match owner {
            CodelOwner::Task(t) => (&self.spec.tasks[*t].codels, &self.task_codels[*t]),
            CodelOwner::Service(s) => (&self.spec.services[*s].codels, &self.service_codels[*s].fsm),
        };
        decls.iter().position(|c| c.state.as_deref() == Some(state)).map(|i| ids[i])
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SystemModel {
    /// Sorted by component name.
    pub components: Vec<ComponentInfo>,
    pub resources: Vec<Resource>,
    pub codels: Vec<CodelInfo>,
    /// Unordered pairs stored as `(a, b)` with `a <= b`.
    pub conflicts: BTreeSet<(CodelId, CodelId)>,
    /// (reader component, in-port) -> (writer component, out-port)
    pub port_wiring: BTreeMap<(String, String), (String, String)>,
    /// Warnings and infos produced during resolution.
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Clone, Debug, Error)]
#[error("{} error(s) while resolving the system", diagnostics.iter().filter(|d| d.is_error()).count())]
pub struct ResolveError {
    pub diagnostics: Vec<Diagnostic>,
}

pub fn resolve(specs: Vec<ComponentSpec>, wiring: &[Connection]) -> Result<SystemModel, ResolveError> {
    let mut diags = Vec::new();
    let mut specs = specs;
    specs.sort_by(|a, b| a.name.cmp(&b.name));
    for w in specs.windows(2) {
        if w[0].name == w[1].name {
            diags.push(Diagnostic::error(format!("duplicate component `{}`", w[1].name), Some(w[1].pos)));
        }
    }
    let comp_idx: HashMap<&str, usize> = specs.iter().enumerate().map(|(i, c)| (c.name.as_str(), i)).collect();

    // wiring
    let mut port_wiring = BTreeMap::new();
    for conn in wiring {
        let lookup = |r: &PortRef| {
            comp_idx
                .get(r.component.as_str())
                .map(|&ci| (ci, specs[ci].ports.iter().find(|p| p.name == r.port)))
        };
        let (Some((_, from)), Some((_, to))) = (lookup(&conn.from), lookup(&conn.to)) else {
            let bad = if lookup(&conn.from).is_none() { &conn.from } else { &conn.to };
            diags.push(Diagnostic::error(format!("unknown component `{}`", bad.component), Some(conn.pos)));
            continue;
        };
        let (Some(from), Some(to)) = (from, to) else {
            let bad = if from.is_none() { &conn.from } else { &conn.to };
            diags.push(Diagnostic::error(format!("unresolved port `{}`", bad), Some(conn.pos)));
            continue;
        };
        if from.dir != PortDir::Out {
            diags.push(Diagnostic::error(format!("direction mismatch: `{}` is not an out-port", conn.from), Some(conn.pos)));
            continue;
        }
        if to.dir != PortDir::In {
            diags.push(Diagnostic::error(format!("direction mismatch: `{}` is not an in-port", conn.to), Some(conn.pos)));
            continue;
        }
        if from.type_name != to.type_name {
            diags.push(Diagnostic::error(
                format!("type mismatch: `{}` carries {} but `{}` expects {}", conn.from, from.type_name, conn.to, to.type_name),
                Some(conn.pos),
            ));
            continue;
        }
        let key = (conn.to.component.clone(), conn.to.port.clone());
        if port_wiring.contains_key(&key) {
            diags.push(Diagnostic::error(format!("in-port `{}` wired twice", conn.to), Some(conn.pos)));
            continue;
        }
        port_wiring.insert(key, (conn.from.component.clone(), conn.from.port.clone()));
    }

    // resources
    let mut resources = Vec::new();
    let mut res_by_name: HashMap<String, ResId> = HashMap::new();
    let mut add = |name: String, kind: ResourceKind, resources: &mut Vec<Resource>| -> ResId {
        *res_by_name.entry(name.clone()).or_insert_with(|| {
            resources.push(Resource { name, kind });
            resources.len() - 1
        })
    };
    let mut scopes: Vec<(HashMap<String, ResId>, HashMap<String, (ResId, PortDir)>)> = Vec::new();
    for c in &specs {
        let mut ids = HashMap::new();
        for f in &c.ids {
            ids.insert(f.name.clone(), add(format!("{}.{}", c.name, f.name), ResourceKind::Ids, &mut resources));
        }
        let mut ports = HashMap::new();
        for p in &c.ports {
            let name = match (p.dir, port_wiring.get(&(c.name.clone(), p.name.clone()))) {
                (PortDir::In, Some((wc, wp))) => format!("{}.{}", wc, wp),
                _ => format!("{}.{}", c.name, p.name),
            };
            if p.dir == PortDir::In && !port_wiring.contains_key(&(c.name.clone(), p.name.clone())) {
                diags.push(Diagnostic::warning(format!("in-port {} unconnected", p.name), Some(p.pos)));
            }
            ports.insert(p.name.clone(), (add(name, ResourceKind::Port, &mut resources), p.dir));
        }
        scopes.push((ids, ports));
    }

    // codels
    let mut codels: Vec<CodelInfo> = Vec::new();
    let mut components = Vec::new();
    for (ci, c) in specs.iter().enumerate() {
        let (ids, ports) = &scopes[ci];
        let all_ids: Vec<ResId> = c.ids.iter().map(|f| ids[&f.name]).collect();
        for t in &c.tasks {
            diags.extend(validate_task_fsm(t));
        }
        let mut task_codels = Vec::new();
        for (ti, t) in c.tasks.iter().enumerate() {
            let scope = Scope { locals: BTreeSet::new(), ids, ports, all_ids: &all_ids };
            let mut v = Vec::new();
            for cd in &t.codels {
                let access = match codel_resources(cd, &scope) {
                    Ok(a) => a,
                    Err(m) => {
                        diags.push(Diagnostic::error(m, Some(cd.pos)));
                        ResourceAccessSet::default()
                    }
                };
                let st = cd.state.clone().unwrap_or_default();
                codels.push(CodelInfo {
                    component: ci,
                    owner: CodelOwner::Task(ti),
                    role: CodelRole::State(st.clone()),
                    function: Some(cd.function.clone()),
                    label: format!("{}/{}/{}", c.name, t.name, st),
                    wcet_us: cd.wcet_us.unwrap_or(0),
                    min_us: cd.min_us.unwrap_or(0),
                    is_async: cd.is_async,
                    yields: cd.yields.clone(),
                    access,
                });
                v.push(codels.len() - 1);
            }
            task_codels.push(v);
            if let Timing::Periodic { .. } = t.timing {
            } else if !t.has_permanent() && !c.services.iter().any(|s| s.task.as_deref() == Some(&t.name)) {
                diags.push(Diagnostic::warning(format!("task `{}` has no work", t.name), Some(t.pos)));
            }
        }
        let mut service_codels = Vec::new();
        let mut service_task = Vec::new();
        let mut interrupts = Vec::new();
        for (si, s) in c.services.iter().enumerate() {
            diags.extend(validate_fsm(s));
            let locals: BTreeSet<String> =
                s.args.iter().filter(|a| a.type_name.is_some()).map(|a| a.name.clone()).chain(s.locals.iter().map(|l| l.name.clone())).collect();
            let scope = Scope { locals, ids, ports, all_ids: &all_ids };
            let mut sc = ServiceCodels::default();
            let push = |cd: &crate::spec_ast::CodelDecl, role: CodelRole, codels: &mut Vec<CodelInfo>, diags: &mut Vec<Diagnostic>| {
                let access = match codel_resources(cd, &scope) {
                    Ok(a) => a,
                    Err(m) => {
                        diags.push(Diagnostic::error(m, Some(cd.pos)));
                        ResourceAccessSet::default()
                    }
                };
                let suffix = match &role {
                    CodelRole::State(st) => st.clone(),
                    CodelRole::Validate => "validate".into(),
                    CodelRole::Body => "body".into(),
                };
                codels.push(CodelInfo {
                    component: ci,
                    owner: CodelOwner::Service(si),
                    role,
                    function: Some(cd.function.clone()),
                    label: format!("{}/{}/{}", c.name, s.name, suffix),
                    wcet_us: cd.wcet_us.unwrap_or(0),
                    min_us: cd.min_us.unwrap_or(0),
                    is_async: cd.is_async,
                    yields: cd.yields.clone(),
                    access,
                });
                codels.len() - 1
            };
            if let Some(v) = &s.validate {
                sc.validate = Some(push(v, CodelRole::Validate, &mut codels, &mut diags));
            }
            match s.kind {
                ServiceKind::Activity => {
                    for cd in &s.codels {
                        let st = cd.state.clone().unwrap_or_default();
                        sc.fsm.push(push(cd, CodelRole::State(st), &mut codels, &mut diags));
                    }
                }
                ServiceKind::Function | ServiceKind::Attribute => {
                    if let Some(cd) = s.codels.first() {
                        sc.body = Some(push(cd, CodelRole::Body, &mut codels, &mut diags));
                    } else {
                        // attribute arguments name IDS fields: `out` returns (reads), `in` sets (writes)
                        let mut access = ResourceAccessSet::default();
                        if s.kind == ServiceKind::Attribute {
                            for a in &s.args {
                                match ids.get(&a.name) {
                                    Some(&r) => {
                                        if matches!(a.dir, ArgDir::Out | ArgDir::Inout) {
                                            access.reads.insert(r);
                                        }
                                        if matches!(a.dir, ArgDir::In | ArgDir::Inout) {
                                            access.writes.insert(r);
                                        }
                                    }
                                    None => diags.push(Diagnostic::error(
                                        format!("attribute `{}` names unknown ids field `{}`", s.name, a.name),
                                        Some(s.pos),
                                    )),
                                }
                            }
                        }
                        codels.push(CodelInfo {
                            component: ci,
                            owner: CodelOwner::Service(si),
                            role: CodelRole::Body,
                            function: None,
                            label: format!("{}/{}/body", c.name, s.name),
                            wcet_us: 0,
                            min_us: 0,
                            is_async: false,
                            yields: vec![],
                            access,
                        });
                        sc.body = Some(codels.len() - 1);
                    }
                }
            }
            service_codels.push(sc);
            let task = match (&s.task, s.kind) {
                (Some(t), _) => match c.tasks.iter().position(|x| &x.name == t) {
                    Some(ti) => Some(ti),
                    None => {
                        diags.push(Diagnostic::error(format!("dangling task reference `{}` in `{}`", t, s.name), Some(s.pos)));
                        None
                    }
                },
                _ => None,
            };
            service_task.push(task);
            let mut targets = Vec::new();
            for name in &s.interrupts {
                if name == "*" {
                    targets.extend(c.services.iter().enumerate().filter(|(_, x)| x.kind == ServiceKind::Activity).map(|(i, _)| i));
                    continue;
                }
                match c.services.iter().position(|x| &x.name == name) {
                    Some(i) => targets.push(i),
                    None => diags.push(Diagnostic::error(
                        format!("`{}` interrupts unknown service `{}`", s.name, name),
                        Some(s.pos),
                    )),
                }
            }
            targets.sort_unstable();
            targets.dedup();
            interrupts.push(targets);
            for e in &s.throws {
                if !c.exceptions.contains(e) {
                    diags.push(Diagnostic::error(format!("`{}` throws undeclared exception `{}`", s.name, e), Some(s.pos)));
                }
            }
        }
        components.push(ComponentInfo { spec: c.clone(), task_codels, service_codels, service_task, interrupts });
    }

    if diags.iter().any(|d| d.is_error()) {
        return Err(ResolveError { diagnostics: diags });
    }
    let conflicts = conflict_relation(&codels);
    Ok(SystemModel { components, resources, codels, conflicts, port_wiring, diagnostics: diags })
}

/// Pairs `(a, b)`, `a <= b`, whose access sets conflict. `(a, a)` is present
/// when `a` writes anything, since two instances may run the same codel.
pub fn conflict_relation(codels: &[CodelInfo]) -> BTreeSet<(CodelId, CodelId)> {
    let mut out = BTreeSet::new();
    for a in 0..codels.len() {
        for b in a..codels.len() {
            if codels[a].access.conflicts_with(&codels[b].access) {
                out.insert((a, b));
            }
        }
    }
    out
}

impl SystemModel {
    pub fn component_index(&self, name: &str) -> Option<usize> {
        self.components.iter().position(|c| c.spec.name == name)
    }

    pub fn component(&self, name: &str) -> Option<&ComponentInfo> {
        self.components.iter().find(|c| c.spec.name == name)
    }

    pub fn in_conflict(&self, a: CodelId, b: CodelId) -> bool {
        self.conflicts.contains(&(a.min(b), a.max(b)))
    }

    /// All codel occurrences calling `function` in `component`.
    pub fn codels_named(&self, component: &str, function: &str) -> Vec<CodelId> {
        let Some(ci) = self.component_index(component) else { return vec![] };
        (0..self.codels.len())
            .filter(|&i| self.codels[i].component == ci && self.codels[i].function.as_deref() == Some(function))
            .collect()
    }

    /// Direct interrupt sets keyed by `component/service`.
    pub fn interrupt_closure(&self) -> BTreeMap<String, BTreeSet<String>> {
        let mut out = BTreeMap::new();
        for c in &self.components {
            for (si, s) in c.spec.services.iter().enumerate() {
                let set = c.interrupts[si].iter().map(|&t| c.spec.services[t].name.clone()).collect();
                out.insert(format!("{}/{}", c.spec.name, s.name), set);
            }
        }
        out
    }

    pub fn resource_names(&self, set: &BTreeSet<ResId>) -> Vec<String> {
        set.iter().map(|&r| self.resources[r].name.clone()).collect()
    }

    /// One-line counts, e.g. `2 tasks, 4 services (2 activities) + 4 predefined`.
    pub fn summary(&self, component: usize) -> String {
        let spec = &self.components[component].spec;
        let user: Vec<_> = spec.user_services().collect();
        let activities = user.iter().filter(|s| s.kind == ServiceKind::Activity).count();
        format!(
            "{} tasks, {} services ({} activities) + {} predefined",
            spec.tasks.len(),
            user.len(),
            activities,
            spec.services.len() - user.len()
        )
    }

    /// JSON dump of resources, access sets, conflicts and interrupts.
    pub fn to_json(&self) -> Value {
        let codels: Vec<Value> = self
            .codels
            .iter()
            .map(|c| {
                json!({
                    "label": c.label,
                    "function": c.function,
                    "wcet_us": c.wcet_us,
                    "min_us": c.min_us,
                    "async": c.is_async,
                    "reads": self.resource_names(&c.access.reads),
                    "writes": self.resource_names(&c.access.writes),
                })
            })
            .collect();
        let conflicts: Vec<Value> =
            self.conflicts.iter().map(|&(a, b)| json!([self.codels[a].label, self.codels[b].label])).collect();
        let wiring: Vec<Value> = self
            .port_wiring
            .iter()
            .map(|((rc, rp), (wc, wp))| json!({"reader": format!("{}.{}", rc, rp), "writer": format!("{}.{}", wc, wp)}))
            .collect();
        json!({
            "components": self.components.iter().map(|c| c.spec.name.clone()).collect::<Vec<_>>(),
            "resources": self.resources,
            "codels": codels,
            "conflicts": conflicts,
            "interrupts": self.interrupt_closure(),
            "port_wiring": wiring,
        })
    }
}
