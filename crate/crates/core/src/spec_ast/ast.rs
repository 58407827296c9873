//! Syntax trees for component, scenario and property files.
//!
//! All durations are integer microseconds.

use crate::diag::Pos;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PortDir {
    In,
    Out,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ArgDir {
    In,
    Out,
    Inout,
}

impl ArgDir {
    pub fn as_str(self) -> &'static str {
        match self {
            ArgDir::In => "in",
            ArgDir::Out => "out",
            ArgDir::Inout => "inout",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PortDecl {
    pub dir: PortDir,
    pub type_name: String,
    pub name: String,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IdsField {
    pub type_name: String,
    pub name: String,
    pub pos: Pos,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Timing {
    Periodic { period_us: u64 },
    Aperiodic,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TaskDecl {
    pub name: String,
    pub timing: Timing,
    /// Permanent activity codels; empty when the task has none.
    pub codels: Vec<CodelDecl>,
    pub pos: Pos,
}

impl TaskDecl {
    pub fn has_permanent(&self) -> bool {
        !self.codels.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ServiceKind {
    Attribute,
    Function,
    Activity,
}

impl ServiceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ServiceKind::Attribute => "attribute",
            ServiceKind::Function => "function",
            ServiceKind::Activity => "activity",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ServiceArg {
    pub dir: ArgDir,
    /// Absent for attribute arguments, which name IDS fields directly.
    pub type_name: Option<String>,
    pub name: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LocalDecl {
    pub type_name: String,
    pub name: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ServiceDecl {
    pub name: String,
    pub kind: ServiceKind,
    pub args: Vec<ServiceArg>,
    pub doc: Option<String>,
    pub task: Option<String>,
    pub locals: Vec<LocalDecl>,
    pub validate: Option<CodelDecl>,
    /// Activity FSM codels, or the single body codel of a function.
    pub codels: Vec<CodelDecl>,
    pub interrupts: Vec<String>,
    pub throws: Vec<String>,
    /// Injected predefined service (never printed).
    pub implicit: bool,
    pub pos: Pos,
}

impl ServiceDecl {
    pub fn codel_for_state(&self, state: &str) -> Option<&CodelDecl> {
        self.codels.iter().find(|c| c.state.as_deref() == Some(state))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum ArgPath {
    Name(String),
    /// `::ids`, the whole internal data structure.
    AllIds,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CodelArg {
    pub dir: ArgDir,
    pub path: ArgPath,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum YieldTarget {
    State { name: String, pause: bool },
    Ether,
}

impl YieldTarget {
    pub fn state_name(&self) -> Option<&str> {
        match self {
            YieldTarget::State { name, .. } => Some(name),
            YieldTarget::Ether => None,
        }
    }

    pub fn is_pause(&self) -> bool {
        matches!(self, YieldTarget::State { pause: true, .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CodelDecl {
    /// FSM state; `None` for function bodies and validate codels.
    pub state: Option<String>,
    pub function: String,
    pub args: Vec<CodelArg>,
    pub yields: Vec<YieldTarget>,
    pub wcet_us: Option<u64>,
    /// Optional best-case bound; execution time ranges over `[min, wcet]`.
    pub min_us: Option<u64>,
    pub is_async: bool,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ComponentSpec {
    pub name: String,
    pub ports: Vec<PortDecl>,
    pub exceptions: Vec<String>,
    pub ids: Vec<IdsField>,
    pub tasks: Vec<TaskDecl>,
    pub services: Vec<ServiceDecl>,
    pub pos: Pos,
}

impl ComponentSpec {
    pub fn service(&self, name: &str) -> Option<&ServiceDecl> {
        self.services.iter().find(|s| s.name == name)
    }

    pub fn task(&self, name: &str) -> Option<&TaskDecl> {
        self.tasks.iter().find(|t| t.name == name)
    }

    pub fn user_services(&self) -> impl Iterator<Item = &ServiceDecl> {
        self.services.iter().filter(|s| !s.implicit)
    }
}

/// Scalar argument literal of a scenario request.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Literal {
    Number(String),
    Str(String),
    Ident(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ScenarioEvent {
    /// Earliest send time.
    pub send_time: u64,
    /// Latest send time; equal to `send_time` for a fixed instant.
    pub latest: u64,
    pub component: String,
    pub service: String,
    pub args: Vec<Literal>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Default)]
pub struct Scenario {
    pub events: Vec<ScenarioEvent>,
    pub horizon: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Pred {
    True,
    False,
    Not(Box<Pred>),
    And(Box<Pred>, Box<Pred>),
    Or(Box<Pred>, Box<Pred>),
    Implies(Box<Pred>, Box<Pred>),
    /// `comp/entity/state value`
    State { component: String, entity: String, state: String, pos: Pos },
    /// `[comp/]task_period_signal`
    PeriodSignal { component: Option<String>, task: String, pos: Pos },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Property {
    Invariant {
        name: String,
        pred: Pred,
    },
    LeadsToWithin {
        name: String,
        trigger: Pred,
        target: Pred,
        lo: u64,
        hi: u64,
        leave: bool,
    },
}

impl Property {
    pub fn name(&self) -> &str {
        match self {
            Property::Invariant { name, .. } | Property::LeadsToWithin { name, .. } => name,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Default)]
pub struct PropertySet {
    pub properties: Vec<Property>,
}
