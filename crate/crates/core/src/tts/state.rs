//! Discrete part of a TTS state.

use super::Tts;

/// Service index of a task's permanent activity instance.
pub const PERMANENT: u16 = u16::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phase {
    Idle,
    /// Waiting in the core FIFO.
    Queued,
    /// Holding a core.
    Running,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Status {
    /// Waiting for interrupted instances to terminate.
    Held,
    Runnable,
    /// Its async codel executes in a detached slot.
    InAsync,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Instance {
    pub service: u16,
    /// Codel of the current FSM state.
    pub codel: u32,
    pub status: Status,
    pub interrupted: bool,
    pub stopping: bool,
    /// Already served during the current task cycle.
    pub cycle_done: bool,
}

/// Codel an executor is running or waiting to lock.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Exec {
    /// Instance position in the task's list (unused for control tasks).
    pub instance: u16,
    pub codel: u32,
    /// `false` while blocked on locks.
    pub running: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TaskState {
    pub phase: Phase,
    /// The `<task>_period_signal` flag: a period signal arrived while the
    /// task was busy. The task is released again at the end of its cycle.
    pub overrun: bool,
    pub exec: Option<Exec>,
    /// Permanent instance first (when alive), then FIFO arrival order.
    pub instances: Vec<Instance>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ControlState {
    pub phase: Phase,
    /// Pending requests (service indices), oldest first.
    pub requests: Vec<u16>,
    /// Progress on the head request: 0 intake, 1 validated, 2 body done.
    pub stage: u8,
    pub exec: Option<Exec>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct ObsState {
    pub pending: bool,
    pub trigger: bool,
    pub target: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Queued {
    Task(u16),
    Control(u16),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Discrete {
    pub arrivals_done: u16,
    pub tasks: Vec<TaskState>,
    pub controls: Vec<ControlState>,
    /// Busy async slots: (task, instance position).
    pub slots: Vec<Option<(u16, u16)>>,
    /// Per resource: readers count, or -1 for a writer.
    pub locks: Vec<i8>,
    pub fifo: Vec<Queued>,
    pub free_cores: u8,
    pub observers: Vec<ObsState>,
}

impl Discrete {
    pub fn new(tts: &Tts) -> Self {
        Discrete {
            arrivals_done: 0,
            tasks: tts
                .tasks
                .iter()
                .map(|_| TaskState { phase: Phase::Idle, overrun: false, exec: None, instances: Vec::new() })
                .collect(),
            controls: tts.controls.iter().map(|_| ControlState { phase: Phase::Idle, requests: Vec::new(), stage: 0, exec: None }).collect(),
            slots: vec![None; tts.slots.len()],
            locks: vec![0; tts.resource_names.len()],
            fifo: Vec::new(),
            free_cores: tts.cores,
            observers: vec![ObsState::default(); tts.observers.len()],
        }
    }

    pub fn cores_held(&self) -> usize {
        self.tasks.iter().filter(|t| t.phase == Phase::Running).count()
            + self.controls.iter().filter(|c| c.phase == Phase::Running).count()
    }

    /// No codel can ever run again without an external stimulus.
    pub fn quiescent(&self) -> bool {
        self.tasks.iter().all(|t| t.phase == Phase::Idle)
            && self.controls.iter().all(|c| c.phase == Phase::Idle && c.requests.is_empty())
            && self.slots.iter().all(|s| s.is_none())
    }
}
