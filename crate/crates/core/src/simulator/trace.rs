//! Timestamped execution traces and their CSV/JSON forms.

use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    RequestArrived,
    ValidateRun,
    InstanceStarted,
    CodelStarted,
    CodelEnded,
    LockWaitStarted,
    LockWaitEnded,
    PeriodSignal,
    DeadlineMiss,
    WcetOverrun,
    ReportSent,
    CoreAcquired,
    CycleEnded,
    PropertyViolated,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub time: u64,
    pub kind: EventKind,
    /// Executor, task, request (`comp.Service`) or property the event is about.
    pub subject: String,
    /// Codel label (`comp/owner/state`) for codel and lock events.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub codel: Option<String>,
    /// Yield index taken at a codel end.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choice: Option<u8>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:>10}us {:<16} {}", self.time, self.kind.to_string(), self.subject)?;
        if let Some(c) = &self.codel {
            write!(f, " {}", c)?;
        }
        if let Some(y) = self.choice {
            write!(f, " yield#{}", y)?;
        }
        if !self.detail.is_empty() {
            write!(f, " ({})", self.detail)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub events: Vec<TraceEvent>,
    /// Time at which the run stopped.
    pub end_time: u64,
    /// The run hit the event cap before its horizon.
    #[serde(default)]
    pub truncated: bool,
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    time: u64,
    kind: EventKind,
    subject: String,
    codel: String,
    choice: String,
    detail: String,
}

impl Trace {
    pub fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }

    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for e in &self.events {
            w.serialize(CsvRow {
                time: e.time,
                kind: e.kind,
                subject: e.subject.clone(),
                codel: e.codel.clone().unwrap_or_default(),
                choice: e.choice.map(|c| c.to_string()).unwrap_or_default(),
                detail: e.detail.clone(),
            })?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn from_csv(text: &str) -> Result<Trace, csv::Error> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let mut events = Vec::new();
        for row in r.deserialize() {
            let row: CsvRow = row?;
            events.push(TraceEvent {
                time: row.time,
                kind: row.kind,
                subject: row.subject,
                codel: (!row.codel.is_empty()).then_some(row.codel),
                choice: row.choice.parse().ok(),
                detail: row.detail,
            });
        }
        let end_time = events.last().map(|e| e.time).unwrap_or(0);
        Ok(Trace { events, end_time, truncated: false })
    }

    /// Well-formedness: non-decreasing times, every codel end matches a
    /// start of the same executor, lock waits are bracketed.
    pub fn check_well_formed(&self) -> Result<(), String> {
        use std::collections::HashMap;
        let mut running: HashMap<&str, &str> = HashMap::new();
        let mut waiting: HashMap<&str, &str> = HashMap::new();
        let mut last = 0;
        for (i, e) in self.events.iter().enumerate() {
            if e.time < last {
                return Err(format!("event {}: time goes backwards", i));
            }
            last = e.time;
            let codel = e.codel.as_deref().unwrap_or("");
            match e.kind {
                EventKind::CodelStarted => {
                    if running.insert(&e.subject, codel).is_some() {
                        return Err(format!("event {}: {} starts a codel while running one", i, e.subject));
                    }
                }
                EventKind::CodelEnded => {
                    if running.remove(e.subject.as_str()) != Some(codel) {
                        return Err(format!("event {}: unmatched end of {}", i, codel));
                    }
                }
                EventKind::LockWaitStarted => {
                    waiting.insert(&e.subject, codel);
                }
                EventKind::LockWaitEnded => {
                    if waiting.remove(e.subject.as_str()) != Some(codel) {
                        return Err(format!("event {}: unmatched lock wait end", i));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}
