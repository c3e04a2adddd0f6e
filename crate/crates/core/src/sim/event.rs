//! Run event records and the jsonlines event log.
//!
//! Events are totally ordered by `(time, seq)`; `seq` is a global counter so
//! the log replays in exactly the order the engine produced it.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::goals::GoalId;
use crate::world::Name;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub time: u64,
    pub seq: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub agent: Option<Name>,
    #[serde(flatten)]
    pub body: EventBody,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum EventBody {
    RunStart {
        scenario: String,
        seed: u64,
        promises: bool,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        lookahead: Option<u64>,
    },
    /// A world-model update as published (logged once, not per replica).
    WorldUpdate {
        update_seq: u64,
        #[serde(skip_serializing_if = "Vec::is_empty", default)]
        adds: Vec<String>,
        #[serde(skip_serializing_if = "Vec::is_empty", default)]
        dels: Vec<String>,
        #[serde(skip_serializing_if = "Vec::is_empty", default)]
        promises: Vec<String>,
        #[serde(skip_serializing_if = "Vec::is_empty", default)]
        retracts: Vec<String>,
    },
    GoalFormulated {
        goal: GoalId,
        class: Name,
        binding: BTreeMap<Name, Name>,
        promise_dependent: bool,
        #[serde(skip_serializing_if = "Vec::is_empty", default)]
        supporting: Vec<String>,
    },
    GoalSelected { goal: GoalId },
    GoalExpanded { goal: GoalId, plan: Vec<String>, makespan: u64 },
    GoalCommitted { goal: GoalId },
    GoalDispatched { goal: GoalId },
    GoalFinished { goal: GoalId },
    GoalFailed { goal: GoalId, reason: String },
    GoalRejected { goal: GoalId, reason: String },
    GoalRetracted { goal: GoalId },
    PromiseIssued { goal: GoalId, promise: String },
    PromiseRetracted { goal: GoalId },
    /// A promise's time elapsed past the grace period without its literal
    /// holding; kept in the store but ignored from now on.
    PromiseStale { goal: GoalId, promise: String },
    LockGranted { resource: Name, goal: GoalId },
    LockDeferred { resource: Name, promised: Name, goal: GoalId },
    LockDenied { resource: Name, goal: GoalId, holder: String },
    LockReleased { resource: Name, goal: GoalId },
    LockHandover { resource: Name, from: String, to: String },
    ActionStart { goal: GoalId, index: usize, action: String },
    ActionPending { goal: GoalId, index: usize, action: String },
    ActionDone { goal: GoalId, index: usize, action: String },
    ActionTimeout { goal: GoalId, index: usize, action: String },
    Warning { message: String },
    ObjectiveSatisfied { makespan: u64 },
    RunEnd { ticks: u64, outcome: RunOutcome },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunOutcome {
    Objective,
    TickBound,
}

impl EventBody {
    /// Short kind tag, matching the serialized `type` field.
    pub fn kind(&self) -> &'static str {
        match self {
            EventBody::RunStart { .. } => "run-start",
            EventBody::WorldUpdate { .. } => "world-update",
            EventBody::GoalFormulated { .. } => "goal-formulated",
            EventBody::GoalSelected { .. } => "goal-selected",
            EventBody::GoalExpanded { .. } => "goal-expanded",
            EventBody::GoalCommitted { .. } => "goal-committed",
            EventBody::GoalDispatched { .. } => "goal-dispatched",
            EventBody::GoalFinished { .. } => "goal-finished",
            EventBody::GoalFailed { .. } => "goal-failed",
            EventBody::GoalRejected { .. } => "goal-rejected",
            EventBody::GoalRetracted { .. } => "goal-retracted",
            EventBody::PromiseIssued { .. } => "promise-issued",
            EventBody::PromiseRetracted { .. } => "promise-retracted",
            EventBody::PromiseStale { .. } => "promise-stale",
            EventBody::LockGranted { .. } => "lock-granted",
            EventBody::LockDeferred { .. } => "lock-deferred",
            EventBody::LockDenied { .. } => "lock-denied",
            EventBody::LockReleased { .. } => "lock-released",
            EventBody::LockHandover { .. } => "lock-handover",
            EventBody::ActionStart { .. } => "action-start",
            EventBody::ActionPending { .. } => "action-pending",
            EventBody::ActionDone { .. } => "action-done",
            EventBody::ActionTimeout { .. } => "action-timeout",
            EventBody::Warning { .. } => "warning",
            EventBody::ObjectiveSatisfied { .. } => "objective-satisfied",
            EventBody::RunEnd { .. } => "run-end",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EventLogError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Malformed { line: usize, source: serde_json::Error },
}

/// Writes one JSON record per line.
pub fn write_events(events: &[EventRecord], mut out: impl Write) -> Result<(), EventLogError> {
    for event in events {
        serde_json::to_writer(&mut out, event).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn events_to_string(events: &[EventRecord]) -> String {
    let mut buf = Vec::new();
    write_events(events, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

/// Reads a jsonlines event log; empty lines are ignored.
pub fn read_events(input: impl BufRead) -> Result<Vec<EventRecord>, EventLogError> {
    let mut events = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let event = serde_json::from_str(&line)
            .map_err(|source| EventLogError::Malformed { line: i + 1, source })?;
        events.push(event);
    }
    Ok(events)
}
