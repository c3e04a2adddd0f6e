//! The goal lifecycle state machine.
//!
//! Legal edges: FORMULATED → SELECTED → EXPANDED → COMMITTED → DISPATCHED →
//! {FINISHED, FAILED}; any pre-DISPATCHED mode may be REJECTED or RETRACTED.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING-KEBAB-CASE")]
pub enum GoalMode {
    Formulated,
    Selected,
    Expanded,
    Committed,
    Dispatched,
    Finished,
    Failed,
    Rejected,
    Retracted,
}

impl GoalMode {
    /// Terminal modes never transition again.
    pub fn is_terminal(self) -> bool {
        matches!(
            self,
            GoalMode::Finished | GoalMode::Failed | GoalMode::Rejected | GoalMode::Retracted
        )
    }
}

impl fmt::Display for GoalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GoalMode::Formulated => "FORMULATED",
            GoalMode::Selected => "SELECTED",
            GoalMode::Expanded => "EXPANDED",
            GoalMode::Committed => "COMMITTED",
            GoalMode::Dispatched => "DISPATCHED",
            GoalMode::Finished => "FINISHED",
            GoalMode::Failed => "FAILED",
            GoalMode::Rejected => "REJECTED",
            GoalMode::Retracted => "RETRACTED",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GoalEvent {
    Select,
    Expand,
    Commit,
    Dispatch,
    Finish,
    Fail,
    Reject,
    Retract,
}

impl fmt::Display for GoalEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GoalEvent::Select => "select",
            GoalEvent::Expand => "expand",
            GoalEvent::Commit => "commit",
            GoalEvent::Dispatch => "dispatch",
            GoalEvent::Finish => "finish",
            GoalEvent::Fail => "fail",
            GoalEvent::Reject => "reject",
            GoalEvent::Retract => "retract",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("illegal goal transition: {mode} + {event}")]
pub struct TransitionError {
    pub mode: GoalMode,
    pub event: GoalEvent,
}

/// The lifecycle edge table.
pub fn transition(mode: GoalMode, event: GoalEvent) -> Result<GoalMode, TransitionError> {
    use GoalEvent as E;
    use GoalMode as M;
    let next = match (mode, event) {
        (M::Formulated, E::Select) => M::Selected,
        (M::Selected, E::Expand) => M::Expanded,
        (M::Expanded, E::Commit) => M::Committed,
        (M::Committed, E::Dispatch) => M::Dispatched,
        (M::Dispatched, E::Finish) => M::Finished,
        (M::Dispatched, E::Fail) => M::Failed,
        (M::Formulated | M::Selected | M::Expanded | M::Committed, E::Reject) => M::Rejected,
        (M::Formulated | M::Selected | M::Expanded | M::Committed, E::Retract) => M::Retracted,
        _ => return Err(TransitionError { mode, event }),
    };
    Ok(next)
}
