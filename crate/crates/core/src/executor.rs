//! Per-agent plan execution: action dispatch, pending-state handling and
//! timeout monitoring.
//!
//! Action preconditions are evaluated against the *actual* world state only —
//! promises never make an action executable. An action whose precondition is
//! unsatisfied stays pending until it becomes satisfied or a timeout fires;
//! promise-dependent goals get extended timeouts.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::goals::GoalId;
use crate::planner::{GroundAction, Plan};
use crate::time::Tick;
use crate::world::{satisfies_all, Atom};

/// Execution monitoring parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct MonitorConfig {
    /// Ticks an action may stay pending before it times out.
    pub pending_timeout: Tick,
    /// Factor applied to the timeout for promise-dependent goals.
    pub promise_multiplier: u32,
    /// Times a timed-out action is re-entered as pending before the goal fails.
    pub max_retries: u32,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        MonitorConfig { pending_timeout: Tick(300), promise_multiplier: 2, max_retries: 0 }
    }
}

impl MonitorConfig {
    /// Timeout for the given goal kind; never smaller than the plain timeout.
    pub fn effective_timeout(&self, promise_dependent: bool) -> Tick {
        if promise_dependent {
            Tick(self.pending_timeout.0 * u64::from(self.promise_multiplier.max(1)))
        } else {
            self.pending_timeout
        }
    }
}

/// Phase of the action under execution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Started; effects apply at `ends` (`None`: the action is stuck and
    /// never completes — used for fault injection).
    Running { ends: Option<Tick> },
    /// Precondition unsatisfied; waiting since `since`.
    Pending { since: Tick },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurrentAction {
    pub index: usize,
    pub phase: Phase,
}

/// What an executor tick decided; the engine turns these into events and
/// goal transitions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExecSignal {
    ActionStarted { index: usize, ends: Option<Tick> },
    ActionPending { index: usize },
    /// The pending timeout fired. `fatal` is true once retries are exhausted
    /// and the goal must fail.
    ActionTimeout { index: usize, fatal: bool },
    /// Cursor moved past the last step with nothing running.
    GoalComplete,
}

/// Per-goal execution state; at most one current action per agent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionState {
    pub goal: GoalId,
    pub cursor: usize,
    pub current: Option<CurrentAction>,
    retries_used: BTreeMap<usize, u32>,
}

impl ExecutionState {
    pub fn new(goal: GoalId) -> Self {
        ExecutionState { goal, cursor: 0, current: None, retries_used: BTreeMap::new() }
    }

    /// Advances execution one step at time `now`. `schedule` decides the
    /// actual completion time offset for a starting action (`None` stalls it
    /// forever).
    pub fn tick(
        &mut self,
        plan: &Plan,
        world_atoms: &BTreeSet<Atom>,
        cfg: &MonitorConfig,
        promise_dependent: bool,
        now: Tick,
        mut schedule: impl FnMut(&GroundAction) -> Option<Tick>,
    ) -> Vec<ExecSignal> {
        let mut signals = Vec::new();
        match &self.current {
            None => {
                if self.cursor >= plan.steps.len() {
                    signals.push(ExecSignal::GoalComplete);
                    return signals;
                }
                let action = &plan.steps[self.cursor].action;
                if satisfies_all(world_atoms, &action.pre) {
                    let ends = schedule(action).map(|d| now + d);
                    self.current =
                        Some(CurrentAction { index: self.cursor, phase: Phase::Running { ends } });
                    signals.push(ExecSignal::ActionStarted { index: self.cursor, ends });
                } else {
                    self.current = Some(CurrentAction {
                        index: self.cursor,
                        phase: Phase::Pending { since: now },
                    });
                    signals.push(ExecSignal::ActionPending { index: self.cursor });
                }
            }
            Some(CurrentAction { index, phase: Phase::Pending { since } }) => {
                let index = *index;
                let since = *since;
                let action = &plan.steps[index].action;
                if satisfies_all(world_atoms, &action.pre) {
                    // The timeout clock resets on the transition to running.
                    let ends = schedule(action).map(|d| now + d);
                    self.current = Some(CurrentAction { index, phase: Phase::Running { ends } });
                    signals.push(ExecSignal::ActionStarted { index, ends });
                } else if now.saturating_sub(since) > cfg.effective_timeout(promise_dependent) {
                    let used = self.retries_used.entry(index).or_insert(0);
                    if *used < cfg.max_retries {
                        *used += 1;
                        self.current =
                            Some(CurrentAction { index, phase: Phase::Pending { since: now } });
                        signals.push(ExecSignal::ActionTimeout { index, fatal: false });
                    } else {
                        signals.push(ExecSignal::ActionTimeout { index, fatal: true });
                    }
                }
            }
            Some(CurrentAction { phase: Phase::Running { .. }, .. }) => {
                // Completion is driven by the engine clock via `due_completion`.
            }
        }
        signals
    }

    /// The running action's index if its end time has been reached.
    pub fn due_completion(&self, now: Tick) -> Option<usize> {
        match &self.current {
            Some(CurrentAction { index, phase: Phase::Running { ends: Some(t) } }) if *t <= now => {
                Some(*index)
            }
            _ => None,
        }
    }

    /// Completes the running action: advances the cursor and reports whether
    /// the plan is now exhausted (the goal finishes).
    pub fn complete_action(&mut self, plan: &Plan) -> bool {
        debug_assert!(matches!(
            self.current,
            Some(CurrentAction { phase: Phase::Running { .. }, .. })
        ));
        self.current = None;
        self.cursor += 1;
        self.cursor >= plan.steps.len()
    }
}
