//! Grounded temporal forward search over `(atoms, time)` with timed initial
//! literals, plus an independent plan validator.
//!
//! Search states advance either by starting an action whose precondition
//! holds now (time advances by its duration) or by waiting until the next
//! pending TIL. A goal is accepted at the initial state or at an action end,
//! so a returned plan's makespan is the time its objective holds.

mod search;
mod validate;

pub use search::plan;
pub use validate::{validate_plan, ValidationReport};

use std::collections::BTreeSet;
use std::fmt;

use crate::time::Tick;
use crate::world::{Atom, Literal, Name};

/// A fully ground action instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundAction {
    pub name: Name,
    pub args: Vec<Name>,
    pub pre: Vec<Literal>,
    pub adds: BTreeSet<Atom>,
    pub dels: BTreeSet<Atom>,
    pub duration: Tick,
}

impl GroundAction {
    /// Text form `(name arg1 arg2)`, used in plans and event logs.
    pub fn label(&self) -> String {
        let mut s = format!("({}", self.name);
        for a in &self.args {
            s.push(' ');
            s.push_str(a.as_str());
        }
        s.push(')');
        s
    }
}

impl fmt::Display for GroundAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// One plan step: an action started at an absolute time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimedAction {
    pub start: Tick,
    pub action: GroundAction,
}

impl TimedAction {
    pub fn end(&self) -> Tick {
        self.start + self.action.duration
    }
}

/// A sequential timestamped plan: each step starts at or after the previous
/// step's end.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Plan {
    pub steps: Vec<TimedAction>,
}

impl Plan {
    /// End of the last step; zero for an empty plan.
    pub fn makespan(&self) -> Tick {
        self.steps.last().map(TimedAction::end).unwrap_or(Tick::ZERO)
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

impl fmt::Display for Plan {
    /// One step per line: `<start> <duration> (<action> <args>)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for step in &self.steps {
            writeln!(f, "{} {} {}", step.start, step.action.duration, step.action.label())?;
        }
        Ok(())
    }
}

/// Search mode: uniform-cost explores by completion time and returns a
/// minimal-makespan plan; greedy expands by goal-count heuristic and returns
/// the first plan found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    #[default]
    UniformCost,
    Greedy,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlannerConfig {
    pub mode: SearchMode,
    /// Maximum number of expanded nodes before giving up.
    pub node_budget: usize,
    /// Time horizon; states past it are not explored.
    pub bound: Tick,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig { mode: SearchMode::UniformCost, node_budget: 200_000, bound: Tick(1_000_000) }
    }
}

/// Planner result: a plan, a proof of unsolvability within the bound, or a
/// resource-limit stop (distinct from unsolvable).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlanOutcome {
    Solved(Plan),
    Unsolvable,
    ResourceLimit,
}

impl PlanOutcome {
    pub fn solved(self) -> Option<Plan> {
        match self {
            PlanOutcome::Solved(p) => Some(p),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests;
