//! Scenarios, the deterministic event loop, event logs, reports and trace
//! checkers.

mod engine;
mod event;
mod report;
mod scenario;
pub mod trace;

pub use engine::run;
pub use event::{
    events_to_string, read_events, write_events, EventBody, EventLogError, EventRecord, RunOutcome,
};
pub use report::{
    compare, summarize_batch, BatchSummary, Comparison, CompareError, GoalSpan, PlannerStats,
    PromiseStats, RunReport,
};
pub use scenario::{
    load_scenario, scenario_objective, ExecutionConfig, Faults, RunOptions, Scenario,
    ScenarioError, StallFault,
};

/// Loads, applies CLI overrides, runs.
pub fn run_with_options(scenario: &Scenario, options: &RunOptions) -> RunReport {
    let scenario = scenario.with_options(options);
    run(&scenario)
}

#[cfg(test)]
mod tests;
