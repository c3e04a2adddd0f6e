//! Run reports: goal spans, utilization and promise statistics derived from
//! the event log, plus text/gantt rendering, run comparison and the
//! multi-seed batch summary.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::goals::{GoalId, GoalMode};
use crate::time::Tick;
use crate::world::Name;

use super::event::{EventBody, EventRecord, RunOutcome};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannerStats {
    pub calls: u64,
    pub max_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoalSpan {
    pub agent: Name,
    pub goal: GoalId,
    pub class: Name,
    pub promise_dependent: bool,
    pub formulated: Tick,
    pub dispatched: Option<Tick>,
    pub ended: Option<(Tick, GoalMode)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PromiseStats {
    pub issued: usize,
    pub used_in_formulation: usize,
    pub stale: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub scenario: String,
    pub seed: u64,
    pub promises: bool,
    pub lookahead: Option<u64>,
    pub outcome: Option<RunOutcome>,
    /// Time the objective first held; None if the tick bound was hit.
    pub makespan: Option<Tick>,
    pub ticks: Tick,
    pub spans: Vec<GoalSpan>,
    pub utilization: BTreeMap<Name, f64>,
    pub promise_stats: PromiseStats,
    /// Present for live runs; a replayed log has no planner timings.
    pub planner: Option<PlannerStats>,
    pub events: Vec<EventRecord>,
}

impl RunReport {
    /// Rebuilds the report from an event log. The engine and the `replay`
    /// subcommand share this path, so a replayed report matches the live one
    /// (modulo planner wall-clock timings).
    pub fn from_events(events: Vec<EventRecord>, planner: Option<PlannerStats>) -> RunReport {
        let mut report = RunReport {
            scenario: String::new(),
            seed: 0,
            promises: false,
            lookahead: None,
            outcome: None,
            makespan: None,
            ticks: Tick::ZERO,
            spans: Vec::new(),
            utilization: BTreeMap::new(),
            promise_stats: PromiseStats::default(),
            planner,
            events: Vec::new(),
        };
        let mut spans: BTreeMap<(Name, GoalId), GoalSpan> = BTreeMap::new();
        let mut used: BTreeSet<String> = BTreeSet::new();

        for event in &events {
            let time = Tick(event.time);
            match &event.body {
                EventBody::RunStart { scenario, seed, promises, lookahead } => {
                    report.scenario = scenario.clone();
                    report.seed = *seed;
                    report.promises = *promises;
                    report.lookahead = *lookahead;
                }
                EventBody::GoalFormulated { goal, class, promise_dependent, supporting, .. } => {
                    let agent = event.agent.clone().expect("goal events carry an agent");
                    used.extend(supporting.iter().cloned());
                    spans.insert(
                        (agent.clone(), goal.clone()),
                        GoalSpan {
                            agent,
                            goal: goal.clone(),
                            class: class.clone(),
                            promise_dependent: *promise_dependent,
                            formulated: time,
                            dispatched: None,
                            ended: None,
                        },
                    );
                }
                EventBody::GoalDispatched { goal } => {
                    let agent = event.agent.clone().expect("goal events carry an agent");
                    if let Some(span) = spans.get_mut(&(agent, goal.clone())) {
                        span.dispatched = Some(time);
                    }
                }
                EventBody::GoalFinished { goal } => {
                    end_span(&mut spans, event, goal, time, GoalMode::Finished);
                }
                EventBody::GoalFailed { goal, .. } => {
                    end_span(&mut spans, event, goal, time, GoalMode::Failed);
                }
                EventBody::GoalRejected { goal, .. } => {
                    end_span(&mut spans, event, goal, time, GoalMode::Rejected);
                }
                EventBody::GoalRetracted { goal } => {
                    end_span(&mut spans, event, goal, time, GoalMode::Retracted);
                }
                EventBody::PromiseIssued { .. } => report.promise_stats.issued += 1,
                EventBody::PromiseStale { .. } => report.promise_stats.stale += 1,
                EventBody::ObjectiveSatisfied { makespan } => {
                    report.makespan = Some(Tick(*makespan))
                }
                EventBody::RunEnd { ticks, outcome } => {
                    report.ticks = Tick(*ticks);
                    report.outcome = Some(*outcome);
                }
                _ => {}
            }
        }

        report.promise_stats.used_in_formulation = used.len();
        report.spans = spans.into_values().collect();
        report.spans.sort_by(|a, b| {
            a.formulated.cmp(&b.formulated).then_with(|| a.agent.cmp(&b.agent)).then_with(|| a.goal.cmp(&b.goal))
        });

        // Utilization: fraction of the run each agent had a dispatched goal.
        let horizon = report.makespan.unwrap_or(report.ticks);
        let mut busy: BTreeMap<Name, u64> = BTreeMap::new();
        for span in &report.spans {
            if let Some(dispatched) = span.dispatched {
                let end = span.ended.map(|(t, _)| t).unwrap_or(horizon).min(horizon);
                *busy.entry(span.agent.clone()).or_default() += end.saturating_sub(dispatched).0;
            }
        }
        for (agent, ticks) in busy {
            let util = if horizon.0 == 0 { 0.0 } else { ticks as f64 / horizon.0 as f64 };
            report.utilization.insert(agent, util);
        }

        report.events = events;
        report
    }

    pub fn makespan_secs(&self) -> Option<f64> {
        self.makespan.map(|t| t.as_secs())
    }

    /// The agents that appear in the log, sorted.
    pub fn agents(&self) -> BTreeSet<Name> {
        self.events.iter().filter_map(|e| e.agent.clone()).collect()
    }

    /// Human-readable run summary.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "run report: {} (seed {})", self.scenario, self.seed);
        let _ = writeln!(
            out,
            "promises: {}{}",
            if self.promises { "on" } else { "off" },
            self.lookahead.map(|l| format!(" (lookahead override {l})")).unwrap_or_default()
        );
        match self.makespan {
            Some(m) => {
                let _ = writeln!(out, "makespan: {} ticks ({:.1} s simulated)", m, m.as_secs());
            }
            None => {
                let _ = writeln!(out, "makespan: objective not reached within {} ticks", self.ticks);
            }
        }
        if let Some(planner) = self.planner {
            let _ = writeln!(
                out,
                "planner: {} expansion calls, slowest {:.1} ms",
                planner.calls, planner.max_ms
            );
        }
        let stats = self.promise_stats;
        let _ = writeln!(
            out,
            "promises: {} issued, {} used in formulation, {} stale",
            stats.issued, stats.used_in_formulation, stats.stale
        );
        let _ = writeln!(out, "utilization:");
        for (agent, util) in &self.utilization {
            let _ = writeln!(out, "  {agent}: {:.1}%", util * 100.0);
        }
        let _ = writeln!(out, "goal spans (dispatched only):");
        for span in self.spans.iter().filter(|s| s.dispatched.is_some()) {
            let dispatched = span.dispatched.expect("filtered");
            let (end, mode) = span
                .ended
                .map(|(t, m)| (t.to_string(), m.to_string()))
                .unwrap_or_else(|| ("-".into(), "RUNNING".into()));
            let mark = if span.promise_dependent { " [promise-formulated]" } else { "" };
            let _ = writeln!(
                out,
                "  {} {} formulated@{} dispatched@{} ended@{} {}{}",
                span.agent, span.goal, span.formulated, dispatched, end, mode, mark
            );
        }
        out
    }

    /// Text Gantt chart: one row per agent, one bar per dispatched goal span.
    /// Promise-formulated goals are drawn striped (`/`), others solid (`=`).
    pub fn render_gantt(&self, width: usize) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "gantt: {} seed {} promises {}",
            self.scenario,
            self.seed,
            if self.promises { "on" } else { "off" }
        );
        let horizon = self.makespan.unwrap_or(self.ticks);
        let agents = self.agents();
        if horizon.0 == 0 || agents.is_empty() {
            return out;
        }
        let width = width.max(40);
        let label_w = agents.iter().map(|a| a.as_str().len()).max().unwrap_or(4).max(4);
        let _ = writeln!(
            out,
            "{:label_w$} 0{:>pad$}",
            "",
            format!("{} ticks ({:.1}s)", horizon, horizon.as_secs()),
            pad = width - 1
        );
        let scale = |t: Tick| -> usize {
            ((t.0 as u128 * (width as u128 - 1)) / horizon.0 as u128) as usize
        };
        for agent in &agents {
            let mut row = vec![' '; width];
            for span in self.spans.iter().filter(|s| s.agent == *agent) {
                let Some(dispatched) = span.dispatched else { continue };
                let end = span.ended.map(|(t, _)| t).unwrap_or(horizon).min(horizon);
                let (a, b) = (scale(dispatched), scale(end).max(scale(dispatched) + 1));
                let fill = if span.promise_dependent { '/' } else { '=' };
                for cell in row.iter_mut().take(b.min(width)).skip(a) {
                    *cell = fill;
                }
                // Lay the class name into the bar where it fits.
                let label: Vec<char> = span.class.as_str().chars().collect();
                if b - a > label.len() + 1 {
                    for (i, ch) in label.iter().enumerate() {
                        row[a + 1 + i] = *ch;
                    }
                }
                if let Some((_, mode)) = span.ended {
                    if mode == GoalMode::Failed && b - 1 < width {
                        row[b - 1] = 'x';
                    }
                }
            }
            let line: String = row.into_iter().collect();
            let _ = writeln!(out, "{:label_w$} |{}|", agent.as_str(), line);
        }
        let _ = writeln!(out, "{:label_w$} (= dispatched, / promise-formulated, x failed)", "");
        out
    }
}

fn end_span(
    spans: &mut BTreeMap<(Name, GoalId), GoalSpan>,
    event: &EventRecord,
    goal: &GoalId,
    time: Tick,
    mode: GoalMode,
) {
    let agent = event.agent.clone().expect("goal events carry an agent");
    if let Some(span) = spans.get_mut(&(agent, goal.clone())) {
        span.ended = Some((time, mode));
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CompareError {
    #[error("reports are from different scenarios: {0} vs {1}")]
    ScenarioMismatch(String, String),
    #[error("report has no makespan (objective not reached)")]
    NoMakespan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub scenario: String,
    pub baseline_makespan: Tick,
    pub other_makespan: Tick,
    /// baseline minus other, in ticks (positive: other finished earlier).
    pub delta: i64,
    /// Per goal class: earliest formulation time in (baseline, other).
    pub earliest_formulation: BTreeMap<Name, (Option<Tick>, Option<Tick>)>,
}

impl Comparison {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "comparison: {}", self.scenario);
        let _ = writeln!(
            out,
            "makespan: baseline {} vs {} ({}{} ticks, {:.1}%)",
            self.baseline_makespan,
            self.other_makespan,
            if self.delta >= 0 { "-" } else { "+" },
            self.delta.abs(),
            100.0 * self.delta as f64 / self.baseline_makespan.0 as f64,
        );
        let _ = writeln!(out, "earliest goal formulation (baseline -> other):");
        for (class, (a, b)) in &self.earliest_formulation {
            let show = |t: &Option<Tick>| t.map(|t| t.to_string()).unwrap_or_else(|| "-".into());
            let _ = writeln!(out, "  {class}: {} -> {}", show(a), show(b));
        }
        out
    }
}

/// Compares two runs of the same scenario (typically promises off vs on).
pub fn compare(baseline: &RunReport, other: &RunReport) -> Result<Comparison, CompareError> {
    if baseline.scenario != other.scenario {
        return Err(CompareError::ScenarioMismatch(
            baseline.scenario.clone(),
            other.scenario.clone(),
        ));
    }
    let a = baseline.makespan.ok_or(CompareError::NoMakespan)?;
    let b = other.makespan.ok_or(CompareError::NoMakespan)?;

    let mut earliest: BTreeMap<Name, (Option<Tick>, Option<Tick>)> = BTreeMap::new();
    for span in &baseline.spans {
        let entry = earliest.entry(span.class.clone()).or_default();
        entry.0 = Some(entry.0.map_or(span.formulated, |t: Tick| t.min(span.formulated)));
    }
    for span in &other.spans {
        let entry = earliest.entry(span.class.clone()).or_default();
        entry.1 = Some(entry.1.map_or(span.formulated, |t: Tick| t.min(span.formulated)));
    }

    Ok(Comparison {
        scenario: baseline.scenario.clone(),
        baseline_makespan: a,
        other_makespan: b,
        delta: a.0 as i64 - b.0 as i64,
        earliest_formulation: earliest,
    })
}

/// Summary over a batch of runs of the same scenario with different seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchSummary {
    pub scenario: String,
    pub promises: bool,
    pub makespans: Vec<(u64, Option<Tick>)>,
    pub mean_secs: f64,
    pub stddev_secs: f64,
}

impl BatchSummary {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "batch: {} promises {}",
            self.scenario,
            if self.promises { "on" } else { "off" }
        );
        for (seed, makespan) in &self.makespans {
            match makespan {
                Some(m) => {
                    let _ = writeln!(out, "  seed {seed}: {m} ticks ({:.1} s)", m.as_secs());
                }
                None => {
                    let _ = writeln!(out, "  seed {seed}: objective not reached");
                }
            }
        }
        let _ = writeln!(out, "makespan: {:.1} +/- {:.2} s", self.mean_secs, self.stddev_secs);
        out
    }
}

/// Mean and sample standard deviation of the completed runs' makespans.
pub fn summarize_batch(scenario: &str, promises: bool, runs: &[RunReport]) -> BatchSummary {
    let makespans: Vec<(u64, Option<Tick>)> =
        runs.iter().map(|r| (r.seed, r.makespan)).collect();
    let secs: Vec<f64> = runs.iter().filter_map(RunReport::makespan_secs).collect();
    let mean = if secs.is_empty() { f64::NAN } else { secs.iter().sum::<f64>() / secs.len() as f64 };
    let stddev = if secs.len() < 2 {
        0.0
    } else {
        (secs.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (secs.len() - 1) as f64).sqrt()
    };
    BatchSummary {
        scenario: scenario.to_string(),
        promises,
        makespans,
        mean_secs: mean,
        stddev_secs: stddev,
    }
}
