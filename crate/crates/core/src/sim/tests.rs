use std::io::Write as _;

use super::*;
use crate::goals::GoalMode;
use crate::time::Tick;
use crate::world::Name;

fn scenario_path(name: &str) -> String {
    format!("{}/../../scenarios/xenonite/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn load(name: &str) -> Scenario {
    load_scenario(scenario_path(name)).expect("shipped scenario loads")
}

#[test]
fn shipped_scenarios_load_and_cross_validate() {
    for name in
        ["xenonite-3r-5c.toml", "scenario1.toml", "scenario2.toml", "scenario3.toml", "scenario4.toml"]
    {
        let scenario = load(name);
        assert!(!scenario.operators.is_empty());
        assert!(!scenario.agents.is_empty());
    }
    let big = load("xenonite-3r-5c.toml");
    assert_eq!(big.agents, vec![Name::new("EVE"), Name::new("R2D2"), Name::new("WALL-E")]);
    assert_eq!(big.domain.actions.iter().map(|a| a.duration.0).min(), Some(50));
}

fn write_scenario(dir: &std::path::Path, toml: &str) -> std::path::PathBuf {
    for file in ["domain.pddl", "operators.gop", "scenario1.pddl"] {
        std::fs::copy(scenario_path(file), dir.join(file)).unwrap();
    }
    let path = dir.join("test.toml");
    let mut f = std::fs::File::create(&path).unwrap();
    f.write_all(toml.as_bytes()).unwrap();
    path
}

const BASE_TOML: &str = r#"
name = "test"
domain = "domain.pddl"
problem = "scenario1.pddl"
operators = "operators.gop"
agents = ["WALL-E"]
agent-type = "robot"
tick-bound = 900
[durations]
move = 100
fill-container = 50
deliver-container = 50
start-machine = 200
collect-processite = 50
deliver-xenonite = 50
"#;

#[test]
fn missing_duration_entry_is_a_load_error() {
    let dir = tempfile::tempdir().unwrap();
    let toml = BASE_TOML.replace("move = 100\n", "");
    let path = write_scenario(dir.path(), &toml);
    let err = load_scenario(&path).unwrap_err();
    assert!(err.to_string().contains("missing duration entry for action move"), "{err}");
}

#[test]
fn unknown_duration_entry_is_a_load_error() {
    let dir = tempfile::tempdir().unwrap();
    let toml = format!("{BASE_TOML}fly = 3\n");
    let path = write_scenario(dir.path(), &toml);
    let err = load_scenario(&path).unwrap_err();
    assert!(err.to_string().contains("unknown action fly"), "{err}");
}

#[test]
fn undeclared_agent_is_a_load_error() {
    let dir = tempfile::tempdir().unwrap();
    let toml = BASE_TOML.replace("agents = [\"WALL-E\"]", "agents = [\"HAL\"]");
    let path = write_scenario(dir.path(), &toml);
    let err = load_scenario(&path).unwrap_err();
    assert!(err.to_string().contains("HAL"), "{err}");
}

#[test]
fn stall_fault_for_unknown_action_is_a_load_error() {
    let dir = tempfile::tempdir().unwrap();
    let toml = format!("{BASE_TOML}\n[[faults.stall]]\naction = \"warp\"\n");
    let path = write_scenario(dir.path(), &toml);
    let err = load_scenario(&path).unwrap_err();
    assert!(err.to_string().contains("warp"), "{err}");
}

#[test]
fn problem_tils_are_rejected_for_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    let problem = std::fs::read_to_string(scenario_path("scenario1.pddl"))
        .unwrap()
        .replace("(machine-in-state M1 FILLED)", "(at 5 (machine-in-state M1 FILLED))");
    let path = write_scenario(dir.path(), BASE_TOML);
    std::fs::write(dir.path().join("scenario1.pddl"), problem).unwrap();
    let err = load_scenario(&path).unwrap_err();
    assert!(err.to_string().contains("TIL"), "{err}");
}

#[test]
fn lookahead_override_zero_disables_the_promise_machinery() {
    let scenario = load("scenario3.toml");
    assert!(scenario.promises_active());
    let zeroed = scenario.with_options(&RunOptions { lookahead: Some(0), ..Default::default() });
    assert!(!zeroed.promises_active());
    // A nonzero override keeps it on.
    let widened = scenario.with_options(&RunOptions { lookahead: Some(50), ..Default::default() });
    assert!(widened.promises_active());
}

// ---- scripted scenario semantics ------------------------------------------

fn event_time(report: &RunReport, pred: impl Fn(&EventRecord) -> bool) -> Option<u64> {
    report.events.iter().find(|e| pred(e)).map(|e| e.time)
}

fn class_of(goal: &crate::goals::GoalId) -> &str {
    let text = goal.0.as_str();
    &text[..text.find('#').unwrap_or(text.len())]
}

#[test]
fn scenario1_chains_goals_sequentially() {
    let report = run(&load("scenario1.toml"));
    assert_eq!(report.makespan, Some(Tick(450)));
    let start_finished = event_time(&report, |e| {
        matches!(&e.body, EventBody::GoalFinished { goal } if class_of(goal) == "StartMachine")
    })
    .unwrap();
    let clean_formulated = event_time(&report, |e| {
        matches!(&e.body, EventBody::GoalFormulated { class, .. } if class.as_str() == "CleanMachine")
    })
    .unwrap();
    assert!(start_finished <= clean_formulated, "CleanMachine waits for StartMachine's effects");
    // No promises were involved anywhere.
    assert_eq!(report.promise_stats.issued, 0);
    assert!(report.spans.iter().all(|s| !s.promise_dependent));
}

#[test]
fn scenario2_rejects_the_second_agents_goal_on_lock_denial() {
    let report = run(&load("scenario2.toml"));
    assert_eq!(report.makespan, Some(Tick(450)));
    // R2D2 (first in agent order) wins the machine; WALL-E is denied.
    let denial = report
        .events
        .iter()
        .find(|e| matches!(&e.body, EventBody::LockDenied { .. }))
        .expect("a lock denial occurs");
    assert_eq!(denial.agent, Some(Name::new("WALL-E")));
    let rejected = event_time(&report, |e| {
        e.agent == Some(Name::new("WALL-E"))
            && matches!(&e.body, EventBody::GoalRejected { goal, .. } if class_of(goal) == "StartMachine")
    })
    .expect("WALL-E's StartMachine is rejected");
    assert_eq!(rejected, 0);

    // CleanMachine is formulated only after StartMachine's effects land.
    let start_done = event_time(&report, |e| {
        matches!(&e.body, EventBody::ActionDone { action, .. } if action.contains("start-machine"))
    })
    .unwrap();
    let clean_formulated = event_time(&report, |e| {
        matches!(&e.body, EventBody::GoalFormulated { class, .. } if class.as_str() == "CleanMachine")
    })
    .unwrap();
    assert!(clean_formulated >= start_done);
}

#[test]
fn scenario3_formulates_early_with_a_pending_interval_and_handover() {
    let report = run(&load("scenario3.toml"));
    assert_eq!(report.makespan, Some(Tick(350)));

    // CleanMachine is formulated from the promise, before the effects exist.
    let clean = report
        .events
        .iter()
        .find_map(|e| match &e.body {
            EventBody::GoalFormulated { goal, class, promise_dependent, supporting, .. }
                if class.as_str() == "CleanMachine" =>
            {
                Some((e.time, goal.clone(), *promise_dependent, supporting.clone()))
            }
            _ => None,
        })
        .expect("CleanMachine formulated");
    let (formulated_at, clean_goal, promise_dependent, supporting) = clean;
    assert!(promise_dependent);
    assert!(supporting[0].contains("R2D2/StartMachine"), "{supporting:?}");
    let start_done = event_time(&report, |e| {
        matches!(&e.body, EventBody::ActionDone { action, .. } if action.contains("start-machine"))
    })
    .unwrap();
    assert!(formulated_at < start_done);

    // collect-processite pends for a nonempty interval, then runs.
    let pending = event_time(&report, |e| {
        matches!(&e.body, EventBody::ActionPending { action, .. } if action.contains("collect-processite"))
    })
    .expect("collect pends");
    let started = event_time(&report, |e| {
        matches!(&e.body, EventBody::ActionStart { action, .. } if action.contains("collect-processite"))
    })
    .expect("collect starts");
    assert!(started > pending, "pending interval [{pending}, {started}) must be nonempty");

    // Deferred acquisition and the handover protocol happened.
    assert!(report.events.iter().any(|e| matches!(
        &e.body,
        EventBody::LockDeferred { promised, goal, .. }
            if promised.as_str() == "promised-M1" && *goal == clean_goal
    )));
    assert!(report
        .events
        .iter()
        .any(|e| matches!(&e.body, EventBody::LockHandover { resource, .. } if resource.as_str() == "M1")));
}

#[test]
fn scenario4_times_out_and_fails_the_promise_dependent_goal() {
    let report = run(&load("scenario4.toml"));
    assert_eq!(report.makespan, None);
    assert_eq!(report.outcome, Some(RunOutcome::TickBound));

    let timeout = event_time(&report, |e| {
        matches!(&e.body, EventBody::ActionTimeout { action, .. } if action.contains("collect-processite"))
    })
    .expect("collect times out");
    let failed = report
        .events
        .iter()
        .find_map(|e| match &e.body {
            EventBody::GoalFailed { goal, .. } if class_of(goal) == "CleanMachine" => {
                Some((e.time, e.agent.clone()))
            }
            _ => None,
        })
        .expect("CleanMachine fails");
    assert_eq!(failed.0, timeout);
    assert_eq!(failed.1, Some(Name::new("WALL-E")));
    // The pending timeout was extended by the promise multiplier.
    let pending = event_time(&report, |e| {
        matches!(&e.body, EventBody::ActionPending { action, .. } if action.contains("collect"))
    })
    .unwrap();
    let scenario = load("scenario4.toml");
    let effective = scenario.monitor.effective_timeout(true);
    assert_eq!(timeout, pending + effective.0 + 1);

    // The stalled goal still holds its resource; a later plain StartMachine
    // formulation is rejected: a different objective had to be chosen.
    assert!(report.events.iter().any(|e| {
        e.time > timeout
            && matches!(&e.body, EventBody::GoalRejected { goal, .. } if class_of(goal) == "StartMachine")
    }));
}

// ---- determinism, replay, reports -------------------------------------------

#[test]
fn identical_seeds_give_byte_identical_event_logs() {
    let scenario = load("scenario3.toml");
    let a = events_to_string(&run(&scenario).events);
    let b = events_to_string(&run(&scenario).events);
    assert_eq!(a, b);
}

#[test]
fn jitter_draws_from_the_seed() {
    let mut scenario = load("scenario1.toml");
    scenario.execution.duration_jitter_pct = 5;
    let base = run(&scenario.with_options(&RunOptions { seed: Some(1), ..Default::default() }));
    let same = run(&scenario.with_options(&RunOptions { seed: Some(1), ..Default::default() }));
    let other = run(&scenario.with_options(&RunOptions { seed: Some(2), ..Default::default() }));
    assert_eq!(events_to_string(&base.events), events_to_string(&same.events));
    assert_ne!(events_to_string(&base.events), events_to_string(&other.events));
    // Jittered runs still satisfy the objective.
    assert!(other.makespan.is_some());
}

#[test]
fn pessimistic_mode_declines_not_yet_satisfied_preconditions() {
    use crate::promises::FormulationMode;
    let mut scenario = load("scenario3.toml");
    scenario.execution.formulation_mode = FormulationMode::Pessimistic;
    // Until of a currently-unsatisfied literal is the present instant, so a
    // precondition that only a promise will satisfy cannot cover the whole
    // lookahead window: no promise-dependent formulation happens and the run
    // matches the no-promise baseline.
    let report = run(&scenario);
    assert_eq!(report.makespan, Some(Tick(450)));
    assert!(report.spans.iter().all(|s| !s.promise_dependent));
}

#[test]
fn propagation_delay_still_reaches_the_objective() {
    let mut scenario = load("scenario3.toml");
    scenario.execution.propagation_delay = 3;
    let report = run(&scenario);
    assert!(report.makespan.is_some());
    // Slower than the zero-latency run: effects land late.
    assert!(report.makespan.unwrap() >= Tick(350));
}

#[test]
fn event_log_round_trips_through_jsonl() {
    let report = run(&load("scenario3.toml"));
    let text = events_to_string(&report.events);
    let parsed = read_events(std::io::BufReader::new(text.as_bytes())).unwrap();
    assert_eq!(parsed, report.events);
    // Replay rebuilds the same report modulo planner timings.
    let replayed = RunReport::from_events(parsed, None);
    assert_eq!(replayed.makespan, report.makespan);
    assert_eq!(replayed.spans, report.spans);
    assert_eq!(replayed.utilization, report.utilization);
    assert_eq!(replayed.promise_stats, report.promise_stats);
    assert_eq!(events_to_string(&replayed.events), text);
}

#[test]
fn report_and_gantt_render() {
    let report = run(&load("scenario3.toml"));
    let text = report.render_text();
    assert!(text.contains("makespan: 350 ticks"));
    assert!(text.contains("used in formulation"));
    let gantt = report.render_gantt(100);
    assert!(gantt.contains("WALL-E"));
    // Promise-formulated goals are striped.
    let wall_e_row = gantt.lines().find(|l| l.starts_with("WALL-E")).unwrap();
    assert!(wall_e_row.contains('/'), "{wall_e_row}");
    let r2d2_row = gantt.lines().find(|l| l.starts_with("R2D2")).unwrap();
    assert!(r2d2_row.contains('='), "{r2d2_row}");
}

#[test]
fn gantt_of_an_empty_run_is_header_only() {
    let report = RunReport::from_events(vec![], None);
    let gantt = report.render_gantt(100);
    assert_eq!(gantt.lines().count(), 1);
}

#[test]
fn compare_reports_promise_and_baseline_runs() {
    let scenario = load("scenario3.toml");
    let with = run(&scenario);
    let without = run(&scenario.with_options(&RunOptions { promises: Some(false), ..Default::default() }));
    let comparison = compare(&without, &with).unwrap();
    assert_eq!(comparison.baseline_makespan, Tick(450));
    assert_eq!(comparison.other_makespan, Tick(350));
    assert_eq!(comparison.delta, 100);
    // CleanMachine is formulated 300 ticks earlier thanks to the promise.
    let (base, promised) = comparison.earliest_formulation[&Name::new("CleanMachine")];
    assert_eq!(base, Some(Tick(300)));
    assert_eq!(promised, Some(Tick(0)));

    // Identical reports compare with zero delta.
    let self_compare = compare(&with, &with).unwrap();
    assert_eq!(self_compare.delta, 0);
}

#[test]
fn compare_rejects_mismatched_scenarios() {
    let a = run(&load("scenario1.toml"));
    let b = run(&load("scenario2.toml"));
    assert!(matches!(compare(&a, &b), Err(CompareError::ScenarioMismatch(..))));
}

#[test]
fn batch_summarizes_mean_and_stddev() {
    let mut scenario = load("scenario1.toml");
    scenario.execution.duration_jitter_pct = 4;
    let runs: Vec<RunReport> = (0..3)
        .map(|seed| run(&scenario.with_options(&RunOptions { seed: Some(seed), ..Default::default() })))
        .collect();
    let summary = summarize_batch(&scenario.name, scenario.promises, &runs);
    assert_eq!(summary.makespans.len(), 3);
    let secs: Vec<f64> = runs.iter().filter_map(RunReport::makespan_secs).collect();
    let mean = secs.iter().sum::<f64>() / secs.len() as f64;
    assert!((summary.mean_secs - mean).abs() < 1e-9);
    let var = secs.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (secs.len() - 1) as f64;
    assert!((summary.stddev_secs - var.sqrt()).abs() < 1e-9);
    assert!(summary.render().contains("+/-"));
}

// ---- trace checkers --------------------------------------------------------------

#[test]
fn trace_checkers_pass_on_shipped_runs() {
    for name in ["scenario1.toml", "scenario2.toml", "scenario3.toml", "scenario4.toml"] {
        let scenario = load(name);
        let report = run(&scenario);
        trace::check_lock_safety(&report.events).unwrap_or_else(|v| panic!("{name}: {v:?}"));
        let index = trace::action_index(&scenario);
        trace::check_action_purity(&report.events, &scenario.problem.init, &index)
            .unwrap_or_else(|v| panic!("{name}: {v:?}"));
    }
}

#[test]
fn lock_safety_checker_catches_double_grants() {
    use crate::goals::GoalId;
    let mk = |seq: u64, agent: &str, goal: &str| EventRecord {
        time: 0,
        seq,
        agent: Some(Name::new(agent)),
        body: EventBody::LockGranted {
            resource: Name::new("M1"),
            goal: GoalId(Name::new(goal)),
        },
    };
    let events = vec![mk(0, "A", "g#1#0"), mk(1, "B", "h#1#0")];
    let violations = trace::check_lock_safety(&events).unwrap_err();
    assert!(violations[0].contains("while held by"), "{violations:?}");
}

#[test]
fn purity_checker_catches_premature_starts() {
    use crate::goals::GoalId;
    let scenario = load("scenario1.toml");
    let index = trace::action_index(&scenario);
    // start-machine requires FILLED; strip it from the reconstructed state.
    let mut init = scenario.problem.init.clone();
    init.remove(&"(machine-in-state M1 FILLED)".parse().unwrap());
    let events = vec![EventRecord {
        time: 0,
        seq: 0,
        agent: Some(Name::new("WALL-E")),
        body: EventBody::ActionStart {
            goal: GoalId(Name::new("g#0#0")),
            index: 0,
            action: "(start-machine WALL-E M1 M1-IN)".into(),
        },
    }];
    let violations = trace::check_action_purity(&events, &init, &index).unwrap_err();
    assert!(violations[0].contains("unsatisfied"), "{violations:?}");
}

#[test]
fn every_dispatched_goal_ends_cleanly_in_shipped_runs() {
    let report = run(&load("xenonite-3r-5c.toml"));
    assert!(report.makespan.is_some());
    for span in report.spans.iter().filter(|s| s.dispatched.is_some()) {
        let (_, mode) = span.ended.expect("dispatched goals end before the objective");
        assert!(matches!(mode, GoalMode::Finished | GoalMode::Failed));
    }
    // Promise accounting: formulation uses only real promises.
    assert!(report.promise_stats.used_in_formulation <= report.promise_stats.issued);
}
