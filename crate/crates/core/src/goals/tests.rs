use std::collections::BTreeSet;

use proptest::prelude::*;

use super::*;
use crate::world::{AtomPattern, ObjectTable};

fn names(items: &[&str]) -> Vec<Name> {
    items.iter().map(|s| Name::new(s)).collect()
}

fn pattern(s: &str) -> LiteralPattern {
    // `?x` arguments are variables, the rest constants.
    let trimmed = s.trim();
    let (positive, inner) = match trimmed.strip_prefix("(not ") {
        Some(rest) => (false, rest.trim_end_matches(')')),
        None => (true, trimmed),
    };
    let inner = inner.trim_start_matches('(').trim_end_matches(')');
    let mut parts = inner.split_whitespace();
    let pred = Name::new(parts.next().expect("predicate"));
    let args = parts.map(Term::parse).collect();
    LiteralPattern { atom: AtomPattern { pred, args }, positive }
}

fn operator(class: &str, params: &[(&str, &str)]) -> GoalOperator {
    GoalOperator {
        class_name: Name::new(class),
        params: params.iter().map(|(n, t)| (Name::new(n), Name::new(t))).collect(),
        lookahead: Tick(20),
        precondition: vec![],
        objective: vec![],
        promise_templates: vec![],
        est_duration: Tick(10),
        required_resources: vec![],
        priority: 0,
    }
}

fn table(entries: &[(&str, &str)]) -> ObjectTable {
    let mut t = ObjectTable::new();
    for (o, ty) in entries {
        t.insert(Name::new(o), Name::new(ty));
    }
    t
}

#[test]
fn grounding_one_param_yields_domain_size() {
    let op = operator("Recharge", &[("r", "robot")]);
    let objects = table(&[("WALL-E", "robot"), ("R2D2", "robot")]);
    let candidates = ground_operator(&op, &objects).unwrap();
    assert_eq!(candidates.len(), 2);
}

#[test]
fn grounding_zero_params_yields_one_candidate() {
    let op = operator("Idle", &[]);
    let candidates = ground_operator(&op, &table(&[])).unwrap();
    assert_eq!(candidates.len(), 1);
    assert!(candidates[0].binding.is_empty());
}

#[test]
fn grounding_clean_machine_yields_typed_product() {
    // 2 robots x 3 locations x 2 machines x 2 containers x 3 materials = 72.
    let op = operator(
        "CleanMachine",
        &[("r", "robot"), ("side", "loc"), ("machine", "machine"), ("c", "cont"), ("mat", "material")],
    );
    let mut objects = ObjectTable::new();
    for (prefix, ty, n) in
        [("r", "robot", 2), ("l", "loc", 3), ("m", "machine", 2), ("c", "cont", 2), ("mat", "material", 3)]
    {
        for i in 0..n {
            objects.insert(Name::from(format!("{prefix}{i}")), Name::new(ty));
        }
    }
    let candidates = ground_operator(&op, &objects).unwrap();
    assert_eq!(candidates.len(), 2 * 3 * 2 * 2 * 3);
    // No duplicates.
    let distinct: BTreeSet<_> = candidates.iter().map(|c| c.binding.clone()).collect();
    assert_eq!(distinct.len(), candidates.len());
}

#[test]
fn grounding_empty_domain_yields_nothing() {
    let op = operator("Recharge", &[("r", "robot"), ("l", "loc")]);
    let mut objects = ObjectTable::new();
    objects.insert(Name::new("WALL-E"), Name::new("robot"));
    // `loc` is declared but empty.
    let empty_loc = {
        let mut t = objects.clone();
        t.insert(Name::new("dummy"), Name::new("loc"));
        t
    };
    assert_eq!(ground_operator(&op, &empty_loc).unwrap().len(), 1);
    assert!(matches!(
        ground_operator(&op, &objects),
        Err(GroundingError::UnknownType { .. })
    ));
}

#[test]
fn grounding_is_insertion_order_independent() {
    let op = operator("Recharge", &[("r", "robot"), ("l", "loc")]);
    let forward = table(&[("a", "robot"), ("b", "robot"), ("x", "loc"), ("y", "loc")]);
    let backward = table(&[("y", "loc"), ("x", "loc"), ("b", "robot"), ("a", "robot")]);
    let c1 = ground_operator(&op, &forward).unwrap();
    let c2 = ground_operator(&op, &backward).unwrap();
    assert_eq!(c1, c2);
}

#[test]
fn grounding_instantiates_patterns_and_resources() {
    let mut op = operator("Clean", &[("m", "machine")]);
    op.precondition = vec![pattern("(machine-in-state ?m READY)")];
    op.objective = vec![pattern("(machine-in-state ?m IDLE)")];
    op.promise_templates = vec![
        PromiseTemplate { literal: pattern("(machine-in-state ?m IDLE)"), offset: None },
        PromiseTemplate { literal: pattern("(machine-in-state ?m READY)"), offset: Some(Tick(3)) },
    ];
    op.required_resources = vec![Term::parse("?m"), Term::parse("shared")];
    let objects = table(&[("M1", "machine")]);
    let candidates = ground_operator(&op, &objects).unwrap();
    let c = &candidates[0];
    assert_eq!(c.precondition[0].to_string(), "(machine-in-state M1 READY)");
    // Default offset falls back to est-duration; explicit offsets win.
    assert_eq!(c.promises[0], ("(machine-in-state M1 IDLE)".parse().unwrap(), Tick(10)));
    assert_eq!(c.promises[1], ("(machine-in-state M1 READY)".parse().unwrap(), Tick(3)));
    assert_eq!(c.resources, [Name::new("M1"), Name::new("shared")].into());
}

#[test]
fn validate_rejects_unbound_variables() {
    let mut op = operator("Clean", &[("m", "machine")]);
    op.precondition = vec![pattern("(robot-at ?r ?m)")];
    assert!(matches!(op.validate(), Err(OperatorError::UnboundVariable { .. })));
}

fn goal_in_mode(mode: GoalMode) -> Goal {
    let op = operator("Test", &[]);
    let candidate = &ground_operator(&op, &table(&[])).unwrap()[0];
    let mut goal = Goal::formulate(candidate, 0, Tick(5), false, BTreeSet::new());
    goal.mode = mode;
    goal
}

#[test]
fn transition_follows_legal_edges() {
    let mut goal = goal_in_mode(GoalMode::Formulated);
    for (event, expected) in [
        (GoalEvent::Select, GoalMode::Selected),
        (GoalEvent::Expand, GoalMode::Expanded),
        (GoalEvent::Commit, GoalMode::Committed),
        (GoalEvent::Dispatch, GoalMode::Dispatched),
        (GoalEvent::Finish, GoalMode::Finished),
    ] {
        goal.apply(event, Tick(1)).unwrap();
        assert_eq!(goal.mode, expected);
    }
    // The trace records every step with its timestamp.
    assert_eq!(goal.trace.len(), 6);
    assert_eq!(goal.trace[0], (Tick(5), GoalMode::Formulated));
}

#[test]
fn transition_rejects_illegal_edges_and_leaves_goal_unchanged() {
    let mut goal = goal_in_mode(GoalMode::Dispatched);
    let err = goal.apply(GoalEvent::Select, Tick(1)).unwrap_err();
    assert_eq!(err, TransitionError { mode: GoalMode::Dispatched, event: GoalEvent::Select });
    assert_eq!(goal.mode, GoalMode::Dispatched);
    assert_eq!(goal.trace.len(), 1);
}

#[test]
fn committed_goal_rejects_on_resource_denial() {
    let mut goal = goal_in_mode(GoalMode::Committed);
    goal.apply(GoalEvent::Reject, Tick(2)).unwrap();
    assert_eq!(goal.mode, GoalMode::Rejected);
}

#[test]
fn pre_dispatch_modes_can_retract_but_dispatched_cannot() {
    for mode in [GoalMode::Formulated, GoalMode::Selected, GoalMode::Expanded, GoalMode::Committed] {
        let mut goal = goal_in_mode(mode);
        assert!(goal.apply(GoalEvent::Retract, Tick(0)).is_ok());
    }
    let mut goal = goal_in_mode(GoalMode::Dispatched);
    assert!(goal.apply(GoalEvent::Retract, Tick(0)).is_err());
    assert!(goal.apply(GoalEvent::Reject, Tick(0)).is_err());
}

#[test]
fn terminal_modes_accept_no_events() {
    for mode in [GoalMode::Finished, GoalMode::Failed, GoalMode::Rejected, GoalMode::Retracted] {
        assert!(mode.is_terminal());
        let mut goal = goal_in_mode(mode);
        for event in [
            GoalEvent::Select,
            GoalEvent::Expand,
            GoalEvent::Commit,
            GoalEvent::Dispatch,
            GoalEvent::Finish,
            GoalEvent::Fail,
            GoalEvent::Reject,
            GoalEvent::Retract,
        ] {
            assert!(goal.apply(event, Tick(0)).is_err());
        }
    }
}

#[test]
fn goal_ids_are_stable_and_distinguish_counters() {
    let binding: Binding = [(Name::new("m"), Name::new("M1"))].into();
    let a = GoalId::new(&Name::new("Clean"), &binding, 0);
    let b = GoalId::new(&Name::new("Clean"), &binding, 0);
    let c = GoalId::new(&Name::new("Clean"), &binding, 1);
    assert_eq!(a, b);
    assert_ne!(a, c);
    let text = a.to_string();
    assert!(text.starts_with("Clean#"));
    assert!(text.ends_with("#0"));
}

fn formulated(class: &str, priority: i64, at: u64, counter: u64) -> Goal {
    let mut op = operator(class, &[]);
    op.priority = priority;
    let candidate = &ground_operator(&op, &table(&[])).unwrap()[0];
    Goal::formulate(candidate, counter, Tick(at), false, BTreeSet::new())
}

#[test]
fn select_singleton() {
    let goal = formulated("StartMachine", 1, 0, 0);
    let picked = select_goal([&goal], &SelectionStrategy).unwrap();
    assert_eq!(picked.id, goal.id);
}

#[test]
fn select_prefers_higher_priority() {
    let low = formulated("StartMachineM1", 1, 0, 0);
    let high = formulated("StartMachineM2", 5, 3, 1);
    let picked = select_goal([&low, &high], &SelectionStrategy).unwrap();
    assert_eq!(picked.id, high.id);
}

#[test]
fn select_breaks_priority_ties_by_formulation_time() {
    let early = formulated("A", 1, 2, 0);
    let late = formulated("B", 1, 7, 1);
    let picked = select_goal([&late, &early], &SelectionStrategy).unwrap();
    assert_eq!(picked.id, early.id);
}

#[test]
fn select_none_from_empty_input() {
    assert!(select_goal([], &SelectionStrategy).is_none());
}

proptest! {
    /// Equal priority and time fall back to the smallest goal id, whatever
    /// order the goals are presented in.
    #[test]
    fn select_tie_break_is_input_order_independent(
        permutation in proptest::sample::subsequence(vec![0usize, 1, 2, 3], 4..=4).prop_shuffle(),
    ) {
        let goals: Vec<Goal> =
            (0..4).map(|i| formulated(&format!("Class{i}"), 1, 0, i as u64)).collect();
        let expected = goals.iter().map(|g| g.id.clone()).min().unwrap();
        let shuffled: Vec<&Goal> = permutation.iter().map(|&i| &goals[i]).collect();
        let picked = select_goal(shuffled, &SelectionStrategy).unwrap();
        prop_assert_eq!(&picked.id, &expected);
    }
}
