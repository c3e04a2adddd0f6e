use std::collections::BTreeSet;

use proptest::prelude::*;

use super::*;
use crate::time::TimeBound;
use crate::world::{satisfies_all, Atom, Literal};

fn atom(s: &str) -> Atom {
    s.parse().unwrap()
}

fn lit(s: &str) -> Literal {
    s.parse().unwrap()
}

fn atoms(items: &[&str]) -> BTreeSet<Atom> {
    items.iter().map(|s| atom(s)).collect()
}

fn action(name: &str, pre: &[&str], adds: &[&str], dels: &[&str], dur: u64) -> GroundAction {
    GroundAction {
        name: crate::world::Name::new(name),
        args: vec![],
        pre: pre.iter().map(|s| lit(s)).collect(),
        adds: atoms(adds),
        dels: atoms(dels),
        duration: Tick(dur),
    }
}

fn uc() -> PlannerConfig {
    PlannerConfig::default()
}

// ---- exhaustive enumeration oracle -----------------------------------------
//
// Symbolic depth-first enumeration over the same timeline semantics as the
// search, written independently of it (symbolic sets, recursion, no frontier).

fn apply_tils_sym(
    state: &mut BTreeSet<Atom>,
    tils: &[(Tick, Literal)],
    cursor: &mut usize,
    upto: Tick,
) {
    while let Some((t, l)) = tils.get(*cursor) {
        if *t > upto {
            break;
        }
        if l.positive {
            state.insert(l.atom.clone());
        } else {
            state.remove(&l.atom);
        }
        *cursor += 1;
    }
}

fn enumerate_best(
    actions: &[GroundAction],
    state: &BTreeSet<Atom>,
    t: Tick,
    tils: &[(Tick, Literal)],
    cursor: usize,
    objective: &[Literal],
    depth: usize,
    eligible: bool,
) -> TimeBound {
    let mut best = if eligible && satisfies_all(state, objective) {
        TimeBound::At(t)
    } else {
        TimeBound::Never
    };
    if depth > 0 {
        for a in actions {
            if !satisfies_all(state, &a.pre) {
                continue;
            }
            let end = t + a.duration;
            let mut next = state.clone();
            let mut c = cursor;
            apply_tils_sym(&mut next, tils, &mut c, Tick(end.0 - 1));
            for d in &a.dels {
                next.remove(d);
            }
            for ad in &a.adds {
                next.insert(ad.clone());
            }
            apply_tils_sym(&mut next, tils, &mut c, end);
            best = best.min(enumerate_best(actions, &next, end, tils, c, objective, depth - 1, true));
        }
    }
    if let Some((wt, _)) = tils.get(cursor) {
        let mut next = state.clone();
        let mut c = cursor;
        apply_tils_sym(&mut next, tils, &mut c, *wt);
        best = best.min(enumerate_best(actions, &next, *wt, tils, c, objective, depth, false));
    }
    best
}

fn best_within(
    actions: &[GroundAction],
    init: &BTreeSet<Atom>,
    objective: &[Literal],
    tils: &[(Tick, Literal)],
    depth: usize,
) -> TimeBound {
    let mut tils = tils.to_vec();
    tils.sort();
    enumerate_best(actions, init, Tick::ZERO, &tils, 0, objective, depth, true)
}

// ---- documented behaviors --------------------------------------------------------

#[test]
fn satisfied_objective_yields_the_empty_plan() {
    let init = atoms(&["(p)"]);
    let outcome = plan(&[], &init, &[lit("(p)")], &[], &uc());
    let p = outcome.solved().unwrap();
    assert!(p.is_empty());
    assert_eq!(p.makespan(), Tick::ZERO);
}

#[test]
fn waits_for_a_til_to_enable_the_only_action() {
    let a = action("a", &["(p)"], &["(q)"], &[], 3);
    let tils = [(Tick(5), lit("(p)"))];
    let outcome = plan(&[a.clone()], &BTreeSet::new(), &[lit("(q)")], &tils, &uc());
    let p = outcome.solved().unwrap();
    assert_eq!(p.steps.len(), 1);
    assert_eq!(p.steps[0].start, Tick(5));
    assert_eq!(p.makespan(), Tick(8));
    // Exhaustive enumeration agrees this is the earliest completion.
    assert_eq!(
        best_within(&[a], &BTreeSet::new(), &[lit("(q)")], &tils, 4),
        TimeBound::At(Tick(8))
    );
}

#[test]
fn unsolvable_is_distinct_from_budget_exhaustion() {
    let a = action("a", &["(p)"], &["(q)"], &[], 3);
    assert_eq!(plan(&[a], &BTreeSet::new(), &[lit("(q)")], &[], &uc()), PlanOutcome::Unsolvable);

    // A treadmill domain that cannot reach the goal exhausts the budget.
    let flip = action("flip", &["(x)"], &["(y)"], &["(x)"], 1);
    let flop = action("flop", &["(y)"], &["(x)"], &["(y)"], 1);
    let config = PlannerConfig { node_budget: 10, ..uc() };
    // With duplicate detection the treadmill closes quickly: unsolvable.
    assert_eq!(
        plan(&[flip.clone(), flop.clone()], &atoms(&["(x)"]), &[lit("(goal)")], &[], &config),
        PlanOutcome::Unsolvable
    );
    // A growing clock via TILs keeps states fresh until the budget trips.
    let tils: Vec<(Tick, Literal)> = (1..1000).map(|i| (Tick(i), lit("(tick)"))).collect();
    assert_eq!(
        plan(&[flip, flop], &atoms(&["(x)"]), &[lit("(goal)")], &tils, &config),
        PlanOutcome::ResourceLimit
    );
}

#[test]
fn respects_the_time_bound() {
    let a = action("a", &[], &["(q)"], &[], 10);
    let config = PlannerConfig { bound: Tick(9), ..uc() };
    assert_eq!(plan(&[a], &BTreeSet::new(), &[lit("(q)")], &[], &config), PlanOutcome::Unsolvable);
}

#[test]
fn clean_machine_expansion_waits_for_the_promised_til() {
    // The shipped domain, a robot holding an empty container at BASE, and a
    // promise that M1 becomes READY at +200 translated into a TIL.
    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios/xenonite");
    let domain =
        crate::pddl::parse_domain(&std::fs::read_to_string(format!("{root}/domain.pddl")).unwrap())
            .unwrap();
    let problem = crate::pddl::parse_problem(
        &std::fs::read_to_string(format!("{root}/scenario3.pddl")).unwrap(),
        &domain,
    )
    .unwrap();
    let objects = domain.merged_objects(&problem.objects);
    let til_preds = [crate::world::Name::new("machine-in-state")].into();
    let mut init = problem.init.clone();
    init.remove(&atom("(machine-in-state M1 FILLED)"));
    let actions: Vec<GroundAction> =
        crate::pddl::ground_actions(&domain, &objects, &init, &til_preds)
            .into_iter()
            .filter(|a| a.args.first().map(|r| r.as_str() != "R2D2").unwrap_or(true))
            .collect();
    let tils = [(Tick(200), lit("(machine-in-state M1 READY)"))];
    let objective = [lit("(robot-carries WALL-E C1)"), lit("(container-filled C1 PROCESSITE)")];
    let outcome = plan(&actions, &init, &objective, &tils, &uc());
    let p = outcome.solved().unwrap();
    assert_eq!(p.steps[0].action.name.as_str(), "move");
    let collect = p
        .steps
        .iter()
        .find(|s| s.action.name.as_str() == "collect-processite")
        .expect("plan collects the output");
    assert!(collect.start >= Tick(200), "collect at {} before the TIL", collect.start);
    let report = validate_plan(&p, &init, &tils, &objective);
    assert!(report.valid, "{:?}", report.violation);
}

#[test]
fn identical_inputs_yield_identical_plans() {
    let acts = vec![
        action("a", &[], &["(p)"], &[], 2),
        action("b", &["(p)"], &["(q)"], &[], 2),
        action("c", &[], &["(q)"], &[], 5),
    ];
    let tils = [(Tick(3), lit("(r)"))];
    let objective = [lit("(q)"), lit("(r)")];
    let first = plan(&acts, &BTreeSet::new(), &objective, &tils, &uc());
    for _ in 0..5 {
        assert_eq!(plan(&acts, &BTreeSet::new(), &objective, &tils, &uc()), first);
    }
}

#[test]
fn greedy_finds_a_valid_plan_too() {
    let acts = vec![
        action("a", &[], &["(p)"], &[], 2),
        action("b", &["(p)"], &["(q)"], &[], 2),
    ];
    let config = PlannerConfig { mode: SearchMode::Greedy, ..uc() };
    let p = plan(&acts, &BTreeSet::new(), &[lit("(q)")], &[], &config).solved().unwrap();
    let report = validate_plan(&p, &BTreeSet::new(), &[], &[lit("(q)")]);
    assert!(report.valid);
}

// ---- validator --------------------------------------------------------------

#[test]
fn validator_accepts_the_empty_plan_when_the_objective_holds() {
    let report = validate_plan(&Plan::default(), &atoms(&["(p)"]), &[], &[lit("(p)")]);
    assert!(report.valid);
    assert_eq!(report.makespan, Tick::ZERO);
}

#[test]
fn validator_rejects_an_action_scheduled_before_its_enabling_til() {
    let a = action("a", &["(p)"], &["(q)"], &[], 3);
    let plan = Plan { steps: vec![TimedAction { start: Tick(4), action: a }] };
    let tils = [(Tick(5), lit("(p)"))];
    let report = validate_plan(&plan, &BTreeSet::new(), &tils, &[lit("(q)")]);
    assert!(!report.valid);
    let violation = report.violation.unwrap();
    assert!(violation.contains("(a)"), "{violation}");
    assert!(violation.contains("(p)"), "{violation}");
}

#[test]
fn validator_rejects_overlapping_steps_and_missed_objectives() {
    let a = action("a", &[], &["(p)"], &[], 5);
    let b = action("b", &[], &["(q)"], &[], 5);
    let overlapping = Plan {
        steps: vec![
            TimedAction { start: Tick(0), action: a.clone() },
            TimedAction { start: Tick(3), action: b },
        ],
    };
    assert!(!validate_plan(&overlapping, &BTreeSet::new(), &[], &[]).valid);

    let incomplete = Plan { steps: vec![TimedAction { start: Tick(0), action: a }] };
    let report = validate_plan(&incomplete, &BTreeSet::new(), &[], &[lit("(missing)")]);
    assert!(!report.valid);
    assert!(report.violation.unwrap().contains("(missing)"));
}

#[test]
fn validator_applies_tils_during_execution() {
    // A TIL deletes (p) mid-action; a second action needing (p) then fails.
    let a = action("a", &[], &["(q)"], &[], 10);
    let b = action("b", &["(p)"], &["(r)"], &[], 1);
    let plan = Plan {
        steps: vec![
            TimedAction { start: Tick(0), action: a },
            TimedAction { start: Tick(10), action: b },
        ],
    };
    let tils = [(Tick(4), lit("(not (p))"))];
    let report = validate_plan(&plan, &atoms(&["(p)"]), &tils, &[lit("(r)")]);
    assert!(!report.valid);
    assert!(report.violation.unwrap().contains("(b)"));
}

#[test]
fn makespan_of_single_step_plan() {
    let p = Plan {
        steps: vec![TimedAction { start: Tick(2), action: action("a", &[], &["(q)"], &[], 7) }],
    };
    assert_eq!(p.makespan(), Tick(9));
}

// ---- randomized cross-checks -----------------------------------------------------

#[derive(Debug, Clone)]
struct Instance {
    actions: Vec<GroundAction>,
    init: BTreeSet<Atom>,
    objective: Vec<Literal>,
    tils: Vec<(Tick, Literal)>,
}

fn arb_instance() -> impl Strategy<Value = Instance> {
    let small_atom = (0u8..5).prop_map(|i| -> Atom { format!("(p{i})").parse().unwrap() });
    let small_lit =
        (0u8..5, any::<bool>()).prop_map(|(i, pos)| -> Literal {
            let a: Atom = format!("(p{i})").parse().unwrap();
            Literal { atom: a, positive: pos }
        });
    let arb_action = (
        prop::collection::vec(small_lit.clone(), 0..2),
        prop::collection::btree_set(small_atom.clone(), 1..3),
        prop::collection::btree_set(small_atom.clone(), 0..2),
        1u64..5,
    )
        .prop_map(|(pre, adds, dels, dur)| {
            let dels: BTreeSet<Atom> = dels.difference(&adds).cloned().collect();
            GroundAction {
                name: crate::world::Name::new("act"),
                args: vec![],
                pre,
                adds,
                dels,
                duration: Tick(dur),
            }
        });
    (
        prop::collection::vec(arb_action, 1..4),
        prop::collection::btree_set(small_atom.clone(), 0..3),
        prop::collection::vec(small_lit, 1..3),
        prop::collection::vec((1u64..8, (0u8..5, any::<bool>())), 0..3),
    )
        .prop_map(|(mut actions, init, objective, tils)| {
            for (i, a) in actions.iter_mut().enumerate() {
                a.name = crate::world::Name::from(format!("act{i}"));
            }
            Instance {
                actions,
                init,
                objective,
                tils: tils
                    .into_iter()
                    .map(|(t, (i, pos))| {
                        let a: Atom = format!("(p{i})").parse().unwrap();
                        (Tick(t), Literal { atom: a, positive: pos })
                    })
                    .collect(),
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Every returned plan passes the independent validator, and uniform-cost
    /// achievement times match exhaustive enumeration up to depth 4.
    #[test]
    fn plans_validate_and_match_enumeration(instance in arb_instance()) {
        let outcome =
            plan(&instance.actions, &instance.init, &instance.objective, &instance.tils, &uc());
        let best = best_within(&instance.actions, &instance.init, &instance.objective, &instance.tils, 4);
        match outcome {
            PlanOutcome::Solved(p) => {
                let report =
                    validate_plan(&p, &instance.init, &instance.tils, &instance.objective);
                prop_assert!(report.valid, "{:?} for plan\n{p}", report.violation);
                prop_assert_eq!(report.makespan, p.makespan());
                if p.steps.len() <= 4 {
                    prop_assert_eq!(TimeBound::At(p.makespan()), best);
                }
            }
            PlanOutcome::Unsolvable => prop_assert_eq!(best, TimeBound::Never),
            PlanOutcome::ResourceLimit => {}
        }
    }

    /// With no TILs the planner degenerates to classical sequential STRIPS
    /// search: minimal plan duration equals a plain Dijkstra oracle.
    #[test]
    fn degenerates_to_strips_without_tils(instance in arb_instance()) {
        let outcome = plan(&instance.actions, &instance.init, &instance.objective, &[], &uc());
        let oracle = strips_dijkstra(&instance.actions, &instance.init, &instance.objective);
        match outcome {
            PlanOutcome::Solved(p) => prop_assert_eq!(Some(p.makespan()), oracle),
            PlanOutcome::Unsolvable => prop_assert_eq!(oracle, None),
            PlanOutcome::ResourceLimit => {}
        }
    }
}

/// Plain STRIPS minimal-duration oracle: Dijkstra over symbolic states.
fn strips_dijkstra(
    actions: &[GroundAction],
    init: &BTreeSet<Atom>,
    objective: &[Literal],
) -> Option<Tick> {
    use std::cmp::Reverse;
    use std::collections::{BinaryHeap, HashMap};
    let mut dist: HashMap<BTreeSet<Atom>, Tick> = HashMap::new();
    let mut heap = BinaryHeap::new();
    dist.insert(init.clone(), Tick::ZERO);
    heap.push(Reverse((Tick::ZERO, init.clone())));
    while let Some(Reverse((t, state))) = heap.pop() {
        if dist.get(&state) != Some(&t) {
            continue;
        }
        if satisfies_all(&state, objective) {
            return Some(t);
        }
        for a in actions {
            if !satisfies_all(&state, &a.pre) {
                continue;
            }
            let mut next = state.clone();
            for d in &a.dels {
                next.remove(d);
            }
            for ad in &a.adds {
                next.insert(ad.clone());
            }
            let nt = t + a.duration;
            if dist.get(&next).map_or(true, |&old| nt < old) {
                dist.insert(next.clone(), nt);
                heap.push(Reverse((nt, next)));
            }
        }
    }
    None
}
