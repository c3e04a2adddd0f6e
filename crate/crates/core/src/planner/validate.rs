//! Independent plan validator: simulates the timeline applying TILs at their
//! times and action effects at their ends, and checks every precondition at
//! its action's start and the objective at the makespan.
//!
//! This is a separate code path from the search on purpose; the two are
//! cross-checked against each other in tests.

use std::collections::BTreeSet;

use super::Plan;
use crate::time::Tick;
use crate::world::{satisfies_all, Atom, Literal};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub valid: bool,
    /// Human-readable description of the first violation.
    pub violation: Option<String>,
    /// End of the simulated timeline (the last action's end; zero for an
    /// empty plan).
    pub makespan: Tick,
}

impl ValidationReport {
    fn ok(makespan: Tick) -> Self {
        ValidationReport { valid: true, violation: None, makespan }
    }

    fn fail(msg: String) -> Self {
        ValidationReport { valid: false, violation: Some(msg), makespan: Tick::ZERO }
    }
}

pub fn validate_plan(
    plan: &Plan,
    init: &BTreeSet<Atom>,
    tils: &[(Tick, Literal)],
    objective: &[Literal],
) -> ValidationReport {
    let mut tils: Vec<(Tick, Literal)> = tils.to_vec();
    tils.sort();
    let mut state = init.clone();
    let mut cursor = 0usize;
    let mut prev_end = Tick::ZERO;

    let apply_tils = |state: &mut BTreeSet<Atom>, cursor: &mut usize, upto: Tick| {
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
    };

    for (i, step) in plan.steps.iter().enumerate() {
        if step.start < prev_end {
            return ValidationReport::fail(format!(
                "step {i} {} starts at {} before the previous action ends at {prev_end}",
                step.action.label(),
                step.start
            ));
        }
        apply_tils(&mut state, &mut cursor, step.start);
        if !satisfies_all(&state, &step.action.pre) {
            let missing = step
                .action
                .pre
                .iter()
                .find(|l| !crate::world::satisfies(&state, l))
                .expect("some literal failed");
            return ValidationReport::fail(format!(
                "step {i} {} at {}: precondition {missing} unsatisfied",
                step.action.label(),
                step.start
            ));
        }
        let end = step.end();
        // TILs during execution, then effects; at an equal instant the
        // action's completion precedes the TIL, matching the search.
        apply_tils(&mut state, &mut cursor, Tick(end.0.saturating_sub(1)));
        if let Some(atom) = step.action.adds.intersection(&step.action.dels).next() {
            return ValidationReport::fail(format!(
                "step {i} {}: add and delete effects overlap on {atom}",
                step.action.label()
            ));
        }
        for d in &step.action.dels {
            state.remove(d);
        }
        for a in &step.action.adds {
            state.insert(a.clone());
        }
        prev_end = end;
    }

    apply_tils(&mut state, &mut cursor, prev_end);
    if !satisfies_all(&state, objective) {
        let missing = objective
            .iter()
            .find(|l| !crate::world::satisfies(&state, l))
            .expect("some literal failed");
        return ValidationReport::fail(format!(
            "objective literal {missing} unsatisfied at makespan {prev_end}"
        ));
    }
    ValidationReport::ok(prev_end)
}
