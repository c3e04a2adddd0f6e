//! Post-hoc trace checkers over event logs: lock safety, the promised-
//! resource handover protocol, and action-precondition purity.

use std::collections::{BTreeMap, BTreeSet};

use crate::goals::{GoalId, GoalRef};
use crate::pddl;
use crate::planner::GroundAction;
use crate::world::{satisfies_all, Atom, Name};

use super::event::{EventBody, EventRecord};
use super::scenario::Scenario;

fn goal_ref(event: &EventRecord, goal: &GoalId) -> GoalRef {
    GoalRef {
        agent: event.agent.clone().expect("lock events carry an agent"),
        goal: goal.clone(),
    }
}

/// Verifies mutual exclusion and the handover protocol over a run's lock
/// events: at no instant do two goals hold one resource (promised shadows
/// included), and every handover follows the deferred promised-R
/// acquisition, transfers a just-released R with nothing in between, and is
/// followed by the promised-R release.
pub fn check_lock_safety(events: &[EventRecord]) -> Result<(), Vec<String>> {
    let mut violations = Vec::new();
    let mut holders: BTreeMap<Name, GoalRef> = BTreeMap::new();
    // Base resource -> releasing goal, cleared by any later grant.
    let mut just_released: BTreeMap<Name, GoalRef> = BTreeMap::new();
    // Promised resources that must be released right after a handover.
    let mut pending_promised_release: BTreeMap<Name, GoalRef> = BTreeMap::new();

    for (i, event) in events.iter().enumerate() {
        match &event.body {
            EventBody::LockGranted { resource, goal } => {
                let requester = goal_ref(event, goal);
                if let Some(holder) = holders.get(resource) {
                    if *holder != requester {
                        violations.push(format!(
                            "event {i}: {resource} granted to {requester} while held by {holder}"
                        ));
                    }
                }
                just_released.remove(resource);
                holders.insert(resource.clone(), requester);
            }
            EventBody::LockDeferred { promised, goal, .. } => {
                let requester = goal_ref(event, goal);
                if let Some(holder) = holders.get(promised) {
                    violations.push(format!(
                        "event {i}: {promised} deferred-granted to {requester} while held by {holder}"
                    ));
                }
                holders.insert(promised.clone(), requester);
            }
            EventBody::LockReleased { resource, goal } => {
                let releaser = goal_ref(event, goal);
                match holders.remove(resource) {
                    Some(holder) if holder == releaser => {}
                    Some(holder) => violations.push(format!(
                        "event {i}: {resource} released by {releaser} but held by {holder}"
                    )),
                    None => violations.push(format!(
                        "event {i}: {resource} released by {releaser} but not held"
                    )),
                }
                if let Some(expected) = pending_promised_release.remove(resource) {
                    if expected != releaser {
                        violations.push(format!(
                            "event {i}: {resource} released by {releaser}, expected waiter {expected}"
                        ));
                    }
                }
                just_released.insert(resource.clone(), releaser);
            }
            EventBody::LockHandover { resource, from, to } => {
                let from = GoalRef::parse(from).expect("well-formed goal ref");
                let to = GoalRef::parse(to).expect("well-formed goal ref");
                if let Some(holder) = holders.get(resource) {
                    violations.push(format!(
                        "event {i}: {resource} handed over while held by {holder}"
                    ));
                }
                match just_released.remove(resource) {
                    Some(releaser) if releaser == from => {}
                    _ => violations.push(format!(
                        "event {i}: handover of {resource} does not follow its release by {from}"
                    )),
                }
                let promised = crate::locks::promised_resource(resource);
                match holders.get(&promised) {
                    Some(holder) if *holder == to => {}
                    _ => violations.push(format!(
                        "event {i}: handover of {resource} to {to} without it holding {promised}"
                    )),
                }
                holders.insert(resource.clone(), to.clone());
                pending_promised_release.insert(promised, to);
            }
            _ => {}
        }
    }
    for (promised, waiter) in pending_promised_release {
        violations.push(format!("{promised} never released by {waiter} after handover"));
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// Verifies that no action started running while its precondition was false
/// in the actual world state (promises are never applied to action
/// preconditions). The state is reconstructed from world-update events.
pub fn check_action_purity(
    events: &[EventRecord],
    init: &BTreeSet<Atom>,
    actions_by_label: &BTreeMap<String, GroundAction>,
) -> Result<(), Vec<String>> {
    let mut violations = Vec::new();
    let mut state = init.clone();
    for (i, event) in events.iter().enumerate() {
        match &event.body {
            EventBody::WorldUpdate { adds, dels, .. } => {
                for d in dels {
                    let atom: Atom = d.parse().expect("well-formed atom in log");
                    state.remove(&atom);
                }
                for a in adds {
                    let atom: Atom = a.parse().expect("well-formed atom in log");
                    state.insert(atom);
                }
            }
            EventBody::ActionStart { action, .. } => {
                let Some(ground) = actions_by_label.get(action) else {
                    violations.push(format!("event {i}: unknown action {action}"));
                    continue;
                };
                if !satisfies_all(&state, &ground.pre) {
                    let missing = ground
                        .pre
                        .iter()
                        .find(|l| !crate::world::satisfies(&state, l))
                        .expect("some literal failed");
                    violations.push(format!(
                        "event {i} (t={}): {action} started with {missing} unsatisfied",
                        event.time
                    ));
                }
            }
            _ => {}
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// Ground-action lookup by display label for purity checking, grounded over
/// the whole object table (all agents).
pub fn action_index(scenario: &Scenario) -> BTreeMap<String, GroundAction> {
    let mut promise_preds = BTreeSet::new();
    for op in &scenario.operators {
        for t in &op.promise_templates {
            promise_preds.insert(t.literal.atom.pred.clone());
        }
    }
    pddl::ground_actions(
        &scenario.domain,
        &scenario.objects,
        &scenario.problem.init,
        &promise_preds,
    )
    .into_iter()
    .map(|a| (a.label(), a))
    .collect()
}
