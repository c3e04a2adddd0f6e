//! Central lock authority for goal resources, including the promised-resource
//! handover protocol.
//!
//! A promise-dependent goal whose required resource is held by its promising
//! goal does not get rejected: it acquires the shadow resource `promised-R`
//! instead and receives `R` atomically when the holder releases it. At most
//! one goal can hold `promised-R`, so promise-dependent goals cannot conflict
//! among themselves.

use std::collections::{BTreeMap, BTreeSet};

use crate::goals::GoalRef;
use crate::world::Name;

/// The shadow resource name for a base resource.
pub fn promised_resource(resource: &Name) -> Name {
    Name::from(format!("promised-{resource}"))
}

/// Per-resource outcome of an acquisition request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResourceOutcome {
    Granted,
    Denied { holder: GoalRef },
    /// The blocking holder is a promising goal of the requester; the shadow
    /// resource was acquired instead.
    Deferred { promised: Name },
}

/// Outcome of a whole request. Either every resource was granted or deferred
/// and the locks are now held, or the request was denied and nothing changed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RequestResult {
    pub granted: bool,
    pub outcomes: Vec<(Name, ResourceOutcome)>,
}

/// An atomic transfer of a released resource to its promised-resource waiter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Handover {
    pub resource: Name,
    pub from: GoalRef,
    pub to: GoalRef,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReleaseResult {
    /// Base resources freed (excluding handed-over ones).
    pub released: Vec<Name>,
    /// Base resources transferred to their waiters.
    pub handovers: Vec<Handover>,
    /// Promised resources freed, as their base resource names.
    pub released_promised: Vec<Name>,
}

impl ReleaseResult {
    pub fn is_empty(&self) -> bool {
        self.released.is_empty() && self.handovers.is_empty() && self.released_promised.is_empty()
    }
}

/// The single lock authority all agents talk to.
#[derive(Debug, Clone, Default)]
pub struct LockAuthority {
    holders: BTreeMap<Name, GoalRef>,
    /// Waiter per base resource, i.e. the holder of `promised-R`.
    promised: BTreeMap<Name, GoalRef>,
    version: u64,
    /// Off by default: also defer on resources held by goals other than the
    /// requester's promising goals.
    pub defer_on_any_holder: bool,
}

impl LockAuthority {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_defer_on_any_holder(defer_on_any_holder: bool) -> Self {
        LockAuthority { defer_on_any_holder, ..Self::default() }
    }

    /// Bumped whenever holdings change; used to re-try rejected goals only
    /// after the lock table moved.
    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn holder(&self, resource: &Name) -> Option<&GoalRef> {
        self.holders.get(resource)
    }

    pub fn promised_holder(&self, resource: &Name) -> Option<&GoalRef> {
        self.promised.get(resource)
    }

    /// Requests a resource set for a goal. `supporting` names the goals whose
    /// promises the requester was formulated on (empty for goals that are not
    /// promise-dependent). All-or-nothing: on any denial no lock is taken.
    pub fn request(
        &mut self,
        requester: &GoalRef,
        resources: &BTreeSet<Name>,
        supporting: &BTreeSet<GoalRef>,
    ) -> RequestResult {
        let mut outcomes = Vec::new();
        let mut granted = true;
        for resource in resources {
            let outcome = match self.holders.get(resource) {
                None => ResourceOutcome::Granted,
                Some(holder) if holder == requester => ResourceOutcome::Granted,
                Some(holder) => {
                    let promising =
                        supporting.contains(holder) || (self.defer_on_any_holder && !supporting.is_empty());
                    match self.promised.get(resource) {
                        _ if !promising => ResourceOutcome::Denied { holder: holder.clone() },
                        Some(waiter) => ResourceOutcome::Denied { holder: waiter.clone() },
                        None => ResourceOutcome::Deferred { promised: promised_resource(resource) },
                    }
                }
            };
            if matches!(outcome, ResourceOutcome::Denied { .. }) {
                granted = false;
            }
            outcomes.push((resource.clone(), outcome));
        }
        if granted {
            for (resource, outcome) in &outcomes {
                match outcome {
                    ResourceOutcome::Granted => {
                        self.holders.insert(resource.clone(), requester.clone());
                    }
                    ResourceOutcome::Deferred { .. } => {
                        self.promised.insert(resource.clone(), requester.clone());
                    }
                    ResourceOutcome::Denied { .. } => unreachable!(),
                }
            }
            if !outcomes.is_empty() {
                self.version += 1;
            }
        }
        RequestResult { granted, outcomes }
    }

    /// Releases everything a goal holds. Each freed base resource with a
    /// promised-resource waiter is transferred to that waiter atomically;
    /// nothing can seize it in between.
    pub fn release(&mut self, goal: &GoalRef) -> ReleaseResult {
        let mut result = ReleaseResult::default();
        let freed: Vec<Name> = self
            .holders
            .iter()
            .filter(|(_, h)| *h == goal)
            .map(|(r, _)| r.clone())
            .collect();
        for resource in freed {
            self.holders.remove(&resource);
            match self.promised.remove(&resource) {
                Some(waiter) => {
                    self.holders.insert(resource.clone(), waiter.clone());
                    result.handovers.push(Handover {
                        resource,
                        from: goal.clone(),
                        to: waiter,
                    });
                }
                None => result.released.push(resource),
            }
        }
        let waiting: Vec<Name> = self
            .promised
            .iter()
            .filter(|(_, w)| *w == goal)
            .map(|(r, _)| r.clone())
            .collect();
        for resource in waiting {
            self.promised.remove(&resource);
            result.released_promised.push(resource);
        }
        if !result.is_empty() {
            self.version += 1;
        }
        result
    }

    /// All held resources, including promised shadows, with their holders.
    pub fn holdings(&self) -> impl Iterator<Item = (Name, &GoalRef)> + '_ {
        self.holders
            .iter()
            .map(|(r, g)| (r.clone(), g))
            .chain(self.promised.iter().map(|(r, g)| (promised_resource(r), g)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::goals::GoalId;

    fn goal(agent: &str, id: &str) -> GoalRef {
        GoalRef { agent: Name::new(agent), goal: GoalId(Name::new(id)) }
    }

    fn names(items: &[&str]) -> BTreeSet<Name> {
        items.iter().map(|s| Name::new(s)).collect()
    }

    #[test]
    fn free_resource_is_granted() {
        let mut locks = LockAuthority::new();
        let g = goal("WALL-E", "StartMachine#0#0");
        let result = locks.request(&g, &names(&["M1"]), &BTreeSet::new());
        assert!(result.granted);
        assert_eq!(locks.holder(&Name::new("M1")), Some(&g));
    }

    #[test]
    fn held_resource_denies_non_promise_dependent_goal() {
        let mut locks = LockAuthority::new();
        let holder = goal("WALL-E", "StartMachine#0#0");
        locks.request(&holder, &names(&["M1"]), &BTreeSet::new());
        let requester = goal("R2D2", "StartMachine#0#0");
        let result = locks.request(&requester, &names(&["M1"]), &BTreeSet::new());
        assert!(!result.granted);
        assert_eq!(
            result.outcomes[0].1,
            ResourceOutcome::Denied { holder: holder.clone() }
        );
        // Nothing changed.
        assert_eq!(locks.holder(&Name::new("M1")), Some(&holder));
        assert_eq!(locks.promised_holder(&Name::new("M1")), None);
    }

    #[test]
    fn promise_dependent_goal_defers_on_its_promising_goal() {
        let mut locks = LockAuthority::new();
        let promising = goal("WALL-E", "StartMachine#0#0");
        locks.request(&promising, &names(&["M1"]), &BTreeSet::new());
        let dependent = goal("R2D2", "CleanMachine#0#0");
        let supporting: BTreeSet<_> = [promising.clone()].into();
        let result = locks.request(&dependent, &names(&["M1"]), &supporting);
        assert!(result.granted);
        assert_eq!(
            result.outcomes[0].1,
            ResourceOutcome::Deferred { promised: Name::new("promised-M1") }
        );
        assert_eq!(locks.promised_holder(&Name::new("M1")), Some(&dependent));
    }

    #[test]
    fn second_promise_dependent_goal_is_denied() {
        let mut locks = LockAuthority::new();
        let promising = goal("WALL-E", "StartMachine#0#0");
        locks.request(&promising, &names(&["M1"]), &BTreeSet::new());
        let supporting: BTreeSet<_> = [promising.clone()].into();
        let first = goal("R2D2", "CleanMachine#0#0");
        assert!(locks.request(&first, &names(&["M1"]), &supporting).granted);
        let second = goal("EVE", "CleanMachine#0#0");
        let result = locks.request(&second, &names(&["M1"]), &supporting);
        assert!(!result.granted);
        assert_eq!(result.outcomes[0].1, ResourceOutcome::Denied { holder: first.clone() });
    }

    #[test]
    fn release_hands_over_to_the_waiter() {
        let mut locks = LockAuthority::new();
        let promising = goal("WALL-E", "StartMachine#0#0");
        locks.request(&promising, &names(&["M1"]), &BTreeSet::new());
        let dependent = goal("R2D2", "CleanMachine#0#0");
        let supporting: BTreeSet<_> = [promising.clone()].into();
        locks.request(&dependent, &names(&["M1"]), &supporting);

        let result = locks.release(&promising);
        assert_eq!(result.handovers.len(), 1);
        assert_eq!(result.handovers[0].to, dependent);
        assert_eq!(locks.holder(&Name::new("M1")), Some(&dependent));
        assert_eq!(locks.promised_holder(&Name::new("M1")), None);
    }

    #[test]
    fn release_without_waiters_frees_the_resource() {
        let mut locks = LockAuthority::new();
        let g = goal("WALL-E", "StartMachine#0#0");
        locks.request(&g, &names(&["M1", "C1"]), &BTreeSet::new());
        let result = locks.release(&g);
        assert_eq!(result.released, vec![Name::new("C1"), Name::new("M1")]);
        assert!(result.handovers.is_empty());
        assert_eq!(locks.holder(&Name::new("M1")), None);
    }

    #[test]
    fn re_request_by_the_same_goal_is_idempotent() {
        let mut locks = LockAuthority::new();
        let g = goal("WALL-E", "StartMachine#0#0");
        locks.request(&g, &names(&["M1"]), &BTreeSet::new());
        let result = locks.request(&g, &names(&["M1"]), &BTreeSet::new());
        assert!(result.granted);
        assert_eq!(result.outcomes[0].1, ResourceOutcome::Granted);
    }

    #[test]
    fn denied_request_takes_nothing_even_partially() {
        let mut locks = LockAuthority::new();
        let holder = goal("WALL-E", "StartMachine#0#0");
        locks.request(&holder, &names(&["M1"]), &BTreeSet::new());
        let requester = goal("R2D2", "Deliver#0#0");
        let result = locks.request(&requester, &names(&["C1", "M1"]), &BTreeSet::new());
        assert!(!result.granted);
        assert_eq!(locks.holder(&Name::new("C1")), None);
    }

    #[test]
    fn defer_on_any_holder_widens_deferral_to_foreign_holders() {
        let mut locks = LockAuthority::with_defer_on_any_holder(true);
        let holder = goal("WALL-E", "StartMachine#0#0");
        locks.request(&holder, &names(&["M1"]), &BTreeSet::new());
        // The requester depends on promises, but not on the holder's.
        let other_promiser = goal("EVE", "Deliver#0#0");
        let dependent = goal("R2D2", "CleanMachine#0#0");
        let supporting: BTreeSet<_> = [other_promiser].into();
        let result = locks.request(&dependent, &names(&["M1"]), &supporting);
        assert!(result.granted);
        assert_eq!(
            result.outcomes[0].1,
            ResourceOutcome::Deferred { promised: Name::new("promised-M1") }
        );
        // Off by default: the same request is denied.
        let mut strict = LockAuthority::new();
        strict.request(&holder, &names(&["M1"]), &BTreeSet::new());
        let result = strict.request(&dependent, &names(&["M1"]), &supporting);
        assert!(!result.granted);
    }

    #[test]
    fn failed_waiter_release_frees_the_promised_resource() {
        let mut locks = LockAuthority::new();
        let promising = goal("WALL-E", "StartMachine#0#0");
        locks.request(&promising, &names(&["M1"]), &BTreeSet::new());
        let dependent = goal("R2D2", "CleanMachine#0#0");
        let supporting: BTreeSet<_> = [promising.clone()].into();
        locks.request(&dependent, &names(&["M1"]), &supporting);

        let result = locks.release(&dependent);
        assert_eq!(result.released_promised, vec![Name::new("M1")]);
        assert_eq!(locks.promised_holder(&Name::new("M1")), None);
        assert_eq!(locks.holder(&Name::new("M1")), Some(&promising));
    }
}
