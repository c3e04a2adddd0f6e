//! The deterministic per-tick event loop.
//!
//! Each tick: deliver due world updates, apply due action completions (which
//! publish effects, finish goals, retract promises and release locks), check
//! the run objective, then let every agent — in fixed lexicographic order —
//! either advance its dispatched goal or run one reasoning cycle
//! (formulate, select, expand, commit, dispatch).

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::time::{Duration, Instant};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::executor::{ExecSignal, ExecutionState};
use crate::goals::{
    ground_operator, select_goal, Goal, GoalCandidate, GoalEvent, GoalId, GoalMode, GoalRef,
    SelectionStrategy,
};
use crate::locks::{promised_resource, LockAuthority, ResourceOutcome};
use crate::planner::{self, GroundAction, PlanOutcome};
use crate::promises::{
    check_formulation, issue_promises, supporting_promises, to_tils, Promise,
};
use crate::time::Tick;
use crate::world::{satisfies, satisfies_all, Binding, Literal, Name, TimedState, WorldModel, WorldUpdate};

use super::event::{EventBody, EventRecord, RunOutcome};
use super::report::{PlannerStats, RunReport};
use super::scenario::Scenario;

/// Runs a scenario to completion and returns the report.
pub fn run(scenario: &Scenario) -> RunReport {
    Engine::new(scenario).run()
}

struct CompiledCandidate {
    cand: GoalCandidate,
    /// Precondition literals over fluent predicates; the static remainder was
    /// verified against the initial state at compile time.
    dynamic_pre: Vec<Literal>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Suppression {
    /// Re-try when the lock table changes.
    UntilLockChange(u64),
    /// Re-try when the agent's world model changes.
    UntilWorldChange(u64),
}

struct AgentCtx {
    id: Name,
    model: WorldModel,
    goals: BTreeMap<GoalId, Goal>,
    /// Non-terminal (class, binding) pairs, to avoid duplicate formulation.
    active: BTreeSet<(Name, Binding)>,
    exec: Option<ExecutionState>,
    dispatched: Option<GoalId>,
    counter: u64,
    out_seq: u64,
    suppressed: BTreeMap<(Name, Binding), Suppression>,
    candidates: Vec<CompiledCandidate>,
    /// Ground actions restricted to this agent, for planning.
    actions: Vec<GroundAction>,
}

struct TrackedPromise {
    promise: Promise,
    fulfilled: bool,
    stale: bool,
}

struct Engine<'s> {
    scenario: &'s Scenario,
    promises_active: bool,
    clock: Tick,
    agents: Vec<AgentCtx>,
    locks: LockAuthority,
    /// Ground-truth replica used for the objective check and statistics.
    monitor: WorldModel,
    events: Vec<EventRecord>,
    seq: u64,
    rng: ChaCha8Rng,
    pending_updates: VecDeque<(Tick, WorldUpdate)>,
    planner_calls: u64,
    planner_max: Duration,
    tracked: Vec<TrackedPromise>,
    used_promises: BTreeSet<Promise>,
    /// Set when a promise-dependent goal was formulated this tick; the
    /// acyclicity check only needs to run then (edges are only ever added at
    /// formulation).
    recheck_cycles: bool,
}

impl<'s> Engine<'s> {
    fn new(scenario: &'s Scenario) -> Self {
        let init_state = TimedState::new(scenario.problem.init.iter().cloned(), Tick::ZERO);

        // Predicates promises may flip are fluent for grounding purposes.
        let mut promise_preds: BTreeSet<Name> = BTreeSet::new();
        for op in &scenario.operators {
            for t in &op.promise_templates {
                promise_preds.insert(t.literal.atom.pred.clone());
            }
        }
        let all_actions = crate::pddl::ground_actions(
            &scenario.domain,
            &scenario.objects,
            &scenario.problem.init,
            &promise_preds,
        );
        let mut fluent_preds = promise_preds;
        for schema in &scenario.domain.actions {
            for atom in schema.adds.iter().chain(&schema.dels) {
                fluent_preds.insert(atom.pred.clone());
            }
        }

        let agents = scenario
            .agents
            .iter()
            .map(|id| AgentCtx {
                id: id.clone(),
                model: WorldModel::new(init_state.clone()),
                goals: BTreeMap::new(),
                active: BTreeSet::new(),
                exec: None,
                dispatched: None,
                counter: 0,
                out_seq: 1,
                suppressed: BTreeMap::new(),
                candidates: compile_candidates(scenario, id, &fluent_preds),
                actions: restrict_actions(scenario, &all_actions, id),
            })
            .collect();

        Engine {
            scenario,
            promises_active: scenario.promises_active(),
            clock: Tick::ZERO,
            agents,
            locks: LockAuthority::with_defer_on_any_holder(
                scenario.coordination.defer_on_any_holder,
            ),
            monitor: WorldModel::new(init_state),
            events: Vec::new(),
            seq: 0,
            rng: ChaCha8Rng::seed_from_u64(scenario.seed),
            pending_updates: VecDeque::new(),
            planner_calls: 0,
            planner_max: Duration::ZERO,
            tracked: Vec::new(),
            used_promises: BTreeSet::new(),
            recheck_cycles: false,
        }
    }

    fn run(mut self) -> RunReport {
        // The header records the effective mode: a zero lookahead override
        // disables the promise machinery outright.
        let lookahead = if self.promises_active {
            self.scenario.lookahead_override.map(|t| t.0)
        } else {
            None
        };
        self.log(
            None,
            EventBody::RunStart {
                scenario: self.scenario.name.clone(),
                seed: self.scenario.seed,
                promises: self.promises_active,
                lookahead,
            },
        );

        let objective = self.scenario.problem.objective.clone();
        let outcome = loop {
            if self.clock > self.scenario.tick_bound {
                break RunOutcome::TickBound;
            }
            let now = self.clock;
            for agent in &mut self.agents {
                agent.model.advance_clock(now);
            }
            self.monitor.advance_clock(now);

            self.deliver_due();
            for ai in 0..self.agents.len() {
                self.process_completion(ai);
            }
            self.track_promises();

            if satisfies_all(&self.monitor.state().atoms, &objective) {
                self.log(None, EventBody::ObjectiveSatisfied { makespan: now.0 });
                break RunOutcome::Objective;
            }

            for ai in 0..self.agents.len() {
                // Idle agents reason; a dispatch starts executing this tick.
                let executing =
                    self.agents[ai].dispatched.is_some() || self.reasoning_cycle(ai);
                if executing {
                    self.executor_tick(ai);
                }
            }

            self.check_invariants();
            self.recheck_cycles = false;
            self.clock += Tick(1);
        };

        self.log(None, EventBody::RunEnd { ticks: self.clock.0, outcome });
        let planner = PlannerStats {
            calls: self.planner_calls,
            max_ms: self.planner_max.as_secs_f64() * 1000.0,
        };
        RunReport::from_events(self.events, Some(planner))
    }

    // ---- logging and world-model plumbing ----------------------------------

    fn log(&mut self, agent: Option<Name>, body: EventBody) {
        self.events.push(EventRecord { time: self.clock.0, seq: self.seq, agent, body });
        self.seq += 1;
    }

    fn publish(&mut self, update: WorldUpdate) {
        self.log(
            Some(update.origin.clone()),
            EventBody::WorldUpdate {
                update_seq: update.seq,
                adds: update.adds.iter().map(|a| a.to_string()).collect(),
                dels: update.dels.iter().map(|a| a.to_string()).collect(),
                promises: update.promises.iter().map(|p| p.to_string()).collect(),
                retracts: update.retracts.iter().map(|r| format!("retract {r}")).collect(),
            },
        );
        let delay = Tick(self.scenario.execution.propagation_delay);
        if delay == Tick::ZERO {
            self.deliver(update);
        } else {
            self.pending_updates.push_back((self.clock + delay, update));
        }
    }

    fn deliver_due(&mut self) {
        while let Some((due, _)) = self.pending_updates.front() {
            if *due > self.clock {
                break;
            }
            let (_, update) = self.pending_updates.pop_front().expect("front checked");
            self.deliver(update);
        }
    }

    fn deliver(&mut self, update: WorldUpdate) {
        let mut warnings = Vec::new();
        for agent in &mut self.agents {
            for event in agent.model.apply(update.clone()) {
                if let crate::world::WmEvent::DuplicateIgnored { origin, seq } = event {
                    warnings.push(format!(
                        "{}: duplicate update ({origin}, {seq}) ignored",
                        agent.id
                    ));
                }
            }
        }
        self.monitor.apply(update);
        for message in warnings {
            self.log(None, EventBody::Warning { message });
        }
    }

    fn next_update(&mut self, ai: usize) -> (Name, u64) {
        let agent = &mut self.agents[ai];
        let seq = agent.out_seq;
        agent.out_seq += 1;
        (agent.id.clone(), seq)
    }

    // ---- completions --------------------------------------------------------

    fn process_completion(&mut self, ai: usize) {
        let now = self.clock;
        let Some(goal_id) = self.agents[ai].dispatched.clone() else { return };
        let Some(index) = self.agents[ai].exec.as_ref().and_then(|e| e.due_completion(now)) else {
            return;
        };
        let agent_id = self.agents[ai].id.clone();
        let (action, finished) = {
            let agent = &mut self.agents[ai];
            let goal = agent.goals.get(&goal_id).expect("dispatched goal exists");
            let plan = goal.plan.as_ref().expect("dispatched goals have plans").clone();
            let exec = agent.exec.as_mut().expect("dispatched goals are executing");
            let action = plan.steps[index].action.clone();
            let finished = exec.complete_action(&plan);
            (action, finished)
        };
        self.log(
            Some(agent_id.clone()),
            EventBody::ActionDone { goal: goal_id.clone(), index, action: action.label() },
        );
        let (origin, seq) = self.next_update(ai);
        let update = WorldUpdate::new(origin, seq, action.adds.clone(), action.dels.clone())
            .expect("ground action effects are disjoint");
        self.publish(update);
        if finished {
            self.terminate_goal(ai, &goal_id, GoalEvent::Finish, None);
        }
    }

    // ---- goal termination ----------------------------------------------------

    fn terminate_goal(&mut self, ai: usize, goal_id: &GoalId, event: GoalEvent, reason: Option<String>) {
        let now = self.clock;
        let agent_id = self.agents[ai].id.clone();
        let issued_promises = {
            let agent = &mut self.agents[ai];
            let goal = agent.goals.get_mut(goal_id).expect("terminating a known goal");
            goal.apply(event, now).expect("finish/fail from dispatched is legal");
            agent.active.remove(&(goal.class.clone(), goal.binding.clone()));
            agent.dispatched = None;
            agent.exec = None;
            self.promises_active && !goal.promises.is_empty()
        };
        match event {
            GoalEvent::Finish => {
                self.log(Some(agent_id.clone()), EventBody::GoalFinished { goal: goal_id.clone() })
            }
            GoalEvent::Fail => self.log(
                Some(agent_id.clone()),
                EventBody::GoalFailed {
                    goal: goal_id.clone(),
                    reason: reason.unwrap_or_else(|| "action failure".into()),
                },
            ),
            _ => unreachable!("terminate_goal only finishes or fails"),
        }

        let gref = GoalRef { agent: agent_id.clone(), goal: goal_id.clone() };
        if issued_promises {
            self.log(Some(agent_id.clone()), EventBody::PromiseRetracted { goal: goal_id.clone() });
            let (origin, seq) = self.next_update(ai);
            let mut update = WorldUpdate::new(origin, seq, BTreeSet::new(), BTreeSet::new())
                .expect("empty update is disjoint");
            update.retracts.push(gref.clone());
            self.publish(update);
        }

        let release = self.locks.release(&gref);
        for resource in &release.released {
            self.log(
                Some(agent_id.clone()),
                EventBody::LockReleased { resource: resource.clone(), goal: goal_id.clone() },
            );
        }
        for handover in &release.handovers {
            self.log(
                Some(handover.from.agent.clone()),
                EventBody::LockReleased {
                    resource: handover.resource.clone(),
                    goal: handover.from.goal.clone(),
                },
            );
            self.log(
                Some(handover.to.agent.clone()),
                EventBody::LockHandover {
                    resource: handover.resource.clone(),
                    from: handover.from.to_string(),
                    to: handover.to.to_string(),
                },
            );
            self.log(
                Some(handover.to.agent.clone()),
                EventBody::LockReleased {
                    resource: promised_resource(&handover.resource),
                    goal: handover.to.goal.clone(),
                },
            );
            // The waiter now holds the real resource.
            if let Some(waiter) = self.agents.iter_mut().find(|a| a.id == handover.to.agent) {
                if let Some(goal) = waiter.goals.get_mut(&handover.to.goal) {
                    goal.acquired_resources.remove(&promised_resource(&handover.resource));
                    goal.acquired_resources.insert(handover.resource.clone());
                }
            }
        }
        for resource in &release.released_promised {
            self.log(
                Some(agent_id.clone()),
                EventBody::LockReleased {
                    resource: promised_resource(resource),
                    goal: goal_id.clone(),
                },
            );
        }
    }

    // ---- executor ------------------------------------------------------------

    fn executor_tick(&mut self, ai: usize) {
        let now = self.clock;
        let Some(goal_id) = self.agents[ai].dispatched.clone() else { return };
        let agent_id = self.agents[ai].id.clone();
        let signals = {
            let scenario = self.scenario;
            let rng = &mut self.rng;
            let agent = &mut self.agents[ai];
            let goal = agent.goals.get(&goal_id).expect("dispatched goal exists");
            let plan = goal.plan.as_ref().expect("dispatched goals have plans");
            let exec = agent.exec.as_mut().expect("dispatched goals are executing");
            let jitter = scenario.execution.duration_jitter_pct;
            let id = &agent.id;
            exec.tick(
                plan,
                &agent.model.state().atoms,
                &scenario.monitor,
                goal.promise_dependent,
                now,
                |action| {
                    if scenario.faults.stalls(id, &action.name) {
                        return None;
                    }
                    let base = action.duration.0;
                    let spread = base * jitter / 100;
                    let jittered = if spread == 0 {
                        base
                    } else {
                        base - spread + rng.gen_range(0..=2 * spread)
                    };
                    Some(Tick(jittered.max(1)))
                },
            )
        };

        for signal in signals {
            let action_label = |agent: &AgentCtx, index: usize| {
                agent.goals[&goal_id].plan.as_ref().expect("plan exists").steps[index]
                    .action
                    .label()
            };
            match signal {
                ExecSignal::ActionStarted { index, .. } => {
                    let action = action_label(&self.agents[ai], index);
                    self.log(
                        Some(agent_id.clone()),
                        EventBody::ActionStart { goal: goal_id.clone(), index, action },
                    );
                }
                ExecSignal::ActionPending { index } => {
                    let action = action_label(&self.agents[ai], index);
                    self.log(
                        Some(agent_id.clone()),
                        EventBody::ActionPending { goal: goal_id.clone(), index, action },
                    );
                }
                ExecSignal::ActionTimeout { index, fatal } => {
                    let action = action_label(&self.agents[ai], index);
                    self.log(
                        Some(agent_id.clone()),
                        EventBody::ActionTimeout { goal: goal_id.clone(), index, action },
                    );
                    if fatal {
                        self.terminate_goal(
                            ai,
                            &goal_id,
                            GoalEvent::Fail,
                            Some("pending timeout".into()),
                        );
                        return;
                    }
                }
                ExecSignal::GoalComplete => {
                    self.terminate_goal(ai, &goal_id, GoalEvent::Finish, None);
                    return;
                }
            }
        }
    }

    // ---- reasoning cycle -------------------------------------------------------

    /// One formulate/select/expand/commit/dispatch pass. Returns true if a
    /// goal was dispatched.
    fn reasoning_cycle(&mut self, ai: usize) -> bool {
        let now = self.clock;
        let agent_id = self.agents[ai].id.clone();

        self.revalidate_formulated(ai);
        self.formulate(ai);

        let selected = {
            let agent = &self.agents[ai];
            select_goal(
                agent.goals.values().filter(|g| g.mode == GoalMode::Formulated),
                &SelectionStrategy,
            )
            .map(|g| g.id.clone())
        };
        let Some(goal_id) = selected else { return false };
        self.apply_goal_event(ai, &goal_id, GoalEvent::Select);
        self.log(Some(agent_id.clone()), EventBody::GoalSelected { goal: goal_id.clone() });

        // Expand: plan with promise TILs.
        let (outcome, elapsed) = {
            let agent = &self.agents[ai];
            let goal = &agent.goals[&goal_id];
            let tils = if self.promises_active {
                to_tils(agent.model.promises(), now, &agent.id)
            } else {
                Vec::new()
            };
            let started = Instant::now();
            let outcome = planner::plan(
                &agent.actions,
                &agent.model.state().atoms,
                &goal.objective,
                &tils,
                &self.scenario.planner,
            );
            (outcome, started.elapsed())
        };
        self.planner_calls += 1;
        self.planner_max = self.planner_max.max(elapsed);

        let plan = match outcome {
            PlanOutcome::Solved(plan) => plan,
            PlanOutcome::Unsolvable | PlanOutcome::ResourceLimit => {
                let reason = if matches!(outcome, PlanOutcome::Unsolvable) {
                    "no plan within bounds"
                } else {
                    "planner node budget exceeded"
                };
                self.reject_goal(ai, &goal_id, reason, false);
                return false;
            }
        };
        {
            let agent = &mut self.agents[ai];
            let goal = agent.goals.get_mut(&goal_id).expect("selected goal exists");
            let lines: Vec<String> = plan
                .steps
                .iter()
                .map(|s| format!("{} {} {}", s.start, s.action.duration, s.action.label()))
                .collect();
            let makespan = plan.makespan().0;
            goal.plan = Some(plan);
            goal.apply(GoalEvent::Expand, now).expect("selected goals expand");
            self.log(
                Some(agent_id.clone()),
                EventBody::GoalExpanded { goal: goal_id.clone(), plan: lines, makespan },
            );
        }

        self.apply_goal_event(ai, &goal_id, GoalEvent::Commit);
        self.log(Some(agent_id.clone()), EventBody::GoalCommitted { goal: goal_id.clone() });

        // Acquire resources.
        let gref = GoalRef { agent: agent_id.clone(), goal: goal_id.clone() };
        let (resources, supporting) = {
            let goal = &self.agents[ai].goals[&goal_id];
            (goal.resources.clone(), goal.supporting.clone())
        };
        let result = self.locks.request(&gref, &resources, &supporting);
        if !result.granted {
            for (resource, outcome) in &result.outcomes {
                if let ResourceOutcome::Denied { holder } = outcome {
                    self.log(
                        Some(agent_id.clone()),
                        EventBody::LockDenied {
                            resource: resource.clone(),
                            goal: goal_id.clone(),
                            holder: holder.to_string(),
                        },
                    );
                }
            }
            self.reject_goal(ai, &goal_id, "resource denied", true);
            return false;
        }
        let mut acquired = BTreeSet::new();
        for (resource, outcome) in &result.outcomes {
            match outcome {
                ResourceOutcome::Granted => {
                    acquired.insert(resource.clone());
                    self.log(
                        Some(agent_id.clone()),
                        EventBody::LockGranted { resource: resource.clone(), goal: goal_id.clone() },
                    );
                }
                ResourceOutcome::Deferred { promised } => {
                    acquired.insert(promised.clone());
                    self.log(
                        Some(agent_id.clone()),
                        EventBody::LockDeferred {
                            resource: resource.clone(),
                            promised: promised.clone(),
                            goal: goal_id.clone(),
                        },
                    );
                }
                ResourceOutcome::Denied { .. } => unreachable!("request granted"),
            }
        }

        // Dispatch and announce promises.
        self.apply_goal_event(ai, &goal_id, GoalEvent::Dispatch);
        self.log(Some(agent_id.clone()), EventBody::GoalDispatched { goal: goal_id.clone() });
        {
            let agent = &mut self.agents[ai];
            let goal = agent.goals.get_mut(&goal_id).expect("dispatched goal exists");
            goal.acquired_resources = acquired;
            agent.dispatched = Some(goal_id.clone());
            agent.exec = Some(ExecutionState::new(goal_id.clone()));
        }
        if self.promises_active {
            let issued = {
                let agent = &self.agents[ai];
                issue_promises(&agent.goals[&goal_id], &agent.id, now)
            };
            if !issued.is_empty() {
                for promise in &issued {
                    self.log(
                        Some(agent_id.clone()),
                        EventBody::PromiseIssued {
                            goal: goal_id.clone(),
                            promise: promise.to_string(),
                        },
                    );
                    self.tracked.push(TrackedPromise {
                        promise: promise.clone(),
                        fulfilled: false,
                        stale: false,
                    });
                }
                let (origin, seq) = self.next_update(ai);
                let mut update =
                    WorldUpdate::new(origin, seq, BTreeSet::new(), BTreeSet::new())
                        .expect("empty update is disjoint");
                update.promises = issued;
                self.publish(update);
            }
        }
        true
    }

    fn reject_goal(&mut self, ai: usize, goal_id: &GoalId, reason: &str, lock_related: bool) {
        let agent_id = self.agents[ai].id.clone();
        let suppression = if lock_related {
            Suppression::UntilLockChange(self.locks.version())
        } else {
            Suppression::UntilWorldChange(self.agents[ai].model.version())
        };
        let agent = &mut self.agents[ai];
        let goal = agent.goals.get_mut(goal_id).expect("rejecting a known goal");
        goal.apply(GoalEvent::Reject, self.clock).expect("pre-dispatch goals can reject");
        let key = (goal.class.clone(), goal.binding.clone());
        agent.active.remove(&key);
        agent.suppressed.insert(key, suppression);
        self.log(
            Some(agent_id),
            EventBody::GoalRejected { goal: goal_id.clone(), reason: reason.into() },
        );
    }

    fn apply_goal_event(&mut self, ai: usize, goal_id: &GoalId, event: GoalEvent) {
        let now = self.clock;
        self.agents[ai]
            .goals
            .get_mut(goal_id)
            .expect("goal exists")
            .apply(event, now)
            .expect("engine only drives legal transitions");
    }

    /// Retracts formulated goals whose (possibly promise-extended)
    /// precondition no longer passes.
    fn revalidate_formulated(&mut self, ai: usize) {
        let now = self.clock;
        let agent_id = self.agents[ai].id.clone();
        let stale: Vec<GoalId> = {
            let agent = &self.agents[ai];
            let atoms = &agent.model.state().atoms;
            agent
                .goals
                .values()
                .filter(|g| g.mode == GoalMode::Formulated)
                .filter(|g| {
                    let plain = satisfies_all(atoms, &g.precondition);
                    let promised = self.promises_active
                        && self.lookahead_for(g.lookahead) > Tick::ZERO
                        && check_formulation(
                            &g.precondition,
                            atoms,
                            now,
                            agent.model.promises(),
                            Some(&agent.id),
                            self.lookahead_for(g.lookahead),
                            self.scenario.execution.formulation_mode,
                        );
                    !(plain || promised)
                })
                .map(|g| g.id.clone())
                .collect()
        };
        for goal_id in stale {
            let agent = &mut self.agents[ai];
            let goal = agent.goals.get_mut(&goal_id).expect("goal exists");
            goal.apply(GoalEvent::Retract, now).expect("formulated goals can retract");
            agent.active.remove(&(goal.class.clone(), goal.binding.clone()));
            self.log(Some(agent_id.clone()), EventBody::GoalRetracted { goal: goal_id });
        }
    }

    fn formulate(&mut self, ai: usize) {
        let now = self.clock;
        let agent_id = self.agents[ai].id.clone();
        for ci in 0..self.agents[ai].candidates.len() {
            enum Decision {
                Skip,
                Plain,
                Promised(Vec<Promise>),
            }
            let decision = {
                let agent = &self.agents[ai];
                let cc = &agent.candidates[ci];
                let key = (cc.cand.class.clone(), cc.cand.binding.clone());
                if agent.active.contains(&key) {
                    continue;
                }
                if let Some(suppression) = agent.suppressed.get(&key) {
                    let lifted = match suppression {
                        Suppression::UntilLockChange(v) => self.locks.version() != *v,
                        Suppression::UntilWorldChange(v) => agent.model.version() != *v,
                    };
                    if !lifted {
                        continue;
                    }
                }
                let atoms = &agent.model.state().atoms;
                if satisfies_all(atoms, &cc.dynamic_pre) {
                    Decision::Plain
                } else if self.promises_active {
                    let lookahead = self.lookahead_for(cc.cand.lookahead);
                    if lookahead > Tick::ZERO
                        && check_formulation(
                            &cc.dynamic_pre,
                            atoms,
                            now,
                            agent.model.promises(),
                            Some(&agent.id),
                            lookahead,
                            self.scenario.execution.formulation_mode,
                        )
                    {
                        Decision::Promised(supporting_promises(
                            &cc.dynamic_pre,
                            atoms,
                            now,
                            agent.model.promises(),
                            Some(&agent.id),
                        ))
                    } else {
                        Decision::Skip
                    }
                } else {
                    Decision::Skip
                }
            };

            let (promise_dependent, support) = match decision {
                Decision::Skip => {
                    // A lifted suppression with a still-false precondition
                    // clears; the candidate is evaluated normally again.
                    let agent = &mut self.agents[ai];
                    let key = (
                        agent.candidates[ci].cand.class.clone(),
                        agent.candidates[ci].cand.binding.clone(),
                    );
                    agent.suppressed.remove(&key);
                    continue;
                }
                Decision::Plain => (false, Vec::new()),
                Decision::Promised(support) => (true, support),
            };

            self.used_promises.extend(support.iter().cloned());
            if promise_dependent {
                self.recheck_cycles = true;
            }
            let supporting: BTreeSet<GoalRef> = support.iter().map(Promise::issuer).collect();
            let agent = &mut self.agents[ai];
            let cc = &agent.candidates[ci];
            let key = (cc.cand.class.clone(), cc.cand.binding.clone());
            agent.suppressed.remove(&key);
            let goal = Goal::formulate(&cc.cand, agent.counter, now, promise_dependent, supporting);
            agent.counter += 1;
            let body = EventBody::GoalFormulated {
                goal: goal.id.clone(),
                class: goal.class.clone(),
                binding: goal.binding.clone(),
                promise_dependent,
                supporting: support.iter().map(|p| p.to_string()).collect(),
            };
            agent.active.insert(key);
            agent.goals.insert(goal.id.clone(), goal);
            self.log(Some(agent_id.clone()), body);
        }
    }

    fn lookahead_for(&self, operator_lookahead: Tick) -> Tick {
        self.scenario.lookahead_override.unwrap_or(operator_lookahead)
    }

    // ---- statistics and invariants ----------------------------------------------

    /// Latches fulfilled/stale flags on issued promises for the run report.
    fn track_promises(&mut self) {
        let now = self.clock;
        let grace = Tick(self.scenario.execution.grace_ticks);
        let atoms = &self.monitor.state().atoms;
        let mut newly_stale = Vec::new();
        for tracked in &mut self.tracked {
            if tracked.fulfilled || tracked.stale {
                continue;
            }
            if satisfies(atoms, &tracked.promise.literal) && now <= tracked.promise.at + grace {
                tracked.fulfilled = true;
            } else if now > tracked.promise.at + grace {
                tracked.stale = true;
                newly_stale.push(tracked.promise.clone());
            }
        }
        for promise in newly_stale {
            self.log(
                Some(promise.agent.clone()),
                EventBody::PromiseStale { goal: promise.goal.clone(), promise: promise.to_string() },
            );
        }
    }

    /// Structural invariants checked every tick. Violations are engine bugs.
    fn check_invariants(&self) {
        if self.scenario.execution.propagation_delay == 0 {
            // Versions match every tick; the atom sets are deep-compared
            // periodically to keep the loop cheap.
            let deep = self.clock.0.is_multiple_of(64);
            for agent in &self.agents {
                assert_eq!(
                    agent.model.version(),
                    self.monitor.version(),
                    "replica of {} missed updates at {}",
                    agent.id,
                    self.clock
                );
                if deep {
                    assert_eq!(
                        agent.model.state().atoms,
                        self.monitor.state().atoms,
                        "world-model replica of {} diverged at {}",
                        agent.id,
                        self.clock
                    );
                }
            }
        }

        // The promise wait-for graph is acyclic: promise-dependent goals may
        // only depend on goals dispatched strictly earlier. Edges appear only
        // when such a goal is formulated.
        if !self.recheck_cycles {
            self.check_promise_store();
            return;
        }
        let mut edges: BTreeMap<GoalRef, BTreeSet<GoalRef>> = BTreeMap::new();
        for agent in &self.agents {
            for goal in agent.goals.values() {
                if goal.mode.is_terminal() || goal.supporting.is_empty() {
                    continue;
                }
                let from = GoalRef { agent: agent.id.clone(), goal: goal.id.clone() };
                edges.insert(from, goal.supporting.clone());
            }
        }
        let mut visiting = BTreeSet::new();
        let mut done = BTreeSet::new();
        fn dfs(
            node: &GoalRef,
            edges: &BTreeMap<GoalRef, BTreeSet<GoalRef>>,
            visiting: &mut BTreeSet<GoalRef>,
            done: &mut BTreeSet<GoalRef>,
        ) {
            if done.contains(node) {
                return;
            }
            assert!(visiting.insert(node.clone()), "promise cycle through {node}");
            if let Some(next) = edges.get(node) {
                for n in next {
                    dfs(n, edges, visiting, done);
                }
            }
            visiting.remove(node);
            done.insert(node.clone());
        }
        let nodes: Vec<GoalRef> = edges.keys().cloned().collect();
        for node in &nodes {
            dfs(node, &edges, &mut visiting, &mut done);
        }
        self.check_promise_store();
    }

    /// Active promises belong to dispatched goals only. With a propagation
    /// delay retractions are legitimately in flight, so the check applies to
    /// the zero-latency configuration.
    fn check_promise_store(&self) {
        if self.scenario.execution.propagation_delay != 0 {
            return;
        }
        for promise in self.monitor.promises().iter() {
            let agent = self
                .agents
                .iter()
                .find(|a| a.id == promise.agent)
                .unwrap_or_else(|| panic!("promise from unknown agent {}", promise.agent));
            let mode = agent
                .goals
                .get(&promise.goal)
                .map(|g| g.mode)
                .unwrap_or_else(|| panic!("promise from unknown goal {}", promise.goal));
            assert_eq!(
                mode,
                GoalMode::Dispatched,
                "promise {promise} outlives its goal at {}",
                self.clock
            );
        }
    }
}

/// Compiles an agent's goal candidates: operator groundings restricted to the
/// agent itself for agent-typed parameters, with statically false candidates
/// dropped and static precondition literals stripped.
fn compile_candidates(
    scenario: &Scenario,
    agent: &Name,
    fluent_preds: &BTreeSet<Name>,
) -> Vec<CompiledCandidate> {
    let mut out = Vec::new();
    for op in &scenario.operators {
        let candidates = ground_operator(op, &scenario.objects)
            .expect("scenario validation grounds all operators");
        'candidate: for cand in candidates {
            for (param, ty) in &op.params {
                if *ty == scenario.agent_type && cand.binding[param] != *agent {
                    continue 'candidate;
                }
            }
            let mut dynamic_pre = Vec::new();
            for literal in &cand.precondition {
                if fluent_preds.contains(&literal.atom.pred) {
                    dynamic_pre.push(literal.clone());
                } else if !satisfies(&scenario.problem.init, literal) {
                    continue 'candidate;
                }
            }
            out.push(CompiledCandidate { cand, dynamic_pre });
        }
    }
    out
}

/// Keeps only ground actions this agent can perform itself: every argument
/// of the agent type must be the agent.
fn restrict_actions(
    scenario: &Scenario,
    all_actions: &[GroundAction],
    agent: &Name,
) -> Vec<GroundAction> {
    all_actions
        .iter()
        .filter(|action| {
            action.args.iter().all(|arg| {
                scenario.objects.type_of(arg) != Some(&scenario.agent_type) || arg == agent
            })
        })
        .cloned()
        .collect()
}
