//! Scenario files: a TOML description referencing a domain, a problem and a
//! goal-operator file, plus agents, action durations, monitoring and fault
//! configuration.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::executor::MonitorConfig;
use crate::goals::GoalOperator;
use crate::promises::FormulationMode;
use crate::pddl::{self, Domain, Problem};
use crate::planner::{PlannerConfig, SearchMode};
use crate::time::Tick;
use crate::world::{Literal, LiteralPattern, Name, ObjectTable, Term};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Toml { path: PathBuf, source: Box<toml::de::Error> },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: pddl::ParseError },
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct ScenarioFile {
    name: String,
    domain: String,
    problem: String,
    operators: String,
    agents: Vec<String>,
    agent_type: String,
    #[serde(default)]
    seed: u64,
    tick_bound: u64,
    #[serde(default = "default_true")]
    promises: bool,
    lookahead_override: Option<u64>,
    durations: BTreeMap<String, u64>,
    #[serde(default)]
    monitor: MonitorConfig,
    #[serde(default)]
    execution: ExecutionConfig,
    #[serde(default)]
    planner: PlannerFileConfig,
    #[serde(default)]
    coordination: CoordinationConfig,
    #[serde(default)]
    faults: Faults,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case", default, deny_unknown_fields)]
pub struct ExecutionConfig {
    /// Uniform +/- percentage applied to action durations at start, sampled
    /// from the seeded run RNG. Zero disables jitter.
    pub duration_jitter_pct: u64,
    /// Grace period before an unfulfilled promise counts as stale in the
    /// run statistics.
    pub grace_ticks: u64,
    /// World-model propagation delay in ticks (zero: updates are visible the
    /// same tick they are published).
    pub propagation_delay: u64,
    /// Optimistic formulation checks `From` only; pessimistic additionally
    /// requires `Until` to cover the lookahead window.
    pub formulation_mode: FormulationMode,
}

impl Default for ExecutionConfig {
    fn default() -> Self {
        ExecutionConfig {
            duration_jitter_pct: 0,
            grace_ticks: 1,
            propagation_delay: 0,
            formulation_mode: FormulationMode::Optimistic,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "kebab-case", default, deny_unknown_fields)]
struct PlannerFileConfig {
    mode: SearchMode,
    node_budget: usize,
    bound: u64,
}

impl Default for PlannerFileConfig {
    fn default() -> Self {
        let d = PlannerConfig::default();
        PlannerFileConfig { mode: SearchMode::Greedy, node_budget: d.node_budget, bound: d.bound.0 }
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "kebab-case", default, deny_unknown_fields)]
pub struct CoordinationConfig {
    pub defer_on_any_holder: bool,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "kebab-case", default, deny_unknown_fields)]
pub struct Faults {
    /// Actions that start but never complete (and so never release anything).
    pub stall: Vec<StallFault>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct StallFault {
    /// Restrict to one agent; any agent if omitted.
    pub agent: Option<String>,
    pub action: String,
}

impl Faults {
    pub fn stalls(&self, agent: &Name, action: &Name) -> bool {
        self.stall.iter().any(|f| {
            f.action == action.as_str()
                && f.agent.as_deref().is_none_or(|a| a == agent.as_str())
        })
    }
}

/// A fully loaded and cross-validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub domain: Domain,
    pub problem: Problem,
    pub operators: Vec<GoalOperator>,
    /// Problem objects merged with domain constants.
    pub objects: ObjectTable,
    pub agents: Vec<Name>,
    pub agent_type: Name,
    pub seed: u64,
    pub tick_bound: Tick,
    pub promises: bool,
    pub lookahead_override: Option<Tick>,
    pub monitor: MonitorConfig,
    pub execution: ExecutionConfig,
    pub planner: PlannerConfig,
    pub coordination: CoordinationConfig,
    pub faults: Faults,
}

/// Per-run overrides from the command line.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub promises: Option<bool>,
    pub lookahead: Option<u64>,
}

impl Scenario {
    pub fn with_options(&self, options: &RunOptions) -> Scenario {
        let mut s = self.clone();
        if let Some(seed) = options.seed {
            s.seed = seed;
        }
        if let Some(promises) = options.promises {
            s.promises = promises;
        }
        if let Some(lookahead) = options.lookahead {
            s.lookahead_override = Some(Tick(lookahead));
        }
        s
    }

    /// Promises are live unless disabled or the lookahead override is zero,
    /// which disables the machinery entirely.
    pub fn promises_active(&self) -> bool {
        self.promises && self.lookahead_override != Some(Tick::ZERO)
    }
}

/// Loads and cross-validates a scenario. Every referenced name must resolve:
/// durations cover all actions, agents are declared objects of the agent
/// type, operator literals match the domain signature.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let read = |p: &Path| -> Result<String, ScenarioError> {
        std::fs::read_to_string(p)
            .map_err(|source| ScenarioError::Io { path: p.to_path_buf(), source })
    };
    let text = read(path)?;
    let file: ScenarioFile = toml::from_str(&text)
        .map_err(|source| ScenarioError::Toml { path: path.to_path_buf(), source: Box::new(source) })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));

    let domain_path = base.join(&file.domain);
    let mut domain = pddl::parse_domain(&read(&domain_path)?)
        .map_err(|source| ScenarioError::Parse { path: domain_path.clone(), source })?;

    let invalid = |path: &Path, message: String| ScenarioError::Invalid {
        path: path.to_path_buf(),
        message,
    };

    // Action durations come from the scenario table; every action needs one.
    for schema in &mut domain.actions {
        match file.durations.get(schema.name.as_str()) {
            Some(&d) if d >= 1 => schema.duration = Tick(d),
            Some(_) => {
                return Err(invalid(
                    path,
                    format!("duration for action {} must be at least 1 tick", schema.name),
                ))
            }
            None => {
                return Err(invalid(
                    path,
                    format!("missing duration entry for action {}", schema.name),
                ))
            }
        }
    }
    for name in file.durations.keys() {
        if domain.action(&Name::new(name)).is_none() {
            return Err(invalid(path, format!("duration entry for unknown action {name}")));
        }
    }

    let problem_path = base.join(&file.problem);
    let problem = pddl::parse_problem(&read(&problem_path)?, &domain)
        .map_err(|source| ScenarioError::Parse { path: problem_path.clone(), source })?;
    if !problem.tils.is_empty() {
        return Err(invalid(
            &problem_path,
            "scenario problems must not contain TILs; timed facts enter runs as promises".into(),
        ));
    }

    let operators_path = base.join(&file.operators);
    let operators = pddl::parse_operators(&read(&operators_path)?)
        .map_err(|source| ScenarioError::Parse { path: operators_path.clone(), source })?;
    if operators.is_empty() {
        return Err(invalid(&operators_path, "no goal operators defined".into()));
    }

    let objects = domain.merged_objects(&problem.objects);
    let mut classes = BTreeSet::new();
    for op in &operators {
        if !classes.insert(op.class_name.clone()) {
            return Err(invalid(
                &operators_path,
                format!("duplicate goal operator class {}", op.class_name),
            ));
        }
        validate_operator(op, &domain, &objects)
            .map_err(|message| invalid(&operators_path, message))?;
    }

    let agent_type = Name::new(&file.agent_type);
    let mut agents: Vec<Name> = Vec::new();
    for agent in &file.agents {
        let name = Name::new(agent);
        match objects.type_of(&name) {
            Some(ty) if *ty == agent_type => agents.push(name),
            Some(ty) => {
                return Err(invalid(
                    path,
                    format!("agent {agent} has type {ty}, expected {agent_type}"),
                ))
            }
            None => return Err(invalid(path, format!("agent {agent} is not a declared object"))),
        }
    }
    agents.sort();
    agents.dedup();
    if agents.is_empty() {
        return Err(invalid(path, "scenario declares no agents".into()));
    }

    for fault in &file.faults.stall {
        if domain.action(&Name::new(&fault.action)).is_none() {
            return Err(invalid(path, format!("stall fault for unknown action {}", fault.action)));
        }
    }

    if file.tick_bound == 0 {
        return Err(invalid(path, "tick-bound must be positive".into()));
    }

    Ok(Scenario {
        name: file.name,
        domain,
        problem,
        operators,
        objects,
        agents,
        agent_type,
        seed: file.seed,
        tick_bound: Tick(file.tick_bound),
        promises: file.promises,
        lookahead_override: file.lookahead_override.map(Tick),
        monitor: file.monitor,
        execution: file.execution,
        planner: PlannerConfig {
            mode: file.planner.mode,
            node_budget: file.planner.node_budget,
            bound: Tick(file.planner.bound),
        },
        coordination: file.coordination,
        faults: file.faults,
    })
}

/// Checks one operator's literal patterns against the domain signature and
/// the object table: known predicates, matching arity, parameter and constant
/// types lining up with the predicate declaration.
fn validate_operator(
    op: &GoalOperator,
    domain: &Domain,
    objects: &ObjectTable,
) -> Result<(), String> {
    let params: BTreeMap<&Name, &Name> = op.params.iter().map(|(n, t)| (n, t)).collect();
    for (_, ty) in &op.params {
        if !domain.types.contains(ty) {
            return Err(format!("operator {}: unknown parameter type {ty}", op.class_name));
        }
    }
    let check_pattern = |pattern: &LiteralPattern, place: &str| -> Result<(), String> {
        let err = |msg: String| format!("operator {} {place}: {msg}", op.class_name);
        let expected = domain
            .signature
            .predicates
            .get(&pattern.atom.pred)
            .ok_or_else(|| err(format!("unknown predicate {}", pattern.atom.pred)))?;
        if expected.len() != pattern.atom.args.len() {
            return Err(err(format!(
                "predicate {} expects {} arguments, got {}",
                pattern.atom.pred,
                expected.len(),
                pattern.atom.args.len()
            )));
        }
        for (term, want) in pattern.atom.args.iter().zip(expected) {
            match term {
                Term::Var(v) => {
                    let got = params
                        .get(v)
                        .ok_or_else(|| err(format!("variable ?{v} is not a parameter")))?;
                    if *got != want {
                        return Err(err(format!(
                            "?{v} has type {got}, predicate {} wants {want}",
                            pattern.atom.pred
                        )));
                    }
                }
                Term::Const(c) => match objects.type_of(c) {
                    Some(got) if got == want => {}
                    Some(got) => {
                        return Err(err(format!(
                            "constant {c} has type {got}, predicate {} wants {want}",
                            pattern.atom.pred
                        )))
                    }
                    None => return Err(err(format!("unknown constant {c}"))),
                },
            }
        }
        Ok(())
    };
    for l in &op.precondition {
        check_pattern(l, "precondition")?;
    }
    for l in &op.objective {
        check_pattern(l, "objective")?;
    }
    for t in &op.promise_templates {
        check_pattern(&t.literal, "promises")?;
    }
    Ok(())
}

/// Objective literals in a convenient form.
pub fn scenario_objective(scenario: &Scenario) -> &[Literal] {
    &scenario.problem.objective
}
