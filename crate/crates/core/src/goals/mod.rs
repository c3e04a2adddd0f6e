//! Goal operators, grounding into goal instances, and the goal lifecycle.

mod lifecycle;
mod select;

pub use lifecycle::{GoalEvent, GoalMode, TransitionError};
pub use select::{select_goal, SelectionStrategy};

use std::collections::BTreeSet;
use std::fmt;

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::planner::Plan;
use crate::time::Tick;
use crate::world::{Binding, LiteralPattern, Literal, Name, ObjectTable, PatternError, Term};

/// Goal identifier, unique per agent: `<class>#<binding-hash>#<counter>`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GoalId(pub Name);

impl GoalId {
    pub fn new(class: &Name, binding: &Binding, counter: u64) -> Self {
        let mut hasher = Sha256::new();
        for (param, value) in binding {
            hasher.update(param.as_str().as_bytes());
            hasher.update(b"=");
            hasher.update(value.as_str().as_bytes());
            hasher.update(b";");
        }
        let digest = hasher.finalize();
        let hash: String = digest[..4].iter().map(|b| format!("{b:02x}")).collect();
        GoalId(Name::from(format!("{class}#{hash}#{counter}")))
    }
}

impl fmt::Display for GoalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Globally unique goal reference: `<agent>/<goal-id>`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GoalRef {
    pub agent: Name,
    pub goal: GoalId,
}

impl fmt::Display for GoalRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.agent, self.goal)
    }
}

impl GoalRef {
    pub fn parse(s: &str) -> Option<GoalRef> {
        let (agent, goal) = s.split_once('/')?;
        if agent.is_empty() || goal.is_empty() {
            return None;
        }
        Some(GoalRef { agent: Name::new(agent), goal: GoalId(Name::new(goal)) })
    }
}

/// A promised literal pattern plus the offset from dispatch time at which it
/// is promised to hold. `None` falls back to the operator's `est_duration`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromiseTemplate {
    pub literal: LiteralPattern,
    pub offset: Option<Tick>,
}

#[derive(Debug, thiserror::Error)]
pub enum OperatorError {
    #[error("operator {class}: variable ?{var} in {place} is not a parameter")]
    UnboundVariable { class: Name, var: Name, place: &'static str },
    #[error("operator {class}: param-quantified must be empty (unsupported feature)")]
    QuantifiedUnsupported { class: Name },
    #[error("operator {class}: duplicate parameter {param}")]
    DuplicateParam { class: Name, param: Name },
}

/// A parameterized objective schema; ground instances are goals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoalOperator {
    pub class_name: Name,
    /// Parameter names and their types, in declaration order.
    pub params: Vec<(Name, Name)>,
    pub lookahead: Tick,
    pub precondition: Vec<LiteralPattern>,
    pub objective: Vec<LiteralPattern>,
    pub promise_templates: Vec<PromiseTemplate>,
    pub est_duration: Tick,
    pub required_resources: Vec<Term>,
    pub priority: i64,
}

impl GoalOperator {
    /// Every variable appearing in the precondition, objective, promise
    /// templates or resources must be a declared parameter.
    pub fn validate(&self) -> Result<(), OperatorError> {
        let mut seen = BTreeSet::new();
        for (p, _) in &self.params {
            if !seen.insert(p.clone()) {
                return Err(OperatorError::DuplicateParam {
                    class: self.class_name.clone(),
                    param: p.clone(),
                });
            }
        }
        let check = |vars: &mut dyn Iterator<Item = &Name>,
                     place: &'static str|
         -> Result<(), OperatorError> {
            for v in vars {
                if !seen.contains(v) {
                    return Err(OperatorError::UnboundVariable {
                        class: self.class_name.clone(),
                        var: v.clone(),
                        place,
                    });
                }
            }
            Ok(())
        };
        check(&mut self.precondition.iter().flat_map(|l| l.variables()), "preconditions")?;
        check(&mut self.objective.iter().flat_map(|l| l.variables()), "objective")?;
        check(
            &mut self.promise_templates.iter().flat_map(|t| t.literal.variables()),
            "promises",
        )?;
        check(&mut self.required_resources.iter().filter_map(Term::as_var), "resources")?;
        Ok(())
    }

    pub fn promise_offset(&self, template: &PromiseTemplate) -> Tick {
        template.offset.unwrap_or(self.est_duration)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GroundingError {
    #[error("operator {class}: unknown parameter type {ty}")]
    UnknownType { class: Name, ty: Name },
    #[error(transparent)]
    Pattern(#[from] PatternError),
}

/// A fully ground instance of an operator, not yet formulated as a goal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoalCandidate {
    pub class: Name,
    pub binding: Binding,
    pub precondition: Vec<Literal>,
    pub objective: Vec<Literal>,
    /// Ground promise literals with their offsets from dispatch time.
    pub promises: Vec<(Literal, Tick)>,
    pub resources: BTreeSet<Name>,
    pub priority: i64,
    pub lookahead: Tick,
    pub est_duration: Tick,
}

/// Grounds an operator over the typed object table: one candidate per element
/// of the Cartesian product of the parameter domains, in lexicographic order
/// of the bound objects. Unknown types are errors; empty domains simply yield
/// no candidates.
pub fn ground_operator(
    op: &GoalOperator,
    objects: &ObjectTable,
) -> Result<Vec<GoalCandidate>, GroundingError> {
    let mut domains: Vec<Vec<Name>> = Vec::with_capacity(op.params.len());
    for (_, ty) in &op.params {
        if !objects.has_type(ty) {
            return Err(GroundingError::UnknownType {
                class: op.class_name.clone(),
                ty: ty.clone(),
            });
        }
        domains.push(objects.of_type(ty).cloned().collect());
    }

    if domains.iter().any(Vec::is_empty) {
        return Ok(Vec::new());
    }
    // Zero parameters ground to exactly one candidate with an empty binding.
    let assignments: Vec<Vec<Name>> = if domains.is_empty() {
        vec![Vec::new()]
    } else {
        domains
            .iter()
            .map(|d| d.iter().cloned())
            .multi_cartesian_product()
            .collect()
    };
    assignments
        .into_iter()
        .map(|values| {
            let binding: Binding = op
                .params
                .iter()
                .zip(values)
                .map(|((name, _), value)| (name.clone(), value))
                .collect();
            ground_candidate(op, &binding)
        })
        .collect()
}

fn ground_candidate(op: &GoalOperator, binding: &Binding) -> Result<GoalCandidate, GroundingError> {
    let ground_all = |patterns: &[LiteralPattern]| -> Result<Vec<Literal>, PatternError> {
        patterns.iter().map(|p| p.ground(binding)).collect()
    };
    let promises = op
        .promise_templates
        .iter()
        .map(|t| Ok((t.literal.ground(binding)?, op.promise_offset(t))))
        .collect::<Result<Vec<_>, PatternError>>()?;
    let resources = op
        .required_resources
        .iter()
        .map(|t| t.resolve(binding))
        .collect::<Result<BTreeSet<_>, _>>()?;
    Ok(GoalCandidate {
        class: op.class_name.clone(),
        binding: binding.clone(),
        precondition: ground_all(&op.precondition)?,
        objective: ground_all(&op.objective)?,
        promises,
        resources,
        priority: op.priority,
        lookahead: op.lookahead,
        est_duration: op.est_duration,
    })
}

/// A ground goal instance moving through the lifecycle.
#[derive(Debug, Clone)]
pub struct Goal {
    pub id: GoalId,
    pub class: Name,
    pub binding: Binding,
    pub mode: GoalMode,
    pub formulated_at: Tick,
    pub plan: Option<Plan>,
    /// True iff formulation succeeded only thanks to promises.
    pub promise_dependent: bool,
    /// Goals whose promises justified a promise-dependent formulation.
    pub supporting: BTreeSet<GoalRef>,
    pub acquired_resources: BTreeSet<Name>,
    pub precondition: Vec<Literal>,
    pub objective: Vec<Literal>,
    pub promises: Vec<(Literal, Tick)>,
    pub resources: BTreeSet<Name>,
    pub priority: i64,
    pub lookahead: Tick,
    pub est_duration: Tick,
    /// Timestamped mode trace, starting with FORMULATED.
    pub trace: Vec<(Tick, GoalMode)>,
}

impl Goal {
    pub fn formulate(
        candidate: &GoalCandidate,
        counter: u64,
        now: Tick,
        promise_dependent: bool,
        supporting: BTreeSet<GoalRef>,
    ) -> Goal {
        let id = GoalId::new(&candidate.class, &candidate.binding, counter);
        Goal {
            id,
            class: candidate.class.clone(),
            binding: candidate.binding.clone(),
            mode: GoalMode::Formulated,
            formulated_at: now,
            plan: None,
            promise_dependent,
            supporting,
            acquired_resources: BTreeSet::new(),
            precondition: candidate.precondition.clone(),
            objective: candidate.objective.clone(),
            promises: candidate.promises.clone(),
            resources: candidate.resources.clone(),
            priority: candidate.priority,
            lookahead: candidate.lookahead,
            est_duration: candidate.est_duration,
            trace: vec![(now, GoalMode::Formulated)],
        }
    }

    /// Applies a lifecycle event. On an illegal edge the goal is unchanged
    /// and an error is returned for the caller to log.
    pub fn apply(&mut self, event: GoalEvent, now: Tick) -> Result<(), TransitionError> {
        let next = lifecycle::transition(self.mode, event)?;
        self.mode = next;
        self.trace.push((now, next));
        Ok(())
    }
}

#[cfg(test)]
mod tests;
