//! Promises: literals announced to become true at a future global time.
//!
//! A promise `(l, t)` is issued by a goal when it is dispatched and retracted
//! when that goal finishes or fails. `From`/`Until` evaluate when a literal
//! (set) becomes satisfied / stops being satisfied under the current state
//! plus promises; the formulation check accepts a goal whose precondition is
//! promised within the operator's lookahead window.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::goals::{Goal, GoalId, GoalRef};
use crate::time::{Tick, TimeBound};
use crate::world::{satisfies, Atom, Literal, Name};

/// A shared assertion that `literal` will hold at global time `at`, issued by
/// `agent`'s goal `goal`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Promise {
    pub literal: Literal,
    pub at: Tick,
    pub agent: Name,
    pub goal: GoalId,
}

impl Promise {
    pub fn issuer(&self) -> GoalRef {
        GoalRef { agent: self.agent.clone(), goal: self.goal.clone() }
    }
}

/// Wire form: `promise <literal> @ <tick> by <agent>/<goal-id>`.
impl fmt::Display for Promise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "promise {} @ {} by {}/{}", self.literal, self.at, self.agent, self.goal)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid promise record: {0}")]
pub struct WireError(pub String);

impl FromStr for Promise {
    type Err = WireError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match PromiseRecord::from_str(s)? {
            PromiseRecord::Promise(p) => Ok(p),
            PromiseRecord::Retract(_) => Err(WireError(s.to_string())),
        }
    }
}

/// A promise-store operation as carried in world-update payloads.
///
/// Grammar: `promise <literal> @ <tick> by <agent>/<goal-id>`
///      or  `retract <agent>/<goal-id>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PromiseRecord {
    Promise(Promise),
    Retract(GoalRef),
}

impl fmt::Display for PromiseRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PromiseRecord::Promise(p) => write!(f, "{p}"),
            PromiseRecord::Retract(r) => write!(f, "retract {r}"),
        }
    }
}

impl FromStr for PromiseRecord {
    type Err = WireError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || WireError(s.to_string());
        if let Some(rest) = s.strip_prefix("retract ") {
            let goal = GoalRef::parse(rest.trim()).ok_or_else(err)?;
            return Ok(PromiseRecord::Retract(goal));
        }
        let rest = s.strip_prefix("promise ").ok_or_else(err)?;
        let (literal_text, rest) = rest.rsplit_once(" @ ").ok_or_else(err)?;
        let (tick_text, issuer_text) = rest.split_once(" by ").ok_or_else(err)?;
        let literal: Literal = literal_text.trim().parse().map_err(|_| err())?;
        let at = Tick(tick_text.trim().parse::<u64>().map_err(|_| err())?);
        let issuer = GoalRef::parse(issuer_text.trim()).ok_or_else(err)?;
        Ok(PromiseRecord::Promise(Promise {
            literal,
            at,
            agent: issuer.agent,
            goal: issuer.goal,
        }))
    }
}

impl Serialize for PromiseRecord {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PromiseRecord {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl Serialize for Promise {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Promise {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct Entry {
    at: Tick,
    agent: Name,
    goal: GoalId,
}

/// The set of active promises, indexed by literal.
#[derive(Debug, Clone, Default)]
pub struct PromiseStore {
    by_literal: BTreeMap<Literal, BTreeSet<Entry>>,
}

impl PromiseStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a promise; returns false if an identical one is already active.
    pub fn insert(&mut self, p: Promise) -> bool {
        self.by_literal
            .entry(p.literal)
            .or_default()
            .insert(Entry { at: p.at, agent: p.agent, goal: p.goal })
    }

    /// Removes every promise issued by the given goal; returns how many.
    pub fn retract(&mut self, issuer: &GoalRef) -> usize {
        let mut removed = 0;
        self.by_literal.retain(|_, entries| {
            let before = entries.len();
            entries.retain(|e| !(e.agent == issuer.agent && e.goal == issuer.goal));
            removed += before - entries.len();
            !entries.is_empty()
        });
        removed
    }

    pub fn promises_for<'a>(&'a self, l: &Literal) -> impl Iterator<Item = Promise> + 'a {
        let literal = l.clone();
        self.by_literal
            .get(l)
            .into_iter()
            .flatten()
            .map(move |e| Promise {
                literal: literal.clone(),
                at: e.at,
                agent: e.agent.clone(),
                goal: e.goal.clone(),
            })
    }

    pub fn iter(&self) -> impl Iterator<Item = Promise> + '_ {
        self.by_literal.iter().flat_map(|(literal, entries)| {
            entries.iter().map(move |e| Promise {
                literal: literal.clone(),
                at: e.at,
                agent: e.agent.clone(),
                goal: e.goal.clone(),
            })
        })
    }

    pub fn issuers(&self) -> BTreeSet<GoalRef> {
        self.iter().map(|p| p.issuer()).collect()
    }

    pub fn len(&self) -> usize {
        self.by_literal.values().map(BTreeSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.by_literal.is_empty()
    }
}

/// The timepoint when `l` becomes satisfied: the current time if the state
/// already satisfies it, else the earliest promise for it, else never. The
/// current-state case takes precedence over promises.
pub fn from_time(
    l: &Literal,
    state_atoms: &BTreeSet<Atom>,
    t: Tick,
    promises: &PromiseStore,
) -> TimeBound {
    from_time_filtered(l, state_atoms, t, promises, |_| true)
}

/// The timepoint when `l` stops being satisfied: the dual of [`from_time`]
/// over the complement literal.
pub fn until_time(
    l: &Literal,
    state_atoms: &BTreeSet<Atom>,
    t: Tick,
    promises: &PromiseStore,
) -> TimeBound {
    from_time(&l.negated(), state_atoms, t, promises)
}

/// `From` over a literal set: the max of the member times; `t` for an empty
/// set; never if any member is never satisfied.
pub fn from_time_set<'a>(
    literals: impl IntoIterator<Item = &'a Literal>,
    state_atoms: &BTreeSet<Atom>,
    t: Tick,
    promises: &PromiseStore,
) -> TimeBound {
    literals
        .into_iter()
        .map(|l| from_time(l, state_atoms, t, promises))
        .max()
        .unwrap_or(TimeBound::At(t))
}

/// `Until` over a literal set: the min of the member times; never (infinity)
/// for an empty set.
pub fn until_time_set<'a>(
    literals: impl IntoIterator<Item = &'a Literal>,
    state_atoms: &BTreeSet<Atom>,
    t: Tick,
    promises: &PromiseStore,
) -> TimeBound {
    literals
        .into_iter()
        .map(|l| until_time(l, state_atoms, t, promises))
        .min()
        .unwrap_or(TimeBound::Never)
}

fn from_time_filtered(
    l: &Literal,
    state_atoms: &BTreeSet<Atom>,
    t: Tick,
    promises: &PromiseStore,
    visible: impl Fn(&Promise) -> bool,
) -> TimeBound {
    if satisfies(state_atoms, l) {
        return TimeBound::At(t);
    }
    match promises.promises_for(l).filter(|p| visible(p)).map(|p| p.at).min() {
        Some(min) => TimeBound::At(min),
        None => TimeBound::Never,
    }
}

/// Whether `Until` is also required to cover the lookahead window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormulationMode {
    /// Formulate on `From` alone, even if the precondition is promised to
    /// stop holding within the window.
    #[default]
    Optimistic,
    /// Additionally require the precondition to stay satisfied for the whole
    /// lookahead window.
    Pessimistic,
}

/// The promise-aware formulation check: true iff the precondition will be
/// satisfied within the next `lookahead` ticks, i.e.
/// `From(pre, s, t, P) <= t + lookahead` (optimistic mode), additionally
/// `Until(pre, s, t, P) >= t + lookahead` in pessimistic mode.
///
/// Only promises for strictly future times count (a promise whose time has
/// already passed without its literal holding is broken, and a present-time
/// promise cannot anticipate anything), and an agent's own promises are
/// excluded via `exclude_agent`: an agent already knows its own intent. With
/// `lookahead = 0` this reduces exactly to plain satisfaction.
pub fn check_formulation<'a>(
    pre: impl IntoIterator<Item = &'a Literal> + Copy,
    state_atoms: &BTreeSet<Atom>,
    t: Tick,
    promises: &PromiseStore,
    exclude_agent: Option<&Name>,
    lookahead: Tick,
    mode: FormulationMode,
) -> bool {
    let visible =
        |p: &Promise| p.at > t && exclude_agent.is_none_or(|agent| &p.agent != agent);
    let horizon = TimeBound::At(t + lookahead);
    let from = pre
        .into_iter()
        .map(|l| from_time_filtered(l, state_atoms, t, promises, visible))
        .max()
        .unwrap_or(TimeBound::At(t));
    if from > horizon {
        return false;
    }
    if mode == FormulationMode::Pessimistic {
        let until = pre
            .into_iter()
            .map(|l| from_time_filtered(&l.negated(), state_atoms, t, promises, visible))
            .min()
            .unwrap_or(TimeBound::Never);
        if until < horizon {
            return false;
        }
    }
    true
}

/// The promises that justify formulating a goal with precondition `pre` at
/// time `t`: for each literal not satisfied by the actual state, the visible
/// promises with the earliest promised time.
pub fn supporting_promises<'a>(
    pre: impl IntoIterator<Item = &'a Literal>,
    state_atoms: &BTreeSet<Atom>,
    t: Tick,
    promises: &PromiseStore,
    exclude_agent: Option<&Name>,
) -> Vec<Promise> {
    let visible =
        |p: &Promise| p.at > t && exclude_agent.is_none_or(|agent| &p.agent != agent);
    let mut support = BTreeSet::new();
    for l in pre {
        if satisfies(state_atoms, l) {
            continue;
        }
        let candidates: Vec<Promise> = promises.promises_for(l).filter(|p| visible(p)).collect();
        if let Some(min_at) = candidates.iter().map(|p| p.at).min() {
            support.extend(candidates.into_iter().filter(|p| p.at == min_at));
        }
    }
    support.into_iter().collect()
}

/// The issuing goals behind [`supporting_promises`].
pub fn supporting_goals<'a>(
    pre: impl IntoIterator<Item = &'a Literal>,
    state_atoms: &BTreeSet<Atom>,
    t: Tick,
    promises: &PromiseStore,
    exclude_agent: Option<&Name>,
) -> BTreeSet<GoalRef> {
    supporting_promises(pre, state_atoms, t, promises, exclude_agent)
        .iter()
        .map(Promise::issuer)
        .collect()
}

/// Grounds a dispatched goal's promise templates into promises at
/// `t_dispatch + offset` each.
pub fn issue_promises(goal: &Goal, agent: &Name, t_dispatch: Tick) -> Vec<Promise> {
    goal.promises
        .iter()
        .map(|(literal, offset)| Promise {
            literal: literal.clone(),
            at: t_dispatch + *offset,
            agent: agent.clone(),
            goal: goal.id.clone(),
        })
        .collect()
}

/// Exports foreign promises as timed initial literals relative to `t_now`.
/// Promises at or before `t_now` are omitted: if the literal already holds it
/// is part of the init state, and an unfulfilled past promise is stale.
/// `own_agent`'s promises are excluded.
pub fn to_tils(
    promises: &PromiseStore,
    t_now: Tick,
    own_agent: &Name,
) -> Vec<(Tick, Literal)> {
    let mut tils: Vec<(Tick, Literal)> = promises
        .iter()
        .filter(|p| &p.agent != own_agent && p.at > t_now)
        .map(|p| (p.at - t_now, p.literal))
        .collect();
    tils.sort();
    tils.dedup();
    tils
}
