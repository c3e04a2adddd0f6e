//! The shared world model: per-agent replicas kept in sync by sequenced
//! update messages carrying fact deltas, promises and promise retractions.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Atom, EffectError, Name, TimedState};
use crate::goals::GoalRef;
use crate::promises::{Promise, PromiseStore};
use crate::time::Tick;

/// A sequenced world-model update from one agent. Sequence numbers start at 1
/// and increase strictly per origin.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldUpdate {
    pub origin: Name,
    pub seq: u64,
    pub adds: BTreeSet<Atom>,
    pub dels: BTreeSet<Atom>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub promises: Vec<Promise>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub retracts: Vec<GoalRef>,
}

impl WorldUpdate {
    pub fn new(
        origin: Name,
        seq: u64,
        adds: BTreeSet<Atom>,
        dels: BTreeSet<Atom>,
    ) -> Result<Self, EffectError> {
        if let Some(a) = adds.intersection(&dels).next() {
            return Err(EffectError::Overlap(a.clone()));
        }
        Ok(WorldUpdate { origin, seq, adds, dels, promises: Vec::new(), retracts: Vec::new() })
    }

    pub fn is_empty(&self) -> bool {
        self.adds.is_empty()
            && self.dels.is_empty()
            && self.promises.is_empty()
            && self.retracts.is_empty()
    }
}

/// What happened when an update reached a replica.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WmEvent {
    Applied { origin: Name, seq: u64 },
    /// Arrived ahead of its predecessors; held until the gap closes.
    Buffered { origin: Name, seq: u64 },
    /// Already-applied sequence number; dropped.
    DuplicateIgnored { origin: Name, seq: u64 },
}

/// One agent's replica of the shared world model. Updates are applied in
/// `(origin, seq)` order: out-of-order updates are buffered, duplicates are
/// ignored, so replicas that saw the same update prefix hold identical atoms.
#[derive(Debug, Clone, Default)]
pub struct WorldModel {
    state: TimedState,
    promises: PromiseStore,
    next_seq: BTreeMap<Name, u64>,
    buffered: BTreeMap<(Name, u64), WorldUpdate>,
    version: u64,
}

impl WorldModel {
    pub fn new(initial: TimedState) -> Self {
        WorldModel { state: initial, ..Default::default() }
    }

    pub fn state(&self) -> &TimedState {
        &self.state
    }

    pub fn promises(&self) -> &PromiseStore {
        &self.promises
    }

    /// Bumped on every applied update; lets callers memoize over world state.
    pub fn version(&self) -> u64 {
        self.version
    }

    /// Advances the clock. Time never goes backwards.
    pub fn advance_clock(&mut self, t: Tick) {
        debug_assert!(t >= self.state.time, "clock must be monotone");
        self.state.time = t;
    }

    pub fn apply(&mut self, update: WorldUpdate) -> Vec<WmEvent> {
        let mut events = Vec::new();
        self.offer(update, &mut events);
        self.drain_buffer(&mut events);
        events
    }

    fn offer(&mut self, update: WorldUpdate, events: &mut Vec<WmEvent>) {
        let expected = self.next_seq.get(&update.origin).copied().unwrap_or(1);
        if update.seq < expected {
            events.push(WmEvent::DuplicateIgnored { origin: update.origin, seq: update.seq });
        } else if update.seq > expected {
            events.push(WmEvent::Buffered { origin: update.origin.clone(), seq: update.seq });
            self.buffered.insert((update.origin.clone(), update.seq), update);
        } else {
            self.commit(update, events);
        }
    }

    fn drain_buffer(&mut self, events: &mut Vec<WmEvent>) {
        loop {
            let ready = self.buffered.keys().find_map(|(origin, seq)| {
                (self.next_seq.get(origin).copied().unwrap_or(1) == *seq)
                    .then(|| (origin.clone(), *seq))
            });
            match ready {
                Some(key) => {
                    let update = self.buffered.remove(&key).expect("key just found");
                    self.commit(update, events);
                }
                None => return,
            }
        }
    }

    fn commit(&mut self, update: WorldUpdate, events: &mut Vec<WmEvent>) {
        for d in &update.dels {
            self.state.atoms.remove(d);
        }
        for a in &update.adds {
            self.state.atoms.insert(a.clone());
        }
        for p in &update.promises {
            self.promises.insert(p.clone());
        }
        for goal in &update.retracts {
            self.promises.retract(goal);
        }
        self.next_seq.insert(update.origin.clone(), update.seq + 1);
        self.version += 1;
        events.push(WmEvent::Applied { origin: update.origin, seq: update.seq });
    }
}
