//! The forward search. States are compiled to dense bitsets over the atoms
//! reachable in the task; the search itself is a best-first loop with
//! duplicate detection on `(atoms, pending-til-index)` keeping the earliest
//! time per key.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap};

use super::{GroundAction, Plan, PlanOutcome, PlannerConfig, SearchMode, TimedAction};
use crate::time::Tick;
use crate::world::{Atom, Literal};

/// Plans from `init` to `objective` using `actions`, with `tils` applied at
/// their (relative) times. Deterministic: identical inputs yield identical
/// plans.
pub fn plan(
    actions: &[GroundAction],
    init: &BTreeSet<Atom>,
    objective: &[Literal],
    tils: &[(Tick, Literal)],
    config: &PlannerConfig,
) -> PlanOutcome {
    let task = Task::compile(actions, init, objective, tils);
    match Search::new(&task, config).run() {
        Found::Plan(steps) => PlanOutcome::Solved(Plan {
            steps: steps
                .into_iter()
                .map(|(start, source)| TimedAction { start, action: actions[source].clone() })
                .collect(),
        }),
        Found::Unsolvable => PlanOutcome::Unsolvable,
        Found::ResourceLimit => PlanOutcome::ResourceLimit,
    }
}

type Bits = Vec<u64>;

fn set_bit(bits: &mut Bits, i: usize) {
    bits[i / 64] |= 1 << (i % 64);
}

fn clear_bit(bits: &mut Bits, i: usize) {
    bits[i / 64] &= !(1 << (i % 64));
}

fn test_bit(bits: &Bits, i: usize) -> bool {
    bits[i / 64] & (1 << (i % 64)) != 0
}

struct DenseAction {
    pre_pos: Vec<usize>,
    pre_neg: Vec<usize>,
    add: Vec<usize>,
    del: Vec<usize>,
    duration: Tick,
    /// Index into the caller's action slice.
    source: usize,
}

struct Task {
    actions: Vec<DenseAction>,
    init: Bits,
    goal_pos: Vec<usize>,
    goal_neg: Vec<usize>,
    /// Sorted by time; `(time, atom, positive)`.
    tils: Vec<(Tick, usize, bool)>,
}

impl Task {
    fn compile(
        actions: &[GroundAction],
        init: &BTreeSet<Atom>,
        objective: &[Literal],
        tils: &[(Tick, Literal)],
    ) -> Task {
        let mut index: HashMap<Atom, usize> = HashMap::new();
        fn intern(index: &mut HashMap<Atom, usize>, atom: &Atom) -> usize {
            let next = index.len();
            *index.entry(atom.clone()).or_insert(next)
        }
        for atom in init {
            intern(&mut index, atom);
        }
        for action in actions {
            for l in &action.pre {
                intern(&mut index, &l.atom);
            }
            for a in action.adds.iter().chain(&action.dels) {
                intern(&mut index, a);
            }
        }
        for l in objective {
            intern(&mut index, &l.atom);
        }
        for (_, l) in tils {
            intern(&mut index, &l.atom);
        }

        let words = index.len().div_ceil(64).max(1);
        let mut init_bits = vec![0u64; words];
        for atom in init {
            set_bit(&mut init_bits, index[atom]);
        }
        let dense_actions = actions
            .iter()
            .enumerate()
            .map(|(source, a)| DenseAction {
                pre_pos: a.pre.iter().filter(|l| l.positive).map(|l| index[&l.atom]).collect(),
                pre_neg: a.pre.iter().filter(|l| !l.positive).map(|l| index[&l.atom]).collect(),
                add: a.adds.iter().map(|x| index[x]).collect(),
                del: a.dels.iter().map(|x| index[x]).collect(),
                duration: a.duration,
                source,
            })
            .collect();
        let mut dense_tils: Vec<(Tick, usize, bool)> =
            tils.iter().map(|(t, l)| (*t, index[&l.atom], l.positive)).collect();
        dense_tils.sort_by_key(|&(t, atom, pos)| (t, atom, pos));

        Task {
            actions: dense_actions,
            init: init_bits,
            goal_pos: objective.iter().filter(|l| l.positive).map(|l| index[&l.atom]).collect(),
            goal_neg: objective.iter().filter(|l| !l.positive).map(|l| index[&l.atom]).collect(),
            tils: dense_tils,
        }
    }

    fn applicable(&self, action: &DenseAction, state: &Bits) -> bool {
        action.pre_pos.iter().all(|&i| test_bit(state, i))
            && action.pre_neg.iter().all(|&i| !test_bit(state, i))
    }

    fn goal_satisfied(&self, state: &Bits) -> bool {
        self.goal_pos.iter().all(|&i| test_bit(state, i))
            && self.goal_neg.iter().all(|&i| !test_bit(state, i))
    }

    fn unsatisfied_goals(&self, state: &Bits) -> usize {
        self.goal_pos.iter().filter(|&&i| !test_bit(state, i)).count()
            + self.goal_neg.iter().filter(|&&i| test_bit(state, i)).count()
    }

    /// Applies every pending TIL with time <= `upto`.
    fn apply_tils(&self, state: &mut Bits, til_idx: &mut usize, upto: Tick) {
        while let Some(&(t, atom, positive)) = self.tils.get(*til_idx) {
            if t > upto {
                break;
            }
            if positive {
                set_bit(state, atom);
            } else {
                clear_bit(state, atom);
            }
            *til_idx += 1;
        }
    }
}

struct Node {
    state: Bits,
    time: Tick,
    til_idx: usize,
    parent: usize,
    /// Action applied to reach this node; None for the root and wait nodes.
    action: Option<usize>,
    /// Number of actions on the path; ties on cost prefer shorter plans.
    depth: u64,
    /// Goals are accepted at the root and at action ends only, so that the
    /// objective holds at the plan's makespan.
    goal_eligible: bool,
}

enum Found {
    Plan(Vec<(Tick, usize)>),
    Unsolvable,
    ResourceLimit,
}

struct Search<'a> {
    task: &'a Task,
    config: &'a PlannerConfig,
    nodes: Vec<Node>,
    /// Best known (time, depth) per (state, til_idx, goal_eligible), for
    /// nodes past the last TIL. Wait nodes and action-end nodes dedupe
    /// separately: only the latter may accept a goal.
    best: HashMap<(Bits, usize, bool), (Tick, u64)>,
    /// Best known depth per exact (state, til_idx, goal_eligible, time) while
    /// TILs are still pending. An earlier time does not dominate then: a
    /// TIL-gated objective can require pushing the makespan past a TIL.
    seen_timed: HashMap<(Bits, usize, bool, Tick), u64>,
    heap: BinaryHeap<Reverse<(u64, u64, u64, u64)>>,
}

impl<'a> Search<'a> {
    fn new(task: &'a Task, config: &'a PlannerConfig) -> Self {
        Search {
            task,
            config,
            nodes: Vec::new(),
            best: HashMap::new(),
            seen_timed: HashMap::new(),
            heap: BinaryHeap::new(),
        }
    }

    fn push(&mut self, node: Node) {
        use std::collections::hash_map::Entry;
        if node.til_idx >= self.task.tils.len() {
            match self.best.entry((node.state.clone(), node.til_idx, node.goal_eligible)) {
                Entry::Occupied(mut o) => {
                    if *o.get() <= (node.time, node.depth) {
                        return;
                    }
                    o.insert((node.time, node.depth));
                }
                Entry::Vacant(v) => {
                    v.insert((node.time, node.depth));
                }
            }
        } else {
            match self
                .seen_timed
                .entry((node.state.clone(), node.til_idx, node.goal_eligible, node.time))
            {
                Entry::Occupied(mut o) => {
                    if *o.get() <= node.depth {
                        return;
                    }
                    o.insert(node.depth);
                }
                Entry::Vacant(v) => {
                    v.insert(node.depth);
                }
            }
        }
        let (primary, secondary) = match self.config.mode {
            SearchMode::UniformCost => (node.time.0, node.depth),
            SearchMode::Greedy => {
                (self.task.unsatisfied_goals(&node.state) as u64, node.time.0)
            }
        };
        // Ties on cost prefer plans with fewer actions (a plan that waits for
        // a TIL over one that spends resources to the same end), then the
        // node index keeps pops deterministic.
        let depth = node.depth;
        let idx = self.nodes.len() as u64;
        self.nodes.push(node);
        self.heap.push(Reverse((primary, secondary, depth, idx)));
    }

    fn run(mut self) -> Found {
        self.push(Node {
            state: self.task.init.clone(),
            time: Tick::ZERO,
            til_idx: 0,
            parent: usize::MAX,
            action: None,
            depth: 0,
            goal_eligible: true,
        });

        let mut expanded = 0usize;
        while let Some(Reverse((_, _, _, idx))) = self.heap.pop() {
            let idx = idx as usize;
            // Lazy deletion: skip superseded entries.
            let node = &self.nodes[idx];
            let superseded = if node.til_idx >= self.task.tils.len() {
                let key = (node.state.clone(), node.til_idx, node.goal_eligible);
                self.best.get(&key).copied() != Some((node.time, node.depth))
            } else {
                let key = (node.state.clone(), node.til_idx, node.goal_eligible, node.time);
                self.seen_timed.get(&key).copied() != Some(node.depth)
            };
            if superseded {
                continue;
            }

            if self.nodes[idx].goal_eligible && self.task.goal_satisfied(&self.nodes[idx].state) {
                return Found::Plan(self.extract(idx));
            }
            expanded += 1;
            if expanded > self.config.node_budget {
                return Found::ResourceLimit;
            }

            // Action successors, in canonical action order.
            for a_idx in 0..self.task.actions.len() {
                if !self.task.applicable(&self.task.actions[a_idx], &self.nodes[idx].state) {
                    continue;
                }
                let end = self.nodes[idx].time + self.task.actions[a_idx].duration;
                if end > self.config.bound {
                    continue;
                }
                let mut state = self.nodes[idx].state.clone();
                let mut til_idx = self.nodes[idx].til_idx;
                // TILs strictly before the end, then effects, then TILs at
                // exactly the end: completions precede TILs at equal instants.
                self.task.apply_tils(&mut state, &mut til_idx, Tick(end.0.saturating_sub(1)));
                for &d in &self.task.actions[a_idx].del {
                    clear_bit(&mut state, d);
                }
                for &a in &self.task.actions[a_idx].add {
                    set_bit(&mut state, a);
                }
                self.task.apply_tils(&mut state, &mut til_idx, end);
                let depth = self.nodes[idx].depth + 1;
                self.push(Node {
                    state,
                    time: end,
                    til_idx,
                    parent: idx,
                    action: Some(a_idx),
                    depth,
                    goal_eligible: true,
                });
            }

            // Wait successor: jump to the next pending TIL time. Nothing else
            // can change executability, so waiting anywhere else is useless.
            if let Some(&(t, _, _)) = self.task.tils.get(self.nodes[idx].til_idx) {
                if t <= self.config.bound {
                    let mut state = self.nodes[idx].state.clone();
                    let mut til_idx = self.nodes[idx].til_idx;
                    self.task.apply_tils(&mut state, &mut til_idx, t);
                    let depth = self.nodes[idx].depth;
                    self.push(Node {
                        state,
                        time: t,
                        til_idx,
                        parent: idx,
                        action: None,
                        depth,
                        goal_eligible: false,
                    });
                }
            }
        }
        Found::Unsolvable
    }

    fn extract(&self, goal: usize) -> Vec<(Tick, usize)> {
        let mut steps = Vec::new();
        let mut idx = goal;
        while idx != usize::MAX {
            let node = &self.nodes[idx];
            if let Some(a_idx) = node.action {
                steps.push((self.nodes[node.parent].time, self.task.actions[a_idx].source));
            }
            idx = node.parent;
        }
        steps.reverse();
        steps
    }
}
