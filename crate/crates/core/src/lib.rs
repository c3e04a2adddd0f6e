//! Promise-based multi-agent goal reasoning.
//!
//! Agents pursue goals through a lifecycle (formulated, selected, expanded,
//! committed, dispatched, finished/failed/rejected). When an agent dispatches
//! a goal it *promises* a set of literals to become true at future timepoints.
//! Other agents use those promises to formulate goals ahead of time, plan with
//! timed initial literals, and coordinate resource handovers, all inside a
//! deterministic discrete-event simulator.
//!
//! Module map:
//! - [`world`] — ground atoms, literals, timed states, the shared world model
//! - [`goals`] — goal operators, grounding, the goal lifecycle
//! - [`promises`] — promise store, `From`/`Until` evaluation, TIL export
//! - [`pddl`] — parser for the PDDL subset and goal-operator files
//! - [`planner`] — grounded temporal forward search with TIL support
//! - [`locks`] — central lock authority with promised-resource handover
//! - [`executor`] — per-agent plan execution and monitoring
//! - [`sim`] — scenarios, the event loop, event logs and reports

pub mod executor;
pub mod goals;
pub mod locks;
pub mod pddl;
pub mod planner;
pub mod promises;
pub mod sim;
pub mod time;
pub mod world;

pub use time::{Tick, TimeBound};
pub use world::{Atom, Literal, Name, TimedState};
