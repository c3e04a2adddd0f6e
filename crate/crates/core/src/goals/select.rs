//! Deterministic goal selection among formulated goals.

use super::{Goal, GoalMode};

/// Selection configuration. The built-in strategy picks the highest
/// class-priority goal, breaking ties by earliest formulation time and then
/// by lexicographically smallest goal id.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SelectionStrategy;

/// Picks one goal from the formulated set. A pure function of its inputs:
/// the result does not depend on iteration order of the input.
pub fn select_goal<'a>(
    formulated: impl IntoIterator<Item = &'a Goal>,
    _strategy: &SelectionStrategy,
) -> Option<&'a Goal> {
    formulated
        .into_iter()
        .inspect(|g| debug_assert_eq!(g.mode, GoalMode::Formulated))
        .min_by(|a, b| {
            b.priority
                .cmp(&a.priority)
                .then(a.formulated_at.cmp(&b.formulated_at))
                .then(a.id.cmp(&b.id))
        })
}
