//! Typed Cartesian grounding of action schemas with static pruning.

use std::collections::BTreeSet;

use itertools::Itertools;

use super::Domain;
use crate::planner::GroundAction;
use crate::world::{satisfies, Atom, Binding, Literal, Name, ObjectTable};

/// Grounds every action schema over the typed object table, in declaration
/// order with lexicographic argument order.
///
/// A predicate is *static* if no action effect and no entry of
/// `extra_fluent_preds` (e.g. TIL or promise predicates) can change it.
/// Ground actions with a static precondition literal that the initial state
/// does not satisfy can never fire and are pruned, as are degenerate
/// instances whose add and delete effects overlap.
pub fn ground_actions(
    domain: &Domain,
    objects: &ObjectTable,
    init: &BTreeSet<Atom>,
    extra_fluent_preds: &BTreeSet<Name>,
) -> Vec<GroundAction> {
    let mut fluents: BTreeSet<Name> = extra_fluent_preds.clone();
    for schema in &domain.actions {
        for atom in schema.adds.iter().chain(&schema.dels) {
            fluents.insert(atom.pred.clone());
        }
    }

    let mut out = Vec::new();
    for schema in &domain.actions {
        let domains: Vec<Vec<Name>> = schema
            .params
            .iter()
            .map(|(_, ty)| objects.of_type(ty).cloned().collect())
            .collect();
        if domains.iter().any(Vec::is_empty) {
            continue;
        }
        let assignments: Vec<Vec<Name>> = if domains.is_empty() {
            vec![Vec::new()]
        } else {
            domains
                .iter()
                .map(|d| d.iter().cloned())
                .multi_cartesian_product()
                .collect()
        };
        'assignment: for args in assignments {
            let binding: Binding = schema
                .params
                .iter()
                .zip(args.iter())
                .map(|((name, _), value)| (name.clone(), value.clone()))
                .collect();
            let pre: Vec<Literal> = schema
                .precondition
                .iter()
                .map(|p| p.ground(&binding).expect("schema variables are parameters"))
                .collect();
            for literal in &pre {
                if !fluents.contains(&literal.atom.pred) && !satisfies(init, literal) {
                    continue 'assignment;
                }
            }
            let adds: BTreeSet<Atom> = schema
                .adds
                .iter()
                .map(|a| a.ground(&binding).expect("schema variables are parameters"))
                .collect();
            let dels: BTreeSet<Atom> = schema
                .dels
                .iter()
                .map(|a| a.ground(&binding).expect("schema variables are parameters"))
                .collect();
            if adds.intersection(&dels).next().is_some() {
                continue;
            }
            out.push(GroundAction {
                name: schema.name.clone(),
                args,
                pre,
                adds,
                dels,
                duration: schema.duration,
            });
        }
    }
    out
}
