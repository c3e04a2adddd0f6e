//! Ground atoms, literals, timed states and closed-world satisfaction.
//!
//! A state is a set of ground atoms plus a clock value; atoms not in the set
//! are false. Literal/atom text syntax is `(pred arg1 arg2)` and
//! `(not (pred ...))`.

mod model;
mod pattern;
mod text;

pub use model::{WmEvent, WorldModel, WorldUpdate};
pub use pattern::{AtomPattern, Binding, LiteralPattern, PatternError, Term};

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::time::Tick;

/// An interned symbolic name (predicate, object, type, agent, ...).
///
/// Cheap to clone; ordering and equality are by string content so sorted
/// containers iterate in a load-order-independent way.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Name(Arc<str>);

impl Name {
    pub fn new(s: &str) -> Self {
        Name(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Name {
    fn from(s: &str) -> Self {
        Name::new(s)
    }
}

impl From<String> for Name {
    fn from(s: String) -> Self {
        Name(Arc::from(s))
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Serialize for Name {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Name {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Ok(Name::from(String::deserialize(deserializer)?))
    }
}

/// A ground atom: predicate applied to object arguments.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Atom {
    pub pred: Name,
    pub args: Vec<Name>,
}

impl Atom {
    pub fn new(pred: impl Into<Name>, args: impl IntoIterator<Item = Name>) -> Self {
        Atom { pred: pred.into(), args: args.into_iter().collect() }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.pred)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A positive or negative ground atom.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub atom: Atom,
    pub positive: bool,
}

impl Literal {
    pub fn pos(atom: Atom) -> Self {
        Literal { atom, positive: true }
    }

    pub fn neg(atom: Atom) -> Self {
        Literal { atom, positive: false }
    }

    /// The complement literal; an involution.
    pub fn negated(&self) -> Literal {
        Literal { atom: self.atom.clone(), positive: !self.positive }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "{}", self.atom)
        } else {
            write!(f, "(not {})", self.atom)
        }
    }
}

impl fmt::Debug for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Closed-world satisfaction: a positive literal holds iff its atom is
/// present, a negative literal iff it is absent.
pub fn satisfies(state_atoms: &BTreeSet<Atom>, l: &Literal) -> bool {
    state_atoms.contains(&l.atom) == l.positive
}

/// Conjunction of [`satisfies`] over a literal set; true for an empty set.
pub fn satisfies_all<'a>(
    state_atoms: &BTreeSet<Atom>,
    literals: impl IntoIterator<Item = &'a Literal>,
) -> bool {
    literals.into_iter().all(|l| satisfies(state_atoms, l))
}

#[derive(Debug, thiserror::Error)]
pub enum EffectError {
    #[error("effect adds and deletes overlap on {0}")]
    Overlap(Atom),
}

/// Applies deletes then adds to a state's atom set; the clock is unchanged.
pub fn apply_effects(
    state: &TimedState,
    adds: &BTreeSet<Atom>,
    dels: &BTreeSet<Atom>,
) -> Result<TimedState, EffectError> {
    if let Some(a) = adds.intersection(dels).next() {
        return Err(EffectError::Overlap(a.clone()));
    }
    let mut atoms = state.atoms.clone();
    for d in dels {
        atoms.remove(d);
    }
    for a in adds {
        atoms.insert(a.clone());
    }
    Ok(TimedState { atoms, time: state.time })
}

/// A set of ground atoms together with the global clock.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TimedState {
    pub atoms: BTreeSet<Atom>,
    pub time: Tick,
}

impl TimedState {
    pub fn new(atoms: impl IntoIterator<Item = Atom>, time: Tick) -> Self {
        TimedState { atoms: atoms.into_iter().collect(), time }
    }

    pub fn satisfies(&self, l: &Literal) -> bool {
        satisfies(&self.atoms, l)
    }

    pub fn satisfies_all<'a>(&self, literals: impl IntoIterator<Item = &'a Literal>) -> bool {
        satisfies_all(&self.atoms, literals)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SignatureError {
    #[error("unknown predicate {0}")]
    UnknownPredicate(Name),
    #[error("predicate {pred} expects {expected} arguments, got {got}")]
    ArityMismatch { pred: Name, expected: usize, got: usize },
    #[error("unknown object {0}")]
    UnknownObject(Name),
    #[error("object {object} has type {actual}, expected {expected}")]
    TypeMismatch { object: Name, actual: Name, expected: Name },
}

/// Predicate declarations: name to argument types.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Signature {
    pub predicates: BTreeMap<Name, Vec<Name>>,
}

impl Signature {
    /// Checks that an atom uses a declared predicate with the right arity and
    /// correctly typed, declared arguments.
    pub fn check_atom(&self, atom: &Atom, objects: &ObjectTable) -> Result<(), SignatureError> {
        let types = self
            .predicates
            .get(&atom.pred)
            .ok_or_else(|| SignatureError::UnknownPredicate(atom.pred.clone()))?;
        if types.len() != atom.args.len() {
            return Err(SignatureError::ArityMismatch {
                pred: atom.pred.clone(),
                expected: types.len(),
                got: atom.args.len(),
            });
        }
        for (arg, expected) in atom.args.iter().zip(types) {
            let actual = objects
                .type_of(arg)
                .ok_or_else(|| SignatureError::UnknownObject(arg.clone()))?;
            if actual != expected {
                return Err(SignatureError::TypeMismatch {
                    object: arg.clone(),
                    actual: actual.clone(),
                    expected: expected.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn check_literal(&self, l: &Literal, objects: &ObjectTable) -> Result<(), SignatureError> {
        self.check_atom(&l.atom, objects)
    }
}

/// Typed object table. Every object has exactly one type; no subtyping.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ObjectTable {
    by_object: BTreeMap<Name, Name>,
    by_type: BTreeMap<Name, BTreeSet<Name>>,
}

impl ObjectTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, object: Name, ty: Name) {
        self.by_object.insert(object.clone(), ty.clone());
        self.by_type.entry(ty).or_default().insert(object);
    }

    pub fn type_of(&self, object: &Name) -> Option<&Name> {
        self.by_object.get(object)
    }

    /// Objects of a type in sorted (canonical) order; empty for unknown types.
    pub fn of_type(&self, ty: &Name) -> impl Iterator<Item = &Name> + '_ {
        self.by_type.get(ty).into_iter().flatten()
    }

    pub fn has_type(&self, ty: &Name) -> bool {
        self.by_type.contains_key(ty)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Name, &Name)> + '_ {
        self.by_object.iter()
    }

    pub fn len(&self) -> usize {
        self.by_object.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_object.is_empty()
    }
}
