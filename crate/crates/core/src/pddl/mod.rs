//! Parser and emitter for the PDDL subset used here: typed STRIPS with fixed
//! per-action durations and timed initial literals (TILs), plus the
//! goal-operator (`.gop`) file format. See `docs/formats.md` for the
//! grammars.

mod domain;
mod gop;
mod ground;
mod lexer;
mod problem;
mod sexp;

pub use domain::parse_domain;
pub use gop::parse_operators;
pub use ground::ground_actions;
pub use lexer::Pos;
pub use problem::{emit_problem, parse_problem};

use std::collections::BTreeSet;

use crate::time::Tick;
use crate::world::{
    Atom, AtomPattern, Literal, LiteralPattern, Name, ObjectTable, Signature, Term,
};

use self::sexp::Sexp;

/// A parse or validation failure with its source location.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{pos}: {msg}")]
pub struct ParseError {
    pub pos: Pos,
    pub msg: String,
}

impl ParseError {
    fn at(pos: Pos, msg: String) -> Self {
        ParseError { pos, msg }
    }
}

/// An action schema: typed parameters, literal precondition, add/delete
/// effects, and a fixed duration (defaults to 1 tick, override with a
/// `:duration` entry).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSchema {
    pub name: Name,
    pub params: Vec<(Name, Name)>,
    pub precondition: Vec<LiteralPattern>,
    pub adds: Vec<AtomPattern>,
    pub dels: Vec<AtomPattern>,
    pub duration: Tick,
}

/// A parsed domain: types, constants, predicate signature and action schemas
/// in declaration order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Domain {
    pub name: Name,
    pub types: BTreeSet<Name>,
    pub constants: ObjectTable,
    pub signature: Signature,
    pub actions: Vec<ActionSchema>,
}

impl Domain {
    pub fn action(&self, name: &Name) -> Option<&ActionSchema> {
        self.actions.iter().find(|a| &a.name == name)
    }

    /// Problem objects merged with domain constants.
    pub fn merged_objects(&self, problem_objects: &ObjectTable) -> ObjectTable {
        let mut merged = self.constants.clone();
        for (o, t) in problem_objects.iter() {
            merged.insert(o.clone(), t.clone());
        }
        merged
    }
}

/// A parsed problem: typed objects, positive init atoms, TILs sorted by time,
/// and the objective literal set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    pub name: Name,
    pub domain: Name,
    pub objects: ObjectTable,
    pub init: BTreeSet<Atom>,
    pub tils: Vec<(Tick, Literal)>,
    pub objective: Vec<Literal>,
}

// ---- shared reader helpers -------------------------------------------------

/// Parses `x y - t z - u` typed lists. Every name must be typed.
fn parse_typed_list(items: &[Sexp]) -> Result<Vec<(Name, Name)>, ParseError> {
    let mut out = Vec::new();
    let mut pending: Vec<(Name, Pos)> = Vec::new();
    let mut iter = items.iter();
    while let Some(item) = iter.next() {
        let sym = item.expect_sym("a name or `-`")?;
        if sym == "-" {
            let ty = iter
                .next()
                .ok_or_else(|| ParseError::at(item.pos(), "expected type after `-`".into()))?;
            let ty = Name::new(ty.expect_sym("a type name")?);
            if pending.is_empty() {
                return Err(ParseError::at(item.pos(), "`-` without preceding names".into()));
            }
            for (name, _) in pending.drain(..) {
                out.push((name, ty.clone()));
            }
        } else {
            pending.push((Name::new(sym), item.pos()));
        }
    }
    if let Some((name, pos)) = pending.first() {
        return Err(ParseError::at(*pos, format!("`{name}` has no declared type")));
    }
    Ok(out)
}

/// Parses `(pred t1 t2)` into an atom pattern.
fn parse_atom_pattern(sexp: &Sexp) -> Result<AtomPattern, ParseError> {
    let items = sexp.expect_list("an atom")?;
    let head = items
        .first()
        .ok_or_else(|| ParseError::at(sexp.pos(), "empty atom".into()))?;
    let pred = Name::new(head.expect_sym("a predicate name")?);
    let mut args = Vec::new();
    for item in &items[1..] {
        args.push(Term::parse(item.expect_sym("an argument")?));
    }
    Ok(AtomPattern { pred, args })
}

/// Parses a literal pattern: `(pred ...)` or `(not (pred ...))`.
fn parse_literal_pattern(sexp: &Sexp) -> Result<LiteralPattern, ParseError> {
    let items = sexp.expect_list("a literal")?;
    if items.first().and_then(Sexp::as_sym) == Some("not") {
        if items.len() != 2 {
            return Err(ParseError::at(sexp.pos(), "`not` takes exactly one atom".into()));
        }
        return Ok(LiteralPattern { atom: parse_atom_pattern(&items[1])?, positive: false });
    }
    Ok(LiteralPattern { atom: parse_atom_pattern(sexp)?, positive: true })
}

/// Parses a condition: a single literal or an `(and ...)` of literals.
/// Rejects the constructs outside the subset with a targeted diagnostic.
fn parse_condition(sexp: &Sexp) -> Result<Vec<LiteralPattern>, ParseError> {
    let items = sexp.expect_list("a condition")?;
    match items.first().and_then(Sexp::as_sym) {
        Some("and") => items[1..].iter().map(parse_condition_literal).collect(),
        Some(_) | None => Ok(vec![parse_condition_literal(sexp)?]),
    }
}

fn parse_condition_literal(sexp: &Sexp) -> Result<LiteralPattern, ParseError> {
    if let Some(items) = sexp.as_list() {
        if let Some(head) = items.first().and_then(Sexp::as_sym) {
            let unsupported = match head {
                "or" => Some("disjunctive conditions"),
                "forall" | "exists" => Some("quantified conditions"),
                "imply" => Some("conditional formulas"),
                "when" => Some("conditional effects"),
                "and" => Some("nested conjunctions"),
                ">" | "<" | ">=" | "<=" | "=" => Some("numeric/equality conditions"),
                _ => None,
            };
            if let Some(what) = unsupported {
                return Err(ParseError::at(
                    sexp.pos(),
                    format!("{what} are not supported by this PDDL subset"),
                ));
            }
        }
    }
    parse_literal_pattern(sexp)
}

/// Splits an effect condition into add and delete atom patterns.
fn parse_effect(sexp: &Sexp) -> Result<(Vec<AtomPattern>, Vec<AtomPattern>), ParseError> {
    let mut adds = Vec::new();
    let mut dels = Vec::new();
    let items = sexp.expect_list("an effect")?;
    let parts: Vec<&Sexp> = match items.first().and_then(Sexp::as_sym) {
        Some("and") => items[1..].iter().collect(),
        _ => vec![sexp],
    };
    for part in parts {
        if let Some(inner) = part.as_list() {
            match inner.first().and_then(Sexp::as_sym) {
                Some("increase") | Some("decrease") | Some("assign") => {
                    return Err(ParseError::at(
                        part.pos(),
                        "numeric fluent effects are not supported by this PDDL subset".into(),
                    ));
                }
                Some("when") | Some("forall") => {
                    return Err(ParseError::at(
                        part.pos(),
                        "conditional/quantified effects are not supported by this PDDL subset"
                            .into(),
                    ));
                }
                _ => {}
            }
        }
        let literal = parse_literal_pattern(part)?;
        if literal.positive {
            adds.push(literal.atom);
        } else {
            dels.push(literal.atom);
        }
    }
    Ok((adds, dels))
}
