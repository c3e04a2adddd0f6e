//! Goal-operator (`.gop`) file reader.
//!
//! Each operator mirrors the classic goal-operator layout: class, parameter
//! names/types, lookahead time, precondition and objective conditions, plus
//! est-duration, promises, resources and priority. Conditions may be written
//! directly or wrapped in a string.

use super::sexp::{read_all, Sexp};
use super::{parse_condition, parse_literal_pattern, ParseError, Pos};
use crate::goals::{GoalOperator, PromiseTemplate};
use crate::time::Tick;
use crate::world::{Name, Term};

/// Parses every `(goal-operator ...)` form in the text, in file order.
pub fn parse_operators(text: &str) -> Result<Vec<GoalOperator>, ParseError> {
    read_all(text)?.iter().map(parse_operator).collect()
}

fn parse_operator(form: &Sexp) -> Result<GoalOperator, ParseError> {
    let items = form.expect_list("(goal-operator ...)")?;
    if items.first().and_then(Sexp::as_sym) != Some("goal-operator") {
        return Err(ParseError::at(form.pos(), "expected (goal-operator ...)".into()));
    }

    let mut class = None;
    let mut param_names: Option<Vec<Name>> = None;
    let mut param_types: Option<Vec<Name>> = None;
    let mut lookahead = None;
    let mut est_duration = None;
    let mut priority = 0i64;
    let mut resources = Vec::new();
    let mut precondition = None;
    let mut objective = None;
    let mut promises = Vec::new();

    for entry in &items[1..] {
        let fields = entry.expect_list("an operator field")?;
        let head = fields
            .first()
            .ok_or_else(|| ParseError::at(entry.pos(), "empty operator field".into()))?;
        let rest = &fields[1..];
        match head.expect_sym("a field name")? {
            "class" => class = Some(Name::new(one_sym(rest, entry.pos(), "class name")?)),
            "param-names" => {
                param_names =
                    Some(rest.iter().map(|s| Ok(Name::new(s.expect_sym("a parameter name")?)))
                        .collect::<Result<_, ParseError>>()?)
            }
            "param-types" => {
                param_types =
                    Some(rest.iter().map(|s| Ok(Name::new(s.expect_sym("a type name")?)))
                        .collect::<Result<_, ParseError>>()?)
            }
            "param-quantified" => {
                if !rest.is_empty() {
                    return Err(ParseError::at(
                        entry.pos(),
                        "param-quantified must be empty (unsupported feature)".into(),
                    ));
                }
            }
            "lookahead-time" => lookahead = Some(Tick(one_int(rest, entry.pos(), "lookahead")?)),
            "est-duration" => {
                est_duration = Some(Tick(one_int(rest, entry.pos(), "est-duration")?))
            }
            "priority" => priority = one_int(rest, entry.pos(), "priority")? as i64,
            "resources" => {
                for term in rest {
                    resources.push(Term::parse(term.expect_sym("a resource pattern")?));
                }
            }
            "preconditions" => precondition = Some(parse_embedded_condition(rest, entry.pos())?),
            "objective" => objective = Some(parse_embedded_condition(rest, entry.pos())?),
            "promises" => promises = parse_promises(rest, entry.pos())?,
            other => {
                return Err(ParseError::at(entry.pos(), format!("unknown operator field {other}")))
            }
        }
    }

    let pos = form.pos();
    let missing = |what: &str| ParseError::at(pos, format!("goal-operator is missing {what}"));
    let class = class.ok_or_else(|| missing("(class ...)"))?;
    let names = param_names.ok_or_else(|| missing("(param-names ...)"))?;
    let types = param_types.ok_or_else(|| missing("(param-types ...)"))?;
    if names.len() != types.len() {
        return Err(ParseError::at(
            pos,
            format!(
                "operator {class}: {} param-names but {} param-types",
                names.len(),
                types.len()
            ),
        ));
    }

    let operator = GoalOperator {
        class_name: class,
        params: names.into_iter().zip(types).collect(),
        lookahead: lookahead.ok_or_else(|| missing("(lookahead-time ...)"))?,
        precondition: precondition.ok_or_else(|| missing("(preconditions ...)"))?,
        objective: objective.ok_or_else(|| missing("(objective ...)"))?,
        promise_templates: promises,
        est_duration: est_duration.ok_or_else(|| missing("(est-duration ...)"))?,
        required_resources: resources,
        priority,
    };
    operator.validate().map_err(|e| ParseError::at(pos, e.to_string()))?;
    Ok(operator)
}

fn one_sym<'a>(rest: &'a [Sexp], pos: Pos, what: &str) -> Result<&'a str, ParseError> {
    match rest {
        [single] => single.expect_sym(what),
        _ => Err(ParseError::at(pos, format!("expected exactly one {what}"))),
    }
}

fn one_int(rest: &[Sexp], pos: Pos, what: &str) -> Result<u64, ParseError> {
    match rest {
        [single] => single.expect_int(what),
        _ => Err(ParseError::at(pos, format!("expected exactly one {what}"))),
    }
}

/// A condition field body: either a quoted string containing the condition
/// or the condition written directly.
fn parse_embedded_condition(
    rest: &[Sexp],
    pos: Pos,
) -> Result<Vec<crate::world::LiteralPattern>, ParseError> {
    let sexps = embedded_sexps(rest, pos)?;
    match sexps.as_slice() {
        [single] => parse_condition(single),
        _ => Err(ParseError::at(pos, "expected a single condition".into())),
    }
}

/// Promise entries: literals, optionally wrapped as `(at <offset> <literal>)`
/// to override the default offset (the operator's est-duration).
fn parse_promises(rest: &[Sexp], pos: Pos) -> Result<Vec<PromiseTemplate>, ParseError> {
    let sexps = embedded_sexps(rest, pos)?;
    let entries: Vec<&Sexp> = match sexps.as_slice() {
        [Sexp::List(items, _)] if items.first().and_then(Sexp::as_sym) == Some("and") => {
            items[1..].iter().collect()
        }
        _ => sexps.iter().collect(),
    };
    entries
        .into_iter()
        .map(|entry| {
            let items = entry.expect_list("a promise entry")?;
            let is_offset = items.first().and_then(Sexp::as_sym) == Some("at")
                && matches!(items.get(1), Some(Sexp::Int(..)));
            if is_offset {
                if items.len() != 3 {
                    return Err(ParseError::at(
                        entry.pos(),
                        "expected (at <offset> <literal>)".into(),
                    ));
                }
                let offset = Tick(items[1].expect_int("an offset")?);
                let literal = parse_literal_pattern(&items[2])?;
                Ok(PromiseTemplate { literal, offset: Some(offset) })
            } else {
                Ok(PromiseTemplate { literal: parse_literal_pattern(entry)?, offset: None })
            }
        })
        .collect()
}

/// Resolves a field body to s-expressions, re-reading string contents.
fn embedded_sexps(rest: &[Sexp], pos: Pos) -> Result<Vec<Sexp>, ParseError> {
    match rest {
        [Sexp::Str(text, _)] => read_all(text),
        [] => Err(ParseError::at(pos, "empty condition".into())),
        _ => Ok(rest.to_vec()),
    }
}
