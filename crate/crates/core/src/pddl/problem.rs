//! Problem file reader and emitter. TILs appear in `:init` as
//! `(at <time> <literal>)` with strictly positive times.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::sexp::{read_all, Sexp};
use super::{parse_condition, parse_literal_pattern, Domain, ParseError, Problem};
use crate::time::Tick;
use crate::world::{Literal, LiteralPattern, Name, ObjectTable, Term};

/// Parses a problem file against its domain. Atoms are checked against the
/// predicate signature and the object table (problem objects plus domain
/// constants); TILs are returned sorted by time.
pub fn parse_problem(text: &str, domain: &Domain) -> Result<Problem, ParseError> {
    let top = read_all(text)?;
    let [form] = top.as_slice() else {
        let pos = top.get(1).map(Sexp::pos).unwrap_or_default();
        return Err(ParseError::at(pos, "expected exactly one (define ...) form".into()));
    };
    let items = form.expect_list("(define (problem ...) ...)")?;
    if items.first().and_then(Sexp::as_sym) != Some("define") {
        return Err(ParseError::at(form.pos(), "expected (define ...)".into()));
    }
    let header = items
        .get(1)
        .ok_or_else(|| ParseError::at(form.pos(), "missing (problem <name>)".into()))?
        .expect_list("(problem <name>)")?;
    if header.first().and_then(Sexp::as_sym) != Some("problem") || header.len() != 2 {
        return Err(ParseError::at(items[1].pos(), "expected (problem <name>)".into()));
    }

    let mut problem = Problem {
        name: Name::new(header[1].expect_sym("a problem name")?),
        domain: domain.name.clone(),
        objects: ObjectTable::new(),
        init: BTreeSet::new(),
        tils: Vec::new(),
        objective: Vec::new(),
    };
    let mut init_section: Option<&[Sexp]> = None;
    let mut goal_section: Option<&Sexp> = None;

    for section in &items[2..] {
        let entries = section.expect_list("a problem section")?;
        let head = entries
            .first()
            .ok_or_else(|| ParseError::at(section.pos(), "empty problem section".into()))?;
        match head.expect_sym("a section keyword")? {
            ":domain" => {
                let name = entries
                    .get(1)
                    .ok_or_else(|| ParseError::at(section.pos(), "missing domain name".into()))?
                    .expect_sym("a domain name")?;
                if name != domain.name.as_str() {
                    return Err(ParseError::at(
                        entries[1].pos(),
                        format!("problem requires domain {name}, loaded {}", domain.name),
                    ));
                }
            }
            ":objects" => {
                for (object, ty) in super::parse_typed_list(&entries[1..])? {
                    if !domain.types.contains(&ty) {
                        return Err(ParseError::at(section.pos(), format!("unknown type {ty}")));
                    }
                    problem.objects.insert(object, ty);
                }
            }
            ":init" => init_section = Some(&entries[1..]),
            ":goal" => {
                let goal = entries
                    .get(1)
                    .ok_or_else(|| ParseError::at(section.pos(), "missing goal condition".into()))?;
                if entries.len() != 2 {
                    return Err(ParseError::at(section.pos(), ":goal takes one condition".into()));
                }
                goal_section = Some(goal);
            }
            other => {
                return Err(ParseError::at(
                    section.pos(),
                    format!("unknown problem section {other}"),
                ));
            }
        }
    }

    // Objects must be complete before init/goal atoms are validated.
    let objects = domain.merged_objects(&problem.objects);
    if let Some(entries) = init_section {
        for entry in entries {
            parse_init_entry(entry, domain, &objects, &mut problem)?;
        }
    }
    if let Some(goal) = goal_section {
        for pattern in parse_condition(goal)? {
            problem.objective.push(ground_checked(&pattern, domain, &objects, goal.pos())?);
        }
    }
    problem.tils.sort();
    Ok(problem)
}

/// An `:init` entry is a positive atom or a TIL `(at <time> <literal>)`.
/// `(at ...)` is treated as a TIL exactly when its second element is an
/// integer.
fn parse_init_entry(
    entry: &Sexp,
    domain: &Domain,
    objects: &ObjectTable,
    problem: &mut Problem,
) -> Result<(), ParseError> {
    let items = entry.expect_list("an init entry")?;
    let is_til = items.first().and_then(Sexp::as_sym) == Some("at")
        && matches!(items.get(1), Some(Sexp::Int(..)));
    if is_til {
        if items.len() != 3 {
            return Err(ParseError::at(entry.pos(), "expected (at <time> <literal>)".into()));
        }
        let time = items[1].expect_int("a TIL time")?;
        if time == 0 {
            return Err(ParseError::at(items[1].pos(), "TIL times must be positive".into()));
        }
        let literal = parse_literal_pattern(&items[2])?;
        let ground = ground_checked(&literal, domain, objects, items[2].pos())?;
        problem.tils.push((Tick(time), ground));
        return Ok(());
    }
    let literal = parse_literal_pattern(entry)?;
    if !literal.positive {
        return Err(ParseError::at(
            entry.pos(),
            "init contains only positive atoms (use a TIL for delayed changes)".into(),
        ));
    }
    let ground = ground_checked(&literal, domain, objects, entry.pos())?;
    problem.init.insert(ground.atom);
    Ok(())
}

/// Grounds a variable-free pattern and validates it against the signature.
fn ground_checked(
    pattern: &LiteralPattern,
    domain: &Domain,
    objects: &ObjectTable,
    pos: super::Pos,
) -> Result<Literal, ParseError> {
    for term in &pattern.atom.args {
        if let Term::Var(v) = term {
            return Err(ParseError::at(pos, format!("unexpected variable ?{v}")));
        }
    }
    let literal = pattern
        .ground(&Default::default())
        .map_err(|e| ParseError::at(pos, e.to_string()))?;
    domain
        .signature
        .check_literal(&literal, objects)
        .map_err(|e| ParseError::at(pos, e.to_string()))?;
    Ok(literal)
}

/// Emits a problem in the subset syntax such that
/// `parse_problem(emit_problem(p)) == p`.
pub fn emit_problem(problem: &Problem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "(define (problem {})", problem.name);
    let _ = writeln!(out, "  (:domain {})", problem.domain);
    let _ = writeln!(out, "  (:objects");
    for (object, ty) in problem.objects.iter() {
        let _ = writeln!(out, "    {object} - {ty}");
    }
    let _ = writeln!(out, "  )");
    let _ = writeln!(out, "  (:init");
    for atom in &problem.init {
        let _ = writeln!(out, "    {atom}");
    }
    for (time, literal) in &problem.tils {
        let _ = writeln!(out, "    (at {time} {literal})");
    }
    let _ = writeln!(out, "  )");
    let _ = writeln!(out, "  (:goal (and");
    for literal in &problem.objective {
        let _ = writeln!(out, "    {literal}");
    }
    let _ = writeln!(out, "  ))");
    let _ = writeln!(out, ")");
    out
}
