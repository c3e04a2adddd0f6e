//! Domain file reader.

use std::collections::BTreeSet;

use super::sexp::{read_all, Sexp};
use super::{parse_condition, parse_effect, parse_typed_list, ActionSchema, Domain, ParseError};
use crate::time::Tick;
use crate::world::{Name, ObjectTable, Signature};

const SUPPORTED_REQUIREMENTS: &[&str] = &[
    ":strips",
    ":typing",
    ":negative-preconditions",
    ":timed-initial-literals",
];

/// Parses a domain file. Reports the first error with its location.
pub fn parse_domain(text: &str) -> Result<Domain, ParseError> {
    let top = read_all(text)?;
    let [form] = top.as_slice() else {
        let pos = top.get(1).map(Sexp::pos).unwrap_or_default();
        return Err(ParseError::at(pos, "expected exactly one (define ...) form".into()));
    };
    let items = form.expect_list("(define (domain ...) ...)")?;
    if items.first().and_then(Sexp::as_sym) != Some("define") {
        return Err(ParseError::at(form.pos(), "expected (define ...)".into()));
    }
    let header = items
        .get(1)
        .ok_or_else(|| ParseError::at(form.pos(), "missing (domain <name>)".into()))?
        .expect_list("(domain <name>)")?;
    if header.first().and_then(Sexp::as_sym) != Some("domain") || header.len() != 2 {
        return Err(ParseError::at(items[1].pos(), "expected (domain <name>)".into()));
    }
    let name = Name::new(header[1].expect_sym("a domain name")?);

    let mut domain = Domain {
        name,
        types: BTreeSet::new(),
        constants: ObjectTable::new(),
        signature: Signature::default(),
        actions: Vec::new(),
    };

    for section in &items[2..] {
        let entries = section.expect_list("a domain section")?;
        let head = entries
            .first()
            .ok_or_else(|| ParseError::at(section.pos(), "empty domain section".into()))?;
        match head.expect_sym("a section keyword")? {
            ":requirements" => {
                for req in &entries[1..] {
                    let sym = req.expect_sym("a requirement")?;
                    if !SUPPORTED_REQUIREMENTS.contains(&sym) {
                        return Err(ParseError::at(
                            req.pos(),
                            format!("requirement {sym} is not supported by this PDDL subset"),
                        ));
                    }
                }
            }
            ":types" => {
                for ty in &entries[1..] {
                    let sym = ty.expect_sym("a type name")?;
                    if sym == "-" {
                        return Err(ParseError::at(
                            ty.pos(),
                            "type hierarchies are not supported by this PDDL subset".into(),
                        ));
                    }
                    domain.types.insert(Name::new(sym));
                }
            }
            ":constants" => {
                for (object, ty) in parse_typed_list(&entries[1..])? {
                    check_type(&domain, &ty, section.pos())?;
                    domain.constants.insert(object, ty);
                }
            }
            ":predicates" => {
                for decl in &entries[1..] {
                    let sig = decl.expect_list("a predicate declaration")?;
                    let head = sig
                        .first()
                        .ok_or_else(|| ParseError::at(decl.pos(), "empty predicate".into()))?;
                    let pred = Name::new(head.expect_sym("a predicate name")?);
                    if domain.signature.predicates.contains_key(&pred) {
                        return Err(ParseError::at(
                            decl.pos(),
                            format!("duplicate predicate {pred}"),
                        ));
                    }
                    let params = parse_typed_list(&sig[1..])?;
                    for (_, ty) in &params {
                        check_type(&domain, ty, decl.pos())?;
                    }
                    domain
                        .signature
                        .predicates
                        .insert(pred, params.into_iter().map(|(_, ty)| ty).collect());
                }
            }
            ":action" => {
                let action = parse_action(&domain, entries, section.pos())?;
                if domain.actions.iter().any(|a| a.name == action.name) {
                    return Err(ParseError::at(
                        section.pos(),
                        format!("duplicate action {}", action.name),
                    ));
                }
                domain.actions.push(action);
            }
            ":durative-action" => {
                return Err(ParseError::at(
                    section.pos(),
                    "durative actions are not supported; use :action with :duration".into(),
                ));
            }
            ":functions" => {
                return Err(ParseError::at(
                    section.pos(),
                    "numeric fluents are not supported by this PDDL subset".into(),
                ));
            }
            other => {
                return Err(ParseError::at(
                    section.pos(),
                    format!("unknown domain section {other}"),
                ));
            }
        }
    }
    Ok(domain)
}

fn check_type(domain: &Domain, ty: &Name, pos: super::Pos) -> Result<(), ParseError> {
    if !domain.types.contains(ty) {
        return Err(ParseError::at(pos, format!("unknown type {ty}")));
    }
    Ok(())
}

fn parse_action(
    domain: &Domain,
    entries: &[Sexp],
    pos: super::Pos,
) -> Result<ActionSchema, ParseError> {
    let name_sexp = entries
        .get(1)
        .ok_or_else(|| ParseError::at(pos, "missing action name".into()))?;
    let name = Name::new(name_sexp.expect_sym("an action name")?);

    let mut params = None;
    let mut precondition = None;
    let mut effect = None;
    let mut duration = Tick(1);

    let mut iter = entries[2..].iter();
    while let Some(key) = iter.next() {
        let value = iter.next().ok_or_else(|| {
            ParseError::at(key.pos(), format!("missing value after {}", key_name(key)))
        })?;
        match key.expect_sym("an action keyword")? {
            ":parameters" => {
                let list = value.expect_list("a parameter list")?;
                let mut typed = Vec::new();
                for (param, ty) in parse_typed_list(list)? {
                    check_type(domain, &ty, value.pos())?;
                    let var = param.as_str().strip_prefix('?').ok_or_else(|| {
                        ParseError::at(
                            value.pos(),
                            format!("parameter {param} must start with `?`"),
                        )
                    })?;
                    typed.push((Name::new(var), ty));
                }
                params = Some(typed);
            }
            ":precondition" => precondition = Some(parse_condition(value)?),
            ":effect" => effect = Some(parse_effect(value)?),
            ":duration" => {
                let n = value.expect_int("a duration in ticks")?;
                if n == 0 {
                    return Err(ParseError::at(
                        value.pos(),
                        "action duration must be at least 1 tick".into(),
                    ));
                }
                duration = Tick(n);
            }
            other => {
                return Err(ParseError::at(key.pos(), format!("unknown action keyword {other}")));
            }
        }
    }

    let params = params
        .ok_or_else(|| ParseError::at(pos, format!("action {name} is missing :parameters")))?;
    let precondition = precondition
        .ok_or_else(|| ParseError::at(pos, format!("action {name} is missing :precondition")))?;
    let (adds, dels) = effect
        .ok_or_else(|| ParseError::at(pos, format!("action {name} is missing :effect")))?;

    let schema = ActionSchema { name, params, precondition, adds, dels, duration };
    validate_schema_vars(&schema, pos)?;
    Ok(schema)
}

fn key_name(sexp: &Sexp) -> String {
    sexp.as_sym().unwrap_or("<non-symbol>").to_string()
}

fn validate_schema_vars(schema: &ActionSchema, pos: super::Pos) -> Result<(), ParseError> {
    let declared: BTreeSet<&Name> = schema.params.iter().map(|(n, _)| n).collect();
    let all_vars = schema
        .precondition
        .iter()
        .flat_map(|l| l.variables())
        .chain(schema.adds.iter().flat_map(|a| a.variables()))
        .chain(schema.dels.iter().flat_map(|a| a.variables()));
    for v in all_vars {
        if !declared.contains(v) {
            return Err(ParseError::at(
                pos,
                format!("action {}: variable ?{v} is not a parameter", schema.name),
            ));
        }
    }
    Ok(())
}
