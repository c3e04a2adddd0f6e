//! Text syntax for ground atoms and literals: `(pred arg1 arg2)` and
//! `(not (pred ...))`.

use std::str::FromStr;

use super::{Atom, Literal, Name};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid atom/literal syntax: {0}")]
pub struct TextError(pub String);

fn tokenize(s: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut cur = String::new();
    for ch in s.chars() {
        match ch {
            '(' | ')' => {
                if !cur.is_empty() {
                    tokens.push(std::mem::take(&mut cur));
                }
                tokens.push(ch.to_string());
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    tokens.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        tokens.push(cur);
    }
    tokens
}

/// Parses `(pred args...)` starting at `pos`; returns the atom and the index
/// one past its closing paren.
fn parse_atom_at(tokens: &[String], pos: usize, src: &str) -> Result<(Atom, usize), TextError> {
    let err = || TextError(src.to_string());
    if tokens.get(pos).map(String::as_str) != Some("(") {
        return Err(err());
    }
    let pred = match tokens.get(pos + 1) {
        Some(t) if t != "(" && t != ")" => Name::new(t),
        _ => return Err(err()),
    };
    let mut args = Vec::new();
    let mut i = pos + 2;
    loop {
        match tokens.get(i).map(String::as_str) {
            Some(")") => return Ok((Atom { pred, args }, i + 1)),
            Some("(") | None => return Err(err()),
            Some(t) => {
                args.push(Name::new(t));
                i += 1;
            }
        }
    }
}

impl FromStr for Atom {
    type Err = TextError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let tokens = tokenize(s);
        let (atom, end) = parse_atom_at(&tokens, 0, s)?;
        if end != tokens.len() {
            return Err(TextError(s.to_string()));
        }
        Ok(atom)
    }
}

impl FromStr for Literal {
    type Err = TextError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let tokens = tokenize(s);
        let err = || TextError(s.to_string());
        if tokens.first().map(String::as_str) == Some("(")
            && tokens.get(1).map(String::as_str) == Some("not")
        {
            let (atom, end) = parse_atom_at(&tokens, 2, s)?;
            if tokens.get(end).map(String::as_str) != Some(")") || end + 1 != tokens.len() {
                return Err(err());
            }
            Ok(Literal::neg(atom))
        } else {
            let (atom, end) = parse_atom_at(&tokens, 0, s)?;
            if end != tokens.len() {
                return Err(err());
            }
            Ok(Literal::pos(atom))
        }
    }
}
