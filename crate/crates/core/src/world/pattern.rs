//! Literal patterns: literals over variables (`?x`) and constants, ground by
//! a parameter binding. Shared by goal operators and action schemas.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Atom, Literal, Name};

/// A variable-to-object assignment.
pub type Binding = BTreeMap<Name, Name>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PatternError {
    #[error("unbound variable ?{0}")]
    UnboundVariable(Name),
}

/// A variable or constant term. Variables are written `?name` in text form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Term {
    Var(Name),
    Const(Name),
}

impl Term {
    /// Parses `?x` as a variable, anything else as a constant.
    pub fn parse(token: &str) -> Term {
        match token.strip_prefix('?') {
            Some(var) => Term::Var(Name::new(var)),
            None => Term::Const(Name::new(token)),
        }
    }

    pub fn resolve(&self, binding: &Binding) -> Result<Name, PatternError> {
        match self {
            Term::Const(c) => Ok(c.clone()),
            Term::Var(v) => binding
                .get(v)
                .cloned()
                .ok_or_else(|| PatternError::UnboundVariable(v.clone())),
        }
    }

    pub fn as_var(&self) -> Option<&Name> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "?{v}"),
            Term::Const(c) => write!(f, "{c}"),
        }
    }
}

/// An atom over terms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AtomPattern {
    pub pred: Name,
    pub args: Vec<Term>,
}

impl AtomPattern {
    pub fn ground(&self, binding: &Binding) -> Result<Atom, PatternError> {
        let args = self
            .args
            .iter()
            .map(|t| t.resolve(binding))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Atom { pred: self.pred.clone(), args })
    }

    pub fn variables(&self) -> impl Iterator<Item = &Name> + '_ {
        self.args.iter().filter_map(Term::as_var)
    }
}

impl fmt::Display for AtomPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.pred)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

/// A positive or negative atom pattern.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LiteralPattern {
    pub atom: AtomPattern,
    pub positive: bool,
}

impl LiteralPattern {
    pub fn ground(&self, binding: &Binding) -> Result<Literal, PatternError> {
        Ok(Literal { atom: self.atom.ground(binding)?, positive: self.positive })
    }

    pub fn variables(&self) -> impl Iterator<Item = &Name> + '_ {
        self.atom.variables()
    }
}

impl fmt::Display for LiteralPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "{}", self.atom)
        } else {
            write!(f, "(not {})", self.atom)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binding(pairs: &[(&str, &str)]) -> Binding {
        pairs.iter().map(|(k, v)| (Name::new(k), Name::new(v))).collect()
    }

    #[test]
    fn grounds_variables_and_constants() {
        let pat = AtomPattern {
            pred: Name::new("machine-in-state"),
            args: vec![Term::parse("?m"), Term::parse("READY")],
        };
        let atom = pat.ground(&binding(&[("m", "M1")])).unwrap();
        assert_eq!(atom.to_string(), "(machine-in-state M1 READY)");
    }

    #[test]
    fn unbound_variable_is_an_error() {
        let pat = AtomPattern { pred: Name::new("p"), args: vec![Term::parse("?x")] };
        assert_eq!(
            pat.ground(&Binding::new()),
            Err(PatternError::UnboundVariable(Name::new("x")))
        );
    }
}
