use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::Elem;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantifier {
    Forall,
    Exists,
}

impl fmt::Display for Quantifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Quantifier::Forall => "forall",
            Quantifier::Exists => "exists",
        })
    }
}

/// An atom argument: a variable name or a domain constant.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arg {
    Var(String),
    Const(Elem),
}

impl Arg {
    pub fn var(name: impl Into<String>) -> Arg {
        Arg::Var(name.into())
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Arg::Var(v) => Some(v),
            Arg::Const(_) => None,
        }
    }
}

impl fmt::Display for Arg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arg::Var(v) => f.write_str(v),
            Arg::Const(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Atom {
    Rel { name: String, args: Vec<Arg> },
    Eq(Arg, Arg),
}

impl Atom {
    pub fn rel(name: impl Into<String>, args: Vec<Arg>) -> Atom {
        Atom::Rel {
            name: name.into(),
            args,
        }
    }

    pub fn args(&self) -> Vec<&Arg> {
        match self {
            Atom::Rel { args, .. } => args.iter().collect(),
            Atom::Eq(a, b) => vec![a, b],
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Rel { name, args } => {
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
            Atom::Eq(a, b) => write!(f, "{a}={b}"),
        }
    }
}

/// A prenex positive-Horn sentence: quantifier prefix over a conjunction of atoms.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentencePH {
    pub prefix: Vec<(Quantifier, String)>,
    pub matrix: Vec<Atom>,
}

impl SentencePH {
    pub fn new(prefix: Vec<(Quantifier, String)>, matrix: Vec<Atom>) -> Result<Self> {
        let s = SentencePH { prefix, matrix };
        s.validate()?;
        Ok(s)
    }

    /// Every variable is quantified exactly once and every matrix variable is bound.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for (_, v) in &self.prefix {
            if !seen.insert(v.as_str()) {
                return Err(Error::Shape(format!("variable `{v}` quantified twice")));
            }
        }
        for atom in &self.matrix {
            for arg in atom.args() {
                if let Arg::Var(v) = arg {
                    if !seen.contains(v.as_str()) {
                        return Err(Error::Unbound(v.clone()));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn universals(&self) -> impl Iterator<Item = &str> {
        self.prefix
            .iter()
            .filter(|(q, _)| *q == Quantifier::Forall)
            .map(|(_, v)| v.as_str())
    }

    pub fn existentials(&self) -> impl Iterator<Item = &str> {
        self.prefix
            .iter()
            .filter(|(q, _)| *q == Quantifier::Exists)
            .map(|(_, v)| v.as_str())
    }

    pub fn quantifier_of(&self, var: &str) -> Option<Quantifier> {
        self.prefix.iter().find(|(_, v)| v == var).map(|(q, _)| *q)
    }

    pub fn position_of(&self, var: &str) -> Option<usize> {
        self.prefix.iter().position(|(_, v)| v == var)
    }
}

impl fmt::Display for SentencePH {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (q, v) in &self.prefix {
            writeln!(f, "{q} {v}")?;
        }
        write!(f, "matrix:")?;
        for (i, a) in self.matrix.iter().enumerate() {
            write!(f, "{}{a}", if i == 0 { " " } else { " & " })?;
        }
        writeln!(f)
    }
}
