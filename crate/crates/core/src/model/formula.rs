//! Quantifier-free equality formulas and their DNF restriction.
//!
//! Grammar (variables are `x0`, `x1`, ...; constants are decimal digits):
//!
//! ```text
//! expr  := conj ('|' conj)*
//! conj  := unary ('&' unary)*
//! unary := '!' unary | '(' expr ')' | 'true' | 'false' | var ('=' | '!=') (var | const)
//! ```

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Domain, Elem, Tuple, MAX_MATERIALIZE};
use crate::error::{Error, Result};

/// A positive equality literal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Literal {
    EqVar(usize, usize),
    EqConst(usize, Elem),
}

impl Literal {
    fn eval(self, t: &[Elem]) -> bool {
        match self {
            Literal::EqVar(i, j) => t[i] == t[j],
            Literal::EqConst(i, c) => t[i] == c,
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::EqVar(i, j) => write!(f, "x{i}=x{j}"),
            Literal::EqConst(i, c) => write!(f, "x{i}={c}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formula {
    True,
    False,
    Lit(Literal),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
}

impl Formula {
    pub fn parse(text: &str) -> Result<Formula> {
        let mut p = Parser {
            src: text.as_bytes(),
            pos: 0,
        };
        let f = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("trailing input"));
        }
        Ok(f)
    }

    pub fn eval(&self, t: &[Elem]) -> bool {
        match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Lit(l) => l.eval(t),
            Formula::Not(f) => !f.eval(t),
            Formula::And(fs) => fs.iter().all(|f| f.eval(t)),
            Formula::Or(fs) => fs.iter().any(|f| f.eval(t)),
        }
    }

    pub(crate) fn check_bounds(&self, arity: usize, domain: Domain) -> Result<()> {
        match self {
            Formula::True | Formula::False => Ok(()),
            Formula::Lit(l) => check_literal(*l, arity, domain),
            Formula::Not(f) => f.check_bounds(arity, domain),
            Formula::And(fs) | Formula::Or(fs) => {
                fs.iter().try_for_each(|f| f.check_bounds(arity, domain))
            }
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        // prec: 0 = top, 1 = inside a disjunction, 2 = inside a conjunction
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Lit(l) => write!(f, "{l}"),
            Formula::Not(inner) => {
                write!(f, "!(")?;
                inner.fmt_prec(f, 0)?;
                write!(f, ")")
            }
            Formula::And(fs) if fs.is_empty() => write!(f, "true"),
            Formula::Or(fs) if fs.is_empty() => write!(f, "false"),
            Formula::And(fs) => {
                let wrap = prec >= 1 && fs.len() > 1;
                if wrap {
                    write!(f, "(")?;
                }
                for (i, g) in fs.iter().enumerate() {
                    if i > 0 {
                        write!(f, "&")?;
                    }
                    g.fmt_prec(f, 2)?;
                }
                if wrap {
                    write!(f, ")")?;
                }
                Ok(())
            }
            Formula::Or(fs) => {
                let wrap = prec >= 2 && fs.len() > 1;
                if wrap {
                    write!(f, "(")?;
                }
                for (i, g) in fs.iter().enumerate() {
                    if i > 0 {
                        write!(f, "|")?;
                    }
                    g.fmt_prec(f, 1)?;
                }
                if wrap {
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

fn check_literal(l: Literal, arity: usize, domain: Domain) -> Result<()> {
    let (i, j, c) = match l {
        Literal::EqVar(i, j) => (i, j, None),
        Literal::EqConst(i, c) => (i, i, Some(c)),
    };
    if i.max(j) >= arity {
        return Err(Error::Shape(format!(
            "variable x{} out of range for arity {arity}",
            i.max(j)
        )));
    }
    if let Some(c) = c {
        domain.check(c as usize)?;
    }
    Ok(())
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> Error {
        Error::syntax(1, self.pos + 1, msg)
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Formula> {
        let mut parts = vec![self.conj()?];
        while self.eat(b'|') {
            parts.push(self.conj()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Formula::Or(parts)
        })
    }

    fn conj(&mut self) -> Result<Formula> {
        let mut parts = vec![self.unary()?];
        while self.eat(b'&') {
            parts.push(self.unary()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Formula::And(parts)
        })
    }

    fn keyword(&mut self, word: &str) -> bool {
        self.skip_ws();
        let end = self.pos + word.len();
        if self.src.get(self.pos..end) == Some(word.as_bytes())
            && !self.src.get(end).is_some_and(|b| b.is_ascii_alphanumeric())
        {
            self.pos = end;
            true
        } else {
            false
        }
    }

    fn unary(&mut self) -> Result<Formula> {
        if self.eat(b'!') {
            return Ok(Formula::Not(Box::new(self.unary()?)));
        }
        if self.eat(b'(') {
            let f = self.expr()?;
            if !self.eat(b')') {
                return Err(self.error("expected `)`"));
            }
            return Ok(f);
        }
        if self.keyword("true") {
            return Ok(Formula::True);
        }
        if self.keyword("false") {
            return Ok(Formula::False);
        }
        let lhs = self.var()?;
        let negated = if self.eat(b'!') {
            if !self.eat(b'=') {
                return Err(self.error("expected `=` after `!`"));
            }
            true
        } else if self.eat(b'=') {
            false
        } else {
            return Err(self.error("expected `=` or `!=`"));
        };
        let lit = if self.peek() == Some(b'x') {
            Literal::EqVar(lhs, self.var()?)
        } else {
            let c = self.number()?;
            let c = u8::try_from(c).map_err(|_| self.error("constant too large"))?;
            Literal::EqConst(lhs, c)
        };
        Ok(if negated {
            Formula::Not(Box::new(Formula::Lit(lit)))
        } else {
            Formula::Lit(lit)
        })
    }

    fn var(&mut self) -> Result<usize> {
        if !self.eat(b'x') {
            return Err(self.error("expected variable `x<i>`"));
        }
        // no whitespace between `x` and its index
        if !self.src.get(self.pos).is_some_and(u8::is_ascii_digit) {
            return Err(self.error("expected variable index"));
        }
        self.number()
    }

    fn number(&mut self) -> Result<usize> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected a number"));
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| self.error("number too large"))
    }
}

/// A disjunction of conjunctions of positive equality literals.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dnf {
    pub terms: Vec<Vec<Literal>>,
}

/// Union-find view of one conjunction: equivalence classes of variables,
/// each possibly pinned to a constant.
struct Classes {
    rep: Vec<usize>,
    pinned: Vec<Option<Elem>>,
}

impl Classes {
    fn of(term: &[Literal], arity: usize) -> Option<Classes> {
        let mut parent: Vec<usize> = (0..arity).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut y = x;
            while p[y] != r {
                let next = p[y];
                p[y] = r;
                y = next;
            }
            r
        }
        for l in term {
            if let Literal::EqVar(i, j) = *l {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        let rep: Vec<usize> = (0..arity).map(|i| find(&mut parent, i)).collect();
        let mut pinned = vec![None; arity];
        for l in term {
            if let Literal::EqConst(i, c) = *l {
                match pinned[rep[i]] {
                    None => pinned[rep[i]] = Some(c),
                    Some(d) if d == c => {}
                    Some(_) => return None,
                }
            }
        }
        Some(Classes { rep, pinned })
    }

    /// All value assignments to `coords` consistent with this conjunction.
    fn project(&self, coords: &[usize], domain: Domain, out: &mut BTreeSet<Tuple>) {
        let mut free: Vec<usize> = Vec::new();
        for &c in coords {
            let r = self.rep[c];
            if self.pinned[r].is_none() && !free.contains(&r) {
                free.push(r);
            }
        }
        for vals in domain.tuples(free.len()) {
            let t = coords
                .iter()
                .map(|&c| {
                    let r = self.rep[c];
                    self.pinned[r].unwrap_or_else(|| vals[free.iter().position(|&f| f == r).unwrap()])
                })
                .collect();
            out.insert(t);
        }
    }

    /// Rebuild a conjunction over all variables except `drop`, renumbered.
    fn without(&self, drop: usize) -> Vec<Literal> {
        let arity = self.rep.len();
        let shift = |i: usize| if i > drop { i - 1 } else { i };
        let mut out = Vec::new();
        for r in 0..arity {
            let members: Vec<usize> = (0..arity)
                .filter(|&i| self.rep[i] == r && i != drop)
                .collect();
            let Some(&first) = members.first() else {
                continue;
            };
            for &m in &members[1..] {
                out.push(Literal::EqVar(shift(first), shift(m)));
            }
            if let Some(c) = self.pinned[r] {
                out.push(Literal::EqConst(shift(first), c));
            }
        }
        out
    }
}

impl Dnf {
    /// The always-true DNF (one empty conjunct).
    pub fn top() -> Dnf {
        Dnf {
            terms: vec![Vec::new()],
        }
    }

    pub fn parse(text: &str) -> Result<Dnf> {
        Dnf::from_formula(&Formula::parse(text)?)
    }

    /// Accepts only formulas that are syntactically in DNF.
    pub fn from_formula(f: &Formula) -> Result<Dnf> {
        fn term(f: &Formula) -> Result<Vec<Literal>> {
            match f {
                Formula::True => Ok(Vec::new()),
                Formula::Lit(l) => Ok(vec![*l]),
                Formula::And(fs) => fs
                    .iter()
                    .map(|g| match g {
                        Formula::Lit(l) => Ok(*l),
                        _ => Err(Error::Shape("DNF conjunct may contain only equality literals".into())),
                    })
                    .collect(),
                _ => Err(Error::Shape("not a DNF conjunct".into())),
            }
        }
        let terms = match f {
            Formula::False => Vec::new(),
            Formula::Or(fs) => fs.iter().map(term).collect::<Result<_>>()?,
            other => vec![term(other)?],
        };
        Ok(Dnf { terms })
    }

    pub fn from_tuples<'a>(tuples: impl IntoIterator<Item = &'a Tuple>) -> Dnf {
        Dnf {
            terms: tuples
                .into_iter()
                .map(|t| {
                    t.iter()
                        .enumerate()
                        .map(|(i, &c)| Literal::EqConst(i, c))
                        .collect()
                })
                .collect(),
        }
    }

    pub fn to_formula(&self) -> Formula {
        let terms: Vec<Formula> = self
            .terms
            .iter()
            .map(|t| match t.len() {
                0 => Formula::True,
                1 => Formula::Lit(t[0]),
                _ => Formula::And(t.iter().copied().map(Formula::Lit).collect()),
            })
            .collect();
        match terms.len() {
            0 => Formula::False,
            1 => terms.into_iter().next().unwrap(),
            _ => Formula::Or(terms),
        }
    }

    pub fn eval(&self, t: &[Elem]) -> bool {
        self.terms
            .iter()
            .any(|term| term.iter().all(|l| l.eval(t)))
    }

    pub(crate) fn check_bounds(&self, arity: usize, domain: Domain) -> Result<()> {
        self.terms
            .iter()
            .flatten()
            .try_for_each(|l| check_literal(*l, arity, domain))
    }

    /// All satisfying tuples, generated conjunct by conjunct.
    pub fn solutions(&self, arity: usize, domain: Domain) -> Result<BTreeSet<Tuple>> {
        domain.power_within(arity, MAX_MATERIALIZE)?;
        let coords: Vec<usize> = (0..arity).collect();
        Ok(self.project(arity, &coords, domain))
    }

    pub fn project(&self, arity: usize, coords: &[usize], domain: Domain) -> BTreeSet<Tuple> {
        let mut out = BTreeSet::new();
        for term in &self.terms {
            if let Some(cl) = Classes::of(term, arity) {
                cl.project(coords, domain, &mut out);
            }
        }
        out
    }

    pub fn is_unsatisfiable(&self, arity: usize, _domain: Domain) -> bool {
        self.terms.iter().all(|t| Classes::of(t, arity).is_none())
    }

    fn arity_hint(&self) -> usize {
        self.terms
            .iter()
            .flatten()
            .map(|l| match *l {
                Literal::EqVar(i, j) => i.max(j) + 1,
                Literal::EqConst(i, _) => i + 1,
            })
            .max()
            .unwrap_or(0)
    }

    /// Existentially quantify variable `coord`, renumbering later variables.
    pub fn exists(&self, coord: usize) -> Dnf {
        let arity = self.arity_hint().max(coord + 1);
        Dnf {
            terms: self
                .terms
                .iter()
                .filter_map(|t| Classes::of(t, arity).map(|cl| cl.without(coord)))
                .collect(),
        }
    }

    /// Substitute `value` for variable `coord` and remove it.
    pub fn fix(&self, coord: usize, value: Elem) -> Dnf {
        let arity = self.arity_hint().max(coord + 1);
        Dnf {
            terms: self
                .terms
                .iter()
                .filter_map(|t| {
                    let mut t = t.clone();
                    t.push(Literal::EqConst(coord, value));
                    Classes::of(&t, arity).map(|cl| cl.without(coord))
                })
                .collect(),
        }
    }
}

impl fmt::Display for Dnf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "false");
        }
        for (i, term) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, "|")?;
            }
            match term.len() {
                0 => write!(f, "true")?,
                1 => write!(f, "{}", term[0])?,
                _ => {
                    write!(f, "(")?;
                    for (j, l) in term.iter().enumerate() {
                        if j > 0 {
                            write!(f, "&")?;
                        }
                        write!(f, "{l}")?;
                    }
                    write!(f, ")")?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_print() {
        let f = Formula::parse("(x0=0 & x1=0) | (x0=1&x1=1)").unwrap();
        assert_eq!(f.to_string(), "(x0=0&x1=0)|(x0=1&x1=1)");
        let g = Formula::parse("!(x0=x1)").unwrap();
        assert_eq!(g.to_string(), "!(x0=x1)");
        assert_eq!(Formula::parse("x0!=x1").unwrap(), g);
    }

    #[test]
    fn syntax_errors_carry_columns() {
        match Formula::parse("x0=1 & ") {
            Err(Error::Syntax { col, .. }) => assert_eq!(col, 8),
            other => panic!("unexpected {other:?}"),
        }
        assert!(Formula::parse("(x0=1").is_err());
        assert!(Formula::parse("y0=1").is_err());
    }

    #[test]
    fn dnf_shape_is_enforced() {
        assert!(Dnf::parse("(x0=0&x1=0)|x2=x1").is_ok());
        assert!(Dnf::parse("!(x0=0)").is_err());
        assert!(Dnf::parse("(x0=0|x1=0)&x2=1").is_err());
        assert_eq!(Dnf::parse("false").unwrap().terms.len(), 0);
        assert_eq!(Dnf::parse("true").unwrap(), Dnf::top());
    }

    #[test]
    fn dnf_display_round_trips() {
        for text in ["(x0=0&x1=0)|(x0=1&x1=1)", "x0=x1|true", "false", "x2=2"] {
            let d = Dnf::parse(text).unwrap();
            assert_eq!(d.to_string(), text);
            assert_eq!(Dnf::parse(&d.to_string()).unwrap(), d);
        }
    }

    #[test]
    fn solutions_match_brute_force() {
        let dom = Domain::new(3).unwrap();
        let d = Dnf::parse("(x0=x2&x1=1)|(x0=0&x2=2)|(x0=1&x0=2)").unwrap();
        let brute: BTreeSet<Tuple> = dom.tuples(3).filter(|t| d.eval(t)).collect();
        assert_eq!(d.solutions(3, dom).unwrap(), brute);
    }
}
