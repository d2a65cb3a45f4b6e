use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Algebra, Elem, ElemSet, OpTable, Tuple};
use crate::powers::{Origin, Subpower, MAX_POWER};

/// A term over the basic operations of an algebra. Variables are zero-based.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Term {
    Var(usize),
    App(String, Vec<Term>),
}

impl Term {
    pub fn var(i: usize) -> Term {
        Term::Var(i)
    }

    pub fn app(name: impl Into<String>, args: Vec<Term>) -> Term {
        Term::App(name.into(), args)
    }

    /// Parses `s(s(x0,x1),x2)`.
    pub fn parse(text: &str) -> Result<Term> {
        let bytes = text.as_bytes();
        let mut pos = 0;
        let t = parse_term(bytes, &mut pos)?;
        skip_ws(bytes, &mut pos);
        if pos != bytes.len() {
            return Err(Error::syntax(1, pos + 1, "trailing input after term"));
        }
        Ok(t)
    }

    /// Nesting depth of applications; a variable has depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Term::Var(_) => 0,
            Term::App(_, args) => 1 + args.iter().map(Term::depth).max().unwrap_or(0),
        }
    }

    /// One more than the largest variable index (0 for ground terms).
    pub fn min_arity(&self) -> usize {
        match self {
            Term::Var(i) => i + 1,
            Term::App(_, args) => args.iter().map(Term::min_arity).max().unwrap_or(0),
        }
    }

    pub fn check(&self, algebra: &Algebra) -> Result<()> {
        match self {
            Term::Var(_) => Ok(()),
            Term::App(name, args) => {
                let op = algebra.op(name).ok_or_else(|| Error::Unknown(name.clone()))?;
                if op.arity() != args.len() {
                    return Err(Error::Arity {
                        expected: op.arity(),
                        got: args.len(),
                    });
                }
                args.iter().try_for_each(|a| a.check(algebra))
            }
        }
    }

    pub fn eval(&self, algebra: &Algebra, args: &[Elem]) -> Result<Elem> {
        match self {
            Term::Var(i) => args.get(*i).copied().ok_or(Error::Arity {
                expected: i + 1,
                got: args.len(),
            }),
            Term::App(name, children) => {
                let op = algebra.op(name).ok_or_else(|| Error::Unknown(name.clone()))?;
                let vals = children
                    .iter()
                    .map(|c| c.eval(algebra, args))
                    .collect::<Result<Vec<_>>>()?;
                op.apply(&vals)
            }
        }
    }

    /// The term operation of the given arity as a table. Computed bottom-up
    /// on whole columns rather than by pointwise evaluation.
    pub fn flatten(&self, algebra: &Algebra, arity: usize) -> Result<OpTable> {
        self.check(algebra)?;
        if self.min_arity() > arity {
            return Err(Error::Arity {
                expected: arity,
                got: self.min_arity(),
            });
        }
        let d = algebra.domain();
        d.power_within(arity, MAX_POWER)?;
        let rows: Vec<Tuple> = d.tuples(arity).collect();
        let column = self.column(algebra, &rows);
        OpTable::new(d, arity, column)
    }

    fn column(&self, algebra: &Algebra, rows: &[Tuple]) -> Vec<Elem> {
        match self {
            Term::Var(i) => rows.iter().map(|r| r[*i]).collect(),
            Term::App(name, children) => {
                let op = algebra.op(name).expect("checked");
                let cols: Vec<Vec<Elem>> = children.iter().map(|c| c.column(algebra, rows)).collect();
                let mut args = vec![0; cols.len()];
                (0..rows.len())
                    .map(|r| {
                        for (a, c) in args.iter_mut().zip(&cols) {
                            *a = c[r];
                        }
                        op.get(&args)
                    })
                    .collect()
            }
        }
    }

    /// Substitutes `subst[i]` for variable i.
    pub fn substitute(&self, subst: &[Term]) -> Term {
        match self {
            Term::Var(i) => subst[*i].clone(),
            Term::App(name, args) => Term::App(name.clone(), args.iter().map(|a| a.substitute(subst)).collect()),
        }
    }
}

fn skip_ws(b: &[u8], pos: &mut usize) {
    while *pos < b.len() && b[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
}

fn parse_term(b: &[u8], pos: &mut usize) -> Result<Term> {
    skip_ws(b, pos);
    let start = *pos;
    while *pos < b.len() && (b[*pos].is_ascii_alphanumeric() || b[*pos] == b'_' || b[*pos] == b'\'') {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::syntax(1, start + 1, "expected a variable or operation name"));
    }
    let name = std::str::from_utf8(&b[start..*pos]).unwrap();
    skip_ws(b, pos);
    if *pos < b.len() && b[*pos] == b'(' {
        *pos += 1;
        let mut args = Vec::new();
        loop {
            args.push(parse_term(b, pos)?);
            skip_ws(b, pos);
            match b.get(*pos) {
                Some(b',') => *pos += 1,
                Some(b')') => {
                    *pos += 1;
                    break;
                }
                _ => return Err(Error::syntax(1, *pos + 1, "expected `,` or `)`")),
            }
        }
        return Ok(Term::App(name.to_string(), args));
    }
    if let Some(idx) = name.strip_prefix('x') {
        if let Ok(i) = idx.parse() {
            return Ok(Term::Var(i));
        }
    }
    Err(Error::syntax(1, start + 1, format!("`{name}` is neither `xN` nor an application")))
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(i) => write!(f, "x{i}"),
            Term::App(name, args) => {
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CloneBudget {
    /// Maximum nesting depth of generated terms.
    pub depth: usize,
    /// Stop once this many distinct term operations exist.
    pub max_tables: usize,
    /// Maximum argument combinations tried by one composition layer.
    pub max_layer_cost: f64,
}

impl Default for CloneBudget {
    fn default() -> Self {
        CloneBudget {
            depth: 4,
            max_tables: 200_000,
            max_layer_cost: 5e7,
        }
    }
}

/// Term operations of one arity, each with a shortest witness term.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CloneClosure {
    pub arity: usize,
    pub ops: Vec<(OpTable, Term)>,
    /// True when the budget stopped the search before a fixpoint.
    pub exhausted: bool,
}

fn build_term(sp: &Subpower, algebra: &Algebra, i: usize, memo: &mut HashMap<usize, Term>) -> Term {
    if let Some(t) = memo.get(&i) {
        return t.clone();
    }
    let t = match sp.origin(i).expect("tracked") {
        Origin::Seed(v) => Term::Var(*v),
        Origin::App { op, args } => {
            let args = args.clone();
            Term::App(
                algebra.ops()[*op].name.clone(),
                args.iter().map(|&a| build_term(sp, algebra, a as usize, memo)).collect(),
            )
        }
    };
    memo.insert(i, t.clone());
    t
}

/// The k-ary part of the clone generated by the algebra, computed as the
/// subpower of A^(n^k) generated by the projection columns.
pub fn clone_closure(algebra: &Algebra, k: usize, budget: CloneBudget) -> Result<CloneClosure> {
    let d = algebra.domain();
    let rows = d.power_within(k, MAX_POWER)?;
    let all: Vec<Tuple> = d.tuples(k).collect();
    let seeds: Vec<Tuple> = (0..k).map(|i| all.iter().map(|r| r[i]).collect()).collect();
    let mut sp = if d.power(rows).is_some_and(|p| p <= MAX_POWER) {
        Subpower::new(algebra, rows, &seeds, true)?
    } else {
        Subpower::new_sparse(algebra, rows, &seeds, true)?
    };
    let mut exhausted = false;
    while !sp.is_full() {
        let depth = sp.depth_of(sp.len().saturating_sub(1));
        if sp.len() > budget.max_tables || depth >= budget.depth || sp.forward_cost() > budget.max_layer_cost {
            exhausted = true;
            break;
        }
        if sp.forward_step() == 0 {
            break;
        }
    }
    let mut memo = HashMap::new();
    let ops = (0..sp.len())
        .map(|i| {
            let table = OpTable::new(d, k, sp.member(i).to_vec())?;
            Ok((table, build_term(&sp, algebra, i, &mut memo)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CloneClosure {
        arity: k,
        ops,
        exhausted,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WitnessSearch {
    pub found: Option<(Term, OpTable)>,
    /// The search space was exhausted: no term satisfies the spec at all.
    pub impossible: bool,
    pub depth_reached: usize,
}

/// Searches for a term operation t with t(args) ∈ allowed for every row.
/// Works on the subpower of A^rows generated by the restricted projections,
/// layer by layer, so the first witness found has least depth.
pub fn find_pairwise_witnesses(
    algebra: &Algebra,
    spec: &[(Tuple, ElemSet)],
    budget: CloneBudget,
) -> Result<WitnessSearch> {
    let arity = spec.first().map(|r| r.0.len()).unwrap_or(0);
    if spec.iter().any(|r| r.0.len() != arity) {
        return Err(Error::Shape("witness rows must share one arity".into()));
    }
    let d = algebra.domain();
    for (args, _) in spec {
        for &a in args {
            d.check(a as usize)?;
        }
    }
    let m = spec.len();
    let seeds: Vec<Tuple> = (0..arity).map(|i| spec.iter().map(|r| r.0[i]).collect()).collect();
    let mut sp = if d.power(m).is_some_and(|p| p <= MAX_POWER) {
        Subpower::new(algebra, m, &seeds, true)?
    } else {
        Subpower::new_sparse(algebra, m, &seeds, true)?
    };
    let hit = |t: &[Elem]| t.iter().zip(spec).all(|(&v, r)| r.1.contains(v));
    let mut checked = 0;
    loop {
        if let Some(i) = (checked..sp.len()).find(|&i| hit(sp.member(i))) {
            let term = build_term(&sp, algebra, i, &mut HashMap::new());
            let table = term.flatten(algebra, arity)?;
            return Ok(WitnessSearch {
                depth_reached: sp.depth_of(i),
                found: Some((term, table)),
                impossible: false,
            });
        }
        checked = sp.len();
        let depth = sp.depth_of(sp.len().saturating_sub(1));
        if depth >= budget.depth || sp.forward_cost() > budget.max_layer_cost {
            return Ok(WitnessSearch {
                found: None,
                impossible: false,
                depth_reached: depth,
            });
        }
        if sp.forward_step() == 0 {
            return Ok(WitnessSearch {
                found: None,
                impossible: true,
                depth_reached: depth,
            });
        }
    }
}
