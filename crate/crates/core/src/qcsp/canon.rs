//! Constant elimination, the canon solver and per-atom evaluation of
//! universal conjunctions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gadgets::{is_almost_existentially_trivial, is_canon, strip_forced};
use crate::model::{Arg, Atom, Domain, Elem, Quantifier, Relation, SentencePH, Structure};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Simplified {
    False,
    Sentence(SentencePH),
}

fn substitute(args: &mut [Arg], var: &str, to: &Arg) {
    for a in args.iter_mut() {
        if a.as_var() == Some(var) {
            *a = to.clone();
        }
    }
}

fn substitute_atoms(matrix: &mut [Atom], var: &str, to: &Arg) {
    for atom in matrix {
        match atom {
            Atom::Rel { args, .. } => substitute(args, var, to),
            Atom::Eq(a, b) => {
                for x in [a, b] {
                    if x.as_var() == Some(var) {
                        *x = to.clone();
                    }
                }
            }
        }
    }
}

/// Removes every atom v=a: a universal v makes the sentence false, clashing
/// constants make it false, otherwise a is substituted for v and v dropped.
pub fn eliminate_constant_atoms(phi: &SentencePH, domain: Domain) -> Result<Simplified> {
    phi.validate()?;
    let mut phi = phi.clone();
    for atom in &phi.matrix {
        for a in atom.args() {
            if let Arg::Const(c) = a {
                domain.check(*c as usize)?;
            }
        }
    }
    loop {
        let hit = phi.matrix.iter().position(|a| match a {
            Atom::Eq(x, y) => matches!(x, Arg::Const(_)) || matches!(y, Arg::Const(_)),
            Atom::Rel { .. } => false,
        });
        let Some(i) = hit else {
            return Ok(Simplified::Sentence(phi));
        };
        let Atom::Eq(x, y) = phi.matrix.remove(i) else {
            unreachable!()
        };
        match (x, y) {
            (Arg::Const(a), Arg::Const(b)) => {
                if a != b {
                    return Ok(Simplified::False);
                }
            }
            (Arg::Var(v), Arg::Const(a)) | (Arg::Const(a), Arg::Var(v)) => {
                match phi.quantifier_of(&v) {
                    Some(Quantifier::Forall) => {
                        if domain.size() > 1 {
                            return Ok(Simplified::False);
                        }
                    }
                    _ => {
                        substitute_atoms(&mut phi.matrix, &v, &Arg::Const(a));
                        phi.prefix.retain(|(_, w)| *w != v);
                    }
                }
            }
            (Arg::Var(_), Arg::Var(_)) => unreachable!(),
        }
    }
}

struct Work {
    prefix: Vec<(Quantifier, String)>,
    atoms: Vec<(Relation, Vec<Arg>)>,
    eqs: Vec<(Arg, Arg)>,
    n: usize,
}

impl Work {
    fn position(&self, v: &str) -> usize {
        self.prefix.iter().position(|(_, w)| w == v).expect("bound")
    }

    fn replace(&mut self, var: &str, to: Arg) {
        for (_, args) in &mut self.atoms {
            substitute(args, var, &to);
        }
        for (a, b) in &mut self.eqs {
            for x in [a, b] {
                if x.as_var() == Some(var) {
                    *x = to.clone();
                }
            }
        }
        self.prefix.retain(|(_, w)| w != var);
    }

    /// Resolve one equality; false means the sentence is false.
    fn settle(&mut self, a: Arg, b: Arg) -> bool {
        match (a, b) {
            (Arg::Const(x), Arg::Const(y)) => x == y,
            (Arg::Var(v), Arg::Const(c)) | (Arg::Const(c), Arg::Var(v)) => {
                if self.prefix[self.position(&v)].0 == Quantifier::Forall {
                    return self.n == 1;
                }
                self.replace(&v, Arg::Const(c));
                true
            }
            (Arg::Var(x), Arg::Var(y)) => {
                if x == y {
                    return true;
                }
                let (px, py) = (self.position(&x), self.position(&y));
                let (early, late) = if px < py { (x, py) } else { (y, px) };
                if self.prefix[late].0 == Quantifier::Forall {
                    return self.n == 1;
                }
                let late = self.prefix[late].1.clone();
                self.replace(&late, Arg::Var(early));
                true
            }
        }
    }

    /// Push constants into relations and peel forced coordinates off.
    /// Returns false if some atom is unsatisfiable.
    fn normalize_atoms(&mut self) -> Result<bool> {
        let mut changed = true;
        while changed {
            changed = false;
            while let Some((a, b)) = self.eqs.pop() {
                if !self.settle(a, b) {
                    return Ok(false);
                }
                changed = true;
            }
            let mut i = 0;
            while i < self.atoms.len() {
                let (rel, args) = &mut self.atoms[i];
                while let Some(c) = args.iter().position(|a| matches!(a, Arg::Const(_))) {
                    let Arg::Const(v) = args.remove(c) else { unreachable!() };
                    *rel = rel.fix(c, v)?;
                }
                let s = strip_forced(rel)?;
                if s.empty {
                    return Ok(false);
                }
                for &(c, v) in &s.constants {
                    self.eqs.push((args[c].clone(), Arg::Const(v)));
                }
                for &(p, q) in &s.equal {
                    self.eqs.push((args[p].clone(), args[q].clone()));
                }
                if !s.constants.is_empty() || !s.equal.is_empty() {
                    changed = true;
                }
                if s.residual.arity() == 0 {
                    self.atoms.remove(i);
                    continue;
                }
                *args = s.kept.iter().map(|&k| args[k].clone()).collect();
                *rel = s.residual;
                i += 1;
            }
            if !self.eqs.is_empty() {
                changed = true;
            }
        }
        Ok(true)
    }
}

/// Strip forced constants and equalities, set every remaining existential
/// to the canon and check the universal residue atom by atom.
pub fn solve_via_canon(structure: &Structure, phi: &SentencePH) -> Result<bool> {
    super::compile(structure, phi)?;
    let d = structure.domain();
    let canon = is_almost_existentially_trivial(structure)?
        .canon
        .ok_or_else(|| Error::Precondition("structure is not almost existentially trivial".into()))?;
    let mut w = Work {
        prefix: phi.prefix.clone(),
        atoms: Vec::new(),
        eqs: Vec::new(),
        n: d.size(),
    };
    for atom in &phi.matrix {
        match atom {
            Atom::Eq(a, b) => w.eqs.push((a.clone(), b.clone())),
            Atom::Rel { name, args } => {
                let rel = structure.relation(name).expect("checked by compile").clone();
                w.atoms.push((rel, args.clone()));
            }
        }
    }
    if !w.normalize_atoms()? {
        return Ok(false);
    }
    for (rel, _) in &w.atoms {
        if !is_canon(rel, canon)? {
            return Err(Error::Precondition(format!(
                "a residual relation is not existentially trivial with canon {canon}"
            )));
        }
    }
    let existentials: Vec<String> = w
        .prefix
        .iter()
        .filter(|(q, _)| *q == Quantifier::Exists)
        .map(|(_, v)| v.clone())
        .collect();
    for v in existentials {
        w.replace(&v, Arg::Const(canon));
    }
    for (rel, args) in &w.atoms {
        if !atom_always(d, args, |t| rel.contains(t)) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Does `test` hold for every assignment to the variables among `args`?
fn atom_always(d: Domain, args: &[Arg], test: impl Fn(&[Elem]) -> bool) -> bool {
    let mut vars: Vec<&str> = Vec::new();
    for a in args {
        if let Some(v) = a.as_var() {
            if !vars.contains(&v) {
                vars.push(v);
            }
        }
    }
    d.tuples(vars.len()).all(|vals| {
        let t: Vec<Elem> = args
            .iter()
            .map(|a| match a {
                Arg::Const(c) => *c,
                Arg::Var(v) => vals[vars.iter().position(|w| w == v).unwrap()],
            })
            .collect();
        test(&t)
    })
}

/// ∀x̄ (A_1 ∧ … ∧ A_r) checked as ∀A_1 ∧ … ∧ ∀A_r, each over its own variables.
pub fn solve_universal_conjunction(structure: &Structure, phi: &SentencePH) -> Result<bool> {
    super::compile(structure, phi)?;
    if phi.existentials().next().is_some() {
        return Err(Error::Precondition("sentence has existential variables".into()));
    }
    let d = structure.domain();
    for atom in &phi.matrix {
        let ok = match atom {
            Atom::Eq(a, b) => atom_always(d, &[a.clone(), b.clone()], |t| t[0] == t[1]),
            Atom::Rel { name, args } => {
                let rel = structure.relation(name).expect("checked by compile");
                atom_always(d, args, |t| rel.contains(t))
            }
        };
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}
