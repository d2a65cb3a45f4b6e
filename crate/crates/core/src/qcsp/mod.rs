//! Model checking of pH-sentences, a CSP solver, the Skolem-expansion
//! reduction and the special-case procedures for the τ languages.

mod canon;
mod csp;
mod nae;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Arg, Atom, Elem, Encoding, Quantifier, Relation, SentencePH, Structure};
use crate::powers::Adversary;

pub use canon::{eliminate_constant_atoms, solve_universal_conjunction, solve_via_canon, Simplified};
pub use csp::{
    csp_solve, qcsp_to_csp, skolem_expand, CspArg, CspConstraint, CspInstance, SwitchEvidence,
};
pub use nae::{
    naesat_brute, naesat_to_qcsp, pi2_nae_brute, pi2_naesat_gadget, GadgetCase, NaeInstance, Pi2NaeInstance,
};

/// The brute-force evaluator refuses sentences with more than this many leaves.
pub const MAX_EVAL_LEAVES: usize = 531_441; // 3^12

/// Π_k or Σ_k: number of quantifier blocks and the kind of the first one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlternationClass {
    pub pi: bool,
    pub blocks: usize,
}

impl fmt::Display for AlternationClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", if self.pi { "Pi" } else { "Sigma" }, self.blocks)
    }
}

pub fn alternation_class(phi: &SentencePH) -> AlternationClass {
    let mut blocks = 0;
    let mut last = None;
    for (q, _) in &phi.prefix {
        if last != Some(*q) {
            blocks += 1;
            last = Some(*q);
        }
    }
    AlternationClass {
        pi: phi.prefix.first().map_or(true, |(q, _)| *q == Quantifier::Forall),
        blocks,
    }
}

#[derive(Clone, Copy, Debug)]
enum Slot {
    Var(usize),
    Const(Elem),
}

enum Member<'a> {
    Dense(Vec<bool>),
    Lazy(&'a Relation),
    Eq,
}

struct Compiled<'a> {
    n: usize,
    quants: Vec<Quantifier>,
    atoms: Vec<(Member<'a>, Vec<Slot>)>,
    /// Atoms whose last variable sits at prefix position p.
    due: Vec<Vec<usize>>,
    ground: Vec<usize>,
}

const DENSE_LIMIT: usize = 1 << 16;

fn member_of(rel: &Relation) -> Member<'_> {
    if let Encoding::Tuples(set) = rel.encoding() {
        let d = rel.domain();
        if let Some(p) = d.power(rel.arity()).filter(|&p| p <= DENSE_LIMIT) {
            let mut bits = vec![false; p];
            for t in set {
                bits[d.encode(t)] = true;
            }
            return Member::Dense(bits);
        }
    }
    Member::Lazy(rel)
}

fn compile<'a>(structure: &'a Structure, phi: &SentencePH) -> Result<Compiled<'a>> {
    phi.validate()?;
    let d = structure.domain();
    let slot = |a: &Arg| -> Result<Slot> {
        match a {
            Arg::Var(v) => Ok(Slot::Var(phi.position_of(v).ok_or_else(|| Error::Unbound(v.clone()))?)),
            Arg::Const(c) => Ok(Slot::Const(d.check(*c as usize)?)),
        }
    };
    let mut atoms = Vec::new();
    for atom in &phi.matrix {
        match atom {
            Atom::Rel { name, args } => {
                let rel = structure
                    .relation(name)
                    .ok_or_else(|| Error::Unknown(format!("relation `{name}`")))?;
                if rel.arity() != args.len() {
                    return Err(Error::Arity {
                        expected: rel.arity(),
                        got: args.len(),
                    });
                }
                atoms.push((member_of(rel), args.iter().map(slot).collect::<Result<Vec<_>>>()?));
            }
            Atom::Eq(a, b) => atoms.push((Member::Eq, vec![slot(a)?, slot(b)?])),
        }
    }
    let vars = phi.prefix.len();
    let mut due = vec![Vec::new(); vars];
    let mut ground = Vec::new();
    for (i, (_, slots)) in atoms.iter().enumerate() {
        let last = slots
            .iter()
            .filter_map(|s| match s {
                Slot::Var(p) => Some(*p),
                Slot::Const(_) => None,
            })
            .max();
        match last {
            Some(p) => due[p].push(i),
            None => ground.push(i),
        }
    }
    Ok(Compiled {
        n: d.size(),
        quants: phi.prefix.iter().map(|(q, _)| *q).collect(),
        atoms,
        due,
        ground,
    })
}

impl Compiled<'_> {
    fn holds(&self, atom: usize, assign: &[Elem], buf: &mut Vec<Elem>) -> bool {
        let (mem, slots) = &self.atoms[atom];
        buf.clear();
        buf.extend(slots.iter().map(|s| match *s {
            Slot::Var(p) => assign[p],
            Slot::Const(c) => c,
        }));
        match mem {
            Member::Eq => buf[0] == buf[1],
            Member::Dense(bits) => bits[buf.iter().fold(0, |acc, &e| acc * self.n + e as usize)],
            Member::Lazy(rel) => rel.contains(buf),
        }
    }

    fn eval(
        &self,
        pos: usize,
        assign: &mut Vec<Elem>,
        uni: &mut Vec<Elem>,
        adv: Option<&Adversary>,
        buf: &mut Vec<Elem>,
    ) -> bool {
        if pos == self.quants.len() {
            return true;
        }
        let universal = self.quants[pos] == Quantifier::Forall;
        for v in 0..self.n as Elem {
            if universal {
                uni.push(v);
                let allowed = adv.map_or(true, |a| a.has_prefix(uni));
                if !allowed {
                    uni.pop();
                    continue;
                }
            }
            assign.push(v);
            let ok = self.due[pos].iter().all(|&a| self.holds(a, assign, buf))
                && self.eval(pos + 1, assign, uni, adv, buf);
            assign.pop();
            if universal {
                uni.pop();
                if !ok {
                    return false;
                }
            } else if ok {
                return true;
            }
        }
        universal
    }
}

/// Truth of `phi` in `structure`; with an adversary the universal variables
/// range jointly over its tuples (prefix-consistent branching).
pub fn qcsp_eval(structure: &Structure, phi: &SentencePH, adversary: Option<&Adversary>) -> Result<bool> {
    let c = compile(structure, phi)?;
    let universals = phi.universals().count();
    if let Some(a) = adversary {
        if a.len() != universals {
            return Err(Error::Arity {
                expected: universals,
                got: a.len(),
            });
        }
    }
    structure
        .domain()
        .power_within(phi.prefix.len(), MAX_EVAL_LEAVES)
        .map_err(|_| {
            Error::Budget(format!(
                "{}^{} leaves exceed the evaluator budget of {MAX_EVAL_LEAVES}",
                c.n,
                phi.prefix.len()
            ))
        })?;
    let mut buf = Vec::new();
    if !c.ground.iter().all(|&a| c.holds(a, &[], &mut buf)) {
        return Ok(false);
    }
    if universals == 0 && adversary.is_none() && c.quants.is_empty() {
        return Ok(true);
    }
    Ok(c.eval(0, &mut Vec::new(), &mut Vec::new(), adversary, &mut buf))
}
