//! Not-all-equal satisfiability and its reductions to QCSP.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gadgets::{build_r, build_tau_k, build_z, AlphaBeta, Form};
use crate::model::{Arg, Atom, Domain, Elem, ElemSet, Quantifier, Relation, SentencePH, Structure};

/// Clauses NAE(x,y,z) over named variables.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NaeInstance {
    pub vars: Vec<String>,
    pub clauses: Vec<[usize; 3]>,
}

impl NaeInstance {
    fn index(&mut self, name: &str) -> usize {
        match self.vars.iter().position(|v| v == name) {
            Some(i) => i,
            None => {
                self.vars.push(name.to_string());
                self.vars.len() - 1
            }
        }
    }

    pub fn add_clause(&mut self, x: &str, y: &str, z: &str) {
        let c = [self.index(x), self.index(y), self.index(z)];
        self.clauses.push(c);
    }

    /// One `nae x y z` line per clause; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut inst = NaeInstance::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("");
            let words: Vec<&str> = line.split_whitespace().collect();
            match words.as_slice() {
                [] => {}
                ["nae", x, y, z] => inst.add_clause(x, y, z),
                _ => {
                    return Err(Error::Syntax {
                        line: i + 1,
                        col: 1,
                        msg: "expected `nae X Y Z`".into(),
                    })
                }
            }
        }
        Ok(inst)
    }

    fn clause_nae(&self, c: &[usize; 3], val: &[Elem]) -> bool {
        !(val[c[0]] == val[c[1]] && val[c[1]] == val[c[2]])
    }
}

impl fmt::Display for NaeInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.clauses {
            writeln!(f, "nae {} {} {}", self.vars[c[0]], self.vars[c[1]], self.vars[c[2]])?;
        }
        Ok(())
    }
}

/// Is there a Boolean assignment making every clause not-all-equal?
pub fn naesat_brute(inst: &NaeInstance) -> bool {
    let two = Domain::new(2).expect("valid");
    two.tuples(inst.vars.len())
        .any(|val| inst.clauses.iter().all(|c| inst.clause_nae(c, &val)))
}

fn tau_name(k: usize) -> String {
    format!("tau{k}")
}

/// ψ = ∀v̄ τ_k(clauses in order). ψ holds iff the instance is not NAE-satisfiable.
pub fn naesat_to_qcsp(inst: &NaeInstance, ab: &AlphaBeta) -> Result<(Structure, SentencePH)> {
    let k = inst.clauses.len();
    let rel = if k == 0 {
        Relation::empty(ab.domain(), 0)
    } else {
        build_tau_k(ab, k, Form::Dnf)?
    };
    let structure = Structure::new(ab.domain()).with_relation(tau_name(k), rel)?;
    let args = inst
        .clauses
        .iter()
        .flat_map(|c| c.iter().map(|&v| Arg::var(inst.vars[v].clone())))
        .collect();
    let prefix = inst.vars.iter().map(|v| (Quantifier::Forall, v.clone())).collect();
    let phi = SentencePH::new(prefix, vec![Atom::rel(tau_name(k), args)])?;
    Ok((structure, phi))
}

/// ∀U ∃E over NAE clauses.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pi2NaeInstance {
    pub nae: NaeInstance,
    pub universal: Vec<bool>,
}

impl Pi2NaeInstance {
    /// `forall x` / `exists y` lines declare variables, `nae x y z` lines add clauses.
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = Pi2NaeInstance::default();
        let mut clauses = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("");
            let words: Vec<&str> = line.split_whitespace().collect();
            match words.as_slice() {
                [q @ ("forall" | "exists"), v] => {
                    if out.nae.vars.iter().any(|w| w == v) {
                        return Err(Error::Syntax {
                            line: i + 1,
                            col: 1,
                            msg: format!("`{v}` declared twice"),
                        });
                    }
                    out.nae.vars.push(v.to_string());
                    out.universal.push(*q == "forall");
                }
                _ => {
                    clauses.push_str(line);
                    clauses.push('\n');
                }
            }
        }
        let declared = out.nae.vars.len();
        let parsed = NaeInstance::parse(&clauses)?;
        for c in &parsed.clauses {
            let names: Vec<&str> = c.iter().map(|&i| parsed.vars[i].as_str()).collect();
            out.nae.add_clause(names[0], names[1], names[2]);
        }
        if out.nae.vars.len() != declared {
            return Err(Error::Unbound(out.nae.vars[declared].clone()));
        }
        Ok(out)
    }

    fn split(&self) -> (Vec<usize>, Vec<usize>) {
        (0..self.nae.vars.len()).partition(|&i| self.universal[i])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GadgetCase {
    /// G-set on {0,1}: the τ_k reduction with existentials confined to {0,1}.
    A,
    /// G-set on {0,2}: Z for universals, R for NAE clauses.
    B,
}

/// Boolean oracle for the gadget sentences. Case A is ∀U ∃E (some clause
/// all-equal); case B is ∀U ∃E (every clause not-all-equal).
pub fn pi2_nae_brute(inst: &Pi2NaeInstance, case: GadgetCase) -> bool {
    let (us, es) = inst.split();
    let two = Domain::new(2).expect("valid");
    let mut val = vec![0 as Elem; inst.nae.vars.len()];
    two.tuples(us.len()).all(|u| {
        for (&i, &b) in us.iter().zip(&u) {
            val[i] = b;
        }
        two.tuples(es.len()).any(|e| {
            for (&i, &b) in es.iter().zip(&e) {
                val[i] = b;
            }
            let mut nae = inst.nae.clauses.iter().map(|c| inst.nae.clause_nae(c, &val));
            match case {
                GadgetCase::A => nae.any(|ok| !ok),
                GadgetCase::B => nae.all(|ok| ok),
            }
        })
    })
}

/// The Π_2 sentence of the chosen case, over α = {0,2}, β = {1,2}.
pub fn pi2_naesat_gadget(inst: &Pi2NaeInstance, case: GadgetCase) -> Result<(Structure, SentencePH)> {
    if inst.nae.clauses.is_empty() {
        return Err(Error::Precondition("at least one clause is needed".into()));
    }
    let ab = AlphaBeta::standard();
    let d = ab.domain();
    let (us, es) = inst.split();
    let name = |i: usize| inst.nae.vars[i].clone();
    let mut prefix = Vec::new();
    let mut matrix = Vec::new();
    let structure;
    match case {
        GadgetCase::A => {
            let (s, phi) = naesat_to_qcsp(&inst.nae, &ab)?;
            structure = s.with_relation("b01", Relation::unary(d, ElemSet(0b011)))?;
            prefix.extend(us.iter().map(|&i| (Quantifier::Forall, name(i))));
            prefix.extend(es.iter().map(|&i| (Quantifier::Exists, name(i))));
            matrix.extend(phi.matrix);
            matrix.extend(es.iter().map(|&i| Atom::rel("b01", vec![Arg::var(name(i))])));
        }
        GadgetCase::B => {
            structure = Structure::new(d)
                .with_relation("Z", build_z())?
                .with_relation("R", build_r())?
                .with_relation("b02", Relation::unary(d, ElemSet(0b101)))?;
            let primed = |i: usize| format!("{}'", name(i));
            prefix.extend(us.iter().map(|&i| (Quantifier::Forall, primed(i))));
            prefix.extend(us.iter().map(|&i| (Quantifier::Exists, name(i))));
            prefix.extend(es.iter().map(|&i| (Quantifier::Exists, name(i))));
            matrix.extend(
                us.iter()
                    .map(|&i| Atom::rel("Z", vec![Arg::var(name(i)), Arg::var(primed(i))])),
            );
            matrix.extend(inst.nae.clauses.iter().map(|c| {
                Atom::rel("R", c.iter().map(|&v| Arg::var(name(v))).collect())
            }));
            matrix.extend(es.iter().map(|&i| Atom::rel("b02", vec![Arg::var(name(i))])));
        }
    }
    Ok((structure, SentencePH::new(prefix, matrix)?))
}
