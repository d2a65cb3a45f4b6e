use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::clone::is_polymorphism;
use crate::error::{Error, Result};
use crate::model::{Algebra, Arg, Atom, Domain, Elem, ElemSet, Quantifier, SentencePH, Structure, Tuple};
use crate::powers::{build_switch_adversary, is_k_switchable, Adversary, PowerVerdict};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CspArg {
    Var(usize),
    Const(Elem),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CspConstraint {
    Rel { name: String, args: Vec<CspArg> },
    Eq(CspArg, CspArg),
}

impl CspConstraint {
    fn args(&self) -> Vec<CspArg> {
        match self {
            CspConstraint::Rel { args, .. } => args.clone(),
            CspConstraint::Eq(a, b) => vec![*a, *b],
        }
    }
}

/// Variables are indices into `names`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CspInstance {
    pub names: Vec<String>,
    pub constraints: Vec<CspConstraint>,
}

impl CspInstance {
    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    pub fn var(&mut self, name: impl Into<String>) -> usize {
        self.names.push(name.into());
        self.names.len() - 1
    }

    /// Does `assign` satisfy every constraint?
    pub fn check(&self, structure: &Structure, assign: &[Elem]) -> Result<bool> {
        if assign.len() != self.num_vars() {
            return Err(Error::Arity {
                expected: self.num_vars(),
                got: assign.len(),
            });
        }
        let val = |a: &CspArg| match *a {
            CspArg::Var(v) => assign[v],
            CspArg::Const(c) => c,
        };
        for c in &self.constraints {
            let ok = match c {
                CspConstraint::Eq(a, b) => val(a) == val(b),
                CspConstraint::Rel { name, args } => {
                    let rel = structure
                        .relation(name)
                        .ok_or_else(|| Error::Unknown(format!("relation `{name}`")))?;
                    rel.contains(&args.iter().map(val).collect::<Vec<_>>())
                }
            };
            if !ok {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

impl fmt::Display for CspInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |a: &CspArg| match *a {
            CspArg::Var(v) => self.names[v].clone(),
            CspArg::Const(c) => c.to_string(),
        };
        writeln!(f, "vars {}", self.names.join(" "))?;
        for c in &self.constraints {
            match c {
                CspConstraint::Eq(a, b) => writeln!(f, "{}={}", show(a), show(b))?,
                CspConstraint::Rel { name, args } => {
                    writeln!(f, "{name}({})", args.iter().map(show).collect::<Vec<_>>().join(","))?
                }
            }
        }
        Ok(())
    }
}

/// A constraint compiled to its scope (distinct variables) and allowed tuples.
struct Table {
    scope: Vec<usize>,
    allowed: Vec<Tuple>,
}

fn compile_tables(inst: &CspInstance, structure: &Structure) -> Result<Option<Vec<Table>>> {
    let d = structure.domain();
    let mut cache: HashMap<&str, Vec<Tuple>> = HashMap::new();
    let mut out = Vec::new();
    for c in &inst.constraints {
        let args = c.args();
        for a in &args {
            match *a {
                CspArg::Var(v) if v >= inst.num_vars() => {
                    return Err(Error::Unbound(format!("csp variable {v}")));
                }
                CspArg::Const(e) => {
                    d.check(e as usize)?;
                }
                _ => {}
            }
        }
        let source: Vec<Tuple> = match c {
            CspConstraint::Eq(..) => d.elements().map(|a| vec![a, a]).collect(),
            CspConstraint::Rel { name, .. } => {
                if !cache.contains_key(name.as_str()) {
                    let rel = structure
                        .relation(name)
                        .ok_or_else(|| Error::Unknown(format!("relation `{name}`")))?;
                    if rel.arity() != args.len() {
                        return Err(Error::Arity {
                            expected: rel.arity(),
                            got: args.len(),
                        });
                    }
                    cache.insert(name, rel.materialize()?.into_iter().collect());
                }
                cache[name.as_str()].clone()
            }
        };
        let mut scope: Vec<usize> = Vec::new();
        for a in &args {
            if let CspArg::Var(v) = *a {
                if !scope.contains(&v) {
                    scope.push(v);
                }
            }
        }
        let mut allowed = HashSet::new();
        'tuples: for t in &source {
            let mut vals: Vec<Option<Elem>> = vec![None; scope.len()];
            for (a, &e) in args.iter().zip(t) {
                match *a {
                    CspArg::Const(c) if c != e => continue 'tuples,
                    CspArg::Const(_) => {}
                    CspArg::Var(v) => {
                        let i = scope.iter().position(|&s| s == v).unwrap();
                        match vals[i] {
                            Some(x) if x != e => continue 'tuples,
                            _ => vals[i] = Some(e),
                        }
                    }
                }
            }
            allowed.insert(vals.into_iter().map(Option::unwrap).collect::<Tuple>());
        }
        if allowed.is_empty() {
            return Ok(None);
        }
        if !scope.is_empty() {
            out.push(Table {
                scope,
                allowed: allowed.into_iter().collect(),
            });
        }
    }
    Ok(Some(out))
}

/// Generalized arc consistency; false on a wipe-out.
fn propagate(tables: &[Table], watch: &[Vec<usize>], doms: &mut [ElemSet]) -> bool {
    let mut queue: Vec<usize> = (0..tables.len()).collect();
    let mut queued = vec![true; tables.len()];
    while let Some(ti) = queue.pop() {
        queued[ti] = false;
        let t = &tables[ti];
        let mut support = vec![ElemSet::EMPTY; t.scope.len()];
        for tup in &t.allowed {
            if tup.iter().zip(&t.scope).all(|(&e, &v)| doms[v].contains(e)) {
                for (s, &e) in support.iter_mut().zip(tup) {
                    s.insert(e);
                }
            }
        }
        for (i, &v) in t.scope.iter().enumerate() {
            let narrowed = doms[v].intersection(support[i]);
            if narrowed != doms[v] {
                if narrowed.is_empty() {
                    return false;
                }
                doms[v] = narrowed;
                for &other in &watch[v] {
                    if other != ti && !queued[other] {
                        queued[other] = true;
                        queue.push(other);
                    }
                }
            }
        }
    }
    true
}

fn search(tables: &[Table], watch: &[Vec<usize>], doms: &mut Vec<ElemSet>) -> bool {
    if !propagate(tables, watch, doms) {
        return false;
    }
    let pick = (0..doms.len())
        .filter(|&v| doms[v].len() > 1)
        .min_by_key(|&v| doms[v].len());
    let Some(v) = pick else {
        return true;
    };
    for e in doms[v].iter() {
        let mut trial = doms.clone();
        trial[v] = ElemSet::singleton(e);
        if search(tables, watch, &mut trial) {
            *doms = trial;
            return true;
        }
    }
    false
}

/// A satisfying assignment, or `None` if there is none.
pub fn csp_solve(inst: &CspInstance, structure: &Structure) -> Result<Option<Vec<Elem>>> {
    let Some(tables) = compile_tables(inst, structure)? else {
        return Ok(None);
    };
    let n = inst.num_vars();
    let mut watch = vec![Vec::new(); n];
    for (i, t) in tables.iter().enumerate() {
        for &v in &t.scope {
            watch[v].push(i);
        }
    }
    let mut doms = vec![structure.domain().full_set(); n];
    if !search(&tables, &watch, &mut doms) {
        return Ok(None);
    }
    let assign: Vec<Elem> = doms.iter().map(|&s| s.min().expect("nonempty")).collect();
    if !inst.check(structure, &assign)? {
        return Err(Error::Precondition("solver produced a non-solution".into()));
    }
    Ok(Some(assign))
}

fn check_relations(structure: &Structure, phi: &SentencePH) -> Result<()> {
    phi.validate()?;
    for atom in &phi.matrix {
        if let Atom::Rel { name, args } = atom {
            let rel = structure
                .relation(name)
                .ok_or_else(|| Error::Unknown(format!("relation `{name}`")))?;
            if rel.arity() != args.len() {
                return Err(Error::Arity {
                    expected: rel.arity(),
                    got: args.len(),
                });
            }
        }
    }
    Ok(())
}

/// One copy of the matrix per adversary tuple. An existential's copy is keyed
/// by the values of the universals before it, so tuples agreeing on that
/// prefix share it. `None` means the full adversary.
pub fn skolem_expand(structure: &Structure, phi: &SentencePH, adversary: Option<&Adversary>) -> Result<CspInstance> {
    check_relations(structure, phi)?;
    let d = structure.domain();
    let m = phi.universals().count();
    let rows: Vec<Tuple> = match adversary {
        Some(a) if a.len() != m => {
            return Err(Error::Arity {
                expected: m,
                got: a.len(),
            })
        }
        Some(a) => a.tuples().iter().cloned().collect(),
        None => {
            d.power_within(m, crate::powers::MAX_POWER)?;
            d.tuples(m).collect()
        }
    };
    // universal index or (existential, #universals before it) per prefix position
    let mut role: HashMap<&str, (Quantifier, usize)> = HashMap::new();
    let mut seen_u = 0;
    for (q, v) in &phi.prefix {
        match q {
            Quantifier::Forall => {
                role.insert(v, (*q, seen_u));
                seen_u += 1;
            }
            Quantifier::Exists => {
                role.insert(v, (*q, seen_u));
            }
        }
    }
    let mut inst = CspInstance::default();
    let mut ids: BTreeMap<(String, Tuple), usize> = BTreeMap::new();
    let mut seen: HashSet<CspConstraint> = HashSet::new();
    for row in &rows {
        let mut arg = |a: &Arg, inst: &mut CspInstance| -> CspArg {
            match a {
                Arg::Const(c) => CspArg::Const(*c),
                Arg::Var(v) => match role[v.as_str()] {
                    (Quantifier::Forall, i) => CspArg::Const(row[i]),
                    (Quantifier::Exists, k) => {
                        let key = (v.clone(), row[..k].to_vec());
                        let id = *ids.entry(key).or_insert_with(|| {
                            let label: Vec<String> = row[..k].iter().map(|e| e.to_string()).collect();
                            inst.var(format!("{v}[{}]", label.join(",")))
                        });
                        CspArg::Var(id)
                    }
                },
            }
        };
        for atom in &phi.matrix {
            let c = match atom {
                Atom::Rel { name, args } => CspConstraint::Rel {
                    name: name.clone(),
                    args: args.iter().map(|a| arg(a, &mut inst)).collect(),
                },
                Atom::Eq(a, b) => {
                    let a = arg(a, &mut inst);
                    CspConstraint::Eq(a, arg(b, &mut inst))
                }
            };
            if seen.insert(c.clone()) {
                inst.constraints.push(c);
            }
        }
    }
    Ok(inst)
}

/// Proof that an algebra's operations are polymorphisms of `structure` and
/// that Ξ_{m,k} generates A^m for every m up to `m_max`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SwitchEvidence {
    pub k: usize,
    pub m_max: usize,
    pub verdicts: Vec<PowerVerdict>,
    structure: Structure,
}

impl SwitchEvidence {
    pub fn verify(algebra: &Algebra, structure: &Structure, k: usize, m_max: usize) -> Result<Self> {
        for o in algebra.ops() {
            if !is_polymorphism(&o.op, structure)? {
                return Err(Error::Precondition(format!(
                    "operation `{}` is not a polymorphism of the structure",
                    o.name
                )));
            }
        }
        let verdicts = is_k_switchable(algebra, k, m_max)?;
        if let Some(v) = verdicts.iter().find(|v| !v.generates) {
            return Err(Error::Precondition(format!(
                "Ξ_{{{},{k}}} does not generate the power ({} of {} tuples)",
                v.m, v.closure_size, v.seed_size
            )));
        }
        Ok(SwitchEvidence {
            k,
            m_max,
            verdicts,
            structure: structure.clone(),
        })
    }

    pub fn domain(&self) -> Domain {
        self.structure.domain()
    }
}

/// The Skolem-expanded CSP over Ξ_{m,k}, m the number of universals.
pub fn qcsp_to_csp(structure: &Structure, phi: &SentencePH, evidence: &SwitchEvidence) -> Result<CspInstance> {
    if evidence.structure != *structure {
        return Err(Error::Precondition("switchability evidence was gathered for another structure".into()));
    }
    let m = phi.universals().count();
    if m == 0 {
        return skolem_expand(structure, phi, None);
    }
    if m > evidence.m_max {
        return Err(Error::Precondition(format!(
            "switchability verified up to m = {}, sentence has {m} universals",
            evidence.m_max
        )));
    }
    let xi = build_switch_adversary(structure.domain(), m, evidence.k)?;
    skolem_expand(structure, phi, Some(&xi))
}
