//! Preservation, polymorphisms, term operations and αβ-projectivity.

mod essential;
mod hubie;
mod term;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Algebra, Domain, Elem, ElemSet, OpTable, Relation, Structure, Tuple, MAX_MATERIALIZE};

pub use essential::{essential_tuples, is_essential, lemma_micro_holds, tilde_relation};
pub use hubie::{
    build_f_a_n, build_f_b_n, build_f_hat_a_n, build_f_hat_b_n, chen_algebra, chen_r, find_zhuk_condition,
    is_generalized_hubie_pol, is_hubie_pol, projections_algebra, semilattice_algebra, semilattice_s, ZhukOutcome,
    ZhukWitness,
};
pub use term::{clone_closure, find_pairwise_witnesses, CloneBudget, CloneClosure, Term, WitnessSearch};

/// A relation's tuples with a fast membership index.
pub(crate) struct RelIndex {
    pub tuples: Vec<Tuple>,
    arity: usize,
    n: usize,
    dense: Option<Vec<bool>>,
    sparse: HashSet<Tuple>,
}

impl RelIndex {
    pub fn new(rel: &Relation) -> Result<Self> {
        let tuples: Vec<Tuple> = rel.materialize()?.into_iter().collect();
        let d = rel.domain();
        let n = d.size();
        let (dense, sparse) = match d.power(rel.arity()).filter(|&p| p <= MAX_MATERIALIZE) {
            Some(p) => {
                let mut bits = vec![false; p];
                for t in &tuples {
                    bits[d.encode(t)] = true;
                }
                (Some(bits), HashSet::new())
            }
            None => (None, tuples.iter().cloned().collect()),
        };
        Ok(RelIndex {
            tuples,
            arity: rel.arity(),
            n,
            dense,
            sparse,
        })
    }

    pub fn contains(&self, t: &[Elem]) -> bool {
        match &self.dense {
            Some(bits) => bits[t.iter().fold(0, |acc, &e| acc * self.n + e as usize)],
            None => self.sparse.contains(t),
        }
    }

    /// Is the relation closed under `op` applied coordinatewise?
    pub fn closed_under(&self, op: &OpTable) -> bool {
        let k = op.arity();
        let arity = self.arity;
        if k == 0 {
            return self.contains(&vec![op.at(0); arity]);
        }
        if self.tuples.is_empty() {
            return true;
        }
        let r = self.tuples.len();
        let mut idx = vec![0usize; k];
        let mut args = vec![0 as Elem; k];
        let mut out = vec![0 as Elem; arity];
        loop {
            for (j, o) in out.iter_mut().enumerate() {
                for (p, &i) in idx.iter().enumerate() {
                    args[p] = self.tuples[i][j];
                }
                *o = op.get(&args);
            }
            if !self.contains(&out) {
                return false;
            }
            let mut p = 0;
            while p < k {
                idx[p] += 1;
                if idx[p] < r {
                    break;
                }
                idx[p] = 0;
                p += 1;
            }
            if p == k {
                return true;
            }
        }
    }
}

/// Does `op` preserve `rel`: every k-tuple of rel-tuples maps, coordinatewise, into rel.
pub fn preserves(op: &OpTable, rel: &Relation) -> Result<bool> {
    if op.domain() != rel.domain() {
        return Err(Error::DomainMismatch(op.domain().size(), rel.domain().size()));
    }
    Ok(RelIndex::new(rel)?.closed_under(op))
}

/// Preserves every relation and fixes every constant of the structure.
pub fn is_polymorphism(op: &OpTable, structure: &Structure) -> Result<bool> {
    if op.domain() != structure.domain() {
        return Err(Error::DomainMismatch(op.domain().size(), structure.domain().size()));
    }
    for (_, c) in structure.constants() {
        if op.get(&vec![*c; op.arity()]) != *c {
            return Ok(false);
        }
    }
    for r in structure.relations() {
        if !preserves(op, &r.relation)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Candidate tables beyond this count are refused (3^9 and 2^16 fit).
pub const POLYMORPHISM_CAP: usize = 1 << 16;

/// All k-ary polymorphisms, in lexicographic table order.
pub fn polymorphisms(structure: &Structure, k: usize) -> Result<Vec<OpTable>> {
    let d = structure.domain();
    let n = d.size();
    let rows = d.power_within(k, MAX_MATERIALIZE)?;
    let candidates = d.power(rows).filter(|&c| c <= POLYMORPHISM_CAP).ok_or_else(|| {
        Error::Budget(format!(
            "{n}^({n}^{k}) candidate tables exceed the polymorphism cap of {POLYMORPHISM_CAP}"
        ))
    })?;
    let rels = structure
        .relations()
        .iter()
        .map(|r| RelIndex::new(&r.relation))
        .collect::<Result<Vec<_>>>()?;
    let diag: Vec<usize> = d.elements().map(|a| d.encode(&vec![a; k])).collect();
    let mut out = Vec::new();
    let mut table = vec![0 as Elem; rows];
    for _ in 0..candidates {
        let fixes = structure.constants().iter().all(|&(_, c)| table[diag[c as usize]] == c);
        if fixes {
            let op = OpTable::new(d, k, table.clone())?;
            if rels.iter().all(|r| r.closed_under(&op)) {
                out.push(op);
            }
        }
        // odometer, last entry fastest
        for e in table.iter_mut().rev() {
            *e += 1;
            if (*e as usize) < n {
                break;
            }
            *e = 0;
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectivityWitness {
    pub alpha: ElemSet,
    pub beta: ElemSet,
    /// Least witnessing coordinate, zero-based.
    pub coord: Option<usize>,
}

pub fn check_alpha_beta(domain: Domain, alpha: ElemSet, beta: ElemSet) -> Result<()> {
    let full = domain.full_set();
    if alpha.is_empty() || beta.is_empty() || alpha == full || beta == full {
        return Err(Error::Precondition(format!("{alpha} and {beta} must be nonempty strict subsets")));
    }
    if !alpha.is_subset(full) || !beta.is_subset(full) || alpha.union(beta) != full {
        return Err(Error::Precondition(format!("{alpha} and {beta} must cover the domain")));
    }
    Ok(())
}

/// All covering pairs of strict subsets, α by bitmask ascending, then β.
pub fn alpha_beta_pairs(domain: Domain) -> Vec<(ElemSet, ElemSet)> {
    let full = domain.full_set().0;
    let mut out = Vec::new();
    for a in 1..full {
        for b in 1..full {
            if a | b == full {
                out.push((ElemSet(a), ElemSet(b)));
            }
        }
    }
    out
}

/// Coordinate i such that x_i ∈ α forces f(x) ∈ α and x_i ∈ β forces f(x) ∈ β.
pub fn is_alpha_beta_projective(op: &OpTable, alpha: ElemSet, beta: ElemSet) -> Result<ProjectivityWitness> {
    check_alpha_beta(op.domain(), alpha, beta)?;
    let d = op.domain();
    let coord = (0..op.arity()).find(|&i| {
        d.tuples(op.arity()).zip(op.table()).all(|(t, &v)| {
            (!alpha.contains(t[i]) || alpha.contains(v)) && (!beta.contains(t[i]) || beta.contains(v))
        })
    });
    Ok(ProjectivityWitness { alpha, beta, coord })
}

/// The first covering pair (canonical order) for which every basic operation
/// is αβ-projective; `None` means PGP.
pub fn egp_test(algebra: &Algebra) -> Result<Option<(ElemSet, ElemSet)>> {
    algebra.require_idempotent()?;
    for (alpha, beta) in alpha_beta_pairs(algebra.domain()) {
        let mut all = true;
        for o in algebra.ops() {
            if is_alpha_beta_projective(&o.op, alpha, beta)?.coord.is_none() {
                all = false;
                break;
            }
        }
        if all {
            return Ok(Some((alpha, beta)));
        }
    }
    Ok(None)
}
