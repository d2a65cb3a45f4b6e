//! Essential relations and essential tuples.

use std::collections::{BTreeSet, HashSet};

use crate::error::{Error, Result};
use crate::model::{Elem, Relation, Tuple, MAX_MATERIALIZE};

use super::{hubie::semilattice_s, preserves};

fn drop_one(t: &[Elem], i: usize) -> Tuple {
    let mut u = t.to_vec();
    u.remove(i);
    u
}

/// ρ̃: the conjunction of the n drop-one projections ∃y ρ(..., y, ...).
pub fn tilde_relation(rel: &Relation) -> Result<Relation> {
    let n = rel.arity();
    if n == 0 {
        return Err(Error::Precondition("ρ̃ needs arity at least 1".into()));
    }
    let d = rel.domain();
    d.power_within(n, MAX_MATERIALIZE)?;
    let tuples = rel.materialize()?;
    let sigmas: Vec<HashSet<Tuple>> = (0..n)
        .map(|i| tuples.iter().map(|t| drop_one(t, i)).collect())
        .collect();
    let tilde = d
        .tuples(n)
        .filter(|t| (0..n).all(|i| sigmas[i].contains(&drop_one(t, i))));
    Relation::from_tuples(d, n, tilde)
}

/// Tuples outside ρ each of whose coordinates can be changed to land in ρ.
/// Computed straight from the definition, independently of ρ̃.
pub fn essential_tuples(rel: &Relation) -> Result<BTreeSet<Tuple>> {
    let n = rel.arity();
    if n == 0 {
        return Err(Error::Precondition("essential tuples need arity at least 1".into()));
    }
    let d = rel.domain();
    d.power_within(n, MAX_MATERIALIZE)?;
    let mut out = BTreeSet::new();
    for t in d.tuples(n) {
        if rel.contains(&t) {
            continue;
        }
        let repairable = (0..n).all(|i| {
            d.elements().any(|b| {
                let mut u = t.clone();
                u[i] = b;
                rel.contains(&u)
            })
        });
        if repairable {
            out.insert(t);
        }
    }
    Ok(out)
}

/// ρ is essential iff it differs from ρ̃, i.e. it is not the conjunction of
/// its own lower-arity projections.
pub fn is_essential(rel: &Relation) -> Result<bool> {
    Ok(tilde_relation(rel)?.materialize()? != rel.materialize()?)
}

/// If `rel` is preserved by the semilattice s, no essential tuple starts
/// with (2,2). Vacuously true otherwise or below arity 2.
pub fn lemma_micro_holds(rel: &Relation) -> Result<bool> {
    if rel.arity() < 2 || rel.domain().size() != 3 || !preserves(&semilattice_s(), rel)? {
        return Ok(true);
    }
    Ok(essential_tuples(rel)?.iter().all(|t| t[0] != 2 || t[1] != 2))
}
