#![allow(dead_code)]

use std::collections::BTreeSet;

use qforge_core::model::{Algebra, Arg, Atom, Domain, Elem, Quantifier, Relation, SentencePH, Structure, Tuple};
use qforge_core::powers::power_closure;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn d3() -> Domain {
    Domain::new(3).unwrap()
}

/// A relation generated, as a subpower, by a few random tuples.
pub fn random_invariant_relation(rng: &mut impl Rng, algebra: &Algebra, arity: usize, seeds: usize) -> Relation {
    let d = algebra.domain();
    let seed: BTreeSet<Tuple> = (0..seeds)
        .map(|_| (0..arity).map(|_| rng.gen_range(0..d.size()) as Elem).collect())
        .collect();
    let closed = power_closure(algebra, &seed).unwrap();
    Relation::from_tuples(d, arity, closed).unwrap()
}

/// r0, r1, ... of arities 1..=3, each invariant under the algebra.
pub fn random_invariant_structure(rng: &mut impl Rng, algebra: &Algebra, count: usize) -> Structure {
    let mut s = Structure::new(algebra.domain());
    for i in 0..count {
        let arity = rng.gen_range(1..=3);
        let seeds = rng.gen_range(1..=3);
        s.add_relation(format!("r{i}"), random_invariant_relation(rng, algebra, arity, seeds))
            .unwrap();
    }
    s
}

pub struct SentenceShape {
    pub universals: usize,
    pub existentials: usize,
    pub atoms: usize,
    /// Probability that an argument is a constant rather than a variable.
    pub const_prob: f64,
    /// Probability that an atom is an equality.
    pub eq_prob: f64,
}

/// A random pH-sentence over the structure's relations, variables shuffled
/// into a random prefix order.
pub fn random_sentence(rng: &mut impl Rng, structure: &Structure, shape: &SentenceShape) -> SentencePH {
    let n = structure.domain().size();
    let mut prefix: Vec<(Quantifier, String)> = (0..shape.universals)
        .map(|i| (Quantifier::Forall, format!("u{i}")))
        .chain((0..shape.existentials).map(|i| (Quantifier::Exists, format!("e{i}"))))
        .collect();
    prefix.shuffle(rng);
    let names: Vec<String> = prefix.iter().map(|(_, v)| v.clone()).collect();
    let arg = |rng: &mut dyn rand::RngCore| -> Arg {
        if names.is_empty() || rng.gen_bool(shape.const_prob) {
            Arg::Const(rng.gen_range(0..n) as Elem)
        } else {
            Arg::Var(names[rng.gen_range(0..names.len())].clone())
        }
    };
    let rels = structure.relations();
    let mut matrix = Vec::new();
    for _ in 0..shape.atoms {
        if rels.is_empty() || rng.gen_bool(shape.eq_prob) {
            let a = arg(rng);
            let b = arg(rng);
            matrix.push(Atom::Eq(a, b));
        } else {
            let r = &rels[rng.gen_range(0..rels.len())];
            let args = (0..r.relation.arity()).map(|_| arg(rng)).collect();
            matrix.push(Atom::rel(r.name.clone(), args));
        }
    }
    SentencePH::new(prefix, matrix).unwrap()
}

/// Naive closure: apply every operation to every choice of members until nothing new appears.
pub fn naive_closure(algebra: &Algebra, seed: &BTreeSet<Tuple>) -> BTreeSet<Tuple> {
    let mut set = seed.clone();
    loop {
        let members: Vec<Tuple> = set.iter().cloned().collect();
        let m = members.first().map_or(0, |t| t.len());
        let mut grew = false;
        for o in algebra.ops() {
            let k = o.op.arity();
            let total = members.len().pow(k as u32);
            for idx in 0..total {
                let mut rest = idx;
                let mut rows = Vec::with_capacity(k);
                for _ in 0..k {
                    rows.push(&members[rest % members.len()]);
                    rest /= members.len();
                }
                let t: Tuple = (0..m)
                    .map(|i| o.op.get(&rows.iter().map(|r| r[i]).collect::<Vec<_>>()))
                    .collect();
                grew |= set.insert(t);
            }
        }
        if !grew {
            return set;
        }
    }
}
