mod common;

use std::collections::BTreeSet;

use common::{d3, random_invariant_structure, random_sentence, SentenceShape};
use proptest::prelude::*;
use qforge_core::classify::{all_partitions, congruences, is_congruence, quotient};
use qforge_core::clone::{chen_algebra, semilattice_algebra};
use qforge_core::model::{Algebra, Elem, OpTable, Relation, Structure};
use qforge_core::powers::{build_switch_adversary, power_closure, Adversary};
use qforge_core::qcsp::{csp_solve, qcsp_eval, skolem_expand, CspArg, CspConstraint, CspInstance};
use rand::rngs::StdRng;
use rand::SeedableRng;

fn idempotent_binary(table: Vec<Elem>) -> Algebra {
    let d = d3();
    let op = OpTable::from_fn(d, 2, |t| if t[0] == t[1] { t[0] } else { table[3 * t[0] as usize + t[1] as usize] })
        .unwrap();
    Algebra::new(d).with_op("f", op).unwrap()
}

fn structure_from_seed(seed: u64, algebra: &Algebra, count: usize) -> Structure {
    random_invariant_structure(&mut StdRng::seed_from_u64(seed), algebra, count)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // A congruence is exactly a partition whose quotient does not depend on
    // the chosen representatives.
    #[test]
    fn quotient_is_representative_free(table in prop::collection::vec(0u8..3, 9)) {
        let alg = idempotent_binary(table);
        let f = alg.op("f").unwrap();
        let found = congruences(&alg);
        for part in all_partitions(d3()) {
            let well_defined = d3().tuples(2).all(|a| {
                d3().tuples(2).all(|b| {
                    let same = (0..2).all(|i| part.block_of(a[i]) == part.block_of(b[i]));
                    !same || part.block_of(f.get(&a)) == part.block_of(f.get(&b))
                })
            });
            prop_assert_eq!(is_congruence(&alg, &part), well_defined);
            prop_assert_eq!(found.contains(&part), well_defined);
            if well_defined {
                let q = quotient(&alg, &part).unwrap();
                let qf = q.op("f").unwrap();
                for a in d3().tuples(2) {
                    let blocks: Vec<Elem> = a.iter().map(|&x| part.block_of(x) as Elem).collect();
                    prop_assert_eq!(qf.get(&blocks) as usize, part.block_of(f.get(&a)));
                }
            }
        }
    }

    #[test]
    fn closure_is_closed_and_minimal(seed in prop::collection::btree_set(prop::collection::vec(0u8..3, 2), 1..4)) {
        let alg = chen_algebra();
        let closed = power_closure(&alg, &seed).unwrap();
        prop_assert!(seed.is_subset(&closed));
        let rel = Relation::from_tuples(d3(), 2, closed.clone()).unwrap();
        for o in alg.ops() {
            prop_assert!(qforge_core::clone::preserves(&o.op, &rel).unwrap());
        }
        prop_assert_eq!(closed, common::naive_closure(&alg, &seed));
    }

    #[test]
    fn csp_solver_matches_enumeration(seed in any::<u64>(), cons in prop::collection::vec((0usize..3, prop::collection::vec(0usize..5, 3)), 1..6)) {
        let s = structure_from_seed(seed, &semilattice_algebra(), 3);
        let mut inst = CspInstance::default();
        for i in 0..5 {
            inst.var(format!("v{i}"));
        }
        for (r, vars) in cons {
            let rel = &s.relations()[r];
            let args = vars.iter().take(rel.relation.arity()).map(|&v| CspArg::Var(v)).collect();
            inst.constraints.push(CspConstraint::Rel { name: rel.name.clone(), args });
        }
        let any = d3().tuples(5).any(|t| inst.check(&s, &t).unwrap());
        match csp_solve(&inst, &s).unwrap() {
            Some(sol) => prop_assert!(inst.check(&s, &sol).unwrap()),
            None => prop_assert!(!any),
        }
        prop_assert_eq!(csp_solve(&inst, &s).unwrap().is_some(), any);
    }

    // Skolemizing against every universal assignment is exact on any structure.
    #[test]
    fn full_expansion_is_exact(seed in any::<u64>(), u in 0usize..3, x in 0usize..4, atoms in 1usize..5) {
        let mut rng = StdRng::seed_from_u64(seed);
        let s = random_invariant_structure(&mut rng, &semilattice_algebra(), 2);
        let shape = SentenceShape { universals: u, existentials: x, atoms, const_prob: 0.1, eq_prob: 0.1 };
        let phi = random_sentence(&mut rng, &s, &shape);
        let inst = skolem_expand(&s, &phi, None).unwrap();
        prop_assert_eq!(csp_solve(&inst, &s).unwrap().is_some(), qcsp_eval(&s, &phi, None).unwrap());
    }

    // Shrinking the adversary can only help the existential player.
    #[test]
    fn adversary_monotone(seed in any::<u64>(), m in 1usize..4, keep in prop::collection::vec(any::<bool>(), 27)) {
        let mut rng = StdRng::seed_from_u64(seed);
        let s = random_invariant_structure(&mut rng, &chen_algebra(), 2);
        let shape = SentenceShape { universals: m, existentials: 2, atoms: 3, const_prob: 0.1, eq_prob: 0.1 };
        let phi = random_sentence(&mut rng, &s, &shape);
        let xi = build_switch_adversary(d3(), m, 1).unwrap();
        let sub: BTreeSet<_> = xi.tuples().iter().zip(&keep).filter(|(_, &k)| k).map(|(t, _)| t.clone()).collect();
        prop_assume!(!sub.is_empty());
        let sub = Adversary::from_tuples(d3(), m, sub).unwrap();
        let full = Adversary::full(d3(), m).unwrap();
        let on_full = qcsp_eval(&s, &phi, Some(&full)).unwrap();
        let on_xi = qcsp_eval(&s, &phi, Some(&xi)).unwrap();
        let on_sub = qcsp_eval(&s, &phi, Some(&sub)).unwrap();
        prop_assert!(!on_full || on_xi);
        prop_assert!(!on_xi || on_sub);
        prop_assert_eq!(on_full, qcsp_eval(&s, &phi, None).unwrap());
    }

    #[test]
    fn encodings_agree(seed in any::<u64>()) {
        let s = structure_from_seed(seed, &chen_algebra(), 3);
        for r in s.relations() {
            let tuples = r.relation.materialize().unwrap();
            prop_assert_eq!(&r.relation.to_dnf().unwrap().materialize().unwrap(), &tuples);
            prop_assert_eq!(&r.relation.to_qf().unwrap().materialize().unwrap(), &tuples);
        }
    }
}
