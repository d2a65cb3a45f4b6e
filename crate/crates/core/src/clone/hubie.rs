//! Hubie-pols, the f^a_n / f^b_n families, the named 3-element algebras and
//! the Zhuk Condition search.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Algebra, Domain, Elem, ElemSet, OpTable};

use super::term::{find_pairwise_witnesses, CloneBudget, Term};

fn d3() -> Domain {
    Domain::new(3).expect("3 is a valid size")
}

/// The semilattice without unit: s(x,x)=x, everything off the diagonal goes to 2.
pub fn semilattice_s() -> OpTable {
    OpTable::from_fn(d3(), 2, |t| if t[0] == t[1] { t[0] } else { 2 }).expect("valid")
}

/// Chen's 4-ary operation: 0111,1011 ↦ 1; 0001,0010 ↦ 0; idempotent; else 2.
pub fn chen_r() -> OpTable {
    OpTable::from_fn(d3(), 4, |t| match t {
        [0, 1, 1, 1] | [1, 0, 1, 1] => 1,
        [0, 0, 0, 1] | [0, 0, 1, 0] => 0,
        [a, b, c, e] if a == b && b == c && c == e => *a,
        _ => 2,
    })
    .expect("valid")
}

/// ({0,1,2}; s)
pub fn semilattice_algebra() -> Algebra {
    Algebra::new(d3()).with_op("s", semilattice_s()).expect("valid")
}

/// ({0,1,2}; r, s)
pub fn chen_algebra() -> Algebra {
    Algebra::new(d3())
        .with_op("r", chen_r())
        .and_then(|a| a.with_op("s", semilattice_s()))
        .expect("valid")
}

/// The algebra whose only basic operation is the binary first projection.
pub fn projections_algebra(domain: Domain) -> Algebra {
    Algebra::new(domain)
        .with_op("p", OpTable::projection(domain, 2, 0).expect("valid"))
        .expect("valid")
}

fn swap01(e: Elem) -> Elem {
    match e {
        0 => 1,
        1 => 0,
        x => x,
    }
}

fn f_a_rule(t: &[Elem]) -> Elem {
    if t.iter().all(|&e| e == t[0]) {
        return t[0];
    }
    let ones = t.iter().filter(|&&e| e == 1).count();
    if t.iter().all(|&e| e <= 1) && ones == 1 {
        0
    } else {
        2
    }
}

fn f_hat_a_rule(t: &[Elem]) -> Elem {
    if t.iter().all(|&e| e == t[0]) {
        return t[0];
    }
    let rest_ones = t[1..].iter().filter(|&&e| e == 1).count();
    if t[0] == 1 && t.iter().all(|&e| e <= 1) && rest_ones == 1 {
        0
    } else {
        2
    }
}

fn need(n: usize, min: usize) -> Result<()> {
    if n < min {
        return Err(Error::Precondition(format!("n must be at least {min}, got {n}")));
    }
    Ok(())
}

/// f^a_n, arity n+1: constant tuples are fixed, a {0,1}-tuple with exactly one 1 maps to 0, else 2.
pub fn build_f_a_n(n: usize) -> Result<OpTable> {
    need(n, 3)?;
    OpTable::from_fn(d3(), n + 1, f_a_rule)
}

/// f^b_n: f^a_n with 0 and 1 swapped.
pub fn build_f_b_n(n: usize) -> Result<OpTable> {
    need(n, 3)?;
    OpTable::from_fn(d3(), n + 1, |t| {
        let u: Vec<Elem> = t.iter().map(|&e| swap01(e)).collect();
        swap01(f_a_rule(&u))
    })
}

/// f̂^a_n, arity n+2: constant tuples are fixed, a {0,1}-tuple starting with 1
/// and with exactly one further 1 maps to 0, else 2.
pub fn build_f_hat_a_n(n: usize) -> Result<OpTable> {
    need(n, 2)?;
    OpTable::from_fn(d3(), n + 2, f_hat_a_rule)
}

pub fn build_f_hat_b_n(n: usize) -> Result<OpTable> {
    need(n, 2)?;
    OpTable::from_fn(d3(), n + 2, |t| {
        let u: Vec<Elem> = t.iter().map(|&e| swap01(e)).collect();
        swap01(f_hat_a_rule(&u))
    })
}

/// Idempotent, and every slice with coordinate i fixed to z_i is onto D.
pub fn is_generalized_hubie_pol(op: &OpTable, z: &[Elem]) -> Result<bool> {
    if z.len() != op.arity() {
        return Err(Error::Arity {
            expected: op.arity(),
            got: z.len(),
        });
    }
    let d = op.domain();
    for &e in z {
        d.check(e as usize)?;
    }
    if !op.is_idempotent() {
        return Ok(false);
    }
    let mut images = vec![ElemSet::EMPTY; op.arity()];
    for (t, &v) in d.tuples(op.arity()).zip(op.table()) {
        for (i, img) in images.iter_mut().enumerate() {
            if t[i] == z[i] {
                img.insert(v);
            }
        }
    }
    Ok(images.iter().all(|&img| img == d.full_set()))
}

/// Hubie-pol in B: a generalized Hubie-pol on (b,...,b) for every b ∈ B.
pub fn is_hubie_pol(op: &OpTable, source: ElemSet) -> Result<bool> {
    if source.is_empty() {
        return Err(Error::Precondition("empty source set".into()));
    }
    for b in source.iter() {
        if !is_generalized_hubie_pol(op, &vec![b; op.arity()])? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ZhukWitness {
    pub regime: u8,
    pub p: Term,
    pub p_table: OpTable,
    pub r3: Term,
    pub r3_table: OpTable,
    pub depth: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZhukOutcome {
    Found(ZhukWitness),
    /// Both regimes have been ruled out exactly.
    Absent,
    /// The depth budget ran out first.
    Inconclusive { depth: usize },
}

fn rows(spec: &[(&[Elem], Elem)]) -> Vec<(Vec<Elem>, ElemSet)> {
    spec.iter().map(|(a, v)| (a.to_vec(), ElemSet::singleton(*v))).collect()
}

/// Binary p and ternary r_3 term operations matching one of the two regimes.
pub fn find_zhuk_condition(algebra: &Algebra, budget: CloneBudget) -> Result<ZhukOutcome> {
    algebra.require_idempotent()?;
    if algebra.domain().size() != 3 {
        return Err(Error::Precondition("the Zhuk Condition is stated for 3 elements".into()));
    }
    let regimes: [(u8, Vec<_>, Vec<_>); 2] = [
        (
            1,
            rows(&[(&[0, 1], 0), (&[0, 2], 2)]),
            rows(&[(&[0, 0, 1], 0), (&[0, 1, 0], 0), (&[0, 1, 1], 2)]),
        ),
        (
            2,
            rows(&[(&[0, 1], 1), (&[2, 1], 2)]),
            rows(&[(&[1, 0, 1], 1), (&[1, 1, 0], 1), (&[1, 0, 0], 2)]),
        ),
    ];
    let mut all_absent = true;
    let mut deepest = 0;
    for (regime, p_spec, r_spec) in regimes {
        let p = find_pairwise_witnesses(algebra, &p_spec, budget)?;
        let r = find_pairwise_witnesses(algebra, &r_spec, budget)?;
        deepest = deepest.max(p.depth_reached).max(r.depth_reached);
        match (p.found, r.found) {
            (Some((p, p_table)), Some((r3, r3_table))) => {
                let depth = p.depth().max(r3.depth());
                return Ok(ZhukOutcome::Found(ZhukWitness {
                    regime,
                    p,
                    p_table,
                    r3,
                    r3_table,
                    depth,
                }));
            }
            _ => {
                if !(p.impossible || r.impossible) {
                    all_absent = false;
                }
            }
        }
    }
    Ok(if all_absent {
        ZhukOutcome::Absent
    } else {
        ZhukOutcome::Inconclusive { depth: deepest }
    })
}
