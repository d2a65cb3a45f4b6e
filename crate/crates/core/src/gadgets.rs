//! The ρ/σ_k/τ_k relations, the pp-definition check, Z and R, the
//! near-unanimity operation and existential triviality.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::clone::{check_alpha_beta, preserves};
use crate::error::{Error, Result};
use crate::model::{Domain, Dnf, Elem, ElemSet, Literal, OpTable, Relation, Structure, Tuple, MAX_MATERIALIZE};

/// A covering pair of strict subsets of the domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlphaBeta {
    domain: Domain,
    pub alpha: ElemSet,
    pub beta: ElemSet,
}

impl AlphaBeta {
    pub fn new(domain: Domain, alpha: ElemSet, beta: ElemSet) -> Result<Self> {
        check_alpha_beta(domain, alpha, beta)?;
        Ok(AlphaBeta { domain, alpha, beta })
    }

    /// α = {0,2}, β = {1,2} on {0,1,2}.
    pub fn standard() -> Self {
        AlphaBeta {
            domain: Domain::new(3).expect("valid"),
            alpha: ElemSet(0b101),
            beta: ElemSet(0b110),
        }
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn meet(&self) -> ElemSet {
        self.alpha.intersection(self.beta)
    }

    fn require_meet(&self) -> Result<Elem> {
        self.meet()
            .min()
            .ok_or_else(|| Error::Precondition(format!("{} ∩ {} is empty", self.alpha, self.beta)))
    }
}

/// Which encoding a builder should produce.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Form {
    Tuples,
    Dnf,
}

/// k blocks of `width` coordinates; a tuple is in the relation iff some block
/// lies entirely in α or entirely in β.
fn block_dnf(ab: &AlphaBeta, width: usize, k: usize) -> Dnf {
    let mut terms = Vec::new();
    for block in 0..k {
        for set in [ab.alpha, ab.beta] {
            let d = Domain::new(set.len().max(1)).expect("small");
            let elems: Vec<Elem> = set.iter().collect();
            for pick in d.tuples(width) {
                terms.push(
                    pick.iter()
                        .enumerate()
                        .map(|(i, &p)| Literal::EqConst(block * width + i, elems[p as usize]))
                        .collect(),
                );
            }
        }
    }
    Dnf { terms }
}

fn block_relation(ab: &AlphaBeta, width: usize, k: usize, form: Form) -> Result<Relation> {
    if k == 0 {
        return Err(Error::Precondition("k must be at least 1".into()));
    }
    let arity = width * k;
    let rel = Relation::from_dnf(ab.domain, arity, block_dnf(ab, width, k))?;
    match form {
        Form::Dnf => Ok(rel),
        Form::Tuples => {
            ab.domain.power_within(arity, MAX_MATERIALIZE)?;
            rel.to_tuples()
        }
    }
}

/// ρ(x,y) = α² ∪ β².
pub fn build_rho(ab: &AlphaBeta, form: Form) -> Result<Relation> {
    block_relation(ab, 2, 1, form)
}

/// ρ'(x,y,z) = α³ ∪ β³.
pub fn build_rho_prime(ab: &AlphaBeta, form: Form) -> Result<Relation> {
    block_relation(ab, 3, 1, form)
}

/// σ_k = ρ(x_1,y_1) ∨ … ∨ ρ(x_k,y_k).
pub fn build_sigma_k(ab: &AlphaBeta, k: usize, form: Form) -> Result<Relation> {
    block_relation(ab, 2, k, form)
}

/// τ_k = ρ'(x_1,y_1,z_1) ∨ … ∨ ρ'(x_k,y_k,z_k).
pub fn build_tau_k(ab: &AlphaBeta, k: usize, form: Form) -> Result<Relation> {
    block_relation(ab, 3, k, form)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PpCheck {
    pub k: usize,
    pub conjuncts: usize,
    pub assignments: usize,
    pub tau_size: usize,
    pub phi_size: usize,
    /// τ_k ⊆ Φ, the easy direction.
    pub tau_in_phi: bool,
    pub equal: bool,
}

/// Materializes Φ, the conjunction of σ_k over every way of picking one pair
/// from each block (x_i,y_i,z_i), and compares it with τ_k.
pub fn verify_pp_definition(ab: &AlphaBeta, k: usize) -> Result<PpCheck> {
    if k == 0 || k > 3 {
        return Err(Error::Budget(format!("pp-definition check runs for 1 ≤ k ≤ 3, got {k}")));
    }
    let d = ab.domain;
    let sigma = build_sigma_k(ab, k, Form::Tuples)?;
    let tau = build_tau_k(ab, k, Form::Dnf)?;
    const PAIRS: [(usize, usize); 3] = [(0, 1), (1, 2), (0, 2)];
    let choices: Vec<Tuple> = Domain::new(3).expect("valid").tuples(k).collect();
    let mut check = PpCheck {
        k,
        conjuncts: choices.len(),
        assignments: 0,
        tau_size: 0,
        phi_size: 0,
        tau_in_phi: true,
        equal: true,
    };
    let mut arg = vec![0 as Elem; 2 * k];
    for t in d.tuples(3 * k) {
        check.assignments += 1;
        let phi = choices.iter().all(|c| {
            for (i, &ch) in c.iter().enumerate() {
                let (p, q) = PAIRS[ch as usize];
                arg[2 * i] = t[3 * i + p];
                arg[2 * i + 1] = t[3 * i + q];
            }
            sigma.contains(&arg)
        });
        let in_tau = tau.contains(&t);
        check.phi_size += phi as usize;
        check.tau_size += in_tau as usize;
        if in_tau && !phi {
            check.tau_in_phi = false;
        }
        if in_tau != phi {
            check.equal = false;
        }
    }
    Ok(check)
}

fn d3() -> Domain {
    Domain::new(3).expect("valid")
}

/// Z = {(0,0),(2,1),(2,2),(0,2)}.
pub fn build_z() -> Relation {
    Relation::from_tuples(d3(), 2, [vec![0, 0], vec![2, 1], vec![2, 2], vec![0, 2]]).expect("valid")
}

/// R = {0,2}³ minus (0,0,0) and (2,2,2).
pub fn build_r() -> Relation {
    let t = d3()
        .tuples(3)
        .filter(|t| t.iter().all(|&e| e != 1) && !(t[0] == t[1] && t[1] == t[2]));
    Relation::from_tuples(d3(), 3, t).expect("valid")
}

/// The (3m+1)-ary near-unanimity operation: value x when at least 3m
/// arguments are x, otherwise the least element of α ∩ β.
pub fn build_nu_for_sigma(ab: &AlphaBeta, m: usize) -> Result<OpTable> {
    if m == 0 {
        return Err(Error::Precondition("m must be at least 1".into()));
    }
    let fallback = ab.require_meet()?;
    let arity = 3 * m + 1;
    ab.domain.power_within(arity, MAX_MATERIALIZE)?;
    let n = ab.domain.size();
    OpTable::from_fn(ab.domain, arity, |t| {
        let mut counts = vec![0usize; n];
        for &e in t {
            counts[e as usize] += 1;
        }
        counts
            .iter()
            .position(|&c| c + 1 >= arity)
            .map_or(fallback, |x| x as Elem)
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NuCheck {
    pub m: usize,
    pub preserves_sigma: Vec<(usize, bool)>,
    pub fixes_constants: bool,
}

impl NuCheck {
    pub fn holds(&self) -> bool {
        self.fixes_constants && self.preserves_sigma.iter().all(|&(_, ok)| ok)
    }
}

/// Does the near-unanimity operation preserve σ_i for i ≤ m and every constant?
pub fn check_nu_for_sigma(ab: &AlphaBeta, m: usize) -> Result<NuCheck> {
    let f = build_nu_for_sigma(ab, m)?;
    let mut preserves_sigma = Vec::new();
    for i in 1..=m {
        let sigma = build_sigma_k(ab, i, Form::Tuples)?;
        let size = sigma.materialize()?.len() as f64;
        if size.powi(f.arity() as i32) > 1e8 {
            return Err(Error::Budget(format!(
                "{size}^{} argument tuples for σ_{i}",
                f.arity()
            )));
        }
        preserves_sigma.push((i, preserves(&f, &sigma)?));
    }
    Ok(NuCheck {
        m,
        preserves_sigma,
        fixes_constants: f.is_idempotent(),
    })
}

/// Replacing any coordinate of any tuple by c stays inside the relation.
pub fn is_canon(rel: &Relation, c: Elem) -> Result<bool> {
    for t in rel.materialize()? {
        for i in 0..t.len() {
            let mut u = t.clone();
            u[i] = c;
            if !rel.contains(&u) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// The least canon of all relations of the structure, if any.
pub fn is_existentially_trivial(structure: &Structure) -> Result<Option<Elem>> {
    'outer: for c in structure.domain().elements() {
        for r in structure.relations() {
            if !is_canon(&r.relation, c)? {
                continue 'outer;
            }
        }
        return Ok(Some(c));
    }
    Ok(None)
}

/// A relation split into forced constants, forced equalities and a residue
/// on the remaining coordinates (`kept`, in original numbering).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stripped {
    pub residual: Relation,
    pub kept: Vec<usize>,
    pub constants: Vec<(usize, Elem)>,
    pub equal: Vec<(usize, usize)>,
    pub empty: bool,
}

/// Peel off coordinates whose one-coordinate projection is a single value and
/// coordinates forced equal to an earlier one, until none remain.
pub fn strip_forced(rel: &Relation) -> Result<Stripped> {
    let mut out = Stripped {
        residual: rel.clone(),
        kept: (0..rel.arity()).collect(),
        constants: Vec::new(),
        equal: Vec::new(),
        empty: false,
    };
    if rel.is_empty()? {
        out.empty = true;
        return Ok(out);
    }
    'again: loop {
        let cur = &out.residual;
        for i in 0..cur.arity() {
            let proj = cur.project(&[i])?;
            if proj.len() == 1 {
                let c = proj.iter().next().expect("one")[0];
                out.constants.push((out.kept[i], c));
                out.residual = cur.fix(i, c)?;
                out.kept.remove(i);
                continue 'again;
            }
        }
        for i in 0..cur.arity() {
            for j in i + 1..cur.arity() {
                let proj: BTreeSet<Tuple> = cur.project(&[i, j])?;
                if proj.iter().all(|t| t[0] == t[1]) {
                    out.equal.push((out.kept[i], out.kept[j]));
                    out.residual = cur.exists(j)?;
                    out.kept.remove(j);
                    continue 'again;
                }
            }
        }
        return Ok(out);
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlmostTrivial {
    pub canon: Option<Elem>,
    pub stripped: Vec<(String, Stripped)>,
}

/// Existential triviality after stripping forced constants and equalities.
pub fn is_almost_existentially_trivial(structure: &Structure) -> Result<AlmostTrivial> {
    let stripped = structure
        .relations()
        .iter()
        .map(|r| Ok((r.name.clone(), strip_forced(&r.relation)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut canon = None;
    'outer: for c in structure.domain().elements() {
        for (_, s) in &stripped {
            if !s.empty && !is_canon(&s.residual, c)? {
                continue 'outer;
            }
        }
        canon = Some(c);
        break;
    }
    Ok(AlmostTrivial { canon, stripped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clone::is_alpha_beta_projective;
    use proptest::prelude::*;

    fn size(r: &Relation) -> usize {
        r.materialize().unwrap().len()
    }

    #[test]
    fn rho_sizes() {
        let ab = AlphaBeta::standard();
        let rho = build_rho(&ab, Form::Tuples).unwrap();
        assert_eq!(size(&rho), 7);
        assert!(!rho.contains(&[0, 1]));
        assert_eq!(size(&build_rho_prime(&ab, Form::Dnf).unwrap()), 15);
        assert_eq!(
            build_tau_k(&ab, 1, Form::Tuples).unwrap().materialize().unwrap(),
            build_rho_prime(&ab, Form::Tuples).unwrap().materialize().unwrap()
        );
    }

    #[test]
    fn sigma_membership() {
        let s = build_sigma_k(&AlphaBeta::standard(), 2, Form::Dnf).unwrap();
        assert!(s.contains(&[0, 1, 0, 0]));
        assert!(!s.contains(&[0, 1, 1, 0]));
    }

    #[test]
    fn tau_dnf_is_linear_in_k() {
        let ab = AlphaBeta::standard();
        let t = build_tau_k(&ab, 40, Form::Dnf).unwrap();
        let crate::model::Encoding::Dnf(d) = t.encoding() else { panic!() };
        assert_eq!(d.terms.len(), 40 * 16);
        assert!(build_tau_k(&ab, 5, Form::Tuples).unwrap_err().is_budget());
        assert!(build_tau_k(&ab, 0, Form::Dnf).is_err());
    }

    #[test]
    fn pp_definition() {
        let ab = AlphaBeta::standard();
        let one = verify_pp_definition(&ab, 1).unwrap();
        assert_eq!((one.assignments, one.conjuncts), (27, 3));
        assert!(one.equal && one.tau_in_phi);
        let two = verify_pp_definition(&ab, 2).unwrap();
        assert_eq!((two.assignments, two.conjuncts), (729, 9));
        assert!(two.equal);
        assert!(verify_pp_definition(&ab, 4).unwrap_err().is_budget());
    }

    #[test]
    fn z_and_r() {
        assert!(build_z().contains(&[2, 1]));
        assert_eq!(size(&build_z()), 4);
        assert_eq!(size(&build_r()), 6);
        assert!(!build_r().contains(&[0, 0, 0]));
    }

    #[test]
    fn near_unanimity() {
        let ab = AlphaBeta::standard();
        let f = build_nu_for_sigma(&ab, 1).unwrap();
        for x in 0..3 {
            for y in 0..3 {
                for pos in 0..4 {
                    let mut t = vec![x; 4];
                    t[pos] = y;
                    assert_eq!(f.get(&t), x);
                }
            }
        }
        assert_eq!(f.get(&[0, 1, 2, 1]), 2);
        assert!(check_nu_for_sigma(&ab, 1).unwrap().holds());
        let disjoint = AlphaBeta::new(Domain::new(2).unwrap(), ElemSet(1), ElemSet(2)).unwrap();
        assert!(build_nu_for_sigma(&disjoint, 1).is_err());
    }

    #[test]
    fn existential_triviality() {
        let ab = AlphaBeta::standard();
        let s = Structure::new(ab.domain())
            .with_relation("tau1", build_tau_k(&ab, 1, Form::Dnf).unwrap())
            .unwrap()
            .with_relation("tau2", build_tau_k(&ab, 2, Form::Dnf).unwrap())
            .unwrap();
        assert_eq!(is_existentially_trivial(&s).unwrap(), Some(2));
        let d2 = Domain::new(2).unwrap();
        let neq = Structure::new(d2)
            .with_relation("neq", Relation::from_tuples(d2, 2, [vec![0, 1], vec![1, 0]]).unwrap())
            .unwrap();
        assert_eq!(is_existentially_trivial(&neq).unwrap(), None);
        assert_eq!(is_almost_existentially_trivial(&neq).unwrap().canon, None);
        let full = Structure::new(ab.domain())
            .with_relation("t", Relation::full(ab.domain(), 3))
            .unwrap();
        assert_eq!(is_existentially_trivial(&full).unwrap(), Some(0));
    }

    #[test]
    fn stripping() {
        let d = Domain::new(3).unwrap();
        // x = 1 ∧ y = z ∧ z ∈ {0,2}
        let r = Relation::from_tuples(d, 3, [vec![1, 0, 0], vec![1, 2, 2]]).unwrap();
        let s = strip_forced(&r).unwrap();
        assert_eq!(s.constants, vec![(0, 1)]);
        assert_eq!(s.equal, vec![(1, 2)]);
        assert_eq!(s.kept, vec![1]);
        assert_eq!(s.residual.materialize().unwrap().len(), 2);
        let eqs = Structure::new(d).with_relation("r", r).unwrap();
        assert_eq!(is_existentially_trivial(&eqs).unwrap(), None);
        assert_eq!(is_almost_existentially_trivial(&eqs).unwrap().canon, Some(0));
    }

    fn permute_blocks(t: &[Elem], width: usize, perm: &[usize]) -> Tuple {
        perm.iter().flat_map(|&b| t[b * width..(b + 1) * width].to_vec()).collect()
    }

    #[test]
    fn encodings_agree_and_blocks_commute() {
        let ab = AlphaBeta::standard();
        for k in 1..=2 {
            for (width, build) in [(2, build_sigma_k as fn(&AlphaBeta, usize, Form) -> Result<Relation>), (3, build_tau_k)] {
                let t = build(&ab, k, Form::Tuples).unwrap().materialize().unwrap();
                let d = build(&ab, k, Form::Dnf).unwrap().materialize().unwrap();
                assert_eq!(t, d);
                if k == 2 {
                    let swapped: BTreeSet<Tuple> = t.iter().map(|x| permute_blocks(x, width, &[1, 0])).collect();
                    assert_eq!(swapped, t);
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn tau_preserved_by_alpha_beta_projective_ops(seed in proptest::collection::vec(0u8..3, 27), coord in 0usize..3) {
            // force coordinate `coord` to be αβ-projective for α={0,2}, β={1,2}
            let ab = AlphaBeta::standard();
            let f = OpTable::from_fn(ab.domain(), 3, |t| {
                let i = t.iter().fold(0, |acc, &e| acc * 3 + e as usize);
                let v = seed[i];
                match t[coord] {
                    0 => if v == 1 { 0 } else { v },
                    1 => if v == 0 { 1 } else { v },
                    _ => 2,
                }
            }).unwrap();
            prop_assert!(is_alpha_beta_projective(&f, ab.alpha, ab.beta).unwrap().coord.is_some());
            prop_assert!(preserves(&f, &build_tau_k(&ab, 1, Form::Tuples).unwrap()).unwrap());
        }
    }
}
