//! Subalgebras, congruences, G-set factors and the three-element
//! complexity classification.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::clone::{
    build_f_a_n, build_f_b_n, build_f_hat_a_n, build_f_hat_b_n, egp_test, is_hubie_pol, is_polymorphism,
};
use crate::error::{Error, Result};
use crate::model::{Algebra, Domain, Elem, ElemSet, OpTable, Structure};
use crate::powers::{is_k_collapsible, is_k_switchable, PowerVerdict};

/// Blocks of an equivalence relation, each listed by its least element first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub blocks: Vec<ElemSet>,
}

impl Partition {
    pub fn new(domain: Domain, mut blocks: Vec<ElemSet>) -> Result<Self> {
        let mut seen = ElemSet::EMPTY;
        for &b in &blocks {
            if b.is_empty() || !seen.intersection(b).is_empty() {
                return Err(Error::Shape("blocks must be nonempty and disjoint".into()));
            }
            seen = seen.union(b);
        }
        if seen != domain.full_set() {
            return Err(Error::Shape("blocks must cover the domain".into()));
        }
        blocks.sort_by_key(|&b| b.min());
        Ok(Partition { blocks })
    }

    pub fn block_of(&self, e: Elem) -> usize {
        self.blocks.iter().position(|b| b.contains(e)).expect("covering")
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Comma-separated block list, blocks separated by `|`, e.g. "0,2|1".
    pub fn parse(text: &str, domain: Domain) -> Result<Self> {
        let blocks = text
            .split('|')
            .map(|b| ElemSet::parse(b, domain))
            .collect::<Result<Vec<_>>>()?;
        Partition::new(domain, blocks)
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.blocks.iter().map(|b| b.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

/// All set partitions of the domain, in restricted-growth order.
pub fn all_partitions(domain: Domain) -> Vec<Partition> {
    let n = domain.size();
    let mut out = Vec::new();
    let mut rg = vec![0usize; n];
    fn rec(i: usize, max: usize, rg: &mut Vec<usize>, n: usize, out: &mut Vec<Partition>) {
        if i == n {
            let k = rg.iter().max().map_or(0, |m| m + 1);
            let mut blocks = vec![ElemSet::EMPTY; k];
            for (e, &b) in rg.iter().enumerate() {
                blocks[b].insert(e as Elem);
            }
            out.push(Partition { blocks });
            return;
        }
        for b in 0..=max + 1 {
            rg[i] = b;
            rec(i + 1, max.max(b), rg, n, out);
        }
    }
    if n == 0 {
        return out;
    }
    rec(1, 0, &mut rg, n, &mut out);
    out
}

/// Nonempty subsets closed under every operation, by bitmask.
pub fn subalgebras(algebra: &Algebra) -> Vec<ElemSet> {
    let d = algebra.domain();
    let full = d.full_set().0;
    (1..=full)
        .map(ElemSet)
        .filter(|&b| is_closed(algebra, b))
        .collect()
}

fn is_closed(algebra: &Algebra, b: ElemSet) -> bool {
    algebra.ops().iter().all(|o| {
        let d = algebra.domain();
        d.tuples(o.op.arity())
            .zip(o.op.table())
            .all(|(t, &v)| !t.iter().all(|&e| b.contains(e)) || b.contains(v))
    })
}

fn compatible(op: &OpTable, part: &Partition) -> bool {
    let d = op.domain();
    let k = op.arity();
    // unary polynomials suffice: change one argument within its block
    for t in d.tuples(k) {
        let v = part.block_of(op.get(&t));
        for i in 0..k {
            for y in part.blocks[part.block_of(t[i])].iter() {
                let mut u = t.clone();
                u[i] = y;
                if part.block_of(op.get(&u)) != v {
                    return false;
                }
            }
        }
    }
    true
}

pub fn is_congruence(algebra: &Algebra, part: &Partition) -> bool {
    algebra.ops().iter().all(|o| compatible(&o.op, part))
}

pub fn congruences(algebra: &Algebra) -> Vec<Partition> {
    all_partitions(algebra.domain())
        .into_iter()
        .filter(|p| is_congruence(algebra, p))
        .collect()
}

/// Operations on blocks, block i being the i-th block of `part`.
pub fn quotient(algebra: &Algebra, part: &Partition) -> Result<Algebra> {
    if !is_congruence(algebra, part) {
        return Err(Error::Precondition(format!("{part} is not a congruence")));
    }
    let q = Domain::new(part.len())?;
    let reps: Vec<Elem> = part.blocks.iter().map(|&b| b.min().expect("nonempty")).collect();
    let mut out = Algebra::new(q);
    for o in algebra.ops() {
        let table = OpTable::from_fn(q, o.op.arity(), |t| {
            let args: Vec<Elem> = t.iter().map(|&b| reps[b as usize]).collect();
            part.block_of(o.op.get(&args)) as Elem
        })?;
        out.add_op(o.name.clone(), table)?;
    }
    Ok(out)
}

/// The subalgebra on `sub`, its elements relabelled 0.. in increasing order.
pub fn restrict(algebra: &Algebra, sub: ElemSet) -> Result<Algebra> {
    if sub.is_empty() || !is_closed(algebra, sub) {
        return Err(Error::Precondition(format!("{sub} is not a subalgebra")));
    }
    let elems: Vec<Elem> = sub.iter().collect();
    let d = Domain::new(elems.len())?;
    let mut out = Algebra::new(d);
    for o in algebra.ops() {
        let table = OpTable::from_fn(d, o.op.arity(), |t| {
            let args: Vec<Elem> = t.iter().map(|&i| elems[i as usize]).collect();
            let v = o.op.get(&args);
            elems.iter().position(|&e| e == v).expect("closed") as Elem
        })?;
        out.add_op(o.name.clone(), table)?;
    }
    Ok(out)
}

/// f(x) = π(x_i) for some coordinate i and permutation π.
fn is_permuted_projection(op: &OpTable) -> bool {
    let d = op.domain();
    let n = d.size();
    (0..op.arity()).any(|i| {
        let mut pi: Vec<Option<Elem>> = vec![None; n];
        let depends_only_on_i = d.tuples(op.arity()).zip(op.table()).all(|(t, &v)| {
            let slot = &mut pi[t[i] as usize];
            match *slot {
                None => {
                    *slot = Some(v);
                    true
                }
                Some(w) => w == v,
            }
        });
        if !depends_only_on_i {
            return false;
        }
        let mut image = ElemSet::EMPTY;
        for v in pi.iter().flatten() {
            image.insert(*v);
        }
        image == d.full_set()
    })
}

pub fn is_gset(algebra: &Algebra) -> bool {
    algebra.domain().size() > 1 && algebra.ops().iter().all(|o| is_permuted_projection(&o.op))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GsetFactor {
    pub subalgebra: ElemSet,
    /// A congruence of the subalgebra, in its relabelled elements.
    pub partition: Partition,
}

/// First subalgebra (by bitmask) with a congruence whose quotient is a G-set.
pub fn has_gset_factor(algebra: &Algebra) -> Result<Option<GsetFactor>> {
    for sub in subalgebras(algebra) {
        if sub.len() < 2 {
            continue;
        }
        let b = restrict(algebra, sub)?;
        for part in congruences(&b) {
            if part.len() >= 2 && is_gset(&quotient(&b, &part)?) {
                return Ok(Some(GsetFactor {
                    subalgebra: sub,
                    partition: part,
                }));
            }
        }
    }
    Ok(None)
}

/// Bounds for the negative collapsibility evidence.
pub const GAP_K: usize = 2;
pub const GAP_M: usize = 6;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapEvidence {
    pub gset_factor: Option<GsetFactor>,
    /// A basic operation that is a Hubie-pol in {a}, hence collapsible.
    pub hubie_pol: Option<(String, Elem)>,
    /// Per k ≤ K, the least m ≤ M at which Υ_{m,k,A} fails to generate.
    pub collapse_failures: Vec<(usize, Option<usize>)>,
    pub k_max: usize,
    pub m_max: usize,
    pub gap: bool,
}

/// No G-set factor, and collapsibility refuted for every k ≤ K by some m ≤ M.
pub fn is_gap_algebra(algebra: &Algebra) -> Result<GapEvidence> {
    require_three(algebra)?;
    let d = algebra.domain();
    let mut ev = GapEvidence {
        gset_factor: has_gset_factor(algebra)?,
        hubie_pol: None,
        collapse_failures: Vec::new(),
        k_max: GAP_K,
        m_max: GAP_M,
        gap: false,
    };
    if ev.gset_factor.is_some() {
        return Ok(ev);
    }
    'ops: for o in algebra.ops() {
        for a in d.elements() {
            if is_hubie_pol(&o.op, ElemSet::singleton(a))? {
                ev.hubie_pol = Some((o.name.clone(), a));
                break 'ops;
            }
        }
    }
    if ev.hubie_pol.is_some() {
        return Ok(ev);
    }
    for k in 0..=GAP_K {
        let verdicts = is_k_collapsible(algebra, k, GAP_M, d.full_set())?;
        let fail = verdicts.iter().find(|v| !v.union.generates).map(|v| v.m);
        ev.collapse_failures.push((k, fail));
    }
    ev.gap = ev.collapse_failures.iter().all(|(_, f)| f.is_some());
    Ok(ev)
}

fn require_three(algebra: &Algebra) -> Result<()> {
    if algebra.domain().size() != 3 {
        return Err(Error::Precondition("the classification is for 3-element algebras".into()));
    }
    algebra.require_idempotent()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Class3 {
    #[serde(rename = "NP")]
    Np,
    #[serde(rename = "coNP-complete")]
    CoNpComplete,
    #[serde(rename = "Pi2p-hard")]
    Pi2pHard,
}

impl fmt::Display for Class3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Class3::Np => "NP",
            Class3::CoNpComplete => "coNP-complete",
            Class3::Pi2pHard => "Pi2p-hard",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchSummary {
    pub k: usize,
    pub verdicts: Vec<PowerVerdict>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict3 {
    pub class: Class3,
    pub pgp: bool,
    pub alpha_beta: Option<(ElemSet, ElemSet)>,
    pub gset_factor: Option<GsetFactor>,
    /// For NP verdicts: the least k ≤ 2 with Ξ_{m,k} generating for all m ≤ 5.
    pub switchability: Option<SwitchSummary>,
}

pub const SWITCH_K: usize = 2;
pub const SWITCH_M: usize = 5;

/// PGP ⇒ NP; EGP without a G-set factor ⇒ coNP-complete; otherwise Π₂ᴾ-hard.
pub fn classify3(algebra: &Algebra) -> Result<Verdict3> {
    require_three(algebra)?;
    let alpha_beta = egp_test(algebra)?;
    if alpha_beta.is_none() {
        let mut switchability = None;
        for k in 0..=SWITCH_K {
            let verdicts = is_k_switchable(algebra, k, SWITCH_M)?;
            if verdicts.iter().all(|v| v.generates) {
                switchability = Some(SwitchSummary { k, verdicts });
                break;
            }
        }
        return Ok(Verdict3 {
            class: Class3::Np,
            pgp: true,
            alpha_beta,
            gset_factor: None,
            switchability,
        });
    }
    let gset_factor = has_gset_factor(algebra)?;
    let class = if gset_factor.is_some() {
        Class3::Pi2pHard
    } else {
        Class3::CoNpComplete
    };
    Ok(Verdict3 {
        class,
        pgp: false,
        alpha_beta,
        gset_factor,
        switchability: None,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub family: String,
    pub n: usize,
    pub op: OpTable,
    /// Some a with the operation a Hubie-pol in {a}.
    pub hubie_source: Option<Elem>,
}

/// The first of f^a_n, f^b_n, f̂^a_n, f̂^b_n preserving every relation and
/// constant of Δ. `n` defaults to max(3, largest arity in Δ).
pub fn collapsibility_certificates(algebra: &Algebra, delta: &Structure, n: Option<usize>) -> Result<Option<Certificate>> {
    require_three(algebra)?;
    if delta.domain() != algebra.domain() {
        return Err(Error::DomainMismatch(algebra.domain().size(), delta.domain().size()));
    }
    for o in algebra.ops() {
        if !is_polymorphism(&o.op, delta)? {
            return Err(Error::Precondition(format!("Δ is not invariant under `{}`", o.name)));
        }
    }
    let max_arity = delta.relations().iter().map(|r| r.relation.arity()).max().unwrap_or(0);
    let n = n.unwrap_or(max_arity.max(3));
    if n < max_arity {
        return Err(Error::Precondition(format!("n = {n} is below the largest arity {max_arity}")));
    }
    let families: [(&str, fn(usize) -> Result<OpTable>); 4] = [
        ("f_a", build_f_a_n),
        ("f_b", build_f_b_n),
        ("f_hat_a", build_f_hat_a_n),
        ("f_hat_b", build_f_hat_b_n),
    ];
    for (family, build) in families {
        let op = build(n)?;
        if is_polymorphism(&op, delta)? {
            let mut hubie_source = None;
            for a in algebra.domain().elements() {
                if is_hubie_pol(&op, ElemSet::singleton(a))? {
                    hubie_source = Some(a);
                    break;
                }
            }
            return Ok(Some(Certificate {
                family: family.to_string(),
                n,
                op,
                hubie_source,
            }));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clone::{chen_algebra, projections_algebra, semilattice_algebra};
    use crate::model::Relation;

    fn d3() -> Domain {
        Domain::new(3).unwrap()
    }

    fn set(s: &str) -> ElemSet {
        ElemSet::parse(s, d3()).unwrap()
    }

    #[test]
    fn partitions_of_three() {
        let all = all_partitions(d3());
        assert_eq!(all.len(), 5);
        assert_eq!(all_partitions(Domain::new(4).unwrap()).len(), 15);
        assert_eq!(Partition::parse("0,2|1", d3()).unwrap().to_string(), "{0,2},{1}");
        assert!(Partition::parse("0|1", d3()).is_err());
    }

    #[test]
    fn semilattice_structure() {
        let s = semilattice_algebra();
        let subs = subalgebras(&s);
        for good in ["0,2", "1,2", "0", "1", "2", "0,1,2"] {
            assert!(subs.contains(&set(good)), "{good}");
        }
        assert!(!subs.contains(&set("0,1")));
        let bad = Partition::parse("0,1|2", d3()).unwrap();
        assert!(!is_congruence(&s, &bad));
        assert!(quotient(&s, &bad).is_err());
        for p in ["0|1|2", "0,1,2"] {
            assert!(is_congruence(&s, &Partition::parse(p, d3()).unwrap()));
        }
        assert_eq!(has_gset_factor(&s).unwrap(), None);
    }

    #[test]
    fn gsets() {
        let two = projections_algebra(Domain::new(2).unwrap());
        assert!(is_gset(&two));
        assert!(!is_gset(&projections_algebra(Domain::new(1).unwrap())));
        let neg = Algebra::new(Domain::new(2).unwrap())
            .with_op("n", OpTable::from_fn(Domain::new(2).unwrap(), 2, |t| 1 - t[1]).unwrap())
            .unwrap();
        assert!(is_gset(&neg));
        assert!(!is_gset(&semilattice_algebra()));
        let f = has_gset_factor(&projections_algebra(d3())).unwrap().unwrap();
        assert_eq!(f.subalgebra, set("0,1"));
    }

    #[test]
    fn quotient_is_well_defined() {
        let p = projections_algebra(d3());
        let part = Partition::parse("0,2|1", d3()).unwrap();
        let q = quotient(&p, &part).unwrap();
        assert_eq!(q.domain().size(), 2);
        assert!(is_gset(&q));
        // every choice of representatives gives the same table
        for o in p.ops() {
            for t in d3().tuples(o.op.arity()) {
                let bt: Vec<Elem> = t.iter().map(|&e| part.block_of(e) as Elem).collect();
                assert_eq!(q.op(&o.name).unwrap().get(&bt) as usize, part.block_of(o.op.get(&t)));
            }
        }
    }

    #[test]
    fn classify_bundled() {
        assert_eq!(classify3(&semilattice_algebra()).unwrap().class, Class3::CoNpComplete);
        assert_eq!(classify3(&projections_algebra(d3())).unwrap().class, Class3::Pi2pHard);
        let chen = classify3(&chen_algebra()).unwrap();
        assert_eq!(chen.class, Class3::Np);
        assert_eq!(chen.switchability.unwrap().k, 2);
    }

    #[test]
    fn certificates() {
        let mut delta = Structure::new(d3());
        delta.add_relation("a", Relation::unary(d3(), set("0,2"))).unwrap();
        delta.add_relation("b", Relation::unary(d3(), set("1,2"))).unwrap();
        let c = collapsibility_certificates(&chen_algebra(), &delta, Some(3)).unwrap().unwrap();
        assert_eq!(c.family, "f_a");
        assert_eq!(c.hubie_source, Some(1));
    }

    #[test]
    fn gap_with_hubie_pol_is_not_gap() {
        let alg = Algebra::new(d3()).with_op("f", build_f_a_n(3).unwrap()).unwrap();
        let ev = is_gap_algebra(&alg).unwrap();
        assert!(!ev.gap);
        assert!(ev.gset_factor.is_some() || ev.hubie_pol.is_some());
    }
}
