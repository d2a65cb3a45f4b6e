//! Generating sets of direct powers, switching and collapsing adversaries,
//! and composition of adversaries.

mod closure;

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Algebra, Domain, Elem, ElemSet, OpTable, SentencePH, Structure, Tuple};

pub use closure::MAX_POWER;
pub(crate) use closure::{Origin, Subpower};

/// A set of m-tuples restricting the universal player.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Adversary {
    m: usize,
    tuples: BTreeSet<Tuple>,
    rectangular: Option<Vec<ElemSet>>,
}

impl Adversary {
    pub fn from_tuples(domain: Domain, m: usize, tuples: impl IntoIterator<Item = Tuple>) -> Result<Self> {
        if m == 0 {
            return Err(Error::Shape("adversaries have length at least 1".into()));
        }
        let mut set = BTreeSet::new();
        for t in tuples {
            if t.len() != m {
                return Err(Error::Arity {
                    expected: m,
                    got: t.len(),
                });
            }
            for &e in &t {
                domain.check(e as usize)?;
            }
            set.insert(t);
        }
        if set.is_empty() {
            return Err(Error::Shape("adversaries are nonempty".into()));
        }
        Ok(Adversary {
            m,
            tuples: set,
            rectangular: None,
        })
    }

    pub fn rectangular(domain: Domain, sets: Vec<ElemSet>) -> Result<Self> {
        let m = sets.len();
        let mut tuples = vec![Vec::new()];
        for &b in &sets {
            if b.is_empty() || !b.is_subset(domain.full_set()) {
                return Err(Error::Shape(format!("bad coordinate set {b}")));
            }
            tuples = tuples
                .into_iter()
                .flat_map(|t: Tuple| {
                    b.iter().map(move |e| {
                        let mut t = t.clone();
                        t.push(e);
                        t
                    })
                })
                .collect();
        }
        let mut adv = Adversary::from_tuples(domain, m, tuples)?;
        adv.rectangular = Some(sets);
        Ok(adv)
    }

    pub fn full(domain: Domain, m: usize) -> Result<Self> {
        Adversary::rectangular(domain, vec![domain.full_set(); m])
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn size(&self) -> usize {
        self.tuples.len()
    }

    pub fn tuples(&self) -> &BTreeSet<Tuple> {
        &self.tuples
    }

    pub fn rect(&self) -> Option<&[ElemSet]> {
        self.rectangular.as_deref()
    }

    pub fn contains(&self, t: &[Elem]) -> bool {
        self.tuples.contains(t)
    }

    /// True if some tuple extends `prefix`.
    pub fn has_prefix(&self, prefix: &[Elem]) -> bool {
        self.tuples
            .range(prefix.to_vec()..)
            .next()
            .is_some_and(|t| t.starts_with(prefix))
    }
}

/// Least superset of `seed` closed under every basic operation, coordinatewise.
pub fn power_closure(algebra: &Algebra, seed: &BTreeSet<Tuple>) -> Result<BTreeSet<Tuple>> {
    let m = seed
        .iter()
        .next()
        .ok_or_else(|| Error::Shape("closure of an empty seed".into()))?
        .len();
    let mut sp = Subpower::new(algebra, m, seed, false)?;
    sp.saturate();
    Ok(sp.members().map(|t| t.to_vec()).collect())
}

/// Does `seed` generate all of A^m?
pub fn generates_power(algebra: &Algebra, m: usize, seed: &BTreeSet<Tuple>) -> Result<bool> {
    if seed.is_empty() {
        return Ok(algebra.domain().power(m) == Some(0));
    }
    let mut sp = Subpower::new(algebra, m, seed, false)?;
    sp.saturate();
    Ok(sp.is_full())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenMethod {
    Exact,
    BranchAndBound,
    GreedyUpper,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenReport {
    pub m: usize,
    pub size: usize,
    pub witness: Vec<Tuple>,
    pub method: GenMethod,
}

/// Subset search is exhaustive below this power size.
pub const EXACT_THRESHOLD: usize = 12;
const NODE_BUDGET: usize = 200_000;

/// The least size of a generating set of A^m (f_A(m)), with a witness.
pub fn min_generating_size(algebra: &Algebra, m: usize) -> Result<GenReport> {
    let d = algebra.domain();
    let total = d
        .power_within(m, MAX_POWER)
        .map_err(|_| Error::Budget(format!("{}^{m} exceeds the closure budget", d.size())))?;
    let all: Vec<Tuple> = d.tuples(m).collect();
    let gen = |set: &[usize]| -> Result<bool> {
        let seed: BTreeSet<Tuple> = set.iter().map(|&i| all[i].clone()).collect();
        generates_power(algebra, m, &seed)
    };

    if total <= EXACT_THRESHOLD {
        for k in 1..=total {
            let mut found = None;
            for_each_combination(total, k, &mut |c| {
                if gen(c)? {
                    found = Some(c.to_vec());
                    return Ok(false);
                }
                Ok(true)
            })?;
            if let Some(c) = found {
                return Ok(GenReport {
                    m,
                    size: k,
                    witness: c.iter().map(|&i| all[i].clone()).collect(),
                    method: GenMethod::Exact,
                });
            }
        }
        unreachable!("A^m generates itself");
    }

    // Tuples no operation can produce from the others belong to every generating set.
    let necessary: Vec<usize> = (0..total)
        .filter(|&i| !derivable_without(algebra, &all, i))
        .collect();

    // greedy upper bound: repeatedly add the missing tuple with the largest gain
    let mut best: Vec<usize> = necessary.clone();
    loop {
        let seed: BTreeSet<Tuple> = best.iter().map(|&i| all[i].clone()).collect();
        let cl = if seed.is_empty() {
            BTreeSet::new()
        } else {
            power_closure(algebra, &seed)?
        };
        if cl.len() == total {
            break;
        }
        let mut pick = None;
        let mut pick_size = 0;
        for (i, t) in all.iter().enumerate() {
            if cl.contains(t) {
                continue;
            }
            let mut s2 = seed.clone();
            s2.insert(t.clone());
            let size = power_closure(algebra, &s2)?.len();
            if size > pick_size {
                pick = Some(i);
                pick_size = size;
            }
        }
        best.push(pick.expect("some tuple is missing"));
    }
    best.sort_unstable();

    // Iterative deepening over irredundant extensions of the necessary set.
    let mut nodes = 0usize;
    let mut exhausted = false;
    for k in necessary.len().max(1)..best.len() {
        let mut chosen = necessary.clone();
        match extend(algebra, m, &all, &mut chosen, k, 0, &mut nodes)? {
            Search::Found => {
                chosen.sort_unstable();
                best = chosen;
                break;
            }
            Search::Exhausted => {
                exhausted = true;
                break;
            }
            Search::None => {}
        }
    }
    Ok(GenReport {
        m,
        size: best.len(),
        witness: best.iter().map(|&i| all[i].clone()).collect(),
        method: if exhausted {
            GenMethod::GreedyUpper
        } else {
            GenMethod::BranchAndBound
        },
    })
}

enum Search {
    Found,
    None,
    Exhausted,
}

fn extend(
    algebra: &Algebra,
    m: usize,
    all: &[Tuple],
    chosen: &mut Vec<usize>,
    target: usize,
    from: usize,
    nodes: &mut usize,
) -> Result<Search> {
    *nodes += 1;
    if *nodes > NODE_BUDGET {
        return Ok(Search::Exhausted);
    }
    let seed: BTreeSet<Tuple> = chosen.iter().map(|&i| all[i].clone()).collect();
    let cl = if seed.is_empty() {
        BTreeSet::new()
    } else {
        power_closure(algebra, &seed)?
    };
    if cl.len() == all.len() {
        return Ok(Search::Found);
    }
    if chosen.len() == target {
        return Ok(Search::None);
    }
    for i in from..all.len() {
        if cl.contains(&all[i]) || chosen.contains(&i) {
            continue;
        }
        chosen.push(i);
        match extend(algebra, m, all, chosen, target, i + 1, nodes)? {
            Search::None => {}
            other => return Ok(other),
        }
        chosen.pop();
    }
    Ok(Search::None)
}

fn derivable_without(algebra: &Algebra, all: &[Tuple], skip: usize) -> bool {
    let target = &all[skip];
    algebra.ops().iter().any(|o| {
        let a = o.op.arity();
        if a == 0 {
            return target.iter().all(|&e| e == o.op.at(0));
        }
        if all.len().saturating_pow(a as u32) > 50_000_000 {
            // too expensive to certify necessity; not marking it keeps the search exact
            return true;
        }
        let mut idx = vec![0usize; a];
        let mut args = vec![0 as Elem; a];
        derivable_rec(&o.op, all, skip, 0, &mut idx, &mut args)
    })
}

fn derivable_rec(op: &OpTable, all: &[Tuple], skip: usize, pos: usize, idx: &mut [usize], args: &mut [Elem]) -> bool {
    let target = &all[skip];
    if pos == idx.len() {
        return (0..target.len()).all(|j| {
            for (p, &i) in idx.iter().enumerate() {
                args[p] = all[i][j];
            }
            op.get(args) == target[j]
        });
    }
    for i in 0..all.len() {
        if i == skip {
            continue;
        }
        idx[pos] = i;
        if derivable_rec(op, all, skip, pos + 1, idx, args) {
            return true;
        }
    }
    false
}

/// Calls `f` on each k-subset of 0..n in lexicographic order until it returns false.
pub(crate) fn for_each_combination(
    n: usize,
    k: usize,
    f: &mut dyn FnMut(&[usize]) -> Result<bool>,
) -> Result<()> {
    if k > n {
        return Ok(());
    }
    let mut c: Vec<usize> = (0..k).collect();
    loop {
        if !f(&c)? {
            return Ok(());
        }
        let mut i = k;
        let pos = loop {
            if i == 0 {
                return Ok(());
            }
            i -= 1;
            if c[i] < n - k + i {
                break i;
            }
        };
        c[pos] += 1;
        for j in pos + 1..k {
            c[j] = c[j - 1] + 1;
        }
    }
}

/// Number of indices where consecutive entries differ.
pub fn switch_count(t: &[Elem]) -> usize {
    t.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Ξ_{m,k}: all m-tuples with at most k switches.
pub fn build_switch_adversary(domain: Domain, m: usize, k: usize) -> Result<Adversary> {
    domain
        .power_within(m, MAX_POWER)
        .map_err(|_| Error::Budget(format!("{}^{m} tuples", domain.size())))?;
    Adversary::from_tuples(domain, m, domain.tuples(m).filter(|t| switch_count(t) <= k))
}

/// Υ_{m,p,B}: one rectangular adversary per source x in B and per choice of
/// p free coordinates (the rest fixed to x).
pub fn build_collapse_adversaries(domain: Domain, m: usize, p: usize, sources: ElemSet) -> Result<Vec<Adversary>> {
    if sources.is_empty() {
        return Err(Error::Shape("empty source set".into()));
    }
    let p = p.min(m);
    let mut out = Vec::new();
    for x in sources.iter() {
        domain.check(x as usize)?;
        for_each_combination(m, p, &mut |free| {
            let sets = (0..m)
                .map(|i| {
                    if free.contains(&i) {
                        domain.full_set()
                    } else {
                        ElemSet::singleton(x)
                    }
                })
                .collect();
            out.push(Adversary::rectangular(domain, sets)?);
            Ok(true)
        })?;
    }
    Ok(out)
}

fn union_tuples<'a>(advs: impl IntoIterator<Item = &'a Adversary>) -> BTreeSet<Tuple> {
    advs.into_iter().flat_map(|a| a.tuples.iter().cloned()).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PowerVerdict {
    pub m: usize,
    pub generates: bool,
    pub seed_size: usize,
    pub closure_size: usize,
}

/// For each m in 1..=m_max, does Ξ_{m,k} generate A^m?
pub fn is_k_switchable(algebra: &Algebra, k: usize, m_max: usize) -> Result<Vec<PowerVerdict>> {
    let d = algebra.domain();
    (1..=m_max)
        .map(|m| {
            let adv = build_switch_adversary(d, m, k)?;
            verdict(algebra, m, adv.tuples)
        })
        .collect()
}

fn verdict(algebra: &Algebra, m: usize, seed: BTreeSet<Tuple>) -> Result<PowerVerdict> {
    let mut sp = Subpower::new(algebra, m, &seed, false)?;
    sp.saturate();
    Ok(PowerVerdict {
        m,
        generates: sp.is_full(),
        seed_size: seed.len(),
        closure_size: sp.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollapseVerdict {
    pub m: usize,
    pub per_source: Vec<(Elem, bool)>,
    pub union: PowerVerdict,
}

/// For each m in 1..=m_max, whether the tuples of Υ_{m,k,x} generate A^m,
/// per source x and for the union over `sources`.
pub fn is_k_collapsible(algebra: &Algebra, k: usize, m_max: usize, sources: ElemSet) -> Result<Vec<CollapseVerdict>> {
    let d = algebra.domain();
    (1..=m_max)
        .map(|m| {
            let mut per_source = Vec::new();
            for x in sources.iter() {
                let advs = build_collapse_adversaries(d, m, k, ElemSet::singleton(x))?;
                per_source.push((x, verdict(algebra, m, union_tuples(&advs))?.generates));
            }
            let advs = build_collapse_adversaries(d, m, k, sources)?;
            Ok(CollapseVerdict {
                m,
                per_source,
                union: verdict(algebra, m, union_tuples(&advs))?,
            })
        })
        .collect()
}

/// Rectangular composition: f(B^i_1,...,B^i_k) ⊇ A^i at every coordinate i.
pub fn rect_compose_check(target: &[ElemSet], f: &OpTable, parts: &[Vec<ElemSet>]) -> Result<bool> {
    if parts.len() != f.arity() {
        return Err(Error::Arity {
            expected: f.arity(),
            got: parts.len(),
        });
    }
    for p in parts {
        if p.len() != target.len() {
            return Err(Error::Arity {
                expected: target.len(),
                got: p.len(),
            });
        }
    }
    let d = f.domain();
    for (i, &want) in target.iter().enumerate() {
        let mut image = ElemSet::EMPTY;
        for t in d.tuples(f.arity()) {
            if t.iter().enumerate().all(|(j, &e)| parts[j][i].contains(e)) {
                image.insert(f.get(&t));
            }
        }
        if !want.is_subset(image) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Reactive composition 𝒜 ⊴ f(ℬ_1,...,ℬ_k): searches for the partial
/// functions g^j_i prefix by prefix. Children of a target-trie node are
/// independent, so the search is an AND over children of an OR over the
/// preimages of each child value, memoized on (target prefix, part prefixes).
pub fn reactive_compose_check(target: &Adversary, f: &OpTable, parts: &[Adversary]) -> Result<bool> {
    let m = target.len();
    let n = f.domain().size();
    if m > 3 || n > 3 {
        return Err(Error::Budget(format!(
            "reactive composition is limited to length 3 over 3 elements (got length {m}, size {n})"
        )));
    }
    if parts.len() != f.arity() {
        return Err(Error::Arity {
            expected: f.arity(),
            got: parts.len(),
        });
    }
    for p in parts {
        if p.len() != m {
            return Err(Error::Arity {
                expected: m,
                got: p.len(),
            });
        }
    }
    let mut preimages: Vec<Vec<Tuple>> = vec![Vec::new(); n];
    for t in f.domain().tuples(f.arity()) {
        preimages[f.get(&t) as usize].push(t);
    }
    let mut memo = HashMap::new();
    let k = parts.len();
    Ok(reactive(target, parts, &preimages, &mut Vec::new(), &mut vec![Vec::new(); k], &mut memo))
}

fn reactive(
    target: &Adversary,
    parts: &[Adversary],
    preimages: &[Vec<Tuple>],
    prefix: &mut Tuple,
    chosen: &mut Vec<Tuple>,
    memo: &mut HashMap<(Tuple, Vec<Tuple>), bool>,
) -> bool {
    if prefix.len() == target.len() {
        return true;
    }
    let key = (prefix.clone(), chosen.clone());
    if let Some(&v) = memo.get(&key) {
        return v;
    }
    let children: BTreeSet<Elem> = target
        .tuples()
        .range(prefix.clone()..)
        .take_while(|t| t.starts_with(prefix))
        .map(|t| t[prefix.len()])
        .collect();
    let mut ok = true;
    for a in children {
        prefix.push(a);
        let mut any = false;
        for c in &preimages[a as usize] {
            for (ch, &e) in chosen.iter_mut().zip(c) {
                ch.push(e);
            }
            if parts.iter().zip(chosen.iter()).all(|(p, ch)| p.has_prefix(ch)) {
                any = reactive(target, parts, preimages, prefix, chosen, memo);
            }
            for ch in chosen.iter_mut() {
                ch.pop();
            }
            if any {
                break;
            }
        }
        prefix.pop();
        if !any {
            ok = false;
            break;
        }
    }
    memo.insert(key, ok);
    ok
}

/// Checks one instance of the transfer theorem: if every part satisfies
/// φ↾ℬ_j and the target is reactively composable from the parts via `f`
/// (a polymorphism of the structure), then φ↾𝒜 holds. Returns whether the
/// implication held; `false` means a bug somewhere.
pub fn adversary_game_transfer_test(
    structure: &Structure,
    phi: &SentencePH,
    target: &Adversary,
    parts: &[Adversary],
    f: &OpTable,
) -> Result<bool> {
    let composable = match (target.rect(), parts.iter().map(|p| p.rect()).collect::<Option<Vec<_>>>()) {
        (Some(t), Some(ps)) => {
            let ps: Vec<Vec<ElemSet>> = ps.into_iter().map(|p| p.to_vec()).collect();
            rect_compose_check(t, f, &ps)?
        }
        _ => reactive_compose_check(target, f, parts)?,
    };
    if !composable {
        return Ok(true);
    }
    for p in parts {
        if !crate::qcsp::qcsp_eval(structure, phi, Some(p))? {
            return Ok(true);
        }
    }
    crate::qcsp::qcsp_eval(structure, phi, Some(target))
}
