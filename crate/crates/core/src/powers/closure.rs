//! Subpower closure engine.
//!
//! Elements of A^m are stored as row-major codes. Two strategies are mixed:
//! a forward semi-naive sweep (every argument combination touching the newest
//! layer) and a goal-directed pass that, for each missing tuple, searches for
//! an argument vector coordinate by coordinate using prefix tables of the
//! operation's preimages. The forward sweep gives exact term depths; the goal
//! pass is much cheaper once the closure is nearly full.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::{Algebra, Elem, OpTable};

/// Largest power we are willing to hold as a bitmap.
pub const MAX_POWER: usize = 1 << 20;

const ABSENT: u32 = u32::MAX;

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Origin {
    Seed(usize),
    App { op: usize, args: Vec<u32> },
}

struct PrefixTables {
    arity: usize,
    // ok[v][l][p]: some argument tuple with prefix p (length l+1) maps to v
    ok: Vec<Vec<Vec<bool>>>,
}

impl PrefixTables {
    fn new(op: &OpTable) -> Self {
        let n = op.domain().size();
        let a = op.arity();
        let mut ok = vec![Vec::with_capacity(a); n];
        for per_v in ok.iter_mut() {
            for l in 0..a {
                per_v.push(vec![false; n.pow(l as u32 + 1)]);
            }
        }
        for (idx, &v) in op.table().iter().enumerate() {
            for l in 0..a {
                let p = idx / n.pow((a - l - 1) as u32);
                ok[v as usize][l][p] = true;
            }
        }
        PrefixTables { arity: a, ok }
    }
}

enum Slots {
    Dense(Vec<u32>),
    // for powers too large to bitmap; only forward sweeps are available
    Sparse(HashMap<Vec<Elem>, u32>, Option<usize>),
}

pub(crate) struct Subpower<'a> {
    algebra: &'a Algebra,
    m: usize,
    n: usize,
    slot: Slots,
    members: Vec<u32>,
    coords: Vec<Elem>,
    origins: Option<Vec<Origin>>,
    done: usize,
    level_starts: Vec<usize>,
    prefix: Vec<PrefixTables>,
}

impl<'a> Subpower<'a> {
    pub fn new<I>(algebra: &'a Algebra, m: usize, seeds: I, track: bool) -> Result<Self>
    where
        I: IntoIterator,
        I::Item: AsRef<[Elem]>,
    {
        let n = algebra.domain().size();
        let total = algebra
            .domain()
            .power_within(m, MAX_POWER)
            .map_err(|_| Error::Budget(format!("{n}^{m} exceeds the closure budget")))?;
        Self::build(algebra, m, seeds, track, Slots::Dense(vec![ABSENT; total]))
    }

    /// Hash-backed variant for large powers (forward sweeps only).
    pub fn new_sparse<I>(algebra: &'a Algebra, m: usize, seeds: I, track: bool) -> Result<Self>
    where
        I: IntoIterator,
        I::Item: AsRef<[Elem]>,
    {
        let total = algebra.domain().power(m);
        Self::build(algebra, m, seeds, track, Slots::Sparse(HashMap::new(), total))
    }

    fn build<I>(algebra: &'a Algebra, m: usize, seeds: I, track: bool, slot: Slots) -> Result<Self>
    where
        I: IntoIterator,
        I::Item: AsRef<[Elem]>,
    {
        let n = algebra.domain().size();
        let mut sp = Subpower {
            algebra,
            m,
            n,
            slot,
            members: Vec::new(),
            coords: Vec::new(),
            origins: track.then(Vec::new),
            done: 0,
            level_starts: vec![0],
            prefix: algebra.ops().iter().map(|o| PrefixTables::new(&o.op)).collect(),
        };
        for (i, t) in seeds.into_iter().enumerate() {
            let t = t.as_ref();
            if t.len() != m {
                return Err(Error::Arity {
                    expected: m,
                    got: t.len(),
                });
            }
            for &e in t {
                algebra.domain().check(e as usize)?;
            }
            sp.insert(t, Origin::Seed(i));
        }
        Ok(sp)
    }

    fn encode(&self, t: &[Elem]) -> usize {
        t.iter().fold(0, |acc, &e| acc * self.n + e as usize)
    }

    fn lookup(&self, t: &[Elem]) -> Option<usize> {
        match &self.slot {
            Slots::Dense(v) => {
                let s = v[self.encode(t)];
                (s != ABSENT).then_some(s as usize)
            }
            Slots::Sparse(h, _) => h.get(t).map(|&s| s as usize),
        }
    }

    fn insert(&mut self, t: &[Elem], origin: Origin) -> bool {
        let next = self.members.len() as u32;
        match &mut self.slot {
            Slots::Dense(v) => {
                let code = t.iter().fold(0, |acc, &e| acc * self.n + e as usize);
                if v[code] != ABSENT {
                    return false;
                }
                v[code] = next;
            }
            Slots::Sparse(h, _) => {
                if h.contains_key(t) {
                    return false;
                }
                h.insert(t.to_vec(), next);
            }
        }
        self.members.push(next);
        self.coords.extend_from_slice(t);
        if let Some(o) = self.origins.as_mut() {
            o.push(origin);
        }
        true
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_full(&self) -> bool {
        match &self.slot {
            Slots::Dense(v) => self.members.len() == v.len(),
            Slots::Sparse(_, total) => Some(self.members.len()) == *total,
        }
    }

    pub fn member(&self, i: usize) -> &[Elem] {
        &self.coords[i * self.m..(i + 1) * self.m]
    }

    #[cfg(test)]
    pub fn index_of(&self, t: &[Elem]) -> Option<usize> {
        self.lookup(t)
    }

    pub fn origin(&self, i: usize) -> Option<&Origin> {
        self.origins.as_ref().map(|o| &o[i])
    }

    pub fn members(&self) -> impl Iterator<Item = &[Elem]> {
        self.coords.chunks(self.m.max(1)).take(self.members.len())
    }

    /// Depth of the forward layer that introduced member `i`.
    pub fn depth_of(&self, i: usize) -> usize {
        self.level_starts.partition_point(|&s| s <= i) - 1
    }

    /// Number of argument combinations the next forward sweep would try.
    pub fn forward_cost(&self) -> f64 {
        let l = self.members.len() as f64;
        let w = self.done as f64;
        self.prefix
            .iter()
            .map(|p| l.powi(p.arity as i32) - w.powi(p.arity as i32))
            .sum()
    }

    /// One semi-naive layer; returns the number of new members.
    pub fn forward_step(&mut self) -> usize {
        let before = self.members.len();
        let w = self.done;
        let mut found = Vec::new();
        for (oi, named) in self.algebra.ops().iter().enumerate() {
            let a = named.op.arity();
            if a == 0 {
                if w == 0 {
                    found.push((vec![named.op.at(0); self.m], oi, Vec::new()));
                }
                continue;
            }
            let mut args = vec![0u32; a];
            let mut partial = vec![vec![0usize; self.m]; a + 1];
            self.sweep(&named.op, oi, w, before, 0, false, &mut args, &mut partial, &mut found);
        }
        self.done = before;
        for (t, op, args) in found {
            self.insert(&t, Origin::App { op, args });
        }
        if self.members.len() > before {
            self.level_starts.push(before);
        }
        self.members.len() - before
    }

    #[allow(clippy::too_many_arguments)]
    fn sweep(
        &self,
        op: &OpTable,
        oi: usize,
        w: usize,
        len: usize,
        pos: usize,
        touched: bool,
        args: &mut [u32],
        partial: &mut [Vec<usize>],
        found: &mut Vec<(Vec<Elem>, usize, Vec<u32>)>,
    ) {
        let a = args.len();
        if pos == a {
            if !touched {
                return;
            }
            let out: Vec<Elem> = partial[a].iter().map(|&ix| op.at(ix)).collect();
            if self.lookup(&out).is_none() {
                found.push((out, oi, args.to_vec()));
            }
            return;
        }
        // the last argument must be new if no earlier one was
        let lo = if !touched && pos + 1 == a { w } else { 0 };
        for i in lo..len {
            let now_touched = touched || i >= w;
            let t = self.member(i);
            let (head, tail) = partial.split_at_mut(pos + 1);
            let prev = &head[pos];
            let next = &mut tail[0];
            for j in 0..self.m {
                next[j] = prev[j] * self.n + t[j] as usize;
            }
            args[pos] = i as u32;
            self.sweep(op, oi, w, len, pos + 1, now_touched, args, partial, found);
        }
    }

    /// Try to derive every missing tuple from the current members.
    /// Returns the number of additions.
    pub fn goal_pass(&mut self) -> usize {
        let total = match &self.slot {
            Slots::Dense(v) => v.len(),
            Slots::Sparse(..) => return self.forward_step(),
        };
        let before = self.members.len();
        let start_len = before;
        let mut t = vec![0 as Elem; self.m];
        for code in 0..total {
            if matches!(&self.slot, Slots::Dense(v) if v[code] != ABSENT) {
                continue;
            }
            let mut c = code;
            for j in (0..self.m).rev() {
                t[j] = (c % self.n) as Elem;
                c /= self.n;
            }
            if let Some((op, args)) = self.derive(&t) {
                self.insert(&t, Origin::App { op, args });
            }
        }
        self.done = start_len;
        if self.members.len() > before {
            self.level_starts.push(before);
        }
        self.members.len() - before
    }

    fn derive(&self, target: &[Elem]) -> Option<(usize, Vec<u32>)> {
        for (oi, named) in self.algebra.ops().iter().enumerate() {
            let a = named.op.arity();
            if a == 0 {
                if target.iter().all(|&e| e == named.op.at(0)) {
                    return Some((oi, Vec::new()));
                }
                continue;
            }
            let pt = &self.prefix[oi];
            // every coordinate's target must be in the op's image
            if target.iter().any(|&v| !pt.ok[v as usize][0].iter().any(|&b| b)) {
                continue;
            }
            let mut args = vec![0u32; a];
            let mut partial = vec![vec![0usize; self.m]; a + 1];
            if self.dfs(pt, target, 0, &mut args, &mut partial) {
                return Some((oi, args));
            }
        }
        None
    }

    fn dfs(
        &self,
        pt: &PrefixTables,
        target: &[Elem],
        pos: usize,
        args: &mut [u32],
        partial: &mut [Vec<usize>],
    ) -> bool {
        if pos == args.len() {
            return true;
        }
        let len = self.members.len();
        'cand: for i in 0..len {
            let t = self.member(i);
            let (head, tail) = partial.split_at_mut(pos + 1);
            let prev = &head[pos];
            let next = &mut tail[0];
            for j in 0..self.m {
                let p = prev[j] * self.n + t[j] as usize;
                if !pt.ok[target[j] as usize][pos][p] {
                    continue 'cand;
                }
                next[j] = p;
            }
            args[pos] = i as u32;
            if self.dfs(pt, target, pos + 1, args, partial) {
                return true;
            }
        }
        false
    }

    /// Run to the fixpoint, mixing strategies by estimated cost.
    pub fn saturate(&mut self) {
        while !self.is_full() {
            let added = if self.forward_cost() <= 2e6 {
                self.forward_step()
            } else {
                self.goal_pass()
            };
            if added == 0 && self.done == self.members.len() {
                break;
            }
        }
    }

    /// Forward layers only, so that depths are exact.
    #[cfg(test)]
    pub fn saturate_forward(&mut self, max_depth: usize, max_cost: f64) -> bool {
        while self.level_starts.len() <= max_depth && !self.is_full() {
            if self.done == self.members.len() {
                return true;
            }
            if self.forward_cost() > max_cost {
                return false;
            }
            self.forward_step();
        }
        self.done == self.members.len() || self.is_full()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Domain;
    use std::collections::BTreeSet;

    fn s_alg() -> Algebra {
        let d = Domain::new(3).unwrap();
        let s = OpTable::from_fn(d, 2, |t| if t[0] == t[1] { t[0] } else { 2 }).unwrap();
        Algebra::new(d).with_op("s", s).unwrap()
    }

    fn naive(alg: &Algebra, m: usize, seeds: &[Vec<Elem>]) -> BTreeSet<Vec<Elem>> {
        let mut set: BTreeSet<Vec<Elem>> = seeds.iter().cloned().collect();
        loop {
            let cur: Vec<_> = set.iter().cloned().collect();
            let mut grew = false;
            for o in alg.ops() {
                let a = o.op.arity();
                let mut idx = vec![0usize; a];
                loop {
                    let out: Vec<Elem> = (0..m)
                        .map(|j| o.op.get(&idx.iter().map(|&i| cur[i][j]).collect::<Vec<_>>()))
                        .collect();
                    grew |= set.insert(out);
                    let mut p = 0;
                    while p < a {
                        idx[p] += 1;
                        if idx[p] < cur.len() {
                            break;
                        }
                        idx[p] = 0;
                        p += 1;
                    }
                    if p == a {
                        break;
                    }
                }
            }
            if !grew {
                return set;
            }
        }
    }

    #[test]
    fn strategies_agree_with_naive_closure() {
        let alg = s_alg();
        let seeds = vec![vec![0, 1, 2], vec![1, 0, 0], vec![0, 0, 1]];
        let want = naive(&alg, 3, &seeds);
        let mut fwd = Subpower::new(&alg, 3, &seeds, false).unwrap();
        while fwd.forward_step() > 0 {}
        let mut goal = Subpower::new(&alg, 3, &seeds, false).unwrap();
        while goal.goal_pass() > 0 {}
        for sp in [fwd, goal] {
            let got: BTreeSet<Vec<Elem>> = sp.members().map(|t| t.to_vec()).collect();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn depths_follow_layers() {
        let alg = s_alg();
        let mut sp = Subpower::new(&alg, 2, [[0u8, 1], [1, 0]], true).unwrap();
        assert!(sp.saturate_forward(5, 1e9));
        let i = sp.index_of(&[2, 2]).unwrap();
        assert_eq!(sp.depth_of(i), 1);
        assert_eq!(sp.depth_of(0), 0);
        assert!(matches!(sp.origin(i), Some(Origin::App { op: 0, .. })));
    }
}
