//! Finite domains, operation tables, relations and the algebras and
//! structures built from them.

mod formula;
mod sentence;
mod text;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use formula::{Dnf, Formula, Literal};
pub use sentence::{Arg, Atom, Quantifier, SentencePH};
pub use text::{parse_algebra, parse_sentence, parse_structure};

/// A domain element. Domains never exceed [`MAX_DOMAIN`] elements.
pub type Elem = u8;

/// A tuple of domain elements.
pub type Tuple = Vec<Elem>;

pub const MAX_DOMAIN: usize = 10;

/// Largest `size^arity` that will be enumerated when materializing a relation.
pub const MAX_MATERIALIZE: usize = 1 << 21;

/// The set `{0, .., size-1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Domain(u8);

impl Domain {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 || size > MAX_DOMAIN {
            return Err(Error::Shape(format!(
                "domain size must be in 1..={MAX_DOMAIN}, got {size}"
            )));
        }
        Ok(Domain(size as u8))
    }

    pub fn size(self) -> usize {
        self.0 as usize
    }

    pub fn elements(self) -> impl Iterator<Item = Elem> + Clone {
        0..self.0
    }

    pub fn full_set(self) -> ElemSet {
        ElemSet((1u16 << self.0) - 1)
    }

    pub fn check(self, value: usize) -> Result<Elem> {
        if value < self.size() {
            Ok(value as Elem)
        } else {
            Err(Error::OutOfRange {
                value,
                size: self.size(),
            })
        }
    }

    /// `size^arity`, or `None` on overflow.
    pub fn power(self, arity: usize) -> Option<usize> {
        let mut acc: usize = 1;
        for _ in 0..arity {
            acc = acc.checked_mul(self.size())?;
        }
        Some(acc)
    }

    /// `size^arity`, failing when it exceeds `cap`.
    pub fn power_within(self, arity: usize, cap: usize) -> Result<usize> {
        match self.power(arity) {
            Some(n) if n <= cap => Ok(n),
            _ => Err(Error::Budget(format!(
                "{}^{} exceeds enumeration cap {}",
                self.size(),
                arity,
                cap
            ))),
        }
    }

    /// All tuples of the given arity in lexicographic order.
    pub fn tuples(self, arity: usize) -> TupleIter {
        TupleIter {
            size: self.0,
            next: Some(vec![0; arity]),
        }
    }

    /// Row-major index of a tuple.
    pub fn encode(self, tuple: &[Elem]) -> usize {
        tuple
            .iter()
            .fold(0usize, |acc, &e| acc * self.size() + e as usize)
    }

    pub fn decode(self, mut index: usize, arity: usize) -> Tuple {
        let mut t = vec![0; arity];
        for slot in t.iter_mut().rev() {
            *slot = (index % self.size()) as Elem;
            index /= self.size();
        }
        t
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Lexicographic odometer over `domain^arity`.
#[derive(Clone, Debug)]
pub struct TupleIter {
    size: u8,
    next: Option<Tuple>,
}

impl Iterator for TupleIter {
    type Item = Tuple;

    fn next(&mut self) -> Option<Tuple> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let mut i = succ.len();
        loop {
            if i == 0 {
                break;
            }
            i -= 1;
            if succ[i] + 1 < self.size {
                succ[i] += 1;
                self.next = Some(succ);
                break;
            }
            succ[i] = 0;
        }
        Some(current)
    }
}

/// A subset of a domain stored as a bitmask.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ElemSet(pub u16);

impl ElemSet {
    pub const EMPTY: ElemSet = ElemSet(0);

    pub fn singleton(e: Elem) -> Self {
        ElemSet(1 << e)
    }

    pub fn contains(self, e: Elem) -> bool {
        self.0 >> e & 1 == 1
    }

    pub fn insert(&mut self, e: Elem) {
        self.0 |= 1 << e;
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: ElemSet) -> ElemSet {
        ElemSet(self.0 | other.0)
    }

    pub fn intersection(self, other: ElemSet) -> ElemSet {
        ElemSet(self.0 & other.0)
    }

    pub fn difference(self, other: ElemSet) -> ElemSet {
        ElemSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: ElemSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn min(self) -> Option<Elem> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as Elem)
    }

    pub fn iter(self) -> impl Iterator<Item = Elem> + Clone {
        (0..16u8).filter(move |&e| self.contains(e))
    }

    /// Parse a comma list such as `0,2`.
    pub fn parse(text: &str, domain: Domain) -> Result<Self> {
        let mut set = ElemSet::EMPTY;
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let v: usize = part
                .parse()
                .map_err(|_| Error::Shape(format!("bad element `{part}`")))?;
            set.insert(domain.check(v)?);
        }
        Ok(set)
    }
}

impl FromIterator<Elem> for ElemSet {
    fn from_iter<I: IntoIterator<Item = Elem>>(iter: I) -> Self {
        let mut s = ElemSet::EMPTY;
        for e in iter {
            s.insert(e);
        }
        s
    }
}

impl fmt::Display for ElemSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, e) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, "}}")
    }
}

impl fmt::Debug for ElemSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A total operation on a domain, stored as a row-major table.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OpTable {
    arity: usize,
    domain: Domain,
    table: Vec<Elem>,
}

impl OpTable {
    pub fn new(domain: Domain, arity: usize, table: Vec<Elem>) -> Result<Self> {
        let len = domain.power_within(arity, MAX_MATERIALIZE)?;
        if table.len() != len {
            return Err(Error::Shape(format!(
                "table for arity {arity} over domain {domain} needs {len} entries, got {}",
                table.len()
            )));
        }
        if let Some(&bad) = table.iter().find(|&&e| e as usize >= domain.size()) {
            return Err(Error::OutOfRange {
                value: bad as usize,
                size: domain.size(),
            });
        }
        Ok(OpTable {
            arity,
            domain,
            table,
        })
    }

    pub fn from_fn(domain: Domain, arity: usize, mut f: impl FnMut(&[Elem]) -> Elem) -> Result<Self> {
        domain.power_within(arity, MAX_MATERIALIZE)?;
        let table = domain.tuples(arity).map(|t| f(&t)).collect();
        OpTable::new(domain, arity, table)
    }

    /// The `index`-th projection (zero-based).
    pub fn projection(domain: Domain, arity: usize, index: usize) -> Result<Self> {
        if index >= arity {
            return Err(Error::Arity {
                expected: arity,
                got: index + 1,
            });
        }
        OpTable::from_fn(domain, arity, |t| t[index])
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn table(&self) -> &[Elem] {
        &self.table
    }

    /// Checked application.
    pub fn apply(&self, args: &[Elem]) -> Result<Elem> {
        if args.len() != self.arity {
            return Err(Error::Arity {
                expected: self.arity,
                got: args.len(),
            });
        }
        for &a in args {
            self.domain.check(a as usize)?;
        }
        Ok(self.get(args))
    }

    /// Unchecked application; arguments must be in range.
    #[inline]
    pub fn get(&self, args: &[Elem]) -> Elem {
        debug_assert_eq!(args.len(), self.arity);
        self.table[self.domain.encode(args)]
    }

    #[inline]
    pub fn at(&self, index: usize) -> Elem {
        self.table[index]
    }

    pub fn is_idempotent(&self) -> bool {
        self.domain
            .elements()
            .all(|a| self.get(&vec![a; self.arity]) == a)
    }

    pub fn is_projection(&self) -> Option<usize> {
        (0..self.arity).find(|&i| {
            self.domain
                .tuples(self.arity)
                .zip(&self.table)
                .all(|(t, &v)| t[i] == v)
        })
    }
}

/// How a relation is represented.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    Tuples(BTreeSet<Tuple>),
    Qf(Formula),
    Dnf(Dnf),
}

/// A finite relation over a domain in one of three encodings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relation {
    arity: usize,
    domain: Domain,
    encoding: Encoding,
}

impl Relation {
    pub fn from_tuples<I>(domain: Domain, arity: usize, tuples: I) -> Result<Self>
    where
        I: IntoIterator<Item = Tuple>,
    {
        let mut set = BTreeSet::new();
        for t in tuples {
            if t.len() != arity {
                return Err(Error::Arity {
                    expected: arity,
                    got: t.len(),
                });
            }
            for &e in &t {
                domain.check(e as usize)?;
            }
            set.insert(t);
        }
        Ok(Relation {
            arity,
            domain,
            encoding: Encoding::Tuples(set),
        })
    }

    pub fn from_qf(domain: Domain, arity: usize, formula: Formula) -> Result<Self> {
        formula.check_bounds(arity, domain)?;
        Ok(Relation {
            arity,
            domain,
            encoding: Encoding::Qf(formula),
        })
    }

    pub fn from_dnf(domain: Domain, arity: usize, dnf: Dnf) -> Result<Self> {
        dnf.check_bounds(arity, domain)?;
        Ok(Relation {
            arity,
            domain,
            encoding: Encoding::Dnf(dnf),
        })
    }

    pub fn parse_qf(domain: Domain, arity: usize, text: &str) -> Result<Self> {
        Relation::from_qf(domain, arity, Formula::parse(text)?)
    }

    pub fn parse_dnf(domain: Domain, arity: usize, text: &str) -> Result<Self> {
        Relation::from_dnf(domain, arity, Dnf::parse(text)?)
    }

    pub fn full(domain: Domain, arity: usize) -> Self {
        Relation {
            arity,
            domain,
            encoding: Encoding::Dnf(Dnf::top()),
        }
    }

    pub fn empty(domain: Domain, arity: usize) -> Self {
        Relation {
            arity,
            domain,
            encoding: Encoding::Tuples(BTreeSet::new()),
        }
    }

    /// The unary relation given by a set of elements.
    pub fn unary(domain: Domain, set: ElemSet) -> Self {
        Relation {
            arity: 1,
            domain,
            encoding: Encoding::Tuples(set.iter().filter(|&e| (e as usize) < domain.size()).map(|e| vec![e]).collect()),
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn encoding(&self) -> &Encoding {
        &self.encoding
    }

    /// Membership test without materializing.
    pub fn contains(&self, tuple: &[Elem]) -> bool {
        if tuple.len() != self.arity {
            return false;
        }
        match &self.encoding {
            Encoding::Tuples(set) => set.contains(tuple),
            Encoding::Qf(f) => f.eval(tuple),
            Encoding::Dnf(d) => d.eval(tuple),
        }
    }

    /// The exact tuple set, in lexicographic order.
    pub fn materialize(&self) -> Result<BTreeSet<Tuple>> {
        match &self.encoding {
            Encoding::Tuples(set) => Ok(set.clone()),
            Encoding::Dnf(d) => d.solutions(self.arity, self.domain),
            Encoding::Qf(f) => {
                self.domain.power_within(self.arity, MAX_MATERIALIZE)?;
                Ok(self
                    .domain
                    .tuples(self.arity)
                    .filter(|t| f.eval(t))
                    .collect())
            }
        }
    }

    pub fn to_tuples(&self) -> Result<Relation> {
        Ok(Relation {
            arity: self.arity,
            domain: self.domain,
            encoding: Encoding::Tuples(self.materialize()?),
        })
    }

    /// Re-encode as DNF. Tuple lists become one conjunct per tuple.
    pub fn to_dnf(&self) -> Result<Relation> {
        let dnf = match &self.encoding {
            Encoding::Dnf(d) => d.clone(),
            Encoding::Qf(f) => match Dnf::from_formula(f) {
                Ok(d) => d,
                Err(_) => Dnf::from_tuples(&self.materialize()?),
            },
            Encoding::Tuples(set) => Dnf::from_tuples(set),
        };
        Ok(Relation {
            arity: self.arity,
            domain: self.domain,
            encoding: Encoding::Dnf(dnf),
        })
    }

    pub fn to_qf(&self) -> Result<Relation> {
        let f = match &self.encoding {
            Encoding::Qf(f) => f.clone(),
            Encoding::Dnf(d) => d.to_formula(),
            Encoding::Tuples(set) => Dnf::from_tuples(set).to_formula(),
        };
        Ok(Relation {
            arity: self.arity,
            domain: self.domain,
            encoding: Encoding::Qf(f),
        })
    }

    /// The relation with coordinate `coord` fixed to `value` and removed.
    pub fn fix(&self, coord: usize, value: Elem) -> Result<Relation> {
        self.check_coord(coord)?;
        let encoding = match &self.encoding {
            Encoding::Dnf(d) => Encoding::Dnf(d.fix(coord, value)),
            _ => Encoding::Tuples(
                self.materialize()?
                    .into_iter()
                    .filter(|t| t[coord] == value)
                    .map(|mut t| {
                        t.remove(coord);
                        t
                    })
                    .collect(),
            ),
        };
        Ok(Relation {
            arity: self.arity - 1,
            domain: self.domain,
            encoding,
        })
    }

    /// Existentially quantify away coordinate `coord`.
    pub fn exists(&self, coord: usize) -> Result<Relation> {
        self.check_coord(coord)?;
        let encoding = match &self.encoding {
            Encoding::Dnf(d) => Encoding::Dnf(d.exists(coord)),
            _ => Encoding::Tuples(
                self.materialize()?
                    .into_iter()
                    .map(|mut t| {
                        t.remove(coord);
                        t
                    })
                    .collect(),
            ),
        };
        Ok(Relation {
            arity: self.arity - 1,
            domain: self.domain,
            encoding,
        })
    }

    /// The projection onto the listed coordinates, as a tuple set.
    /// For DNF this never enumerates the full arity.
    pub fn project(&self, coords: &[usize]) -> Result<BTreeSet<Tuple>> {
        for &c in coords {
            self.check_coord(c)?;
        }
        match &self.encoding {
            Encoding::Dnf(d) => Ok(d.project(self.arity, coords, self.domain)),
            _ => Ok(self
                .materialize()?
                .iter()
                .map(|t| coords.iter().map(|&c| t[c]).collect())
                .collect()),
        }
    }

    pub fn is_empty(&self) -> Result<bool> {
        match &self.encoding {
            Encoding::Tuples(s) => Ok(s.is_empty()),
            Encoding::Dnf(d) => Ok(d.is_unsatisfiable(self.arity, self.domain)),
            Encoding::Qf(_) => Ok(self.materialize()?.is_empty()),
        }
    }

    fn check_coord(&self, coord: usize) -> Result<()> {
        if coord < self.arity {
            Ok(())
        } else {
            Err(Error::Arity {
                expected: self.arity,
                got: coord + 1,
            })
        }
    }
}

/// A named operation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedOp {
    pub name: String,
    pub op: OpTable,
}

/// A set of named operations over one domain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Algebra {
    domain: Domain,
    ops: Vec<NamedOp>,
}

impl Algebra {
    pub fn new(domain: Domain) -> Self {
        Algebra {
            domain,
            ops: Vec::new(),
        }
    }

    pub fn with_op(mut self, name: impl Into<String>, op: OpTable) -> Result<Self> {
        self.add_op(name, op)?;
        Ok(self)
    }

    pub fn add_op(&mut self, name: impl Into<String>, op: OpTable) -> Result<()> {
        let name = name.into();
        if op.domain() != self.domain {
            return Err(Error::DomainMismatch(op.domain().size(), self.domain.size()));
        }
        if self.ops.iter().any(|o| o.name == name) {
            return Err(Error::Shape(format!("duplicate operation `{name}`")));
        }
        self.ops.push(NamedOp { name, op });
        Ok(())
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn ops(&self) -> &[NamedOp] {
        &self.ops
    }

    pub fn op(&self, name: &str) -> Option<&OpTable> {
        self.ops.iter().find(|o| o.name == name).map(|o| &o.op)
    }

    pub fn is_idempotent(&self) -> bool {
        self.ops.iter().all(|o| o.op.is_idempotent())
    }

    pub fn require_idempotent(&self) -> Result<()> {
        match self.ops.iter().find(|o| !o.op.is_idempotent()) {
            None => Ok(()),
            Some(o) => Err(Error::Precondition(format!(
                "operation `{}` is not idempotent",
                o.name
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedRelation {
    pub name: String,
    pub relation: Relation,
}

/// A relational structure: named relations and named constants over one domain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Structure {
    domain: Domain,
    relations: Vec<NamedRelation>,
    constants: Vec<(String, Elem)>,
}

impl Structure {
    pub fn new(domain: Domain) -> Self {
        Structure {
            domain,
            relations: Vec::new(),
            constants: Vec::new(),
        }
    }

    pub fn with_relation(mut self, name: impl Into<String>, relation: Relation) -> Result<Self> {
        self.add_relation(name, relation)?;
        Ok(self)
    }

    pub fn add_relation(&mut self, name: impl Into<String>, relation: Relation) -> Result<()> {
        let name = name.into();
        if relation.domain() != self.domain {
            return Err(Error::DomainMismatch(
                relation.domain().size(),
                self.domain.size(),
            ));
        }
        if self.relations.iter().any(|r| r.name == name) {
            return Err(Error::Shape(format!("duplicate relation `{name}`")));
        }
        self.relations.push(NamedRelation { name, relation });
        Ok(())
    }

    pub fn add_constant(&mut self, name: impl Into<String>, value: Elem) -> Result<()> {
        self.domain.check(value as usize)?;
        self.constants.push((name.into(), value));
        Ok(())
    }

    /// Adds a constant for every domain element, named `c0`, `c1`, ...
    pub fn with_all_constants(mut self) -> Self {
        for a in self.domain.elements() {
            self.constants.push((format!("c{a}"), a));
        }
        self
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn relations(&self) -> &[NamedRelation] {
        &self.relations
    }

    pub fn relation(&self, name: &str) -> Option<&Relation> {
        self.relations
            .iter()
            .find(|r| r.name == name)
            .map(|r| &r.relation)
    }

    pub fn constants(&self) -> &[(String, Elem)] {
        &self.constants
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(n: usize) -> Domain {
        Domain::new(n).unwrap()
    }

    #[test]
    fn tuple_iter_is_lexicographic() {
        let all: Vec<_> = d(2).tuples(2).collect();
        assert_eq!(all, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        assert_eq!(d(3).tuples(0).count(), 1);
        assert_eq!(d(3).tuples(4).count(), 81);
    }

    #[test]
    fn encode_decode_agree() {
        let dom = d(3);
        for (i, t) in dom.tuples(3).enumerate() {
            assert_eq!(dom.encode(&t), i);
            assert_eq!(dom.decode(i, 3), t);
        }
    }

    #[test]
    fn apply_matches_table_lookup() {
        let dom = d(3);
        let op = OpTable::from_fn(dom, 3, |t| (t[0] + 2 * t[1] + t[2]) % 3).unwrap();
        for (i, t) in dom.tuples(3).enumerate() {
            assert_eq!(op.apply(&t).unwrap(), op.table()[i]);
        }
        assert!(matches!(op.apply(&[0, 1]), Err(Error::Arity { .. })));
        assert!(matches!(op.apply(&[0, 1, 3]), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn table_validation() {
        assert!(OpTable::new(d(2), 1, vec![0, 2]).is_err());
        assert!(OpTable::new(d(2), 2, vec![0, 1]).is_err());
        assert!(Domain::new(0).is_err());
        assert!(Domain::new(11).is_err());
    }

    #[test]
    fn relation_arity_validated() {
        let err = Relation::from_tuples(d(3), 2, vec![vec![0, 1, 2]]).unwrap_err();
        assert_eq!(err, Error::Arity { expected: 2, got: 3 });
    }

    #[test]
    fn diagonal_and_disequality() {
        let dom = d(2);
        let diag = Relation::parse_dnf(dom, 2, "(x0=0&x1=0)|(x0=1&x1=1)").unwrap();
        let want: BTreeSet<Tuple> = [vec![0, 0], vec![1, 1]].into_iter().collect();
        assert_eq!(diag.materialize().unwrap(), want);

        let ne = Relation::parse_qf(dom, 2, "!(x0=x1)").unwrap();
        let want: BTreeSet<Tuple> = [vec![0, 1], vec![1, 0]].into_iter().collect();
        assert_eq!(ne.materialize().unwrap(), want);
    }

    #[test]
    fn fix_and_exists_agree_across_encodings() {
        let dom = d(3);
        let r = Relation::parse_dnf(dom, 3, "(x0=x1&x2=0)|(x1=2)").unwrap();
        let t = r.to_tuples().unwrap();
        for c in 0..3 {
            assert_eq!(
                r.exists(c).unwrap().materialize().unwrap(),
                t.exists(c).unwrap().materialize().unwrap()
            );
            for v in dom.elements() {
                assert_eq!(
                    r.fix(c, v).unwrap().materialize().unwrap(),
                    t.fix(c, v).unwrap().materialize().unwrap()
                );
            }
        }
        assert_eq!(r.project(&[2, 0]).unwrap(), t.project(&[2, 0]).unwrap());
    }

    #[test]
    fn arity_zero_relations() {
        let dom = d(2);
        assert_eq!(Relation::full(dom, 0).materialize().unwrap().len(), 1);
        assert!(Relation::empty(dom, 0).materialize().unwrap().is_empty());
    }

    #[test]
    fn elem_set_parse_and_display() {
        let s = ElemSet::parse("0, 2", d(3)).unwrap();
        assert_eq!(s.to_string(), "{0,2}");
        assert!(ElemSet::parse("3", d(3)).is_err());
        assert_eq!(s.min(), Some(0));
    }
}
