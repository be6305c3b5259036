//! Expansions of CRPQs into succinct conjunctive queries, and their
//! materialization into plain CQs.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use crate::syntax::{Atom, Crpq, FragmentClass, RegexExpr, Symbol, UnionFind, Var, Word};

pub const DEFAULT_MATERIALIZE_CAP: u64 = 1_000_000;
pub const DEFAULT_EXPANSION_CAP: u64 = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExpansionError {
    #[error("{what} exceeds the cap of {cap}")]
    CapExceeded { what: &'static str, cap: u64 },
    #[error("atom label `{0}` is outside the supported fragment")]
    Unsupported(String),
}

/// An atom `src -[word^exp]-> dst` with a non-empty word and `exp >= 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SuccinctAtom {
    pub src: Var,
    pub word: Word,
    pub exp: u64,
    pub dst: Var,
}

impl SuccinctAtom {
    pub fn path_len(&self) -> Option<u64> {
        (self.word.len() as u64).checked_mul(self.exp)
    }
}

/// A conjunctive query whose atoms are succinct words.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SuccinctCq {
    pub vars: BTreeSet<Var>,
    pub atoms: Vec<SuccinctAtom>,
}

impl SuccinctCq {
    /// Build from raw triples; zero exponents and empty words merge their
    /// endpoints, keeping the lexicographically least name.
    pub fn from_parts(vars: impl IntoIterator<Item = Var>, raw: Vec<(Var, Word, u64, Var)>) -> Self {
        let mut all: BTreeSet<Var> = vars.into_iter().collect();
        for (s, _, _, d) in &raw {
            all.insert(s.clone());
            all.insert(d.clone());
        }
        let list: Vec<Var> = all.into_iter().collect();
        let index: BTreeMap<&Var, usize> = list.iter().enumerate().map(|(i, v)| (v, i)).collect();
        let mut uf = UnionFind::new(list.len());
        for (s, w, e, d) in &raw {
            if *e == 0 || w.is_empty() {
                uf.union(index[s], index[d]);
            }
        }
        let rep = |v: &Var| list[uf.find_const(index[v])].clone();
        let atoms = raw
            .iter()
            .filter(|(_, w, e, _)| *e > 0 && !w.is_empty())
            .map(|(s, w, e, d)| SuccinctAtom {
                src: rep(s),
                word: w.clone(),
                exp: *e,
                dst: rep(d),
            })
            .collect();
        let vars = list.iter().map(rep).collect();
        SuccinctCq { vars, atoms }
    }

    /// Total number of edges after materialization.
    pub fn materialized_len(&self) -> Option<u64> {
        self.atoms
            .iter()
            .try_fold(0u64, |acc, a| acc.checked_add(a.path_len()?))
    }

    pub fn to_crpq(&self) -> Crpq {
        let mut used = BTreeSet::new();
        let atoms = self
            .atoms
            .iter()
            .map(|a| {
                used.insert(a.src.clone());
                used.insert(a.dst.clone());
                let label = if a.exp == 1 {
                    RegexExpr::word(&a.word)
                } else {
                    RegexExpr::Power(a.word.clone(), a.exp)
                };
                Atom::edge(&a.src, label, &a.dst)
            })
            .collect();
        let isolated = self.vars.iter().filter(|v| !used.contains(*v)).cloned().collect();
        Crpq { atoms, isolated }
    }
}

impl fmt::Display for SuccinctCq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_crpq())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CqAtom {
    pub src: Var,
    pub label: Symbol,
    pub dst: Var,
}

/// A plain conjunctive query over single letters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cq {
    pub vars: BTreeSet<Var>,
    pub atoms: Vec<CqAtom>,
}

impl fmt::Display for Cq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut used = BTreeSet::new();
        let mut parts = Vec::new();
        for a in &self.atoms {
            used.insert(&a.src);
            used.insert(&a.dst);
            parts.push(format!("{} -[{}]-> {}", a.src, a.label, a.dst));
        }
        for v in &self.vars {
            if !used.contains(v) {
                parts.push(format!("{v} = {v}"));
            }
        }
        f.write_str(&parts.join(", "))
    }
}

/// Expand every atom into a path of single-letter atoms with fresh
/// intermediate variables.
pub fn materialize(q: &SuccinctCq, cap: u64) -> Result<Cq, ExpansionError> {
    let total = q.materialized_len().unwrap_or(u64::MAX);
    if total > cap {
        return Err(ExpansionError::CapExceeded {
            what: "materialized atom count",
            cap,
        });
    }
    let taken: HashSet<&str> = q.vars.iter().map(Var::as_str).collect();
    let mut prefix = String::from("_m");
    while taken.iter().any(|v| v.starts_with(&prefix)) {
        prefix.push('_');
    }
    let mut vars = q.vars.clone();
    let mut atoms = Vec::with_capacity(total as usize);
    for (i, a) in q.atoms.iter().enumerate() {
        let len = a.word.len() as u64 * a.exp;
        let mut cur = a.src.clone();
        for k in 0..len {
            let sym = a.word.0[(k % a.word.len() as u64) as usize].clone();
            let next = if k + 1 == len {
                a.dst.clone()
            } else {
                let v = Var::new(&format!("{prefix}{i}_{}", k + 1)).expect("valid generated name");
                vars.insert(v.clone());
                v
            };
            atoms.push(CqAtom {
                src: cur,
                label: sym,
                dst: next.clone(),
            });
            cur = next;
        }
    }
    Ok(Cq { vars, atoms })
}

/// Exponents allowed for one branch of an atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExpSet {
    Exact(u64),
    AtMost(u64),
    Any,
}

impl ExpSet {
    pub fn contains(self, e: u64) -> bool {
        match self {
            ExpSet::Exact(n) => e == n,
            ExpSet::AtMost(n) => e <= n,
            ExpSet::Any => true,
        }
    }

    pub fn allows_zero(self) -> bool {
        self.contains(0)
    }
}

/// One branch `word^e, e in exps` of a normalized atom label.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Alternative {
    pub word: Word,
    pub exps: ExpSet,
}

impl Alternative {
    /// Whether this branch can denote the empty word.
    pub fn allows_empty(&self) -> bool {
        self.word.is_empty() || self.exps.allows_zero()
    }
}

/// Normalize a supported atom label into a list of branches. Top-level
/// powers and stars stay symbolic; any other star-free structure is
/// expanded into its finite set of words, bounded by `cap` symbols.
pub fn alternatives(label: &RegexExpr, cap: u64) -> Result<Vec<Alternative>, ExpansionError> {
    if label.classify() == FragmentClass::Unsupported {
        return Err(ExpansionError::Unsupported(label.to_string()));
    }
    let mut out = Vec::new();
    collect_alternatives(label, cap, &mut out)?;
    let mut seen = HashSet::new();
    out.retain(|a: &Alternative| seen.insert(a.clone()));
    Ok(out)
}

fn collect_alternatives(
    e: &RegexExpr,
    cap: u64,
    out: &mut Vec<Alternative>,
) -> Result<(), ExpansionError> {
    match e {
        RegexExpr::Star(w) => out.push(Alternative {
            word: w.clone(),
            exps: ExpSet::Any,
        }),
        RegexExpr::Power(w, n) => out.push(Alternative {
            word: w.clone(),
            exps: ExpSet::Exact(*n),
        }),
        RegexExpr::PowerLE(w, n) => out.push(Alternative {
            word: w.clone(),
            exps: ExpSet::AtMost(*n),
        }),
        RegexExpr::Union(cs) => {
            for c in cs {
                collect_alternatives(c, cap, out)?;
            }
        }
        _ => {
            let mut budget = cap;
            for w in finite_words(e, &mut budget)? {
                out.push(Alternative {
                    word: w,
                    exps: ExpSet::Exact(1),
                });
            }
        }
    }
    Ok(())
}

fn charge(budget: &mut u64, amount: u64) -> Result<(), ExpansionError> {
    if amount > *budget {
        return Err(ExpansionError::CapExceeded {
            what: "star-free normalization size",
            cap: *budget,
        });
    }
    *budget -= amount;
    Ok(())
}

/// The finite language of a star-free expression.
pub fn finite_words(e: &RegexExpr, budget: &mut u64) -> Result<Vec<Word>, ExpansionError> {
    let words = match e {
        RegexExpr::Epsilon => vec![Word::empty()],
        RegexExpr::Letter(s) => vec![Word(vec![s.clone()])],
        RegexExpr::Power(w, n) => {
            charge(budget, (w.len() as u64).saturating_mul(*n))?;
            vec![w.pow(*n as usize)]
        }
        RegexExpr::PowerLE(w, n) => {
            let total = (w.len() as u64).saturating_mul(*n).saturating_mul(n.saturating_add(1)) / 2;
            charge(budget, total.saturating_add(*n))?;
            (0..=*n).map(|k| w.pow(k as usize)).collect()
        }
        RegexExpr::Union(cs) => {
            let mut out = Vec::new();
            for c in cs {
                out.extend(finite_words(c, budget)?);
            }
            out
        }
        RegexExpr::Concat(cs) => {
            let mut acc = vec![Word::empty()];
            for c in cs {
                let part = finite_words(c, budget)?;
                let mut next = Vec::with_capacity(acc.len() * part.len());
                for a in &acc {
                    for p in &part {
                        let w = a.concat(p);
                        charge(budget, w.len() as u64 + 1)?;
                        next.push(w);
                    }
                }
                acc = next;
            }
            acc
        }
        RegexExpr::Star(_) => return Err(ExpansionError::Unsupported(e.to_string())),
    };
    Ok(words)
}

/// Replace every top-level star `w*` by `w^{<=m}`.
pub fn bound_query(q: &Crpq, m: u64) -> Crpq {
    map_stars(q, |w| Some(RegexExpr::PowerLE(w.clone(), m)))
}

/// Replace `a*` by `a^{<=n}` for letters `a` in `letters` only.
pub fn bound_letters(q: &Crpq, letters: &BTreeSet<Symbol>, n: u64) -> Crpq {
    map_stars(q, |w| {
        (w.len() == 1 && letters.contains(&w.0[0])).then(|| RegexExpr::PowerLE(w.clone(), n))
    })
}

fn map_stars(q: &Crpq, f: impl Fn(&Word) -> Option<RegexExpr>) -> Crpq {
    let atoms = q
        .atoms
        .iter()
        .map(|a| match a {
            Atom::Edge {
                src,
                label: RegexExpr::Star(w),
                dst,
            } => match f(w) {
                Some(label) => Atom::edge(src, label, dst),
                None => a.clone(),
            },
            other => other.clone(),
        })
        .collect();
    Crpq {
        atoms,
        isolated: q.isolated.clone(),
    }
}

/// A finite set of exponents as sorted, disjoint, inclusive ranges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExponentDomain {
    ranges: Vec<(u64, u64)>,
}

impl ExponentDomain {
    pub fn range(lo: u64, hi: u64) -> Self {
        ExponentDomain {
            ranges: if lo <= hi { vec![(lo, hi)] } else { vec![] },
        }
    }

    /// `{0..=z} ∪ {zplus}`.
    pub fn bounded(z: u64, zplus: u64) -> Self {
        if zplus <= z.saturating_add(1) {
            Self::range(0, z.max(zplus))
        } else {
            ExponentDomain {
                ranges: vec![(0, z), (zplus, zplus)],
            }
        }
    }

    pub fn from_values(mut vals: Vec<u64>) -> Self {
        vals.sort_unstable();
        vals.dedup();
        let mut ranges: Vec<(u64, u64)> = Vec::new();
        for v in vals {
            match ranges.last_mut() {
                Some((_, hi)) if *hi + 1 == v => *hi = v,
                _ => ranges.push((v, v)),
            }
        }
        ExponentDomain { ranges }
    }

    pub fn len(&self) -> u64 {
        self.ranges.iter().map(|(lo, hi)| hi - lo + 1).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    pub fn nth(&self, mut i: u64) -> u64 {
        for (lo, hi) in &self.ranges {
            let n = hi - lo + 1;
            if i < n {
                return lo + i;
            }
            i -= n;
        }
        panic!("exponent index out of range")
    }

    /// Number of elements `<= threshold`.
    pub fn count_at_most(&self, threshold: u64) -> u64 {
        self.ranges
            .iter()
            .map(|(lo, hi)| {
                if threshold < *lo {
                    0
                } else {
                    threshold.min(*hi) - lo + 1
                }
            })
            .sum()
    }
}

#[derive(Debug, Clone)]
struct AtomChoices {
    src: Var,
    dst: Var,
    /// Branch word and the exponents enumerated for it.
    branches: Vec<(Word, ExponentDomain)>,
    total: u64,
    /// Choices with index at or above this one count as "long".
    long_from: Option<u64>,
}

impl AtomChoices {
    fn get(&self, mut i: u64) -> (&Word, u64) {
        for (w, dom) in &self.branches {
            let n = dom.len();
            if i < n {
                return (w, dom.nth(i));
            }
            i -= n;
        }
        panic!("choice index out of range")
    }
}

/// The expansions of one CRPQ under per-atom exponent domains, optionally
/// restricted to those where some designated star atom is long.
#[derive(Debug, Clone)]
pub struct ExpansionSpace {
    vars: BTreeSet<Var>,
    atoms: Vec<AtomChoices>,
    require_long: bool,
}

impl ExpansionSpace {
    /// `star_domain` receives the atom index and the starred word. Branches
    /// `w^{<=n}` enumerate `0..=n`.
    pub fn new(
        q: &Crpq,
        cap: u64,
        mut star_domain: impl FnMut(usize, &Word) -> ExponentDomain,
    ) -> Result<Self, ExpansionError> {
        let q = q.collapse();
        let mut atoms = Vec::new();
        for (i, (src, label, dst)) in q.edges().enumerate() {
            let mut branches = Vec::new();
            for alt in alternatives(label, cap)? {
                let dom = match alt.exps {
                    ExpSet::Exact(n) => ExponentDomain::range(n, n),
                    ExpSet::AtMost(n) => ExponentDomain::range(0, n),
                    ExpSet::Any => star_domain(i, &alt.word),
                };
                branches.push((alt.word, dom));
            }
            let total = branches.iter().map(|(_, d)| d.len()).sum();
            atoms.push(AtomChoices {
                src: src.clone(),
                dst: dst.clone(),
                branches,
                total,
                long_from: None,
            });
        }
        Ok(ExpansionSpace {
            vars: q.vars(),
            atoms,
            require_long: false,
        })
    }

    /// Keep only expansions in which at least one star atom accepted by
    /// `designated` takes an exponent above `threshold`.
    pub fn require_long(mut self, threshold: u64, designated: impl Fn(usize) -> bool) -> Self {
        for (i, a) in self.atoms.iter_mut().enumerate() {
            a.long_from = None;
            if designated(i) && a.branches.len() == 1 {
                let low = a.branches[0].1.count_at_most(threshold);
                if low < a.total {
                    a.long_from = Some(low);
                }
            }
        }
        self.require_long = true;
        self
    }

    /// Number of expansions, saturating at `u128::MAX`.
    pub fn count(&self) -> u128 {
        let all = self
            .atoms
            .iter()
            .fold(1u128, |acc, a| acc.saturating_mul(a.total as u128));
        if !self.require_long {
            return all;
        }
        let short = self.atoms.iter().fold(1u128, |acc, a| {
            acc.saturating_mul(a.long_from.unwrap_or(a.total) as u128)
        });
        all - short
    }

    pub fn iter(&self) -> ExpansionIter<'_> {
        let last_long = if self.require_long {
            self.atoms.iter().rposition(|a| a.long_from.is_some())
        } else {
            None
        };
        let mut it = ExpansionIter {
            space: self,
            idx: vec![0; self.atoms.len()],
            last_long,
            done: self.count() == 0,
        };
        if !it.done {
            it.reset_from(0);
        }
        it
    }

    fn build(&self, idx: &[u64]) -> SuccinctCq {
        let raw = self
            .atoms
            .iter()
            .zip(idx)
            .map(|(a, &i)| {
                let (w, e) = a.get(i);
                (a.src.clone(), w.clone(), e, a.dst.clone())
            })
            .collect();
        SuccinctCq::from_parts(self.vars.iter().cloned(), raw)
    }
}

/// Lexicographic iterator over an [`ExpansionSpace`], the first atom being
/// the most significant position.
pub struct ExpansionIter<'a> {
    space: &'a ExpansionSpace,
    idx: Vec<u64>,
    last_long: Option<usize>,
    done: bool,
}

impl ExpansionIter<'_> {
    fn is_long(&self, j: usize) -> bool {
        self.space.atoms[j]
            .long_from
            .is_some_and(|from| self.idx[j] >= from)
    }

    fn hit_before(&self, j: usize) -> bool {
        (0..j).any(|k| self.is_long(k))
    }

    fn first_allowed(&self, j: usize) -> u64 {
        if Some(j) == self.last_long && !self.hit_before(j) {
            self.space.atoms[j].long_from.expect("designated atom")
        } else {
            0
        }
    }

    fn reset_from(&mut self, start: usize) {
        for j in start..self.idx.len() {
            self.idx[j] = self.first_allowed(j);
        }
    }

    fn advance(&mut self) {
        for j in (0..self.idx.len()).rev() {
            if self.idx[j] + 1 < self.space.atoms[j].total {
                self.idx[j] += 1;
                self.reset_from(j + 1);
                return;
            }
        }
        self.done = true;
    }
}

impl Iterator for ExpansionIter<'_> {
    type Item = SuccinctCq;

    fn next(&mut self) -> Option<SuccinctCq> {
        if self.done {
            return None;
        }
        let out = self.space.build(&self.idx);
        self.advance();
        Some(out)
    }
}

/// All expansions of `q` with every star ranging over `dom`, in
/// lexicographic order. Fails when there are more than `cap`.
pub fn enumerate_expansions(
    q: &Crpq,
    dom: &ExponentDomain,
    cap: u64,
) -> Result<Vec<SuccinctCq>, ExpansionError> {
    let space = ExpansionSpace::new(q, DEFAULT_MATERIALIZE_CAP, |_, _| dom.clone())?;
    if space.count() > cap as u128 {
        return Err(ExpansionError::CapExceeded {
            what: "expansion count",
            cap,
        });
    }
    Ok(space.iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_crpq, parse_word};

    fn v(s: &str) -> Var {
        Var::new(s).unwrap()
    }

    #[test]
    fn materialize_example() {
        let q = SuccinctCq::from_parts([], vec![(v("x"), parse_word("ab").unwrap(), 2, v("y"))]);
        let cq = materialize(&q, 100).unwrap();
        assert_eq!(cq.atoms.len(), 4);
        assert_eq!(
            cq.to_string(),
            "?x -[a]-> ?_m0_1, ?_m0_1 -[b]-> ?_m0_2, ?_m0_2 -[a]-> ?_m0_3, ?_m0_3 -[b]-> ?y"
        );
        let big = SuccinctCq::from_parts([], vec![(v("x"), parse_word("a").unwrap(), 6, v("y"))]);
        assert!(materialize(&big, 5).is_err());
        let empty = SuccinctCq::from_parts([v("x")], vec![]);
        let cq = materialize(&empty, 5).unwrap();
        assert_eq!(cq.vars.len(), 1);
        assert!(cq.atoms.is_empty());
    }

    #[test]
    fn zero_exponent_collapses() {
        let q = parse_crpq("?x -[a*]-> ?y, ?x -[b]-> ?y").unwrap();
        let all = enumerate_expansions(&q, &ExponentDomain::range(0, 2), 100).unwrap();
        assert_eq!(all.len(), 3);
        assert_eq!(all[0].to_string(), "?x -[b]-> ?x");
        assert_eq!(all[2].to_string(), "?x -[a^2]-> ?y, ?x -[b]-> ?y");
        assert!(enumerate_expansions(&q, &ExponentDomain::range(0, 200), 100).is_err());
    }

    #[test]
    fn long_restriction_matches_filter() {
        let q = parse_crpq("?x -[a*]-> ?y, ?y -[b + c]-> ?z, ?z -[(ab)*]-> ?w").unwrap();
        let dom = ExponentDomain::bounded(3, 7);
        let space = ExpansionSpace::new(&q, 1000, |_, _| dom.clone()).unwrap();
        let all: Vec<_> = space.iter().collect();
        assert_eq!(all.len() as u128, space.count());
        let long = space.clone().require_long(3, |_| true);
        let kept: Vec<_> = long.iter().collect();
        assert_eq!(kept.len() as u128, long.count());
        let expected: Vec<_> = all
            .iter()
            .filter(|e| e.atoms.iter().any(|a| a.exp > 3))
            .cloned()
            .collect();
        assert_eq!(kept, expected);
    }

    #[test]
    fn alternatives_stay_symbolic_at_top() {
        let r = crate::syntax::parse_regex("(ab)^11 + c").unwrap();
        let alts = alternatives(&r, 100).unwrap();
        assert_eq!(alts.len(), 2);
        assert_eq!(alts[0].exps, ExpSet::Exact(11));
        let r = crate::syntax::parse_regex("a (b + c^2) d^<=1").unwrap();
        let alts = alternatives(&r, 100).unwrap();
        let words: Vec<String> = alts.iter().map(|a| a.word.to_string()).collect();
        assert_eq!(words, ["ab", "abd", "acc", "accd"]);
        let r = crate::syntax::parse_regex("a^1000 b").unwrap();
        assert!(alternatives(&r, 100).is_err());
    }
}
