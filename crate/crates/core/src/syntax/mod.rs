//! Query syntax: symbols, words, regular expressions of the supported
//! fragment, atoms, conjunctive and union queries.

mod parse;
mod render;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

pub use parse::{parse_crpq, parse_regex, parse_ucrpq, parse_word};

/// Parse failure with a 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{col}: {message}")]
pub struct SyntaxError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QueryError {
    #[error("invalid symbol name `{0}`")]
    InvalidSymbol(String),
    #[error("invalid variable name `{0}`")]
    InvalidVar(String),
    #[error("free variable `{0}` does not occur in the query")]
    UnknownFreeVar(String),
    #[error("fresh symbol `{0}` already occurs in the query")]
    SymbolClash(String),
}

/// An alphabet letter. Names start with an ASCII letter, continue with
/// digits, and may carry an underscore suffix (`a`, `x12`, `a_node`).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(name: &str) -> Result<Self, QueryError> {
        if parse::is_symbol_name(name) {
            Ok(Symbol(Arc::from(name)))
        } else {
            Err(QueryError::InvalidSymbol(name.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A query variable, written `?name` in the concrete syntax.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(Arc<str>);

impl Var {
    pub fn new(name: &str) -> Result<Self, QueryError> {
        if !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            Ok(Var(Arc::from(name)))
        } else {
            Err(QueryError::InvalidVar(name.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "?{}", self.0)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "?{}", self.0)
    }
}

/// A finite word over symbols. The empty word is allowed.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(pub Vec<Symbol>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    /// `self` repeated `n` times.
    pub fn pow(&self, n: usize) -> Word {
        let mut out = Vec::with_capacity(self.len() * n);
        for _ in 0..n {
            out.extend(self.0.iter().cloned());
        }
        Word(out)
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut out = self.0.clone();
        out.extend(other.0.iter().cloned());
        Word(out)
    }

    pub fn reversed(&self) -> Word {
        Word(self.0.iter().rev().cloned().collect())
    }
}

impl FromIterator<Symbol> for Word {
    fn from_iter<I: IntoIterator<Item = Symbol>>(iter: I) -> Self {
        Word(iter.into_iter().collect())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("eps");
        }
        f.write_str(&render::render_symbols(&self.0))
    }
}

/// Regular expressions of the supported fragment.
///
/// `Concat` and `Union` always have at least two children and are kept
/// flat by the smart constructors [`RegexExpr::concat`] and
/// [`RegexExpr::union`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RegexExpr {
    Epsilon,
    Letter(Symbol),
    Concat(Vec<RegexExpr>),
    Union(Vec<RegexExpr>),
    /// `w^n`, exponent written in binary-size notation.
    Power(Word, u64),
    /// `w^{<=n}`.
    PowerLE(Word, u64),
    /// `w*` with `w` non-empty.
    Star(Word),
}

/// Syntactic class of a single regular expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FragmentClass {
    /// A single letter.
    ASingleton,
    /// A single word of length other than one.
    WSingleton,
    /// Star-free without power operators.
    SF,
    /// Star-free with `w^n` or `w^{<=n}`.
    SSF,
    /// `a*` for a letter `a`.
    AStar,
    /// `w*` for a word of length at least two.
    WStar,
    Unsupported,
}

impl FragmentClass {
    pub fn is_star_free(self) -> bool {
        matches!(
            self,
            FragmentClass::ASingleton
                | FragmentClass::WSingleton
                | FragmentClass::SF
                | FragmentClass::SSF
        )
    }

    pub fn is_star(self) -> bool {
        matches!(self, FragmentClass::AStar | FragmentClass::WStar)
    }
}

impl RegexExpr {
    pub fn letter(s: &Symbol) -> Self {
        RegexExpr::Letter(s.clone())
    }

    /// The regex denoting exactly `w`.
    pub fn word(w: &Word) -> Self {
        RegexExpr::concat(w.0.iter().map(RegexExpr::letter).collect())
    }

    /// Flattening concatenation; zero children give `Epsilon`.
    pub fn concat(children: Vec<RegexExpr>) -> Self {
        let mut flat = Vec::with_capacity(children.len());
        for c in children {
            match c {
                RegexExpr::Concat(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => RegexExpr::Epsilon,
            1 => flat.pop().expect("one child"),
            _ => RegexExpr::Concat(flat),
        }
    }

    /// Flattening union. Panics on zero children.
    pub fn union(children: Vec<RegexExpr>) -> Self {
        let mut flat = Vec::with_capacity(children.len());
        for c in children {
            match c {
                RegexExpr::Union(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        assert!(!flat.is_empty(), "union needs at least one child");
        if flat.len() == 1 {
            flat.pop().expect("one child")
        } else {
            RegexExpr::Union(flat)
        }
    }

    /// The literal word denoted by this expression, if it is one.
    pub fn as_word(&self) -> Option<Word> {
        match self {
            RegexExpr::Epsilon => Some(Word::empty()),
            RegexExpr::Letter(s) => Some(Word(vec![s.clone()])),
            RegexExpr::Concat(cs) => {
                let mut out = Vec::new();
                for c in cs {
                    out.extend(c.as_word()?.0);
                }
                Some(Word(out))
            }
            _ => None,
        }
    }

    pub fn classify(&self) -> FragmentClass {
        match self {
            RegexExpr::Letter(_) => FragmentClass::ASingleton,
            RegexExpr::Star(w) if w.len() == 1 => FragmentClass::AStar,
            RegexExpr::Star(w) if w.is_empty() => FragmentClass::Unsupported,
            RegexExpr::Star(_) => FragmentClass::WStar,
            _ if self.contains_star() => FragmentClass::Unsupported,
            _ => {
                if self.as_word().is_some() {
                    FragmentClass::WSingleton
                } else if self.contains_power() {
                    FragmentClass::SSF
                } else {
                    FragmentClass::SF
                }
            }
        }
    }

    fn contains_star(&self) -> bool {
        match self {
            RegexExpr::Star(_) => true,
            RegexExpr::Concat(cs) | RegexExpr::Union(cs) => cs.iter().any(|c| c.contains_star()),
            _ => false,
        }
    }

    fn contains_power(&self) -> bool {
        match self {
            RegexExpr::Power(..) | RegexExpr::PowerLE(..) => true,
            RegexExpr::Concat(cs) | RegexExpr::Union(cs) => cs.iter().any(|c| c.contains_power()),
            _ => false,
        }
    }

    /// Size measure: letters count one, exponents count their bit length.
    pub fn size(&self) -> u64 {
        match self {
            RegexExpr::Epsilon | RegexExpr::Letter(_) => 1,
            RegexExpr::Concat(cs) | RegexExpr::Union(cs) => cs.iter().map(|c| c.size()).sum(),
            RegexExpr::Power(w, n) | RegexExpr::PowerLE(w, n) => w.len() as u64 + ceil_log2(*n),
            RegexExpr::Star(w) => w.len() as u64,
        }
    }

    /// Length of the longest word in the language, ignoring stars.
    /// Saturates instead of overflowing.
    pub fn max_word_len(&self) -> u64 {
        match self {
            RegexExpr::Epsilon | RegexExpr::Star(_) => 0,
            RegexExpr::Letter(_) => 1,
            RegexExpr::Concat(cs) => cs
                .iter()
                .fold(0u64, |acc, c| acc.saturating_add(c.max_word_len())),
            RegexExpr::Union(cs) => cs.iter().map(|c| c.max_word_len()).max().unwrap_or(0),
            RegexExpr::Power(w, n) | RegexExpr::PowerLE(w, n) => (w.len() as u64).saturating_mul(*n),
        }
    }

    pub fn alphabet(&self, out: &mut BTreeSet<Symbol>) {
        match self {
            RegexExpr::Epsilon => {}
            RegexExpr::Letter(s) => {
                out.insert(s.clone());
            }
            RegexExpr::Concat(cs) | RegexExpr::Union(cs) => {
                for c in cs {
                    c.alphabet(out);
                }
            }
            RegexExpr::Power(w, _) | RegexExpr::PowerLE(w, _) | RegexExpr::Star(w) => {
                out.extend(w.0.iter().cloned());
            }
        }
    }
}

/// `ceil(log2 n)` with the convention that `0` and `1` cost one bit.
pub fn ceil_log2(n: u64) -> u64 {
    if n <= 2 {
        1
    } else {
        64 - u64::from((n - 1).leading_zeros())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Atom {
    Edge { src: Var, label: RegexExpr, dst: Var },
    Equality(Var, Var),
}

impl Atom {
    pub fn edge(src: &Var, label: RegexExpr, dst: &Var) -> Self {
        Atom::Edge {
            src: src.clone(),
            label,
            dst: dst.clone(),
        }
    }

    pub fn vars(&self) -> [&Var; 2] {
        match self {
            Atom::Edge { src, dst, .. } => [src, dst],
            Atom::Equality(l, r) => [l, r],
        }
    }

    pub fn size(&self) -> u64 {
        match self {
            Atom::Edge { label, .. } => label.size(),
            Atom::Equality(..) => 1,
        }
    }
}

/// A conjunctive regular path query. All variables are existentially
/// quantified.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Crpq {
    pub atoms: Vec<Atom>,
    /// Variables that occur in no atom. Only produced by [`Crpq::collapse`].
    pub isolated: BTreeSet<Var>,
}

impl Crpq {
    pub fn new(atoms: Vec<Atom>) -> Self {
        Crpq {
            atoms,
            isolated: BTreeSet::new(),
        }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = self.isolated.clone();
        for a in &self.atoms {
            for v in a.vars() {
                out.insert(v.clone());
            }
        }
        out
    }

    pub fn edges(&self) -> impl Iterator<Item = (&Var, &RegexExpr, &Var)> {
        self.atoms.iter().filter_map(|a| match a {
            Atom::Edge { src, label, dst } => Some((src, label, dst)),
            Atom::Equality(..) => None,
        })
    }

    pub fn size(&self) -> u64 {
        self.atoms.iter().map(Atom::size).sum()
    }

    pub fn alphabet(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        for (_, label, _) in self.edges() {
            label.alphabet(&mut out);
        }
        out
    }

    /// Merge variables related by equality atoms, choosing the
    /// lexicographically least name of each class.
    pub fn collapse(&self) -> Crpq {
        let vars: Vec<Var> = self.vars().into_iter().collect();
        let index: BTreeMap<&Var, usize> = vars.iter().enumerate().map(|(i, v)| (v, i)).collect();
        let mut uf = UnionFind::new(vars.len());
        for a in &self.atoms {
            if let Atom::Equality(l, r) = a {
                uf.union(index[l], index[r]);
            }
        }
        // vars are sorted, so the smallest index of a class is its least name
        let mut rep = vec![usize::MAX; vars.len()];
        for i in 0..vars.len() {
            let root = uf.find(i);
            if rep[root] == usize::MAX {
                rep[root] = i;
            }
        }
        let name = |v: &Var| vars[rep[uf.find_const(index[v])]].clone();
        let mut atoms = Vec::new();
        let mut used = BTreeSet::new();
        for a in &self.atoms {
            if let Atom::Edge { src, label, dst } = a {
                let (s, d) = (name(src), name(dst));
                used.insert(s.clone());
                used.insert(d.clone());
                atoms.push(Atom::Edge {
                    src: s,
                    label: label.clone(),
                    dst: d,
                });
            }
        }
        let isolated = vars.iter().map(&name).filter(|v| !used.contains(v)).collect();
        Crpq { atoms, isolated }
    }

    /// Encode free variables into a Boolean query by attaching a self-loop
    /// labelled with a fresh symbol `a_<var>` to every free variable.
    pub fn reduce_free_vars(&self, free: &[Var]) -> Result<Crpq, QueryError> {
        let vars = self.vars();
        let alphabet = self.alphabet();
        let mut out = self.clone();
        for x in free {
            if !vars.contains(x) {
                return Err(QueryError::UnknownFreeVar(x.as_str().to_string()));
            }
            let sym = Symbol::new(&format!("a_{}", x.as_str()))?;
            if alphabet.contains(&sym) {
                return Err(QueryError::SymbolClash(sym.as_str().to_string()));
            }
            out.atoms.push(Atom::edge(x, RegexExpr::Letter(sym), x));
        }
        Ok(out)
    }
}

/// A finite disjunction of CRPQs with independent variable namespaces.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Ucrpq {
    pub disjuncts: Vec<Crpq>,
}

impl Ucrpq {
    pub fn single(q: Crpq) -> Self {
        Ucrpq { disjuncts: vec![q] }
    }

    pub fn size(&self) -> u64 {
        self.disjuncts.iter().map(Crpq::size).sum()
    }

    pub fn atom_count(&self) -> usize {
        self.disjuncts.iter().map(|d| d.atoms.len()).sum()
    }

    pub fn alphabet(&self) -> BTreeSet<Symbol> {
        self.disjuncts.iter().flat_map(|d| d.alphabet()).collect()
    }

    pub fn collapse(&self) -> Ucrpq {
        Ucrpq {
            disjuncts: self.disjuncts.iter().map(Crpq::collapse).collect(),
        }
    }

    /// The least fragment class over all atoms, `Unsupported` dominating.
    pub fn classes(&self) -> BTreeSet<FragmentClass> {
        self.disjuncts
            .iter()
            .flat_map(|d| d.edges().map(|(_, l, _)| l.classify()).collect::<Vec<_>>())
            .collect()
    }

    /// Whether every atom is star-free (possibly with powers) or a star over
    /// a word at the top level.
    pub fn in_supported_fragment(&self) -> bool {
        self.classes().iter().all(|c| *c != FragmentClass::Unsupported)
    }
}

/// Disjoint-set forest used for equality collapse.
#[derive(Debug, Clone)]
pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn find_const(&self, mut x: usize) -> usize {
        while self.parent[x] != x {
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

impl fmt::Display for RegexExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render::render_regex(self))
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Edge { src, label, dst } => write!(f, "{src} -[{label}]-> {dst}"),
            Atom::Equality(l, r) => write!(f, "{l} = {r}"),
        }
    }
}

impl fmt::Display for Crpq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.atoms.iter().map(|a| a.to_string()).collect();
        for v in &self.isolated {
            parts.push(format!("{v} = {v}"));
        }
        f.write_str(&parts.join(", "))
    }
}

impl fmt::Display for Ucrpq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.disjuncts.iter().map(|d| d.to_string()).collect();
        f.write_str(&parts.join(" | "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> Ucrpq {
        parse_ucrpq(s).unwrap()
    }

    #[test]
    fn sizes() {
        let r = parse_regex("(ab)^8").unwrap();
        assert_eq!(r.size(), 5);
        assert_eq!(parse_regex("a*").unwrap().size(), 1);
        assert_eq!(parse_regex("a").unwrap().size(), 1);
        assert_eq!(parse_regex("a^0").unwrap().size(), 2);
        assert_eq!(parse_regex("a^1").unwrap().size(), 2);
        assert_eq!(parse_regex("a^2").unwrap().size(), 2);
        assert_eq!(parse_regex("a^3").unwrap().size(), 3);
        assert_eq!(parse_regex("(abc)^<=1000").unwrap().size(), 13);
    }

    #[test]
    fn classes() {
        use FragmentClass::*;
        let c = |s: &str| parse_regex(s).unwrap().classify();
        assert_eq!(c("a"), ASingleton);
        assert_eq!(c("ab"), WSingleton);
        assert_eq!(c("a+b"), SF);
        assert_eq!(c("(ab)^11 + c"), SSF);
        assert_eq!(c("a*"), AStar);
        assert_eq!(c("(aba)*"), WStar);
        assert_eq!(c("a* b"), Unsupported);
        assert_eq!(c("a*+b"), Unsupported);
    }

    #[test]
    fn collapse_picks_least_name() {
        let c = q("?z = ?y, ?y -[a]-> ?x, ?x = ?w").disjuncts[0].collapse();
        assert_eq!(c.to_string(), "?y -[a]-> ?w");
        assert_eq!(c.collapse(), c);
        let only = q("?b = ?a").disjuncts[0].collapse();
        assert!(only.atoms.is_empty());
        assert_eq!(only.vars().len(), 1);
        assert_eq!(only.to_string(), "?a = ?a");
    }

    #[test]
    fn free_var_reduction() {
        let base = q("?x -[a]-> ?y").disjuncts[0].clone();
        let r = base.reduce_free_vars(&[Var::new("x").unwrap()]).unwrap();
        assert_eq!(r.to_string(), "?x -[a]-> ?y, ?x -[a_x]-> ?x");
        let clash = q("?x -[a_x]-> ?y").disjuncts[0].clone();
        assert!(clash.reduce_free_vars(&[Var::new("x").unwrap()]).is_err());
        assert!(base.reduce_free_vars(&[Var::new("nope").unwrap()]).is_err());
    }

    #[test]
    fn ceil_log_convention() {
        assert_eq!(ceil_log2(0), 1);
        assert_eq!(ceil_log2(1), 1);
        assert_eq!(ceil_log2(4), 2);
        assert_eq!(ceil_log2(5), 3);
        assert_eq!(ceil_log2(8), 3);
        assert_eq!(ceil_log2(9), 4);
    }
}
