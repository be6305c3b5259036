//! Slow reference procedures used to cross-check the main algorithms:
//! query evaluation on explicit graphs, brute-force automaton membership,
//! randomized equivalence testing and brute-force QBF evaluation.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::expansion::{materialize, Cq, ExponentDomain, ExpansionSpace, SuccinctCq};
use crate::qbfgen::{Qbf, QbfError};
use crate::succinct_nfa::SuccinctNfa;
use crate::syntax::{Atom, Crpq, RegexExpr, Symbol, Ucrpq, Var, Word};

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("{what} of {size} exceeds the limit {cap}")]
    TooLarge { what: &'static str, size: u64, cap: u64 },
}

/// An edge-labelled directed graph.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GraphDb {
    pub nodes: Vec<String>,
    pub edges: Vec<(usize, Symbol, usize)>,
    index: HashMap<String, usize>,
}

impl GraphDb {
    pub fn node(&mut self, name: &str) -> usize {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        self.nodes.push(name.to_string());
        self.index.insert(name.to_string(), self.nodes.len() - 1);
        self.nodes.len() - 1
    }

    pub fn add_edge(&mut self, src: &str, label: Symbol, dst: &str) {
        let (s, d) = (self.node(src), self.node(dst));
        self.edges.push((s, label, d));
    }

    /// The canonical database of a CQ: one node per variable.
    pub fn from_cq(q: &Cq) -> Self {
        let mut db = GraphDb::default();
        for v in &q.vars {
            db.node(v.as_str());
        }
        for a in &q.atoms {
            db.add_edge(a.src.as_str(), a.label.clone(), a.dst.as_str());
        }
        db
    }

    /// Rows `src,label,dst`; a first row `src,label,dst` is taken as a header.
    pub fn from_csv(reader: impl Read) -> Result<Self, OracleError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let mut db = GraphDb::default();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let row = i + 1;
            if rec.len() != 3 {
                return Err(OracleError::Row {
                    row,
                    message: format!("expected 3 fields, found {}", rec.len()),
                });
            }
            if i == 0 && &rec[0] == "src" && &rec[1] == "label" && &rec[2] == "dst" {
                continue;
            }
            let label = Symbol::new(&rec[1]).map_err(|e| OracleError::Row {
                row,
                message: e.to_string(),
            })?;
            db.add_edge(&rec[0], label, &rec[2]);
        }
        Ok(db)
    }

    pub fn to_csv(&self, writer: impl Write) -> Result<(), OracleError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["src", "label", "dst"])?;
        for (s, l, d) in &self.edges {
            w.write_record([self.nodes[*s].as_str(), l.as_str(), self.nodes[*d].as_str()])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

impl fmt::Display for GraphDb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (s, l, d) in &self.edges {
            writeln!(f, "{} -{}-> {}", self.nodes[*s], l, self.nodes[*d])?;
        }
        Ok(())
    }
}

/// A binary relation over graph nodes as a bit matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Relation {
    n: usize,
    rows: Vec<Vec<u64>>,
}

impl Relation {
    fn empty(n: usize) -> Self {
        Relation {
            n,
            rows: vec![vec![0; n.div_ceil(64)]; n],
        }
    }

    fn identity(n: usize) -> Self {
        let mut r = Self::empty(n);
        for i in 0..n {
            r.set(i, i);
        }
        r
    }

    fn set(&mut self, i: usize, j: usize) {
        self.rows[i][j / 64] |= 1 << (j % 64);
    }

    fn get(&self, i: usize, j: usize) -> bool {
        self.rows[i][j / 64] >> (j % 64) & 1 == 1
    }

    fn letter(db: &GraphDb, a: &Symbol) -> Self {
        let mut r = Self::empty(db.nodes.len());
        for (s, l, d) in &db.edges {
            if l == a {
                r.set(*s, *d);
            }
        }
        r
    }

    fn union(mut self, other: &Relation) -> Self {
        for (row, o) in self.rows.iter_mut().zip(&other.rows) {
            for (x, y) in row.iter_mut().zip(o) {
                *x |= y;
            }
        }
        self
    }

    fn compose(&self, other: &Relation) -> Self {
        let mut out = Self::empty(self.n);
        for i in 0..self.n {
            for k in 0..self.n {
                if self.get(i, k) {
                    for (x, y) in out.rows[i].iter_mut().zip(&other.rows[k]) {
                        *x |= y;
                    }
                }
            }
        }
        out
    }

    fn pow(&self, mut e: u64) -> Self {
        let mut acc = Self::identity(self.n);
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.compose(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.compose(&base);
            }
        }
        acc
    }

    fn closure(&self) -> Self {
        let mut acc = Self::identity(self.n).union(self);
        loop {
            let next = acc.compose(&acc);
            if next == acc {
                return acc;
            }
            acc = next;
        }
    }
}

fn word_relation(db: &GraphDb, w: &Word) -> Relation {
    w.symbols()
        .iter()
        .fold(Relation::identity(db.nodes.len()), |acc, a| acc.compose(&Relation::letter(db, a)))
}

fn regex_relation(db: &GraphDb, e: &RegexExpr) -> Relation {
    let n = db.nodes.len();
    match e {
        RegexExpr::Epsilon => Relation::identity(n),
        RegexExpr::Letter(a) => Relation::letter(db, a),
        RegexExpr::Concat(cs) => cs
            .iter()
            .fold(Relation::identity(n), |acc, c| acc.compose(&regex_relation(db, c))),
        RegexExpr::Union(cs) => cs
            .iter()
            .fold(Relation::empty(n), |acc, c| acc.union(&regex_relation(db, c))),
        RegexExpr::Power(w, k) => word_relation(db, w).pow(*k),
        RegexExpr::PowerLE(w, k) => Relation::identity(n).union(&word_relation(db, w)).pow(*k),
        RegexExpr::Star(w) => word_relation(db, w).closure(),
    }
}

fn crpq_holds(q: &Crpq, db: &GraphDb) -> bool {
    let vars: Vec<Var> = q.vars().into_iter().collect();
    if vars.is_empty() {
        return true;
    }
    if db.nodes.is_empty() {
        return false;
    }
    let idx: HashMap<&Var, usize> = vars.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let mut rels = Vec::new();
    for a in &q.atoms {
        match a {
            Atom::Edge { src, label, dst } => {
                rels.push((idx[src], idx[dst], regex_relation(db, label)));
            }
            Atom::Equality(x, y) => rels.push((idx[x], idx[y], Relation::identity(db.nodes.len()))),
        }
    }
    let mut assign: Vec<Option<usize>> = vec![None; vars.len()];
    search(&mut assign, &rels, db.nodes.len())
}

/// Assign the variable most constrained by already assigned ones, trying
/// every node that satisfies all atoms between them.
fn search(assign: &mut [Option<usize>], rels: &[(usize, usize, Relation)], n: usize) -> bool {
    let touches = |x: usize, assign: &[Option<usize>]| {
        rels.iter()
            .filter(|(s, d, _)| (*s == x && (assign[*d].is_some() || *d == x)) || (*d == x && assign[*s].is_some()))
            .count()
    };
    let Some(x) = (0..assign.len())
        .filter(|&x| assign[x].is_none())
        .max_by_key(|&x| (touches(x, assign), std::cmp::Reverse(x)))
    else {
        return true;
    };
    for node in 0..n {
        assign[x] = Some(node);
        let ok = rels.iter().all(|(s, d, r)| {
            if *s != x && *d != x {
                return true;
            }
            match (assign[*s], assign[*d]) {
                (Some(a), Some(b)) => r.get(a, b),
                _ => true,
            }
        });
        if ok && search(assign, rels, n) {
            return true;
        }
    }
    assign[x] = None;
    false
}

/// Boolean evaluation of a union of CRPQs on an explicit graph, by
/// computing every atom's relation algebraically and searching for a
/// variable assignment.
pub fn eval_on_graph(q: &Ucrpq, db: &GraphDb) -> bool {
    q.disjuncts.iter().any(|d| crpq_holds(d, db))
}

/// Membership of `v^m` in the language of `nfa` by unrolling every
/// transition into letters and simulating on the explicit word.
pub fn nfa_membership_brute(nfa: &SuccinctNfa, v: &Word, m: u64, cap: u64) -> Result<bool, OracleError> {
    let input_len = (v.len() as u64).saturating_mul(m);
    if input_len > cap {
        return Err(OracleError::TooLarge {
            what: "input length",
            size: input_len,
            cap,
        });
    }
    // letter edges and epsilon edges over unrolled states
    let mut n = nfa.states.len();
    let mut letters: Vec<(usize, Symbol, usize)> = Vec::new();
    let mut eps: Vec<(usize, usize)> = Vec::new();
    let mut budget = cap;
    for t in &nfa.transitions {
        let len = (t.word.len() as u64).saturating_mul(t.exp);
        if len == 0 {
            eps.push((t.from, t.to));
            continue;
        }
        if len > budget {
            return Err(OracleError::TooLarge {
                what: "unrolled automaton",
                size: len,
                cap,
            });
        }
        budget -= len;
        let mut cur = t.from;
        for k in 0..len {
            let a = t.word.0[(k % t.word.len() as u64) as usize].clone();
            let next = if k + 1 == len {
                t.to
            } else {
                n += 1;
                n - 1
            };
            letters.push((cur, a, next));
            cur = next;
        }
    }
    let close = |set: &mut Vec<bool>| loop {
        let mut changed = false;
        for &(p, q) in &eps {
            if set[p] && !set[q] {
                set[q] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    };
    let mut cur = vec![false; n];
    cur[nfa.initial] = true;
    close(&mut cur);
    for k in 0..input_len {
        let a = &v.0[(k % v.len() as u64) as usize];
        let mut next = vec![false; n];
        for (p, l, q) in &letters {
            if cur[*p] && l == a {
                next[*q] = true;
            }
        }
        close(&mut next);
        cur = next;
    }
    Ok(nfa.finals.iter().any(|&f| cur[f]))
}

/// Outcome of a randomized equivalence test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Agreement {
    Agree { graphs: usize },
    Disagree(GraphDb),
    Skipped(String),
}

const EXPANSION_GRAPHS: usize = 200;
const EXPANSION_GRAPH_EDGES: u64 = 2_000;

fn expansion_graphs(q: &Ucrpq, out: &mut Vec<GraphDb>) {
    for d in &q.disjuncts {
        let Ok(space) = ExpansionSpace::new(d, EXPANSION_GRAPH_EDGES, |_, _| ExponentDomain::range(0, 2)) else {
            continue;
        };
        for e in space.iter().take(EXPANSION_GRAPHS) {
            if let Ok(cq) = materialize(&e, EXPANSION_GRAPH_EDGES) {
                out.push(GraphDb::from_cq(&cq));
            }
        }
    }
}

/// Random graph on `n` nodes where each possible labelled edge appears
/// with probability `2 / (n |Σ|)`.
pub fn random_graph(rng: &mut impl Rng, n: usize, alphabet: &[Symbol]) -> GraphDb {
    let mut db = GraphDb::default();
    for i in 0..n {
        db.node(&format!("n{i}"));
    }
    if alphabet.is_empty() || n == 0 {
        return db;
    }
    let p = (2.0 / (n as f64 * alphabet.len() as f64)).min(1.0);
    for s in 0..n {
        for a in alphabet {
            for d in 0..n {
                if rng.random_bool(p) {
                    db.edges.push((s, a.clone(), d));
                }
            }
        }
    }
    db
}

/// Compare `q1` and `q2` on the canonical graphs of small expansions of
/// both queries and on `trials` random graphs with up to `graph_size` nodes.
pub fn sampled_equivalence(q1: &Ucrpq, q2: &Ucrpq, trials: usize, graph_size: usize, seed: u64) -> Agreement {
    let mut graphs = Vec::new();
    expansion_graphs(q1, &mut graphs);
    expansion_graphs(q2, &mut graphs);
    let alphabet: Vec<Symbol> = q1.alphabet().union(&q2.alphabet()).cloned().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let n = rng.random_range(1..=graph_size.max(1));
        graphs.push(random_graph(&mut rng, n, &alphabet));
    }
    if graphs.is_empty() {
        return Agreement::Skipped("no test graphs".into());
    }
    for g in &graphs {
        if eval_on_graph(q1, g) != eval_on_graph(q2, g) {
            return Agreement::Disagree(g.clone());
        }
    }
    Agreement::Agree { graphs: graphs.len() }
}

/// Canonical database of an expansion.
pub fn materialize_graph(q: &SuccinctCq, cap: u64) -> Result<GraphDb, OracleError> {
    let cq = materialize(q, cap).map_err(|_| OracleError::TooLarge {
        what: "materialized expansion",
        size: q.materialized_len().unwrap_or(u64::MAX),
        cap,
    })?;
    Ok(GraphDb::from_cq(&cq))
}

/// Whether `right` maps into the canonical database of `left`.
pub fn contained_by_evaluation(left: &SuccinctCq, right: &Ucrpq, cap: u64) -> Result<bool, OracleError> {
    Ok(eval_on_graph(right, &materialize_graph(left, cap)?))
}

/// `∀x ∃y ψ` by trying every assignment.
pub fn qbf_satisfiable(phi: &Qbf) -> Result<bool, QbfError> {
    let total = phi.n_universal + phi.n_existential;
    if total > 20 {
        return Err(QbfError::TooLarge(total));
    }
    Ok((0..1u64 << phi.n_universal).all(|xs| (0..1u64 << phi.n_existential).any(|ys| phi.holds_under(xs, ys))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_ucrpq;

    fn db(edges: &[(&str, &str, &str)]) -> GraphDb {
        let mut g = GraphDb::default();
        for (s, l, d) in edges {
            g.add_edge(s, Symbol::new(l).unwrap(), d);
        }
        g
    }

    #[test]
    fn evaluates_powers_and_stars() {
        let g = db(&[("1", "a", "2"), ("2", "a", "3"), ("3", "a", "1"), ("1", "b", "4")]);
        assert!(eval_on_graph(&parse_ucrpq("?x -[a^3]-> ?x").unwrap(), &g));
        assert!(!eval_on_graph(&parse_ucrpq("?x -[a^2]-> ?x").unwrap(), &g));
        assert!(eval_on_graph(&parse_ucrpq("?x -[a^1000000000002]-> ?y, ?y -[b]-> ?z").unwrap(), &g));
        assert!(eval_on_graph(&parse_ucrpq("?x -[a*]-> ?y, ?y -[b]-> ?z, ?x -[a]-> ?w").unwrap(), &g));
        assert!(!eval_on_graph(&parse_ucrpq("?x -[b]-> ?y, ?y -[a^<=5]-> ?z, ?z -[b]-> ?w").unwrap(), &g));
        assert!(eval_on_graph(&parse_ucrpq("?x -[c]-> ?y | ?x -[eps]-> ?x").unwrap(), &g));
    }

    #[test]
    fn csv_round_trip() {
        let g = db(&[("u", "a", "v"), ("v", "b_1", "u")]);
        let mut buf = Vec::new();
        g.to_csv(&mut buf).unwrap();
        let back = GraphDb::from_csv(buf.as_slice()).unwrap();
        assert_eq!(back.nodes, g.nodes);
        assert_eq!(back.edges, g.edges);
        assert!(GraphDb::from_csv("u,a\n".as_bytes()).is_err());
    }

    #[test]
    fn brute_membership() {
        let nfa = SuccinctNfa::parse("initial: p\nfinals: q\np -[(ab)^3]-> q\n").unwrap();
        let ab = crate::syntax::parse_word("ab").unwrap();
        assert!(nfa_membership_brute(&nfa, &ab, 3, 100).unwrap());
        assert!(!nfa_membership_brute(&nfa, &ab, 2, 100).unwrap());
    }

    #[test]
    fn sampled_equivalence_detects_difference() {
        let q1 = parse_ucrpq("?x -[a]-> ?y").unwrap();
        let q2 = parse_ucrpq("?x -[a a]-> ?y").unwrap();
        assert!(matches!(sampled_equivalence(&q1, &q2, 5, 4, 1), Agreement::Disagree(_)));
        let q3 = parse_ucrpq("?x -[a]-> ?y, ?x -[a]-> ?z").unwrap();
        assert!(matches!(sampled_equivalence(&q1, &q3, 20, 5, 1), Agreement::Agree { .. }));
    }

    #[test]
    fn qbf_brute_force() {
        let t = Qbf::parse("forall 1..1\nexists 1..1\nx1 -x1 y1\n").unwrap();
        assert!(qbf_satisfiable(&t).unwrap());
        let f = Qbf::parse("forall 1..1\nexists 1..1\nx1 x1 x1\n").unwrap();
        assert!(!qbf_satisfiable(&f).unwrap());
    }
}
