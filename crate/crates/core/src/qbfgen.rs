//! Quantified Boolean formulas `∀x ∃y ψ` in 3-CNF and their encoding as a
//! pair of CRPQs over single letters and letter stars.

use std::fmt;

use crate::boundedness::{AnalysisOptions, Verdict};
use crate::expansion::{bound_query, ExponentDomain, ExpansionSpace};
use crate::homomorphism::{expansion_contained, ContainmentWitness, SearchCaps, SearchError, SearchStats};
use crate::syntax::{Atom, Crpq, RegexExpr, Symbol, Ucrpq, Var};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QbfError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("formula has {0} variables, more than the brute-force limit of 20")]
    TooLarge(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum QVar {
    /// Universally quantified, 1-based.
    X(usize),
    /// Existentially quantified, 1-based.
    Y(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub var: QVar,
    pub positive: bool,
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.positive { "" } else { "-" };
        match self.var {
            QVar::X(i) => write!(f, "{sign}x{i}"),
            QVar::Y(i) => write!(f, "{sign}y{i}"),
        }
    }
}

/// `∀x1..xn ∃y1..yl` followed by a conjunction of three-literal clauses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Qbf {
    pub n_universal: usize,
    pub n_existential: usize,
    pub clauses: Vec<[Literal; 3]>,
}

impl fmt::Display for Qbf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "forall 1..{}", self.n_universal)?;
        writeln!(f, "exists 1..{}", self.n_existential)?;
        for c in &self.clauses {
            writeln!(f, "{} {} {}", c[0], c[1], c[2])?;
        }
        Ok(())
    }
}

fn parse_range(text: &str, line: usize) -> Result<Vec<usize>, QbfError> {
    let bad = || QbfError::Parse {
        line,
        message: format!("bad variable list `{text}`"),
    };
    let mut out = Vec::new();
    for tok in text.split_whitespace() {
        if let Some((a, b)) = tok.split_once("..") {
            let a: usize = a.parse().map_err(|_| bad())?;
            let b: usize = b.parse().map_err(|_| bad())?;
            if a == 0 || b < a {
                return Err(bad());
            }
            out.extend(a..=b);
        } else {
            let v: usize = tok.parse().map_err(|_| bad())?;
            if v == 0 {
                return Err(bad());
            }
            out.push(v);
        }
    }
    Ok(out)
}

impl Qbf {
    /// Parse the text format:
    ///
    /// ```text
    /// forall 1..2
    /// exists 1..1
    /// x1 -x2 y1
    /// ```
    ///
    /// Literals are `x<i>` / `y<i>` with an optional `-` (or `!`, `~`).
    /// Plain signed integers are accepted when the two quantifier blocks use
    /// disjoint indices, QDIMACS style; a trailing `0` is ignored. Lines
    /// starting with `c` or `#` are comments.
    pub fn parse(src: &str) -> Result<Qbf, QbfError> {
        let mut forall: Option<Vec<usize>> = None;
        let mut exists: Option<Vec<usize>> = None;
        let mut raw_clauses: Vec<(usize, Vec<String>)> = Vec::new();
        for (i, raw) in src.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line == "c" || line.starts_with("c ") || line.starts_with("p ") {
                continue;
            }
            if let Some(rest) = line.strip_prefix("forall") {
                forall = Some(parse_range(rest, line_no)?);
            } else if let Some(rest) = line.strip_prefix("exists") {
                exists = Some(parse_range(rest, line_no)?);
            } else {
                let mut toks: Vec<String> = line.split_whitespace().map(str::to_string).collect();
                if toks.last().is_some_and(|t| t == "0") {
                    toks.pop();
                }
                raw_clauses.push((line_no, toks));
            }
        }
        let forall = forall.unwrap_or_default();
        let exists = exists.unwrap_or_default();
        let global = forall.iter().all(|v| !exists.contains(v));
        let mut clauses = Vec::new();
        for (line, toks) in raw_clauses {
            let bad = |message: String| QbfError::Parse { line, message };
            if toks.len() != 3 {
                return Err(bad(format!("expected 3 literals, found {}", toks.len())));
            }
            let mut lits = Vec::with_capacity(3);
            for t in &toks {
                let (positive, body) = match t.strip_prefix(['-', '!', '~']) {
                    Some(b) => (false, b),
                    None => (true, t.as_str()),
                };
                let var = if let Some(k) = body.strip_prefix('x') {
                    let k: usize = k.parse().map_err(|_| bad(format!("bad literal `{t}`")))?;
                    if k == 0 || k > forall.len() {
                        return Err(bad(format!("`{t}` is not a declared universal variable")));
                    }
                    QVar::X(k)
                } else if let Some(k) = body.strip_prefix('y') {
                    let k: usize = k.parse().map_err(|_| bad(format!("bad literal `{t}`")))?;
                    if k == 0 || k > exists.len() {
                        return Err(bad(format!("`{t}` is not a declared existential variable")));
                    }
                    QVar::Y(k)
                } else {
                    let k: usize = body.parse().map_err(|_| bad(format!("bad literal `{t}`")))?;
                    if !global {
                        return Err(bad("numeric literals are ambiguous here; write x<i> or y<i>".into()));
                    }
                    if let Some(p) = forall.iter().position(|&v| v == k) {
                        QVar::X(p + 1)
                    } else if let Some(p) = exists.iter().position(|&v| v == k) {
                        QVar::Y(p + 1)
                    } else {
                        return Err(bad(format!("variable {k} is not declared")));
                    }
                };
                lits.push(Literal { var, positive });
            }
            clauses.push([lits[0], lits[1], lits[2]]);
        }
        Ok(Qbf {
            n_universal: forall.len(),
            n_existential: exists.len(),
            clauses,
        })
    }

    /// Truth of the formula under full assignments given as bit masks.
    pub fn holds_under(&self, xs: u64, ys: u64) -> bool {
        self.clauses.iter().all(|c| {
            c.iter().any(|l| {
                let bit = match l.var {
                    QVar::X(i) => xs >> (i - 1) & 1 == 1,
                    QVar::Y(i) => ys >> (i - 1) & 1 == 1,
                };
                bit == l.positive
            })
        })
    }
}

fn var(name: &str) -> Var {
    Var::new(name).expect("generated variable name")
}

fn sym(name: &str) -> Symbol {
    Symbol::new(name).expect("generated symbol name")
}

struct Builder {
    atoms: Vec<Atom>,
}

impl Builder {
    fn edge(&mut self, from: &str, label: &str, to: &str) {
        self.atoms
            .push(Atom::edge(&var(from), RegexExpr::Letter(sym(label)), &var(to)));
    }

    fn star(&mut self, from: &str, label: &str, to: &str) {
        self.atoms
            .push(Atom::edge(&var(from), RegexExpr::Star(crate::syntax::Word(vec![sym(label)])), &var(to)));
    }

    /// `node <-b- m <-a- m'`
    fn true_pattern(&mut self, node: &str) {
        let m = format!("{node}_b");
        self.edge(&m, "b", node);
        self.edge(&format!("{node}_a"), "a", &m);
    }

    /// `node <-b- m -a-> m'`
    fn false_pattern(&mut self, node: &str) {
        let m = format!("{node}_b");
        self.edge(&m, "b", node);
        self.edge(&m, "a", &format!("{node}_a"));
    }

    /// Both patterns sharing the `b` predecessor.
    fn both_patterns(&mut self, node: &str) {
        let m = format!("{node}_b");
        self.edge(&m, "b", node);
        self.edge(&m, "a", &format!("{node}_a"));
        self.edge(&format!("{node}_c"), "a", &m);
    }

    /// `from -j-> ... -j-> to` with `len` edges.
    fn j_path(&mut self, from: &str, len: usize, to: &str, tag: &str) {
        let mut cur = from.to_string();
        for step in 1..=len {
            let next = if step == len {
                to.to_string()
            } else {
                format!("{tag}_{step}")
            };
            self.edge(&cur, "j", &next);
            cur = next;
        }
    }
}

/// The assignment query. A root `d` carries an `s` loop and, for every
/// universal `x_i`, a node whose incoming `b`-edge starts either a
/// "false" shape (`a*` taken zero times) or a "true" shape (`a*` taken at
/// least once). Existentials get one node per truth value, each tagged by a
/// `j`-edge to a marker. An absorber `ab` carries every shape. Three
/// clause-position roots `e1..e3` with `s` loops reach `d` by a `j`-path of
/// their own index and `ab` by the other lengths.
pub fn build_q1(phi: &Qbf) -> Crpq {
    let mut b = Builder { atoms: Vec::new() };
    b.edge("d", "s", "d");
    for i in 1..=phi.n_universal {
        let x = format!("x{i}");
        let node = format!("dx{i}");
        b.edge("d", &x, &node);
        let (m, mp, v) = (format!("tx{i}_m"), format!("tx{i}_mp"), format!("tx{i}_v"));
        b.edge(&m, "b", &node);
        b.star(&mp, "a", &m);
        b.edge(&mp, "a", &v);
        let abs = format!("abx{i}");
        b.edge("ab", &x, &abs);
        b.both_patterns(&abs);
    }
    for i in 1..=phi.n_existential {
        let y = format!("y{i}");
        let (nt, nf) = (format!("dy{i}_t"), format!("dy{i}_f"));
        let (mt, mf) = (format!("yc{i}_t"), format!("yc{i}_f"));
        b.edge("d", &y, &nt);
        b.true_pattern(&nt);
        b.edge(&nt, "j", &mt);
        b.edge("d", &y, &nf);
        b.false_pattern(&nf);
        b.edge(&nf, "j", &mf);
        let abs = format!("aby{i}");
        b.edge("ab", &y, &abs);
        b.both_patterns(&abs);
        b.edge(&abs, "j", &mt);
        b.edge(&abs, "j", &mf);
    }
    for k in 1..=3 {
        let root = format!("e{k}");
        b.edge(&root, "s", &root);
        for len in 1..=3 {
            let target = if len == k { "d" } else { "ab" };
            b.j_path(&root, len, target, &format!("e{k}_j{len}"));
        }
    }
    Crpq::new(b.atoms)
}

/// The clause query. Every clause gets a root on an `s s*` cycle with a
/// `j`-path of length `k` to its `k`-th literal, which must show the shape
/// matching its sign. Literals over the same existential share a marker.
pub fn build_q2(phi: &Qbf) -> Crpq {
    let mut b = Builder { atoms: Vec::new() };
    for (ci, clause) in phi.clauses.iter().enumerate() {
        let c = ci + 1;
        let root = format!("c{c}");
        let back = format!("c{c}_s");
        b.edge(&root, "s", &back);
        b.star(&back, "s", &root);
        for (pos, lit) in clause.iter().enumerate() {
            let k = pos + 1;
            let p = format!("c{c}_p{k}");
            b.j_path(&root, k, &p, &format!("c{c}_l{k}_j"));
            let node = format!("c{c}_l{k}");
            let label = match lit.var {
                QVar::X(i) => format!("x{i}"),
                QVar::Y(i) => format!("y{i}"),
            };
            b.edge(&p, &label, &node);
            if lit.positive {
                b.true_pattern(&node);
            } else {
                b.false_pattern(&node);
            }
            if let QVar::Y(i) = lit.var {
                b.edge(&node, "j", &format!("y{i}_tf"));
            }
        }
    }
    Crpq::new(b.atoms)
}

/// `q1 ∧ q2` as one CRPQ; the two parts use disjoint variable names.
pub fn reduction(phi: &Qbf) -> Ucrpq {
    let mut atoms = build_q1(phi).atoms;
    atoms.extend(build_q2(phi).atoms);
    Ucrpq::single(Crpq::new(atoms))
}

/// Capped decision of the reduction: every expansion of `q1` with stars
/// taken at most once must contain an expansion of `q2` whose `s*` is taken
/// at most twice. Larger star exponents produce no new shapes in `q1`.
pub fn surrogate_bounded(phi: &Qbf, caps: SearchCaps) -> Result<bool, SearchError> {
    let q1 = build_q1(phi);
    let q2 = Ucrpq::single(bound_query(&build_q2(phi), 2));
    let space = ExpansionSpace::new(&q1, caps.normalize, |_, _| ExponentDomain::range(0, 1))?;
    let mut stats = SearchStats::default();
    for lambda in space.iter() {
        if expansion_contained(&lambda, &q2, caps, &mut stats)? == ContainmentWitness::NotContained {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Run the exact analysis on the reduction; with default caps this is
/// expected to give up, which callers report as inconclusive.
pub fn exact_verdict(phi: &Qbf, opts: &AnalysisOptions) -> Verdict {
    match crate::boundedness::is_bounded(&reduction(phi), opts) {
        Ok(report) => report.verdict,
        Err(e) => Verdict::Inconclusive(e.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_formats() {
        let a = Qbf::parse("forall 1..1\nexists 1..1\nx1 -y1 y1\n").unwrap();
        assert_eq!(a.clauses.len(), 1);
        assert_eq!(a.to_string(), "forall 1..1\nexists 1..1\nx1 -y1 y1\n");
        let b = Qbf::parse("c qdimacs\nforall 1 2\nexists 3\n1 -3 2 0\n").unwrap();
        assert_eq!(b.clauses[0][1], Literal { var: QVar::Y(1), positive: false });
        assert!(Qbf::parse("forall 1..1\nexists 1..1\n1 -1 1\n").is_err());
        assert!(Qbf::parse("forall 1..1\nexists 1..1\nx1 y1\n").is_err());
        assert!(Qbf::parse("forall 1..1\nexists 1..1\nx2 y1 y1\n").is_err());
    }

    #[test]
    fn queries_are_in_letter_star_fragment() {
        use crate::syntax::FragmentClass;
        let phi = Qbf::parse("forall 1..2\nexists 1..2\nx1 -y2 y1\n-x2 y2 x1\n").unwrap();
        let q = reduction(&phi);
        for c in q.classes() {
            assert!(matches!(c, FragmentClass::ASingleton | FragmentClass::AStar));
        }
        let text = q.to_string();
        let reparsed = crate::syntax::parse_ucrpq(&text).unwrap();
        assert_eq!(reparsed, q);
        let v1: std::collections::BTreeSet<_> = build_q1(&phi).vars();
        let v2: std::collections::BTreeSet<_> = build_q2(&phi).vars();
        assert!(v1.is_disjoint(&v2));
    }
}
