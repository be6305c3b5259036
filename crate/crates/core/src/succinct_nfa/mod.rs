//! Automata whose transitions read powers `w^n` of words with `n` in
//! binary, and their membership problem for inputs of the form `v^m`.

mod lengths;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub use lengths::{
    has_length_dp, path_lengths, LengthCapExceeded, LengthComponent, LengthSet, Progression,
    WeightedGraph,
};

use crate::expansion::SuccinctCq;
use crate::syntax::{parse_regex, RegexExpr, SyntaxError, Var, Word};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NfaError {
    #[error("length {0} exceeds the dynamic-programming cap of {1}")]
    CapExceeded(u64, u64),
    #[error("path length overflows 64 bits")]
    Overflow,
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
}

/// Resource limits for membership and length queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NfaCaps {
    /// Largest target length handled by the explicit dynamic program.
    pub dp_length: u64,
    /// Step budget of the symbolic length-set computation.
    pub length_budget: u64,
}

impl Default for NfaCaps {
    fn default() -> Self {
        NfaCaps {
            dp_length: 1_000_000,
            length_budget: 1_000_000,
        }
    }
}

/// `p -[word^exp]-> q`; an empty word or zero exponent is an ε-move.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Transition {
    pub from: usize,
    pub word: Word,
    pub exp: u64,
    pub to: usize,
}

impl Transition {
    pub fn is_epsilon(&self) -> bool {
        self.exp == 0 || self.word.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuccinctNfa {
    pub states: Vec<String>,
    pub initial: usize,
    pub finals: BTreeSet<usize>,
    pub transitions: Vec<Transition>,
}

impl SuccinctNfa {
    /// Read the CQ as an automaton with `src` initial and `dst` final.
    pub fn from_succinct_cq_path(q: &SuccinctCq, src: &Var, dst: &Var) -> Option<SuccinctNfa> {
        let index: BTreeMap<&Var, usize> = q.vars.iter().enumerate().map(|(i, v)| (v, i)).collect();
        let transitions = q
            .atoms
            .iter()
            .map(|a| Transition {
                from: index[&a.src],
                word: a.word.clone(),
                exp: a.exp,
                to: index[&a.dst],
            })
            .collect();
        Some(SuccinctNfa {
            states: q.vars.iter().map(|v| v.as_str().to_string()).collect(),
            initial: *index.get(src)?,
            finals: [*index.get(dst)?].into_iter().collect(),
            transitions,
        })
    }

    /// Equivalent automaton without ε-moves, on the same states.
    pub fn without_epsilon(&self) -> SuccinctNfa {
        let n = self.states.len();
        let mut eps = vec![Vec::new(); n];
        for t in self.transitions.iter().filter(|t| t.is_epsilon()) {
            eps[t.from].push(t.to);
        }
        let closure: Vec<Vec<usize>> = (0..n)
            .map(|p| {
                let mut seen = vec![false; n];
                seen[p] = true;
                let mut stack = vec![p];
                while let Some(u) = stack.pop() {
                    for &v in &eps[u] {
                        if !seen[v] {
                            seen[v] = true;
                            stack.push(v);
                        }
                    }
                }
                (0..n).filter(|&q| seen[q]).collect()
            })
            .collect();
        let mut out_by_state = vec![Vec::new(); n];
        for t in self.transitions.iter().filter(|t| !t.is_epsilon()) {
            out_by_state[t.from].push(t);
        }
        let mut transitions = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (p, cl) in closure.iter().enumerate() {
            for &q in cl {
                for t in &out_by_state[q] {
                    let nt = Transition {
                        from: p,
                        word: t.word.clone(),
                        exp: t.exp,
                        to: t.to,
                    };
                    if seen.insert(nt.clone()) {
                        transitions.push(nt);
                    }
                }
            }
        }
        let finals = (0..n)
            .filter(|&p| closure[p].iter().any(|q| self.finals.contains(q)))
            .collect();
        SuccinctNfa {
            states: self.states.clone(),
            initial: self.initial,
            finals,
            transitions,
        }
    }

    /// Parse the line format: `initial: p`, `finals: q r`, and one
    /// transition `p -[(ab)^13]-> q` per line. `#` starts a comment.
    pub fn parse(src: &str) -> Result<SuccinctNfa, NfaError> {
        let mut names: Vec<String> = Vec::new();
        let mut index: BTreeMap<String, usize> = BTreeMap::new();
        let mut state = |name: &str, line: usize| -> Result<usize, NfaError> {
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(NfaError::Format {
                    line,
                    message: format!("invalid state name `{name}`"),
                });
            }
            Ok(*index.entry(name.to_string()).or_insert_with(|| {
                names.push(name.to_string());
                names.len() - 1
            }))
        };
        let mut initial = None;
        let mut finals = BTreeSet::new();
        let mut transitions = Vec::new();
        for (i, raw) in src.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("initial:") {
                initial = Some(state(rest.trim(), line_no)?);
            } else if let Some(rest) = line.strip_prefix("finals:") {
                for name in rest.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty()) {
                    finals.insert(state(name, line_no)?);
                }
            } else {
                let bad = |message: &str| NfaError::Format {
                    line: line_no,
                    message: message.to_string(),
                };
                let (lhs, rest) = line.split_once("-[").ok_or_else(|| bad("expected `-[`"))?;
                let (label, rhs) = rest.rsplit_once("]->").ok_or_else(|| bad("expected `]->`"))?;
                let from = state(lhs.trim(), line_no)?;
                let to = state(rhs.trim(), line_no)?;
                let (word, exp) = match parse_regex(label)? {
                    RegexExpr::Power(w, n) => (w, n),
                    other => match other.as_word() {
                        Some(w) => (w, 1),
                        None => return Err(bad("label must be a word or a power `(w)^n`")),
                    },
                };
                transitions.push(Transition { from, word, exp, to });
            }
        }
        let initial = initial.ok_or(NfaError::Format {
            line: 0,
            message: "missing `initial:` line".to_string(),
        })?;
        Ok(SuccinctNfa {
            states: names,
            initial,
            finals,
            transitions,
        })
    }
}

impl fmt::Display for SuccinctNfa {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "initial: {}", self.states[self.initial])?;
        let finals: Vec<&str> = self.finals.iter().map(|&q| self.states[q].as_str()).collect();
        writeln!(f, "finals: {}", finals.join(" "))?;
        for t in &self.transitions {
            let label = if t.exp == 1 {
                RegexExpr::word(&t.word)
            } else {
                RegexExpr::Power(t.word.clone(), t.exp)
            };
            writeln!(f, "{} -[{}]-> {}", self.states[t.from], label, self.states[t.to])?;
        }
        Ok(())
    }
}

/// `w[i..j]`, empty when `j <= i`.
pub fn factor<T: Clone>(w: &[T], i: usize, j: usize) -> Vec<T> {
    if j <= i {
        Vec::new()
    } else {
        w[i..j].to_vec()
    }
}

/// Phases of `v^∞` connected by reading one copy of `w`.
///
/// Phase `i` steps to `(i + |w|) mod |v|` exactly when `w` occurs in `v^∞`
/// at offset `i`. Reading `w^n` from phase `i` is a walk of `n` steps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PositionGraph {
    succ: Vec<Option<usize>>,
}

/// One edge of a [`PositionGraph`]: `w = v[from..] v^periods v[..to]`,
/// or `w = v[from..to]` when `periods` is `None`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PositionEdge {
    pub from: usize,
    pub to: usize,
    pub periods: Option<u64>,
}

impl PositionGraph {
    pub fn new<T: PartialEq>(w: &[T], v: &[T]) -> Self {
        assert!(!v.is_empty(), "period word must be non-empty");
        let p = v.len();
        let succ = (0..p)
            .map(|i| {
                w.iter()
                    .enumerate()
                    .all(|(k, c)| *c == v[(i + k) % p])
                    .then_some((i + w.len()) % p)
            })
            .collect();
        PositionGraph { succ }
    }

    pub fn step(&self, i: usize) -> Option<usize> {
        self.succ[i]
    }

    /// Phase after reading `w^n` from phase `i`.
    pub fn walk(&self, start: usize, n: u64) -> Option<usize> {
        let p = self.succ.len();
        let mut seen_at = vec![u64::MAX; p];
        let mut cur = start;
        let mut k = 0u64;
        while k < n {
            if seen_at[cur] != u64::MAX {
                let cycle = k - seen_at[cur];
                let mut rest = (n - k) % cycle;
                while rest > 0 {
                    cur = self.succ[cur]?;
                    rest -= 1;
                }
                return Some(cur);
            }
            seen_at[cur] = k;
            cur = self.succ[cur]?;
            k += 1;
        }
        Some(cur)
    }

    pub fn edges(&self, w_len: usize) -> Vec<PositionEdge> {
        let p = self.succ.len();
        self.succ
            .iter()
            .enumerate()
            .filter_map(|(i, s)| {
                let j = (*s)?;
                let end = i + w_len;
                let periods = (end >= p).then(|| ((end - j) / p - 1) as u64);
                Some(PositionEdge {
                    from: i,
                    to: j,
                    periods,
                })
            })
            .collect()
    }
}

/// Direct check of `w^n = v[i..] v^l v[..j]` for some `l`, or
/// `w^n = v[i..j]`; used to cross-check [`PositionGraph`].
pub fn factor_equation_holds<T: PartialEq + Clone>(w: &[T], n: u64, v: &[T], i: usize, j: usize) -> bool {
    let lhs: Vec<T> = (0..n).flat_map(|_| w.iter().cloned()).collect();
    if factor(v, i, j) == lhs && i < j {
        return true;
    }
    let max_l = lhs.len() / v.len() + 1;
    (0..=max_l).any(|l| {
        let mut rhs = factor(v, i, v.len());
        for _ in 0..l {
            rhs.extend(v.iter().cloned());
        }
        rhs.extend(factor(v, 0, j));
        rhs == lhs
    })
}

/// Product of an ε-free automaton with the phases of `v^∞`, as a weighted
/// graph whose edge weights are the lengths of the words read.
#[derive(Debug, Clone)]
pub struct ProductAutomaton {
    pub graph: WeightedGraph,
    pub initial: usize,
    pub finals: Vec<usize>,
    pub period: usize,
}

/// Build the product for an ε-free transition list over states `0..n`.
pub fn build_product<T: PartialEq>(
    n: usize,
    initial: usize,
    finals: &[usize],
    transitions: &[(usize, &[T], u64, usize)],
    v: &[T],
) -> Result<ProductAutomaton, NfaError> {
    let p = v.len();
    let mut graph = WeightedGraph::new(n * p);
    let mut cache: Vec<(&[T], PositionGraph)> = Vec::new();
    for &(from, w, exp, to) in transitions {
        let weight = (w.len() as u64).checked_mul(exp).ok_or(NfaError::Overflow)?;
        let pg = match cache.iter().position(|(cw, _)| *cw == w) {
            Some(k) => &cache[k].1,
            None => {
                cache.push((w, PositionGraph::new(w, v)));
                &cache.last().expect("just pushed").1
            }
        };
        for i in 0..p {
            if let Some(j) = pg.walk(i, exp) {
                graph.add_edge(from * p + i, to * p + j, weight);
            }
        }
    }
    Ok(ProductAutomaton {
        graph,
        initial: initial * p,
        finals: finals.iter().map(|f| f * p).collect(),
        period: p,
    })
}

/// Whether a walk from `initial` to some final vertex has total weight
/// exactly `target`. The symbolic length set is tried first, then the
/// explicit dynamic program.
pub fn weighted_reach(
    g: &WeightedGraph,
    initial: usize,
    finals: &[usize],
    target: u64,
    caps: NfaCaps,
) -> Result<bool, NfaError> {
    let mut with_sink = g.clone();
    let sink = with_sink.len();
    with_sink.adj.push(Vec::new());
    for &f in finals {
        with_sink.add_edge(f, sink, 0);
    }
    match path_lengths(&with_sink, initial, sink, caps.length_budget) {
        Ok(ls) => Ok(ls.contains(target)),
        Err(_) if target <= caps.dp_length => Ok(has_length_dp(&with_sink, initial, sink, target)),
        Err(_) => Err(NfaError::CapExceeded(target, caps.dp_length)),
    }
}

/// Membership of `v^m` in an automaton given by raw transitions, which may
/// contain ε-moves (zero exponent or empty word).
pub fn accepts_power<T: PartialEq>(
    n: usize,
    initial: usize,
    finals: &[usize],
    transitions: &[(usize, &[T], u64, usize)],
    v: &[T],
    m: u64,
    caps: NfaCaps,
) -> Result<bool, NfaError> {
    let mut eps = vec![Vec::new(); n];
    let mut proper: Vec<(usize, &[T], u64, usize)> = Vec::new();
    for &(from, w, e, to) in transitions {
        if e == 0 || w.is_empty() {
            eps[from].push(to);
        } else {
            proper.push((from, w, e, to));
        }
    }
    let has_eps = eps.iter().any(|e| !e.is_empty());
    let (proper, finals): (Vec<_>, Vec<usize>) = if has_eps {
        let closure: Vec<Vec<bool>> = (0..n)
            .map(|p| {
                let mut seen = vec![false; n];
                seen[p] = true;
                let mut stack = vec![p];
                while let Some(u) = stack.pop() {
                    for &x in &eps[u] {
                        if !seen[x] {
                            seen[x] = true;
                            stack.push(x);
                        }
                    }
                }
                seen
            })
            .collect();
        let mut out = Vec::new();
        for (p, cl) in closure.iter().enumerate() {
            for &(from, w, e, to) in &proper {
                if cl[from] {
                    out.push((p, w, e, to));
                }
            }
        }
        let fin = (0..n)
            .filter(|&p| finals.iter().any(|&f| closure[p][f]))
            .collect();
        (out, fin)
    } else {
        (proper, finals.to_vec())
    };
    if m == 0 || v.is_empty() {
        return Ok(finals.contains(&initial));
    }
    let target = (v.len() as u64).checked_mul(m).ok_or(NfaError::Overflow)?;
    let prod = build_product(n, initial, &finals, &proper, v)?;
    weighted_reach(&prod.graph, prod.initial, &prod.finals, target, caps)
}

/// Whether `v^m` is accepted.
pub fn membership(nfa: &SuccinctNfa, v: &Word, m: u64, caps: NfaCaps) -> Result<bool, NfaError> {
    let trans: Vec<(usize, &[crate::syntax::Symbol], u64, usize)> = nfa
        .transitions
        .iter()
        .map(|t| (t.from, t.word.symbols(), t.exp, t.to))
        .collect();
    let finals: Vec<usize> = nfa.finals.iter().copied().collect();
    accepts_power(nfa.states.len(), nfa.initial, &finals, &trans, v.symbols(), m, caps)
}

/// Whether some accepting run reads a word of exactly `target` letters.
pub fn length_reach(nfa: &SuccinctNfa, target: u64, caps: NfaCaps) -> Result<bool, NfaError> {
    let nfa = nfa.without_epsilon();
    let mut g = WeightedGraph::new(nfa.states.len());
    for t in &nfa.transitions {
        let w = (t.word.len() as u64).checked_mul(t.exp).ok_or(NfaError::Overflow)?;
        g.add_edge(t.from, t.to, w);
    }
    let finals: Vec<usize> = nfa.finals.iter().copied().collect();
    weighted_reach(&g, nfa.initial, &finals, target, caps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_word;

    fn nfa(src: &str) -> SuccinctNfa {
        SuccinctNfa::parse(src).unwrap()
    }

    fn w(s: &str) -> Word {
        parse_word(s).unwrap()
    }

    #[test]
    fn membership_examples() {
        let caps = NfaCaps::default();
        let a = nfa("initial: p\nfinals: q\np -[(ab)^2]-> q\n");
        assert!(membership(&a, &w("ab"), 2, caps).unwrap());
        let b = nfa("initial: p\nfinals: q\np -[a^6]-> q\n");
        assert!(membership(&b, &w("aa"), 3, caps).unwrap());
        let c = nfa("initial: p\nfinals: q\np -[(ab)^3]-> q\n");
        assert!(!membership(&c, &w("ab"), 2, caps).unwrap());
        let d = nfa("initial: p0\nfinals: p3\np0 -[(ab)^2]-> p1\np1 -[a]-> p2\np2 -[b]-> p3\n");
        assert!(membership(&d, &w("ab"), 3, caps).unwrap());
    }

    #[test]
    fn length_reach_examples() {
        let caps = NfaCaps::default();
        let one = nfa("initial: p\nfinals: q\np -[a^6]-> q\n");
        assert!(length_reach(&one, 6, caps).unwrap());
        let two = nfa("initial: p\nfinals: p\np -[aa]-> p\n");
        assert!(!length_reach(&two, 7, caps).unwrap());
        let three = nfa("initial: p\nfinals: p\np -[a^3]-> p\np -[a^5]-> p\n");
        assert!(!length_reach(&three, 7, caps).unwrap());
        assert!(length_reach(&three, 8, caps).unwrap());
    }

    #[test]
    fn huge_exponents_stay_symbolic() {
        let caps = NfaCaps::default();
        let a = nfa("initial: p\nfinals: q\np -[(ab)^1000000000000]-> q\nq -[(ab)^3]-> q\n");
        assert!(membership(&a, &w("abab"), 500_000_000_003, caps).unwrap());
        assert!(!membership(&a, &w("abab"), 500_000_000_000 - 1, caps).unwrap());
        assert!(!membership(&a, &w("ba"), 1_000_000_000_000, caps).unwrap());
    }

    #[test]
    fn epsilon_moves() {
        let caps = NfaCaps::default();
        let a = nfa("initial: p\nfinals: r\np -[a^0]-> q\nq -[ab]-> r\n");
        assert!(membership(&a, &w("ab"), 1, caps).unwrap());
        assert!(!membership(&a, &w("ab"), 0, caps).unwrap());
        let b = nfa("initial: p\nfinals: q\np -[eps]-> q\n");
        assert!(membership(&b, &w("ab"), 0, caps).unwrap());
    }

    #[test]
    fn position_edges() {
        let pg = PositionGraph::new(w("ab").symbols(), w("aab").symbols());
        assert_eq!(
            pg.edges(2),
            vec![PositionEdge { from: 1, to: 0, periods: Some(0) }]
        );
        let pg = PositionGraph::new(w("a").symbols(), w("aab").symbols());
        assert_eq!(pg.edges(1)[0], PositionEdge { from: 0, to: 1, periods: None });
    }

    #[test]
    fn text_roundtrip() {
        let a = nfa("initial: p\nfinals: q r\np -[(ab)^13]-> q # c\nq -[a]-> r\n");
        let again = SuccinctNfa::parse(&a.to_string()).unwrap();
        assert_eq!(a, again);
    }

    #[test]
    fn position_graph_agrees_with_direct_equation() {
        let words = ["a", "ab", "ba", "aab", "abab", "b"];
        let periods = ["ab", "aab", "a", "abb"];
        for wv in words {
            for vv in periods {
                let (ww, pv) = (w(wv), w(vv));
                let pg = PositionGraph::new(ww.symbols(), pv.symbols());
                for n in 1..6u64 {
                    for i in 0..pv.len() {
                        let got = pg.walk(i, n);
                        for j in 0..pv.len() {
                            let direct = factor_equation_holds(ww.symbols(), n, pv.symbols(), i, j);
                            assert_eq!(got == Some(j), direct, "{wv}^{n} in {vv} at {i}->{j}");
                        }
                    }
                }
            }
        }
    }
}
