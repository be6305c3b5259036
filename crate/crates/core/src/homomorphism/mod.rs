//! Homomorphisms between conjunctive queries, containment of succinct CQs,
//! and containment of a single expansion in a union of CRPQs.

mod graph;
mod search;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::expansion::{alternatives, Cq, ExpSet, ExpansionError, SuccinctCq, DEFAULT_MATERIALIZE_CAP};
use crate::succinct_nfa::{accepts_power, build_product, path_lengths, NfaCaps, NfaError};
use crate::syntax::{Crpq, Symbol, Ucrpq, Var, Word};

use graph::{BiReacher, Interner, SGraph, Sym, Vertex};
use search::{reach_check, Branch, RightAtom, RightQuery, Solver};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SearchError {
    #[error("{0} exceeded its cap")]
    CapExceeded(&'static str),
    #[error("path length overflows 64 bits")]
    Overflow,
    #[error(transparent)]
    Nfa(#[from] NfaError),
    #[error(transparent)]
    Expansion(#[from] ExpansionError),
    #[error("internal consistency check failed: {0}")]
    Internal(String),
}

/// Limits for one containment check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchCaps {
    pub steps: u64,
    pub nfa: NfaCaps,
    /// Symbol budget when normalizing star-free right-hand atoms.
    pub normalize: u64,
}

impl Default for SearchCaps {
    fn default() -> Self {
        SearchCaps {
            steps: 5_000_000,
            nfa: NfaCaps::default(),
            normalize: DEFAULT_MATERIALIZE_CAP,
        }
    }
}

/// Work counters accumulated across checks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    /// Automaton membership and length-set computations.
    pub nfa_calls: u64,
    pub steps: u64,
}

/// A total variable mapping from a source query to a target query.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Hom(pub BTreeMap<Var, Var>);

impl fmt::Display for Hom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(k, v)| format!("{k}->{v}")).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// Find a homomorphism from `source` to `target` by backtracking, always
/// extending the variable with the fewest remaining candidates.
pub fn cq_hom(source: &Cq, target: &Cq) -> Option<Hom> {
    let tvars: Vec<&Var> = target.vars.iter().collect();
    let tindex: HashMap<&Var, usize> = tvars.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let mut out_adj: HashMap<(usize, &Symbol), Vec<usize>> = HashMap::new();
    let mut in_adj: HashMap<(usize, &Symbol), Vec<usize>> = HashMap::new();
    let mut edges: BTreeSet<(usize, &Symbol, usize)> = BTreeSet::new();
    for a in &target.atoms {
        let (s, d) = (tindex[&a.src], tindex[&a.dst]);
        out_adj.entry((s, &a.label)).or_default().push(d);
        in_adj.entry((d, &a.label)).or_default().push(s);
        edges.insert((s, &a.label, d));
    }
    let svars: Vec<&Var> = source.vars.iter().collect();
    let sindex: HashMap<&Var, usize> = svars.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let satoms: Vec<(usize, &Symbol, usize)> = source
        .atoms
        .iter()
        .map(|a| (sindex[&a.src], &a.label, sindex[&a.dst]))
        .collect();
    let mut incident = vec![Vec::new(); svars.len()];
    for (i, &(s, _, d)) in satoms.iter().enumerate() {
        incident[s].push(i);
        if d != s {
            incident[d].push(i);
        }
    }
    if tvars.is_empty() {
        return svars.is_empty().then(Hom::default);
    }
    let mut assign: Vec<Option<usize>> = vec![None; svars.len()];

    fn candidates(
        x: usize,
        assign: &[Option<usize>],
        incident: &[Vec<usize>],
        satoms: &[(usize, &Symbol, usize)],
        out_adj: &HashMap<(usize, &Symbol), Vec<usize>>,
        in_adj: &HashMap<(usize, &Symbol), Vec<usize>>,
        n_target: usize,
    ) -> Vec<usize> {
        let mut best: Option<Vec<usize>> = None;
        for &ai in &incident[x] {
            let (s, l, d) = satoms[ai];
            let set = if s == x && d != x {
                assign[d].map(|t| in_adj.get(&(t, l)).cloned().unwrap_or_default())
            } else if d == x && s != x {
                assign[s].map(|t| out_adj.get(&(t, l)).cloned().unwrap_or_default())
            } else {
                None
            };
            if let Some(set) = set {
                if best.as_ref().is_none_or(|b| set.len() < b.len()) {
                    best = Some(set);
                }
            }
        }
        best.unwrap_or_else(|| (0..n_target).collect())
    }

    #[allow(clippy::too_many_arguments)]
    fn bt(
        assign: &mut Vec<Option<usize>>,
        incident: &[Vec<usize>],
        satoms: &[(usize, &Symbol, usize)],
        out_adj: &HashMap<(usize, &Symbol), Vec<usize>>,
        in_adj: &HashMap<(usize, &Symbol), Vec<usize>>,
        edges: &BTreeSet<(usize, &Symbol, usize)>,
        n_target: usize,
    ) -> bool {
        let mut pick: Option<(usize, Vec<usize>)> = None;
        for x in 0..assign.len() {
            if assign[x].is_some() {
                continue;
            }
            let c = candidates(x, assign, incident, satoms, out_adj, in_adj, n_target);
            let anchored = incident[x].iter().any(|&ai| {
                let (s, _, d) = satoms[ai];
                (s != x && assign[s].is_some()) || (d != x && assign[d].is_some())
            });
            let key = (usize::from(!anchored), c.len());
            let better = match &pick {
                None => true,
                Some((px, pc)) => {
                    let p_anch = incident[*px].iter().any(|&ai| {
                        let (s, _, d) = satoms[ai];
                        (s != *px && assign[s].is_some()) || (d != *px && assign[d].is_some())
                    });
                    key < (usize::from(!p_anch), pc.len())
                }
            };
            if better {
                pick = Some((x, c));
            }
        }
        let Some((x, cands)) = pick else {
            return true;
        };
        let mut seen = BTreeSet::new();
        for t in cands {
            if !seen.insert(t) {
                continue;
            }
            assign[x] = Some(t);
            let ok = incident[x].iter().all(|&ai| {
                let (s, l, d) = satoms[ai];
                match (assign[s], assign[d]) {
                    (Some(ts), Some(td)) => edges.contains(&(ts, l, td)),
                    _ => true,
                }
            });
            if ok && bt(assign, incident, satoms, out_adj, in_adj, edges, n_target) {
                return true;
            }
            assign[x] = None;
        }
        false
    }

    if bt(&mut assign, &incident, &satoms, &out_adj, &in_adj, &edges, tvars.len()) {
        Some(Hom(
            svars
                .iter()
                .zip(&assign)
                .map(|(s, t)| ((*s).clone(), tvars[t.expect("assigned")].clone()))
                .collect(),
        ))
    } else {
        None
    }
}

/// Whether `h` maps every atom of `source` onto an atom of `target`.
pub fn is_hom(h: &Hom, source: &Cq, target: &Cq) -> bool {
    let edges: BTreeSet<(&Var, &Symbol, &Var)> = target.atoms.iter().map(|a| (&a.src, &a.label, &a.dst)).collect();
    source.vars.iter().all(|v| h.0.get(v).is_some_and(|t| target.vars.contains(t)))
        && source.atoms.iter().all(|a| edges.contains(&(&h.0[&a.src], &a.label, &h.0[&a.dst])))
}

/// Interior cut points on the atoms of a succinct CQ. Cutting an atom
/// `x -[w^n]-> y` at offsets `o1 < ... < ok` yields a chain of segments,
/// each a rotation of `w` raised to a power followed by a prefix.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AtomBreaking {
    /// Atom index to sorted interior offsets.
    pub cuts: BTreeMap<usize, Vec<u64>>,
}

/// Split the factor `[start, end)` of `word^∞` into at most two succinct
/// pieces: a rotation of `word` to a power, then a proper prefix of it.
pub(crate) fn segment_pieces<T: Clone>(word: &[T], start: u64, end: u64) -> Vec<(Vec<T>, u64)> {
    let p = word.len() as u64;
    let phase = (start % p) as usize;
    let rot: Vec<T> = word[phase..].iter().chain(&word[..phase]).cloned().collect();
    let len = end - start;
    let (q, rem) = (len / p, (len % p) as usize);
    let mut out = Vec::new();
    if q > 0 {
        out.push((rot.clone(), q));
    }
    if rem > 0 {
        out.push((rot[..rem].to_vec(), 1));
    }
    out
}

impl AtomBreaking {
    pub fn break_points(&self) -> usize {
        self.cuts.values().map(Vec::len).sum()
    }

    fn prefix(q: &SuccinctCq) -> String {
        let mut prefix = String::from("_b");
        while q.vars.iter().any(|v| v.as_str().starts_with(&prefix)) {
            prefix.push('_');
        }
        prefix
    }

    /// Variable naming the cut at `offset` on atom `atom`.
    pub fn cut_var(q: &SuccinctCq, atom: usize, offset: u64) -> Var {
        Var::new(&format!("{}{atom}_{offset}", Self::prefix(q))).expect("valid name")
    }

    /// The broken query: cut points become variables, each segment becomes
    /// one or two atoms.
    pub fn apply(&self, q: &SuccinctCq) -> SuccinctCq {
        let prefix = Self::prefix(q);
        let mut vars = q.vars.clone();
        let mut raw = Vec::new();
        for (i, a) in q.atoms.iter().enumerate() {
            let len = a.path_len().unwrap_or(u64::MAX);
            let cuts = self.cuts.get(&i).cloned().unwrap_or_default();
            let mut points = vec![(0u64, a.src.clone())];
            for &o in &cuts {
                let v = Var::new(&format!("{prefix}{i}_{o}")).expect("valid name");
                vars.insert(v.clone());
                points.push((o, v));
            }
            points.push((len, a.dst.clone()));
            for pair in points.windows(2) {
                let ((s, sv), (e, ev)) = (&pair[0], &pair[1]);
                let pieces = segment_pieces(a.word.symbols(), *s, *e);
                if pieces.len() == 2 {
                    let mid = Var::new(&format!("{prefix}{i}_{s}_m")).expect("valid name");
                    vars.insert(mid.clone());
                    raw.push((sv.clone(), Word(pieces[0].0.clone()), pieces[0].1, mid.clone()));
                    raw.push((mid, Word(pieces[1].0.clone()), pieces[1].1, ev.clone()));
                } else {
                    for (w, n) in pieces {
                        raw.push((sv.clone(), Word(w), n, ev.clone()));
                    }
                }
            }
        }
        SuccinctCq::from_parts(vars, raw)
    }

    /// Check that each broken atom still spells its original word, by
    /// running the chain of its segments as an automaton on `w^n`.
    pub fn verify(&self, q: &SuccinctCq, caps: NfaCaps) -> Result<bool, NfaError> {
        for (&i, cuts) in &self.cuts {
            let a = &q.atoms[i];
            let len = a.path_len().ok_or(NfaError::Overflow)?;
            let mut bounds = vec![0u64];
            bounds.extend(cuts.iter().copied());
            bounds.push(len);
            if bounds.windows(2).any(|p| p[0] >= p[1]) {
                return Ok(false);
            }
            let mut trans: Vec<(usize, Vec<Symbol>, u64, usize)> = Vec::new();
            let mut state = 0usize;
            for p in bounds.windows(2) {
                for (w, n) in segment_pieces(a.word.symbols(), p[0], p[1]) {
                    trans.push((state, w, n, state + 1));
                    state += 1;
                }
            }
            let view: Vec<(usize, &[Symbol], u64, usize)> =
                trans.iter().map(|(f, w, n, t)| (*f, w.as_slice(), *n, *t)).collect();
            if !accepts_power(state + 1, 0, &[state], &view, a.word.symbols(), a.exp, caps)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Evidence that a right query maps into a left succinct CQ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContainmentProof {
    /// Index of the right disjunct used.
    pub disjunct: usize,
    /// The expansion of that disjunct that maps into the left query.
    pub expansion: SuccinctCq,
    /// Cuts applied to the left query.
    pub breaking: AtomBreaking,
    /// Map from variables of `expansion` to variables of the broken left query.
    pub hom: Hom,
}

impl ContainmentProof {
    /// Re-check the proof: the breaking is sound and every atom of the
    /// expansion is read between the images of its endpoints.
    pub fn verify(&self, left: &SuccinctCq, caps: NfaCaps) -> Result<bool, NfaError> {
        if !self.breaking.verify(left, caps)? {
            return Ok(false);
        }
        let broken = self.breaking.apply(left);
        for a in &self.expansion.atoms {
            let (Some(s), Some(d)) = (self.hom.0.get(&a.src), self.hom.0.get(&a.dst)) else {
                return Ok(false);
            };
            let Some(nfa) = crate::succinct_nfa::SuccinctNfa::from_succinct_cq_path(&broken, s, d) else {
                return Ok(false);
            };
            if !crate::succinct_nfa::membership(&nfa, &a.word, a.exp, caps)? {
                return Ok(false);
            }
        }
        Ok(self.expansion.vars.iter().all(|v| self.hom.0.contains_key(v)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ContainmentWitness {
    Contained(ContainmentProof),
    NotContained,
}

/// Context shared by the containment procedures for one left query.
struct LeftContext<'a> {
    left: &'a SuccinctCq,
    interner: Interner,
    reacher: BiReacher,
    symbols: Vec<Symbol>,
}

impl<'a> LeftContext<'a> {
    fn new(left: &'a SuccinctCq, caps: NfaCaps) -> Result<Self, SearchError> {
        let mut interner = Interner::default();
        let g = SGraph::from_query(left, &mut interner)?;
        let reacher = BiReacher::new(g, caps);
        Ok(LeftContext {
            left,
            interner,
            reacher,
            symbols: Vec::new(),
        })
    }

    fn sym_word(&mut self, w: &Word) -> Vec<Sym> {
        let ids = self.interner.word(w.symbols());
        for (s, &id) in w.symbols().iter().zip(&ids) {
            if id as usize >= self.symbols.len() {
                self.symbols.resize(id as usize + 1, s.clone());
            }
            self.symbols[id as usize] = s.clone();
        }
        ids
    }

    fn breaking_for(&self, images: &[Vertex]) -> AtomBreaking {
        let mut cuts: BTreeMap<usize, Vec<u64>> = BTreeMap::new();
        for v in images {
            if let Vertex::Inner(c, k) = *v {
                cuts.entry(c as usize).or_default().push(k);
            }
        }
        for list in cuts.values_mut() {
            list.sort_unstable();
            list.dedup();
        }
        AtomBreaking { cuts }
    }

    fn vertex_var(&self, v: Vertex) -> Var {
        match v {
            Vertex::Core(q) => self.reacher.graph().cores[q as usize].clone(),
            Vertex::Inner(c, k) => AtomBreaking::cut_var(self.left, c as usize, k),
        }
    }
}

/// `(from, word, exponent, to)`.
type RawTransition = (usize, Vec<Sym>, u64, usize);

/// Raw transitions of the left query cut at the given vertices, over
/// states: cores, then one per cut, then helper states.
fn broken_automaton(g: &SGraph, at: &[Vertex]) -> (usize, Vec<RawTransition>, Vec<usize>) {
    let mut n = g.cores.len();
    let mut cut_state: BTreeMap<(u32, u64), usize> = BTreeMap::new();
    let mut states = Vec::with_capacity(at.len());
    for v in at {
        match *v {
            Vertex::Core(q) => states.push(q as usize),
            Vertex::Inner(c, k) => {
                let s = *cut_state.entry((c, k)).or_insert_with(|| {
                    n += 1;
                    n - 1
                });
                states.push(s);
            }
        }
    }
    let mut trans = Vec::new();
    for (ci, ch) in g.chains.iter().enumerate() {
        let mut points = vec![(0u64, ch.src as usize)];
        for (&(c, k), &s) in cut_state.range((ci as u32, 0)..(ci as u32 + 1, 0)) {
            debug_assert_eq!(c as usize, ci);
            points.push((k, s));
        }
        points.push((ch.len, ch.dst as usize));
        for p in points.windows(2) {
            let ((s, from), (e, to)) = (p[0], p[1]);
            let pieces = segment_pieces(&ch.word, s, e);
            if pieces.len() == 2 {
                let mid = n;
                n += 1;
                trans.push((from, pieces[0].0.clone(), pieces[0].1, mid));
                trans.push((mid, pieces[1].0.clone(), pieces[1].1, to));
            } else {
                for (w, k) in pieces {
                    trans.push((from, w, k, to));
                }
            }
        }
    }
    (n, trans, states)
}

/// Membership of `w^n` between two vertices, through the product with
/// phases of `w`.
fn member(g: &SGraph, u: Vertex, v: Vertex, w: &[Sym], n: u64, caps: NfaCaps) -> Result<bool, SearchError> {
    let (states, trans, idx) = broken_automaton(g, &[u, v]);
    let view: Vec<(usize, &[Sym], u64, usize)> = trans.iter().map(|(f, w, k, t)| (*f, w.as_slice(), *k, *t)).collect();
    Ok(accepts_power(states, idx[0], &[idx[1]], &view, w, n, caps)?)
}

/// Least `e >= 1` with `w^e` read from `u` to `v`.
fn least_power(g: &SGraph, u: Vertex, v: Vertex, w: &[Sym], caps: NfaCaps) -> Result<Option<u64>, SearchError> {
    let (states, trans, idx) = broken_automaton(g, &[u, v]);
    let view: Vec<(usize, &[Sym], u64, usize)> = trans.iter().map(|(f, w, k, t)| (*f, w.as_slice(), *k, *t)).collect();
    let prod = build_product(states, idx[0], &[idx[1]], &view, w)?;
    let ls = path_lengths(&prod.graph, prod.initial, prod.finals[0], caps.length_budget)
        .map_err(|_| SearchError::CapExceeded("length set"))?;
    let wl = w.len() as u64;
    Ok(ls
        .elements_in(wl, u64::MAX - 1)
        .iter()
        .map(|p| p.start)
        .min()
        .map(|x| x / wl))
}

/// Decide whether `left` is contained in `right`, i.e. whether `right`
/// maps homomorphically into some cutting of `left`'s atoms that adds at
/// most one cut per variable of `right`. Every atom check is a membership
/// test on the cut automaton.
pub fn succinct_containment(
    left: &SuccinctCq,
    right: &SuccinctCq,
    caps: SearchCaps,
    stats: &mut SearchStats,
) -> Result<Option<ContainmentProof>, SearchError> {
    let mut ctx = LeftContext::new(left, caps.nfa)?;
    let rvars: Vec<Var> = right.vars.iter().cloned().collect();
    let rindex: HashMap<&Var, usize> = rvars.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let mut atoms = Vec::new();
    for a in &right.atoms {
        let word = ctx.sym_word(&a.word);
        atoms.push(RightAtom {
            src: rindex[&a.src],
            dst: rindex[&a.dst],
            branches: vec![Branch {
                word,
                exps: ExpSet::Exact(a.exp),
            }],
        });
    }
    let rq = RightQuery {
        n_vars: rvars.len(),
        atoms,
    };
    let mut memo: HashMap<(Vertex, Vertex, Vec<Sym>, u64), bool> = HashMap::new();
    let mut nfa_calls = 0u64;
    let graph = ctx.reacher.graph().clone();
    let mut check = |_: &mut BiReacher, atom: &RightAtom, u: Vertex, v: Vertex| -> Result<bool, SearchError> {
        let b = &atom.branches[0];
        let ExpSet::Exact(n) = b.exps else {
            return Err(SearchError::Internal("expected an exact exponent".into()));
        };
        let key = (u, v, b.word.clone(), n);
        if let Some(&r) = memo.get(&key) {
            return Ok(r);
        }
        nfa_calls += 1;
        let r = member(&graph, u, v, &b.word, n, caps.nfa)?;
        memo.insert(key, r);
        Ok(r)
    };
    let solution = Solver::new(&mut ctx.reacher, &rq, &mut check, caps.steps).solve();
    let (assignment, steps) = solution?;
    stats.steps += steps;
    stats.nfa_calls += nfa_calls + ctx.reacher.length_calls();
    let Some(images) = assignment else {
        return Ok(None);
    };
    let breaking = ctx.breaking_for(&images);
    if breaking.break_points() > rvars.len() {
        return Err(SearchError::Internal("too many cut points".into()));
    }
    let hom = Hom(rvars
        .iter()
        .zip(&images)
        .map(|(x, v)| (x.clone(), ctx.vertex_var(*v)))
        .collect());
    let proof = ContainmentProof {
        disjunct: 0,
        expansion: right.clone(),
        breaking,
        hom,
    };
    stats.nfa_calls += 1 + right.atoms.len() as u64;
    if !proof.verify(left, caps.nfa)? {
        return Err(SearchError::Internal("containment proof failed verification".into()));
    }
    Ok(Some(proof))
}

type PreparedRight = (Vec<Var>, RightQuery, Vec<Vec<crate::expansion::Alternative>>);

fn right_query(ctx: &mut LeftContext<'_>, q: &Crpq, caps: SearchCaps) -> Result<PreparedRight, SearchError> {
    let q = q.collapse();
    let rvars: Vec<Var> = q.vars().into_iter().collect();
    let rindex: HashMap<&Var, usize> = rvars.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let mut atoms = Vec::new();
    let mut alts_all = Vec::new();
    for (s, label, d) in q.edges() {
        let alts = alternatives(label, caps.normalize)?;
        let branches = alts
            .iter()
            .map(|a| Branch {
                word: ctx.sym_word(&a.word),
                exps: a.exps,
            })
            .collect();
        atoms.push(RightAtom {
            src: rindex[s],
            dst: rindex[d],
            branches,
        });
        alts_all.push(alts);
    }
    Ok((
        rvars.clone(),
        RightQuery {
            n_vars: rvars.len(),
            atoms,
        },
        alts_all,
    ))
}

/// Decide whether the expansion `left` is contained in the union `right`,
/// whose atoms may be star-free with powers or stars over words.
pub fn expansion_contained(
    left: &SuccinctCq,
    right: &Ucrpq,
    caps: SearchCaps,
    stats: &mut SearchStats,
) -> Result<ContainmentWitness, SearchError> {
    let mut ctx = LeftContext::new(left, caps.nfa)?;
    for (di, disjunct) in right.disjuncts.iter().enumerate() {
        let (rvars, rq, alts) = right_query(&mut ctx, disjunct, caps)?;
        let mut check = reach_check;
        let (assignment, steps) = Solver::new(&mut ctx.reacher, &rq, &mut check, caps.steps).solve()?;
        stats.steps += steps;
        let Some(images) = assignment else {
            continue;
        };
        // choose a concrete exponent for every right atom
        let mut raw = Vec::new();
        for (ai, atom) in rq.atoms.iter().enumerate() {
            let (u, v) = (images[atom.src], images[atom.dst]);
            let mut chosen = None;
            for (bi, b) in atom.branches.iter().enumerate() {
                let alt = &alts[ai][bi];
                if b.allows_empty() && u == v {
                    chosen = Some((alt.word.clone(), 0));
                    break;
                }
                if b.word.is_empty() || !ctx.reacher.forward(u, &b.word, b.exps)?.contains(v) {
                    continue;
                }
                let e = match b.exps {
                    ExpSet::Exact(n) => Some(n),
                    _ => least_power(ctx.reacher.graph(), u, v, &b.word, caps.nfa)?,
                };
                if let Some(e) = e.filter(|e| b.exps.contains(*e)) {
                    chosen = Some((alt.word.clone(), e));
                    break;
                }
            }
            let Some((w, e)) = chosen else {
                return Err(SearchError::Internal("no branch realizes a mapped atom".into()));
            };
            raw.push((rvars[atom.src].clone(), w, e, rvars[atom.dst].clone()));
        }
        // merged variables share their image, so any member stands for the class
        let expansion = SuccinctCq::from_parts(rvars.iter().cloned(), raw.clone());
        let mut hom = BTreeMap::new();
        let mut merged = BTreeMap::new();
        for (x, v) in rvars.iter().zip(&images) {
            merged.insert(x.clone(), *v);
        }
        for x in &expansion.vars {
            hom.insert(x.clone(), ctx.vertex_var(merged[x]));
        }
        let breaking = ctx.breaking_for(&images);
        stats.nfa_calls += ctx.reacher.length_calls() + ctx.reacher.reach_calls;
        return Ok(ContainmentWitness::Contained(ContainmentProof {
            disjunct: di,
            expansion,
            breaking,
            hom: Hom(hom),
        }));
    }
    stats.nfa_calls += ctx.reacher.length_calls() + ctx.reacher.reach_calls;
    Ok(ContainmentWitness::NotContained)
}
