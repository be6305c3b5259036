//! Symbolic view of a succinct CQ as a graph whose atoms are long chains,
//! with reachability by powers of a fixed word.

use std::collections::HashMap;
use std::rc::Rc;

use crate::expansion::{ExpSet, SuccinctCq};
use crate::succinct_nfa::{path_lengths, LengthSet, NfaCaps, Progression, WeightedGraph};
use crate::syntax::{Symbol, Var};

use super::SearchError;

pub(crate) type Sym = u32;

/// Maps symbols to dense ids shared by a left query and the right atoms.
#[derive(Debug, Default, Clone)]
pub(crate) struct Interner {
    map: HashMap<Symbol, Sym>,
}

impl Interner {
    pub(crate) fn id(&mut self, s: &Symbol) -> Sym {
        let next = self.map.len() as Sym;
        *self.map.entry(s.clone()).or_insert(next)
    }

    pub(crate) fn word(&mut self, w: &[Symbol]) -> Vec<Sym> {
        w.iter().map(|s| self.id(s)).collect()
    }
}

/// A vertex of the materialized query: a variable of the succinct query,
/// or the point at `offset` edges along a chain (`0 < offset < len`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) enum Vertex {
    Core(u32),
    Inner(u32, u64),
}

#[derive(Debug, Clone)]
pub(crate) struct Chain {
    pub src: u32,
    pub dst: u32,
    pub word: Vec<Sym>,
    pub len: u64,
}

impl Chain {
    fn letter(&self, k: u64) -> Sym {
        self.word[(k % self.word.len() as u64) as usize]
    }
}

#[derive(Debug, Clone)]
pub(crate) struct SGraph {
    pub cores: Vec<Var>,
    pub chains: Vec<Chain>,
    pub out: Vec<Vec<u32>>,
    pub inc: Vec<Vec<u32>>,
}

impl SGraph {
    pub(crate) fn from_query(q: &SuccinctCq, interner: &mut Interner) -> Result<SGraph, SearchError> {
        let cores: Vec<Var> = q.vars.iter().cloned().collect();
        let index: HashMap<&Var, u32> = cores.iter().enumerate().map(|(i, v)| (v, i as u32)).collect();
        let mut chains = Vec::with_capacity(q.atoms.len());
        for a in &q.atoms {
            chains.push(Chain {
                src: index[&a.src],
                dst: index[&a.dst],
                word: interner.word(a.word.symbols()),
                len: a.path_len().ok_or(SearchError::Overflow)?,
            });
        }
        Ok(SGraph::assemble(cores, chains))
    }

    fn assemble(cores: Vec<Var>, chains: Vec<Chain>) -> SGraph {
        let mut out = vec![Vec::new(); cores.len()];
        let mut inc = vec![Vec::new(); cores.len()];
        for (i, c) in chains.iter().enumerate() {
            out[c.src as usize].push(i as u32);
            inc[c.dst as usize].push(i as u32);
        }
        SGraph {
            cores,
            chains,
            out,
            inc,
        }
    }

    /// The same graph with every chain read backwards.
    pub(crate) fn reversed(&self) -> SGraph {
        let chains = self
            .chains
            .iter()
            .map(|c| Chain {
                src: c.dst,
                dst: c.src,
                word: c.word.iter().rev().copied().collect(),
                len: c.len,
            })
            .collect();
        SGraph::assemble(self.cores.clone(), chains)
    }

    /// The vertex corresponding to `v` in [`SGraph::reversed`].
    pub(crate) fn flip(&self, v: Vertex) -> Vertex {
        match v {
            Vertex::Core(q) => Vertex::Core(q),
            Vertex::Inner(c, k) => Vertex::Inner(c, self.chains[c as usize].len - k),
        }
    }

    pub(crate) fn has_out_letter(&self, v: Vertex, ok: impl Fn(Sym) -> bool) -> bool {
        match v {
            Vertex::Core(q) => self.out[q as usize]
                .iter()
                .any(|&c| ok(self.chains[c as usize].word[0])),
            Vertex::Inner(c, k) => ok(self.chains[c as usize].letter(k)),
        }
    }

    pub(crate) fn has_in_letter(&self, v: Vertex, ok: impl Fn(Sym) -> bool) -> bool {
        match v {
            Vertex::Core(q) => self.inc[q as usize].iter().any(|&c| {
                let ch = &self.chains[c as usize];
                ok(*ch.word.last().expect("non-empty chain word"))
            }),
            Vertex::Inner(c, k) => ok(self.chains[c as usize].letter(k - 1)),
        }
    }

    /// Number of positions `t < limit` for which the chain read from
    /// `offset` agrees with `f^∞` read from `phase`, stopping at the first
    /// mismatch.
    pub(crate) fn agree(&self, c: u32, offset: u64, f: &[Sym], phase: usize, limit: u64) -> u64 {
        let ch = &self.chains[c as usize];
        let horizon = (ch.word.len() + f.len()) as u64;
        let w = f.len() as u64;
        let mut t = 0u64;
        while t < limit {
            if t >= horizon {
                return limit;
            }
            if ch.letter(offset + t) != f[((phase as u64 + t) % w) as usize] {
                return t;
            }
            t += 1;
        }
        limit
    }

    /// All vertices, filtered by unary letter requirements.
    pub(crate) fn vertices_where(
        &self,
        out_ok: Option<&dyn Fn(Sym) -> bool>,
        in_ok: Option<&dyn Fn(Sym) -> bool>,
    ) -> VertexSet {
        let mut set = VertexSet::default();
        for q in 0..self.cores.len() as u32 {
            let v = Vertex::Core(q);
            if out_ok.is_none_or(|f| self.has_out_letter(v, f)) && in_ok.is_none_or(|f| self.has_in_letter(v, f)) {
                set.cores.push(q);
            }
        }
        for (ci, ch) in self.chains.iter().enumerate() {
            let p = ch.word.len() as u64;
            for r in 0..p {
                let first = if r == 0 { p } else { r };
                if first >= ch.len {
                    continue;
                }
                let good_out = out_ok.is_none_or(|f| f(ch.letter(first)));
                let good_in = in_ok.is_none_or(|f| f(ch.letter(first - 1)));
                if good_out && good_in {
                    set.runs.push(Run {
                        chain: ci as u32,
                        start: first,
                        step: p,
                        count: (ch.len - 1 - first) / p + 1,
                        descending: false,
                    });
                }
            }
        }
        set
    }
}

/// Offsets `start + i * step` for `i < count` along one chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Run {
    pub chain: u32,
    pub start: u64,
    pub step: u64,
    pub count: u64,
    /// Iterate from the last offset down.
    pub descending: bool,
}

impl Run {
    fn contains(&self, chain: u32, k: u64) -> bool {
        chain == self.chain
            && k >= self.start
            && (k - self.start).is_multiple_of(self.step)
            && (k - self.start) / self.step < self.count
    }

    fn nth(&self, i: u64) -> u64 {
        let j = if self.descending { self.count - 1 - i } else { i };
        self.start + j * self.step
    }
}

/// A possibly huge set of vertices, stored as explicit cores plus runs of
/// chain offsets. Duplicates are allowed.
#[derive(Debug, Clone, Default)]
pub(crate) struct VertexSet {
    pub cores: Vec<u32>,
    pub runs: Vec<Run>,
}

impl VertexSet {
    pub(crate) fn push(&mut self, v: Vertex) {
        match v {
            Vertex::Core(q) => self.cores.push(q),
            Vertex::Inner(c, k) => self.runs.push(Run {
                chain: c,
                start: k,
                step: 1,
                count: 1,
                descending: false,
            }),
        }
    }

    pub(crate) fn len(&self) -> u64 {
        self.runs
            .iter()
            .fold(self.cores.len() as u64, |acc, r| acc.saturating_add(r.count))
    }

    pub(crate) fn contains(&self, v: Vertex) -> bool {
        match v {
            Vertex::Core(q) => self.cores.contains(&q),
            Vertex::Inner(c, k) => self.runs.iter().any(|r| r.contains(c, k)),
        }
    }

    pub(crate) fn extend(&mut self, other: &VertexSet) {
        self.cores.extend_from_slice(&other.cores);
        self.runs.extend_from_slice(&other.runs);
    }

    pub(crate) fn iter(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.cores.iter().map(|&q| Vertex::Core(q)).chain(
            self.runs
                .iter()
                .flat_map(|r| (0..r.count).map(move |i| Vertex::Inner(r.chain, r.nth(i)))),
        )
    }

    /// Map a set of the reversed graph back to `g`.
    fn flipped(&self, g: &SGraph) -> VertexSet {
        let runs = self
            .runs
            .iter()
            .filter(|r| r.count > 0)
            .map(|r| {
                let len = g.chains[r.chain as usize].len;
                let last = r.start + (r.count - 1) * r.step;
                Run {
                    chain: r.chain,
                    start: len - last,
                    step: r.step,
                    count: r.count,
                    descending: !r.descending,
                }
            })
            .collect();
        VertexSet {
            cores: self.cores.clone(),
            runs,
        }
    }
}

/// Walk lengths from a seed state to every product state.
#[derive(Debug)]
enum StateLengths {
    Sets(Vec<Option<LengthSet>>),
    /// Explicit membership bits for lengths `0..width`.
    Bits { width: u64, bits: Vec<bool> },
}

impl StateLengths {
    fn contains(&self, s: usize, x: u64) -> bool {
        match self {
            StateLengths::Sets(sets) => sets[s].as_ref().is_some_and(|ls| ls.contains(x)),
            StateLengths::Bits { width, bits } => x < *width && bits[s * *width as usize + x as usize],
        }
    }

    fn elements_in(&self, s: usize, lo: u64, hi: u64) -> Vec<Progression> {
        match self {
            StateLengths::Sets(sets) => sets[s]
                .as_ref()
                .map(|ls| ls.elements_in(lo, hi))
                .unwrap_or_default(),
            StateLengths::Bits { width, bits } => (lo..=hi.min(width.saturating_sub(1)))
                .filter(|&x| bits[s * *width as usize + x as usize])
                .map(Progression::singleton)
                .collect(),
        }
    }
}

#[derive(Debug)]
struct StateTable {
    /// Least walk length per product state, `u64::MAX` if unreachable.
    dist: Vec<u64>,
    /// States sorted by distance, reachable ones only.
    order: Vec<usize>,
    lengths: Option<StateLengths>,
}

#[derive(Debug)]
struct Product {
    graph: WeightedGraph,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct TableKey {
    word: Vec<Sym>,
    seed: usize,
    exact: Option<u64>,
}

/// Memoizing reachability engine over one direction of an [`SGraph`].
#[derive(Debug)]
pub(crate) struct Reacher {
    pub g: SGraph,
    caps: NfaCaps,
    products: HashMap<Vec<Sym>, Rc<Product>>,
    tables: HashMap<TableKey, Rc<StateTable>>,
    pub length_calls: u64,
}

const TABLE_MEMO_LIMIT: usize = 50_000;

impl Reacher {
    pub(crate) fn new(g: SGraph, caps: NfaCaps) -> Self {
        Reacher {
            g,
            caps,
            products: HashMap::new(),
            tables: HashMap::new(),
            length_calls: 0,
        }
    }

    fn product(&mut self, f: &[Sym]) -> Rc<Product> {
        if let Some(p) = self.products.get(f) {
            return p.clone();
        }
        let w = f.len();
        let n = self.g.cores.len() * w;
        let mut graph = WeightedGraph::new(n);
        for q in 0..self.g.cores.len() {
            for &c in &self.g.out[q] {
                let ch = &self.g.chains[c as usize];
                for p in 0..w {
                    if self.g.agree(c, 0, f, p, ch.len) >= ch.len {
                        let to = ch.dst as usize * w + ((p as u64 + ch.len) % w as u64) as usize;
                        graph.add_edge(q * w + p, to, ch.len);
                    }
                }
            }
        }
        let prod = Rc::new(Product { graph });
        self.products.insert(f.to_vec(), prod.clone());
        prod
    }

    fn table(&mut self, f: &[Sym], seed: usize, exact: Option<u64>) -> Result<Rc<StateTable>, SearchError> {
        let key = TableKey {
            word: f.to_vec(),
            seed,
            exact,
        };
        if let Some(t) = self.tables.get(&key) {
            return Ok(t.clone());
        }
        let prod = self.product(f);
        let g = &prod.graph;
        let dist = dijkstra(g, seed);
        let mut order: Vec<usize> = (0..g.len()).filter(|&s| dist[s] != u64::MAX).collect();
        order.sort_by_key(|&s| (dist[s], s));
        let lengths = match exact {
            None => None,
            Some(target) => Some(self.exact_lengths(g, seed, &order, target)?),
        };
        let table = Rc::new(StateTable { dist, order, lengths });
        if self.tables.len() >= TABLE_MEMO_LIMIT {
            self.tables.clear();
        }
        self.tables.insert(key, table.clone());
        Ok(table)
    }

    fn exact_lengths(
        &mut self,
        g: &WeightedGraph,
        seed: usize,
        order: &[usize],
        target: u64,
    ) -> Result<StateLengths, SearchError> {
        let mut sets = vec![None; g.len()];
        let mut symbolic_ok = true;
        for &s in order {
            self.length_calls += 1;
            match path_lengths(g, seed, s, self.caps.length_budget) {
                Ok(ls) => sets[s] = Some(ls),
                Err(_) => {
                    symbolic_ok = false;
                    break;
                }
            }
        }
        if symbolic_ok {
            return Ok(StateLengths::Sets(sets));
        }
        if target > self.caps.dp_length {
            return Err(SearchError::CapExceeded("exact path length"));
        }
        let width = target + 1;
        let cells = (g.len() as u64).saturating_mul(width);
        if cells > 50 * self.caps.dp_length {
            return Err(SearchError::CapExceeded("exact path length"));
        }
        let mut bits = vec![false; cells as usize];
        bits[seed * width as usize] = true;
        for l in 0..width {
            for u in 0..g.len() {
                if !bits[u * width as usize + l as usize] {
                    continue;
                }
                for &(v, wt) in &g.adj[u] {
                    let nl = l + wt;
                    if nl < width {
                        bits[v * width as usize + nl as usize] = true;
                    }
                }
            }
        }
        Ok(StateLengths::Bits { width, bits })
    }

    /// Vertices `v` such that the graph has a path from `u` to `v` reading
    /// `f^e` for some `e` in `exps`.
    pub(crate) fn reach(&mut self, u: Vertex, f: &[Sym], exps: ExpSet) -> Result<VertexSet, SearchError> {
        let mut out = VertexSet::default();
        if f.is_empty() || exps.allows_zero() {
            out.push(u);
        }
        if f.is_empty() {
            return Ok(out);
        }
        let w = f.len() as u64;
        let bound = match exps {
            ExpSet::Exact(n) | ExpSet::AtMost(n) => Some(n.checked_mul(w).ok_or(SearchError::Overflow)?),
            ExpSet::Any => None,
        };
        if bound == Some(0) {
            return Ok(out);
        }
        let exact = matches!(exps, ExpSet::Exact(_));
        let (seed_core, seed_phase, base) = match u {
            Vertex::Core(q) => (q, 0u64, 0u64),
            Vertex::Inner(c, k) => {
                let ch = &self.g.chains[c as usize];
                let rest = ch.len - k;
                let dst = ch.dst;
                let a = self.g.agree(c, k, f, 0, rest);
                let tmax = a.min(rest - 1);
                match bound {
                    Some(t) if exact => {
                        if t <= tmax {
                            out.push(Vertex::Inner(c, k + t));
                        }
                    }
                    _ => {
                        let hi = bound.map_or(tmax, |t| t.min(tmax));
                        if hi >= w {
                            out.runs.push(Run {
                                chain: c,
                                start: k + w,
                                step: w,
                                count: (hi - w) / w + 1,
                                descending: false,
                            });
                        }
                    }
                }
                if a < rest {
                    return Ok(out);
                }
                (dst, rest % w, rest)
            }
        };
        if bound.is_some_and(|t| base > t) {
            return Ok(out);
        }
        let remaining = bound.map(|t| t - base);
        let seed = seed_core as usize * f.len() + seed_phase as usize;
        let table = self.table(f, seed, if exact { remaining } else { None })?;
        for &s in &table.order {
            let q = (s / f.len()) as u32;
            let p = (s % f.len()) as u64;
            let d = table.dist[s];
            let within = |extra: u64| remaining.is_none_or(|r| d.saturating_add(extra) <= r);
            if p == 0 {
                let ok = match (&table.lengths, remaining) {
                    (Some(ls), Some(r)) => ls.contains(s, r),
                    _ => (base > 0 || d > 0) && within(0),
                };
                if ok {
                    out.cores.push(q);
                }
            }
            let first = if p == 0 { w } else { w - p };
            for ci in 0..self.g.out[q as usize].len() {
                let c = self.g.out[q as usize][ci];
                let len = self.g.chains[c as usize].len;
                if first >= len || !within(first) {
                    continue;
                }
                let kmax = self.g.agree(c, 0, f, p as usize, len - 1).min(len - 1);
                if kmax < first {
                    continue;
                }
                match (&table.lengths, remaining) {
                    (Some(ls), Some(r)) => {
                        let lo = r.saturating_sub(kmax);
                        let hi = r - first.min(r);
                        if r < first {
                            continue;
                        }
                        for prog in ls.elements_in(s, lo, hi) {
                            // offsets r - x for x in the progression
                            let last_x = prog.start + (prog.count - 1) * prog.step;
                            out.runs.push(Run {
                                chain: c,
                                start: r - last_x,
                                step: prog.step,
                                count: prog.count,
                                descending: true,
                            });
                        }
                    }
                    _ => {
                        let hi = match remaining {
                            Some(r) => kmax.min(r - d),
                            None => kmax,
                        };
                        if hi >= first {
                            out.runs.push(Run {
                                chain: c,
                                start: first,
                                step: w,
                                count: (hi - first) / w + 1,
                                descending: false,
                            });
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

fn dijkstra(g: &WeightedGraph, seed: usize) -> Vec<u64> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;
    let mut dist = vec![u64::MAX; g.len()];
    dist[seed] = 0;
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((0u64, seed)));
    while let Some(Reverse((d, u))) = heap.pop() {
        if d != dist[u] {
            continue;
        }
        for &(v, w) in &g.adj[u] {
            let nd = d.saturating_add(w);
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Reverse((nd, v)));
            }
        }
    }
    dist
}

/// Forward and backward reachability over one succinct query.
#[derive(Debug)]
pub(crate) struct BiReacher {
    pub fwd: Reacher,
    pub bwd: Reacher,
    memo: HashMap<(bool, Vertex, Vec<Sym>, ExpSet), Rc<VertexSet>>,
    pub reach_calls: u64,
}

const REACH_MEMO_LIMIT: usize = 200_000;

impl BiReacher {
    pub(crate) fn new(g: SGraph, caps: NfaCaps) -> Self {
        let r = g.reversed();
        BiReacher {
            fwd: Reacher::new(g, caps),
            bwd: Reacher::new(r, caps),
            memo: HashMap::new(),
            reach_calls: 0,
        }
    }

    pub(crate) fn graph(&self) -> &SGraph {
        &self.fwd.g
    }

    /// Successors of `u` by `f^e`, `e` in `exps`.
    pub(crate) fn forward(&mut self, u: Vertex, f: &[Sym], exps: ExpSet) -> Result<Rc<VertexSet>, SearchError> {
        self.cached(true, u, f, exps)
    }

    /// Predecessors of `v` by `f^e`, `e` in `exps`.
    pub(crate) fn backward(&mut self, v: Vertex, f: &[Sym], exps: ExpSet) -> Result<Rc<VertexSet>, SearchError> {
        self.cached(false, v, f, exps)
    }

    fn cached(&mut self, fwd: bool, u: Vertex, f: &[Sym], exps: ExpSet) -> Result<Rc<VertexSet>, SearchError> {
        let key = (fwd, u, f.to_vec(), exps);
        if let Some(s) = self.memo.get(&key) {
            return Ok(s.clone());
        }
        self.reach_calls += 1;
        let set = if fwd {
            self.fwd.reach(u, f, exps)?
        } else {
            let rf: Vec<Sym> = f.iter().rev().copied().collect();
            let ru = self.fwd.g.flip(u);
            self.bwd.reach(ru, &rf, exps)?.flipped(&self.fwd.g)
        };
        let set = Rc::new(set);
        if self.memo.len() >= REACH_MEMO_LIMIT {
            self.memo.clear();
        }
        self.memo.insert(key, set.clone());
        Ok(set)
    }

    pub(crate) fn length_calls(&self) -> u64 {
        self.fwd.length_calls + self.bwd.length_calls
    }
}
