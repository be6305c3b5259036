//! Backtracking search for a mapping of right-hand variables to vertices of
//! a symbolic left-hand graph.

use std::collections::HashSet;
use std::rc::Rc;

use crate::expansion::ExpSet;
use crate::syntax::UnionFind;

use super::graph::{BiReacher, Sym, Vertex, VertexSet};
use super::SearchError;

#[derive(Debug, Clone)]
pub(crate) struct Branch {
    pub word: Vec<Sym>,
    pub exps: ExpSet,
}

impl Branch {
    pub(crate) fn allows_empty(&self) -> bool {
        self.word.is_empty() || self.exps.allows_zero()
    }
}

#[derive(Debug, Clone)]
pub(crate) struct RightAtom {
    pub src: usize,
    pub dst: usize,
    pub branches: Vec<Branch>,
}

impl RightAtom {
    fn never_empty(&self) -> bool {
        !self.branches.iter().any(Branch::allows_empty)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct RightQuery {
    pub n_vars: usize,
    pub atoms: Vec<RightAtom>,
}

/// Decides whether `u -> v` satisfies a right atom.
pub(crate) type PairCheck<'a> =
    dyn FnMut(&mut BiReacher, &RightAtom, Vertex, Vertex) -> Result<bool, SearchError> + 'a;

/// Check through the symbolic reach sets.
pub(crate) fn reach_check(r: &mut BiReacher, atom: &RightAtom, u: Vertex, v: Vertex) -> Result<bool, SearchError> {
    for b in &atom.branches {
        if b.allows_empty() && u == v {
            return Ok(true);
        }
        if !b.word.is_empty() && r.forward(u, &b.word, b.exps)?.contains(v) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Letters required at a variable: each entry lists the first (or last)
/// letters of one atom that cannot be empty.
#[derive(Debug, Clone, Default)]
struct Unary {
    out: Vec<Vec<Sym>>,
    inc: Vec<Vec<Sym>>,
}

pub(crate) struct Solver<'a, 'c> {
    r: &'a mut BiReacher,
    q: &'a RightQuery,
    check: &'a mut PairCheck<'c>,
    unary: Vec<Unary>,
    incident: Vec<Vec<usize>>,
    domains: Vec<Option<Rc<VertexSet>>>,
    assign: Vec<Option<Vertex>>,
    pub steps: u64,
    step_cap: u64,
}

impl<'a, 'c> Solver<'a, 'c> {
    pub(crate) fn new(r: &'a mut BiReacher, q: &'a RightQuery, check: &'a mut PairCheck<'c>, step_cap: u64) -> Self {
        let mut unary = vec![Unary::default(); q.n_vars];
        let mut incident = vec![Vec::new(); q.n_vars];
        for (i, a) in q.atoms.iter().enumerate() {
            incident[a.src].push(i);
            if a.dst != a.src {
                incident[a.dst].push(i);
            }
            if a.never_empty() {
                unary[a.src].out.push(a.branches.iter().map(|b| b.word[0]).collect());
                unary[a.dst]
                    .inc
                    .push(a.branches.iter().map(|b| *b.word.last().expect("non-empty")).collect());
            }
        }
        Solver {
            r,
            q,
            check,
            unary,
            incident,
            domains: vec![None; q.n_vars],
            assign: vec![None; q.n_vars],
            steps: 0,
            step_cap,
        }
    }

    fn unary_ok(&self, x: usize, v: Vertex) -> bool {
        let g = self.r.graph();
        self.unary[x].out.iter().all(|ls| g.has_out_letter(v, |s| ls.contains(&s)))
            && self.unary[x].inc.iter().all(|ls| g.has_in_letter(v, |s| ls.contains(&s)))
    }

    fn domain(&mut self, x: usize) -> Rc<VertexSet> {
        if let Some(d) = &self.domains[x] {
            return d.clone();
        }
        let g = self.r.graph();
        let u = &self.unary[x];
        let out_f = u.out.first().map(|ls| move |s: Sym| ls.contains(&s));
        let in_f = u.inc.first().map(|ls| move |s: Sym| ls.contains(&s));
        let set = g.vertices_where(
            out_f.as_ref().map(|f| f as &dyn Fn(Sym) -> bool),
            in_f.as_ref().map(|f| f as &dyn Fn(Sym) -> bool),
        );
        let set = Rc::new(set);
        self.domains[x] = Some(set.clone());
        set
    }

    /// Candidates for `x` implied by atom `ai` whose other end is assigned.
    fn candidates_via(&mut self, x: usize, ai: usize) -> Result<Option<VertexSet>, SearchError> {
        let a = &self.q.atoms[ai];
        let (other, forward) = if a.src == x { (a.dst, false) } else { (a.src, true) };
        if other == x {
            return Ok(None);
        }
        let Some(anchor) = self.assign[other] else {
            return Ok(None);
        };
        let mut set = VertexSet::default();
        for b in &a.branches {
            if b.allows_empty() {
                set.push(anchor);
            }
            if b.word.is_empty() {
                continue;
            }
            let part = if forward {
                self.r.forward(anchor, &b.word, b.exps)?
            } else {
                self.r.backward(anchor, &b.word, b.exps)?
            };
            set.extend(&part);
        }
        Ok(Some(set))
    }

    fn choose(&mut self, vars: &[usize]) -> Result<Option<(usize, Rc<VertexSet>)>, SearchError> {
        let mut best: Option<(u64, bool, usize, Rc<VertexSet>)> = None;
        for &x in vars {
            if self.assign[x].is_some() {
                continue;
            }
            let mut local: Option<(u64, Rc<VertexSet>)> = None;
            for ai in self.incident[x].clone() {
                if let Some(set) = self.candidates_via(x, ai)? {
                    let n = set.len();
                    if local.as_ref().is_none_or(|(m, _)| n < *m) {
                        local = Some((n, Rc::new(set)));
                    }
                }
            }
            let anchored = local.is_some();
            let (n, set) = match local {
                Some(l) => l,
                None => {
                    let d = self.domain(x);
                    (d.len(), d)
                }
            };
            let better = match &best {
                None => true,
                Some((bn, banch, _, _)) => (anchored && !banch) || (anchored == *banch && n < *bn),
            };
            if better {
                best = Some((n, anchored, x, set));
            }
        }
        Ok(best.map(|(_, _, x, s)| (x, s)))
    }

    fn consistent(&mut self, x: usize, v: Vertex) -> Result<bool, SearchError> {
        for ai in self.incident[x].clone() {
            let a = &self.q.atoms[ai];
            let (s, d) = (a.src, a.dst);
            let (Some(fs), Some(fd)) = (
                if s == x { Some(v) } else { self.assign[s] },
                if d == x { Some(v) } else { self.assign[d] },
            ) else {
                continue;
            };
            if !(self.check)(self.r, a, fs, fd)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn backtrack(&mut self, vars: &[usize]) -> Result<bool, SearchError> {
        let Some((x, cands)) = self.choose(vars)? else {
            return Ok(true);
        };
        let mut tried = HashSet::new();
        for v in cands.iter() {
            self.steps += 1;
            if self.steps > self.step_cap {
                return Err(SearchError::CapExceeded("homomorphism search steps"));
            }
            if !tried.insert(v) || !self.unary_ok(x, v) || !self.consistent(x, v)? {
                continue;
            }
            self.assign[x] = Some(v);
            if self.backtrack(vars)? {
                return Ok(true);
            }
            self.assign[x] = None;
        }
        Ok(false)
    }

    /// Solve component by component; `None` when some component has no
    /// solution.
    pub(crate) fn solve(mut self) -> Result<(Option<Vec<Vertex>>, u64), SearchError> {
        let n = self.q.n_vars;
        if n > 0 && self.r.graph().cores.is_empty() {
            return Ok((None, 0));
        }
        let mut uf = UnionFind::new(n);
        for a in &self.q.atoms {
            uf.union(a.src, a.dst);
        }
        let mut comps: Vec<Vec<usize>> = Vec::new();
        let mut comp_of = vec![usize::MAX; n];
        for x in 0..n {
            let root = uf.find(x);
            if comp_of[root] == usize::MAX {
                comp_of[root] = comps.len();
                comps.push(Vec::new());
            }
            comps[comp_of[root]].push(x);
        }
        for comp in &comps {
            if !self.backtrack(comp)? {
                return Ok((None, self.steps));
            }
        }
        let steps = self.steps;
        Ok((
            Some(self.assign.into_iter().map(|v| v.expect("all assigned")).collect()),
            steps,
        ))
    }
}
