//! Sets of walk lengths in graphs with positive integer weights.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("length computation exceeded its budget of {0} steps")]
pub struct LengthCapExceeded(pub u64);

/// An arithmetic progression `start, start + step, ...` with `count` terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Progression {
    pub start: u64,
    pub step: u64,
    pub count: u64,
}

impl Progression {
    pub fn singleton(x: u64) -> Self {
        Progression {
            start: x,
            step: 1,
            count: 1,
        }
    }

    pub fn iter(self) -> impl Iterator<Item = u64> {
        (0..self.count).map(move |i| self.start + i * self.step)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LengthComponent {
    /// Sorted, without duplicates.
    Finite(Vec<u64>),
    /// For every residue `r` modulo `period`, all `x ≡ r` with
    /// `x >= mins[r]`, or nothing when `mins[r]` is `None`.
    Periodic { period: u64, mins: Vec<Option<u64>> },
}

/// A semilinear set of natural numbers, kept as a union of components.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LengthSet {
    pub parts: Vec<LengthComponent>,
}

impl LengthSet {
    pub fn empty() -> Self {
        LengthSet { parts: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.parts.iter().all(|p| match p {
            LengthComponent::Finite(v) => v.is_empty(),
            LengthComponent::Periodic { mins, .. } => mins.iter().all(Option::is_none),
        })
    }

    pub fn contains(&self, x: u64) -> bool {
        self.parts.iter().any(|p| match p {
            LengthComponent::Finite(v) => v.binary_search(&x).is_ok(),
            LengthComponent::Periodic { period, mins } => {
                mins[(x % period) as usize].is_some_and(|m| x >= m)
            }
        })
    }

    pub fn min(&self) -> Option<u64> {
        self.parts
            .iter()
            .filter_map(|p| match p {
                LengthComponent::Finite(v) => v.first().copied(),
                LengthComponent::Periodic { mins, .. } => mins.iter().flatten().min().copied(),
            })
            .min()
    }

    /// The elements in `[lo, hi]` as progressions, possibly overlapping.
    pub fn elements_in(&self, lo: u64, hi: u64) -> Vec<Progression> {
        let mut out = Vec::new();
        if lo > hi {
            return out;
        }
        for p in &self.parts {
            match p {
                LengthComponent::Finite(v) => {
                    let from = v.partition_point(|&x| x < lo);
                    for &x in v[from..].iter().take_while(|&&x| x <= hi) {
                        out.push(Progression::singleton(x));
                    }
                }
                LengthComponent::Periodic { period, mins } => {
                    for (r, m) in mins.iter().enumerate() {
                        let Some(m) = *m else { continue };
                        let floor = m.max(lo);
                        let r = r as u64;
                        let first = floor + (r + period - floor % period) % period;
                        if first <= hi {
                            out.push(Progression {
                                start: first,
                                step: *period,
                                count: (hi - first) / period + 1,
                            });
                        }
                    }
                }
            }
        }
        out
    }

    pub fn intersects(&self, lo: u64, hi: u64) -> bool {
        !self.elements_in(lo, hi).is_empty()
    }

    /// `{x + d : x in self}`.
    pub fn shifted(&self, d: u64) -> LengthSet {
        let parts = self
            .parts
            .iter()
            .map(|p| match p {
                LengthComponent::Finite(v) => LengthComponent::Finite(v.iter().map(|x| x + d).collect()),
                LengthComponent::Periodic { period, mins } => {
                    let mut out = vec![None; mins.len()];
                    for (r, m) in mins.iter().enumerate() {
                        if let Some(m) = m {
                            out[((r as u64 + d) % period) as usize] = Some(m + d);
                        }
                    }
                    LengthComponent::Periodic {
                        period: *period,
                        mins: out,
                    }
                }
            })
            .collect();
        LengthSet { parts }
    }
}

/// Adjacency-list digraph with positive weights, except that edges into a
/// vertex without out-edges may have weight zero.
#[derive(Debug, Clone, Default)]
pub struct WeightedGraph {
    pub adj: Vec<Vec<(usize, u64)>>,
}

impl WeightedGraph {
    pub fn new(n: usize) -> Self {
        WeightedGraph {
            adj: vec![Vec::new(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn add_edge(&mut self, from: usize, to: usize, w: u64) {
        self.adj[from].push((to, w));
    }

    fn reverse_adj(&self) -> Vec<Vec<(usize, u64)>> {
        let mut radj = vec![Vec::new(); self.adj.len()];
        for (u, es) in self.adj.iter().enumerate() {
            for &(v, w) in es {
                radj[v].push((u, w));
            }
        }
        radj
    }
}

fn mark_reachable(adj: &[Vec<(usize, u64)>], alive: &[bool], start: usize) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
    if !alive[start] {
        return seen;
    }
    seen[start] = true;
    let mut stack = vec![start];
    while let Some(u) = stack.pop() {
        for &(v, _) in &adj[u] {
            if alive[v] && !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen
}

fn charge(budget: &mut u64, cap: u64, amount: u64) -> Result<(), LengthCapExceeded> {
    if amount > *budget {
        return Err(LengthCapExceeded(cap));
    }
    *budget -= amount;
    Ok(())
}

/// Single-source shortest distances restricted to `alive` vertices.
fn dijkstra(adj: &[Vec<(usize, u64)>], alive: &[bool], start: usize) -> Vec<Option<u64>> {
    let mut dist = vec![None; adj.len()];
    let mut heap = BinaryHeap::new();
    dist[start] = Some(0);
    heap.push(Reverse((0u64, start)));
    while let Some(Reverse((d, u))) = heap.pop() {
        if dist[u] != Some(d) {
            continue;
        }
        for &(v, w) in &adj[u] {
            if !alive[v] {
                continue;
            }
            let nd = d.saturating_add(w);
            if dist[v].is_none_or(|old| nd < old) {
                dist[v] = Some(nd);
                heap.push(Reverse((nd, v)));
            }
        }
    }
    dist
}

/// Weight of the lightest closed walk through `c` inside `alive`.
fn shortest_cycle(adj: &[Vec<(usize, u64)>], alive: &[bool], c: usize) -> Option<u64> {
    let dist = dijkstra(adj, alive, c);
    let mut best: Option<u64> = None;
    for (u, du) in dist.iter().enumerate() {
        let Some(du) = du else { continue };
        for &(v, w) in &adj[u] {
            if v == c {
                let total = du.saturating_add(w);
                best = Some(best.map_or(total, |b| b.min(total)));
            }
        }
    }
    best
}

/// All lengths of walks from `s` to `t` in `g`.
///
/// Walks through a vertex `c` of least cycle weight `P` are closed under
/// adding `P`, so they are captured by the least length in each residue
/// class modulo `P`. The remaining walks avoid `c` and are handled
/// recursively; an acyclic remainder yields a finite set.
pub fn path_lengths(
    g: &WeightedGraph,
    s: usize,
    t: usize,
    cap: u64,
) -> Result<LengthSet, LengthCapExceeded> {
    let radj = g.reverse_adj();
    let mut alive = vec![true; g.len()];
    let mut budget = cap;
    let mut out = LengthSet::empty();
    loop {
        let fwd = mark_reachable(&g.adj, &alive, s);
        let bwd = mark_reachable(&radj, &alive, t);
        let relevant: Vec<bool> = (0..g.len()).map(|v| fwd[v] && bwd[v]).collect();
        if !relevant[s] {
            return Ok(out);
        }
        charge(&mut budget, cap, g.len() as u64)?;
        let mut best: Option<(u64, usize)> = None;
        for c in (0..g.len()).filter(|&c| relevant[c]) {
            if let Some(p) = shortest_cycle(&g.adj, &relevant, c) {
                charge(&mut budget, cap, g.len() as u64)?;
                if best.is_none_or(|(bp, _)| p < bp) {
                    best = Some((p, c));
                }
            }
        }
        let Some((period, c)) = best else {
            out.parts.push(acyclic_lengths(g, &relevant, s, t, &mut budget, cap)?);
            return Ok(out);
        };
        out.parts
            .push(through_lengths(g, &relevant, s, t, c, period, &mut budget, cap)?);
        alive[c] = false;
        if c == s || c == t {
            return Ok(out);
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn through_lengths(
    g: &WeightedGraph,
    relevant: &[bool],
    s: usize,
    t: usize,
    c: usize,
    period: u64,
    budget: &mut u64,
    cap: u64,
) -> Result<LengthComponent, LengthCapExceeded> {
    let n = g.len() as u64;
    let states = n.saturating_mul(period).saturating_mul(2);
    charge(budget, cap, states)?;
    let p = period as usize;
    let idx = |v: usize, r: usize, f: usize| (v * p + r) * 2 + f;
    let mut dist: Vec<u64> = vec![u64::MAX; states as usize];
    let mut heap = BinaryHeap::new();
    let f0 = usize::from(s == c);
    dist[idx(s, 0, f0)] = 0;
    heap.push(Reverse((0u64, s, f0)));
    while let Some(Reverse((d, u, f))) = heap.pop() {
        let r = (d % period) as usize;
        if dist[idx(u, r, f)] != d {
            continue;
        }
        for &(v, w) in &g.adj[u] {
            if !relevant[v] {
                continue;
            }
            let nd = d.saturating_add(w);
            let nf = f | usize::from(v == c);
            let k = idx(v, (nd % period) as usize, nf);
            if nd < dist[k] {
                dist[k] = nd;
                heap.push(Reverse((nd, v, nf)));
            }
        }
    }
    let mins = (0..p)
        .map(|r| {
            let d = dist[idx(t, r, 1)];
            (d != u64::MAX).then_some(d)
        })
        .collect();
    Ok(LengthComponent::Periodic { period, mins })
}

fn acyclic_lengths(
    g: &WeightedGraph,
    relevant: &[bool],
    s: usize,
    t: usize,
    budget: &mut u64,
    cap: u64,
) -> Result<LengthComponent, LengthCapExceeded> {
    // Kahn's algorithm on the relevant subgraph.
    let n = g.len();
    let mut indeg = vec![0usize; n];
    for u in (0..n).filter(|&u| relevant[u]) {
        for &(v, _) in &g.adj[u] {
            if relevant[v] {
                indeg[v] += 1;
            }
        }
    }
    let mut order = Vec::new();
    let mut queue: Vec<usize> = (0..n).filter(|&u| relevant[u] && indeg[u] == 0).collect();
    while let Some(u) = queue.pop() {
        order.push(u);
        for &(v, _) in &g.adj[u] {
            if relevant[v] {
                indeg[v] -= 1;
                if indeg[v] == 0 {
                    queue.push(v);
                }
            }
        }
    }
    let mut sets: Vec<Vec<u64>> = vec![Vec::new(); n];
    sets[s].push(0);
    for &u in &order {
        if sets[u].is_empty() {
            continue;
        }
        let cur = std::mem::take(&mut sets[u]);
        for &(v, w) in &g.adj[u] {
            if !relevant[v] {
                continue;
            }
            charge(budget, cap, cur.len() as u64)?;
            let mut merged = Vec::with_capacity(sets[v].len() + cur.len());
            merged.extend_from_slice(&sets[v]);
            merged.extend(cur.iter().map(|x| x.saturating_add(w)));
            merged.sort_unstable();
            merged.dedup();
            sets[v] = merged;
        }
        sets[u] = cur;
    }
    Ok(LengthComponent::Finite(std::mem::take(&mut sets[t])))
}

/// Whether some walk from `s` to `t` has length exactly `target`, by
/// dynamic programming over lengths `0..=target`.
pub fn has_length_dp(g: &WeightedGraph, s: usize, t: usize, target: u64) -> bool {
    let n = g.len();
    let width = target as usize + 1;
    let mut reach = vec![false; n * width];
    reach[s * width] = true;
    for l in 0..width {
        for u in 0..n {
            if !reach[u * width + l] {
                continue;
            }
            for &(v, w) in &g.adj[u] {
                let nl = l as u64 + w;
                if nl <= target {
                    reach[v * width + nl as usize] = true;
                }
            }
        }
    }
    reach[t * width + target as usize]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(g: &WeightedGraph, s: usize, t: usize, limit: u64) -> Vec<u64> {
        (0..=limit).filter(|&l| has_length_dp(g, s, t, l)).collect()
    }

    #[test]
    fn loops_three_and_five() {
        let mut g = WeightedGraph::new(1);
        g.add_edge(0, 0, 3);
        g.add_edge(0, 0, 5);
        let ls = path_lengths(&g, 0, 0, 1000).unwrap();
        assert!(!ls.contains(7));
        assert!(ls.contains(8));
        assert!(ls.contains(0));
        assert_eq!(
            (0..40).filter(|&x| ls.contains(x)).collect::<Vec<_>>(),
            brute(&g, 0, 0, 39)
        );
    }

    #[test]
    fn chain_of_cycles_matches_dp() {
        let mut g = WeightedGraph::new(4);
        g.add_edge(0, 1, 2);
        g.add_edge(1, 1, 4);
        g.add_edge(1, 2, 1);
        g.add_edge(2, 1, 5);
        g.add_edge(2, 3, 3);
        g.add_edge(0, 3, 7);
        let ls = path_lengths(&g, 0, 3, 10_000).unwrap();
        let got: Vec<u64> = (0..80).filter(|&x| ls.contains(x)).collect();
        assert_eq!(got, brute(&g, 0, 3, 79));
        assert_eq!(ls.min(), Some(6));
    }

    #[test]
    fn elements_in_range() {
        let ls = LengthSet {
            parts: vec![
                LengthComponent::Finite(vec![1, 4, 9]),
                LengthComponent::Periodic {
                    period: 5,
                    mins: vec![None, None, Some(12), None, None],
                },
            ],
        };
        let mut xs: Vec<u64> = ls.elements_in(3, 30).into_iter().flat_map(|p| p.iter()).collect();
        xs.sort();
        assert_eq!(xs, vec![4, 9, 12, 17, 22, 27]);
        let shifted = ls.shifted(3);
        assert!(shifted.contains(15) && shifted.contains(4) && !shifted.contains(14));
    }

    #[test]
    fn budget_is_enforced() {
        let mut g = WeightedGraph::new(2);
        g.add_edge(0, 1, 1);
        g.add_edge(1, 1, 1_000_000);
        assert!(path_lengths(&g, 0, 1, 1000).is_err());
    }
}
