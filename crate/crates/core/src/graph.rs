//! Circulation graph of an economy and the society verdict derived from it.
//!
//! The graph has an edge `u -> v` exactly when `f[u][v]` is nonzero, i.e.
//! when agent `v` pays agent `u`, so walks follow the direction money is
//! received along.  Strong connectivity, the cycle period and the
//! primitivity exponent of this graph decide whether wealth differences can
//! even out.

use crate::error::{Error, Result};
use crate::matrix::{AgentId, IncomeCirculationMatrix};
use serde::Serialize;

/// Directed graph of money reception.
#[derive(Debug, Clone)]
pub struct CirculationGraph {
    n: usize,
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
}

/// Strongly connected components; `membership[v]` is a component id in
/// `0..count`.
#[derive(Debug, Clone)]
pub struct SccPartition {
    pub count: usize,
    pub membership: Vec<usize>,
}

/// How a society circulates money, in increasing order of mixing quality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    /// Several strongly connected components: some wealth never comes back.
    Fragmented,
    /// One component, but all cycles share a period >= 2: wealth sloshes
    /// without settling.
    WholePeriodic,
    /// One aperiodic component: every agent's money eventually reaches
    /// every other agent in a uniform number of steps.
    Cohesive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Fragmented => "Fragmented",
            Verdict::WholePeriodic => "WholePeriodic",
            Verdict::Cohesive => "Cohesive",
        }
    }
}

/// Result of [`classify`].
#[derive(Debug, Clone)]
pub struct SocietyClassification {
    pub verdict: Verdict,
    pub n: usize,
    pub scc_count: usize,
    pub scc_membership: Vec<usize>,
    /// Gcd of cycle lengths; present when the graph is strongly connected.
    pub period: Option<usize>,
    /// Smallest `k` with all pairs connected by a walk of exactly `k`
    /// steps; present only for cohesive societies.
    pub exponent: Option<usize>,
    /// `1 / exponent`; present only for cohesive societies.
    pub cohesiveness: Option<f64>,
    /// Number of agents with nonzero savings fraction.
    pub nu: usize,
}

impl SocietyClassification {
    pub fn is_cohesive(&self) -> bool {
        self.verdict == Verdict::Cohesive
    }

    /// Universal exponent bound `(n - 1)^2 + 1`.
    pub fn wielandt_bound(&self) -> usize {
        wielandt_bound(self.n)
    }

    /// Sharper bound `2n - nu - 1`, available when some agent saves.
    /// Degenerate for the single-agent economy, where the exponent is 1.
    pub fn diagonal_bound(&self) -> Option<usize> {
        (self.nu > 0).then(|| 2 * self.n - self.nu - 1)
    }
}

pub fn wielandt_bound(n: usize) -> usize {
    (n - 1) * (n - 1) + 1
}

/// A concrete path certifying reachability, `nodes` from source to target
/// inclusive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathWitness {
    pub source: AgentId,
    pub target: AgentId,
    pub nodes: Vec<AgentId>,
}

impl PathWitness {
    /// Number of edges walked.
    pub fn length(&self) -> usize {
        self.nodes.len() - 1
    }
}

/// Prints agents 1-based, the labeling used in human-facing reports;
/// `nodes` itself stays 0-based like every other index.
impl std::fmt::Display for PathWitness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut first = true;
        for node in &self.nodes {
            if !first {
                write!(f, " -> ")?;
            }
            write!(f, "{}", node.0 + 1)?;
            first = false;
        }
        Ok(())
    }
}

impl CirculationGraph {
    pub fn from_matrix(f: &IncomeCirculationMatrix) -> Self {
        let n = f.n();
        let mut g = Self {
            n,
            out_edges: vec![Vec::new(); n],
            in_edges: vec![Vec::new(); n],
        };
        for (u, v, _) in f.entries() {
            g.out_edges[u].push(v);
            g.in_edges[v].push(u);
        }
        for adj in g.out_edges.iter_mut().chain(g.in_edges.iter_mut()) {
            adj.sort_unstable();
        }
        g
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut g = Self {
            n,
            out_edges: vec![Vec::new(); n],
            in_edges: vec![Vec::new(); n],
        };
        for &(u, v) in edges {
            assert!(u < n && v < n, "edge out of bounds");
            g.out_edges[u].push(v);
            g.in_edges[v].push(u);
        }
        for adj in g.out_edges.iter_mut().chain(g.in_edges.iter_mut()) {
            adj.sort_unstable();
            adj.dedup();
        }
        g
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn out_neighbors(&self, u: usize) -> &[usize] {
        &self.out_edges[u]
    }

    pub fn in_neighbors(&self, v: usize) -> &[usize] {
        &self.in_edges[v]
    }

    pub fn edge_count(&self) -> usize {
        self.out_edges.iter().map(Vec::len).sum()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.out_edges[u].binary_search(&v).is_ok()
    }

    /// Tarjan's algorithm, iterative to keep recursion off large graphs.
    pub fn strongly_connected_components(&self) -> SccPartition {
        const UNVISITED: usize = usize::MAX;
        let n = self.n;
        let mut index = vec![UNVISITED; n];
        let mut lowlink = vec![0usize; n];
        let mut on_stack = vec![false; n];
        let mut membership = vec![UNVISITED; n];
        let mut stack: Vec<usize> = Vec::new();
        let mut next_index = 0usize;
        let mut count = 0usize;
        // Call frames: (node, position in its adjacency list).
        let mut frames: Vec<(usize, usize)> = Vec::new();

        for start in 0..n {
            if index[start] != UNVISITED {
                continue;
            }
            frames.push((start, 0));
            index[start] = next_index;
            lowlink[start] = next_index;
            next_index += 1;
            stack.push(start);
            on_stack[start] = true;

            while let Some(&mut (v, ref mut pos)) = frames.last_mut() {
                if *pos < self.out_edges[v].len() {
                    let w = self.out_edges[v][*pos];
                    *pos += 1;
                    if index[w] == UNVISITED {
                        index[w] = next_index;
                        lowlink[w] = next_index;
                        next_index += 1;
                        stack.push(w);
                        on_stack[w] = true;
                        frames.push((w, 0));
                    } else if on_stack[w] {
                        lowlink[v] = lowlink[v].min(index[w]);
                    }
                } else {
                    frames.pop();
                    if let Some(&(parent, _)) = frames.last() {
                        lowlink[parent] = lowlink[parent].min(lowlink[v]);
                    }
                    if lowlink[v] == index[v] {
                        loop {
                            let w = stack.pop().expect("component member on stack");
                            on_stack[w] = false;
                            membership[w] = count;
                            if w == v {
                                break;
                            }
                        }
                        count += 1;
                    }
                }
            }
        }
        SccPartition { count, membership }
    }

    pub fn is_strongly_connected(&self) -> bool {
        self.strongly_connected_components().count == 1
    }

    /// Gcd of all cycle lengths.
    ///
    /// Computed from BFS levels: every edge `u -> v` contributes
    /// `|level(u) + 1 - level(v)|` to the gcd.  Requires strong
    /// connectivity.
    pub fn period(&self) -> Result<usize> {
        let scc = self.strongly_connected_components();
        if scc.count > 1 {
            return Err(Error::NotStronglyConnected {
                scc_count: scc.count,
            });
        }
        Ok(self.period_unchecked())
    }

    fn period_unchecked(&self) -> usize {
        let n = self.n;
        let mut level = vec![usize::MAX; n];
        let mut queue = std::collections::VecDeque::new();
        level[0] = 0;
        queue.push_back(0usize);
        while let Some(u) = queue.pop_front() {
            for &v in &self.out_edges[u] {
                if level[v] == usize::MAX {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        let mut g: u64 = 0;
        for u in 0..n {
            for &v in &self.out_edges[u] {
                let d = (level[u] as i64 + 1 - level[v] as i64).unsigned_abs();
                g = gcd(g, d);
            }
        }
        debug_assert!(g >= 1, "a strongly connected graph has a cycle");
        g as usize
    }

    /// Primitivity exponent: smallest `k >= 1` such that every ordered pair
    /// of agents is joined by a walk of exactly `k` edges.
    ///
    /// Errors when the graph is not strongly connected or has period >= 2,
    /// and when the exponent would exceed `min(cap, (n-1)^2 + 1)`.
    pub fn exponent_with_cap(&self, cap: usize) -> Result<usize> {
        let scc = self.strongly_connected_components();
        if scc.count > 1 {
            return Err(Error::NotStronglyConnected {
                scc_count: scc.count,
            });
        }
        let p = self.period_unchecked();
        if p > 1 {
            return Err(Error::NotPrimitive { period: p });
        }
        let cap = cap.min(wielandt_bound(self.n));
        let a = BoolMat::from_graph(self);
        if a.all_ones() {
            return Ok(1);
        }
        if cap <= 1 {
            return Err(Error::ExponentCapExceeded { cap });
        }
        // powers[i] holds the reachability pattern of walks of exactly 2^i
        // edges.  For a strongly connected graph an all-ones pattern stays
        // all-ones as the exponent grows, so squaring up and then binary
        // searching between the last two powers of two finds the threshold.
        let mut powers = vec![a];
        loop {
            let last = powers.last().expect("non-empty");
            let reached = 1usize << (powers.len() - 1);
            if reached >= cap {
                return Err(Error::ExponentCapExceeded { cap });
            }
            let next = last.mul(last);
            let done = next.all_ones();
            powers.push(next);
            if done {
                break;
            }
        }
        let m = powers.len() - 1;
        let mut lo = (1usize << (m - 1)) + 1;
        let mut hi = 1usize << m;
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if pow_all_ones(&powers, mid) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        if lo > cap {
            return Err(Error::ExponentCapExceeded { cap });
        }
        Ok(lo)
    }

    pub fn exponent(&self) -> Result<usize> {
        self.exponent_with_cap(wielandt_bound(self.n))
    }

    /// Shortest path from `source` to `target`; with `source == target`
    /// this is a shortest cycle through the node.
    pub fn shortest_path_witness(&self, source: AgentId, target: AgentId) -> Result<PathWitness> {
        let (s, t) = (source.0, target.0);
        assert!(s < self.n && t < self.n, "agent out of bounds");
        let mut parent = vec![usize::MAX; self.n];
        let mut dist = vec![usize::MAX; self.n];
        let mut queue = std::collections::VecDeque::new();
        dist[s] = 0;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            for &v in &self.out_edges[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    parent[v] = u;
                    queue.push_back(v);
                }
            }
        }
        let unwind = |end: usize| {
            let mut nodes = vec![end];
            let mut cur = end;
            while cur != s {
                cur = parent[cur];
                nodes.push(cur);
            }
            nodes.reverse();
            nodes.into_iter().map(AgentId).collect::<Vec<_>>()
        };
        if s != t {
            if dist[t] == usize::MAX {
                return Err(Error::Unreachable { from: s, to: t });
            }
            return Ok(PathWitness {
                source,
                target,
                nodes: unwind(t),
            });
        }
        // Shortest cycle through s: best last hop u -> s over reachable u.
        let mut best: Option<usize> = None;
        for &u in &self.in_edges[s] {
            if dist[u] != usize::MAX {
                best = Some(match best {
                    Some(b) if dist[b] <= dist[u] => b,
                    _ => u,
                });
            }
        }
        let Some(u) = best else {
            return Err(Error::Unreachable { from: s, to: t });
        };
        let mut nodes = unwind(u);
        nodes.push(source);
        Ok(PathWitness {
            source,
            target,
            nodes,
        })
    }

    /// Whether a walk of exactly `k` edges joins `source` to `target`.
    pub fn paths_of_length(&self, source: AgentId, target: AgentId, k: usize) -> bool {
        let (s, t) = (source.0, target.0);
        assert!(s < self.n && t < self.n, "agent out of bounds");
        if k == 0 {
            return s == t;
        }
        let a = BoolMat::from_graph(self);
        let words = a.words;
        let mut frontier = vec![0u64; words];
        frontier[s / 64] |= 1u64 << (s % 64);
        if k <= 4 * self.n.max(16) {
            let mut next = vec![0u64; words];
            for _ in 0..k {
                next.iter_mut().for_each(|w| *w = 0);
                for u in iter_bits(&frontier) {
                    or_into(&mut next, a.row(u));
                }
                std::mem::swap(&mut frontier, &mut next);
            }
        } else {
            // Walks compose: fold the binary expansion of k over squared
            // reachability patterns.
            let mut power = a;
            let mut e = k;
            loop {
                if e & 1 == 1 {
                    let mut next = vec![0u64; words];
                    for u in iter_bits(&frontier) {
                        or_into(&mut next, power.row(u));
                    }
                    frontier = next;
                }
                e >>= 1;
                if e == 0 {
                    break;
                }
                power = power.mul(&power);
            }
        }
        frontier[t / 64] & (1u64 << (t % 64)) != 0
    }
}

/// Full verdict for one economy.
pub fn classify(f: &IncomeCirculationMatrix) -> SocietyClassification {
    let g = CirculationGraph::from_matrix(f);
    let scc = g.strongly_connected_components();
    let nu = f.nonzero_diagonal_count();
    let n = f.n();
    if scc.count > 1 {
        return SocietyClassification {
            verdict: Verdict::Fragmented,
            n,
            scc_count: scc.count,
            scc_membership: scc.membership,
            period: None,
            exponent: None,
            cohesiveness: None,
            nu,
        };
    }
    let period = g.period_unchecked();
    if period >= 2 {
        return SocietyClassification {
            verdict: Verdict::WholePeriodic,
            n,
            scc_count: 1,
            scc_membership: scc.membership,
            period: Some(period),
            exponent: None,
            cohesiveness: None,
            nu,
        };
    }
    let exponent = g
        .exponent_with_cap(wielandt_bound(n))
        .expect("aperiodic strongly connected graph has an exponent within the universal bound");
    SocietyClassification {
        verdict: Verdict::Cohesive,
        n,
        scc_count: 1,
        scc_membership: scc.membership,
        period: Some(1),
        exponent: Some(exponent),
        cohesiveness: Some(1.0 / exponent as f64),
        nu,
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Square boolean matrix with rows packed into 64-bit words.
struct BoolMat {
    n: usize,
    words: usize,
    rows: Vec<u64>,
}

impl BoolMat {
    fn from_graph(g: &CirculationGraph) -> Self {
        let n = g.n;
        let words = n.div_ceil(64);
        let mut rows = vec![0u64; n * words];
        for (u, adj) in g.out_edges.iter().enumerate() {
            for &v in adj {
                rows[u * words + v / 64] |= 1u64 << (v % 64);
            }
        }
        Self { n, words, rows }
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.rows[i * self.words..(i + 1) * self.words]
    }

    fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let mut out = Self {
            n: self.n,
            words: self.words,
            rows: vec![0u64; self.rows.len()],
        };
        for i in 0..self.n {
            let (acc, _rest) = out.rows[i * self.words..].split_at_mut(self.words);
            for j in iter_bits(self.row(i)) {
                or_into(acc, other.row(j));
            }
        }
        out
    }

    fn all_ones(&self) -> bool {
        let full_tail = if self.n.is_multiple_of(64) {
            u64::MAX
        } else {
            (1u64 << (self.n % 64)) - 1
        };
        (0..self.n).all(|i| {
            let row = self.row(i);
            row[..self.words - 1].iter().all(|&w| w == u64::MAX) && row[self.words - 1] == full_tail
        })
    }
}

/// Whether the walk pattern of exactly `k` edges is all-ones, assembled
/// from cached squarings.  Valid for strongly connected graphs, where
/// all-ones patterns absorb further multiplication.
fn pow_all_ones(powers: &[BoolMat], k: usize) -> bool {
    debug_assert!(k >= 1 && k < 1usize << powers.len());
    let mut acc: Option<BoolMat> = None;
    for (i, p) in powers.iter().enumerate() {
        if k & (1usize << i) != 0 {
            acc = Some(match acc {
                None => BoolMat {
                    n: p.n,
                    words: p.words,
                    rows: p.rows.clone(),
                },
                Some(a) => a.mul(p),
            });
            if acc.as_ref().expect("just set").all_ones() {
                return true;
            }
        }
    }
    acc.expect("k has a set bit").all_ones()
}

fn iter_bits(words: &[u64]) -> impl Iterator<Item = usize> + '_ {
    words.iter().enumerate().flat_map(|(wi, &w)| {
        let mut w = w;
        std::iter::from_fn(move || {
            if w == 0 {
                None
            } else {
                let bit = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + bit)
            }
        })
    })
}

fn or_into(acc: &mut [u64], row: &[u64]) {
    for (a, &r) in acc.iter_mut().zip(row) {
        *a |= r;
    }
}
