//! Neighborhood view graphs over rings with ids from `[m]`, and an exact
//! chromatic number solver for them.
//!
//! A vertex of the view graph for radius `t` is a `(2t+1)`-tuple of distinct
//! values from `[m]` (what a ring node sees of its `t`-neighborhood); two
//! views are adjacent when one is a prefix shift of the other, i.e. they can
//! occur at consecutive ring positions. The chromatic number of this graph
//! lower-bounds the colors any one-shot ring coloring rule needs.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LinialError {
    #[error("radius must be at least 1")]
    ZeroRadius,
    #[error("id space m = {m} leaves no distinct {len}-tuples (need m >= {len})")]
    EmptyVertexSet { m: u32, len: u32 },
    #[error("coloring is partial: no color for view {0:?}")]
    PartialColoring(Vec<u16>),
    #[error("monochromatic search supports t = 1 only, graph has t = {0}")]
    UnsupportedRadius(u32),
    #[error("relabeling must be a bijection on [m]")]
    BadBijection,
}

#[derive(Debug, Clone)]
pub struct ViewGraph {
    t: u32,
    m: u32,
    /// All `(2t+1)`-tuples of distinct values from `[m]`, lexicographic.
    tuples: Vec<Vec<u16>>,
    index: HashMap<Vec<u16>, usize>,
    adj: Vec<Vec<u32>>,
    edge_count: usize,
}

/// Builds the view graph for radius `t` and id space `[m]`.
///
/// `m = 2t + 1` is accepted (it forces an empty edge set); anything smaller
/// has no vertices at all and is refused.
pub fn build_view_graph(t: u32, m: u32) -> Result<ViewGraph, LinialError> {
    if t == 0 {
        return Err(LinialError::ZeroRadius);
    }
    let len = 2 * t + 1;
    if m < len {
        return Err(LinialError::EmptyVertexSet { m, len });
    }

    let mut tuples = Vec::new();
    let mut current: Vec<u16> = Vec::with_capacity(len as usize);
    let mut used = vec![false; (m + 1) as usize];
    fn emit(
        m: u16,
        len: usize,
        current: &mut Vec<u16>,
        used: &mut [bool],
        out: &mut Vec<Vec<u16>>,
    ) {
        if current.len() == len {
            out.push(current.clone());
            return;
        }
        for x in 1..=m {
            if !used[x as usize] {
                used[x as usize] = true;
                current.push(x);
                emit(m, len, current, used, out);
                current.pop();
                used[x as usize] = false;
            }
        }
    }
    emit(m as u16, len as usize, &mut current, &mut used, &mut tuples);

    let index: HashMap<Vec<u16>, usize> = tuples
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, t)| (t, i))
        .collect();

    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); tuples.len()];
    let mut edge_count = 0;
    for (i, tuple) in tuples.iter().enumerate() {
        // Forward neighbors: (y, x1, ..., x_{2t}) for y not among the tuple.
        // y != x_{2t+1} comes for free: the shifted tuple must itself have
        // distinct entries.
        let mut shifted = Vec::with_capacity(len as usize);
        shifted.push(0u16);
        shifted.extend_from_slice(&tuple[..(len - 1) as usize]);
        for y in 1..=(m as u16) {
            if tuple.contains(&y) {
                continue;
            }
            shifted[0] = y;
            let j = index[&shifted];
            adj[i].push(j as u32);
            adj[j].push(i as u32);
            edge_count += 1;
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }

    Ok(ViewGraph {
        t,
        m,
        tuples,
        index,
        adj,
        edge_count,
    })
}

impl ViewGraph {
    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn vertex_count(&self) -> usize {
        self.tuples.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn tuples(&self) -> &[Vec<u16>] {
        &self.tuples
    }

    pub fn adjacency(&self) -> &[Vec<u32>] {
        &self.adj
    }

    pub fn index_of(&self, tuple: &[u16]) -> Option<usize> {
        self.index.get(tuple).copied()
    }

    /// The same graph with every label pushed through a bijection on `[m]`,
    /// rebuilt from scratch so a recomputation really happens.
    pub fn relabeled(&self, bijection: &[u16]) -> Result<ViewGraph, LinialError> {
        if bijection.len() != self.m as usize {
            return Err(LinialError::BadBijection);
        }
        let mut seen = vec![false; (self.m + 1) as usize];
        for &x in bijection {
            if x < 1 || x > self.m as u16 || seen[x as usize] {
                return Err(LinialError::BadBijection);
            }
            seen[x as usize] = true;
        }
        let tuples: Vec<Vec<u16>> = self
            .tuples
            .iter()
            .map(|t| t.iter().map(|&x| bijection[(x - 1) as usize]).collect())
            .collect();
        let index: HashMap<Vec<u16>, usize> = tuples
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, t)| (t, i))
            .collect();
        // edges recomputed by the definition on the relabeled tuples
        let len = (2 * self.t + 1) as usize;
        let mut adj: Vec<Vec<u32>> = vec![Vec::new(); tuples.len()];
        let mut edge_count = 0;
        for (i, tuple) in tuples.iter().enumerate() {
            let mut shifted = Vec::with_capacity(len);
            shifted.push(0u16);
            shifted.extend_from_slice(&tuple[..len - 1]);
            for y in 1..=(self.m as u16) {
                if tuple.contains(&y) {
                    continue;
                }
                shifted[0] = y;
                let j = index[&shifted];
                adj[i].push(j as u32);
                adj[j].push(i as u32);
                edge_count += 1;
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Ok(ViewGraph {
            t: self.t,
            m: self.m,
            tuples,
            index,
            adj,
            edge_count,
        })
    }

    /// Scans for an edge whose endpoints share a color. Returns the first
    /// such pair in vertex order, or `None` iff the coloring is proper.
    /// Only radius-1 graphs are supported (triple colorings).
    pub fn find_monochromatic_edge(
        &self,
        coloring: &dyn Fn(u16, u16, u16) -> Option<u8>,
    ) -> Result<Option<(Vec<u16>, Vec<u16>)>, LinialError> {
        if self.t != 1 {
            return Err(LinialError::UnsupportedRadius(self.t));
        }
        let mut colors: Vec<u8> = Vec::with_capacity(self.tuples.len());
        for tuple in &self.tuples {
            match coloring(tuple[0], tuple[1], tuple[2]) {
                Some(c) => colors.push(c),
                None => return Err(LinialError::PartialColoring(tuple.clone())),
            }
        }
        for (i, neighbors) in self.adj.iter().enumerate() {
            for &j in neighbors {
                let j = j as usize;
                if j > i && colors[i] == colors[j] {
                    return Ok(Some((self.tuples[i].clone(), self.tuples[j].clone())));
                }
            }
        }
        Ok(None)
    }

    pub fn chromatic_number(&self, limits: &SearchLimits) -> ChromaticOutcome {
        chromatic_number_exact(self.tuples.len(), &self.adj, limits)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SearchLimits {
    /// Highest k tried before giving up.
    pub max_colors: u32,
    /// Branch-and-bound node budget per k-colorability decision.
    pub max_nodes: u64,
    /// Randomized greedy restarts tried before the exhaustive search. They
    /// find colorings of satisfiable instances orders of magnitude faster
    /// than branch and bound; refutation still falls to the exhaustive pass.
    pub restarts: u32,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            max_colors: 16,
            max_nodes: 20_000_000,
            restarts: 4000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ChromaticOutcome {
    /// `chi` with a proper coloring as certificate; every smaller color
    /// count was refuted exhaustively.
    Exact { chi: u32, coloring: Vec<u32> },
    /// The node budget ran out while deciding `undecided_k`-colorability.
    /// Everything below `undecided_k` was refuted, so `chi >= undecided_k`.
    BudgetExhausted { undecided_k: u32, nodes_used: u64 },
    /// All of `1..=max_colors` were refuted.
    ExceedsColorLimit { max_colors: u32 },
}

enum Decision {
    Colorable(Vec<u32>),
    Refuted,
    OutOfBudget(u64),
}

/// Exact chromatic number by iterated k-colorability: DSATUR-ordered branch
/// and bound with a first-use cap on new colors for symmetry breaking.
pub fn chromatic_number_exact(
    n: usize,
    adj: &[Vec<u32>],
    limits: &SearchLimits,
) -> ChromaticOutcome {
    chromatic_number_from(n, adj, limits, 1)
}

/// Like `chromatic_number_exact`, starting the k search at `min_colors`.
/// The caller owns the certificate that fewer colors cannot work (for view
/// graphs: the induced-subgraph monotonicity in `m`).
pub fn chromatic_number_from(
    n: usize,
    adj: &[Vec<u32>],
    limits: &SearchLimits,
    min_colors: u32,
) -> ChromaticOutcome {
    if n == 0 {
        return ChromaticOutcome::Exact {
            chi: 0,
            coloring: Vec::new(),
        };
    }
    for k in min_colors.max(1)..=limits.max_colors {
        if let Some(coloring) = randomized_coloring(adj, k, limits.restarts) {
            debug_assert!(proper(adj, &coloring));
            return ChromaticOutcome::Exact { chi: k, coloring };
        }
        match k_colorable(n, adj, k, limits.max_nodes) {
            Decision::Colorable(coloring) => return ChromaticOutcome::Exact { chi: k, coloring },
            Decision::Refuted => continue,
            Decision::OutOfBudget(nodes_used) => {
                return ChromaticOutcome::BudgetExhausted {
                    undecided_k: k,
                    nodes_used,
                }
            }
        }
    }
    ChromaticOutcome::ExceedsColorLimit {
        max_colors: limits.max_colors,
    }
}

/// Greedy DSATUR with seeded random tie-breaking and no backtracking.
/// Finds colorings only; failure proves nothing.
fn randomized_coloring(adj: &[Vec<u32>], k: u32, restarts: u32) -> Option<Vec<u32>> {
    use rand::{Rng, SeedableRng};
    let n = adj.len();
    'restart: for attempt in 0..restarts {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(attempt as u64);
        let mut colors = vec![0u32; n];
        let mut mask = vec![0u64; n];
        let mut pool: Vec<usize> = Vec::new();
        for _ in 0..n {
            let mut best_sat = -1i64;
            pool.clear();
            for v in 0..n {
                if colors[v] != 0 {
                    continue;
                }
                let sat = mask[v].count_ones() as i64;
                if sat > best_sat {
                    best_sat = sat;
                    pool.clear();
                    pool.push(v);
                } else if sat == best_sat {
                    pool.push(v);
                }
            }
            let v = pool[rng.gen_range(0..pool.len())];
            let available: Vec<u32> = (1..=k)
                .filter(|c| mask[v] & (1 << (c - 1)) == 0)
                .collect();
            if available.is_empty() {
                continue 'restart;
            }
            let c = available[rng.gen_range(0..available.len())];
            colors[v] = c;
            for &u in &adj[v] {
                mask[u as usize] |= 1 << (c - 1);
            }
        }
        return Some(colors);
    }
    None
}

/// One row of the chromatic table over ascending `m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileEntry {
    pub t: u32,
    pub m: u32,
    pub vertices: usize,
    pub edges: usize,
    /// The k the search started from. When it equals the computed chi, the
    /// refutation of chi - 1 colors was inherited from the previous m via
    /// induced-subgraph monotonicity instead of recomputed on this graph.
    pub lower_bound: u32,
    pub outcome: ChromaticOutcome,
}

/// Computes chi for `m` in `m_from..=m_to` in ascending order, carrying each
/// result forward as the next lower bound (the view graph over `[m]` embeds
/// as an induced subgraph of the one over `[m + 1]`). Stops early at the
/// first budget exhaustion, which is the recorded search frontier.
pub fn chromatic_profile(
    t: u32,
    m_from: u32,
    m_to: u32,
    limits: &SearchLimits,
) -> Result<Vec<ProfileEntry>, LinialError> {
    let mut entries = Vec::new();
    let mut lower = 1u32;
    for m in m_from..=m_to {
        let graph = build_view_graph(t, m)?;
        let outcome = chromatic_number_from(graph.vertex_count(), graph.adjacency(), limits, lower);
        let entry = ProfileEntry {
            t,
            m,
            vertices: graph.vertex_count(),
            edges: graph.edge_count(),
            lower_bound: lower,
            outcome,
        };
        let stop = !matches!(entry.outcome, ChromaticOutcome::Exact { .. });
        if let ChromaticOutcome::Exact { chi, .. } = entry.outcome {
            lower = chi;
        }
        entries.push(entry);
        if stop {
            break;
        }
    }
    Ok(entries)
}

struct Search<'a> {
    adj: &'a [Vec<u32>],
    k: u32,
    colors: Vec<u32>,
    /// Per-vertex bitmask of colors used by neighbors; bit c-1 for color c.
    neighbor_mask: Vec<u64>,
    /// Per-vertex, per-color count of colored neighbors, for undo.
    neighbor_count: Vec<Vec<u16>>,
    max_used: u32,
    nodes: u64,
    budget: u64,
}

impl Search<'_> {
    fn assign(&mut self, v: usize, c: u32) {
        self.colors[v] = c;
        for &u in &self.adj[v] {
            let u = u as usize;
            let cnt = &mut self.neighbor_count[u][(c - 1) as usize];
            *cnt += 1;
            if *cnt == 1 {
                self.neighbor_mask[u] |= 1 << (c - 1);
            }
        }
    }

    fn unassign(&mut self, v: usize, c: u32) {
        self.colors[v] = 0;
        for &u in &self.adj[v] {
            let u = u as usize;
            let cnt = &mut self.neighbor_count[u][(c - 1) as usize];
            *cnt -= 1;
            if *cnt == 0 {
                self.neighbor_mask[u] &= !(1 << (c - 1));
            }
        }
    }

    /// Uncolored vertex with maximum saturation, ties by degree then index.
    fn pick(&self) -> Option<usize> {
        let mut best: Option<(u32, usize, usize)> = None;
        for v in 0..self.colors.len() {
            if self.colors[v] != 0 {
                continue;
            }
            let sat = self.neighbor_mask[v].count_ones();
            let deg = self.adj[v].len();
            let better = match best {
                None => true,
                Some((bsat, bdeg, _)) => sat > bsat || (sat == bsat && deg > bdeg),
            };
            if better {
                best = Some((sat, deg, v));
            }
        }
        best.map(|(_, _, v)| v)
    }

    fn solve(&mut self, remaining: usize) -> Option<bool> {
        if remaining == 0 {
            return Some(true);
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            return None; // budget exhausted
        }
        let v = self.pick().expect("remaining > 0");
        if self.neighbor_mask[v].count_ones() >= self.k {
            return Some(false);
        }
        // allow at most one color beyond those already in use
        let cap = (self.max_used + 1).min(self.k);
        for c in 1..=cap {
            if self.neighbor_mask[v] & (1 << (c - 1)) != 0 {
                continue;
            }
            let old_max = self.max_used;
            self.max_used = self.max_used.max(c);
            self.assign(v, c);
            match self.solve(remaining - 1) {
                Some(true) => return Some(true),
                Some(false) => {}
                None => return None,
            }
            self.unassign(v, c);
            self.max_used = old_max;
        }
        Some(false)
    }
}

fn k_colorable(n: usize, adj: &[Vec<u32>], k: u32, budget: u64) -> Decision {
    if k == 1 {
        return if adj.iter().all(|l| l.is_empty()) {
            Decision::Colorable(vec![1; n])
        } else {
            Decision::Refuted
        };
    }
    let mut search = Search {
        adj,
        k,
        colors: vec![0; n],
        neighbor_mask: vec![0; n],
        neighbor_count: vec![vec![0; k as usize]; n],
        max_used: 0,
        nodes: 0,
        budget,
    };
    match search.solve(n) {
        Some(true) => {
            debug_assert!(proper(adj, &search.colors));
            Decision::Colorable(search.colors)
        }
        Some(false) => Decision::Refuted,
        None => Decision::OutOfBudget(search.nodes),
    }
}

/// Independent validity check for coloring certificates.
pub fn proper(adj: &[Vec<u32>], colors: &[u32]) -> bool {
    adj.iter().enumerate().all(|(v, neighbors)| {
        colors[v] != 0
            && neighbors
                .iter()
                .all(|&u| colors[u as usize] != colors[v] || u as usize == v)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn complete_adj(n: usize) -> Vec<Vec<u32>> {
        (0..n)
            .map(|v| (0..n as u32).filter(|&u| u as usize != v).collect())
            .collect()
    }

    fn cycle_adj(n: usize) -> Vec<Vec<u32>> {
        (0..n)
            .map(|v| {
                let prev = ((v + n - 1) % n) as u32;
                let next = ((v + 1) % n) as u32;
                vec![prev.min(next), prev.max(next)]
            })
            .collect()
    }

    #[test]
    fn vertex_counts_match_falling_factorial() {
        // t=1, m=3: 6 vertices and no edges (the only extension collides)
        let g = build_view_graph(1, 3).unwrap();
        assert_eq!(g.vertex_count(), 6);
        assert_eq!(g.edge_count(), 0);
        // t=1, m=5: 5 * 4 * 3 = 60
        assert_eq!(build_view_graph(1, 5).unwrap().vertex_count(), 60);
        assert!(build_view_graph(1, 2).is_err());
        assert!(build_view_graph(0, 5).is_err());
    }

    #[test]
    fn edge_relation_agrees_with_quadratic_rescan() {
        // independent double loop applying the definition directly
        let g = build_view_graph(1, 4).unwrap();
        assert_eq!(g.vertex_count(), 24);
        let mut expected = 0;
        for a in g.tuples() {
            for b in g.tuples() {
                let forward = b[1] == a[0] && b[2] == a[1] && b[0] != a[2];
                if forward {
                    expected += 1;
                    let ia = g.index_of(a).unwrap();
                    let ib = g.index_of(b).unwrap();
                    assert!(g.adjacency()[ia].contains(&(ib as u32)));
                }
            }
        }
        // the rescan sees each undirected edge exactly once as a forward pair
        assert_eq!(g.edge_count(), expected);
    }

    #[test]
    fn chromatic_number_of_known_graphs() {
        let limits = SearchLimits::default();
        match chromatic_number_exact(4, &complete_adj(4), &limits) {
            ChromaticOutcome::Exact { chi, coloring } => {
                assert_eq!(chi, 4);
                assert!(proper(&complete_adj(4), &coloring));
            }
            other => panic!("unexpected outcome {other:?}"),
        }
        match chromatic_number_exact(7, &cycle_adj(7), &limits) {
            ChromaticOutcome::Exact { chi, .. } => assert_eq!(chi, 3),
            other => panic!("unexpected outcome {other:?}"),
        }
        match chromatic_number_exact(8, &cycle_adj(8), &limits) {
            ChromaticOutcome::Exact { chi, .. } => assert_eq!(chi, 2),
            other => panic!("unexpected outcome {other:?}"),
        }
    }

    #[test]
    fn budget_exhaustion_reports_frontier() {
        // C7 needs 3 colors; an absurdly small budget dies deciding k = 2.
        let limits = SearchLimits {
            max_colors: 8,
            max_nodes: 2,
            restarts: 0,
        };
        match chromatic_number_exact(7, &cycle_adj(7), &limits) {
            ChromaticOutcome::BudgetExhausted { undecided_k, .. } => assert!(undecided_k >= 2),
            other => panic!("unexpected outcome {other:?}"),
        }
    }

    #[test]
    fn color_limit_exceeded() {
        let limits = SearchLimits {
            max_colors: 3,
            max_nodes: 1_000_000,
            restarts: 10,
        };
        assert_eq!(
            chromatic_number_exact(5, &complete_adj(5), &limits),
            ChromaticOutcome::ExceedsColorLimit { max_colors: 3 }
        );
    }

    #[test]
    fn monochromatic_edge_detection() {
        let g = build_view_graph(1, 5).unwrap();
        // constant coloring: some edge comes back
        let hit = g
            .find_monochromatic_edge(&|_, _, _| Some(1))
            .unwrap()
            .expect("constant coloring has monochromatic edges");
        assert_ne!(hit.0, hit.1);

        // proper certificate coloring: none
        let outcome = g.chromatic_number(&SearchLimits::default());
        let ChromaticOutcome::Exact { coloring, .. } = outcome else {
            panic!("B(1,5) should be solvable");
        };
        let colors_by_tuple: HashMap<Vec<u16>, u32> = g
            .tuples()
            .iter()
            .cloned()
            .zip(coloring.iter().copied())
            .collect();
        let result = g
            .find_monochromatic_edge(&|a, b, c| {
                colors_by_tuple.get(&vec![a, b, c]).map(|&x| x as u8)
            })
            .unwrap();
        assert!(result.is_none());

        // partial coloring is refused
        assert!(g.find_monochromatic_edge(&|_, _, _| None).is_err());
    }

    #[test]
    fn profile_frozen_values() {
        // computed once with the default limits and frozen; the growth step
        // from 3 to 4 colors sits at m = 7
        let entries = chromatic_profile(1, 5, 7, &SearchLimits::default()).unwrap();
        let chis: Vec<u32> = entries
            .iter()
            .map(|e| match e.outcome {
                ChromaticOutcome::Exact { chi, .. } => chi,
                ref other => panic!("m={} undecided: {other:?}", e.m),
            })
            .collect();
        assert_eq!(chis, vec![3, 3, 4]);
    }

    #[test]
    fn relabeling_preserves_structure() {
        let g = build_view_graph(1, 5).unwrap();
        let relabeled = g.relabeled(&[3, 5, 1, 2, 4]).unwrap();
        assert_eq!(relabeled.vertex_count(), g.vertex_count());
        assert_eq!(relabeled.edge_count(), g.edge_count());
        assert!(g.relabeled(&[1, 1, 2, 3, 4]).is_err());
        assert!(g.relabeled(&[1, 2, 3]).is_err());
    }
}
