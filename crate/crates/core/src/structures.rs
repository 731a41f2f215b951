//! MIS/CDS verification against the reliable graph, an exact minimum-CDS
//! search for small instances, and the geographic-constraint tooling.

use std::collections::BTreeSet;

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{dist, DualGraph, GraphError, GeoViolation, NodeId};

#[derive(Debug, Error, PartialEq)]
pub enum StructureError {
    #[error("exact search limited to n <= {max}, graph has n = {n}")]
    TooLarge { n: u32, max: u32 },
    #[error("no connected dominating set exists (reliable graph is disconnected)")]
    NoCdsExists,
    #[error("graph has no embedding/gamma to check")]
    MissingGeometry,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// A concrete witness for a structure violation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// Two members of the set are reliable neighbors.
    IndependencePair { u: NodeId, v: NodeId },
    /// A node neither in the set nor adjacent to it.
    Uncovered { node: NodeId },
    /// Two members with no path between them inside the induced subgraph.
    DisconnectedPair { u: NodeId, v: NodeId },
    /// Empty candidate set on a nonempty graph.
    EmptySet,
    /// Candidate contains an id outside `1..=n`.
    UnknownId { id: NodeId },
}

/// Exact ratio kept as a fraction so reports stay precise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
    pub size: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub approx_ratio: Option<Ratio>,
}

impl StructureReport {
    fn from_violations(size: usize, violations: Vec<Violation>) -> Self {
        StructureReport {
            valid: violations.is_empty(),
            violations,
            size,
            approx_ratio: None,
        }
    }
}

fn id_check(graph: &DualGraph, set: &BTreeSet<NodeId>) -> Vec<Violation> {
    set.iter()
        .filter(|&&id| !graph.contains_id(id))
        .map(|&id| Violation::UnknownId { id })
        .collect()
}

/// Checks both MIS clauses against the reliable graph: no two members are
/// reliable neighbors, and every non-member has a member neighbor.
pub fn verify_mis(graph: &DualGraph, set: &BTreeSet<NodeId>) -> StructureReport {
    let mut violations = id_check(graph, set);
    if !violations.is_empty() {
        return StructureReport::from_violations(set.len(), violations);
    }
    for &u in set {
        for &v in graph.reliable_neighbors(u) {
            if v > u && set.contains(&v) {
                violations.push(Violation::IndependencePair { u, v });
            }
        }
    }
    for u in graph.node_ids() {
        if !set.contains(&u)
            && !graph.reliable_neighbors(u).iter().any(|v| set.contains(v))
        {
            violations.push(Violation::Uncovered { node: u });
        }
    }
    StructureReport::from_violations(set.len(), violations)
}

/// Checks the CDS clauses: domination plus connectivity of the induced
/// reliable subgraph. The empty set is valid only on the empty graph.
pub fn verify_cds(graph: &DualGraph, set: &BTreeSet<NodeId>) -> StructureReport {
    let mut violations = id_check(graph, set);
    if !violations.is_empty() {
        return StructureReport::from_violations(set.len(), violations);
    }
    if set.is_empty() {
        if graph.n() > 0 {
            violations.push(Violation::EmptySet);
        }
        return StructureReport::from_violations(0, violations);
    }
    for u in graph.node_ids() {
        if !set.contains(&u)
            && !graph.reliable_neighbors(u).iter().any(|v| set.contains(v))
        {
            violations.push(Violation::Uncovered { node: u });
        }
    }
    // connectivity of G[set]
    let start = *set.iter().next().expect("nonempty");
    let mut reached = BTreeSet::new();
    reached.insert(start);
    let mut stack = vec![start];
    while let Some(u) = stack.pop() {
        for &v in graph.reliable_neighbors(u) {
            if set.contains(&v) && reached.insert(v) {
                stack.push(v);
            }
        }
    }
    if let Some(&stranded) = set.iter().find(|v| !reached.contains(v)) {
        violations.push(Violation::DisconnectedPair {
            u: start,
            v: stranded,
        });
    }
    StructureReport::from_violations(set.len(), violations)
}

const EXACT_CDS_MAX_N: u32 = 20;

fn reliable_connected(graph: &DualGraph) -> bool {
    let n = graph.n();
    if n <= 1 {
        return true;
    }
    let mut seen = vec![false; n as usize];
    seen[0] = true;
    let mut stack = vec![1 as NodeId];
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for &v in graph.reliable_neighbors(u) {
            if !seen[(v - 1) as usize] {
                seen[(v - 1) as usize] = true;
                count += 1;
                stack.push(v);
            }
        }
    }
    count == n
}

/// Exact minimum CDS size by increasing-cardinality enumeration. The
/// enumeration order itself is the optimality certificate: the first size
/// with a verified CDS is returned after every smaller size failed.
pub fn min_cds_bruteforce(graph: &DualGraph) -> Result<usize, StructureError> {
    let n = graph.n();
    if n > EXACT_CDS_MAX_N {
        return Err(StructureError::TooLarge {
            n,
            max: EXACT_CDS_MAX_N,
        });
    }
    if n == 0 {
        return Ok(0);
    }
    if !reliable_connected(graph) {
        // A dominating set must touch every component, but then the induced
        // subgraph cannot be connected.
        return Err(StructureError::NoCdsExists);
    }
    let ids: Vec<NodeId> = graph.node_ids().collect();
    for size in 1..=(n as usize) {
        for combo in ids.iter().copied().combinations(size) {
            let set: BTreeSet<NodeId> = combo.into_iter().collect();
            if verify_cds(graph, &set).valid {
                return Ok(size);
            }
        }
    }
    unreachable!("the full vertex set of a connected graph is a CDS");
}

/// `|candidate| / min-CDS`, exact. Only defined for valid candidates.
pub fn cds_approx_ratio(
    graph: &DualGraph,
    candidate: &BTreeSet<NodeId>,
) -> Result<Ratio, StructureError> {
    let min = min_cds_bruteforce(graph)?;
    Ok(Ratio {
        num: candidate.len() as u64,
        den: min.max(1) as u64,
    })
}

/// Which grey-zone pairs (`1 < d <= gamma`) become unreliable edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum UnreliableRule {
    /// Every grey-zone pair: the adversary-maximal choice.
    #[default]
    AllGreyPairs,
    /// No unreliable edges at all.
    NoGreyPairs,
}

/// Builds a dual graph from plane coordinates: `d <= 1` pairs are reliable,
/// grey-zone pairs follow `rule`, pairs beyond `gamma` get no edge.
pub fn geometric_dualgraph(
    points: &[(f64, f64)],
    gamma: f64,
    rule: UnreliableRule,
) -> Result<DualGraph, StructureError> {
    if gamma < 1.0 {
        return Err(GraphError::GammaTooSmall(gamma).into());
    }
    let n = points.len() as u32;
    for u in 0..points.len() {
        for v in (u + 1)..points.len() {
            if points[u] == points[v] {
                return Err(GraphError::DuplicatePoint(
                    (u + 1) as NodeId,
                    (v + 1) as NodeId,
                )
                .into());
            }
        }
    }
    let mut reliable = Vec::new();
    let mut unreliable = Vec::new();
    for u in 1..=n {
        for v in (u + 1)..=n {
            let d = dist(points[(u - 1) as usize], points[(v - 1) as usize]);
            if d <= 1.0 {
                reliable.push((u, v));
            } else if d <= gamma && rule == UnreliableRule::AllGreyPairs {
                unreliable.push((u, v));
            }
        }
    }
    let g = DualGraph::new(n, reliable, unreliable)?;
    Ok(g.with_geometry(points.to_vec(), gamma)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeoCheck {
    pub holds: bool,
    pub witness: Option<GeoViolation>,
}

/// Checks both implications of the geographic constraint on a graph with an
/// attached embedding.
pub fn check_geographic(graph: &DualGraph) -> Result<GeoCheck, StructureError> {
    if graph.embedding().is_none() || graph.gamma().is_none() {
        return Err(StructureError::MissingGeometry);
    }
    let witness = graph.geographic_witness();
    Ok(GeoCheck {
        holds: witness.is_none(),
        witness,
    })
}

/// Like `check_geographic` but for a proposed embedding of an arbitrary
/// graph, without attaching it (the constructor would reject violating
/// geometry outright).
pub fn check_geographic_against(
    graph: &DualGraph,
    points: &[(f64, f64)],
    gamma: f64,
) -> Result<GeoCheck, StructureError> {
    if gamma < 1.0 {
        return Err(GraphError::GammaTooSmall(gamma).into());
    }
    if points.len() != graph.n() as usize {
        return Err(GraphError::EmbeddingSizeMismatch {
            got: points.len(),
            expected: graph.n() as usize,
        }
        .into());
    }
    use crate::graph::GeoClause;
    for u in graph.node_ids() {
        for v in (u + 1)..=graph.n() {
            let d = dist(points[(u - 1) as usize], points[(v - 1) as usize]);
            if d <= 1.0 && !graph.is_reliable(u, v) {
                return Ok(GeoCheck {
                    holds: false,
                    witness: Some(GeoViolation {
                        u,
                        v,
                        distance: d,
                        clause: GeoClause::CloseButNotReliable,
                    }),
                });
            }
            if d > gamma && graph.in_gprime(u, v) {
                return Ok(GeoCheck {
                    holds: false,
                    witness: Some(GeoViolation {
                        u,
                        v,
                        distance: d,
                        clause: GeoClause::FarButInGPrime,
                    }),
                });
            }
        }
    }
    Ok(GeoCheck {
        holds: true,
        witness: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{complete_classical, ring_classical, DualGraph};

    fn set(ids: &[NodeId]) -> BTreeSet<NodeId> {
        ids.iter().copied().collect()
    }

    fn path(n: u32) -> DualGraph {
        DualGraph::new(n, (1..n).map(|i| (i, i + 1)), []).unwrap()
    }

    /// Two k/2-cliques joined by one edge between nodes 1 and k/2+1.
    fn simple_barbell(k: u32) -> DualGraph {
        let half = k / 2;
        let mut edges = Vec::new();
        for u in 1..=half {
            for v in (u + 1)..=half {
                edges.push((u, v));
            }
        }
        for u in (half + 1)..=k {
            for v in (u + 1)..=k {
                edges.push((u, v));
            }
        }
        edges.push((1, half + 1));
        DualGraph::new(k, edges, []).unwrap()
    }

    #[test]
    fn mis_single_node() {
        let g = DualGraph::new(1, [], []).unwrap();
        assert!(verify_mis(&g, &set(&[1])).valid);
        let r = verify_mis(&g, &set(&[]));
        assert_eq!(r.violations, vec![Violation::Uncovered { node: 1 }]);
    }

    #[test]
    fn mis_path_independence_violation() {
        let g = path(3);
        let r = verify_mis(&g, &set(&[1, 2]));
        assert!(!r.valid);
        assert!(r
            .violations
            .contains(&Violation::IndependencePair { u: 1, v: 2 }));
    }

    #[test]
    fn mis_ring_six() {
        let g = ring_classical(6);
        assert!(verify_mis(&g, &set(&[1, 4])).valid);
        let r = verify_mis(&g, &set(&[1]));
        assert!(r
            .violations
            .contains(&Violation::Uncovered { node: 4 }));
    }

    #[test]
    fn cds_ring_six() {
        let g = ring_classical(6);
        assert!(verify_cds(&g, &set(&[1, 2, 3, 4, 5])).valid);
        let r = verify_cds(&g, &set(&[1, 3, 5]));
        assert!(!r.valid);
        assert!(r
            .violations
            .iter()
            .any(|v| matches!(v, Violation::DisconnectedPair { .. })));
    }

    #[test]
    fn cds_barbell_bridge_endpoints() {
        let g = simple_barbell(8);
        // both bridge endpoints dominate their cliques and are adjacent
        assert!(verify_cds(&g, &set(&[1, 5])).valid);
        // one non-bridge node per clique: dominating but disconnected
        let r = verify_cds(&g, &set(&[2, 6]));
        assert!(!r.valid);
        assert!(r
            .violations
            .iter()
            .any(|v| matches!(v, Violation::DisconnectedPair { .. })));
    }

    #[test]
    fn min_cds_examples() {
        assert_eq!(min_cds_bruteforce(&complete_classical(5)).unwrap(), 1);
        assert_eq!(min_cds_bruteforce(&path(5)).unwrap(), 3);
        assert_eq!(min_cds_bruteforce(&simple_barbell(8)).unwrap(), 2);
    }

    #[test]
    fn min_cds_degenerate_and_error_cases() {
        let single = DualGraph::new(1, [], []).unwrap();
        assert_eq!(min_cds_bruteforce(&single).unwrap(), 1);
        let empty = DualGraph::new(0, [], []).unwrap();
        assert_eq!(min_cds_bruteforce(&empty).unwrap(), 0);
        let disconnected = DualGraph::new(2, [], []).unwrap();
        assert_eq!(
            min_cds_bruteforce(&disconnected).unwrap_err(),
            StructureError::NoCdsExists
        );
        let big = ring_classical(21);
        assert!(matches!(
            min_cds_bruteforce(&big).unwrap_err(),
            StructureError::TooLarge { n: 21, max: 20 }
        ));
    }

    #[test]
    fn ratio_is_at_least_one_for_valid_cds() {
        let g = simple_barbell(8);
        let c = set(&[1, 2, 5, 6]);
        assert!(verify_cds(&g, &c).valid);
        let ratio = cds_approx_ratio(&g, &c).unwrap();
        assert_eq!(ratio, Ratio { num: 4, den: 2 });
        assert!(ratio.as_f64() >= 1.0);
    }

    #[test]
    fn geometric_distance_cases() {
        // two points at distance 0.5: reliable edge
        let g =
            geometric_dualgraph(&[(0.0, 0.0), (0.5, 0.0)], 2.0, UnreliableRule::AllGreyPairs)
                .unwrap();
        assert!(g.is_reliable(1, 2));

        // two points beyond gamma: no edge at all
        let g =
            geometric_dualgraph(&[(0.0, 0.0), (2.1, 0.0)], 2.0, UnreliableRule::AllGreyPairs)
                .unwrap();
        assert!(!g.in_gprime(1, 2));

        // collinear points at x = 0, 1.5, 3.0 with gamma 2
        let g = geometric_dualgraph(
            &[(0.0, 0.0), (1.5, 0.0), (3.0, 0.0)],
            2.0,
            UnreliableRule::AllGreyPairs,
        )
        .unwrap();
        assert!(g.reliable_edges().is_empty());
        assert!(g.unreliable_extra_edges().contains(&(1, 2)));
        assert!(g.unreliable_extra_edges().contains(&(2, 3)));
        assert!(!g.in_gprime(1, 3));

        assert!(geometric_dualgraph(&[(0.0, 0.0)], 0.5, UnreliableRule::AllGreyPairs).is_err());
    }

    #[test]
    fn geographic_check_by_construction_and_refutation() {
        let g = geometric_dualgraph(
            &[(0.0, 0.0), (1.5, 0.0), (3.0, 0.0)],
            2.0,
            UnreliableRule::AllGreyPairs,
        )
        .unwrap();
        assert!(check_geographic(&g).unwrap().holds);

        // complete G' on scattered points has a far pair in G'
        let mut rng = crate::seed::rng_from(11, "geo-scatter", &[]);
        use rand::Rng;
        let points: Vec<(f64, f64)> = (0..100)
            .map(|_| (rng.gen::<f64>() * 20.0, rng.gen::<f64>() * 20.0))
            .collect();
        // complete graph on these points, all edges reliable
        let mut edges = Vec::new();
        for u in 1..=100u32 {
            for v in (u + 1)..=100 {
                edges.push((u, v));
            }
        }
        let g = DualGraph::new(100, edges, []).unwrap();
        let check = check_geographic_against(&g, &points, 2.0).unwrap();
        assert!(!check.holds);
        let w = check.witness.unwrap();
        assert!(w.distance > 2.0);

        // n=2 complete graph with a close reliable pair satisfies both clauses
        let g2 = DualGraph::new(2, [(1, 2)], []).unwrap();
        assert!(
            check_geographic_against(&g2, &[(0.0, 0.0), (0.9, 0.0)], 1.5)
                .unwrap()
                .holds
        );

        let no_geo = ring_classical(4);
        assert_eq!(
            check_geographic(&no_geo).unwrap_err(),
            StructureError::MissingGeometry
        );
    }
}
