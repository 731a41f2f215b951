//! Dual graph topology: a reliable edge set `E` present in every round and an
//! extra set `E' \ E` of unreliable edges the adversary may activate.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Node identifier. Ids are the integers `1..=n`.
pub type NodeId = u32;

/// Unordered edge, normalized so the smaller id comes first.
pub fn edge(u: NodeId, v: NodeId) -> (NodeId, NodeId) {
    if u <= v {
        (u, v)
    } else {
        (v, u)
    }
}

/// How nodes learn about their reliable neighborhood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KnowledgeMode {
    /// Each process is handed the ids of its reliable neighbors at start.
    Advance,
    /// Receptions carry a reliability tag instead.
    Passive,
}

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("node id {0} outside 1..={1}")]
    IdOutOfRange(NodeId, u32),
    #[error("self loop at node {0}")]
    SelfLoop(NodeId),
    #[error("edge ({0}, {1}) appears in both the reliable and unreliable sets")]
    OverlappingEdge(NodeId, NodeId),
    #[error("gamma must be >= 1, got {0}")]
    GammaTooSmall(f64),
    #[error("embedding has {got} points, expected {expected}")]
    EmbeddingSizeMismatch { got: usize, expected: usize },
    #[error("embedding present without gamma (or vice versa)")]
    IncompleteGeometry,
    #[error("geographic constraint violated by pair ({u}, {v}) at distance {distance}")]
    GeographicViolation { u: NodeId, v: NodeId, distance: f64 },
    #[error("duplicate embedding point for nodes {0} and {1}")]
    DuplicatePoint(NodeId, NodeId),
}

/// Opaque message payload. Serializes as `{"text": ...}` when the bytes are
/// printable ASCII and `{"hex": ...}` otherwise, so transcripts stay readable
/// without losing determinism.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Payload(pub Vec<u8>);

impl Payload {
    pub fn text(s: impl Into<String>) -> Self {
        Payload(s.into().into_bytes())
    }

    pub fn empty() -> Self {
        Payload(Vec::new())
    }

    pub fn as_text(&self) -> Option<&str> {
        std::str::from_utf8(&self.0).ok()
    }

    fn printable(&self) -> bool {
        !self.0.is_empty() && self.0.iter().all(|b| (0x20..0x7f).contains(b))
    }
}

impl fmt::Display for Payload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.printable() {
            write!(f, "{}", self.as_text().unwrap())
        } else {
            for b in &self.0 {
                write!(f, "{b:02x}")?;
            }
            Ok(())
        }
    }
}

impl Serialize for Payload {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = serializer.serialize_map(Some(1))?;
        if self.printable() {
            map.serialize_entry("text", self.as_text().unwrap())?;
        } else {
            let hex: String = self.0.iter().map(|b| format!("{b:02x}")).collect();
            map.serialize_entry("hex", &hex)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for Payload {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        enum Repr {
            #[serde(rename = "text")]
            Text(String),
            #[serde(rename = "hex")]
            Hex(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Text(s) => Ok(Payload(s.into_bytes())),
            Repr::Hex(h) => {
                let mut bytes = Vec::with_capacity(h.len() / 2);
                let chars: Vec<char> = h.chars().collect();
                for pair in chars.chunks(2) {
                    let s: String = pair.iter().collect();
                    let b = u8::from_str_radix(&s, 16)
                        .map_err(|e| serde::de::Error::custom(format!("bad hex: {e}")))?;
                    bytes.push(b);
                }
                Ok(Payload(bytes))
            }
        }
    }
}

/// The dual graph `(G, G')`: `reliable` is `E`, `unreliable_extra` is
/// `E' \ E`. Optionally carries a plane embedding and the constant `gamma`
/// of the geographic constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct DualGraph {
    n: u32,
    reliable: BTreeSet<(NodeId, NodeId)>,
    unreliable_extra: BTreeSet<(NodeId, NodeId)>,
    embedding: Option<Vec<(f64, f64)>>,
    gamma: Option<f64>,
    // adjacency caches, indexed by id - 1
    rel_adj: Vec<Vec<NodeId>>,
    extra_adj: Vec<Vec<NodeId>>,
    gprime_complete: bool,
}

impl DualGraph {
    pub fn new<I, J>(n: u32, reliable: I, unreliable_extra: J) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (NodeId, NodeId)>,
        J: IntoIterator<Item = (NodeId, NodeId)>,
    {
        let mut rel = BTreeSet::new();
        let mut extra = BTreeSet::new();
        for (u, v) in reliable {
            rel.insert(Self::check_edge(n, u, v)?);
        }
        for (u, v) in unreliable_extra {
            let e = Self::check_edge(n, u, v)?;
            if rel.contains(&e) {
                return Err(GraphError::OverlappingEdge(e.0, e.1));
            }
            extra.insert(e);
        }
        let mut g = DualGraph {
            n,
            reliable: rel,
            unreliable_extra: extra,
            embedding: None,
            gamma: None,
            rel_adj: Vec::new(),
            extra_adj: Vec::new(),
            gprime_complete: false,
        };
        g.rebuild_caches();
        Ok(g)
    }

    fn check_edge(n: u32, u: NodeId, v: NodeId) -> Result<(NodeId, NodeId), GraphError> {
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        for id in [u, v] {
            if id < 1 || id > n {
                return Err(GraphError::IdOutOfRange(id, n));
            }
        }
        Ok(edge(u, v))
    }

    fn rebuild_caches(&mut self) {
        let n = self.n as usize;
        self.rel_adj = vec![Vec::new(); n];
        self.extra_adj = vec![Vec::new(); n];
        for &(u, v) in &self.reliable {
            self.rel_adj[(u - 1) as usize].push(v);
            self.rel_adj[(v - 1) as usize].push(u);
        }
        for &(u, v) in &self.unreliable_extra {
            self.extra_adj[(u - 1) as usize].push(v);
            self.extra_adj[(v - 1) as usize].push(u);
        }
        for adj in self.rel_adj.iter_mut().chain(self.extra_adj.iter_mut()) {
            adj.sort_unstable();
        }
        let total = self.reliable.len() + self.unreliable_extra.len();
        self.gprime_complete = self.n >= 2 && total == (n * (n - 1)) / 2;
    }

    /// Attaches an embedding and gamma, checking the geographic constraint.
    pub fn with_geometry(
        mut self,
        points: Vec<(f64, f64)>,
        gamma: f64,
    ) -> Result<Self, GraphError> {
        if gamma < 1.0 {
            return Err(GraphError::GammaTooSmall(gamma));
        }
        if points.len() != self.n as usize {
            return Err(GraphError::EmbeddingSizeMismatch {
                got: points.len(),
                expected: self.n as usize,
            });
        }
        self.embedding = Some(points);
        self.gamma = Some(gamma);
        if let Some(w) = self.geographic_witness() {
            return Err(GraphError::GeographicViolation {
                u: w.u,
                v: w.v,
                distance: w.distance,
            });
        }
        Ok(self)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        1..=self.n
    }

    pub fn reliable_edges(&self) -> &BTreeSet<(NodeId, NodeId)> {
        &self.reliable
    }

    pub fn unreliable_extra_edges(&self) -> &BTreeSet<(NodeId, NodeId)> {
        &self.unreliable_extra
    }

    pub fn embedding(&self) -> Option<&[(f64, f64)]> {
        self.embedding.as_deref()
    }

    pub fn gamma(&self) -> Option<f64> {
        self.gamma
    }

    pub fn is_reliable(&self, u: NodeId, v: NodeId) -> bool {
        self.reliable.contains(&edge(u, v))
    }

    pub fn in_gprime(&self, u: NodeId, v: NodeId) -> bool {
        let e = edge(u, v);
        self.reliable.contains(&e) || self.unreliable_extra.contains(&e)
    }

    pub fn reliable_neighbors(&self, u: NodeId) -> &[NodeId] {
        &self.rel_adj[(u - 1) as usize]
    }

    pub fn unreliable_extra_neighbors(&self, u: NodeId) -> &[NodeId] {
        &self.extra_adj[(u - 1) as usize]
    }

    pub fn reliable_neighbor_set(&self, u: NodeId) -> BTreeSet<NodeId> {
        self.reliable_neighbors(u).iter().copied().collect()
    }

    /// True when `E'` is the complete graph on `[n]`.
    pub fn gprime_complete(&self) -> bool {
        self.gprime_complete
    }

    pub fn contains_id(&self, u: NodeId) -> bool {
        (1..=self.n).contains(&u)
    }

    /// First geographic-constraint violation, if any. `None` when the
    /// constraint holds or no geometry is attached.
    pub fn geographic_witness(&self) -> Option<GeoViolation> {
        let (points, gamma) = match (&self.embedding, self.gamma) {
            (Some(p), Some(g)) => (p, g),
            _ => return None,
        };
        for u in 1..=self.n {
            for v in (u + 1)..=self.n {
                let d = dist(points[(u - 1) as usize], points[(v - 1) as usize]);
                if d <= 1.0 && !self.is_reliable(u, v) {
                    return Some(GeoViolation {
                        u,
                        v,
                        distance: d,
                        clause: GeoClause::CloseButNotReliable,
                    });
                }
                if d > gamma && self.in_gprime(u, v) {
                    return Some(GeoViolation {
                        u,
                        v,
                        distance: d,
                        clause: GeoClause::FarButInGPrime,
                    });
                }
            }
        }
        None
    }

    /// Is the reliable graph an `n`-cycle?
    pub fn reliable_is_ring(&self) -> bool {
        if self.n < 3 || self.reliable.len() != self.n as usize {
            return false;
        }
        if self.node_ids().any(|u| self.reliable_neighbors(u).len() != 2) {
            return false;
        }
        // connected + 2-regular + |E| = n  =>  single cycle
        let mut seen = vec![false; self.n as usize];
        let mut stack = vec![1];
        seen[0] = true;
        let mut count = 0;
        while let Some(u) = stack.pop() {
            count += 1;
            for &v in self.reliable_neighbors(u) {
                if !seen[(v - 1) as usize] {
                    seen[(v - 1) as usize] = true;
                    stack.push(v);
                }
            }
        }
        count == self.n
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, String> {
        serde_json::from_str(s).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::from_json(&text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeoViolation {
    pub u: NodeId,
    pub v: NodeId,
    pub distance: f64,
    pub clause: GeoClause,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GeoClause {
    /// `d(u, v) <= 1` but the pair is not a reliable edge.
    CloseButNotReliable,
    /// `d(u, v) > gamma` but the pair is in `G'`.
    FarButInGPrime,
}

pub fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// On-disk form: `{"n": .., "reliable": [[u, v], ..], "unreliable": [[u, v], ..],
/// "embedding": [[x, y], ..]?, "gamma": ..?}`.
#[derive(Serialize, Deserialize)]
struct GraphFile {
    n: u32,
    reliable: Vec<(NodeId, NodeId)>,
    unreliable: Vec<(NodeId, NodeId)>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    embedding: Option<Vec<(f64, f64)>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    gamma: Option<f64>,
}

impl Serialize for DualGraph {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        GraphFile {
            n: self.n,
            reliable: self.reliable.iter().copied().collect(),
            unreliable: self.unreliable_extra.iter().copied().collect(),
            embedding: self.embedding.clone(),
            gamma: self.gamma,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DualGraph {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let file = GraphFile::deserialize(deserializer)?;
        let g = DualGraph::new(file.n, file.reliable, file.unreliable)
            .map_err(serde::de::Error::custom)?;
        match (file.embedding, file.gamma) {
            (Some(points), Some(gamma)) => g
                .with_geometry(points, gamma)
                .map_err(serde::de::Error::custom),
            (None, None) => Ok(g),
            _ => Err(serde::de::Error::custom(GraphError::IncompleteGeometry)),
        }
    }
}

/// Ring on `n` nodes: reliable edges between consecutive ids (wrapping), and
/// every remaining pair unreliable, so `G'` is complete.
pub fn ring_with_complete_gprime(n: u32) -> DualGraph {
    assert!(n >= 3, "ring needs n >= 3");
    let mut rel = Vec::new();
    for i in 1..=n {
        let j = if i == n { 1 } else { i + 1 };
        rel.push((i, j));
    }
    let rel_set: BTreeSet<_> = rel.iter().map(|&(u, v)| edge(u, v)).collect();
    let mut extra = Vec::new();
    for u in 1..=n {
        for v in (u + 1)..=n {
            if !rel_set.contains(&(u, v)) {
                extra.push((u, v));
            }
        }
    }
    DualGraph::new(n, rel, extra).expect("ring construction is valid")
}

/// Classical-model ring: `G = G'`, no unreliable edges at all.
pub fn ring_classical(n: u32) -> DualGraph {
    assert!(n >= 3, "ring needs n >= 3");
    let mut rel = Vec::new();
    for i in 1..=n {
        let j = if i == n { 1 } else { i + 1 };
        rel.push((i, j));
    }
    DualGraph::new(n, rel, []).expect("ring construction is valid")
}

/// `G = G'` = complete graph on `[n]`.
pub fn complete_classical(n: u32) -> DualGraph {
    let mut rel = Vec::new();
    for u in 1..=n {
        for v in (u + 1)..=n {
            rel.push((u, v));
        }
    }
    DualGraph::new(n, rel, []).expect("complete construction is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_overlapping_edge_sets() {
        let err = DualGraph::new(3, [(1, 2)], [(2, 1)]).unwrap_err();
        assert_eq!(err, GraphError::OverlappingEdge(1, 2));
    }

    #[test]
    fn rejects_out_of_range_and_self_loops() {
        assert_eq!(
            DualGraph::new(3, [(1, 4)], []).unwrap_err(),
            GraphError::IdOutOfRange(4, 3)
        );
        assert_eq!(
            DualGraph::new(3, [(2, 2)], []).unwrap_err(),
            GraphError::SelfLoop(2)
        );
    }

    #[test]
    fn ring_shape() {
        let g = ring_with_complete_gprime(6);
        assert_eq!(g.reliable_edges().len(), 6);
        assert_eq!(g.unreliable_extra_edges().len(), 15 - 6);
        assert!(g.gprime_complete());
        assert!(g.reliable_is_ring());
        assert_eq!(g.reliable_neighbors(1), &[2, 6]);
    }

    #[test]
    fn json_round_trip() {
        let g = ring_with_complete_gprime(5);
        let back = DualGraph::from_json(&g.to_json()).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn payload_serialization_forms() {
        let text = Payload::text("J:12");
        assert_eq!(serde_json::to_string(&text).unwrap(), r#"{"text":"J:12"}"#);
        let raw = Payload(vec![0, 255]);
        assert_eq!(serde_json::to_string(&raw).unwrap(), r#"{"hex":"00ff"}"#);
        for p in [text, raw, Payload::empty()] {
            let json = serde_json::to_string(&p).unwrap();
            let back: Payload = serde_json::from_str(&json).unwrap();
            assert_eq!(p, back);
        }
    }

    #[test]
    fn geometry_validation() {
        let g = DualGraph::new(2, [(1, 2)], [])
            .unwrap()
            .with_geometry(vec![(0.0, 0.0), (0.5, 0.0)], 2.0)
            .unwrap();
        assert!(g.geographic_witness().is_none());

        // close pair with no reliable edge violates the constraint
        let err = DualGraph::new(2, [], [(1, 2)])
            .unwrap()
            .with_geometry(vec![(0.0, 0.0), (0.5, 0.0)], 2.0)
            .unwrap_err();
        assert!(matches!(err, GraphError::GeographicViolation { .. }));
    }
}
