//! Baseline node processes and centralized ground-truth oracles.
//!
//! These baselines exist to exercise the framework: they follow the two-phase
//! broadcast contract, keep every random choice in the engine's coins, and
//! expose pure out-functions so the network constructions in `reductions` can
//! probe their empty-history decisions.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{
    Algorithm, BroadcastIntent, NodeProcess, OutFunction, ProcessInit, ReceivedMessage,
};
use crate::graph::{DualGraph, KnowledgeMode, NodeId, Payload};
use crate::structures::verify_mis;

#[derive(Debug, Error, PartialEq)]
pub enum AlgorithmError {
    #[error("probability {0} outside [0, 1]")]
    BadProbability(f64),
    #[error("unknown algorithm {0:?}")]
    UnknownName(String),
    #[error("bad parameters for {name}: {message}")]
    BadParams { name: String, message: String },
    #[error("exact enumeration limited to n <= {max}, got n = {n}")]
    TooLarge { n: u32, max: u32 },
    #[error("reliable graph is disconnected; no CDS exists")]
    Disconnected,
}

// ---------------------------------------------------------------------------
// decay-style MIS baseline
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayParams {
    /// Candidate broadcast probability decays 1/2, 1/4, ... within each phase.
    pub phase_len: u32,
    /// Join probability used by undecided nodes at output time.
    pub prior: f64,
    pub join_announce: f64,
    pub covered_announce: f64,
}

impl Default for DecayParams {
    fn default() -> Self {
        DecayParams {
            phase_len: 6,
            prior: 0.5,
            join_announce: 0.5,
            covered_announce: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayStatus {
    Joined,
    Covered,
    Undecided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum DecayMsg {
    Candidate,
    Joined,
    Covered,
}

fn decay_msg_kind(payload: &Payload) -> Option<DecayMsg> {
    match payload.0.first() {
        Some(b'C') => Some(DecayMsg::Candidate),
        Some(b'J') => Some(DecayMsg::Joined),
        Some(b'V') => Some(DecayMsg::Covered),
        _ => None,
    }
}

fn message_is_reliable(msg: &ReceivedMessage, neighbors: Option<&BTreeSet<NodeId>>) -> bool {
    match msg.reliable {
        Some(tag) => tag,
        None => neighbors.is_some_and(|ns| ns.contains(&msg.sender)),
    }
}

/// Derives a node's protocol status from its id, its known reliable
/// neighborhood, and its reception history alone. This is the whole point:
/// the terminal decision stays a pure function of the out-function inputs.
///
/// A node is covered once it hears a reliable join announcement. It joins
/// once every smaller known reliable neighbor has announced itself covered
/// (vacuously, a local id minimum joins immediately) and it was not covered
/// first. A passive node with no reliable reception has no neighborhood
/// knowledge and stays undecided.
pub fn decay_status(
    id: NodeId,
    neighbors: Option<&BTreeSet<NodeId>>,
    history: &[ReceivedMessage],
) -> DecayStatus {
    let mut first_join: Option<u32> = None;
    let mut first_covered: BTreeMap<NodeId, u32> = BTreeMap::new();
    let mut reliable_senders: BTreeSet<NodeId> = BTreeSet::new();
    for msg in history {
        if !message_is_reliable(msg, neighbors) {
            continue;
        }
        reliable_senders.insert(msg.sender);
        match decay_msg_kind(&msg.payload) {
            Some(DecayMsg::Joined) => {
                first_join = Some(first_join.map_or(msg.round, |r| r.min(msg.round)));
            }
            Some(DecayMsg::Covered) if msg.sender < id => {
                first_covered.entry(msg.sender).or_insert(msg.round);
            }
            _ => {}
        }
    }

    let knowledge = neighbors.is_some() || !reliable_senders.is_empty();
    let smaller: Vec<NodeId> = match neighbors {
        Some(ns) => ns.iter().copied().filter(|&v| v < id).collect(),
        None => reliable_senders
            .iter()
            .copied()
            .filter(|&v| v < id)
            .collect(),
    };
    // Round by which the last smaller neighbor announced coverage.
    let all_covered_by: Option<u32> = if smaller.is_empty() {
        Some(0)
    } else {
        smaller
            .iter()
            .map(|v| first_covered.get(v).copied())
            .collect::<Option<Vec<u32>>>()
            .map(|rounds| rounds.into_iter().max().unwrap_or(0))
    };

    let joined = knowledge
        && match (all_covered_by, first_join) {
            (Some(rv), Some(rj)) => rv < rj,
            (Some(_), None) => true,
            (None, _) => false,
        };
    if joined {
        DecayStatus::Joined
    } else if first_join.is_some() {
        DecayStatus::Covered
    } else {
        DecayStatus::Undecided
    }
}

struct DecayProcess {
    id: NodeId,
    neighbors: Option<BTreeSet<NodeId>>,
    history: Vec<ReceivedMessage>,
    params: DecayParams,
}

impl NodeProcess for DecayProcess {
    fn intent(&mut self, round: u32) -> BroadcastIntent {
        match decay_status(self.id, self.neighbors.as_ref(), &self.history) {
            DecayStatus::Joined => BroadcastIntent::with_probability(
                self.params.join_announce,
                Payload::text(format!("J:{}", self.id)),
            ),
            DecayStatus::Covered => BroadcastIntent::with_probability(
                self.params.covered_announce,
                Payload::text(format!("V:{}", self.id)),
            ),
            DecayStatus::Undecided => {
                let step = (round - 1) % self.params.phase_len + 1;
                BroadcastIntent::with_probability(
                    0.5f64.powi(step as i32),
                    Payload::text(format!("C:{}", self.id)),
                )
            }
        }
    }

    fn deliver(&mut self, _round: u32, message: Option<&ReceivedMessage>) {
        if let Some(msg) = message {
            self.history.push(msg.clone());
        }
    }
}

struct DecayMisOut {
    params: DecayParams,
}

impl OutFunction for DecayMisOut {
    fn join_probability(
        &self,
        id: NodeId,
        reliable_neighbors: Option<&BTreeSet<NodeId>>,
        history: &[ReceivedMessage],
    ) -> f64 {
        match decay_status(id, reliable_neighbors, history) {
            DecayStatus::Joined => 1.0,
            DecayStatus::Covered => 0.0,
            DecayStatus::Undecided => self.params.prior,
        }
    }
}

pub struct DecayMis {
    params: DecayParams,
    out: DecayMisOut,
}

impl DecayMis {
    pub fn new(params: DecayParams) -> Self {
        DecayMis {
            params,
            out: DecayMisOut { params },
        }
    }
}

impl Default for DecayMis {
    fn default() -> Self {
        DecayMis::new(DecayParams::default())
    }
}

impl Algorithm for DecayMis {
    fn name(&self) -> String {
        "decay-mis".into()
    }

    fn spawn(&self, init: &ProcessInit) -> Box<dyn NodeProcess> {
        Box::new(DecayProcess {
            id: init.id,
            neighbors: init.reliable_neighbors.clone(),
            history: Vec::new(),
            params: self.params,
        })
    }

    fn out_function(&self) -> &dyn OutFunction {
        &self.out
    }
}

// ---------------------------------------------------------------------------
// decay CDS wrapper
// ---------------------------------------------------------------------------

struct DecayCdsOut {
    params: DecayParams,
}

impl OutFunction for DecayCdsOut {
    fn join_probability(
        &self,
        id: NodeId,
        reliable_neighbors: Option<&BTreeSet<NodeId>>,
        history: &[ReceivedMessage],
    ) -> f64 {
        match decay_status(id, reliable_neighbors, history) {
            DecayStatus::Joined => 1.0,
            DecayStatus::Covered => {
                // A covered node bridging two joined nodes acts as connector.
                let joined_senders: BTreeSet<NodeId> = history
                    .iter()
                    .filter(|m| message_is_reliable(m, reliable_neighbors))
                    .filter(|m| decay_msg_kind(&m.payload) == Some(DecayMsg::Joined))
                    .map(|m| m.sender)
                    .collect();
                if joined_senders.len() >= 2 {
                    1.0
                } else {
                    0.0
                }
            }
            DecayStatus::Undecided => self.params.prior,
        }
    }
}

/// Same broadcast protocol as `DecayMis`; the out-function additionally keeps
/// covered nodes that heard two distinct joiners, so the output tends toward
/// a connected dominating set instead of an independent one.
pub struct DecayCds {
    params: DecayParams,
    out: DecayCdsOut,
}

impl DecayCds {
    pub fn new(params: DecayParams) -> Self {
        DecayCds {
            params,
            out: DecayCdsOut { params },
        }
    }
}

impl Default for DecayCds {
    fn default() -> Self {
        DecayCds::new(DecayParams::default())
    }
}

impl Algorithm for DecayCds {
    fn name(&self) -> String {
        "decay-cds".into()
    }

    fn spawn(&self, init: &ProcessInit) -> Box<dyn NodeProcess> {
        Box::new(DecayProcess {
            id: init.id,
            neighbors: init.reliable_neighbors.clone(),
            history: Vec::new(),
            params: self.params,
        })
    }

    fn out_function(&self) -> &dyn OutFunction {
        &self.out
    }
}

// ---------------------------------------------------------------------------
// round-robin full-information baseline
// ---------------------------------------------------------------------------

/// Serializes a map of known neighbor lists: `RR:1:2,6;2:1,3`.
fn round_robin_payload(known: &BTreeMap<NodeId, BTreeSet<NodeId>>) -> Payload {
    let body = known
        .iter()
        .map(|(id, ns)| {
            let list = ns.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
            format!("{id}:{list}")
        })
        .collect::<Vec<_>>()
        .join(";");
    Payload::text(format!("RR:{body}"))
}

fn parse_round_robin(payload: &Payload) -> Option<BTreeMap<NodeId, BTreeSet<NodeId>>> {
    let text = payload.as_text()?;
    let body = text.strip_prefix("RR:")?;
    let mut known = BTreeMap::new();
    if body.is_empty() {
        return Some(known);
    }
    for entry in body.split(';') {
        let (id_str, list) = entry.split_once(':')?;
        let id: NodeId = id_str.parse().ok()?;
        let mut ns = BTreeSet::new();
        if !list.is_empty() {
            for tok in list.split(',') {
                ns.insert(tok.parse().ok()?);
            }
        }
        known.insert(id, ns);
    }
    Some(known)
}

/// Merges everything learnable from a history (plus the node's own list)
/// into a map of neighbor lists.
fn round_robin_knowledge(
    id: NodeId,
    own_neighbors: &BTreeSet<NodeId>,
    history: &[ReceivedMessage],
) -> BTreeMap<NodeId, BTreeSet<NodeId>> {
    let mut known: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
    known.insert(id, own_neighbors.clone());
    for msg in history {
        if let Some(map) = parse_round_robin(&msg.payload) {
            for (node, ns) in map {
                known.entry(node).or_insert(ns);
            }
        }
    }
    known
}

fn greedy_mis_from_lists(n: u32, lists: &BTreeMap<NodeId, BTreeSet<NodeId>>) -> BTreeSet<NodeId> {
    let mut adj: Vec<BTreeSet<NodeId>> = vec![BTreeSet::new(); n as usize];
    for (&u, ns) in lists {
        for &v in ns {
            adj[(u - 1) as usize].insert(v);
            adj[(v - 1) as usize].insert(u);
        }
    }
    let mut mis: BTreeSet<NodeId> = BTreeSet::new();
    for u in 1..=n {
        if !adj[(u - 1) as usize].iter().any(|v| mis.contains(v)) {
            mis.insert(u);
        }
    }
    mis
}

struct RoundRobinProcess {
    id: NodeId,
    n: u32,
    neighbors: BTreeSet<NodeId>,
    history: Vec<ReceivedMessage>,
}

impl NodeProcess for RoundRobinProcess {
    fn intent(&mut self, round: u32) -> BroadcastIntent {
        // Slots repeat: node j owns rounds j, j + n, j + 2n, ... and relays
        // every neighbor list it has learned so far, so knowledge floods any
        // connected graph given enough cycles.
        if (round - 1) % self.n + 1 == self.id {
            let known = round_robin_knowledge(self.id, &self.neighbors, &self.history);
            BroadcastIntent::certain(round_robin_payload(&known))
        } else {
            BroadcastIntent::silent()
        }
    }

    fn deliver(&mut self, _round: u32, message: Option<&ReceivedMessage>) {
        if let Some(msg) = message {
            self.history.push(msg.clone());
        }
    }
}

struct RoundRobinOut {
    n: u32,
}

impl OutFunction for RoundRobinOut {
    fn join_probability(
        &self,
        id: NodeId,
        reliable_neighbors: Option<&BTreeSet<NodeId>>,
        history: &[ReceivedMessage],
    ) -> f64 {
        let own_neighbors = reliable_neighbors.expect("round-robin runs in advance mode");
        let known = round_robin_knowledge(id, own_neighbors, history);
        if known.len() == self.n as usize {
            // Full information: rebuild G and take the ascending greedy MIS.
            let mis = greedy_mis_from_lists(self.n, &known);
            if mis.contains(&id) {
                1.0
            } else {
                0.0
            }
        } else {
            // Blocked receptions: fall back to the prior-free local rule.
            let is_local_min =
                own_neighbors.is_empty() || own_neighbors.iter().all(|&v| id < v);
            if is_local_min {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// Full-information round robin: node `j` broadcasts in slot `j` everything
/// it knows (its own reliable neighbor list plus all relayed lists). A node
/// that ends up knowing all `n` lists rebuilds the graph and computes the
/// canonical greedy MIS locally.
pub struct RoundRobinFullInfo {
    n: u32,
    out: RoundRobinOut,
}

impl RoundRobinFullInfo {
    pub fn new(n: u32) -> Self {
        RoundRobinFullInfo {
            n,
            out: RoundRobinOut { n },
        }
    }
}

impl Algorithm for RoundRobinFullInfo {
    fn name(&self) -> String {
        "round-robin".into()
    }

    fn spawn(&self, init: &ProcessInit) -> Box<dyn NodeProcess> {
        Box::new(RoundRobinProcess {
            id: init.id,
            n: init.n,
            neighbors: init
                .reliable_neighbors
                .clone()
                .expect("round-robin runs in advance mode"),
            history: Vec::new(),
        })
    }

    fn out_function(&self) -> &dyn OutFunction {
        &self.out
    }

    fn requires_advance(&self) -> bool {
        true
    }

    fn check_compatible(&self, n: u32, mode: KnowledgeMode) -> Result<(), String> {
        if mode == KnowledgeMode::Passive {
            return Err("round-robin requires advance neighborhood knowledge".into());
        }
        if n != self.n {
            return Err(format!(
                "round-robin instantiated for n = {}, execution has n = {n}",
                self.n
            ));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// trivial baselines
// ---------------------------------------------------------------------------

struct SilentProcess;

impl NodeProcess for SilentProcess {
    fn intent(&mut self, _round: u32) -> BroadcastIntent {
        BroadcastIntent::silent()
    }

    fn deliver(&mut self, _round: u32, _message: Option<&ReceivedMessage>) {}
}

struct ConstantOut {
    p: f64,
}

impl OutFunction for ConstantOut {
    fn join_probability(
        &self,
        _id: NodeId,
        _reliable_neighbors: Option<&BTreeSet<NodeId>>,
        _history: &[ReceivedMessage],
    ) -> f64 {
        self.p
    }
}

/// Never broadcasts; joins with a fixed probability.
pub struct ConstantP {
    out: ConstantOut,
}

impl ConstantP {
    pub fn new(p: f64) -> Result<Self, AlgorithmError> {
        if !(0.0..=1.0).contains(&p) || p.is_nan() {
            return Err(AlgorithmError::BadProbability(p));
        }
        Ok(ConstantP {
            out: ConstantOut { p },
        })
    }
}

impl Algorithm for ConstantP {
    fn name(&self) -> String {
        "constant-p".into()
    }

    fn spawn(&self, _init: &ProcessInit) -> Box<dyn NodeProcess> {
        Box::new(SilentProcess)
    }

    fn out_function(&self) -> &dyn OutFunction {
        &self.out
    }
}

struct LocalMinOut;

impl OutFunction for LocalMinOut {
    fn join_probability(
        &self,
        id: NodeId,
        reliable_neighbors: Option<&BTreeSet<NodeId>>,
        history: &[ReceivedMessage],
    ) -> f64 {
        let smaller_known = match reliable_neighbors {
            Some(ns) => ns.iter().any(|&v| v < id),
            None => history
                .iter()
                .filter(|m| m.reliable == Some(true))
                .any(|m| m.sender < id),
        };
        if smaller_known {
            0.0
        } else {
            1.0
        }
    }
}

/// Never broadcasts; joins iff its id is smaller than every known reliable
/// neighbor.
pub struct LocalMin;

impl Algorithm for LocalMin {
    fn name(&self) -> String {
        "local-min".into()
    }

    fn spawn(&self, _init: &ProcessInit) -> Box<dyn NodeProcess> {
        Box::new(SilentProcess)
    }

    fn out_function(&self) -> &dyn OutFunction {
        &LocalMinOut
    }
}

// ---------------------------------------------------------------------------
// centralized oracles
// ---------------------------------------------------------------------------

/// Canonical greedy MIS over the reliable graph, ascending id order.
pub fn greedy_mis(graph: &DualGraph) -> BTreeSet<NodeId> {
    let mut mis = BTreeSet::new();
    for u in graph.node_ids() {
        if !graph.reliable_neighbors(u).iter().any(|v| mis.contains(v)) {
            mis.insert(u);
        }
    }
    mis
}

const EXACT_MIS_MAX_N: u32 = 12;

/// Every valid MIS of the reliable graph, by exhaustive enumeration.
pub fn enumerate_mis(graph: &DualGraph) -> Result<Vec<BTreeSet<NodeId>>, AlgorithmError> {
    let n = graph.n();
    if n > EXACT_MIS_MAX_N {
        return Err(AlgorithmError::TooLarge {
            n,
            max: EXACT_MIS_MAX_N,
        });
    }
    let mut all = Vec::new();
    for mask in 0u32..(1 << n) {
        let set: BTreeSet<NodeId> = (1..=n).filter(|&id| mask & (1 << (id - 1)) != 0).collect();
        if verify_mis(graph, &set).valid {
            all.push(set);
        }
    }
    Ok(all)
}

/// Greedy MIS plus shortest-path connectors until the induced subgraph is
/// connected. Ground truth for desk-scale CDS comparisons, not an
/// approximation algorithm.
pub fn cds_from_mis(graph: &DualGraph) -> Result<BTreeSet<NodeId>, AlgorithmError> {
    let n = graph.n();
    if n == 0 {
        return Ok(BTreeSet::new());
    }
    let mut cds = greedy_mis(graph);
    loop {
        let comp = components_within(graph, &cds);
        if comp.len() <= 1 {
            return Ok(cds);
        }
        // BFS from the first component through the whole graph to the
        // nearest vertex of another component; add the path interior.
        let source: BTreeSet<NodeId> = comp[0].clone();
        let mut parent: BTreeMap<NodeId, NodeId> = BTreeMap::new();
        let mut queue: std::collections::VecDeque<NodeId> = source.iter().copied().collect();
        let mut seen: BTreeSet<NodeId> = source.clone();
        let mut hit: Option<NodeId> = None;
        'bfs: while let Some(u) = queue.pop_front() {
            for &v in graph.reliable_neighbors(u) {
                if seen.insert(v) {
                    parent.insert(v, u);
                    if cds.contains(&v) {
                        hit = Some(v);
                        break 'bfs;
                    }
                    queue.push_back(v);
                }
            }
        }
        let Some(mut v) = hit else {
            return Err(AlgorithmError::Disconnected);
        };
        while let Some(&p) = parent.get(&v) {
            if !source.contains(&v) {
                cds.insert(v);
            }
            v = p;
        }
    }
}

fn components_within(graph: &DualGraph, set: &BTreeSet<NodeId>) -> Vec<BTreeSet<NodeId>> {
    let mut remaining: BTreeSet<NodeId> = set.clone();
    let mut comps = Vec::new();
    while let Some(&start) = remaining.iter().next() {
        let mut comp = BTreeSet::new();
        let mut stack = vec![start];
        remaining.remove(&start);
        comp.insert(start);
        while let Some(u) = stack.pop() {
            for &v in graph.reliable_neighbors(u) {
                if remaining.remove(&v) {
                    comp.insert(v);
                    stack.push(v);
                }
            }
        }
        comps.push(comp);
    }
    comps
}

// ---------------------------------------------------------------------------
// registry
// ---------------------------------------------------------------------------

/// Config form: `{"name": "decay-mis", "params": {...}}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AlgorithmConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub params: serde_json::Value,
}

impl AlgorithmConfig {
    pub fn named(name: &str) -> Self {
        AlgorithmConfig {
            name: name.into(),
            params: serde_json::Value::Null,
        }
    }

    /// Instantiates the algorithm. `n` is the execution's network size,
    /// needed by round-robin.
    pub fn build(&self, n: u32) -> Result<Arc<dyn Algorithm>, AlgorithmError> {
        let bad = |message: String| AlgorithmError::BadParams {
            name: self.name.clone(),
            message,
        };
        match self.name.as_str() {
            "decay-mis" | "decay-cds" => {
                let params = if self.params.is_null() {
                    DecayParams::default()
                } else {
                    serde_json::from_value(self.params.clone())
                        .map_err(|e| bad(e.to_string()))?
                };
                if self.name == "decay-mis" {
                    Ok(Arc::new(DecayMis::new(params)))
                } else {
                    Ok(Arc::new(DecayCds::new(params)))
                }
            }
            "round-robin" => Ok(Arc::new(RoundRobinFullInfo::new(n))),
            "constant-p" => {
                #[derive(Deserialize)]
                struct P {
                    p: f64,
                }
                let p: P = serde_json::from_value(self.params.clone())
                    .map_err(|e| bad(e.to_string()))?;
                Ok(Arc::new(ConstantP::new(p.p)?))
            }
            other => Err(AlgorithmError::UnknownName(other.to_string())),
        }
    }
}
