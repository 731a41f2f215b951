//! Synchronous round engine.
//!
//! Reception rule per round: node `u` receives message `m` from `v` iff `u`
//! is not transmitting, `v` is transmitting `m`, and `v` is the only
//! transmitter among `u`'s neighbors in the round topology (reliable edges
//! plus the adversary's chosen unreliable edges). There is no collision
//! detection: a collision and silence are indistinguishable to the receiver.
//!
//! Broadcast decisions are two-phase. Processes declare a probability and a
//! payload first; the engine flips the coin afterwards. The declared
//! probabilities are exactly what an online adaptive adversary is allowed to
//! see before the flips.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::Adversary;
use crate::graph::{edge, DualGraph, KnowledgeMode, NodeId, Payload};
use crate::seed::uniform_coin;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("unknown node id {0}")]
    UnknownId(NodeId),
    #[error("adversary edge ({0}, {1}) is not in E' \\ E")]
    EdgeOutsideGPrime(NodeId, NodeId),
    #[error("node {id} declared broadcast probability {p} outside [0, 1]")]
    InvalidBroadcastProbability { id: NodeId, p: f64 },
    #[error("out function returned probability {p} outside [0, 1] for node {id}")]
    InvalidJoinProbability { id: NodeId, p: f64 },
    #[error("algorithm incompatible with this execution: {0}")]
    IncompatibleAlgorithm(String),
}

/// The adversary's per-round pick from `E' \ E`, kept symbolic so that
/// all-edges rounds on dense graphs cost nothing to record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EdgeChoice {
    /// No unreliable edges this round.
    Empty,
    /// Every edge of `E' \ E`.
    All,
    /// An explicit subset.
    Subset { edges: BTreeSet<(NodeId, NodeId)> },
}

impl EdgeChoice {
    pub fn subset<I: IntoIterator<Item = (NodeId, NodeId)>>(edges: I) -> Self {
        EdgeChoice::Subset {
            edges: edges.into_iter().map(|(u, v)| edge(u, v)).collect(),
        }
    }

    pub fn contains(&self, graph: &DualGraph, u: NodeId, v: NodeId) -> bool {
        match self {
            EdgeChoice::Empty => false,
            EdgeChoice::All => graph
                .unreliable_extra_edges()
                .contains(&edge(u, v)),
            EdgeChoice::Subset { edges } => edges.contains(&edge(u, v)),
        }
    }

    pub fn validate(&self, graph: &DualGraph) -> Result<(), EngineError> {
        if let EdgeChoice::Subset { edges } = self {
            for &(u, v) in edges {
                if !graph.contains_id(u) {
                    return Err(EngineError::UnknownId(u));
                }
                if !graph.contains_id(v) {
                    return Err(EngineError::UnknownId(v));
                }
                if !graph.unreliable_extra_edges().contains(&edge(u, v)) {
                    return Err(EngineError::EdgeOutsideGPrime(u, v));
                }
            }
        }
        Ok(())
    }

    /// Unreliable neighbors of `u` activated by this choice.
    fn active_extra_neighbors<'a>(
        &'a self,
        graph: &'a DualGraph,
        u: NodeId,
    ) -> Box<dyn Iterator<Item = NodeId> + 'a> {
        match self {
            EdgeChoice::Empty => Box::new(std::iter::empty()),
            EdgeChoice::All => Box::new(graph.unreliable_extra_neighbors(u).iter().copied()),
            EdgeChoice::Subset { edges } => Box::new(edges.iter().filter_map(move |&(a, b)| {
                if a == u {
                    Some(b)
                } else if b == u {
                    Some(a)
                } else {
                    None
                }
            })),
        }
    }
}

/// Ground-truth record of one reception.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reception {
    pub round: u32,
    pub sender: NodeId,
    pub payload: Payload,
    /// True iff the sender-receiver pair is a reliable edge. Whether the
    /// process gets to see this depends on the knowledge mode.
    pub reliable: bool,
}

/// What a process sees of a reception. The tag is `Some` only in passive
/// mode; advance-mode processes already know their reliable neighbors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceivedMessage {
    pub round: u32,
    pub sender: NodeId,
    pub payload: Payload,
    pub reliable: Option<bool>,
}

/// Per-round entry of the execution transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTranscript {
    pub round: u32,
    /// Declared broadcast probabilities, ids ascending.
    pub declared: Vec<f64>,
    /// Realized broadcast set `B_r` with payloads.
    pub broadcasts: Vec<(NodeId, Payload)>,
    pub adversary_edges: EdgeChoice,
    pub receptions: BTreeMap<NodeId, Reception>,
}

/// Broadcast-phase declaration: probability of transmitting plus the payload
/// that would be sent.
#[derive(Debug, Clone, PartialEq)]
pub struct BroadcastIntent {
    pub probability: f64,
    pub payload: Payload,
}

impl BroadcastIntent {
    pub fn silent() -> Self {
        BroadcastIntent {
            probability: 0.0,
            payload: Payload::empty(),
        }
    }

    pub fn certain(payload: Payload) -> Self {
        BroadcastIntent {
            probability: 1.0,
            payload,
        }
    }

    pub fn with_probability(probability: f64, payload: Payload) -> Self {
        BroadcastIntent {
            probability,
            payload,
        }
    }
}

/// Initialization data handed to each process.
#[derive(Debug, Clone)]
pub struct ProcessInit {
    pub id: NodeId,
    pub n: u32,
    pub mode: KnowledgeMode,
    /// Present exactly in advance mode.
    pub reliable_neighbors: Option<BTreeSet<NodeId>>,
}

/// One node's behavior: declare a broadcast intent before the coin is
/// flipped, then consume whatever the round delivered.
pub trait NodeProcess {
    fn intent(&mut self, round: u32) -> BroadcastIntent;
    fn deliver(&mut self, round: u32, message: Option<&ReceivedMessage>);
}

/// Terminal decision map: `(id, advance neighbors if any, message history)`
/// to a join probability. Must be a pure function of its arguments; the coin
/// that resolves it belongs to the engine.
pub trait OutFunction: Send + Sync {
    fn join_probability(
        &self,
        id: NodeId,
        reliable_neighbors: Option<&BTreeSet<NodeId>>,
        history: &[ReceivedMessage],
    ) -> f64;
}

/// A named distributed algorithm: spawns one process per node and exposes
/// the terminal out-function.
pub trait Algorithm: Send + Sync {
    fn name(&self) -> String;
    fn spawn(&self, init: &ProcessInit) -> Box<dyn NodeProcess>;
    fn out_function(&self) -> &dyn OutFunction;
    fn requires_advance(&self) -> bool {
        false
    }
    fn check_compatible(&self, _n: u32, mode: KnowledgeMode) -> Result<(), String> {
        if self.requires_advance() && mode == KnowledgeMode::Passive {
            return Err(format!(
                "{} requires advance neighborhood knowledge",
                self.name()
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExecutionResult {
    pub rounds: Vec<RoundTranscript>,
    /// Join bit per node, ids ascending.
    pub outputs: Vec<bool>,
    /// The out-function values the bits were flipped from.
    pub join_probabilities: Vec<f64>,
    /// Per-node reception history as the processes saw it.
    pub histories: Vec<Vec<ReceivedMessage>>,
}

impl ExecutionResult {
    pub fn joined_set(&self) -> BTreeSet<NodeId> {
        self.outputs
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| (i + 1) as NodeId)
            .collect()
    }
}

/// Resolves one round of reception behavior.
///
/// `broadcasters` maps transmitting ids to their payloads. Returns the map of
/// receivers to ground-truth receptions.
pub fn resolve_round(
    graph: &DualGraph,
    adversary_edges: &EdgeChoice,
    broadcasters: &BTreeMap<NodeId, Payload>,
    round: u32,
) -> Result<BTreeMap<NodeId, Reception>, EngineError> {
    adversary_edges.validate(graph)?;
    for &id in broadcasters.keys() {
        if !graph.contains_id(id) {
            return Err(EngineError::UnknownId(id));
        }
    }

    let mut receptions = BTreeMap::new();

    // Complete G' with every edge active: one transmitter reaches everyone,
    // two or more collide everywhere.
    if matches!(adversary_edges, EdgeChoice::All) && graph.gprime_complete() {
        if broadcasters.len() == 1 {
            let (&sender, payload) = broadcasters.iter().next().expect("len 1");
            for u in graph.node_ids() {
                if u == sender {
                    continue;
                }
                receptions.insert(
                    u,
                    Reception {
                        round,
                        sender,
                        payload: payload.clone(),
                        reliable: graph.is_reliable(sender, u),
                    },
                );
            }
        }
        return Ok(receptions);
    }

    for u in graph.node_ids() {
        if broadcasters.contains_key(&u) {
            continue; // transmitters hear nothing
        }
        let mut heard: Option<NodeId> = None;
        let mut collided = false;
        let neighbors = graph
            .reliable_neighbors(u)
            .iter()
            .copied()
            .chain(adversary_edges.active_extra_neighbors(graph, u));
        for v in neighbors {
            if broadcasters.contains_key(&v) {
                if heard.is_some() {
                    collided = true;
                    break;
                }
                heard = Some(v);
            }
        }
        if collided {
            continue;
        }
        if let Some(sender) = heard {
            receptions.insert(
                u,
                Reception {
                    round,
                    sender,
                    payload: broadcasters[&sender].clone(),
                    reliable: graph.is_reliable(sender, u),
                },
            );
        }
    }
    Ok(receptions)
}

/// Engine stage marker, used to check the phase ordering that separates the
/// adversary classes (tests install a recording hook).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineEvent {
    IntentsCollected(u32),
    AdversaryChose(u32),
    CoinsResolved(u32),
    Delivered(u32),
}

pub fn run_execution(
    graph: &DualGraph,
    adversary: &mut Adversary,
    algorithm: &dyn Algorithm,
    mode: KnowledgeMode,
    rounds: u32,
    master_seed: u64,
) -> Result<ExecutionResult, EngineError> {
    run_execution_hooked(graph, adversary, algorithm, mode, rounds, master_seed, &mut |_| {})
}

pub(crate) fn run_execution_hooked(
    graph: &DualGraph,
    adversary: &mut Adversary,
    algorithm: &dyn Algorithm,
    mode: KnowledgeMode,
    rounds: u32,
    master_seed: u64,
    hook: &mut dyn FnMut(EngineEvent),
) -> Result<ExecutionResult, EngineError> {
    algorithm
        .check_compatible(graph.n(), mode)
        .map_err(EngineError::IncompatibleAlgorithm)?;

    let n = graph.n();
    let mut processes: Vec<Box<dyn NodeProcess>> = graph
        .node_ids()
        .map(|id| {
            let init = ProcessInit {
                id,
                n,
                mode,
                reliable_neighbors: match mode {
                    KnowledgeMode::Advance => Some(graph.reliable_neighbor_set(id)),
                    KnowledgeMode::Passive => None,
                },
            };
            algorithm.spawn(&init)
        })
        .collect();

    let mut transcript: Vec<RoundTranscript> = Vec::with_capacity(rounds as usize);
    let mut histories: Vec<Vec<ReceivedMessage>> = vec![Vec::new(); n as usize];

    for round in 1..=rounds {
        // Phase a: intents, before any randomness for this round is drawn.
        let mut declared = Vec::with_capacity(n as usize);
        let mut payloads = Vec::with_capacity(n as usize);
        for (i, process) in processes.iter_mut().enumerate() {
            let intent = process.intent(round);
            if !(0.0..=1.0).contains(&intent.probability) || intent.probability.is_nan() {
                return Err(EngineError::InvalidBroadcastProbability {
                    id: (i + 1) as NodeId,
                    p: intent.probability,
                });
            }
            declared.push(intent.probability);
            payloads.push(intent.payload);
        }
        hook(EngineEvent::IntentsCollected(round));

        // Online adversaries (and static ones) choose before the coin flips.
        let early_choice = adversary.choose_online(graph, round, &declared, &transcript);
        if early_choice.is_some() {
            hook(EngineEvent::AdversaryChose(round));
        }

        // Flip the broadcast coins.
        let mut broadcasters: BTreeMap<NodeId, Payload> = BTreeMap::new();
        for id in graph.node_ids() {
            let p = declared[(id - 1) as usize];
            if uniform_coin(master_seed, "bcast", &[round as u64, id as u64]) < p {
                broadcasters.insert(id, payloads[(id - 1) as usize].clone());
            }
        }
        hook(EngineEvent::CoinsResolved(round));

        let choice = match early_choice {
            Some(c) => c,
            None => {
                // Offline adaptive: sees the realized broadcast set.
                let realized: BTreeSet<NodeId> = broadcasters.keys().copied().collect();
                let c = adversary.choose_offline(graph, round, &declared, &transcript, &realized);
                hook(EngineEvent::AdversaryChose(round));
                c
            }
        };
        choice.validate(graph)?;

        let receptions = resolve_round(graph, &choice, &broadcasters, round)?;

        // Phase b: deliver.
        for id in graph.node_ids() {
            let view = receptions.get(&id).map(|r| ReceivedMessage {
                round: r.round,
                sender: r.sender,
                payload: r.payload.clone(),
                reliable: match mode {
                    KnowledgeMode::Passive => Some(r.reliable),
                    KnowledgeMode::Advance => None,
                },
            });
            processes[(id - 1) as usize].deliver(round, view.as_ref());
            if let Some(msg) = view {
                histories[(id - 1) as usize].push(msg);
            }
        }
        hook(EngineEvent::Delivered(round));

        transcript.push(RoundTranscript {
            round,
            declared,
            broadcasts: broadcasters.into_iter().collect(),
            adversary_edges: choice,
            receptions,
        });
    }

    // Terminal decisions.
    let out = algorithm.out_function();
    let mut outputs = Vec::with_capacity(n as usize);
    let mut join_probabilities = Vec::with_capacity(n as usize);
    for id in graph.node_ids() {
        let neighbors = match mode {
            KnowledgeMode::Advance => Some(graph.reliable_neighbor_set(id)),
            KnowledgeMode::Passive => None,
        };
        let p = out.join_probability(id, neighbors.as_ref(), &histories[(id - 1) as usize]);
        if !(0.0..=1.0).contains(&p) || p.is_nan() {
            return Err(EngineError::InvalidJoinProbability { id, p });
        }
        join_probabilities.push(p);
        outputs.push(uniform_coin(master_seed, "out", &[id as u64]) < p);
    }

    Ok(ExecutionResult {
        rounds: transcript,
        outputs,
        join_probabilities,
        histories,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::Adversary;
    use crate::graph::ring_with_complete_gprime;

    fn bmap(entries: &[(NodeId, &str)]) -> BTreeMap<NodeId, Payload> {
        entries
            .iter()
            .map(|&(id, s)| (id, Payload::text(s)))
            .collect()
    }

    #[test]
    fn single_sender_base_case() {
        // 2-node graph, reliable edge, node 1 broadcasts "a".
        let g = DualGraph::new(2, [(1, 2)], []).unwrap();
        let rec = resolve_round(&g, &EdgeChoice::Empty, &bmap(&[(1, "a")]), 1).unwrap();
        assert_eq!(rec.len(), 1);
        let r = &rec[&2];
        assert_eq!(r.sender, 1);
        assert_eq!(r.payload, Payload::text("a"));
        assert!(r.reliable);
        assert!(!rec.contains_key(&1), "broadcasters receive nothing");
    }

    #[test]
    fn two_transmitting_neighbors_collide() {
        // path 1-2-3, nodes 1 and 3 broadcast: node 2 hears nothing.
        let g = DualGraph::new(3, [(1, 2), (2, 3)], []).unwrap();
        let rec = resolve_round(&g, &EdgeChoice::Empty, &bmap(&[(1, "x"), (3, "y")]), 1).unwrap();
        assert!(rec.is_empty());
    }

    #[test]
    fn all_edges_on_ring_reaches_everyone_with_ring_tags() {
        // n=6 ring, adversary includes all of E' \ E, node 4 broadcasts alone.
        let g = ring_with_complete_gprime(6);
        let rec = resolve_round(&g, &EdgeChoice::All, &bmap(&[(4, "m")]), 3).unwrap();
        assert_eq!(rec.len(), 5);
        for (&u, r) in &rec {
            assert_eq!(r.sender, 4);
            assert_eq!(r.reliable, u == 3 || u == 5, "tag wrong for receiver {u}");
        }
    }

    #[test]
    fn rejects_adversary_edge_outside_gprime() {
        let g = DualGraph::new(3, [(1, 2)], [(1, 3)]).unwrap();
        let choice = EdgeChoice::subset([(2, 3)]);
        let err = resolve_round(&g, &choice, &bmap(&[]), 1).unwrap_err();
        assert!(matches!(err, EngineError::EdgeOutsideGPrime(2, 3)));
    }

    #[test]
    fn zero_round_execution_outputs_from_constant_out() {
        use crate::algorithms::ConstantP;
        let g = ring_with_complete_gprime(4);
        for (p, expected) in [(1.0, true), (0.0, false)] {
            let algo = ConstantP::new(p).unwrap();
            let mut adv = Adversary::static_none();
            let res =
                run_execution(&g, &mut adv, &algo, KnowledgeMode::Passive, 0, 7).unwrap();
            assert!(res.rounds.is_empty());
            assert!(res.outputs.iter().all(|&b| b == expected));
        }
    }

    #[test]
    fn engine_phase_order_separates_online_adversary_from_coins() {
        use crate::algorithms::DecayMis;
        let g = ring_with_complete_gprime(5);
        let algo = DecayMis::default();
        let mut adv = Adversary::threshold(3.0).unwrap();
        let mut events = Vec::new();
        run_execution_hooked(
            &g,
            &mut adv,
            &algo,
            KnowledgeMode::Advance,
            4,
            99,
            &mut |e| events.push(e),
        )
        .unwrap();
        for r in 1..=4 {
            let idx = |e: EngineEvent| events.iter().position(|&x| x == e).unwrap();
            let intents = idx(EngineEvent::IntentsCollected(r));
            let chose = idx(EngineEvent::AdversaryChose(r));
            let coins = idx(EngineEvent::CoinsResolved(r));
            let delivered = idx(EngineEvent::Delivered(r));
            assert!(intents < chose, "round {r}: intents must precede choice");
            assert!(chose < coins, "round {r}: online choice must precede coins");
            assert!(coins < delivered);
        }
    }

    #[test]
    fn offline_adversary_chooses_after_coins() {
        use crate::algorithms::DecayMis;
        use crate::adversary::OfflineStrategy;
        use crate::adversary::RoundContext;

        struct AllIfLoneSender;
        impl OfflineStrategy for AllIfLoneSender {
            fn choose_edges(
                &mut self,
                _ctx: &RoundContext<'_>,
                realized: &BTreeSet<NodeId>,
            ) -> EdgeChoice {
                if realized.len() == 1 {
                    EdgeChoice::All
                } else {
                    EdgeChoice::Empty
                }
            }
        }

        let g = ring_with_complete_gprime(5);
        let algo = DecayMis::default();
        let mut adv = Adversary::offline(Box::new(AllIfLoneSender));
        let mut events = Vec::new();
        run_execution_hooked(
            &g,
            &mut adv,
            &algo,
            KnowledgeMode::Advance,
            3,
            5,
            &mut |e| events.push(e),
        )
        .unwrap();
        for r in 1..=3 {
            let idx = |e: EngineEvent| events.iter().position(|&x| x == e).unwrap();
            assert!(
                idx(EngineEvent::CoinsResolved(r)) < idx(EngineEvent::AdversaryChose(r)),
                "round {r}: offline choice happens after coins"
            );
        }
    }
}
