//! Adversary classes controlling the unreliable links.
//!
//! Static adversaries fix one subset of `E' \ E` for every round. Online
//! adaptive adversaries see the topology, the algorithm, the transcript so
//! far, and the declared broadcast probabilities of the current round, but
//! not its realized coin flips. Offline adaptive adversaries additionally see
//! the realized broadcast set. The knowledge boundary is enforced by the
//! strategy signatures: an online strategy has no parameter through which the
//! realized flips could reach it.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{EdgeChoice, RoundTranscript};
use crate::graph::{DualGraph, NodeId};

#[derive(Debug, Error, PartialEq)]
pub enum AdversaryError {
    #[error("threshold constant must be positive, got {0}")]
    NonPositiveConstant(f64),
    #[error("unknown adversary kind {0:?}")]
    UnknownKind(String),
}

/// Everything an online adaptive strategy may look at for round `round`.
pub struct RoundContext<'a> {
    pub graph: &'a DualGraph,
    pub round: u32,
    /// Declared broadcast probabilities for this round, ids ascending.
    pub declared_probabilities: &'a [f64],
    /// Transcript of rounds `1..round`.
    pub history: &'a [RoundTranscript],
}

pub trait OnlineStrategy: Send {
    fn choose_edges(&mut self, ctx: &RoundContext<'_>) -> EdgeChoice;
}

pub trait OfflineStrategy: Send {
    fn choose_edges(
        &mut self,
        ctx: &RoundContext<'_>,
        realized_broadcasters: &BTreeSet<NodeId>,
    ) -> EdgeChoice;
}

pub enum Adversary {
    Static(EdgeChoice),
    Online(Box<dyn OnlineStrategy>),
    /// No strategy from the source material populates this class (the bounds
    /// get stronger by using weaker adversaries); it exists so executions
    /// against such an adversary can still be expressed.
    Offline(Box<dyn OfflineStrategy>),
}

impl Adversary {
    /// Static adversary that includes every `G' \ G` edge in every round.
    pub fn static_all() -> Self {
        Adversary::Static(EdgeChoice::All)
    }

    /// Static adversary that never includes an unreliable edge.
    pub fn static_none() -> Self {
        Adversary::Static(EdgeChoice::Empty)
    }

    /// Static adversary pinning an explicit subset.
    pub fn static_subset(
        graph: &DualGraph,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<Self, crate::engine::EngineError> {
        let choice = EdgeChoice::subset(edges);
        choice.validate(graph)?;
        Ok(Adversary::Static(choice))
    }

    /// Online adaptive threshold strategy: include all unreliable edges when
    /// the expected broadcaster count reaches `c * log2(n)`, none otherwise.
    pub fn threshold(c: f64) -> Result<Self, AdversaryError> {
        Ok(Adversary::Online(Box::new(ThresholdStrategy::new(c)?)))
    }

    pub fn online(strategy: Box<dyn OnlineStrategy>) -> Self {
        Adversary::Online(strategy)
    }

    pub fn offline(strategy: Box<dyn OfflineStrategy>) -> Self {
        Adversary::Offline(strategy)
    }

    /// Pre-coin choice. Returns `None` for offline adversaries, which decide
    /// only once the realized broadcast set exists.
    pub(crate) fn choose_online(
        &mut self,
        graph: &DualGraph,
        round: u32,
        declared: &[f64],
        history: &[RoundTranscript],
    ) -> Option<EdgeChoice> {
        match self {
            Adversary::Static(choice) => Some(choice.clone()),
            Adversary::Online(strategy) => Some(strategy.choose_edges(&RoundContext {
                graph,
                round,
                declared_probabilities: declared,
                history,
            })),
            Adversary::Offline(_) => None,
        }
    }

    pub(crate) fn choose_offline(
        &mut self,
        graph: &DualGraph,
        round: u32,
        declared: &[f64],
        history: &[RoundTranscript],
        realized: &BTreeSet<NodeId>,
    ) -> EdgeChoice {
        match self {
            Adversary::Offline(strategy) => strategy.choose_edges(
                &RoundContext {
                    graph,
                    round,
                    declared_probabilities: declared,
                    history,
                },
                realized,
            ),
            // Unreachable from the engine; keep a sane answer anyway.
            Adversary::Static(choice) => choice.clone(),
            Adversary::Online(strategy) => strategy.choose_edges(&RoundContext {
                graph,
                round,
                declared_probabilities: declared,
                history,
            }),
        }
    }
}

/// Expected number of broadcasters given declared probabilities: the sum, by
/// linearity of expectation over independent indicators.
pub fn expected_broadcasters(declared: &[f64]) -> f64 {
    declared.iter().sum()
}

/// The online adaptive strategy used by the simulation players: all edges
/// when `E[B_r] >= c * log2(n)`, none otherwise. Never a proper nonempty
/// subset.
pub struct ThresholdStrategy {
    c: f64,
}

impl ThresholdStrategy {
    pub fn new(c: f64) -> Result<Self, AdversaryError> {
        if !(c > 0.0) {
            return Err(AdversaryError::NonPositiveConstant(c));
        }
        Ok(ThresholdStrategy { c })
    }

    pub fn trips(&self, n: u32, expected: f64) -> bool {
        expected >= self.c * (n as f64).log2()
    }
}

impl OnlineStrategy for ThresholdStrategy {
    fn choose_edges(&mut self, ctx: &RoundContext<'_>) -> EdgeChoice {
        let expected = expected_broadcasters(ctx.declared_probabilities);
        if self.trips(ctx.graph.n(), expected) {
            EdgeChoice::All
        } else {
            EdgeChoice::Empty
        }
    }
}

/// Config form: `{"kind": "static_all" | "static_none" | "threshold", "c": number}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AdversaryConfig {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub c: Option<f64>,
}

impl AdversaryConfig {
    pub fn static_all() -> Self {
        AdversaryConfig {
            kind: "static_all".into(),
            c: None,
        }
    }

    pub fn static_none() -> Self {
        AdversaryConfig {
            kind: "static_none".into(),
            c: None,
        }
    }

    pub fn threshold(c: f64) -> Self {
        AdversaryConfig {
            kind: "threshold".into(),
            c: Some(c),
        }
    }

    pub fn build(&self) -> Result<Adversary, AdversaryError> {
        match self.kind.as_str() {
            "static_all" => Ok(Adversary::static_all()),
            "static_none" => Ok(Adversary::static_none()),
            // The two proof constants are the same knob; default 3.
            "threshold" => Adversary::threshold(self.c.unwrap_or(3.0)),
            other => Err(AdversaryError::UnknownKind(other.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::ring_with_complete_gprime;

    #[test]
    fn expected_broadcasters_is_the_sum() {
        assert_eq!(expected_broadcasters(&[]), 0.0);
        assert_eq!(expected_broadcasters(&[0.0, 0.0, 0.0]), 0.0);
        assert_eq!(expected_broadcasters(&[0.5, 0.5, 1.0]), 2.0);
    }

    #[test]
    fn threshold_dichotomy_on_declared_probabilities() {
        let g = ring_with_complete_gprime(16);
        let mut strat = ThresholdStrategy::new(1.0).unwrap();
        // 16 nodes all declaring 1.0: E[B_r] = 16 >= log2(16) = 4.
        let all_on = vec![1.0; 16];
        let ctx = RoundContext {
            graph: &g,
            round: 1,
            declared_probabilities: &all_on,
            history: &[],
        };
        assert_eq!(strat.choose_edges(&ctx), EdgeChoice::All);

        // exactly one node declares 1.0: E[B_r] = 1 < 4.
        let mut one_on = vec![0.0; 16];
        one_on[3] = 1.0;
        let ctx = RoundContext {
            graph: &g,
            round: 2,
            declared_probabilities: &one_on,
            history: &[],
        };
        assert_eq!(strat.choose_edges(&ctx), EdgeChoice::Empty);
    }

    #[test]
    fn static_choice_is_identical_every_round() {
        let g = ring_with_complete_gprime(6);
        let mut adv = Adversary::static_all();
        let c1 = adv.choose_online(&g, 1, &[0.0; 6], &[]).unwrap();
        let c2 = adv.choose_online(&g, 1_000_000, &[1.0; 6], &[]).unwrap();
        assert_eq!(c1, c2);
        assert_eq!(c1, EdgeChoice::All);

        // graph with empty E' \ E: the all-edges choice activates nothing.
        let classical = crate::graph::ring_classical(5);
        assert!(!c1.contains(&classical, 1, 3));
    }

    #[test]
    fn rejects_bad_threshold_constant() {
        assert!(Adversary::threshold(0.0).is_err());
        assert!(Adversary::threshold(-1.0).is_err());
        assert!(AdversaryConfig {
            kind: "bogus".into(),
            c: None
        }
        .build()
        .is_err());
    }
}
