//! Referee engines and player interfaces for the three guessing games:
//! selective ring coloring, k-isolation, and k-bit revealing.
//!
//! Referees draw their secrets (id assignments, targets, bit strings) from
//! their own seed streams; players only ever see referee responses, so the
//! information boundaries are enforced by the interfaces themselves.

use std::collections::BTreeSet;
use std::rc::Rc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::NodeId;
use crate::seed::rng_from;
use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Debug, Error, PartialEq)]
pub enum GameError {
    #[error("ring coloring needs n >= 4, got {0}")]
    RingTooSmall(u32),
    #[error("isolation needs k >= 2, got {0}")]
    IsolationTooSmall(u64),
    #[error("bit revealing needs k >= 1")]
    NoBits,
    #[error("epsilon must satisfy 0 < epsilon <= 1, got {0}")]
    BadEpsilon(f64),
    #[error("triple coloring queried on non-distinct triple ({0}, {1}, {2})")]
    DegenerateTriple(NodeId, NodeId, NodeId),
    #[error("triple coloring returned color {0}, expected 1..=3")]
    ColorOutOfRange(u8),
    #[error("player failure: {0}")]
    PlayerFailure(String),
}

/// Player moves can fail hard (simulation players run real executions); the
/// error aborts the game rather than counting as a loss.
pub type PlayerResult<T> = Result<T, String>;

/// A color from `{1, 2, 3}`.
pub type Color = u8;

/// The player's committed map from ordered distinct triples over `[n]` to
/// three colors. Kept lazy: materializing all n!/(n-3)! triples is neither
/// needed nor feasible for interesting n.
#[derive(Clone)]
pub struct TripleColoring {
    label: String,
    f: Rc<dyn Fn(NodeId, NodeId, NodeId) -> Color>,
}

impl TripleColoring {
    pub fn from_fn(
        label: impl Into<String>,
        f: impl Fn(NodeId, NodeId, NodeId) -> Color + 'static,
    ) -> Self {
        TripleColoring {
            label: label.into(),
            f: Rc::new(f),
        }
    }

    pub fn constant(color: Color) -> Self {
        TripleColoring::from_fn(format!("constant-{color}"), move |_, _, _| color)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Color of the ordered triple `(ccw, own, cw)`.
    pub fn color(&self, a: NodeId, b: NodeId, c: NodeId) -> Result<Color, GameError> {
        if a == b || b == c || a == c {
            return Err(GameError::DegenerateTriple(a, b, c));
        }
        let color = (self.f)(a, b, c);
        if !(1..=3).contains(&color) {
            return Err(GameError::ColorOutOfRange(color));
        }
        Ok(color)
    }
}

impl std::fmt::Debug for TripleColoring {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "TripleColoring({})", self.label)
    }
}

/// Bijection from ring positions to ids. Position `i`'s clockwise neighbor
/// is position `i + 1` (wrapping).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RingAssignment {
    ids: Vec<NodeId>,
}

impl RingAssignment {
    pub fn new(ids: Vec<NodeId>) -> Result<Self, String> {
        let n = ids.len();
        let distinct: BTreeSet<NodeId> = ids.iter().copied().collect();
        if distinct.len() != n
            || distinct.iter().next() != Some(&1)
            || distinct.iter().next_back() != Some(&(n as NodeId))
        {
            return Err("ids must be a bijection onto 1..=n".into());
        }
        Ok(RingAssignment { ids })
    }

    pub fn identity(n: u32) -> Self {
        RingAssignment {
            ids: (1..=n).collect(),
        }
    }

    pub fn n(&self) -> u32 {
        self.ids.len() as u32
    }

    pub fn ids(&self) -> &[NodeId] {
        &self.ids
    }

    /// Id at 0-based position.
    pub fn id_at(&self, pos: usize) -> NodeId {
        self.ids[pos]
    }

    pub fn position_of(&self, id: NodeId) -> usize {
        self.ids.iter().position(|&x| x == id).expect("bijection")
    }

    /// `(ccw id, own id, cw id)` for a 0-based position.
    pub fn triple_at(&self, pos: usize) -> (NodeId, NodeId, NodeId) {
        let n = self.ids.len();
        (
            self.ids[(pos + n - 1) % n],
            self.ids[pos],
            self.ids[(pos + 1) % n],
        )
    }
}

/// The block-permuting referee: start from the identity assignment, cut the
/// ring into consecutive blocks of length `floor(n^(epsilon/5))` (clamped to
/// at least 2; the final short block, if any, is permuted like the others),
/// and permute ids uniformly within each block, independently per block.
pub fn lemma2_referee(n: u32, epsilon: f64, referee_seed: u64) -> Result<RingAssignment, GameError> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(GameError::BadEpsilon(epsilon));
    }
    let block = ((n as f64).powf(epsilon / 5.0).floor() as usize).max(2);
    let mut ids: Vec<NodeId> = (1..=n).collect();
    for (index, chunk) in ids.chunks_mut(block).enumerate() {
        let mut rng = rng_from(referee_seed, "ring-block", &[n as u64, index as u64]);
        chunk.shuffle(&mut rng);
    }
    Ok(RingAssignment { ids })
}

pub fn block_length(n: u32, epsilon: f64) -> usize {
    ((n as f64).powf(epsilon / 5.0).floor() as usize).max(2)
}

// ---------------------------------------------------------------------------
// transcripts
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GameKind {
    RingColoring,
    Isolation,
    BitReveal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Win,
    Lose,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum GameEvent {
    ColoringCommitted { label: String },
    AssignmentRevealed { ids: Vec<NodeId> },
    RingColors { colors: Vec<Color> },
    ExceptionsSubmitted { ids: Vec<NodeId> },
    Guess { round: u32, value: u64, correct: bool, in_range: bool },
    Reveal { round: u32, index: usize, bit: u8 },
    SkippedRequest { round: u32 },
    FinalGuess { bits: String },
    Resigned { round: u32 },
}

/// Ordered record of one play of any of the three games, sufficient to
/// re-adjudicate the verdict offline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameTranscript {
    pub game: GameKind,
    pub verdict: Verdict,
    pub rounds_used: u32,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub loss_reason: Option<String>,
    pub events: Vec<GameEvent>,
}

// ---------------------------------------------------------------------------
// selective ring coloring
// ---------------------------------------------------------------------------

pub trait RingColoringPlayer {
    /// Round 1: commit the triple coloring, before seeing the assignment.
    fn commit(&mut self) -> PlayerResult<TripleColoring>;
    /// Round 3: submit the exception ids after receiving the assignment.
    fn exceptions(&mut self, assignment: &RingAssignment) -> PlayerResult<BTreeSet<NodeId>>;
}

/// Outcome of deleting the exceptions and checking surviving adjacent pairs.
pub fn adjudicate_ring_coloring(
    assignment: &RingAssignment,
    colors: &[Color],
    exceptions: &BTreeSet<NodeId>,
) -> (Verdict, Option<(NodeId, NodeId)>) {
    let n = assignment.n() as usize;
    for pos in 0..n {
        let next = (pos + 1) % n;
        let (u, v) = (assignment.id_at(pos), assignment.id_at(next));
        if exceptions.contains(&u) || exceptions.contains(&v) {
            continue; // incident edges removed with the exception
        }
        if n > 1 && colors[pos] == colors[next] && pos != next {
            return (Verdict::Lose, Some((u, v)));
        }
    }
    (Verdict::Win, None)
}

/// Plays the three-round selective ring coloring game.
///
/// The referee's assignment depends only on `(referee_seed, n, epsilon)`;
/// the player's commitment is produced before the assignment is revealed.
pub fn play_selective_ring_coloring(
    player: &mut dyn RingColoringPlayer,
    n: u32,
    epsilon: f64,
    exception_budget: usize,
    referee_seed: u64,
) -> Result<GameTranscript, GameError> {
    if n < 4 {
        return Err(GameError::RingTooSmall(n));
    }
    let mut events = Vec::new();

    // Round 1: independent commitments.
    let coloring = player.commit().map_err(GameError::PlayerFailure)?;
    events.push(GameEvent::ColoringCommitted {
        label: coloring.label().to_string(),
    });
    let assignment = lemma2_referee(n, epsilon, referee_seed)?;

    // Round 2: exchange.
    events.push(GameEvent::AssignmentRevealed {
        ids: assignment.ids().to_vec(),
    });

    // Round 3: exceptions.
    let exceptions = player
        .exceptions(&assignment)
        .map_err(GameError::PlayerFailure)?;
    events.push(GameEvent::ExceptionsSubmitted {
        ids: exceptions.iter().copied().collect(),
    });

    let mut colors = Vec::with_capacity(n as usize);
    for pos in 0..n as usize {
        let (a, b, c) = assignment.triple_at(pos);
        colors.push(coloring.color(a, b, c)?);
    }
    events.push(GameEvent::RingColors {
        colors: colors.clone(),
    });

    if exceptions.len() > exception_budget {
        return Ok(GameTranscript {
            game: GameKind::RingColoring,
            verdict: Verdict::Lose,
            rounds_used: 3,
            loss_reason: Some(format!(
                "exception budget exceeded: {} > {exception_budget}",
                exceptions.len()
            )),
            events,
        });
    }

    let (verdict, witness) = adjudicate_ring_coloring(&assignment, &colors, &exceptions);
    Ok(GameTranscript {
        game: GameKind::RingColoring,
        verdict,
        rounds_used: 3,
        loss_reason: witness.map(|(u, v)| format!("surviving monochromatic edge ({u}, {v})")),
        events,
    })
}

// ---------------------------------------------------------------------------
// k-isolation
// ---------------------------------------------------------------------------

pub trait IsolationPlayer {
    /// One guess per round; `Ok(None)` resigns.
    fn next_guess(&mut self, round: u32) -> PlayerResult<Option<u64>>;
    /// Called when the guess was wrong.
    fn notify_wrong(&mut self, _guess: u64) {}
}

/// Plays k-isolation: the referee draws a uniform target from `[k]`; each
/// round the player guesses once and wins on a hit. Out-of-range guesses
/// count as consumed wrong guesses.
pub fn play_isolation(
    player: &mut dyn IsolationPlayer,
    k: u64,
    max_rounds: u32,
    referee_seed: u64,
) -> Result<GameTranscript, GameError> {
    if k < 2 {
        return Err(GameError::IsolationTooSmall(k));
    }
    let target = rng_from(referee_seed, "isolation-target", &[k]).gen_range(1..=k);
    let mut events = Vec::new();
    for round in 1..=max_rounds {
        let Some(guess) = player.next_guess(round).map_err(GameError::PlayerFailure)? else {
            events.push(GameEvent::Resigned { round });
            return Ok(GameTranscript {
                game: GameKind::Isolation,
                verdict: Verdict::Lose,
                rounds_used: round - 1,
                loss_reason: Some("player resigned".into()),
                events,
            });
        };
        let in_range = (1..=k).contains(&guess);
        let correct = in_range && guess == target;
        events.push(GameEvent::Guess {
            round,
            value: guess,
            correct,
            in_range,
        });
        if correct {
            return Ok(GameTranscript {
                game: GameKind::Isolation,
                verdict: Verdict::Win,
                rounds_used: round,
                loss_reason: None,
                events,
            });
        }
        player.notify_wrong(guess);
    }
    Ok(GameTranscript {
        game: GameKind::Isolation,
        verdict: Verdict::Lose,
        rounds_used: max_rounds,
        loss_reason: Some("round budget exhausted".into()),
        events,
    })
}

/// Guesses uniformly at random every round (repeats allowed).
pub struct UniformGuesser {
    k: u64,
    rng: rand_chacha::ChaCha8Rng,
}

impl UniformGuesser {
    pub fn new(k: u64, player_seed: u64) -> Self {
        UniformGuesser {
            k,
            rng: rng_from(player_seed, "uniform-guesser", &[k]),
        }
    }
}

impl IsolationPlayer for UniformGuesser {
    fn next_guess(&mut self, _round: u32) -> PlayerResult<Option<u64>> {
        Ok(Some(self.rng.gen_range(1..=self.k)))
    }
}

/// Guesses 1, 2, 3, ... without repetition; wins in r rounds exactly when
/// the target lies among the first r values.
pub struct ExclusionGuesser {
    next: u64,
}

impl ExclusionGuesser {
    pub fn new() -> Self {
        ExclusionGuesser { next: 1 }
    }
}

impl Default for ExclusionGuesser {
    fn default() -> Self {
        Self::new()
    }
}

impl IsolationPlayer for ExclusionGuesser {
    fn next_guess(&mut self, _round: u32) -> PlayerResult<Option<u64>> {
        let guess = self.next;
        self.next += 1;
        Ok(Some(guess))
    }
}

/// Repeats the same guess forever.
pub struct RepeatGuesser {
    guess: u64,
}

impl RepeatGuesser {
    pub fn new(guess: u64) -> Self {
        RepeatGuesser { guess }
    }
}

impl IsolationPlayer for RepeatGuesser {
    fn next_guess(&mut self, _round: u32) -> PlayerResult<Option<u64>> {
        Ok(Some(self.guess))
    }
}

// ---------------------------------------------------------------------------
// k-bit revealing
// ---------------------------------------------------------------------------

pub trait BitRevealPlayer {
    /// Index in `[1, k]` to reveal this round, or `None` to skip the request.
    fn request(&mut self, round: u32) -> PlayerResult<Option<usize>>;
    fn observe(&mut self, index: usize, bit: bool);
    /// Asked at the end of every round; returning true triggers the final
    /// guess immediately. The guess is forced anyway once rounds run out.
    fn wants_to_guess(&self, round: u32) -> bool;
    fn final_guess(&mut self) -> PlayerResult<Vec<bool>>;
}

fn bits_to_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// Plays k-bit revealing: the referee draws k uniform independent bits; the
/// player requests one index per round and may submit its guess at the end
/// of any round. Winning requires guessing the whole string exactly.
pub fn play_bit_revealing(
    player: &mut dyn BitRevealPlayer,
    k: usize,
    max_rounds: u32,
    referee_seed: u64,
) -> Result<GameTranscript, GameError> {
    if k == 0 {
        return Err(GameError::NoBits);
    }
    let mut rng = rng_from(referee_seed, "bit-reveal-secret", &[k as u64]);
    let secret: Vec<bool> = (0..k).map(|_| rng.gen_bool(0.5)).collect();
    let mut events = Vec::new();

    let mut finish = |player: &mut dyn BitRevealPlayer,
                      rounds_used: u32,
                      events: &mut Vec<GameEvent>|
     -> Result<GameTranscript, GameError> {
        let guess = player.final_guess().map_err(GameError::PlayerFailure)?;
        events.push(GameEvent::FinalGuess {
            bits: bits_to_string(&guess),
        });
        if guess.len() != secret.len() {
            return Ok(GameTranscript {
                game: GameKind::BitReveal,
                verdict: Verdict::Lose,
                rounds_used,
                loss_reason: Some(format!(
                    "malformed guess length {} (expected {})",
                    guess.len(),
                    secret.len()
                )),
                events: events.clone(),
            });
        }
        let win = guess == secret;
        Ok(GameTranscript {
            game: GameKind::BitReveal,
            verdict: if win { Verdict::Win } else { Verdict::Lose },
            rounds_used,
            loss_reason: (!win).then(|| "wrong bit string".into()),
            events: events.clone(),
        })
    };

    for round in 1..=max_rounds {
        match player.request(round).map_err(GameError::PlayerFailure)? {
            Some(index) if (1..=k).contains(&index) => {
                let bit = secret[index - 1];
                events.push(GameEvent::Reveal {
                    round,
                    index,
                    bit: bit as u8,
                });
                player.observe(index, bit);
            }
            Some(_) | None => {
                // out-of-range requests burn the round like skipped ones
                events.push(GameEvent::SkippedRequest { round });
            }
        }
        if player.wants_to_guess(round) || round == max_rounds {
            return finish(player, round, &mut events);
        }
    }
    // max_rounds == 0: forced guess with nothing revealed
    finish(player, 0, &mut events)
}

/// Reads the first `reads` bits, then guesses: known bits exactly, the rest
/// uniform from the player's own seed.
pub struct ReadThenGuess {
    k: usize,
    reads: usize,
    known: Vec<Option<bool>>,
    rng: rand_chacha::ChaCha8Rng,
}

impl ReadThenGuess {
    pub fn new(k: usize, reads: usize, player_seed: u64) -> Self {
        ReadThenGuess {
            k,
            reads: reads.min(k),
            known: vec![None; k],
            rng: rng_from(player_seed, "read-then-guess", &[k as u64]),
        }
    }
}

impl BitRevealPlayer for ReadThenGuess {
    fn request(&mut self, round: u32) -> PlayerResult<Option<usize>> {
        let round = round as usize;
        Ok((round <= self.reads).then_some(round))
    }

    fn observe(&mut self, index: usize, bit: bool) {
        self.known[index - 1] = Some(bit);
    }

    fn wants_to_guess(&self, round: u32) -> bool {
        round as usize >= self.reads
    }

    fn final_guess(&mut self) -> PlayerResult<Vec<bool>> {
        Ok(self
            .known
            .iter()
            .map(|known| known.unwrap_or_else(|| self.rng.gen_bool(0.5)))
            .collect())
    }
}

/// Reveals nothing and guesses a fixed string (all zeros by default).
pub struct FixedGuess {
    bits: Vec<bool>,
}

impl FixedGuess {
    pub fn zeros(k: usize) -> Self {
        FixedGuess {
            bits: vec![false; k],
        }
    }
}

impl BitRevealPlayer for FixedGuess {
    fn request(&mut self, _round: u32) -> PlayerResult<Option<usize>> {
        Ok(None)
    }

    fn observe(&mut self, _index: usize, _bit: bool) {}

    fn wants_to_guess(&self, _round: u32) -> bool {
        true
    }

    fn final_guess(&mut self) -> PlayerResult<Vec<bool>> {
        Ok(self.bits.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct ScriptedRingPlayer {
        coloring: TripleColoring,
        exceptions: BTreeSet<NodeId>,
    }

    impl RingColoringPlayer for ScriptedRingPlayer {
        fn commit(&mut self) -> PlayerResult<TripleColoring> {
            Ok(self.coloring.clone())
        }

        fn exceptions(&mut self, _assignment: &RingAssignment) -> PlayerResult<BTreeSet<NodeId>> {
            Ok(self.exceptions.clone())
        }
    }

    /// Referee variant pinned to the identity assignment via block length n
    /// is not possible (blocks always permute), so tests that need a known
    /// assignment adjudicate directly.
    #[test]
    fn constant_coloring_with_good_exceptions_wins_on_c4() {
        let assignment = RingAssignment::identity(4);
        let colors = vec![1, 1, 1, 1];
        let (verdict, _) =
            adjudicate_ring_coloring(&assignment, &colors, &[1, 3].into_iter().collect());
        assert_eq!(verdict, Verdict::Win);
        let (verdict, witness) =
            adjudicate_ring_coloring(&assignment, &colors, &BTreeSet::new());
        assert_eq!(verdict, Verdict::Lose);
        assert!(witness.is_some());
    }

    #[test]
    fn alternating_coloring_wins_even_ring_without_exceptions() {
        // colors 1,2,1,2,1,2 under the identity on C6
        let mut player = ScriptedRingPlayer {
            coloring: TripleColoring::from_fn("parity", |_, own, _| {
                if own % 2 == 1 {
                    1
                } else {
                    2
                }
            }),
            exceptions: BTreeSet::new(),
        };
        // find a referee seed whose block permutation is the identity: with
        // parity coloring any assignment that keeps parity alternating wins;
        // adjudicate directly on the identity instead.
        let assignment = RingAssignment::identity(6);
        let colors: Vec<Color> = (0..6)
            .map(|p| {
                let (a, b, c) = assignment.triple_at(p);
                player.coloring.color(a, b, c).unwrap()
            })
            .collect();
        assert_eq!(colors, vec![1, 2, 1, 2, 1, 2]);
        let (verdict, _) = adjudicate_ring_coloring(&assignment, &colors, &BTreeSet::new());
        assert_eq!(verdict, Verdict::Win);
        // and through the full game loop the verdict is internally consistent
        let transcript =
            play_selective_ring_coloring(&mut player, 6, 1.0, 6, 42).unwrap();
        let GameEvent::RingColors { colors } = transcript
            .events
            .iter()
            .find(|e| matches!(e, GameEvent::RingColors { .. }))
            .unwrap()
        else {
            unreachable!()
        };
        let GameEvent::AssignmentRevealed { ids } = transcript
            .events
            .iter()
            .find(|e| matches!(e, GameEvent::AssignmentRevealed { .. }))
            .unwrap()
        else {
            unreachable!()
        };
        let assignment = RingAssignment::new(ids.clone()).unwrap();
        let (re_verdict, _) =
            adjudicate_ring_coloring(&assignment, colors, &BTreeSet::new());
        assert_eq!(re_verdict, transcript.verdict);
    }

    #[test]
    fn exception_budget_enforced() {
        let mut player = ScriptedRingPlayer {
            coloring: TripleColoring::constant(1),
            exceptions: [1, 2, 3].into_iter().collect(),
        };
        let t = play_selective_ring_coloring(&mut player, 5, 1.0, 2, 7).unwrap();
        assert_eq!(t.verdict, Verdict::Lose);
        assert!(t.loss_reason.unwrap().contains("budget"));
    }

    #[test]
    fn referee_blocks_permute_within_blocks_only() {
        // n=32, epsilon=1: block length floor(32^0.2) = 2
        assert_eq!(block_length(32, 1.0), 2);
        let a = lemma2_referee(32, 1.0, 999).unwrap();
        for (i, chunk) in a.ids().chunks(2).enumerate() {
            let base = (2 * i + 1) as NodeId;
            let mut sorted = chunk.to_vec();
            sorted.sort_unstable();
            assert_eq!(sorted, vec![base, base + 1], "block {i} holds its own ids");
        }
        // multiset of ids per block equals the block's original ids for a
        // larger block size too
        let a = lemma2_referee(81, 1.0, 5).unwrap();
        let block = block_length(81, 1.0); // floor(81^0.2) = 2
        assert_eq!(block, 2);
        for (i, chunk) in a.ids().chunks(block).enumerate() {
            let mut sorted = chunk.to_vec();
            sorted.sort_unstable();
            let lo = (block * i + 1) as NodeId;
            let expected: Vec<NodeId> = (lo..lo + chunk.len() as NodeId).collect();
            assert_eq!(sorted, expected);
        }
    }

    #[test]
    fn referee_seeds_differ_and_block_distribution_is_uniform() {
        let a = lemma2_referee(1024, 1.0, 1).unwrap();
        let b = lemma2_referee(1024, 1.0, 2).unwrap();
        assert_ne!(a.ids(), b.ids());

        // chi-square over one block of length 4: n = 4096, epsilon = 1 gives
        // block length floor(4096^0.2) = 5... use epsilon chosen for 4:
        // block length floor(256^(0.8/5)) hits 2; simplest is to sample the
        // first block of a 4-id ring directly.
        let mut counts: std::collections::HashMap<Vec<NodeId>, u32> =
            std::collections::HashMap::new();
        for seed in 0..10_000u64 {
            let a = lemma2_referee(4, 1.0, seed).unwrap();
            *counts.entry(a.ids()[..2].to_vec()).or_default() += 1;
        }
        // block length for n=4 clamps to 2: two arrangements, each ~5000
        assert_eq!(counts.len(), 2);
        let expected = 5000.0;
        let chi2: f64 = counts
            .values()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // 1 dof, 99.9th percentile ~ 10.8
        assert!(chi2 < 10.8, "chi-square {chi2} too large");
    }

    #[test]
    fn isolation_exhaustive_two_guesses_always_win_k2() {
        for seed in 0..50 {
            let mut player = ExclusionGuesser::new();
            let t = play_isolation(&mut player, 2, 2, seed).unwrap();
            assert_eq!(t.verdict, Verdict::Win);
            assert!(t.rounds_used <= 2);
        }
    }

    #[test]
    fn isolation_repeat_guesser_rate_near_one_fifth() {
        let mut wins = 0;
        let trials = 4000;
        for seed in 0..trials {
            let mut player = RepeatGuesser::new(3);
            let t = play_isolation(&mut player, 5, 64, seed).unwrap();
            if t.verdict == Verdict::Win {
                wins += 1;
            }
        }
        let rate = wins as f64 / trials as f64;
        assert!((rate - 0.2).abs() < 0.03, "rate {rate}");
    }

    #[test]
    fn isolation_out_of_range_guess_consumes_round() {
        struct OutOfRange;
        impl IsolationPlayer for OutOfRange {
            fn next_guess(&mut self, _round: u32) -> PlayerResult<Option<u64>> {
                Ok(Some(99))
            }
        }
        let t = play_isolation(&mut OutOfRange, 5, 3, 1).unwrap();
        assert_eq!(t.verdict, Verdict::Lose);
        assert_eq!(t.rounds_used, 3);
        assert!(t
            .events
            .iter()
            .all(|e| matches!(e, GameEvent::Guess { in_range: false, .. })));
    }

    #[test]
    fn bit_reveal_read_all_always_wins() {
        for seed in 0..50 {
            let mut player = ReadThenGuess::new(3, 3, 1000 + seed);
            let t = play_bit_revealing(&mut player, 3, 3, seed).unwrap();
            assert_eq!(t.verdict, Verdict::Win, "seed {seed}");
        }
    }

    #[test]
    fn bit_reveal_single_unknown_bit_rate_near_half() {
        let mut wins = 0;
        let trials = 4000;
        for seed in 0..trials {
            let mut player = FixedGuess::zeros(1);
            let t = play_bit_revealing(&mut player, 1, 1, seed).unwrap();
            if t.verdict == Verdict::Win {
                wins += 1;
            }
        }
        let rate = wins as f64 / trials as f64;
        assert!((rate - 0.5).abs() < 0.03, "rate {rate}");
    }

    #[test]
    fn bit_reveal_malformed_guess_loses_with_reason() {
        struct ShortGuess;
        impl BitRevealPlayer for ShortGuess {
            fn request(&mut self, _round: u32) -> PlayerResult<Option<usize>> {
                Ok(None)
            }
            fn observe(&mut self, _index: usize, _bit: bool) {}
            fn wants_to_guess(&self, _round: u32) -> bool {
                true
            }
            fn final_guess(&mut self) -> PlayerResult<Vec<bool>> {
                Ok(vec![false])
            }
        }
        let t = play_bit_revealing(&mut ShortGuess, 4, 2, 3).unwrap();
        assert_eq!(t.verdict, Verdict::Lose);
        assert!(t.loss_reason.unwrap().contains("malformed"));
    }

    #[test]
    fn preconditions_rejected() {
        assert!(lemma2_referee(8, 0.0, 1).is_err());
        assert!(lemma2_referee(8, 1.5, 1).is_err());
        let mut p = ExclusionGuesser::new();
        assert!(play_isolation(&mut p, 1, 1, 1).is_err());
        let mut f = FixedGuess::zeros(0);
        assert!(play_bit_revealing(&mut f, 0, 1, 1).is_err());
        let mut sp = ScriptedRingPlayer {
            coloring: TripleColoring::constant(1),
            exceptions: BTreeSet::new(),
        };
        assert!(play_selective_ring_coloring(&mut sp, 3, 1.0, 0, 1).is_err());
    }
}
