//! Deterministic round-synchronous message passing.
//!
//! Every round, each non-halted node (in id order) consumes the messages sent
//! to it in the previous round and produces at most one message per incident
//! edge. A node sees nothing but its own state, its inbox and its own random
//! stream, which is keyed on `(seed, node, round)` and therefore independent
//! of scheduling.
//!
//! Message sizes are measured on a canonical bit encoding, so CONGEST budgets
//! are checked against what would go on the wire rather than in-memory size.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Graph, NodeId};

pub type NodeRng = ChaCha8Rng;

/// Canonical bit string a message is serialized to for size accounting.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BitString {
    words: Vec<u64>,
    len: usize,
}

impl BitString {
    /// Appends the low `width` bits of `value`, most significant first.
    pub fn push_bits(&mut self, value: u64, width: u32) {
        debug_assert!(width == 64 || value >> width == 0, "value {value} does not fit in {width} bits");
        for i in (0..width).rev() {
            let bit = (value >> i) & 1;
            if self.len % 64 == 0 {
                self.words.push(0);
            }
            if bit == 1 {
                *self.words.last_mut().unwrap() |= 1 << (63 - self.len % 64);
            }
            self.len += 1;
        }
    }

    pub fn push_bool(&mut self, b: bool) {
        self.push_bits(b as u64, 1);
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

pub trait Message: Clone {
    fn encode(&self, out: &mut BitString);

    fn bit_len(&self) -> usize {
        let mut bits = BitString::default();
        self.encode(&mut bits);
        bits.len()
    }
}

#[derive(Clone, Debug)]
pub enum Outbox<M> {
    Silent,
    /// The same message over every incident edge.
    Broadcast(M),
    /// Point-to-point messages; each recipient must be a distinct neighbor.
    Direct(Vec<(NodeId, M)>),
}

#[derive(Clone, Debug)]
pub struct Step<M> {
    pub outbox: Outbox<M>,
    pub halt: bool,
}

impl<M> Step<M> {
    pub fn send(outbox: Outbox<M>) -> Self {
        Self { outbox, halt: false }
    }

    pub fn halt_with(outbox: Outbox<M>) -> Self {
        Self { outbox, halt: true }
    }

    pub fn idle() -> Self {
        Self { outbox: Outbox::Silent, halt: false }
    }

    pub fn halt() -> Self {
        Self { outbox: Outbox::Silent, halt: true }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Envelope<M> {
    pub from: NodeId,
    pub msg: M,
}

pub trait NodeProgram {
    type Msg: Message;

    /// Programs that start halted never step.
    fn starts_halted(&self) -> bool {
        false
    }

    fn step(&mut self, round: usize, inbox: &[Envelope<Self::Msg>], rng: &mut NodeRng) -> Step<Self::Msg>;
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundMetrics {
    pub rounds_elapsed: usize,
    /// Per-round maximum message size in bits; 0 for silent rounds.
    pub max_message_bits: Vec<usize>,
    pub messages_sent: u64,
}

impl RoundMetrics {
    pub fn overall_max_bits(&self) -> usize {
        self.max_message_bits.iter().copied().max().unwrap_or(0)
    }

    /// Appends the rounds of a later, sequentially executed run.
    pub fn absorb(&mut self, other: &RoundMetrics) {
        self.rounds_elapsed += other.rounds_elapsed;
        self.max_message_bits.extend_from_slice(&other.max_message_bits);
        self.messages_sent += other.messages_sent;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub seed: u64,
    pub max_rounds: usize,
    /// Per-message bit budget; only enforced when `strict` is set.
    pub bit_budget: Option<usize>,
    pub strict: bool,
}

impl SimConfig {
    pub fn new(seed: u64, max_rounds: usize) -> Self {
        Self { seed, max_rounds, bit_budget: None, strict: false }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("round limit {max_rounds} reached with {} node(s) still running (first: {:?})", active.len(), active.first())]
    RoundLimit { max_rounds: usize, active: Vec<NodeId> },
    #[error("round {round}: message {from}->{to} has {bits} bits, budget {budget}")]
    MessageTooLarge { round: usize, from: NodeId, to: NodeId, bits: usize, budget: usize },
    #[error("round {round}: node {from} addressed non-neighbor {to}")]
    NotANeighbor { round: usize, from: NodeId, to: NodeId },
    #[error("round {round}: node {from} sent two messages to {to}")]
    DuplicateRecipient { round: usize, from: NodeId, to: NodeId },
    #[error("expected one program per node ({expected}), got {got}")]
    ProgramCount { expected: usize, got: usize },
    #[error("max_rounds must be at least 1")]
    ZeroRounds,
}

/// Random stream of `node` in `round`: ChaCha keyed by `seed`, one stream per
/// node, one 2^32-word block per round.
pub fn node_rng(seed: u64, node: NodeId, round: usize) -> NodeRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(node as u64);
    rng.set_word_pos((round as u128) << 32);
    rng
}

pub fn ceil_log2(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

/// `c · ⌈log2 n⌉` bits.
pub fn congest_budget(n: usize, c: usize) -> usize {
    c * ceil_log2(n)
}

pub fn check_congest_budget(metrics: &RoundMetrics, n: usize, c: usize) -> bool {
    assert!(n >= 2, "CONGEST budget needs n >= 2");
    metrics.overall_max_bits() <= congest_budget(n, c)
}

/// Runs `programs` (one per node of `g`) in lockstep until all halt.
pub fn run_protocol<P: NodeProgram>(
    g: &Graph,
    mut programs: Vec<P>,
    config: &SimConfig,
) -> Result<(Vec<P>, RoundMetrics), SimError> {
    let n = g.n();
    if programs.len() != n {
        return Err(SimError::ProgramCount { expected: n, got: programs.len() });
    }
    if config.max_rounds == 0 {
        return Err(SimError::ZeroRounds);
    }
    let budget = config.bit_budget.filter(|_| config.strict);

    let mut halted: Vec<bool> = programs.iter().map(P::starts_halted).collect();
    let mut inboxes: Vec<Vec<Envelope<P::Msg>>> = (0..n).map(|_| Vec::new()).collect();
    let mut metrics = RoundMetrics::default();
    let mut stamp = vec![usize::MAX; n];

    let mut round = 0;
    while halted.iter().any(|h| !h) {
        if round == config.max_rounds {
            let active = (0..n).filter(|&v| !halted[v]).collect();
            return Err(SimError::RoundLimit { max_rounds: config.max_rounds, active });
        }
        let mut next: Vec<Vec<Envelope<P::Msg>>> = (0..n).map(|_| Vec::new()).collect();
        let mut round_max = 0;
        for v in 0..n {
            if halted[v] {
                continue;
            }
            let inbox = std::mem::take(&mut inboxes[v]);
            let mut rng = node_rng(config.seed, v, round);
            let step = programs[v].step(round, &inbox, &mut rng);
            let mut deliver = |to: NodeId, msg: P::Msg, bits: usize| -> Result<(), SimError> {
                if let Some(budget) = budget {
                    if bits > budget {
                        return Err(SimError::MessageTooLarge { round, from: v, to, bits, budget });
                    }
                }
                round_max = round_max.max(bits);
                metrics.messages_sent += 1;
                next[to].push(Envelope { from: v, msg });
                Ok(())
            };
            match step.outbox {
                Outbox::Silent => {}
                Outbox::Broadcast(msg) => {
                    let bits = msg.bit_len();
                    for &u in g.neighbors(v) {
                        deliver(u, msg.clone(), bits)?;
                    }
                }
                Outbox::Direct(list) => {
                    for (to, msg) in list {
                        if to >= n || !g.has_edge(v, to) {
                            return Err(SimError::NotANeighbor { round, from: v, to });
                        }
                        if stamp[to] == v {
                            return Err(SimError::DuplicateRecipient { round, from: v, to });
                        }
                        stamp[to] = v;
                        let bits = msg.bit_len();
                        deliver(to, msg, bits)?;
                    }
                    for &u in g.neighbors(v) {
                        stamp[u] = usize::MAX;
                    }
                }
            }
            halted[v] = step.halt;
        }
        inboxes = next;
        metrics.max_message_bits.push(round_max);
        round += 1;
    }
    metrics.rounds_elapsed = round;
    Ok((programs, metrics))
}
