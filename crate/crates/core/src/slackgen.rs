//! SlackGeneration: one TryColor round among activated participants, and the
//! slack bookkeeping that the later phases rely on.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acd::AlmostCliqueDecomposition;
use crate::classify::{AcClassification, AcKind, FinePartition, NodeClass};
use crate::coloring::PartialColoring;
use crate::graph::{Color, Graph, NodeId};
use crate::sim::{
    ceil_log2, node_rng, run_protocol, BitString, Envelope, Message, NodeProgram, NodeRng, Outbox, RoundMetrics,
    SimConfig, SimError, Step,
};

pub const DEFAULT_P_G: f64 = 1.0 / 20.0;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SlackError {
    #[error("node {0} is already colored")]
    Colored(NodeId),
}

/// Uniform draw from `[k]` by multiply-shift; no rejection loop.
pub fn uniform_color<R: RngCore + ?Sized>(rng: &mut R, k: usize) -> Color {
    ((rng.next_u64() as u128 * k as u128) >> 64) as Color
}

/// A participant's round-0 draw: activation first, then the color.
pub fn draw_try<R: RngCore>(rng: &mut R, p_g: f64, delta: usize) -> Option<Color> {
    let active = rng.gen::<f64>() < p_g;
    active.then(|| uniform_color(rng, delta))
}

/// Replays the draw node `v` makes under `seed`.
pub fn replay_try(seed: u64, v: NodeId, p_g: f64, delta: usize) -> Option<Color> {
    draw_try(&mut node_rng(seed, v, 0), p_g, delta)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TryMsg {
    pub color: Color,
    pub width: u32,
}

impl Message for TryMsg {
    fn encode(&self, out: &mut BitString) {
        out.push_bits(self.color as u64, self.width);
    }
}

#[derive(Clone, Debug)]
pub struct SlackGenProgram {
    participant: bool,
    p_g: f64,
    delta: usize,
    tried: Option<Color>,
    pub color: Option<Color>,
}

impl SlackGenProgram {
    pub fn new(participant: bool, p_g: f64, delta: usize) -> Self {
        Self { participant, p_g, delta, tried: None, color: None }
    }
}

impl NodeProgram for SlackGenProgram {
    type Msg = TryMsg;

    fn starts_halted(&self) -> bool {
        !self.participant
    }

    fn step(&mut self, round: usize, inbox: &[Envelope<TryMsg>], rng: &mut NodeRng) -> Step<TryMsg> {
        if round == 0 {
            self.tried = draw_try(rng, self.p_g, self.delta);
            return match self.tried {
                Some(color) => Step::send(Outbox::Broadcast(TryMsg { color, width: ceil_log2(self.delta) as u32 })),
                None => Step::halt(),
            };
        }
        let c = self.tried.expect("only activated nodes reach round 1");
        if inbox.iter().all(|e| e.msg.color != c) {
            self.color = Some(c);
        }
        Step::halt()
    }
}

/// Runs SlackGeneration with the seed in `config` and returns the kept colors.
pub fn run_slack_generation_with(
    g: &Graph,
    participants: &[bool],
    p_g: f64,
    config: &SimConfig,
) -> Result<(PartialColoring, RoundMetrics), SimError> {
    assert!((0.0..=1.0).contains(&p_g), "p_g = {p_g} outside [0, 1]");
    let programs = g.nodes().map(|v| SlackGenProgram::new(participants[v], p_g, g.delta())).collect();
    let (programs, metrics) = run_protocol(g, programs, config)?;
    let coloring = PartialColoring::from_colors(programs.iter().map(|p| p.color).collect());
    Ok((coloring, metrics))
}

pub fn run_slack_generation(g: &Graph, participants: &[bool], p_g: f64, seed: u64) -> PartialColoring {
    run_slack_generation_with(g, participants, p_g, &SimConfig::new(seed, 2))
        .expect("SlackGeneration halts after two steps")
        .0
}

fn distinct_neighbor_colors(g: &Graph, coloring: &PartialColoring, v: NodeId) -> (usize, usize) {
    let mut colors: Vec<Color> = g.neighbors(v).iter().filter_map(|&u| coloring.get(u)).collect();
    let colored = colors.len();
    colors.sort_unstable();
    colors.dedup();
    (colored, colors.len())
}

/// Palette size minus uncolored degree inside `subgraph`:
/// `(Δ - #colors on colored neighbors) - #uncolored neighbors in subgraph`.
pub fn measure_slack(g: &Graph, coloring: &PartialColoring, v: NodeId, subgraph: &[bool]) -> Result<i64, SlackError> {
    if coloring.is_colored(v) {
        return Err(SlackError::Colored(v));
    }
    let (_, distinct) = distinct_neighbor_colors(g, coloring, v);
    let uncolored_inside = g.neighbors(v).iter().filter(|&&u| subgraph[u] && !coloring.is_colored(u)).count();
    Ok(g.delta() as i64 - distinct as i64 - uncolored_inside as i64)
}

/// The same slack split by source: low degree, repeated colors among colored
/// neighbors, and uncolored neighbors outside the subgraph.
pub fn slack_decomposition(g: &Graph, coloring: &PartialColoring, v: NodeId, subgraph: &[bool]) -> (i64, i64, i64) {
    let (colored, distinct) = distinct_neighbor_colors(g, coloring, v);
    let outside = g.neighbors(v).iter().filter(|&&u| !subgraph[u] && !coloring.is_colored(u)).count();
    ((g.delta() - g.degree(v)) as i64, (colored - distinct) as i64, outside as i64)
}

/// Slack of every node with respect to a fixed subgraph, maintained under
/// coloring one node at a time.
#[derive(Clone, Debug)]
pub struct SlackTracker {
    delta: usize,
    subgraph: Vec<bool>,
    color_counts: Vec<Vec<u32>>,
    distinct: Vec<usize>,
    uncolored_inside: Vec<usize>,
    colored: Vec<bool>,
}

impl SlackTracker {
    pub fn new(g: &Graph, coloring: &PartialColoring, subgraph: &[bool]) -> Self {
        let delta = g.delta();
        let mut tracker = Self {
            delta,
            subgraph: subgraph.to_vec(),
            color_counts: vec![vec![0; delta]; g.n()],
            distinct: vec![0; g.n()],
            uncolored_inside: g.nodes().map(|v| g.neighbors(v).iter().filter(|&&u| subgraph[u]).count()).collect(),
            colored: vec![false; g.n()],
        };
        for v in g.nodes() {
            if let Some(c) = coloring.get(v) {
                tracker.record(g, v, c);
            }
        }
        tracker
    }

    fn record(&mut self, g: &Graph, v: NodeId, c: Color) {
        self.colored[v] = true;
        for &u in g.neighbors(v) {
            let count = &mut self.color_counts[u][c as usize];
            *count += 1;
            if *count == 1 {
                self.distinct[u] += 1;
            }
            if self.subgraph[v] {
                self.uncolored_inside[u] -= 1;
            }
        }
    }

    /// Colors the uncolored node `v` with `c < Δ`.
    pub fn color(&mut self, g: &Graph, v: NodeId, c: Color) {
        assert!(!self.colored[v], "node {v} colored twice");
        assert!((c as usize) < self.delta);
        self.record(g, v, c);
    }

    pub fn slack(&self, v: NodeId) -> Result<i64, SlackError> {
        if self.colored[v] {
            return Err(SlackError::Colored(v));
        }
        Ok(self.delta as i64 - self.distinct[v] as i64 - self.uncolored_inside[v] as i64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrdinarySlack {
    pub ac: usize,
    pub uncolored: usize,
    pub unit_slack: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DifficultColoring {
    pub ac: usize,
    pub kind: AcKind,
    pub special: NodeId,
    /// `|N_C(special)|`.
    pub neighbors: usize,
    pub colored: usize,
}

impl DifficultColoring {
    pub fn fraction(&self) -> f64 {
        if self.neighbors == 0 {
            0.0
        } else {
            self.colored as f64 / self.neighbors as f64
        }
    }

    /// At most half colored, exactly.
    pub fn holds(&self) -> bool {
        2 * self.colored <= self.neighbors
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlackReport {
    /// Uncolored `V*` nodes and their slack in `G[V* ∪ O]`.
    pub sparse_slack: Vec<(NodeId, i64)>,
    /// Escape nodes and their slack in `G`.
    pub escape_slack: Vec<(NodeId, i64)>,
    pub ordinary: Vec<OrdinarySlack>,
    pub difficult: Vec<DifficultColoring>,
}

impl SlackReport {
    /// Slack at least 1 for every uncolored sparse node
    /// and every escape.
    pub fn sparse_ok(&self) -> bool {
        self.sparse_slack.iter().chain(&self.escape_slack).all(|&(_, s)| s >= 1)
    }

    /// Every ordinary AC with uncolored nodes has an uncolored unit-slack node.
    pub fn ordinary_ok(&self) -> bool {
        self.ordinary.iter().all(|o| o.uncolored == 0 || o.unit_slack >= 1)
    }

    pub fn difficult_ok(&self) -> bool {
        self.difficult.iter().all(DifficultColoring::holds)
    }

    pub fn passes(&self) -> bool {
        self.sparse_ok() && self.ordinary_ok() && self.difficult_ok()
    }

    pub fn violations(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if !self.sparse_ok() {
            v.push("a sparse or escape node lacks slack");
        }
        if !self.ordinary_ok() {
            v.push("an ordinary AC has no uncolored unit-slack node");
        }
        if !self.difficult_ok() {
            v.push("more than half of N_C(special) is colored");
        }
        v
    }
}

pub fn check_slack_report(
    g: &Graph,
    acd: &AlmostCliqueDecomposition,
    classification: &AcClassification,
    partition: &FinePartition,
    coloring: &PartialColoring,
) -> SlackReport {
    let vo = partition.mask(&[NodeClass::Sparse, NodeClass::Ordinary]);
    let all = vec![true; g.n()];
    let slack_in = |v: NodeId, s: &[bool]| measure_slack(g, coloring, v, s).expect("uncolored");

    let sparse_slack =
        partition.sparse.iter().filter(|&&v| !coloring.is_colored(v)).map(|&v| (v, slack_in(v, &vo))).collect();
    let escape_slack = partition.escapes.iter().map(|&v| (v, slack_in(v, &all))).collect();

    let ordinary = classification
        .acs_of_kind(AcKind::Ordinary)
        .map(|ac| {
            let uncolored: Vec<NodeId> = acd.clique(ac).iter().copied().filter(|&v| !coloring.is_colored(v)).collect();
            OrdinarySlack {
                ac,
                uncolored: uncolored.len(),
                unit_slack: uncolored.iter().filter(|&&v| slack_in(v, &vo) >= 1).count(),
            }
        })
        .collect();

    let difficult = classification
        .classes
        .iter()
        .enumerate()
        .filter(|(_, c)| c.kind.is_difficult())
        .map(|(ac, c)| {
            let special = c.picked.expect("difficult ACs pick a special");
            let inside: Vec<NodeId> =
                g.neighbors(special).iter().copied().filter(|&u| acd.clique_of(u) == Some(ac)).collect();
            DifficultColoring {
                ac,
                kind: c.kind,
                special,
                neighbors: inside.len(),
                colored: inside.iter().filter(|&&u| coloring.is_colored(u)).count(),
            }
        })
        .collect();

    SlackReport { sparse_slack, escape_slack, ordinary, difficult }
}
