//! Instance generators for the configurations that make Δ-coloring hard:
//! a Δ+1-clique minus an edge, two Δ-cliques joined by a perfect matching,
//! a guarded clique with two special neighbors, two runaway cliques sharing
//! their specials, random degree-capped graphs and bridged unions of these.
//!
//! Every family is relabeled by a seed-derived permutation, so ids (and the
//! smallest-id tie-breaks downstream) vary with the seed while the structure
//! does not.

use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acd::{default_epsilon, max_epsilon};
use crate::classify::Thresholds;
use crate::graph::{Graph, NodeId, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    CliqueMinusEdge,
    MatchedCliques,
    GuardedPair,
    RunawayPair,
    RandomGnd,
    Mixed,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::CliqueMinusEdge,
        Family::MatchedCliques,
        Family::GuardedPair,
        Family::RunawayPair,
        Family::RandomGnd,
        Family::Mixed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::CliqueMinusEdge => "clique_minus_edge",
            Family::MatchedCliques => "matched_cliques",
            Family::GuardedPair => "guarded_pair",
            Family::RunawayPair => "runaway_pair",
            Family::RandomGnd => "random_gnd",
            Family::Mixed => "mixed",
        }
    }

    pub fn min_delta(self) -> usize {
        match self {
            Family::CliqueMinusEdge | Family::MatchedCliques | Family::RandomGnd => 3,
            // φ > ψ needs Δ ≥ 9.
            Family::GuardedPair | Family::RunawayPair | Family::Mixed => 9,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = GenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL.into_iter().find(|f| f.name() == s).ok_or_else(|| GenError::UnknownFamily(s.to_string()))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenError {
    #[error("unknown family {0:?}")]
    UnknownFamily(String),
    #[error("{family} does not support Δ = {delta}: {reason}")]
    Unsupported { family: Family, delta: usize, reason: String },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenParams {
    /// Clique size deficit `s`: guarded and runaway cliques have `Δ - s` members.
    pub slack: usize,
    /// Disjoint copies of the construction (bundles, for `mixed`); one copy
    /// by default, two bundles for `mixed`.
    pub components: Option<usize>,
}

impl GenParams {
    pub fn components(&self, family: Family) -> usize {
        self.components.unwrap_or(if family == Family::Mixed { 2 } else { 1 })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorMeta {
    pub family: Family,
    pub delta: usize,
    pub seed: u64,
    pub params: GenParams,
    /// The constructed cliques, each sorted.
    pub cliques: Vec<Vec<NodeId>>,
    /// Constructed special nodes, sorted.
    pub specials: Vec<NodeId>,
    /// Non-adjacent pairs inside constructed cliques, `(u, v)` with `u < v`.
    pub non_edges: Vec<(NodeId, NodeId)>,
    /// Edges from each special into each clique it attaches to (`⌈φ⌉`).
    pub cross_edges: usize,
    /// Admissible ε range for the almost-clique decomposition.
    pub epsilon_min: Rational,
    pub epsilon_max: Rational,
}

impl GeneratorMeta {
    /// `max(1/172, 3/2 · ε_min)`, within the admissible range.
    pub fn default_epsilon(&self) -> Rational {
        default_epsilon().max(self.epsilon_min * Rational::new(3, 2)).min(self.epsilon_max)
    }
}

#[derive(Clone, Debug)]
pub struct GeneratedInstance {
    pub graph: Graph,
    pub meta: GeneratorMeta,
}

pub fn generate(family: Family, delta: usize, seed: u64) -> Result<GeneratedInstance, GenError> {
    generate_with(family, delta, seed, &GenParams::default())
}

pub fn generate_with(family: Family, delta: usize, seed: u64, params: &GenParams) -> Result<GeneratedInstance, GenError> {
    let unsupported = |reason: String| GenError::Unsupported { family, delta, reason };
    if delta < family.min_delta() {
        return Err(unsupported(format!("needs Δ ≥ {}", family.min_delta())));
    }
    let t = Thresholds::new(delta);
    let f = t.phi_ceil();
    let s = params.slack;
    if matches!(family, Family::GuardedPair | Family::RunawayPair | Family::Mixed) {
        if s > t.psi_floor() {
            return Err(unsupported(format!("slack {s} exceeds ⌊ψ⌋ = {}", t.psi_floor())));
        }
        if 2 * f + 2 > delta - s {
            return Err(unsupported(format!("two blocks of ⌈φ⌉ = {f} do not fit a clique of {}", delta - s)));
        }
    }
    let copies = params.components(family);
    if copies == 0 {
        return Err(unsupported("needs at least one component".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = Builder::default();
    let mut piece = Piece::default();
    if family == Family::Mixed {
        mixed(&mut b, &mut piece, delta, s, f, copies, &mut rng);
    }
    for _ in 0..copies {
        match family {
            Family::CliqueMinusEdge => piece.absorb(clique_minus_edge(&mut b, delta)),
            Family::MatchedCliques => piece.absorb(matched_cliques(&mut b, delta)),
            Family::GuardedPair => piece.absorb(guarded_pair(&mut b, delta, s, f)),
            Family::RunawayPair => piece.absorb(runaway_pair(&mut b, delta, s, f)),
            Family::RandomGnd => {
                let nodes = b.nodes(4 * delta);
                capped_random(&mut b, &nodes, delta, &mut rng);
            }
            Family::Mixed => break,
        }
    }
    let range = match family {
        Family::CliqueMinusEdge | Family::RandomGnd => clique_range(delta, 0, 0),
        Family::MatchedCliques => clique_range(delta, 0, 1),
        Family::GuardedPair | Family::RunawayPair => clique_range(delta, s, f),
        Family::Mixed => {
            let (lo, hi) = clique_range(delta, s, f);
            (lo, hi.min(Rational::new(1, 8)))
        }
    };

    let mut perm: Vec<NodeId> = (0..b.n).collect();
    perm.shuffle(&mut rng);
    let graph = Graph::from_edges(b.n, b.edges.iter().map(|&(u, v)| (perm[u], perm[v])))
        .expect("generator emits simple graphs");
    if graph.delta() != delta || graph.contains_delta_plus_one_clique() {
        return Err(unsupported(format!(
            "construction has Δ = {} (Δ+1-clique: {})",
            graph.delta(),
            graph.contains_delta_plus_one_clique()
        )));
    }

    let relabel = |v: NodeId| perm[v];
    let mut cliques: Vec<Vec<NodeId>> = piece
        .cliques
        .iter()
        .map(|c| {
            let mut c: Vec<NodeId> = c.iter().copied().map(relabel).collect();
            c.sort_unstable();
            c
        })
        .collect();
    cliques.sort_unstable();
    let mut specials: Vec<NodeId> = piece.specials.iter().copied().map(relabel).collect();
    specials.sort_unstable();
    let mut non_edges: Vec<(NodeId, NodeId)> = piece
        .non_edges
        .iter()
        .map(|&(u, v)| {
            let (u, v) = (relabel(u), relabel(v));
            (u.min(v), u.max(v))
        })
        .collect();
    non_edges.sort_unstable();

    let cross_edges = if specials.is_empty() { 0 } else { f };
    let meta = GeneratorMeta {
        family,
        delta,
        seed,
        params: *params,
        cliques,
        specials,
        non_edges,
        cross_edges,
        epsilon_min: range.0,
        epsilon_max: range.1,
    };
    Ok(GeneratedInstance { graph, meta })
}

/// ε range for cliques of `Δ - s` members with at most `m` neighbors of any
/// outside node in one clique. Lower end: size, density and similarity of
/// members; upper end: outside nodes must be neither similar to members nor
/// pulled in by augmentation.
fn clique_range(delta: usize, s: usize, m: usize) -> (Rational, Rational) {
    let d = delta as i64;
    let lo = Rational::new(s as i64, d).max(Rational::new(s as i64 + 1, 3 * d));
    let hi = max_epsilon().min(Rational::new((d - m as i64 - 1).max(0), 4 * d));
    debug_assert!(!hi.is_zero() && lo < hi);
    (lo, hi)
}

#[derive(Default)]
struct Builder {
    n: usize,
    edges: Vec<(NodeId, NodeId)>,
    degree: Vec<usize>,
}

impl Builder {
    fn node(&mut self) -> NodeId {
        self.n += 1;
        self.degree.push(0);
        self.n - 1
    }

    fn nodes(&mut self, k: usize) -> Vec<NodeId> {
        (0..k).map(|_| self.node()).collect()
    }

    fn edge(&mut self, u: NodeId, v: NodeId) {
        self.edges.push((u, v));
        self.degree[u] += 1;
        self.degree[v] += 1;
    }

    fn clique(&mut self, k: usize) -> Vec<NodeId> {
        let c = self.nodes(k);
        for i in 0..k {
            for j in i + 1..k {
                self.edge(c[i], c[j]);
            }
        }
        c
    }

    /// Fresh leaf attached to `v`.
    fn pendant(&mut self, v: NodeId) -> NodeId {
        let leaf = self.node();
        self.edge(v, leaf);
        leaf
    }
}

#[derive(Default)]
struct Piece {
    cliques: Vec<Vec<NodeId>>,
    specials: Vec<NodeId>,
    non_edges: Vec<(NodeId, NodeId)>,
    /// Nodes of degree 1 that may take one bridge edge.
    leaves: Vec<NodeId>,
}

impl Piece {
    fn absorb(&mut self, other: Piece) {
        self.cliques.extend(other.cliques);
        self.specials.extend(other.specials);
        self.non_edges.extend(other.non_edges);
        self.leaves.extend(other.leaves);
    }
}

fn clique_minus_edge(b: &mut Builder, delta: usize) -> Piece {
    let c = b.nodes(delta + 1);
    for i in 0..=delta {
        for j in i + 1..=delta {
            if (i, j) != (0, 1) {
                b.edge(c[i], c[j]);
            }
        }
    }
    Piece { non_edges: vec![(c[0], c[1])], cliques: vec![c], ..Piece::default() }
}

fn matched_cliques(b: &mut Builder, delta: usize) -> Piece {
    let a = b.clique(delta);
    let c = b.clique(delta);
    for i in 0..delta {
        b.edge(a[i], c[i]);
    }
    Piece { cliques: vec![a, c], ..Piece::default() }
}

/// Clique of `Δ - s` members; special `p_j` sees members `[j f, (j+1) f)`.
/// Every member gets `s + 1` outside neighbors: its special, if any, then
/// private leaves.
fn guarded_pair(b: &mut Builder, delta: usize, s: usize, f: usize) -> Piece {
    let c = b.clique(delta - s);
    let specials = vec![b.node(), b.node()];
    let mut leaves = Vec::new();
    for (i, &v) in c.iter().enumerate() {
        let mut slots = s + 1;
        if i < 2 * f {
            b.edge(specials[i / f], v);
            slots -= 1;
        }
        for _ in 0..slots {
            leaves.push(b.pendant(v));
        }
    }
    Piece { cliques: vec![c], specials, leaves, ..Piece::default() }
}

/// Two cliques of `Δ - s` members. Each special sees a block of `f` members
/// in both; remaining members are matched to their twin in the other clique,
/// and leftover outside slots take private leaves.
fn runaway_pair(b: &mut Builder, delta: usize, s: usize, f: usize) -> Piece {
    let k = delta - s;
    let a = b.clique(k);
    let c = b.clique(k);
    let specials = vec![b.node(), b.node()];
    let mut leaves = Vec::new();
    for i in 0..k {
        if i < 2 * f {
            b.edge(specials[i / f], a[i]);
            b.edge(specials[i / f], c[i]);
        } else {
            b.edge(a[i], c[i]);
        }
        for _ in 0..s {
            leaves.push(b.pendant(a[i]));
            leaves.push(b.pendant(c[i]));
        }
    }
    Piece { cliques: vec![a, c], specials, leaves, ..Piece::default() }
}

/// Inserts edges among `nodes` in a random order of all pairs, skipping any
/// that would push an endpoint past `cap`.
fn capped_random(b: &mut Builder, nodes: &[NodeId], cap: usize, rng: &mut ChaCha8Rng) {
    let mut pairs: Vec<(NodeId, NodeId)> =
        (0..nodes.len()).flat_map(|i| (i + 1..nodes.len()).map(move |j| (i, j))).collect();
    pairs.shuffle(rng);
    for (i, j) in pairs {
        let (u, v) = (nodes[i], nodes[j]);
        if b.degree[u] < cap && b.degree[v] < cap {
            b.edge(u, v);
        }
    }
}

/// `components` bundles, each holding one copy of every figure family plus
/// a sparse random filler (degree ≤ Δ/2) bridged to them; consecutive
/// fillers are chained.
fn mixed(b: &mut Builder, piece: &mut Piece, delta: usize, s: usize, f: usize, components: usize, rng: &mut ChaCha8Rng) {
    let mut previous: Option<NodeId> = None;
    for _ in 0..components {
        let cme = clique_minus_edge(b, delta);
        let matched = matched_cliques(b, delta);
        let guarded = guarded_pair(b, delta, s, f);
        let runaway = runaway_pair(b, delta, s, f);

        let filler = b.nodes(2 * delta);
        capped_random(b, &filler, delta / 2 - 2, rng);
        // Each filler node takes at most one bridge.
        let mut port = filler.iter().copied();
        let mut bridge = |b: &mut Builder, v: NodeId| b.edge(port.next().unwrap(), v);
        bridge(b, cme.non_edges[0].0);
        if let Some(&leaf) = guarded.leaves.first() {
            bridge(b, leaf);
        }
        for &e in &runaway.specials {
            bridge(b, e);
        }
        if let Some(p) = previous {
            bridge(b, p);
        }
        previous = Some(*filler.last().unwrap());

        for p in [cme, matched, guarded, runaway] {
            piece.absorb(p);
        }
    }
}
