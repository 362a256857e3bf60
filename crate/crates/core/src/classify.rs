//! Almost-clique classification and the seven-set fine partition.
//!
//! Thresholds `ψ = Δ^{1/3}` and `φ = Δ^{2/3}/2` are irrational in general,
//! so every comparison against them is carried out on integers: `k ≥ φ` iff
//! `(2k)^3 ≥ Δ^2`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acd::AlmostCliqueDecomposition;
use crate::graph::{Graph, NodeId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thresholds {
    pub delta: usize,
}

impl Thresholds {
    pub fn new(delta: usize) -> Self {
        Self { delta }
    }

    pub fn psi(&self) -> f64 {
        (self.delta as f64).cbrt()
    }

    pub fn phi(&self) -> f64 {
        (self.delta as f64).powf(2.0 / 3.0) / 2.0
    }

    /// `⌊ψ⌋`, exact.
    pub fn psi_floor(&self) -> usize {
        let d = self.delta as u128;
        let mut r = (self.delta as f64).cbrt() as u128;
        while r * r * r > d {
            r -= 1;
        }
        while (r + 1) * (r + 1) * (r + 1) <= d {
            r += 1;
        }
        r as usize
    }

    /// `k ≥ Δ^{2/3} / divisor`, i.e. `(divisor·k)^3 ≥ Δ^2`.
    fn meets(&self, k: usize, divisor: u128) -> bool {
        let lhs = divisor * k as u128;
        let d = self.delta as u128;
        lhs * lhs * lhs >= d * d
    }

    /// `k ≥ φ`.
    pub fn meets_phi(&self, k: usize) -> bool {
        self.meets(k, 2)
    }

    /// `k ≥ φ/2`.
    pub fn meets_phi_half(&self, k: usize) -> bool {
        self.meets(k, 4)
    }

    /// `⌈φ⌉`.
    pub fn phi_ceil(&self) -> usize {
        (0..).find(|&k| self.meets_phi(k)).unwrap()
    }

    /// `⌈φ/2⌉`.
    pub fn phi_half_ceil(&self) -> usize {
        (0..).find(|&k| self.meets_phi_half(k)).unwrap()
    }

    /// `|C| ≥ Δ - ψ`, with `ψ` rounded down.
    pub fn large_enough(&self, size: usize) -> bool {
        size + self.psi_floor() >= self.delta
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AcKind {
    Nice,
    Ordinary,
    Guarded,
    Runaway,
}

impl AcKind {
    pub fn is_difficult(self) -> bool {
        matches!(self, AcKind::Guarded | AcKind::Runaway)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcClass {
    pub kind: AcKind,
    pub easy: bool,
    /// Outside nodes with at least `φ` neighbors in the AC.
    pub specials: Vec<NodeId>,
    /// Picked special (protector or escape) of a difficult AC.
    pub picked: Option<NodeId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcClassification {
    pub thresholds: Thresholds,
    pub classes: Vec<AcClass>,
    pub protectors: Vec<NodeId>,
    pub escapes: Vec<NodeId>,
}

impl AcClassification {
    pub fn kind(&self, ac: usize) -> AcKind {
        self.classes[ac].kind
    }

    pub fn acs_of_kind(&self, kind: AcKind) -> impl Iterator<Item = usize> + '_ {
        self.classes.iter().enumerate().filter(move |(_, c)| c.kind == kind).map(|(i, _)| i)
    }
}

/// `{v ∉ C : |N(v) ∩ C| ≥ φ}`, sorted.
pub fn find_special(g: &Graph, acd: &AlmostCliqueDecomposition, ac: usize, thresholds: &Thresholds) -> Vec<NodeId> {
    let mut counts: std::collections::BTreeMap<NodeId, usize> = Default::default();
    for &v in acd.clique(ac) {
        for &u in g.neighbors(v) {
            if acd.clique_of(u) != Some(ac) {
                *counts.entry(u).or_default() += 1;
            }
        }
    }
    counts.into_iter().filter(|&(_, k)| thresholds.meets_phi(k)).map(|(u, _)| u).collect()
}

pub fn has_non_edge(g: &Graph, acd: &AlmostCliqueDecomposition, ac: usize) -> bool {
    let c = acd.clique(ac);
    c.iter().any(|&v| g.neighbors(v).iter().filter(|&&u| acd.clique_of(u) == Some(ac)).count() + 1 < c.len())
}

/// Smallest non-adjacent pair `(u, w)`, `u < w`, in lexicographic order.
pub fn first_non_edge(g: &Graph, acd: &AlmostCliqueDecomposition, ac: usize) -> Option<(NodeId, NodeId)> {
    let c = acd.clique(ac);
    c.iter().enumerate().find_map(|(i, &u)| c[i + 1..].iter().find(|&&w| !g.has_edge(u, w)).map(|&w| (u, w)))
}

/// Contains two non-adjacent members or a simplicial member.
pub fn is_easy(g: &Graph, acd: &AlmostCliqueDecomposition, ac: usize) -> bool {
    has_non_edge(g, acd, ac) || acd.clique(ac).iter().any(|&v| g.is_simplicial(v))
}

pub fn classify_acs(g: &Graph, acd: &AlmostCliqueDecomposition, thresholds: &Thresholds) -> AcClassification {
    let t = acd.cliques().len();
    let mut classes: Vec<AcClass> = (0..t)
        .map(|i| {
            let specials = find_special(g, acd, i, thresholds);
            let easy = is_easy(g, acd, i);
            let difficult = !easy && !specials.is_empty() && thresholds.large_enough(acd.clique(i).len());
            AcClass {
                kind: AcKind::Ordinary,
                easy,
                picked: if difficult { specials.first().copied() } else { None },
                specials,
            }
        })
        .collect();

    // Escape/protector status depends on every pick, so count first.
    let mut picks = vec![0usize; g.n()];
    for c in &classes {
        if let Some(p) = c.picked {
            picks[p] += 1;
        }
    }
    for (i, c) in classes.iter_mut().enumerate() {
        c.kind = match c.picked {
            Some(p) if picks[p] >= 2 => AcKind::Runaway,
            Some(_) => AcKind::Guarded,
            None if c.easy || acd.clique(i).iter().any(|&v| picks[v] > 0) => AcKind::Nice,
            None => AcKind::Ordinary,
        };
    }
    let protectors = g.nodes().filter(|&v| picks[v] == 1).collect();
    let escapes = g.nodes().filter(|&v| picks[v] >= 2).collect();
    AcClassification { thresholds: *thresholds, classes, protectors, escapes }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeClass {
    Protector,
    Escape,
    Sparse,
    Ordinary,
    Runaway,
    Nice,
    Guarded,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinePartition {
    pub protectors: Vec<NodeId>,
    pub escapes: Vec<NodeId>,
    pub sparse: Vec<NodeId>,
    pub ordinary: Vec<NodeId>,
    pub runaway: Vec<NodeId>,
    pub nice: Vec<NodeId>,
    pub guarded: Vec<NodeId>,
    pub class: Vec<NodeClass>,
}

impl FinePartition {
    pub fn class_of(&self, v: NodeId) -> NodeClass {
        self.class[v]
    }

    pub fn set(&self, class: NodeClass) -> &[NodeId] {
        match class {
            NodeClass::Protector => &self.protectors,
            NodeClass::Escape => &self.escapes,
            NodeClass::Sparse => &self.sparse,
            NodeClass::Ordinary => &self.ordinary,
            NodeClass::Runaway => &self.runaway,
            NodeClass::Nice => &self.nice,
            NodeClass::Guarded => &self.guarded,
        }
    }

    pub fn mask(&self, classes: &[NodeClass]) -> Vec<bool> {
        self.class.iter().map(|c| classes.contains(c)).collect()
    }

    pub fn sizes(&self) -> [usize; 7] {
        [
            self.protectors.len(),
            self.escapes.len(),
            self.sparse.len(),
            self.ordinary.len(),
            self.runaway.len(),
            self.nice.len(),
            self.guarded.len(),
        ]
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PartitionError {
    #[error("node {node} falls into several sets: {classes:?}")]
    Overlap { node: NodeId, classes: Vec<NodeClass> },
    #[error("node {0} falls into no set")]
    Uncovered(NodeId),
    #[error("{kind:?} almost-clique {ac} is not a clique")]
    NotAClique { ac: usize, kind: AcKind },
    #[error("{kind:?} almost-clique {ac} contains picked special {node}")]
    ContainsPicked { ac: usize, kind: AcKind, node: NodeId },
}

pub fn fine_partition(
    g: &Graph,
    acd: &AlmostCliqueDecomposition,
    classification: &AcClassification,
) -> Result<FinePartition, PartitionError> {
    let n = g.n();
    let mut picked = vec![None; n];
    for &p in &classification.protectors {
        picked[p] = Some(NodeClass::Protector);
    }
    for &e in &classification.escapes {
        picked[e] = Some(NodeClass::Escape);
    }

    // Difficult and ordinary ACs are cliques free of picked specials.
    for (ac, class) in classification.classes.iter().enumerate() {
        if class.kind == AcKind::Nice {
            continue;
        }
        if has_non_edge(g, acd, ac) {
            return Err(PartitionError::NotAClique { ac, kind: class.kind });
        }
        if let Some(&node) = acd.clique(ac).iter().find(|&&v| picked[v].is_some()) {
            return Err(PartitionError::ContainsPicked { ac, kind: class.kind, node });
        }
    }

    let mut class = Vec::with_capacity(n);
    for v in g.nodes() {
        let mut hits = Vec::with_capacity(2);
        if let Some(c) = picked[v] {
            hits.push(c);
        }
        match acd.clique_of(v) {
            None if picked[v].is_none() => hits.push(NodeClass::Sparse),
            None => {}
            Some(ac) => match classification.kind(ac) {
                AcKind::Ordinary => hits.push(NodeClass::Ordinary),
                AcKind::Runaway => hits.push(NodeClass::Runaway),
                AcKind::Guarded => hits.push(NodeClass::Guarded),
                AcKind::Nice if picked[v].is_none() => hits.push(NodeClass::Nice),
                AcKind::Nice => {}
            },
        }
        match hits.len() {
            0 => return Err(PartitionError::Uncovered(v)),
            1 => class.push(hits[0]),
            _ => return Err(PartitionError::Overlap { node: v, classes: hits }),
        }
    }

    let collect = |c: NodeClass| -> Vec<NodeId> { (0..n).filter(|&v| class[v] == c).collect() };
    let partition = FinePartition {
        protectors: collect(NodeClass::Protector),
        escapes: collect(NodeClass::Escape),
        sparse: collect(NodeClass::Sparse),
        ordinary: collect(NodeClass::Ordinary),
        runaway: collect(NodeClass::Runaway),
        nice: collect(NodeClass::Nice),
        guarded: collect(NodeClass::Guarded),
        class,
    };
    debug_assert_eq!(partition.sizes().iter().sum::<usize>(), n);
    Ok(partition)
}
