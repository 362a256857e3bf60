//! (deg+1)-list coloring: instance assembly, a randomized trial engine run on
//! the simulator, a sequential greedy oracle and the per-run instance ledger.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::Thresholds;
use crate::coloring::PartialColoring;
use crate::graph::{Color, Graph, NodeId};
use crate::sim::{
    ceil_log2, run_protocol, BitString, Envelope, Message, NodeProgram, NodeRng, Outbox, RoundMetrics, SimConfig,
    SimError, Step,
};

/// A real node, or two non-adjacent nodes that must share a color.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    Node(NodeId),
    Pair(NodeId, NodeId),
}

impl Unit {
    pub fn members(&self) -> impl Iterator<Item = NodeId> {
        let (a, b) = match *self {
            Unit::Node(v) => (v, None),
            Unit::Pair(u, w) => (u, Some(w)),
        };
        std::iter::once(a).chain(b)
    }

    fn key(&self) -> NodeId {
        self.members().min().unwrap()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ListError {
    #[error("unit {unit:?}: palette {palette} < degree {degree} + 1")]
    DegPlusOne { unit: Unit, palette: usize, degree: usize },
    #[error("unit {0:?} contains a colored node")]
    Colored(Unit),
    #[error("pair {0:?} is not a non-edge of distinct nodes")]
    BadPair(Unit),
    #[error("node {0} appears in two units")]
    Repeated(NodeId),
    #[error("greedy found no free color for unit {0:?}")]
    Infeasible(Unit),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ListInstance {
    /// Sorted by smallest member id.
    pub units: Vec<Unit>,
    /// Sorted neighbor lists over unit indices.
    pub adjacency: Vec<Vec<usize>>,
    /// Sorted available colors per unit.
    pub palettes: Vec<Vec<Color>>,
}

impl ListInstance {
    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn min_palette(&self) -> Option<usize> {
        self.palettes.iter().map(Vec::len).min()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(i, a)| a.iter().filter(move |&&j| i < j).map(move |&j| (i, j)))
    }

    /// First unit violating `|palette| ≥ deg + 1`, if any.
    pub fn deg_plus_one_violation(&self) -> Option<ListError> {
        (0..self.len()).find(|&i| self.palettes[i].len() <= self.degree(i)).map(|i| ListError::DegPlusOne {
            unit: self.units[i],
            palette: self.palettes[i].len(),
            degree: self.degree(i),
        })
    }

    /// Proper on instance edges, and every unit uses a palette color.
    pub fn accepts(&self, assignment: &[Color]) -> bool {
        assignment.len() == self.len()
            && (0..self.len()).all(|i| self.palettes[i].binary_search(&assignment[i]).is_ok())
            && self.edges().all(|(i, j)| assignment[i] != assignment[j])
    }

    /// Builds an instance from raw parts; used for testing the engines.
    pub fn from_parts(adjacency: Vec<Vec<usize>>, palettes: Vec<Vec<Color>>) -> Self {
        let units = (0..adjacency.len()).map(Unit::Node).collect();
        let mut adjacency = adjacency;
        for a in &mut adjacency {
            a.sort_unstable();
            a.dedup();
        }
        let palettes = palettes
            .into_iter()
            .map(|mut p| {
                p.sort_unstable();
                p.dedup();
                p
            })
            .collect();
        Self { units, adjacency, palettes }
    }
}

/// Assembles the instance over `units` with palettes drawn from `[Δ]`. Two
/// units are adjacent when any of their members are adjacent in `g`.
pub fn build_instance(g: &Graph, coloring: &PartialColoring, units: &[Unit]) -> Result<ListInstance, ListError> {
    let mut units = units.to_vec();
    units.sort_by_key(Unit::key);

    let mut owner = vec![usize::MAX; g.n()];
    for (i, unit) in units.iter().enumerate() {
        if let Unit::Pair(u, w) = *unit {
            if u == w || g.has_edge(u, w) {
                return Err(ListError::BadPair(*unit));
            }
        }
        for v in unit.members() {
            if coloring.is_colored(v) {
                return Err(ListError::Colored(*unit));
            }
            if owner[v] != usize::MAX {
                return Err(ListError::Repeated(v));
            }
            owner[v] = i;
        }
    }

    let delta = g.delta();
    let mut adjacency = Vec::with_capacity(units.len());
    let mut palettes = Vec::with_capacity(units.len());
    for (i, unit) in units.iter().enumerate() {
        let mut used = vec![false; delta];
        let mut adj = Vec::new();
        for v in unit.members() {
            for &u in g.neighbors(v) {
                if let Some(c) = coloring.get(u) {
                    if (c as usize) < delta {
                        used[c as usize] = true;
                    }
                } else if owner[u] != usize::MAX && owner[u] != i {
                    adj.push(owner[u]);
                }
            }
        }
        adj.sort_unstable();
        adj.dedup();
        adjacency.push(adj);
        palettes.push((0..delta as Color).filter(|&c| !used[c as usize]).collect());
    }

    let instance = ListInstance { units, adjacency, palettes };
    match instance.deg_plus_one_violation() {
        Some(e) => Err(e),
        None => Ok(instance),
    }
}

/// Writes each unit's color to all of its members.
pub fn apply_assignment(coloring: &mut PartialColoring, instance: &ListInstance, assignment: &[Color]) {
    for (unit, &c) in instance.units.iter().zip(assignment) {
        for v in unit.members() {
            coloring.set(v, c);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrialMsg {
    Try(Color),
    Fixed(Color),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrialEnvelope {
    pub msg: TrialMsg,
    pub width: u32,
}

impl Message for TrialEnvelope {
    fn encode(&self, out: &mut BitString) {
        let (tag, c) = match self.msg {
            TrialMsg::Try(c) => (false, c),
            TrialMsg::Fixed(c) => (true, c),
        };
        out.push_bool(tag);
        out.push_bits(c as u64, self.width);
    }
}

/// One unit of the trial loop: with probability 1/2 try a uniform color not
/// yet fixed by a neighbor; keep it if no neighbor tried or fixed it in the
/// same round.
#[derive(Clone, Debug)]
pub struct TrialProgram {
    palette: Vec<Color>,
    pending: Option<Color>,
    width: u32,
    pub color: Option<Color>,
}

impl TrialProgram {
    pub fn new(palette: Vec<Color>, width: u32) -> Self {
        Self { palette, pending: None, width, color: None }
    }

    fn wrap(&self, msg: TrialMsg) -> TrialEnvelope {
        TrialEnvelope { msg, width: self.width }
    }
}

impl NodeProgram for TrialProgram {
    type Msg = TrialEnvelope;

    fn step(&mut self, _round: usize, inbox: &[Envelope<TrialEnvelope>], rng: &mut NodeRng) -> Step<TrialEnvelope> {
        use rand::Rng;

        for e in inbox {
            if let TrialMsg::Fixed(c) = e.msg.msg {
                self.palette.retain(|&x| x != c);
            }
        }
        if let Some(t) = self.pending.take() {
            let clash = inbox.iter().any(|e| matches!(e.msg.msg, TrialMsg::Try(c) | TrialMsg::Fixed(c) if c == t));
            if !clash {
                self.color = Some(t);
                return Step::halt_with(Outbox::Broadcast(self.wrap(TrialMsg::Fixed(t))));
            }
        }
        if !self.palette.is_empty() && rng.gen_bool(0.5) {
            let t = self.palette[rng.gen_range(0..self.palette.len())];
            self.pending = Some(t);
            return Step::send(Outbox::Broadcast(self.wrap(TrialMsg::Try(t))));
        }
        Step::idle()
    }
}

/// `64 · ⌈log2 n⌉ + 64`.
pub fn default_max_rounds(n: usize) -> usize {
    64 * ceil_log2(n.max(2)) + 64
}

/// Runs the trial loop on the instance's unit graph. Colors need `⌈log2 Δ⌉`
/// bits, so messages carry one tag bit plus that.
pub fn solve_distributed(
    instance: &ListInstance,
    delta: usize,
    config: &SimConfig,
) -> Result<(Vec<Color>, RoundMetrics), SimError> {
    if instance.is_empty() {
        return Ok((Vec::new(), RoundMetrics::default()));
    }
    let h = Graph::from_edges(instance.len(), instance.edges()).expect("instance adjacency is simple");
    let width = ceil_log2(delta) as u32;
    let programs = instance.palettes.iter().map(|p| TrialProgram::new(p.clone(), width)).collect();
    let (programs, metrics) = run_protocol(&h, programs, config)?;
    let assignment = programs.iter().map(|p| p.color.expect("halted units are colored")).collect();
    Ok((assignment, metrics))
}

/// Sequential greedy in unit order: smallest palette color not taken by an
/// earlier neighbor.
pub fn solve_greedy_oracle(instance: &ListInstance) -> Result<Vec<Color>, ListError> {
    let mut assignment: Vec<Option<Color>> = vec![None; instance.len()];
    for i in 0..instance.len() {
        let taken: Vec<Color> = instance.adjacency[i].iter().filter_map(|&j| assignment[j]).collect();
        let c = instance.palettes[i]
            .iter()
            .copied()
            .find(|c| !taken.contains(c))
            .ok_or(ListError::Infeasible(instance.units[i]))?;
        assignment[i] = Some(c);
    }
    Ok(assignment.into_iter().map(Option::unwrap).collect())
}

/// The sixteen instance kinds of the reduction, in execution order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceKind {
    Sparse,
    OrdinaryGray,
    OrdinaryWhite,
    RunawayGray,
    RunawayWhite,
    NiceAGray,
    NiceAWhite,
    NiceBGray,
    NiceBDeferred,
    NiceCPairs,
    NiceCGray,
    NiceCWhite,
    GuardedPairs,
    GuardedGray,
    GuardedWhite,
    Escapes,
}

impl InstanceKind {
    pub const ALL: [InstanceKind; 16] = [
        InstanceKind::Sparse,
        InstanceKind::OrdinaryGray,
        InstanceKind::OrdinaryWhite,
        InstanceKind::RunawayGray,
        InstanceKind::RunawayWhite,
        InstanceKind::NiceAGray,
        InstanceKind::NiceAWhite,
        InstanceKind::NiceBGray,
        InstanceKind::NiceBDeferred,
        InstanceKind::NiceCPairs,
        InstanceKind::NiceCGray,
        InstanceKind::NiceCWhite,
        InstanceKind::GuardedPairs,
        InstanceKind::GuardedGray,
        InstanceKind::GuardedWhite,
        InstanceKind::Escapes,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InstanceKind::Sparse => "sparse",
            InstanceKind::OrdinaryGray => "ordinary_gray",
            InstanceKind::OrdinaryWhite => "ordinary_white",
            InstanceKind::RunawayGray => "runaway_gray",
            InstanceKind::RunawayWhite => "runaway_white",
            InstanceKind::NiceAGray => "nice_a_gray",
            InstanceKind::NiceAWhite => "nice_a_white",
            InstanceKind::NiceBGray => "nice_b_gray",
            InstanceKind::NiceBDeferred => "nice_b_deferred",
            InstanceKind::NiceCPairs => "nice_c_pairs",
            InstanceKind::NiceCGray => "nice_c_gray",
            InstanceKind::NiceCWhite => "nice_c_white",
            InstanceKind::GuardedPairs => "guarded_pairs",
            InstanceKind::GuardedGray => "guarded_gray",
            InstanceKind::GuardedWhite => "guarded_white",
            InstanceKind::Escapes => "escapes",
        }
    }

    pub fn is_pair_instance(self) -> bool {
        matches!(self, InstanceKind::NiceCPairs | InstanceKind::GuardedPairs)
    }
}

/// Which parts of a run execute as simulated node programs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Faithfulness {
    Distributed,
    /// Computed by the coordinator, or (for pair units) simulated as single
    /// logical nodes without relay routing.
    Centralized,
}

/// List-size thresholds, compared exactly on integers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    /// The deg+1 requirement alone.
    One,
    HalfDelta,
    ThirdDelta,
    HalfPhi,
}

impl Bound {
    pub fn label(self) -> &'static str {
        match self {
            Bound::One => "1",
            Bound::HalfDelta => "Δ/2",
            Bound::ThirdDelta => "Δ/3",
            Bound::HalfPhi => "φ/2",
        }
    }

    pub fn holds(self, x: usize, t: &Thresholds) -> bool {
        match self {
            Bound::One => x >= 1,
            Bound::HalfDelta => 2 * x >= t.delta,
            Bound::ThirdDelta => 3 * x >= t.delta,
            Bound::HalfPhi => t.meets_phi_half(x),
        }
    }
}

/// What a gate measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    /// Smallest palette at build time.
    MinPalette,
    /// Fewest white nodes in any single AC of the phase.
    WhitePerAc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gate {
    pub measure: Measure,
    pub bound: Bound,
    /// `None` when there was nothing to measure.
    pub measured: Option<usize>,
    pub ok: bool,
}

impl Gate {
    pub fn check(measure: Measure, bound: Bound, measured: Option<usize>, t: &Thresholds) -> Self {
        Self { measure, bound, measured, ok: measured.map_or(true, |x| bound.holds(x, t)) }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub kind: InstanceKind,
    pub units: usize,
    pub pairs: usize,
    pub min_palette: Option<usize>,
    pub max_degree: usize,
    pub rounds: usize,
    pub faithfulness: Faithfulness,
    pub gates: Vec<Gate>,
}

impl LedgerEntry {
    pub fn new(kind: InstanceKind, instance: &ListInstance, rounds: usize) -> Self {
        Self {
            kind,
            units: instance.len(),
            pairs: instance.units.iter().filter(|u| matches!(u, Unit::Pair(..))).count(),
            min_palette: instance.min_palette(),
            max_degree: instance.max_degree(),
            rounds,
            faithfulness: if kind.is_pair_instance() { Faithfulness::Centralized } else { Faithfulness::Distributed },
            gates: Vec::new(),
        }
    }

    pub fn gates_ok(&self) -> bool {
        self.gates.iter().all(|g| g.ok)
    }
}

/// Executed instances in order. Every kind is recorded, empty or not, so a
/// run's ledger always has the same sixteen entries.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceLedger {
    pub entries: Vec<LedgerEntry>,
}

impl InstanceLedger {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn push(&mut self, entry: LedgerEntry) {
        self.entries.push(entry);
    }

    pub fn get(&self, kind: InstanceKind) -> Option<&LedgerEntry> {
        self.entries.iter().find(|e| e.kind == kind)
    }

    /// Kind and emptiness of each entry; independent of instance sizes.
    pub fn shape(&self) -> Vec<(InstanceKind, bool)> {
        self.entries.iter().map(|e| (e.kind, e.units == 0)).collect()
    }

    pub fn gate_failures(&self) -> Vec<(InstanceKind, Gate)> {
        self.entries.iter().flat_map(|e| e.gates.iter().filter(|g| !g.ok).map(move |g| (e.kind, *g))).collect()
    }

    pub fn total_rounds(&self) -> usize {
        self.entries.iter().map(|e| e.rounds).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::tests::complete;

    #[test]
    fn lone_unit_takes_its_only_color() {
        let inst = ListInstance::from_parts(vec![vec![]], vec![vec![5]]);
        let (a, _) = solve_distributed(&inst, 8, &SimConfig::new(1, 100)).unwrap();
        assert_eq!(a, vec![5]);
        assert_eq!(solve_greedy_oracle(&inst).unwrap(), vec![5]);
    }

    #[test]
    fn path_of_three() {
        let inst = ListInstance::from_parts(vec![vec![1], vec![0, 2], vec![1]], vec![vec![0, 1], vec![0, 1, 2], vec![0, 1]]);
        for seed in 0..50 {
            let (a, _) = solve_distributed(&inst, 3, &SimConfig::new(seed, default_max_rounds(3))).unwrap();
            assert!(inst.accepts(&a));
        }
        assert!(inst.accepts(&solve_greedy_oracle(&inst).unwrap()));
    }

    #[test]
    fn palette_after_same_colored_neighbors() {
        // Node 0 of K5 (Δ = 4) with every neighbor colored, two alike.
        let g = complete(5);
        let mut c = PartialColoring::uncolored(5);
        for (v, col) in [(1, 0), (2, 1), (3, 2), (4, 2)] {
            c.set(v, col);
        }
        let inst = build_instance(&g, &c, &[Unit::Node(0)]).unwrap();
        assert_eq!(inst.palettes[0], vec![3]);
        assert_eq!(inst.degree(0), 0);
    }

    #[test]
    fn pair_palette_is_intersection() {
        // 0 and 1 non-adjacent, Δ = 5; 0 sees colors {0, 1}, 1 sees {2}.
        let g = Graph::from_edges(6, [(0, 2), (0, 3), (1, 4), (2, 5), (3, 5), (4, 5), (5, 1), (0, 5)]).unwrap();
        assert_eq!(g.delta(), 5);
        let mut c = PartialColoring::uncolored(6);
        c.set(2, 0);
        c.set(3, 1);
        c.set(4, 2);
        let inst = build_instance(&g, &c, &[Unit::Pair(0, 1), Unit::Node(5)]).unwrap();
        assert_eq!(inst.palettes[0], vec![3, 4]);
        assert_eq!(inst.adjacency[0], vec![1]);
        assert!(matches!(build_instance(&g, &c, &[Unit::Pair(0, 5)]), Err(ListError::BadPair(_))));
    }

    #[test]
    fn deg_plus_one_violation_names_unit() {
        let g = complete(4);
        let mut c = PartialColoring::uncolored(4);
        c.set(3, 0);
        // Units 0, 1, 2 share palette {1, 2} with degree 2.
        let err = build_instance(&g, &c, &[Unit::Node(0), Unit::Node(1), Unit::Node(2)]).unwrap_err();
        assert!(matches!(err, ListError::DegPlusOne { palette: 2, degree: 2, .. }));
    }

    #[test]
    fn greedy_on_k4_with_four_colors() {
        let adj = (0..4).map(|i| (0..4).filter(|&j| j != i).collect()).collect();
        let inst = ListInstance::from_parts(adj, vec![vec![0, 1, 2, 3]; 4]);
        assert!(inst.accepts(&solve_greedy_oracle(&inst).unwrap()));
    }

    #[test]
    fn bounds_are_exact() {
        let t = Thresholds::new(64);
        assert!(Bound::HalfPhi.holds(4, &t) && !Bound::HalfPhi.holds(3, &t));
        assert!(Bound::HalfDelta.holds(32, &t) && !Bound::HalfDelta.holds(31, &t));
        assert!(Bound::ThirdDelta.holds(22, &t) && !Bound::ThirdDelta.holds(21, &t));
    }
}
