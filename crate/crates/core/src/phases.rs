//! The coloring pipeline: decomposition, classification, SlackGeneration and
//! the ordered list-coloring instances that finish the Δ-coloring.
//!
//! Every instance of the sequence below is recorded in the ledger, including
//! empty ones:
//!
//! | step | instances |
//! |------|-----------|
//! | 4 | sparse |
//! | 5 | ordinary gray, ordinary white |
//! | 6 | runaway gray, runaway white |
//! | 7 | nice-a gray/white, nice-b gray/deferred, nice-c pairs/gray/white |
//! | 8 | guarded pairs, guarded gray, guarded white |
//! | 9 | escapes |
//!
//! SlackGeneration failures, deg+1 violations, broken white/gray splits and
//! round limits are retried with the next seed; ACD and classification are
//! computed once.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acd::{compute_acd, AcdConfig, AcdError, AlmostCliqueDecomposition};
use crate::classify::{
    classify_acs, fine_partition, first_non_edge, has_non_edge, AcClassification, AcKind, FinePartition, NodeClass,
    PartitionError, Thresholds,
};
use crate::coloring::PartialColoring;
use crate::graph::{Graph, NodeId, Rational};
use crate::listcolor::{
    apply_assignment, build_instance, default_max_rounds, solve_distributed, Bound, Faithfulness, Gate,
    InstanceKind, InstanceLedger, LedgerEntry, ListError, ListInstance, Measure, Unit,
};
use crate::oracle::validate_coloring;
use crate::sim::{congest_budget, RoundMetrics, SimConfig, SimError};
use crate::slackgen::{check_slack_report, measure_slack, run_slack_generation_with, SlackReport, DEFAULT_P_G};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    #[serde(with = "crate::acd::rational_str")]
    pub epsilon: Rational,
    pub p_g: f64,
    pub max_retries: usize,
    pub delta_min: usize,
    /// Round cap per list instance; `64 ⌈log2 n⌉ + 64` when absent.
    pub max_trial_rounds: Option<usize>,
    pub seed: u64,
    pub strict_congest: bool,
    pub congest_c: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            epsilon: crate::acd::default_epsilon(),
            p_g: DEFAULT_P_G,
            max_retries: 16,
            delta_min: 8,
            max_trial_rounds: None,
            seed: 0,
            strict_congest: false,
            congest_c: 4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    SlackGeneration,
    Sparse,
    Ordinary,
    Runaway,
    NiceA,
    NiceB,
    NiceC,
    Guarded,
    Escapes,
    Final,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttemptFailure {
    pub attempt: usize,
    pub seed: u64,
    pub phase: Phase,
    pub reason: String,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("Δ = {delta} is below delta_min = {min}")]
    DeltaTooSmall { delta: usize, min: usize },
    #[error("the graph contains a Δ+1-clique")]
    CliquePresent,
    #[error("decomposition failed: {0}")]
    Acd(#[from] AcdError),
    #[error("classification failed: {0}")]
    Partition(#[from] PartitionError),
    #[error("{} attempt(s) failed; last in {:?}: {}", failures.len(), failures.last().map(|f| f.phase), failures.last().map_or("", |f| f.reason.as_str()))]
    RetryExhausted { failures: Vec<AttemptFailure> },
    #[error("{phase:?}: CONGEST budget exceeded: {error}")]
    Congest { phase: Phase, error: SimError },
    #[error("{phase:?}: internal invariant violated: {reason}")]
    Internal { phase: Phase, reason: String },
}

impl PipelineError {
    pub fn kind(&self) -> &'static str {
        match self {
            PipelineError::Config(_) => "config",
            PipelineError::DeltaTooSmall { .. } => "delta_too_small",
            PipelineError::CliquePresent => "clique_present",
            PipelineError::Acd(_) => "acd_failure",
            PipelineError::Partition(_) => "partition_violation",
            PipelineError::RetryExhausted { .. } => "retry_exhausted",
            PipelineError::Congest { .. } => "congest_violation",
            PipelineError::Internal { .. } => "internal",
        }
    }
}

/// A white/gray split of the nodes colored in one phase.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WhiteGraySplit {
    pub white: Vec<NodeId>,
    pub gray: Vec<NodeId>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SplitViolation {
    #[error("node {0} is colored or listed twice")]
    NotFresh(NodeId),
    #[error("white node {0} has neither slack nor a later-colored neighbor")]
    WhiteWithoutSlack(NodeId),
    #[error("gray node {0} has no white neighbor")]
    GrayWithoutWhite(NodeId),
}

impl WhiteGraySplit {
    /// White nodes need positive slack once every other node of the split is
    /// counted as an uncolored neighbor; uncolored neighbors outside the split
    /// are colored in a later phase and count toward that slack. Gray nodes
    /// need a white neighbor.
    pub fn check(&self, g: &Graph, coloring: &PartialColoring) -> Result<(), SplitViolation> {
        let mut scope = vec![false; g.n()];
        let mut white = vec![false; g.n()];
        for (&v, is_white) in self.white.iter().map(|v| (v, true)).chain(self.gray.iter().map(|v| (v, false))) {
            if coloring.is_colored(v) || scope[v] {
                return Err(SplitViolation::NotFresh(v));
            }
            scope[v] = true;
            white[v] = is_white;
        }
        for &v in &self.white {
            if measure_slack(g, coloring, v, &scope).expect("uncolored") < 1 {
                return Err(SplitViolation::WhiteWithoutSlack(v));
            }
        }
        for &v in &self.gray {
            if !g.neighbors(v).iter().any(|&u| white[u]) {
                return Err(SplitViolation::GrayWithoutWhite(v));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PhaseError {
    #[error(transparent)]
    Split(#[from] SplitViolation),
    #[error(transparent)]
    List(#[from] ListError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("engine returned an assignment the instance rejects")]
    Rejected,
}

/// Builds the instance over `units`, solves it with the trial engine and
/// writes the colors back.
pub fn solve_units(
    g: &Graph,
    coloring: &mut PartialColoring,
    kind: InstanceKind,
    units: &[Unit],
    sim: &SimConfig,
) -> Result<(LedgerEntry, ListInstance, RoundMetrics), PhaseError> {
    let instance = build_instance(g, coloring, units)?;
    let (assignment, metrics) = solve_distributed(&instance, g.delta(), sim)?;
    if !instance.accepts(&assignment) {
        return Err(PhaseError::Rejected);
    }
    apply_assignment(coloring, &instance, &assignment);
    let entry = LedgerEntry::new(kind, &instance, metrics.rounds_elapsed);
    Ok((entry, instance, metrics))
}

/// Checks the split, then colors the gray nodes and afterwards the white ones.
pub fn color_gray_then_white(
    g: &Graph,
    coloring: &mut PartialColoring,
    split: &WhiteGraySplit,
    kinds: (InstanceKind, InstanceKind),
    sims: (&SimConfig, &SimConfig),
) -> Result<[(LedgerEntry, RoundMetrics); 2], PhaseError> {
    split.check(g, coloring)?;
    let gray: Vec<Unit> = split.gray.iter().map(|&v| Unit::Node(v)).collect();
    let white: Vec<Unit> = split.white.iter().map(|&v| Unit::Node(v)).collect();
    let (ge, _, gm) = solve_units(g, coloring, kinds.0, &gray, sims.0)?;
    let (we, _, wm) = solve_units(g, coloring, kinds.1, &white, sims.1)?;
    Ok([(ge, gm), (we, wm)])
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PlannedPhase {
    pub step: u8,
    pub kind: InstanceKind,
    pub target: &'static str,
    /// List size the analysis promises for this instance.
    pub declared: &'static str,
    pub faithfulness: Faithfulness,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PhasePlan {
    /// Work done by the coordinator rather than by node programs.
    pub coordinator: Vec<(&'static str, Faithfulness)>,
    pub slack_generation: Faithfulness,
    pub phases: Vec<PlannedPhase>,
}

impl PhasePlan {
    pub fn standard() -> Self {
        use InstanceKind::*;
        let rows: [(u8, InstanceKind, &str, &str); 16] = [
            (4, Sparse, "V*", "Ω(Δ)"),
            (5, OrdinaryGray, "O \\ white", "Ω(ψ)"),
            (5, OrdinaryWhite, "unit-slack nodes of O", "Ω(ψ)"),
            (6, RunawayGray, "R \\ white", "φ/2"),
            (6, RunawayWhite, "N_C(e_C)", "φ/2"),
            (7, NiceAGray, "C \\ (W ∪ P ∪ E)", "Δ/2"),
            (7, NiceAWhite, "N_C(v), v ∈ P ∪ E", "Δ/2"),
            (7, NiceBGray, "C \\ {u}", "Δ/2"),
            (7, NiceBDeferred, "simplicial u", "Δ/2"),
            (7, NiceCPairs, "smallest non-edge", "Δ/2"),
            (7, NiceCGray, "C \\ white", "Δ/3"),
            (7, NiceCWhite, "common neighbors of the pair", "Δ/3"),
            (8, GuardedPairs, "(u_C, p_C)", "φ/2"),
            (8, GuardedGray, "C \\ white", "Δ/2"),
            (8, GuardedWhite, "N_C(p_C)", "φ"),
            (9, Escapes, "E", "Ω(Δ)"),
        ];
        Self {
            coordinator: vec![
                ("acd", Faithfulness::Centralized),
                ("classification", Faithfulness::Centralized),
                ("pair selection", Faithfulness::Centralized),
                ("white/gray sets", Faithfulness::Centralized),
            ],
            slack_generation: Faithfulness::Distributed,
            phases: rows
                .into_iter()
                .map(|(step, kind, target, declared)| PlannedPhase {
                    step,
                    kind,
                    target,
                    declared,
                    faithfulness: LedgerEntry::new(kind, &ListInstance::from_parts(vec![], vec![]), 0).faithfulness,
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PipelineOutput {
    pub coloring: PartialColoring,
    pub ledger: InstanceLedger,
    /// Rounds of the successful attempt, SlackGeneration first.
    pub metrics: RoundMetrics,
    pub slack: SlackReport,
    pub retries: usize,
    pub failures: Vec<AttemptFailure>,
    pub acd: AlmostCliqueDecomposition,
    pub classification: AcClassification,
    pub partition: FinePartition,
    /// Pairs that were colored as single units.
    pub pairs: Vec<(NodeId, NodeId)>,
}

/// Why an attempt stopped: retry with the next seed, or give up.
#[derive(Debug)]
pub enum StepError {
    Retry(Phase, String),
    Fatal(PipelineError),
}

pub type StepResult = Result<(), StepError>;

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// One attempt of steps 3–9 over a fixed decomposition and classification.
pub struct PipelineState<'a> {
    g: &'a Graph,
    acd: &'a AlmostCliqueDecomposition,
    cls: &'a AcClassification,
    part: &'a FinePartition,
    config: &'a PipelineConfig,
    seed: u64,
    pub coloring: PartialColoring,
    pub ledger: InstanceLedger,
    pub metrics: RoundMetrics,
    pub slack: Option<SlackReport>,
    pub pairs: Vec<(NodeId, NodeId)>,
    thresholds: Thresholds,
}

impl<'a> PipelineState<'a> {
    pub fn new(
        g: &'a Graph,
        acd: &'a AlmostCliqueDecomposition,
        cls: &'a AcClassification,
        part: &'a FinePartition,
        config: &'a PipelineConfig,
        seed: u64,
    ) -> Self {
        Self {
            g,
            acd,
            cls,
            part,
            config,
            seed,
            coloring: PartialColoring::uncolored(g.n()),
            ledger: InstanceLedger::default(),
            metrics: RoundMetrics::default(),
            slack: None,
            pairs: Vec::new(),
            thresholds: Thresholds::new(g.delta()),
        }
    }

    fn sim(&self, tag: u64, max_rounds: usize) -> SimConfig {
        SimConfig {
            seed: if tag == 0 { self.seed } else { splitmix(self.seed ^ splitmix(tag)) },
            max_rounds,
            bit_budget: Some(congest_budget(self.g.n().max(2), self.config.congest_c)),
            strict: self.config.strict_congest,
        }
    }

    fn trial_sim(&self, kind: InstanceKind) -> SimConfig {
        let rounds = self.config.max_trial_rounds.unwrap_or_else(|| default_max_rounds(self.g.n()));
        self.sim(1 + kind as u64, rounds)
    }

    fn phase_error(phase: Phase, e: PhaseError) -> StepError {
        match e {
            PhaseError::Sim(error @ SimError::MessageTooLarge { .. }) => {
                StepError::Fatal(PipelineError::Congest { phase, error })
            }
            PhaseError::Sim(e @ SimError::RoundLimit { .. }) => StepError::Retry(phase, e.to_string()),
            PhaseError::Split(e) => StepError::Retry(phase, e.to_string()),
            PhaseError::List(e @ ListError::DegPlusOne { .. }) => StepError::Retry(phase, e.to_string()),
            e => StepError::Fatal(PipelineError::Internal { phase, reason: e.to_string() }),
        }
    }

    fn record(&mut self, mut entry: LedgerEntry, metrics: &RoundMetrics, gates: Vec<(Measure, Bound, Option<usize>)>) {
        entry.gates = gates.into_iter().map(|(m, b, x)| Gate::check(m, b, x, &self.thresholds)).collect();
        self.metrics.absorb(metrics);
        self.ledger.push(entry);
    }

    fn single(&mut self, phase: Phase, kind: InstanceKind, units: &[Unit], bound: Bound) -> StepResult {
        let sim = self.trial_sim(kind);
        let (entry, _, metrics) =
            solve_units(self.g, &mut self.coloring, kind, units, &sim).map_err(|e| Self::phase_error(phase, e))?;
        let measured = entry.min_palette;
        self.record(entry, &metrics, vec![(Measure::MinPalette, bound, measured)]);
        Ok(())
    }

    fn gray_white(
        &mut self,
        phase: Phase,
        split: &WhiteGraySplit,
        kinds: (InstanceKind, InstanceKind),
        bounds: (Bound, Bound),
        white_per_ac: Option<(Bound, Option<usize>)>,
    ) -> StepResult {
        let sims = (self.trial_sim(kinds.0), self.trial_sim(kinds.1));
        let [(ge, gm), (we, wm)] = color_gray_then_white(self.g, &mut self.coloring, split, kinds, (&sims.0, &sims.1))
            .map_err(|e| Self::phase_error(phase, e))?;
        let gray_min = ge.min_palette;
        self.record(ge, &gm, vec![(Measure::MinPalette, bounds.0, gray_min)]);
        let mut gates = vec![(Measure::MinPalette, bounds.1, we.min_palette)];
        if let Some((bound, count)) = white_per_ac {
            gates.push((Measure::WhitePerAc, bound, count));
        }
        self.record(we, &wm, gates);
        Ok(())
    }

    fn uncolored(&self, nodes: &[NodeId]) -> Vec<NodeId> {
        nodes.iter().copied().filter(|&v| !self.coloring.is_colored(v)).collect()
    }

    fn acs(&self, kind: AcKind) -> Vec<usize> {
        self.cls.acs_of_kind(kind).collect()
    }

    /// SlackGeneration on `V* ∪ O ∪ R`, gated on the slack report.
    pub fn slack_generation(&mut self) -> StepResult {
        let participants = self.part.mask(&[NodeClass::Sparse, NodeClass::Ordinary, NodeClass::Runaway]);
        let (coloring, metrics) = run_slack_generation_with(self.g, &participants, self.config.p_g, &self.sim(0, 2))
            .map_err(|e| Self::phase_error(Phase::SlackGeneration, e.into()))?;
        self.coloring = coloring;
        self.metrics.absorb(&metrics);
        let report = check_slack_report(self.g, self.acd, self.cls, self.part, &self.coloring);
        let violations = report.violations();
        self.slack = Some(report);
        if violations.is_empty() {
            Ok(())
        } else {
            Err(StepError::Retry(Phase::SlackGeneration, violations.join("; ")))
        }
    }

    pub fn color_sparse(&mut self) -> StepResult {
        let units: Vec<Unit> = self.uncolored(&self.part.sparse).into_iter().map(Unit::Node).collect();
        self.single(Phase::Sparse, InstanceKind::Sparse, &units, Bound::One)
    }

    /// White: uncolored nodes with slack in `G[V* ∪ O]`.
    pub fn color_ordinary(&mut self) -> StepResult {
        let vo = self.part.mask(&[NodeClass::Sparse, NodeClass::Ordinary]);
        let mut split = WhiteGraySplit::default();
        for ac in self.acs(AcKind::Ordinary) {
            for v in self.uncolored(self.acd.clique(ac)) {
                if measure_slack(self.g, &self.coloring, v, &vo).expect("uncolored") >= 1 {
                    split.white.push(v);
                } else {
                    split.gray.push(v);
                }
            }
        }
        let kinds = (InstanceKind::OrdinaryGray, InstanceKind::OrdinaryWhite);
        self.gray_white(Phase::Ordinary, &split, kinds, (Bound::One, Bound::One), None)
    }

    /// White: uncolored `N_C(e_C)`; the escape stays uncolored until the last phase.
    pub fn color_runaway(&mut self) -> StepResult {
        let mut split = WhiteGraySplit::default();
        let mut fewest = None::<usize>;
        for ac in self.acs(AcKind::Runaway) {
            let e = self.cls.classes[ac].picked.expect("runaway ACs have an escape");
            let (white, gray): (Vec<NodeId>, Vec<NodeId>) =
                self.uncolored(self.acd.clique(ac)).into_iter().partition(|&v| self.g.has_edge(v, e));
            fewest = Some(fewest.map_or(white.len(), |f| f.min(white.len())));
            split.white.extend(white);
            split.gray.extend(gray);
        }
        let kinds = (InstanceKind::RunawayGray, InstanceKind::RunawayWhite);
        self.gray_white(Phase::Runaway, &split, kinds, (Bound::One, Bound::One), Some((Bound::HalfPhi, fewest)))
    }

    /// Nice ACs in three groups: those holding a protector or escape, those
    /// that are cliques, and those with a non-edge.
    pub fn color_nice(&mut self) -> StepResult {
        let pe = self.part.mask(&[NodeClass::Protector, NodeClass::Escape]);
        let nice = self.acs(AcKind::Nice);
        let holder = |ac: usize| self.acd.clique(ac).iter().copied().find(|&v| pe[v]);

        // a) white: uncolored in-AC neighbors of the smallest P ∪ E member.
        let mut split = WhiteGraySplit::default();
        for &ac in &nice {
            if let Some(v) = holder(ac) {
                for u in self.uncolored(self.acd.clique(ac)).into_iter().filter(|&u| !pe[u]) {
                    if self.g.has_edge(u, v) {
                        split.white.push(u);
                    } else {
                        split.gray.push(u);
                    }
                }
            }
        }
        let half = if self.acd.epsilon() <= Rational::new(1, 22) { Bound::HalfDelta } else { Bound::One };
        let kinds = (InstanceKind::NiceAGray, InstanceKind::NiceAWhite);
        self.gray_white(Phase::NiceA, &split, kinds, (half, half), None)?;

        // b) cliques: defer the smallest simplicial member.
        let mut split = WhiteGraySplit::default();
        for &ac in nice.iter().filter(|&&ac| holder(ac).is_none() && !has_non_edge(self.g, self.acd, ac)) {
            let c = self.acd.clique(ac);
            let Some(&u) = c.iter().find(|&&u| self.g.is_simplicial(u)) else {
                return Err(StepError::Fatal(PipelineError::Internal {
                    phase: Phase::NiceB,
                    reason: format!("nice AC {ac} has neither a non-edge nor a simplicial node"),
                }));
            };
            split.white.push(u);
            split.gray.extend(self.uncolored(c).into_iter().filter(|&v| v != u));
        }
        let kinds = (InstanceKind::NiceBGray, InstanceKind::NiceBDeferred);
        self.gray_white(Phase::NiceB, &split, kinds, (Bound::HalfDelta, Bound::One), None)?;

        // c) a non-edge: color the smallest non-edge as one unit first.
        let with_pair: Vec<(usize, (NodeId, NodeId))> = nice
            .iter()
            .filter(|&&ac| holder(ac).is_none())
            .filter_map(|&ac| first_non_edge(self.g, self.acd, ac).map(|p| (ac, p)))
            .collect();
        let units: Vec<Unit> = with_pair.iter().map(|&(_, (u, w))| Unit::Pair(u, w)).collect();
        self.single(Phase::NiceC, InstanceKind::NiceCPairs, &units, Bound::HalfDelta)?;
        self.pairs.extend(with_pair.iter().map(|&(_, p)| p));

        let mut split = WhiteGraySplit::default();
        for &(ac, (u, w)) in &with_pair {
            for v in self.uncolored(self.acd.clique(ac)) {
                if self.g.has_edge(v, u) && self.g.has_edge(v, w) {
                    split.white.push(v);
                } else {
                    split.gray.push(v);
                }
            }
        }
        let kinds = (InstanceKind::NiceCGray, InstanceKind::NiceCWhite);
        self.gray_white(Phase::NiceC, &split, kinds, (Bound::ThirdDelta, Bound::ThirdDelta), None)
    }

    /// Pairs each protector with its smallest uncolored non-neighbor in the
    /// guarded AC, then colors the AC with white = uncolored `N_C(p_C)`.
    pub fn color_guarded(&mut self) -> StepResult {
        let guarded = self.acs(AcKind::Guarded);
        let mut pairs = Vec::with_capacity(guarded.len());
        for &ac in &guarded {
            let p = self.cls.classes[ac].picked.expect("guarded ACs have a protector");
            let toehold = self.acd.clique(ac).iter().copied().find(|&u| !self.coloring.is_colored(u) && !self.g.has_edge(u, p));
            let Some(u) = toehold else {
                return Err(StepError::Fatal(PipelineError::Internal {
                    phase: Phase::Guarded,
                    reason: format!("protector {p} of AC {ac} has no uncolored non-neighbor in it"),
                }));
            };
            pairs.push((ac, (u, p)));
        }
        let units: Vec<Unit> = pairs.iter().map(|&(_, (u, p))| Unit::Pair(u, p)).collect();
        self.single(Phase::Guarded, InstanceKind::GuardedPairs, &units, Bound::HalfPhi)?;
        self.pairs.extend(pairs.iter().map(|&(_, (u, p))| (u.min(p), u.max(p))));

        let mut split = WhiteGraySplit::default();
        let mut fewest = None::<usize>;
        for &(ac, (_, p)) in &pairs {
            let (white, gray): (Vec<NodeId>, Vec<NodeId>) =
                self.uncolored(self.acd.clique(ac)).into_iter().partition(|&v| self.g.has_edge(v, p));
            fewest = Some(fewest.map_or(white.len(), |f| f.min(white.len())));
            split.white.extend(white);
            split.gray.extend(gray);
        }
        let kinds = (InstanceKind::GuardedGray, InstanceKind::GuardedWhite);
        self.gray_white(Phase::Guarded, &split, kinds, (Bound::HalfDelta, Bound::One), Some((Bound::HalfPhi, fewest)))
    }

    pub fn color_escapes(&mut self) -> StepResult {
        let units: Vec<Unit> = self.part.escapes.iter().map(|&v| Unit::Node(v)).collect();
        self.single(Phase::Escapes, InstanceKind::Escapes, &units, Bound::One)
    }

    fn run(&mut self) -> StepResult {
        self.slack_generation()?;
        self.color_sparse()?;
        self.color_ordinary()?;
        self.color_runaway()?;
        self.color_nice()?;
        self.color_guarded()?;
        self.color_escapes()?;
        self.check_final()
    }

    fn check_final(&self) -> StepResult {
        let internal = |reason: String| StepError::Fatal(PipelineError::Internal { phase: Phase::Final, reason });
        if !validate_coloring(self.g, &self.coloring, self.g.delta()) {
            let missing = self.g.nodes().find(|&v| !self.coloring.is_colored(v));
            return Err(internal(format!("final coloring invalid (first uncolored: {missing:?})")));
        }
        for &(u, w) in &self.pairs {
            if self.g.has_edge(u, w) || self.coloring.get(u) != self.coloring.get(w) {
                return Err(internal(format!("pair ({u}, {w}) not a same-colored non-edge")));
            }
        }
        if self.ledger.len() != InstanceKind::ALL.len() {
            return Err(internal(format!("ledger has {} entries", self.ledger.len())));
        }
        Ok(())
    }
}

/// Δ-colors `g`, or reports which precondition or phase failed.
pub fn run_pipeline(g: &Graph, config: &PipelineConfig) -> Result<PipelineOutput, PipelineError> {
    if !(0.0..=1.0).contains(&config.p_g) {
        return Err(PipelineError::Config(format!("p_g = {} outside [0, 1]", config.p_g)));
    }
    if config.congest_c == 0 {
        return Err(PipelineError::Config("congest_c must be positive".into()));
    }
    if config.max_trial_rounds == Some(0) {
        return Err(PipelineError::Config("max_trial_rounds must be positive".into()));
    }
    if g.delta() < config.delta_min.max(3) {
        return Err(PipelineError::DeltaTooSmall { delta: g.delta(), min: config.delta_min.max(3) });
    }
    if g.contains_delta_plus_one_clique() {
        return Err(PipelineError::CliquePresent);
    }
    let acd = compute_acd(g, &AcdConfig::new(config.epsilon))?;
    let classification = classify_acs(g, &acd, &Thresholds::new(g.delta()));
    let partition = fine_partition(g, &acd, &classification)?;

    let mut failures = Vec::new();
    for attempt in 0..=config.max_retries {
        let seed = config.seed.wrapping_add(attempt as u64);
        let mut state = PipelineState::new(g, &acd, &classification, &partition, config, seed);
        match state.run() {
            Ok(()) => {
                return Ok(PipelineOutput {
                    coloring: state.coloring,
                    ledger: state.ledger,
                    metrics: state.metrics,
                    slack: state.slack.expect("SlackGeneration ran"),
                    retries: attempt,
                    pairs: state.pairs,
                    failures,
                    acd,
                    classification,
                    partition,
                })
            }
            Err(StepError::Retry(phase, reason)) => failures.push(AttemptFailure { attempt, seed, phase, reason }),
            Err(StepError::Fatal(e)) => return Err(e),
        }
    }
    Err(PipelineError::RetryExhausted { failures })
}
