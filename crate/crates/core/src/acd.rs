//! Almost-clique decomposition: a partition of the nodes into sparse nodes and
//! near-cliques `C_1, …, C_t`.
//!
//! The construction here is centralized: a similarity graph on dense nodes
//! yields base cliques, which are then augmented with every outside node that
//! has at least `(1-4ε)Δ` neighbors in them. What downstream code relies on is
//! the four-property contract checked by [`verify_acd`], and every computed
//! decomposition is verified before it is returned.

use std::str::FromStr;

use num_traits::Signed;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Graph, NodeId, Rational};

/// Largest accepted ε. The analysis wants ε < 1/20, but small Δ forces larger
/// values for any decomposition to exist (e.g. a `K_{Δ+1}` minus an edge needs
/// `ε ≥ 1/(3Δ)`).
pub fn max_epsilon() -> Rational {
    Rational::new(1, 4)
}

/// ε used by the reduction at scale.
pub fn default_epsilon() -> Rational {
    Rational::new(1, 172)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AcdError {
    #[error("epsilon {0} outside (0, 1/4]")]
    EpsilonOutOfRange(Rational),
    #[error("similarity parameter {0} must lie in (0, 1)")]
    SimilarityOutOfRange(Rational),
    #[error("maximum degree {0} is below 3")]
    DeltaTooSmall(usize),
    #[error("node {0} is sparse")]
    NotDense(NodeId),
    #[error("node {node} listed twice (or out of range for n = {n})")]
    BadMembership { node: NodeId, n: usize },
    #[error("almost-clique {0} is empty")]
    EmptyClique(usize),
    #[error("decomposition violates its contract: {0}")]
    Verification(Box<AcdReport>),
    #[error("bad epsilon {0:?}")]
    BadEpsilon(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Membership {
    Sparse,
    Clique(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "AcdFile", into = "AcdFile")]
pub struct AlmostCliqueDecomposition {
    epsilon: Rational,
    sparse: Vec<NodeId>,
    cliques: Vec<Vec<NodeId>>,
    membership: Vec<Membership>,
}

/// On-disk form: `{epsilon, sparse, cliques}`, ε as an exact `"p/q"` string.
#[derive(Serialize, Deserialize)]
struct AcdFile {
    epsilon: String,
    sparse: Vec<NodeId>,
    cliques: Vec<Vec<NodeId>>,
}

impl TryFrom<AcdFile> for AlmostCliqueDecomposition {
    type Error = AcdError;

    fn try_from(f: AcdFile) -> Result<Self, AcdError> {
        let n = f.sparse.len() + f.cliques.iter().map(Vec::len).sum::<usize>();
        let acd = Self::new(n, parse_rational(&f.epsilon)?, f.cliques)?;
        if acd.sparse != {
            let mut s = f.sparse;
            s.sort_unstable();
            s
        } {
            return Err(AcdError::BadMembership { node: 0, n });
        }
        Ok(acd)
    }
}

impl From<AlmostCliqueDecomposition> for AcdFile {
    fn from(acd: AlmostCliqueDecomposition) -> Self {
        AcdFile { epsilon: acd.epsilon.to_string(), sparse: acd.sparse, cliques: acd.cliques }
    }
}

impl std::fmt::Display for AcdReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "sparsity {} / size {} / inside-degree {} / outside-attachment {} violation(s)",
            self.sparsity.len(),
            self.size.len(),
            self.inside_degree.len(),
            self.outside_attachment.len()
        )
    }
}

impl AlmostCliqueDecomposition {
    /// Every node not in a clique is sparse. Clique members are sorted and
    /// cliques ordered by smallest member.
    pub fn new(n: usize, epsilon: Rational, mut cliques: Vec<Vec<NodeId>>) -> Result<Self, AcdError> {
        check_epsilon(epsilon)?;
        for c in cliques.iter_mut() {
            c.sort_unstable();
        }
        cliques.sort_by_key(|c| c.first().copied());
        let mut membership = vec![Membership::Sparse; n];
        for (i, c) in cliques.iter().enumerate() {
            if c.is_empty() {
                return Err(AcdError::EmptyClique(i));
            }
            for &v in c {
                if v >= n || membership[v] != Membership::Sparse {
                    return Err(AcdError::BadMembership { node: v, n });
                }
                membership[v] = Membership::Clique(i);
            }
        }
        let sparse = (0..n).filter(|&v| membership[v] == Membership::Sparse).collect();
        Ok(Self { epsilon, sparse, cliques, membership })
    }

    pub fn epsilon(&self) -> Rational {
        self.epsilon
    }

    pub fn n(&self) -> usize {
        self.membership.len()
    }

    pub fn sparse(&self) -> &[NodeId] {
        &self.sparse
    }

    pub fn cliques(&self) -> &[Vec<NodeId>] {
        &self.cliques
    }

    pub fn clique(&self, i: usize) -> &[NodeId] {
        &self.cliques[i]
    }

    pub fn membership(&self, v: NodeId) -> Membership {
        self.membership[v]
    }

    /// Index of `C(v)`, if `v` is dense.
    pub fn clique_of(&self, v: NodeId) -> Option<usize> {
        match self.membership[v] {
            Membership::Clique(i) => Some(i),
            Membership::Sparse => None,
        }
    }

    pub fn is_sparse(&self, v: NodeId) -> bool {
        self.membership[v] == Membership::Sparse
    }

    /// Membership mask of clique `i`.
    pub fn clique_mask(&self, i: usize) -> Vec<bool> {
        let mut mask = vec![false; self.n()];
        for &v in &self.cliques[i] {
            mask[v] = true;
        }
        mask
    }
}

fn check_epsilon(epsilon: Rational) -> Result<(), AcdError> {
    if !epsilon.is_positive() || epsilon > max_epsilon() {
        return Err(AcdError::EpsilonOutOfRange(epsilon));
    }
    Ok(())
}

/// Parses `"p/q"`, an integer, or a plain decimal (`"0.05"`) exactly.
pub fn parse_rational(s: &str) -> Result<Rational, AcdError> {
    let bad = || AcdError::BadEpsilon(s.to_string());
    let s = s.trim();
    if s.contains('/') {
        let r = Rational::from_str(s).map_err(|_| bad())?;
        return Ok(r);
    }
    if let Some((int, frac)) = s.split_once('.') {
        if int.starts_with('-') || frac.is_empty() || frac.len() > 15 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let int: i64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
        let scale = 10i64.pow(frac.len() as u32);
        let frac: i64 = frac.parse().map_err(|_| bad())?;
        return Ok(Rational::new(int * scale + frac, scale));
    }
    s.parse::<i64>().map(Rational::from_integer).map_err(|_| bad())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AcdConfig {
    pub epsilon: Rational,
    /// ε′ = `similarity_factor` · ε.
    pub similarity_factor: Rational,
    /// Sparse nodes must satisfy `ζ_v ≥ c_sparse · ε² · Δ`.
    pub c_sparse: Rational,
}

impl AcdConfig {
    pub fn new(epsilon: Rational) -> Self {
        Self { epsilon, similarity_factor: Rational::from_integer(3), c_sparse: default_c_sparse() }
    }

    pub fn similarity(&self) -> Rational {
        self.similarity_factor * self.epsilon
    }
}

impl Default for AcdConfig {
    fn default() -> Self {
        Self::new(default_epsilon())
    }
}

/// `(η²/4)/ε²` with `η = ε/108`.
pub fn default_c_sparse() -> Rational {
    Rational::new(1, 4 * 108 * 108)
}

fn at_least(count: usize, bound: Rational) -> bool {
    Rational::from_integer(count as i64) >= bound
}

fn at_most(count: usize, bound: Rational) -> bool {
    Rational::from_integer(count as i64) <= bound
}

pub fn compute_acd(g: &Graph, config: &AcdConfig) -> Result<AlmostCliqueDecomposition, AcdError> {
    let eps = config.epsilon;
    check_epsilon(eps)?;
    let sim = config.similarity();
    if !sim.is_positive() || sim >= Rational::from_integer(1) {
        return Err(AcdError::SimilarityOutOfRange(sim));
    }
    if g.delta() < 3 {
        return Err(AcdError::DeltaTooSmall(g.delta()));
    }
    let n = g.n();
    let delta = Rational::from_integer(g.delta() as i64);
    let one = Rational::from_integer(1);
    let threshold = (one - sim) * delta;

    // Adjacent u, v are similar when their closed neighborhoods overlap in
    // at least (1-ε′)Δ nodes.
    let similar: Vec<Vec<NodeId>> = g
        .nodes()
        .map(|u| {
            g.neighbors(u)
                .iter()
                .copied()
                .filter(|&v| at_least(g.common_neighbors(u, v) + 2, threshold))
                .collect()
        })
        .collect();
    let dense: Vec<bool> = similar.iter().map(|s| at_least(s.len(), threshold)).collect();

    let mut component = vec![usize::MAX; n];
    let mut bases: Vec<Vec<NodeId>> = Vec::new();
    for root in g.nodes().filter(|&v| dense[v]) {
        if component[root] != usize::MAX {
            continue;
        }
        let id = bases.len();
        component[root] = id;
        let mut members = vec![root];
        let mut i = 0;
        while i < members.len() {
            let u = members[i];
            i += 1;
            for &v in &similar[u] {
                if dense[v] && component[v] == usize::MAX {
                    component[v] = id;
                    members.push(v);
                }
            }
        }
        bases.push(members);
    }

    let lower = (one - eps) * delta;
    let upper = (one + eps * 3) * delta;
    let bases: Vec<Vec<NodeId>> =
        bases.into_iter().filter(|d| at_least(d.len(), lower) && at_most(d.len(), upper)).collect();

    let mut base_of = vec![usize::MAX; n];
    for (i, d) in bases.iter().enumerate() {
        for &v in d {
            base_of[v] = i;
        }
    }

    let attach = (one - eps * 4) * delta;
    let mut cliques = bases.clone();
    let mut counts = vec![0usize; bases.len()];
    for u in g.nodes().filter(|&u| base_of[u] == usize::MAX) {
        let touched: Vec<usize> = g
            .neighbors(u)
            .iter()
            .filter_map(|&v| (base_of[v] != usize::MAX).then_some(base_of[v]))
            .collect();
        for &i in &touched {
            counts[i] += 1;
        }
        let best = touched.iter().copied().max_by(|&a, &b| counts[a].cmp(&counts[b]).then(b.cmp(&a)));
        if let Some(i) = best {
            if at_least(counts[i], attach) {
                cliques[i].push(u);
            }
        }
        for &i in &touched {
            counts[i] = 0;
        }
    }

    let acd = AlmostCliqueDecomposition::new(n, eps, cliques)?;
    let report = verify_acd(g, &acd, config.c_sparse);
    if !report.passes() {
        return Err(AcdError::Verification(Box::new(report)));
    }
    Ok(acd)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcdReport {
    /// (1) sparse nodes with `ζ_v < c_sparse ε² Δ`, with their sparsity.
    pub sparsity: Vec<(NodeId, Rational)>,
    /// (2) cliques outside `[(1-ε)Δ, (1+3ε)Δ]`, with their size.
    pub size: Vec<(usize, usize)>,
    /// (3) dense nodes with fewer than `(1-4ε)Δ` neighbors in `C(v)`.
    pub inside_degree: Vec<(NodeId, usize)>,
    /// (4) `(u, i, |N(u) ∩ C_i|)` with `u ∉ C_i` and count above `(1-2ε)Δ`.
    pub outside_attachment: Vec<(NodeId, usize, usize)>,
    /// Smallest sparsity among sparse nodes, for analysis.
    pub min_sparse_zeta: Option<Rational>,
}

impl AcdReport {
    pub fn passes(&self) -> bool {
        self.sparsity.is_empty() && self.structural_passes()
    }

    /// Properties (2)–(4).
    pub fn structural_passes(&self) -> bool {
        self.size.is_empty() && self.inside_degree.is_empty() && self.outside_attachment.is_empty()
    }
}

pub fn verify_acd(g: &Graph, acd: &AlmostCliqueDecomposition, c_sparse: Rational) -> AcdReport {
    let eps = acd.epsilon;
    let delta = Rational::from_integer(g.delta() as i64);
    let one = Rational::from_integer(1);
    let mut report = AcdReport::default();

    let zeta_floor = c_sparse * eps * eps * delta;
    for &v in &acd.sparse {
        let z = g.sparsity(v);
        report.min_sparse_zeta = Some(report.min_sparse_zeta.map_or(z, |m: Rational| m.min(z)));
        if z < zeta_floor {
            report.sparsity.push((v, z));
        }
    }

    let (lower, upper) = ((one - eps) * delta, (one + eps * 3) * delta);
    for (i, c) in acd.cliques.iter().enumerate() {
        if !at_least(c.len(), lower) || !at_most(c.len(), upper) {
            report.size.push((i, c.len()));
        }
    }

    let inside_floor = (one - eps * 4) * delta;
    let outside_cap = (one - eps * 2) * delta;
    let mut counts = vec![0usize; acd.cliques.len()];
    for u in g.nodes() {
        let own = acd.clique_of(u);
        let touched: Vec<usize> = g.neighbors(u).iter().filter_map(|&v| acd.clique_of(v)).collect();
        for &i in &touched {
            counts[i] += 1;
        }
        if let Some(i) = own {
            if !at_least(counts[i], inside_floor) {
                report.inside_degree.push((u, counts[i]));
            }
        }
        let mut seen: Vec<usize> = touched.clone();
        seen.sort_unstable();
        seen.dedup();
        for i in seen {
            if Some(i) != own && !at_most(counts[i], outside_cap) {
                report.outside_attachment.push((u, i, counts[i]));
            }
        }
        for &i in &touched {
            counts[i] = 0;
        }
    }
    report
}

/// `e(v) = |N(v) \ C(v)|`.
pub fn outside_degree(g: &Graph, acd: &AlmostCliqueDecomposition, v: NodeId) -> Result<usize, AcdError> {
    let i = acd.clique_of(v).ok_or(AcdError::NotDense(v))?;
    Ok(g.neighbors(v).iter().filter(|&&u| acd.clique_of(u) != Some(i)).count())
}

/// `a(v)`: non-neighbors of `v` in `C(v)`, `v` itself excluded.
pub fn anti_degree(g: &Graph, acd: &AlmostCliqueDecomposition, v: NodeId) -> Result<usize, AcdError> {
    let i = acd.clique_of(v).ok_or(AcdError::NotDense(v))?;
    let inside = g.neighbors(v).iter().filter(|&&u| acd.clique_of(u) == Some(i)).count();
    Ok(acd.cliques[i].len() - inside - 1)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuralMeasures {
    pub zeta: Vec<Rational>,
    /// Outside degree; `None` for sparse nodes.
    pub outside: Vec<Option<usize>>,
    /// Anti-degree; `None` for sparse nodes.
    pub anti: Vec<Option<usize>>,
}

impl StructuralMeasures {
    pub fn compute(g: &Graph, acd: &AlmostCliqueDecomposition) -> Self {
        Self {
            zeta: g.nodes().map(|v| g.sparsity(v)).collect(),
            outside: g.nodes().map(|v| outside_degree(g, acd, v).ok()).collect(),
            anti: g.nodes().map(|v| anti_degree(g, acd, v).ok()).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeBoundViolation {
    pub node: NodeId,
    pub anti_degree: usize,
    pub outside_degree: usize,
}

/// Checks `a(u) ≤ 7εΔ` and `e(u) ≤ 4εΔ` for every clique member; returns the
/// offenders.
pub fn degree_bound_check(g: &Graph, acd: &AlmostCliqueDecomposition) -> Vec<DegreeBoundViolation> {
    let eps_delta = acd.epsilon * Rational::from_integer(g.delta() as i64);
    let (anti_cap, out_cap) = (eps_delta * 7, eps_delta * 4);
    acd.cliques
        .iter()
        .flatten()
        .filter_map(|&u| {
            let a = anti_degree(g, acd, u).expect("clique member");
            let e = outside_degree(g, acd, u).expect("clique member");
            (!at_most(a, anti_cap) || !at_most(e, out_cap)).then_some(DegreeBoundViolation {
                node: u,
                anti_degree: a,
                outside_degree: e,
            })
        })
        .collect()
}

/// Serde adapter storing a rational as its exact `"p/q"` string.
pub mod rational_str {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::graph::Rational;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&r.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        super::parse_rational(&s).map_err(serde::de::Error::custom)
    }
}
