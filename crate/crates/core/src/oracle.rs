//! Ground truth: coloring validation and exact k-colorability of tiny graphs.

use thiserror::Error;

use crate::coloring::PartialColoring;
use crate::graph::Graph;

pub const MAX_EXACT_NODES: usize = 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("exact search supports at most {MAX_EXACT_NODES} nodes, got {0}")]
    TooLarge(usize),
}

/// Total, proper, and every color below `k`.
pub fn validate_coloring(g: &Graph, coloring: &PartialColoring, k: usize) -> bool {
    coloring.len() == g.n()
        && coloring.is_total()
        && coloring.as_slice().iter().flatten().all(|&c| (c as usize) < k)
        && coloring.is_proper(g)
}

/// Exact decision by backtracking over nodes in descending degree order,
/// pruning as soon as some uncolored node has no color left.
pub fn is_k_colorable(g: &Graph, k: usize) -> Result<bool, OracleError> {
    let n = g.n();
    if n > MAX_EXACT_NODES {
        return Err(OracleError::TooLarge(n));
    }
    if n == 0 {
        return Ok(true);
    }
    if k == 0 {
        return Ok(false);
    }
    let mut order: Vec<usize> = g.nodes().collect();
    order.sort_by_key(|&v| (std::cmp::Reverse(g.degree(v)), v));
    // available[v]: bitmask of colors still free for v.
    let full: u32 = if k >= 32 { u32::MAX } else { (1 << k) - 1 };
    let mut available = vec![full; n];
    let mut color = vec![u32::MAX; n];
    Ok(search(g, &order, 0, k.min(32), &mut available, &mut color))
}

fn search(g: &Graph, order: &[usize], i: usize, k: usize, available: &mut [u32], color: &mut [u32]) -> bool {
    let Some(&v) = order.get(i) else { return true };
    // Colors above the largest used one are interchangeable; try one of them.
    let used_max = order[..i].iter().map(|&u| color[u]).max().map_or(0, |m| m + 1);
    let limit = (used_max as usize + 1).min(k);
    for c in 0..limit as u32 {
        if available[v] & (1 << c) == 0 {
            continue;
        }
        color[v] = c;
        let mut touched = Vec::new();
        let mut dead = false;
        for &u in g.neighbors(v) {
            if color[u] == u32::MAX && available[u] & (1 << c) != 0 {
                available[u] &= !(1 << c);
                touched.push(u);
                dead |= available[u] == 0;
            }
        }
        if !dead && search(g, order, i + 1, k, available, color) {
            return true;
        }
        for u in touched {
            available[u] |= 1 << c;
        }
        color[v] = u32::MAX;
    }
    false
}

/// Connected, every degree 2, odd length.
pub fn is_odd_cycle(g: &Graph) -> bool {
    g.n() >= 3 && g.n() % 2 == 1 && g.nodes().all(|v| g.degree(v) == 2) && is_connected(g)
}

pub fn is_complete(g: &Graph) -> bool {
    g.nodes().all(|v| g.degree(v) + 1 == g.n())
}

pub fn is_connected(g: &Graph) -> bool {
    if g.n() == 0 {
        return true;
    }
    let mut seen = vec![false; g.n()];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(v) = stack.pop() {
        for &u in g.neighbors(v) {
            if !seen[u] {
                seen[u] = true;
                count += 1;
                stack.push(u);
            }
        }
    }
    count == g.n()
}

/// Brooks: a connected graph is Δ-colorable unless it is an odd cycle or a
/// complete graph.
pub fn brooks_predicts_colorable(g: &Graph) -> bool {
    !is_odd_cycle(g) && !is_complete(g)
}
