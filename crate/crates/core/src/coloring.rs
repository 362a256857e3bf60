use serde::{Deserialize, Serialize};

use crate::graph::{Color, Graph, NodeId};

/// Node → color-or-uncolored. Colors live in `[Δ] = {0, …, Δ-1}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartialColoring {
    colors: Vec<Option<Color>>,
}

impl PartialColoring {
    pub fn uncolored(n: usize) -> Self {
        Self { colors: vec![None; n] }
    }

    pub fn from_colors(colors: Vec<Option<Color>>) -> Self {
        Self { colors }
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    pub fn get(&self, v: NodeId) -> Option<Color> {
        self.colors[v]
    }

    pub fn is_colored(&self, v: NodeId) -> bool {
        self.colors[v].is_some()
    }

    pub fn set(&mut self, v: NodeId, c: Color) {
        self.colors[v] = Some(c);
    }

    pub fn as_slice(&self) -> &[Option<Color>] {
        &self.colors
    }

    pub fn colored_count(&self) -> usize {
        self.colors.iter().filter(|c| c.is_some()).count()
    }

    pub fn is_total(&self) -> bool {
        self.colors.iter().all(Option::is_some)
    }

    /// No edge has both endpoints assigned the same color.
    pub fn is_proper(&self, g: &Graph) -> bool {
        g.edges().all(|(u, v)| match (self.colors[u], self.colors[v]) {
            (Some(a), Some(b)) => a != b,
            _ => true,
        })
    }

    /// Marks the colors used by colored neighbors of `v`.
    pub fn used_by_neighbors(&self, g: &Graph, v: NodeId, k: usize) -> Vec<bool> {
        let mut used = vec![false; k];
        for &u in g.neighbors(v) {
            if let Some(c) = self.colors[u] {
                if (c as usize) < k {
                    used[c as usize] = true;
                }
            }
        }
        used
    }

    /// Colors of `[k]` not used by any colored neighbor of `v`.
    pub fn palette(&self, g: &Graph, v: NodeId, k: usize) -> Vec<Color> {
        let used = self.used_by_neighbors(g, v, k);
        (0..k as Color).filter(|&c| !used[c as usize]).collect()
    }

    pub fn max_color(&self) -> Option<Color> {
        self.colors.iter().flatten().copied().max()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::tests::complete;

    #[test]
    fn properness_and_palette() {
        let g = complete(4);
        let mut c = PartialColoring::uncolored(4);
        c.set(0, 1);
        c.set(1, 2);
        assert!(c.is_proper(&g));
        assert_eq!(c.palette(&g, 3, 3), vec![0]);
        c.set(2, 1);
        assert!(!c.is_proper(&g));
        assert!(!c.is_total());
        assert_eq!(c.colored_count(), 3);
    }
}
