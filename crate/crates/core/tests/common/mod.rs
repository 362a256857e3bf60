#![allow(dead_code)]

use brooks_core::Graph;
use proptest::prelude::*;

/// Simple graph on `lo..=hi` nodes, each pair present with probability ~`density`.
pub fn arb_graph(lo: usize, hi: usize, density: f64) -> impl Strategy<Value = Graph> {
    (lo..=hi).prop_flat_map(move |n| {
        let pairs = n * n.saturating_sub(1) / 2;
        proptest::collection::vec(proptest::bool::weighted(density), pairs).prop_map(move |bits| {
            let mut edges = Vec::new();
            let mut k = 0;
            for u in 0..n {
                for v in u + 1..n {
                    if bits[k] {
                        edges.push((u, v));
                    }
                    k += 1;
                }
            }
            Graph::from_edges(n, edges).unwrap()
        })
    })
}

pub fn complete(n: usize) -> Graph {
    Graph::from_edges(n, (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)))).unwrap()
}
