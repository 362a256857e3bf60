mod common;

use brooks_core::generators::{generate, Family};
use brooks_core::listcolor::{build_instance, default_max_rounds, solve_distributed, solve_greedy_oracle, ListInstance, Unit};
use brooks_core::oracle::{brooks_predicts_colorable, is_connected, is_k_colorable, validate_coloring};
use brooks_core::sim::SimConfig;
use brooks_core::slackgen::{measure_slack, replay_try, run_slack_generation, run_slack_generation_with, slack_decomposition, SlackTracker};
use brooks_core::{Color, Graph, PartialColoring};
use common::arb_graph;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random unit graph with palettes of size `deg + 1 + extra` over `[0, colors)`.
fn random_instance(rng: &mut ChaCha8Rng) -> ListInstance {
    let n = rng.gen_range(1..=24);
    let p = rng.gen::<f64>();
    let mut adjacency = vec![Vec::new(); n];
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                adjacency[u].push(v);
                adjacency[v].push(u);
            }
        }
    }
    let colors = n + rng.gen_range(1..8);
    let palettes = adjacency
        .iter()
        .map(|a| {
            let mut all: Vec<Color> = (0..colors as Color).collect();
            all.shuffle(rng);
            let size = (a.len() + 1 + rng.gen_range(0..3)).min(colors);
            all.truncate(size);
            all
        })
        .collect();
    ListInstance::from_parts(adjacency, palettes)
}

#[test]
fn greedy_solves_ten_thousand_deg_plus_one_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..10_000 {
        let inst = random_instance(&mut rng);
        assert!(inst.deg_plus_one_violation().is_none());
        let a = solve_greedy_oracle(&inst).unwrap();
        assert!(inst.accepts(&a), "instance {i}");
        if i % 20 == 0 {
            let colors = inst.palettes.iter().flatten().max().map_or(2, |&c| c as usize + 1);
            let cfg = SimConfig::new(i, default_max_rounds(inst.len()));
            let (b, _) = solve_distributed(&inst, colors, &cfg).unwrap();
            assert!(inst.accepts(&b), "instance {i}");
        }
    }
}

/// Proper coloring of a random subset with colors in `[0, Δ)`, drawn greedily.
fn random_partial(g: &Graph, seed: u64) -> PartialColoring {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = PartialColoring::uncolored(g.n());
    for v in g.nodes() {
        if rng.gen_bool(0.4) {
            let palette = c.palette(g, v, g.delta());
            if let Some(&x) = palette.choose(&mut rng) {
                c.set(v, x);
            }
        }
    }
    c
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn slack_generation_follows_the_keep_rule(fi in 0usize..6, delta in 9usize..20, seed in 0u64..10_000, p_g in 0.0f64..1.0) {
        let g = generate(Family::ALL[fi], delta, seed % 7).unwrap().graph;
        let participants: Vec<bool> = g.nodes().map(|v| (v as u64 ^ seed) % 3 != 0).collect();
        let c = run_slack_generation(&g, &participants, p_g, seed);
        prop_assert!(c.is_proper(&g));
        for v in g.nodes() {
            let tried = participants[v].then(|| replay_try(seed, v, p_g, delta)).flatten();
            let clash = tried.is_some_and(|t| {
                g.neighbors(v).iter().any(|&u| participants[u] && replay_try(seed, u, p_g, delta) == Some(t))
            });
            let expect = if clash { None } else { tried };
            prop_assert_eq!(c.get(v), expect);
        }
    }

    #[test]
    fn slack_accounting_reconciles(g in arb_graph(2, 14, 0.5), seed in 0u64..1000, mask in any::<u16>()) {
        prop_assume!(g.delta() >= 1);
        let c = random_partial(&g, seed);
        let sub: Vec<bool> = g.nodes().map(|v| mask >> (v % 16) & 1 == 1).collect();
        let tracker = SlackTracker::new(&g, &c, &sub);
        for v in g.nodes().filter(|&v| !c.is_colored(v)) {
            let s = measure_slack(&g, &c, v, &sub).unwrap();
            // palette − uncolored degree inside the subgraph, recounted directly.
            let palette = c.palette(&g, v, g.delta()).len() as i64;
            let inside = g.neighbors(v).iter().filter(|&&u| sub[u] && !c.is_colored(u)).count() as i64;
            prop_assert_eq!(s, palette - inside);
            let (low, repeated, outside) = slack_decomposition(&g, &c, v, &sub);
            prop_assert_eq!(s, low + repeated + outside);
            prop_assert_eq!(tracker.slack(v).unwrap(), s);
        }
    }

    #[test]
    fn rebuilt_instances_stay_deg_plus_one(g in arb_graph(2, 14, 0.5), seed in 0u64..1000) {
        prop_assume!(g.delta() >= 1);
        let mut c = random_partial(&g, seed);
        let mut units: Vec<Unit> = g.nodes()
            .filter(|&v| !c.is_colored(v))
            .filter(|&v| measure_slack(&g, &c, v, &vec![true; g.n()]).unwrap() >= 1)
            .map(Unit::Node)
            .collect();
        while !units.is_empty() {
            let inst = build_instance(&g, &c, &units);
            prop_assert!(inst.is_ok(), "{:?}", inst.err());
            let inst = inst.unwrap();
            // Color the first unit from its list; neighbors lose ≤ 1 color and exactly 1 degree.
            let Unit::Node(v) = inst.units[0] else { unreachable!() };
            let before: Vec<(usize, usize)> = (1..inst.len()).map(|i| (inst.palettes[i].len(), inst.degree(i))).collect();
            c.set(v, inst.palettes[0][0]);
            units.retain(|&u| u != Unit::Node(v));
            let next = build_instance(&g, &c, &units).unwrap();
            for (i, &(p, d)) in before.iter().enumerate() {
                let adjacent = inst.adjacency[0].contains(&(i + 1));
                let (p2, d2) = (next.palettes[i].len(), next.degree(i));
                if adjacent {
                    prop_assert!(p - p2 <= 1);
                    prop_assert_eq!(d - d2, 1);
                } else {
                    prop_assert_eq!((p, d), (p2, d2));
                }
            }
        }
        prop_assert!(c.is_proper(&g));
    }

    #[test]
    fn distributed_and_greedy_agree_with_validator(g in arb_graph(2, 14, 0.5), seed in 0u64..1000) {
        prop_assume!(g.delta() >= 1);
        let c = random_partial(&g, seed);
        let all = vec![true; g.n()];
        let units: Vec<Unit> = g.nodes()
            .filter(|&v| !c.is_colored(v) && measure_slack(&g, &c, v, &all).unwrap() >= 1)
            .map(Unit::Node)
            .collect();
        let Ok(inst) = build_instance(&g, &c, &units) else { return Ok(()) };
        let greedy = solve_greedy_oracle(&inst).unwrap();
        prop_assert!(inst.accepts(&greedy));
        let (dist, _) = solve_distributed(&inst, g.delta(), &SimConfig::new(seed, default_max_rounds(g.n()))).unwrap();
        prop_assert!(inst.accepts(&dist));
        let mut out = c.clone();
        brooks_core::listcolor::apply_assignment(&mut out, &inst, &dist);
        prop_assert!(out.is_proper(&g));
    }

    #[test]
    fn colorability_is_monotone_in_k(g in arb_graph(1, 10, 0.5), k in 1usize..6) {
        if is_k_colorable(&g, k).unwrap() {
            prop_assert!(is_k_colorable(&g, k + 1).unwrap());
        }
    }

    #[test]
    fn valid_coloring_implies_colorable(g in arb_graph(1, 9, 0.5), draws in proptest::collection::vec(0u32..4, 9)) {
        let k = g.delta().max(1);
        let c = PartialColoring::from_colors(g.nodes().map(|v| Some(draws[v] % k as u32)).collect());
        if validate_coloring(&g, &c, k) {
            prop_assert!(is_k_colorable(&g, k).unwrap());
        }
    }

    #[test]
    fn brooks_agrees_with_exact_search(g in arb_graph(3, 10, 0.6)) {
        prop_assume!(is_connected(&g) && g.delta() >= 3);
        prop_assert_eq!(brooks_predicts_colorable(&g), is_k_colorable(&g, g.delta()).unwrap());
    }
}

#[test]
fn slack_generation_is_deterministic() {
    let g = generate(Family::MatchedCliques, 8, 0).unwrap().graph;
    let all = vec![true; g.n()];
    let cfg = SimConfig::new(42, 2);
    let a = run_slack_generation_with(&g, &all, 0.3, &cfg).unwrap();
    let b = run_slack_generation_with(&g, &all, 0.3, &cfg).unwrap();
    assert_eq!(a, b);
    let other = run_slack_generation_with(&g, &all, 0.3, &SimConfig::new(43, 2)).unwrap();
    assert_ne!(a.0, other.0);
}
