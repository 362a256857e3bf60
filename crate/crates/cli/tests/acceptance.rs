//! Exit criteria for the whole reduction. Prints one line per criterion and
//! exits nonzero if any criterion outside `KNOWN_RED` fails.

use std::collections::BTreeSet;
use std::process::Command;
use std::time::{Duration, Instant};

use brooks_core::acd::{compute_acd, degree_bound_check, verify_acd, AcdConfig, default_c_sparse};
use brooks_core::classify::{classify_acs, fine_partition, has_non_edge, FinePartition, NodeClass, Thresholds};
use brooks_core::generators::{generate, generate_with, Family, GenParams};
use brooks_core::listcolor::InstanceKind;
use brooks_core::oracle::{is_k_colorable, validate_coloring};
use brooks_core::phases::{run_pipeline, PipelineConfig, PipelineError};
use brooks_core::sim::{ceil_log2, check_congest_budget};
use brooks_core::slackgen::{measure_slack, run_slack_generation, SlackTracker, DEFAULT_P_G};
use brooks_core::{Graph, PartialColoring};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria that fail at this scale for reasons recorded in the project notes.
/// They are still evaluated at full tolerance and reported as FAIL.
const KNOWN_RED: &[u32] = &[1];

const SWEEP_FAMILIES: [Family; 5] =
    [Family::CliqueMinusEdge, Family::MatchedCliques, Family::GuardedPair, Family::RunawayPair, Family::Mixed];
const SWEEP_DELTAS: [usize; 3] = [16, 27, 64];
const SWEEP_SEEDS: u64 = 100;

struct Outcome {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn config_for(eps: brooks_core::Rational, seed: u64) -> PipelineConfig {
    PipelineConfig { epsilon: eps, seed, delta_min: 3, ..PipelineConfig::default() }
}

/// Everything the sweep-wide criteria need from one run.
#[derive(Default)]
struct SweepTally {
    runs: usize,
    returned: usize,
    invalid: Vec<String>,
    ledger_over_16: usize,
    list_violations: Vec<String>,
    structural_violations: Vec<String>,
    elapsed: Duration,
}

/// Guarded pairs ≥ φ/2, nice pairs ≥ Δ/2, nice-c gray/white ≥ Δ/3, guarded gray ≥ Δ/2.
fn list_size_ok(kind: InstanceKind, x: usize, t: &Thresholds) -> Option<bool> {
    let d = t.delta;
    match kind {
        InstanceKind::GuardedPairs => Some(t.meets_phi_half(x)),
        InstanceKind::NiceCPairs => Some(2 * x >= d),
        InstanceKind::NiceCGray | InstanceKind::NiceCWhite => Some(3 * x >= d),
        InstanceKind::GuardedGray => Some(2 * x >= d),
        _ => None,
    }
}

/// Difficult ACs are cliques that avoid every picked special, and the seven
/// node sets partition `V`.
fn structural_check(g: &Graph, family: Family, delta: usize, eps: brooks_core::Rational) -> Vec<String> {
    let mut bad = Vec::new();
    let acd = match compute_acd(g, &AcdConfig::new(eps)) {
        Ok(a) => a,
        Err(e) => return vec![format!("acd: {e}")],
    };
    let report = verify_acd(g, &acd, default_c_sparse());
    if !report.structural_passes() {
        bad.push(format!("{family} Δ={delta}: ACD properties {report:?}"));
    }
    let obs = degree_bound_check(g, &acd);
    if !obs.is_empty() {
        bad.push(format!("{family} Δ={delta}: {} outside/anti-degree bound violations", obs.len()));
    }
    let cls = classify_acs(g, &acd, &Thresholds::new(delta));
    let picked: BTreeSet<usize> = cls.protectors.iter().chain(&cls.escapes).copied().collect();
    if cls.protectors.iter().any(|p| cls.escapes.contains(p)) {
        bad.push(format!("{family} Δ={delta}: protector is also an escape"));
    }
    for (ac, class) in cls.classes.iter().enumerate() {
        if class.kind.is_difficult() {
            if has_non_edge(g, &acd, ac) {
                bad.push(format!("{family} Δ={delta}: difficult AC {ac} has a non-edge"));
            }
            if acd.clique(ac).iter().any(|v| picked.contains(v)) {
                bad.push(format!("{family} Δ={delta}: difficult AC {ac} contains a picked special"));
            }
        }
    }
    match fine_partition(g, &acd, &cls) {
        Ok(part) => {
            if !is_partition(&part, g.n()) {
                bad.push(format!("{family} Δ={delta}: seven sets do not partition V"));
            }
        }
        Err(e) => bad.push(format!("{family} Δ={delta}: {e}")),
    }
    bad
}

fn is_partition(part: &FinePartition, n: usize) -> bool {
    let classes = [
        NodeClass::Protector,
        NodeClass::Escape,
        NodeClass::Sparse,
        NodeClass::Ordinary,
        NodeClass::Runaway,
        NodeClass::Nice,
        NodeClass::Guarded,
    ];
    let mut hits = vec![0usize; n];
    for c in classes {
        for &v in part.set(c) {
            hits[v] += 1;
        }
    }
    hits.iter().all(|&h| h == 1)
}

fn sweep() -> SweepTally {
    let start = Instant::now();
    let mut tally = SweepTally::default();
    for family in SWEEP_FAMILIES {
        for delta in SWEEP_DELTAS {
            for seed in 0..SWEEP_SEEDS {
                let inst = generate(family, delta, seed).expect("sweep families support these Δ");
                let g = &inst.graph;
                let eps = inst.meta.default_epsilon();
                tally.structural_violations.extend(structural_check(g, family, delta, eps));
                tally.runs += 1;
                let Ok(out) = run_pipeline(g, &config_for(eps, seed)) else { continue };
                tally.returned += 1;
                if !validate_coloring(g, &out.coloring, delta) {
                    tally.invalid.push(format!("{family} Δ={delta} seed={seed}"));
                }
                if out.ledger.len() > 16 {
                    tally.ledger_over_16 += 1;
                }
                let t = Thresholds::new(delta);
                for e in &out.ledger.entries {
                    if let Some(x) = e.min_palette {
                        if list_size_ok(e.kind, x, &t) == Some(false) {
                            tally.list_violations.push(format!("{family} Δ={delta} seed={seed} {}: {x}", e.kind.name()));
                        }
                    }
                }
            }
        }
    }
    tally.elapsed = start.elapsed();
    tally
}

fn criterion_1(t: &SweepTally, suite: Duration) -> Outcome {
    let rate = t.returned as f64 / t.runs as f64;
    let pass = t.invalid.is_empty() && rate >= 0.95 && suite < Duration::from_secs(600);
    Outcome {
        id: 1,
        name: "end-to-end correctness",
        pass,
        detail: format!(
            "{} runs, {} returned ({:.1}%, need ≥ 95%), {} invalid, suite {:.1}s",
            t.runs,
            t.returned,
            100.0 * rate,
            t.invalid.len(),
            suite.as_secs_f64()
        ),
    }
}

fn criterion_2() -> Outcome {
    let mut failures = Vec::new();
    for delta in [4, 8, 16] {
        for seed in 0..100 {
            let inst = generate(Family::CliqueMinusEdge, delta, seed).unwrap();
            let (x, y) = inst.meta.non_edges[0];
            match run_pipeline(&inst.graph, &config_for(inst.meta.default_epsilon(), seed)) {
                Ok(out) => {
                    let same = out.coloring.get(x).is_some() && out.coloring.get(x) == out.coloring.get(y);
                    if !same || !validate_coloring(&inst.graph, &out.coloring, delta) {
                        failures.push(format!("Δ={delta} seed={seed}"));
                    }
                }
                Err(e) => failures.push(format!("Δ={delta} seed={seed}: {e}")),
            }
        }
    }
    Outcome {
        id: 2,
        name: "forced pair shares a color",
        pass: failures.is_empty(),
        detail: format!("300 runs, {} failures {:?}", failures.len(), failures.iter().take(3).collect::<Vec<_>>()),
    }
}

fn connected(n: usize, adj: &[u32]) -> bool {
    let mut seen = 1u32;
    let mut stack = vec![0usize];
    while let Some(v) = stack.pop() {
        let fresh = adj[v] & !seen;
        seen |= fresh;
        stack.extend((0..n).filter(|&u| fresh >> u & 1 == 1));
    }
    seen.count_ones() as usize == n
}

fn criterion_3() -> Outcome {
    let mut checked = 0usize;
    let mut mismatches = Vec::new();
    for n in 1..=7usize {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        for mask in 0u32..1 << pairs.len() {
            let mut adj = vec![0u32; n];
            let mut edges = Vec::new();
            for (i, &(u, v)) in pairs.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    adj[u] |= 1 << v;
                    adj[v] |= 1 << u;
                    edges.push((u, v));
                }
            }
            if !connected(n, &adj) {
                continue;
            }
            checked += 1;
            let m = edges.len();
            let complete = m == pairs.len();
            let odd_cycle = n >= 3 && n % 2 == 1 && m == n && adj.iter().all(|a| a.count_ones() == 2);
            let g = Graph::from_edges(n, edges).unwrap();
            let colorable = is_k_colorable(&g, g.delta()).unwrap();
            if colorable == (complete || odd_cycle) {
                mismatches.push(format!("n={n} mask={mask:#x}"));
            }
        }
    }
    Outcome {
        id: 3,
        name: "exact colorability matches Brooks",
        pass: mismatches.is_empty() && checked > 0,
        detail: format!("{checked} connected labeled graphs on ≤ 7 nodes, {} mismatches", mismatches.len()),
    }
}

fn shapes(family: Family, delta: usize, copies: usize, p_g: f64, seeds: u64) -> (usize, Vec<Vec<(InstanceKind, bool)>>) {
    let params = GenParams { components: Some(copies), ..Default::default() };
    let mut n = 0;
    let mut out = Vec::new();
    for seed in 0..seeds {
        let inst = generate_with(family, delta, seed, &params).unwrap();
        n = inst.graph.n();
        let cfg = PipelineConfig { p_g, ..config_for(inst.meta.default_epsilon(), seed) };
        if let Ok(res) = run_pipeline(&inst.graph, &cfg) {
            out.push(res.ledger.shape());
        }
    }
    (n, out)
}

fn criterion_4(t: &SweepTally) -> Outcome {
    // `mixed` runs at p_g = 1/3 so both sizes return often enough to compare.
    let cases = [
        (Family::Mixed, 64, 1.0 / 3.0, 4),
        (Family::CliqueMinusEdge, 64, DEFAULT_P_G, 4),
        (Family::GuardedPair, 64, DEFAULT_P_G, 4),
        (Family::RunawayPair, 64, DEFAULT_P_G, 4),
    ];
    let mut ok = t.ledger_over_16 == 0;
    let mut notes = vec![format!("{} sweep ledgers over 16", t.ledger_over_16)];
    for (family, delta, p_g, seeds) in cases {
        let (n_small, small) = shapes(family, delta, 2, p_g, seeds);
        let (n_large, large) = shapes(family, delta, 20, p_g, seeds);
        let distinct: BTreeSet<_> = small.iter().chain(&large).collect();
        let same = !small.is_empty() && !large.is_empty() && distinct.len() == 1;
        ok &= same;
        notes.push(format!(
            "{family} n={n_small}/{n_large}: {}+{} runs, {} distinct ledgers",
            small.len(),
            large.len(),
            distinct.len()
        ));
    }
    Outcome { id: 4, name: "constant instance count", pass: ok, detail: notes.join("; ") }
}

fn criterion_5(t: &SweepTally) -> Outcome {
    Outcome {
        id: 5,
        name: "explicit list-size gates",
        pass: t.list_violations.is_empty(),
        detail: format!(
            "{} returned runs, {} violations {:?}",
            t.returned,
            t.list_violations.len(),
            t.list_violations.iter().take(3).collect::<Vec<_>>()
        ),
    }
}

fn criterion_6() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    for family in [Family::RunawayPair, Family::GuardedPair] {
        let mut good = 0;
        let mut worst = 0.0f64;
        for seed in 0..1000u64 {
            let inst = generate(family, 64, seed).unwrap();
            let g = &inst.graph;
            let acd = compute_acd(g, &AcdConfig::new(inst.meta.default_epsilon())).unwrap();
            let cls = classify_acs(g, &acd, &Thresholds::new(64));
            let part = fine_partition(g, &acd, &cls).unwrap();
            let participants = part.mask(&[NodeClass::Sparse, NodeClass::Ordinary, NodeClass::Runaway]);
            let c = run_slack_generation(g, &participants, DEFAULT_P_G, seed);
            let mut all_hold = true;
            let mut difficult = 0;
            for (ac, class) in cls.classes.iter().enumerate() {
                let Some(p) = class.picked else { continue };
                difficult += 1;
                let members = acd.clique(ac);
                let nbrs: Vec<usize> = g.neighbors(p).iter().copied().filter(|u| members.contains(u)).collect();
                let colored = nbrs.iter().filter(|&&u| c.is_colored(u)).count();
                worst = worst.max(colored as f64 / nbrs.len() as f64);
                all_hold &= 2 * colored <= nbrs.len();
            }
            if difficult > 0 && all_hold {
                good += 1;
            }
        }
        pass &= good * 100 >= 99 * 1000;
        notes.push(format!("{family}: {good}/1000 seeds ≤ 1/2 (worst fraction {worst:.3})"));
    }
    Outcome { id: 6, name: "special neighborhoods stay mostly uncolored", pass, detail: notes.join("; ") }
}

fn criterion_7() -> Outcome {
    let mut mismatches = 0usize;
    let mut comparisons = 0usize;
    for seed in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(4..40);
        let p = rng.gen_range(0.1..0.6);
        let edges: Vec<(usize, usize)> =
            (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).filter(|_| rng.gen_bool(p)).collect();
        let g = Graph::from_edges(n, edges).unwrap();
        if g.delta() == 0 {
            continue;
        }
        let sub: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.7)).collect();
        let mut c = PartialColoring::uncolored(n);
        let mut tracker = SlackTracker::new(&g, &c, &sub);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        for &v in &order {
            // Any color in [Δ], proper or not: the identity is about counting.
            let col = rng.gen_range(0..g.delta() as u32);
            c.set(v, col);
            tracker.color(&g, v, col);
            for u in (0..n).filter(|&u| !c.is_colored(u)) {
                comparisons += 1;
                if tracker.slack(u) != measure_slack(&g, &c, u, &sub) {
                    mismatches += 1;
                }
            }
        }
    }
    Outcome {
        id: 7,
        name: "incremental slack matches recount",
        pass: mismatches == 0 && comparisons > 0,
        detail: format!("{comparisons} comparisons over 1000 graphs, {mismatches} mismatches"),
    }
}

fn criterion_8(t: &SweepTally) -> Outcome {
    Outcome {
        id: 8,
        name: "structural observations",
        pass: t.structural_violations.is_empty(),
        detail: format!(
            "{} violations {:?}",
            t.structural_violations.len(),
            t.structural_violations.iter().take(3).collect::<Vec<_>>()
        ),
    }
}

fn criterion_9() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    for (family, copies) in [(Family::RunawayPair, 38), (Family::GuardedPair, 43), (Family::CliqueMinusEdge, 76)] {
        let params = GenParams { components: Some(copies), ..Default::default() };
        let inst = generate_with(family, 64, 1, &params).unwrap();
        let n = inst.graph.n();
        let cfg = PipelineConfig { strict_congest: true, congest_c: 4, ..config_for(inst.meta.default_epsilon(), 1) };
        let budget = 4 * ceil_log2(n);
        match run_pipeline(&inst.graph, &cfg) {
            Ok(out) => {
                let bits = out.metrics.overall_max_bits();
                let ok = n <= 5000 && check_congest_budget(&out.metrics, n, 4) && bits <= budget;
                pass &= ok;
                notes.push(format!("{family} n={n}: max {bits} bits, budget {budget}"));
            }
            Err(e @ PipelineError::Congest { .. }) => {
                pass = false;
                notes.push(format!("{family} n={n}: {e}"));
            }
            Err(e) => {
                pass = false;
                notes.push(format!("{family} n={n}: no coloring ({e})"));
            }
        }
    }
    Outcome { id: 9, name: "message size within budget", pass, detail: notes.join("; ") }
}

fn run_cli(args: &[&str], threads: Option<&str>) -> (Vec<u8>, Vec<u8>, Option<i32>) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_brooks"));
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("BROOKS_SIM_THREADS", t),
        None => cmd.env_remove("BROOKS_SIM_THREADS"),
    };
    let out = cmd.output().expect("binary runs");
    (out.stdout, out.stderr, out.status.code())
}

fn criterion_10() -> Outcome {
    let dir = std::env::temp_dir().join(format!("brooks-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let graph = dir.join("g.txt");
    let coloring = dir.join("c.json");
    let graph_s = graph.to_str().unwrap();
    let coloring_s = coloring.to_str().unwrap();
    let (g, _, _) = run_cli(&["gen", "--family", "guarded_pair", "--delta", "16", "--seed", "3"], None);
    std::fs::write(&graph, g).unwrap();
    let (c, _, _) = run_cli(&["color", "--graph", graph_s, "--seed", "5"], None);
    std::fs::write(&coloring, c).unwrap();

    let commands: Vec<Vec<&str>> = vec![
        vec!["gen", "--family", "mixed", "--delta", "16", "--seed", "2", "--format", "json"],
        vec!["acd", "--graph", graph_s],
        vec!["classify", "--family", "runaway_pair", "--delta", "27", "--seed", "4"],
        vec!["color", "--graph", graph_s, "--seed", "5"],
        vec!["color", "--family", "matched_cliques", "--delta", "16", "--seed", "0"],
        vec!["validate", "--graph", graph_s, "--coloring", coloring_s, "--k", "16"],
        vec!["experiment", "--families", "all", "--deltas", "16", "--seeds", "4"],
        vec!["experiment", "--families", "clique_minus_edge,runaway_pair", "--deltas", "16,27", "--seeds", "3", "--format", "json"],
    ];
    let mut diffs = 0;
    let mut runs = 0;
    for args in &commands {
        let first = run_cli(args, None);
        for rep in 0..20 {
            // Thread count varies across repetitions; output must not.
            let threads = ["1", "2", "3", "4"][rep % 4];
            let again = run_cli(args, Some(threads));
            runs += 1;
            if again != first {
                diffs += 1;
            }
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
    Outcome {
        id: 10,
        name: "CLI output is reproducible",
        pass: diffs == 0,
        detail: format!("{} commands × 20 repetitions ({runs} runs), {diffs} diffs", commands.len()),
    }
}

fn main() {
    let start = Instant::now();
    let tally = sweep();
    let mut results = vec![
        criterion_2(),
        criterion_3(),
        criterion_4(&tally),
        criterion_5(&tally),
        criterion_6(),
        criterion_7(),
        criterion_8(&tally),
        criterion_9(),
        criterion_10(),
    ];
    results.insert(0, criterion_1(&tally, start.elapsed()));

    println!("acceptance (sweep {:.1}s)", tally.elapsed.as_secs_f64());
    let mut blocking = Vec::new();
    for r in &results {
        let verdict = if r.pass { "PASS" } else { "FAIL" };
        let note = if !r.pass && KNOWN_RED.contains(&r.id) { " [known red]" } else { "" };
        println!("criterion {:>2} {verdict}{note}: {}: {}", r.id, r.name, r.detail);
        if !r.pass && !KNOWN_RED.contains(&r.id) {
            blocking.push(r.id);
        }
    }
    let passed = results.iter().filter(|r| r.pass).count();
    println!("{passed}/{} criteria pass", results.len());
    if !blocking.is_empty() {
        eprintln!("failing criteria: {blocking:?}");
        std::process::exit(1);
    }
}
