//! Random fixtures and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use hume_core::{HumeLabel, SentenceAnnotation, UccaGraph};
use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::json;

pub const CATEGORIES: [&str; 9] = ["L", "H", "P", "S", "A", "R", "C", "E", "D"];

/// Edge list kept next to the graph so oracles never go through its indexes.
pub struct RawGraph {
    pub graph: UccaGraph,
    pub internal: Vec<String>,
    pub terminals: Vec<String>,
    /// `(parent, child, remote)`
    pub edges: Vec<(String, String, bool)>,
}

/// A random DAG: a tree of internal nodes with terminals hanging off it, plus
/// remote edges that always point forward in a fixed node numbering.
pub fn random_graph<R: Rng>(rng: &mut R, sentence_id: &str) -> RawGraph {
    let m = rng.gen_range(1..=6);
    let internal: Vec<String> = (0..m).map(|i| format!("n{i}")).collect();
    let mut edges: Vec<(String, String, bool)> = Vec::new();
    let mut has_child = vec![false; m];
    for i in 1..m {
        let p = rng.gen_range(0..i);
        edges.push((internal[p].clone(), internal[i].clone(), false));
        has_child[p] = true;
    }
    let mut owners: Vec<usize> = (0..m).filter(|&i| !has_child[i]).collect();
    for _ in 0..rng.gen_range(0..=4) {
        owners.push(rng.gen_range(0..m));
    }
    owners.shuffle(rng);
    let terminals: Vec<String> = (0..owners.len()).map(|k| format!("t{k}")).collect();
    for (k, &owner) in owners.iter().enumerate() {
        edges.push((internal[owner].clone(), terminals[k].clone(), false));
    }

    // Number internal nodes 0..m and terminals m.. ; forward edges keep it acyclic.
    let all: Vec<&String> = internal.iter().chain(&terminals).collect();
    for _ in 0..rng.gen_range(0..=3) {
        let u = rng.gen_range(0..m);
        let v = rng.gen_range(0..all.len());
        if v <= u {
            continue;
        }
        let (pu, cv) = (all[u].clone(), all[v].clone());
        if edges.iter().any(|(p, c, _)| *p == pu && *c == cv) {
            continue;
        }
        edges.push((pu, cv, true));
    }

    let doc = json!({
        "sentence_id": sentence_id,
        "tokens": terminals.iter().enumerate()
            .map(|(i, _)| json!({"index": i, "text": format!("w{i}")}))
            .collect::<Vec<_>>(),
        "nodes": all,
        "edges": edges.iter().map(|(p, c, r)| json!({
            "parent": p,
            "child": c,
            "category": CATEGORIES[rng.gen_range(0..CATEGORIES.len())],
            "remote": r,
        })).collect::<Vec<_>>(),
        "terminals": terminals.iter().enumerate()
            .map(|(i, t)| (t.clone(), json!(i)))
            .collect::<serde_json::Map<_, _>>(),
    });
    let graph = UccaGraph::from_value(doc).expect("generator builds valid graphs");
    RawGraph {
        graph,
        internal,
        terminals,
        edges,
    }
}

pub fn random_label<R: Rng>(rng: &mut R, terminal: bool) -> HumeLabel {
    if terminal {
        *HumeLabel::ATOMIC.choose(rng).unwrap()
    } else {
        *HumeLabel::ALL.choose(rng).unwrap()
    }
}

/// A valid annotation labeling each node with probability `density`.
pub fn random_annotation<R: Rng>(rng: &mut R, raw: &RawGraph, density: f64) -> SentenceAnnotation {
    let mut labels = Vec::new();
    for n in &raw.internal {
        if rng.gen_bool(density) {
            labels.push((n.clone(), random_label(rng, false)));
        }
    }
    for t in &raw.terminals {
        if rng.gen_bool(density) {
            labels.push((t.clone(), random_label(rng, true)));
        }
    }
    SentenceAnnotation {
        sentence_id: raw.graph.sentence_id().to_string(),
        translation_id: format!("{}-mt", raw.graph.sentence_id()),
        annotator_id: "x".into(),
        submitted_at: 0,
        labels: labels.into_iter().collect(),
    }
}

/// Every ancestor of `node`, found by repeatedly scanning the edge list.
pub fn ancestors(raw: &RawGraph, node: &str) -> BTreeSet<String> {
    let mut found = BTreeSet::new();
    let mut frontier = vec![node.to_string()];
    while let Some(n) = frontier.pop() {
        for (p, c, _) in &raw.edges {
            if *c == n && found.insert(p.clone()) {
                frontier.push(p.clone());
            }
        }
    }
    found
}

/// Counts `[G, O, R, A, B]` over the units that survive exclusion: a labeled
/// node is dropped when some ancestor is internal and labeled atomic.
pub fn oracle_counts(raw: &RawGraph, ann: &SentenceAnnotation) -> [u64; 5] {
    let labels: BTreeMap<&str, HumeLabel> =
        ann.labels.iter().map(|u| (u.node_id.as_str(), u.label)).collect();
    let mut counts = [0u64; 5];
    for (&node, &label) in &labels {
        let hidden = ancestors(raw, node).iter().any(|a| {
            raw.internal.contains(a)
                && labels
                    .get(a.as_str())
                    .is_some_and(|l| HumeLabel::ATOMIC.contains(l))
        });
        if !hidden {
            let slot = HumeLabel::ALL.iter().position(|l| *l == label).unwrap();
            counts[slot] += 1;
        }
    }
    counts
}

/// Observed and chance agreement computed directly from proportions.
pub fn direct_kappa(pairs: &[(HumeLabel, HumeLabel)], space: &[HumeLabel]) -> f64 {
    let n = pairs.len() as f64;
    let p_o = pairs.iter().filter(|(a, b)| a == b).count() as f64 / n;
    let p_e: f64 = space
        .iter()
        .map(|l| {
            let first = pairs.iter().filter(|(a, _)| a == l).count() as f64 / n;
            let second = pairs.iter().filter(|(_, b)| b == l).count() as f64 / n;
            first * second
        })
        .sum();
    (p_o - p_e) / (1.0 - p_e)
}

pub fn fixture_path(rel: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}
