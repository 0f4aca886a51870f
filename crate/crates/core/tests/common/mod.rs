#![allow(dead_code)]

use debt_core::network::{DemandSpec, Model, NodeId, PairDemand, Topology};
use debt_core::Utility;
use proptest::prelude::*;

pub fn model(
    nodes: &[&str],
    channels: &[(&str, &str, f64)],
    demands: &[(usize, usize, f64)],
    utility: Utility,
    eta: f64,
) -> Model {
    let topology = Topology::new(nodes.iter().copied(), channels).unwrap();
    let pairs = demands
        .iter()
        .map(|&(s, d, amount)| PairDemand {
            source: NodeId(s),
            destination: NodeId(d),
            amount,
            utility,
            eta,
        })
        .collect();
    let demand = DemandSpec::new(&topology, pairs).unwrap();
    Model::new(topology, demand, 4).unwrap()
}

pub fn ring3(eta: f64) -> Model {
    model(
        &["A", "B", "C"],
        &[("A", "B", 100.0), ("B", "C", 100.0), ("A", "C", 100.0)],
        &[(0, 1, 10.0), (1, 2, 10.0), (2, 0, 10.0)],
        Utility::linear(1.0),
        eta,
    )
}

pub fn deadlock(eta: f64) -> Model {
    model(
        &["A", "B", "C"],
        &[("A", "B", 100.0), ("B", "C", 100.0)],
        &[(0, 2, 10.0), (2, 0, 10.0), (1, 0, 10.0), (1, 2, 10.0)],
        Utility::linear(1.0),
        eta,
    )
}

pub fn ring5() -> Model {
    model(
        &["A", "B", "C", "D", "E"],
        &[
            ("A", "B", 100.0),
            ("B", "C", 100.0),
            ("C", "D", 100.0),
            ("D", "E", 100.0),
            ("A", "E", 100.0),
        ],
        &[
            (0, 2, 5.0),
            (0, 3, 10.0),
            (0, 4, 11.0),
            (2, 0, 9.0),
            (2, 3, 9.0),
            (3, 4, 15.0),
            (4, 1, 10.0),
            (4, 2, 11.0),
            (4, 3, 13.0),
        ],
        Utility::linear(5.0),
        1.0,
    )
}

/// The regularized built-in scenarios.
pub fn regularized_scenarios() -> Vec<(&'static str, Model)> {
    vec![
        ("ring3", ring3(0.1)),
        ("line3-deadlock", deadlock(0.1)),
        ("ring5", ring5()),
    ]
}

pub fn utility() -> impl Strategy<Value = Utility> {
    prop_oneof![
        (0.1..6.0f64).prop_map(Utility::linear),
        (0.1..6.0f64, 0.05..2.0f64).prop_map(|(a, b)| Utility::scaled_log(a, b)),
    ]
}

const NAMES: [&str; 5] = ["A", "B", "C", "D", "E"];

/// Connected graph on 3 to 5 nodes (a spanning chain plus random chords),
/// 1 to 4 pairs, `eta` in `[0.05, 2]`, mixed utility families.
pub fn random_model() -> impl Strategy<Value = Model> {
    (3usize..=5)
        .prop_flat_map(|n| {
            let chords = proptest::collection::vec((0..n, 0..n), 0..=2);
            let pairs = proptest::collection::vec(
                (0..n, 1..n, 0.0..20.0f64, utility(), 0.05..2.0f64),
                1..5,
            );
            (Just(n), chords, pairs)
        })
        .prop_map(|(n, chords, raw_pairs)| {
            let mut channels: Vec<(usize, usize)> = (1..n).map(|v| (v - 1, v)).collect();
            for (a, b) in chords {
                let (u, v) = (a.min(b), a.max(b));
                if u != v && !channels.contains(&(u, v)) {
                    channels.push((u, v));
                }
            }
            let topology = Topology::new(
                NAMES[..n].iter().copied(),
                &channels
                    .iter()
                    .map(|&(u, v)| (NAMES[u], NAMES[v], 100.0))
                    .collect::<Vec<_>>(),
            )
            .unwrap();
            let mut pairs: Vec<PairDemand> = Vec::new();
            for (s, shift, amount, utility, eta) in raw_pairs {
                let d = (s + shift) % n;
                if pairs.iter().any(|p| p.source.0 == s && p.destination.0 == d) {
                    continue;
                }
                pairs.push(PairDemand {
                    source: NodeId(s),
                    destination: NodeId(d),
                    amount,
                    utility,
                    eta,
                });
            }
            let demand = DemandSpec::new(&topology, pairs).unwrap();
            Model::new(topology, demand, 4).unwrap()
        })
}

/// Random channel prices in `[-scale, scale]`.
pub fn random_prices(channels: usize, scale: f64) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-scale..scale, channels)
}
