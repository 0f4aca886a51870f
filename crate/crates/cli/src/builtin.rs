//! Scenarios compiled into the binary.

use crate::scenario::{ChannelEntry, DemandEntry, ScenarioFile, SolverSection, UtilitySpec};

pub const NAMES: [&str; 3] = ["ring3", "line3-deadlock", "ring5"];

pub fn describe(name: &str) -> Option<&'static str> {
    Some(match name {
        "ring3" => "3-node ring, capacity 100, circulation A->B->C->A of 10 each, U(q)=q, eta=0.1",
        "line3-deadlock" => {
            "line A-B-C, capacity 100, A<->C 10 each plus B->A and B->C 10 each, U(q)=q, eta=0.1"
        }
        "ring5" => "5-node ring, capacity 100, 9 demands between 5 and 15, U(q)=5q, eta=1",
        _ => return None,
    })
}

pub fn lookup(name: &str) -> Option<ScenarioFile> {
    match name {
        "ring3" => Some(ring3()),
        "line3-deadlock" => Some(line3_deadlock()),
        "ring5" => Some(ring5()),
        _ => None,
    }
}

fn build(
    name: &str,
    nodes: &[&str],
    channels: &[(&str, &str)],
    demands: &[(&str, &str, f64)],
    alpha: f64,
    eta: f64,
) -> ScenarioFile {
    ScenarioFile {
        name: Some(name.into()),
        nodes: nodes.iter().map(|n| n.to_string()).collect(),
        channels: channels
            .iter()
            .map(|(u, v)| ChannelEntry {
                u: u.to_string(),
                v: v.to_string(),
                capacity: 100.0,
            })
            .collect(),
        demands: demands
            .iter()
            .map(|(s, d, amount)| DemandEntry {
                source: s.to_string(),
                destination: d.to_string(),
                amount: *amount,
                eta: None,
                utility: UtilitySpec::Linear { alpha },
            })
            .collect(),
        solver: SolverSection {
            gamma: 0.01,
            eta: Some(eta),
            horizon: 5000,
            ..SolverSection::default()
        },
    }
}

pub fn ring3() -> ScenarioFile {
    build(
        "ring3",
        &["A", "B", "C"],
        &[("A", "B"), ("B", "C"), ("A", "C")],
        &[("A", "B", 10.0), ("B", "C", 10.0), ("C", "A", 10.0)],
        1.0,
        0.1,
    )
}

pub fn line3_deadlock() -> ScenarioFile {
    build(
        "line3-deadlock",
        &["A", "B", "C"],
        &[("A", "B"), ("B", "C")],
        &[
            ("A", "C", 10.0),
            ("C", "A", 10.0),
            ("B", "A", 10.0),
            ("B", "C", 10.0),
        ],
        1.0,
        0.1,
    )
}

pub fn ring5() -> ScenarioFile {
    build(
        "ring5",
        &["A", "B", "C", "D", "E"],
        &[("A", "B"), ("B", "C"), ("C", "D"), ("D", "E"), ("A", "E")],
        &[
            ("A", "C", 5.0),
            ("A", "D", 10.0),
            ("A", "E", 11.0),
            ("C", "A", 9.0),
            ("C", "D", 9.0),
            ("D", "E", 15.0),
            ("E", "B", 10.0),
            ("E", "C", 11.0),
            ("E", "D", 13.0),
        ],
        5.0,
        1.0,
    )
}
