use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::path::PathSet;
use super::routing::RoutingMatrix;
use super::topology::{ChannelId, NodeId, Topology};
use crate::{Error, Result, Utility};

/// Demand of one ordered node pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairDemand {
    pub source: NodeId,
    pub destination: NodeId,
    /// Money requested per slot.
    pub amount: f64,
    pub utility: Utility,
    /// Weight of the quadratic path-splitting regularizer.
    pub eta: f64,
}

/// Per-pair demands, utilities and regularizer weights.
///
/// A pair may be declared with a zero amount (it then only becomes active
/// under a time-varying demand process); the transacting set consists of the
/// pairs with a positive amount.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandSpec {
    pairs: Vec<PairDemand>,
}

impl DemandSpec {
    pub fn new(topology: &Topology, pairs: Vec<PairDemand>) -> Result<Self> {
        let mut problems = Vec::new();
        let mut seen = BTreeSet::new();
        for p in &pairs {
            let label = pair_label(topology, p);
            if !topology.contains(p.source) || !topology.contains(p.destination) {
                problems.push(format!("demand {label} references an unknown node"));
                continue;
            }
            if p.source == p.destination {
                problems.push(format!("demand {label} is a self pair"));
            }
            if !seen.insert((p.source, p.destination)) {
                problems.push(format!("duplicate demand {label}"));
            }
            if !(p.amount.is_finite() && p.amount >= 0.0) {
                problems.push(format!("demand {label} has invalid amount {}", p.amount));
            }
            if !(p.eta.is_finite() && p.eta >= 0.0) {
                problems.push(format!("demand {label} has invalid eta {}", p.eta));
            }
            if let Err(Error::InvalidInput(msg)) = p.utility.validate() {
                problems.push(format!("demand {label}: {msg}"));
            }
        }
        if problems.is_empty() {
            Ok(DemandSpec { pairs })
        } else {
            Err(Error::Validation(problems))
        }
    }

    pub fn pairs(&self) -> &[PairDemand] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn amounts(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.amount).collect()
    }

    /// Pairs with a positive amount.
    pub fn transacting(&self) -> impl Iterator<Item = &PairDemand> {
        self.pairs.iter().filter(|p| p.amount > 0.0)
    }

    /// Smallest regularizer weight over the transacting pairs.
    pub fn min_eta(&self) -> Option<f64> {
        self.transacting().map(|p| p.eta).reduce(f64::min)
    }

    pub fn endpoints(&self) -> Vec<(NodeId, NodeId)> {
        self.pairs.iter().map(|p| (p.source, p.destination)).collect()
    }

    pub(crate) fn set_eta(&mut self, eta: f64) {
        for p in &mut self.pairs {
            p.eta = eta;
        }
    }

    pub(crate) fn set_amounts(&mut self, amounts: &[f64]) {
        for (p, a) in self.pairs.iter_mut().zip(amounts) {
            p.amount = *a;
        }
    }
}

fn pair_label(topology: &Topology, p: &PairDemand) -> String {
    let name = |n: NodeId| {
        if topology.contains(n) {
            String::from(topology.node_name(n))
        } else {
            format!("{n}")
        }
    };
    format!("{}->{}", name(p.source), name(p.destination))
}

/// Worst-case directional load of one channel over the demand box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelMargin {
    pub channel: ChannelId,
    /// `sup (R+ f)_e` over flows within the demand box.
    pub forward_peak: f64,
    /// `sup (R- f)_e` over flows within the demand box.
    pub backward_peak: f64,
    pub half_capacity: f64,
}

impl ChannelMargin {
    pub fn holds(&self) -> bool {
        self.forward_peak <= self.half_capacity && self.backward_peak <= self.half_capacity
    }

    /// `c/2 - max(peak)`; negative when the channel is too small.
    pub fn slack(&self) -> f64 {
        self.half_capacity - self.forward_peak.max(self.backward_peak)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityReport {
    pub channels: Vec<ChannelMargin>,
}

impl CapacityReport {
    /// Whether a channel starting at half capacity can always serve any
    /// flow within the demand box.
    pub fn holds(&self) -> bool {
        self.channels.iter().all(ChannelMargin::holds)
    }

    pub fn violations(&self) -> impl Iterator<Item = &ChannelMargin> {
        self.channels.iter().filter(|m| !m.holds())
    }
}

/// Checks that every channel can carry the worst-case directional load
/// from a balanced start.
///
/// The supremum of `(R+ f)_e` over the demand box is reached by sending
/// each pair's whole amount on one of its paths crossing `e` forward, so it
/// equals the sum of `amounts` over pairs owning such a path (likewise for
/// `R-`).
pub fn check_capacity_assumption(
    routing: &RoutingMatrix,
    paths: &PathSet,
    amounts: &[f64],
    topology: &Topology,
) -> Result<CapacityReport> {
    if amounts.len() != paths.num_pairs() {
        return Err(Error::DimensionMismatch {
            what: "demand amounts",
            expected: paths.num_pairs(),
            actual: amounts.len(),
        });
    }
    if routing.num_channels() != topology.num_channels() || routing.num_paths() != paths.len() {
        return Err(Error::InvalidInput(
            "routing matrix does not match topology and paths".into(),
        ));
    }
    let channels = (0..topology.num_channels())
        .map(|e| {
            let mut forward = 0.0;
            let mut backward = 0.0;
            for (k, amount) in amounts.iter().enumerate() {
                let range = paths.range(k);
                if range.clone().any(|p| routing.get(e, p) > 0) {
                    forward += amount;
                }
                if range.clone().any(|p| routing.get(e, p) < 0) {
                    backward += amount;
                }
            }
            ChannelMargin {
                channel: ChannelId(e),
                forward_peak: forward,
                backward_peak: backward,
                half_capacity: topology.channel(ChannelId(e)).capacity / 2.0,
            }
        })
        .collect();
    Ok(CapacityReport { channels })
}
