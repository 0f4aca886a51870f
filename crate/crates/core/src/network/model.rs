use alloc::format;
use alloc::vec::Vec;

use super::demand::{check_capacity_assumption, CapacityReport, DemandSpec};
use super::path::PathSet;
use super::routing::RoutingMatrix;
use super::topology::Topology;
use crate::{Error, Result};

pub const DEFAULT_MAX_HOPS: usize = 4;

/// A validated problem instance: topology, demands, candidate paths and the
/// routing matrix. The `k`-th demand pair owns `paths.range(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    topology: Topology,
    demand: DemandSpec,
    paths: PathSet,
    routing: RoutingMatrix,
    lengths: Vec<usize>,
}

impl Model {
    /// Uses every simple path of at most `max_hops` channels as a candidate.
    /// Fails if some declared pair has no candidate path.
    pub fn new(topology: Topology, demand: DemandSpec, max_hops: usize) -> Result<Self> {
        let paths = PathSet::enumerate(&topology, &demand.endpoints(), max_hops)?;
        let missing: Vec<_> = paths
            .pairs()
            .iter()
            .filter(|pp| pp.paths.is_empty())
            .map(|pp| {
                format!(
                    "no path from {} to {} within {max_hops} hops",
                    topology.node_name(pp.source),
                    topology.node_name(pp.destination)
                )
            })
            .collect();
        if !missing.is_empty() {
            return Err(Error::Validation(missing));
        }
        Self::with_paths(topology, demand, paths)
    }

    /// Uses an explicit path set, which must list the demand pairs in order.
    pub fn with_paths(topology: Topology, demand: DemandSpec, paths: PathSet) -> Result<Self> {
        if paths.num_pairs() != demand.len()
            || paths
                .pairs()
                .iter()
                .zip(demand.pairs())
                .any(|(pp, d)| pp.source != d.source || pp.destination != d.destination)
        {
            return Err(Error::InvalidInput(
                "path set pairs do not match demand pairs".into(),
            ));
        }
        let routing = RoutingMatrix::from_paths(&paths, topology.num_channels());
        let lengths = paths.lengths();
        Ok(Model {
            topology,
            demand,
            paths,
            routing,
            lengths,
        })
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn demand(&self) -> &DemandSpec {
        &self.demand
    }

    pub fn paths(&self) -> &PathSet {
        &self.paths
    }

    pub fn routing(&self) -> &RoutingMatrix {
        &self.routing
    }

    /// Hop count of each path, in global index order.
    pub fn path_lengths(&self) -> &[usize] {
        &self.lengths
    }

    pub fn num_channels(&self) -> usize {
        self.topology.num_channels()
    }

    pub fn num_paths(&self) -> usize {
        self.paths.len()
    }

    pub fn num_pairs(&self) -> usize {
        self.demand.len()
    }

    pub fn capacity_report(&self) -> CapacityReport {
        check_capacity_assumption(&self.routing, &self.paths, &self.demand.amounts(), &self.topology)
            .expect("model dimensions are consistent")
    }

    /// Same model with every pair's regularizer weight replaced.
    pub fn with_eta(mut self, eta: f64) -> Result<Self> {
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(Error::InvalidInput(format!("invalid eta {eta}")));
        }
        self.demand.set_eta(eta);
        Ok(self)
    }

    /// Same model with new per-pair amounts.
    pub fn with_amounts(mut self, amounts: &[f64]) -> Result<Self> {
        if amounts.len() != self.num_pairs() {
            return Err(Error::DimensionMismatch {
                what: "demand amounts",
                expected: self.num_pairs(),
                actual: amounts.len(),
            });
        }
        if let Some(a) = amounts.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
            return Err(Error::InvalidInput(format!("invalid demand amount {a}")));
        }
        self.demand.set_amounts(amounts);
        Ok(self)
    }
}
