use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use super::topology::{ChannelId, NodeId, Topology};
use crate::{Error, Result};

/// Traversal direction through a channel `(u, v)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    /// `u -> v`, entry `+1` in the routing matrix.
    Forward,
    /// `v -> u`, entry `-1` in the routing matrix.
    Backward,
}

impl Direction {
    pub fn sign(self) -> i8 {
        match self {
            Direction::Forward => 1,
            Direction::Backward => -1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Hop {
    pub channel: ChannelId,
    pub direction: Direction,
}

/// A directed walk from `source` to `destination` that uses each channel at
/// most once.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Path {
    source: NodeId,
    destination: NodeId,
    hops: Vec<Hop>,
}

impl Path {
    /// Builds a path from a node sequence, looking up the channel between
    /// consecutive nodes.
    pub fn through(topology: &Topology, nodes: &[NodeId]) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidInput("a path needs at least two nodes".into()));
        }
        let mut hops = Vec::with_capacity(nodes.len() - 1);
        for w in nodes.windows(2) {
            let channel = topology.channel_between(w[0], w[1]).ok_or_else(|| {
                Error::InvalidInput(format!("no channel between {} and {}", w[0], w[1]))
            })?;
            let direction = if topology.channel(channel).u == w[0] {
                Direction::Forward
            } else {
                Direction::Backward
            };
            hops.push(Hop { channel, direction });
        }
        Self::new(topology, nodes[0], hops)
    }

    /// Validates that `hops` form a connected walk starting at `source` that
    /// never repeats a channel.
    pub fn new(topology: &Topology, source: NodeId, hops: Vec<Hop>) -> Result<Self> {
        if !topology.contains(source) {
            return Err(Error::InvalidInput(format!("unknown node {source}")));
        }
        if hops.is_empty() {
            return Err(Error::InvalidInput("a path needs at least one hop".into()));
        }
        let mut at = source;
        let mut used = vec![false; topology.num_channels()];
        for hop in &hops {
            if hop.channel.0 >= topology.num_channels() {
                return Err(Error::InvalidInput(format!(
                    "unknown channel index {}",
                    hop.channel.0
                )));
            }
            if core::mem::replace(&mut used[hop.channel.0], true) {
                return Err(Error::InvalidInput(format!(
                    "channel {} traversed twice",
                    topology.channel_name(hop.channel)
                )));
            }
            let ch = topology.channel(hop.channel);
            let (from, to) = match hop.direction {
                Direction::Forward => (ch.u, ch.v),
                Direction::Backward => (ch.v, ch.u),
            };
            if from != at {
                return Err(Error::InvalidInput(format!(
                    "hop through {} does not start at {}",
                    topology.channel_name(hop.channel),
                    topology.node_name(at)
                )));
            }
            at = to;
        }
        if at == source {
            return Err(Error::InvalidInput("path ends where it starts".into()));
        }
        Ok(Path {
            source,
            destination: at,
            hops,
        })
    }

    pub fn source(&self) -> NodeId {
        self.source
    }

    pub fn destination(&self) -> NodeId {
        self.destination
    }

    pub fn hops(&self) -> &[Hop] {
        &self.hops
    }

    /// Number of channels traversed.
    pub fn len(&self) -> usize {
        self.hops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hops.is_empty()
    }

    /// Entry of the signed edge vector for `channel`.
    pub fn sign(&self, channel: ChannelId) -> i8 {
        self.hops
            .iter()
            .find(|h| h.channel == channel)
            .map_or(0, |h| h.direction.sign())
    }

    /// The full signed edge vector, one entry per channel.
    pub fn signed_vector(&self, num_channels: usize) -> Vec<i8> {
        let mut r = vec![0; num_channels];
        for h in &self.hops {
            r[h.channel.0] = h.direction.sign();
        }
        r
    }

    /// Visited nodes, source first.
    pub fn nodes(&self, topology: &Topology) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.hops.len() + 1);
        out.push(self.source);
        for h in &self.hops {
            let ch = topology.channel(h.channel);
            out.push(match h.direction {
                Direction::Forward => ch.v,
                Direction::Backward => ch.u,
            });
        }
        out
    }
}

/// All simple paths from `source` to `destination` with at most `max_hops`
/// channels, ordered by length and then by the sequence of channel indices.
pub fn enumerate_paths(
    topology: &Topology,
    source: NodeId,
    destination: NodeId,
    max_hops: usize,
) -> Result<Vec<Path>> {
    if max_hops == 0 {
        return Err(Error::InvalidInput("max_hops must be at least 1".into()));
    }
    for node in [source, destination] {
        if !topology.contains(node) {
            return Err(Error::InvalidInput(format!("unknown node {node}")));
        }
    }
    if source == destination {
        return Err(Error::InvalidInput(format!(
            "source and destination are both {}",
            topology.node_name(source)
        )));
    }

    let mut found = Vec::new();
    let mut visited = vec![false; topology.num_nodes()];
    let mut stack = Vec::new();
    visited[source.0] = true;
    walk(
        topology,
        source,
        destination,
        max_hops,
        &mut visited,
        &mut stack,
        &mut found,
    );
    found.sort_by(|a: &Vec<Hop>, b: &Vec<Hop>| {
        a.len().cmp(&b.len()).then_with(|| {
            a.iter()
                .map(|h| h.channel.0)
                .cmp(b.iter().map(|h| h.channel.0))
        })
    });
    Ok(found
        .into_iter()
        .map(|hops| Path {
            source,
            destination,
            hops,
        })
        .collect())
}

fn walk(
    topology: &Topology,
    at: NodeId,
    destination: NodeId,
    budget: usize,
    visited: &mut [bool],
    stack: &mut Vec<Hop>,
    found: &mut Vec<Vec<Hop>>,
) {
    if at == destination {
        found.push(stack.clone());
        return;
    }
    if budget == 0 {
        return;
    }
    for &(next, channel) in topology.neighbors(at) {
        if visited[next.0] {
            continue;
        }
        let direction = if topology.channel(channel).u == at {
            Direction::Forward
        } else {
            Direction::Backward
        };
        visited[next.0] = true;
        stack.push(Hop { channel, direction });
        walk(topology, next, destination, budget - 1, visited, stack, found);
        stack.pop();
        visited[next.0] = false;
    }
}

/// Candidate paths of one transacting pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairPaths {
    pub source: NodeId,
    pub destination: NodeId,
    pub paths: Vec<Path>,
}

/// Candidate paths of every pair, with a global path index obtained by
/// concatenating the pairs in order.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pairs: Vec<PairPaths>,
    offsets: Vec<usize>,
}

impl PathSet {
    pub fn new(pairs: Vec<PairPaths>) -> Result<Self> {
        let mut offsets = Vec::with_capacity(pairs.len() + 1);
        let mut total = 0;
        for pp in &pairs {
            if pp.source == pp.destination {
                return Err(Error::InvalidInput(format!(
                    "self pair {} has paths",
                    pp.source
                )));
            }
            for p in &pp.paths {
                if p.source != pp.source || p.destination != pp.destination {
                    return Err(Error::InvalidInput(format!(
                        "path {}->{} filed under pair {}->{}",
                        p.source, p.destination, pp.source, pp.destination
                    )));
                }
            }
            offsets.push(total);
            total += pp.paths.len();
        }
        offsets.push(total);
        Ok(PathSet { pairs, offsets })
    }

    /// Enumerates candidate paths for each `(source, destination)` pair.
    pub fn enumerate(
        topology: &Topology,
        pairs: &[(NodeId, NodeId)],
        max_hops: usize,
    ) -> Result<Self> {
        let pairs = pairs
            .iter()
            .map(|&(s, d)| {
                Ok(PairPaths {
                    source: s,
                    destination: d,
                    paths: enumerate_paths(topology, s, d, max_hops)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(pairs)
    }

    pub fn num_pairs(&self) -> usize {
        self.pairs.len()
    }

    /// Total number of paths.
    pub fn len(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn pairs(&self) -> &[PairPaths] {
        &self.pairs
    }

    pub fn pair(&self, idx: usize) -> &PairPaths {
        &self.pairs[idx]
    }

    /// Global path indices belonging to pair `idx`.
    pub fn range(&self, idx: usize) -> Range<usize> {
        self.offsets[idx]..self.offsets[idx + 1]
    }

    /// Paths in global index order.
    pub fn iter(&self) -> impl Iterator<Item = &Path> {
        self.pairs.iter().flat_map(|pp| pp.paths.iter())
    }

    /// Hop counts in global index order.
    pub fn lengths(&self) -> Vec<usize> {
        self.iter().map(Path::len).collect()
    }

    /// `(pair index, position within pair)` of a global path index.
    pub fn locate(&self, global: usize) -> Option<(usize, usize)> {
        if global >= self.len() {
            return None;
        }
        let pair = self.offsets.partition_point(|&o| o <= global) - 1;
        Some((pair, global - self.offsets[pair]))
    }
}

#[cfg(test)]
fn sequence_key(p: &Path) -> Vec<usize> {
    p.hops.iter().map(|h| h.channel.0).collect()
}
