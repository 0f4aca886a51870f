use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::{Error, Result};

/// Dense index of a node in a [`Topology`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

/// Dense index of a channel in a [`Topology`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ChannelId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// An undirected channel. The endpoint with the lower index is always `u`,
/// and the channel balance is the money held by `u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel {
    pub u: NodeId,
    pub v: NodeId,
    pub capacity: f64,
}

impl Channel {
    pub fn other(&self, node: NodeId) -> Option<NodeId> {
        if node == self.u {
            Some(self.v)
        } else if node == self.v {
            Some(self.u)
        } else {
            None
        }
    }
}

/// Weighted undirected channel graph. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    names: Vec<String>,
    channels: Vec<Channel>,
    // per node: (neighbor, channel), sorted by channel index
    adjacency: Vec<Vec<(NodeId, ChannelId)>>,
}

impl Topology {
    /// Builds a topology from node names and `(a, b, capacity)` channel
    /// triples. Channel endpoints may be given in either order; they are
    /// stored with the lower node index first. Every violation found is
    /// reported in a single [`Error::Validation`].
    pub fn new<N, S>(nodes: N, channels: &[(S, S, f64)]) -> Result<Self>
    where
        N: IntoIterator,
        N::Item: Into<String>,
        S: AsRef<str>,
    {
        let names: Vec<String> = nodes.into_iter().map(Into::into).collect();
        let mut problems = Vec::new();

        let mut seen = BTreeSet::new();
        for name in &names {
            if name.is_empty() {
                problems.push("empty node name".to_string());
            } else if !seen.insert(name.as_str()) {
                problems.push(format!("duplicate node {name:?}"));
            }
        }

        let lookup = |name: &str| names.iter().position(|n| n == name).map(NodeId);
        let mut built = Vec::with_capacity(channels.len());
        let mut endpoints = BTreeSet::new();
        for (a, b, capacity) in channels {
            let (a, b) = (a.as_ref(), b.as_ref());
            let (Some(x), Some(y)) = (lookup(a), lookup(b)) else {
                for name in [a, b] {
                    if lookup(name).is_none() {
                        problems.push(format!("channel {a}-{b} references unknown node {name:?}"));
                    }
                }
                continue;
            };
            if x == y {
                problems.push(format!("channel {a}-{b} is a self-loop"));
                continue;
            }
            if !(capacity.is_finite() && *capacity > 0.0) {
                problems.push(format!(
                    "channel {a}-{b} must have a finite positive capacity, got {capacity}"
                ));
                continue;
            }
            let (u, v) = if x < y { (x, y) } else { (y, x) };
            if !endpoints.insert((u, v)) {
                problems.push(format!("duplicate channel {a}-{b}"));
                continue;
            }
            built.push(Channel {
                u,
                v,
                capacity: *capacity,
            });
        }

        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }

        let mut adjacency = alloc::vec![Vec::new(); names.len()];
        for (idx, ch) in built.iter().enumerate() {
            adjacency[ch.u.0].push((ch.v, ChannelId(idx)));
            adjacency[ch.v.0].push((ch.u, ChannelId(idx)));
        }

        Ok(Topology {
            names,
            channels: built,
            adjacency,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.names.len()
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn node(&self, name: &str) -> Option<NodeId> {
        self.names.iter().position(|n| n == name).map(NodeId)
    }

    pub fn node_name(&self, node: NodeId) -> &str {
        &self.names[node.0]
    }

    pub fn node_names(&self) -> &[String] {
        &self.names
    }

    pub fn contains(&self, node: NodeId) -> bool {
        node.0 < self.names.len()
    }

    pub fn channel(&self, id: ChannelId) -> &Channel {
        &self.channels[id.0]
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn capacities(&self) -> Vec<f64> {
        self.channels.iter().map(|c| c.capacity).collect()
    }

    pub fn channel_between(&self, a: NodeId, b: NodeId) -> Option<ChannelId> {
        self.adjacency
            .get(a.0)?
            .iter()
            .find(|(n, _)| *n == b)
            .map(|(_, c)| *c)
    }

    /// `"u-v"` using node names, lower-indexed endpoint first.
    pub fn channel_name(&self, id: ChannelId) -> String {
        let ch = &self.channels[id.0];
        format!("{}-{}", self.names[ch.u.0], self.names[ch.v.0])
    }

    /// Neighbors of `node` with the connecting channel, ordered by channel index.
    pub fn neighbors(&self, node: NodeId) -> &[(NodeId, ChannelId)] {
        &self.adjacency[node.0]
    }
}
