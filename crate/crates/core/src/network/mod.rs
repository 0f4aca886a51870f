//! Static problem description: channel graph, candidate paths, the signed
//! routing matrix and per-pair demands.

mod demand;
mod model;
mod path;
mod routing;
mod topology;

pub use demand::{check_capacity_assumption, CapacityReport, ChannelMargin, DemandSpec, PairDemand};
pub use model::{Model, DEFAULT_MAX_HOPS};
pub use path::{enumerate_paths, Direction, Hop, PairPaths, Path, PathSet};
pub use routing::RoutingMatrix;
pub use topology::{Channel, ChannelId, NodeId, Topology};
