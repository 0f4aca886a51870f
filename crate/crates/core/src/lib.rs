//! Price-based routing and flow control for payment channel networks.
//!
//! Channels quote directional prices, transacting node pairs respond by
//! splitting (or throttling) their demand across candidate paths, and prices
//! move with the net flow each channel carries. The crate provides:
//!
//! - [`network`]: topology, candidate paths, the signed routing matrix and
//!   the demand description.
//! - [`pair`]: the per-pair flow response (waterfilling for a positive
//!   regularizer, min-price flow control without one).
//! - [`dual`]: path prices, the dual function and its gradient, the price
//!   update and gradient descent on channel prices.
//! - [`oracle`]: a brute-force primal solver used to check the dual route.
//! - [`sim`]: the discrete-time channel balance state machine with on-chain
//!   rebalancing.
//!
//! The crate is `no_std` and only needs an allocator.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod dual;
mod error;
pub(crate) mod linalg;
pub mod network;
pub mod oracle;
pub mod pair;
pub mod sim;
mod utility;

pub use error::{Error, Result};
pub use utility::Utility;
