//! Simulation and analysis for multi-access coded caching with
//! decentralized prefetching.
//!
//! A server holds `N` files of `F` bits each. `c` caches independently
//! store a random `γ = M/N` fraction of every file at bit granularity,
//! and each of `K` users reads from a set of `r` caches; several users
//! may share the same set. The crate provides:
//!
//! - [`model`]: problem parameters, the canonically ordered table of
//!   `r`-subsets of caches with their attached users, and demand vectors.
//! - [`prefetch`]: seeded bit-level random placement and the induced
//!   partition of each file into subfiles indexed by cache subsets.
//! - [`delivery`]: the XOR multicast delivery procedure, per-user
//!   decoding against sampled caches, and delivery verification.
//! - [`rates`]: exact achievable-rate and lower-bound polynomials in
//!   `γ` and `1 - γ`, plus closed forms for the regimes where they meet.
//! - [`indexcoding`]: the induced index coding instance and the explicit
//!   generalized independent set that certifies the lower bound.

pub mod delivery;
mod error;
pub mod indexcoding;
pub mod model;
pub mod poly;
pub mod prefetch;
pub mod rates;
pub mod rng;
pub mod subsets;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;
