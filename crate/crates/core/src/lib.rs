//! Space-filling designs on the unit hypercube.
//!
//! The crate covers the full life cycle of a Latin Hypercube design:
//!
//! - generation of random, centered and simple random samples ([`design`]),
//!   plus a scrambled Sobol' baseline ([`sobol`]);
//! - closed-form L²-discrepancies and point-distance criteria, with O(N)
//!   re-evaluation after an elementary column swap ([`criteria`]);
//! - three stochastic optimizers driven by elementary swaps ([`optimize`]);
//! - minimum spanning tree statistics and the k-dimensional subprojection
//!   study ([`diagnostics`]).
//!
//! Indices are 0-based throughout the library. Command-line tools and file
//! formats built on top of it use 1-based indices.
//!
//! With the default `parallel` feature, batch work (subprojection sweeps,
//! Monte Carlo integration, replicated optimizer runs) is spread over a rayon
//! thread pool. Without it every [`Execution`] mode runs sequentially and
//! produces identical results.

pub mod criteria;
pub mod design;
pub mod diagnostics;
mod error;
pub mod io;
pub mod optimize;
mod par;
pub mod rng;
pub mod sobol;

pub use criteria::{
    evaluate, CriterionKind, CriterionSpec, CriterionValue, Direction, SwapState, DEFAULT_P,
};
pub use design::{DesignMatrix, LhsDesign, LhsVariant};
pub use error::{Error, Result};
pub use par::Execution;
pub use rng::Seed;
