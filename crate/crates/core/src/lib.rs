//! Time-varying edge cost annotation of road networks from trips with
//! observed total costs.
//!
//! Unknown cost-per-meter values, one per `(edge, tag)` pair, are fitted by
//! regularized least squares. Two graph regularizers tie together edges that
//! carry similar traffic flow (PageRank on the trip-weighted dual graph) and
//! edges that vehicles drive through consecutively.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod eval;
pub mod graph;
pub mod io;
pub mod model;
pub mod objective;
pub mod pagerank;
pub mod sparse;
pub mod synth;
pub mod trips;

pub use error::{Error, Result};
