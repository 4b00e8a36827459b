//! Seedable simulation laboratory for online linear programming with
//! first-order dual methods.
//!
//! * [`domain`]: arrivals, instances, decision traces, scoring;
//! * [`distributions`]: seeded arrival and resource laws;
//! * [`dual_geometry`]: decision rule, subgradients, projections, dual values;
//! * [`algorithms`]: online policies and dual learners;
//! * [`hindsight`]: exact offline optima;
//! * [`bench`]: experiment plans, aggregation and reporting.

// `!(x >= 0.0)` style checks reject NaN along with negatives; dense
// numeric kernels index several arrays per loop.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod algorithms;
pub mod bench;
pub mod distributions;
pub mod domain;
pub mod dual_geometry;
pub mod error;
pub mod hindsight;

pub use error::{Error, Result};
