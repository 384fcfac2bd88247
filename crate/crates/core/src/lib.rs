//! Numerical model of the imitation Bergman metric on strongly pseudo-convex domains,
//! with gauges, kernels, Toeplitz truncations and the boundary covering.

pub mod covering;
pub mod covering_checks;
pub mod cplx;
pub mod domain;
pub mod error;
pub mod gauge;
pub mod kernel;
pub mod lattice;
pub mod metric;
pub mod metric_checks;
pub mod operator_checks;
pub mod operators;
pub mod plan;
pub mod poly;
pub mod quadrature;
pub mod report;
pub mod roots;
pub mod sampling;
pub mod stats;

pub use cplx::{Point, C};
pub use domain::{DomainSpec, Region, Tag};
pub use error::{Error, Result};
