//! Reduced PQ capability areas of distribution grids.
//!
//! A lossless linear power-flow model turns every voltage band and branch
//! rating of a distribution grid into a halfspace over the aggregated
//! feeder setpoint `(P, Q)`. Intersected with the generator capability
//! rectangle, the binding halfspaces form a convex polygon that a
//! transmission operator can use in place of the full grid model.
//!
//! The [`acpf`] and [`scanner`] modules provide an independent AC
//! power-flow sweep to measure how well that polygon matches the area that
//! is actually reachable.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acpf;
pub mod admittance;
pub mod bundled;
pub mod capability;
pub mod error;
pub mod lintdf;
pub mod netmodel;
pub mod polytope2d;
pub mod scanner;

pub use capability::{analyze, Analysis, AnalysisOptions, CapabilityOptions, CapabilityResult};
pub use error::{CaseError, ModelError, ScanError};
pub use netmodel::{parse_case, CaseFormat, NetworkCase};
pub use polytope2d::{ConvexPolygon, Point};
pub use scanner::{compute_metrics, scan, Metrics, ScanConfig, ScanResult};
