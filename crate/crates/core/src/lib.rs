//! Vine copula model selection toolkit.
//!
//! A vine copula factorizes a d-dimensional copula density into d(d-1)/2
//! bivariate (conditional) pair-copulas organized along a sequence of linked
//! trees. This crate provides
//!
//! - six parametric pair-copula families (plus the independence copula) with
//!   densities, h-functions, inverse h-functions and maximum-likelihood
//!   fitting ([`families`]),
//! - rank-based dependence estimation ([`dependence`]),
//! - regular-vine tree machinery: proximity condition, maximum spanning
//!   trees, structure counting and matrix serialization ([`structure`]),
//! - a test of constant conditional correlation for conditional pairs
//!   ([`ccc`]),
//! - three structure-selection algorithms: Dissmann's sequential maximum
//!   spanning tree heuristic and two variants that score candidate edges or
//!   root nodes by how constant the resulting conditional correlations are
//!   ([`selection`]),
//! - random vine generation, vine sampling and a seeded Monte-Carlo study
//!   harness comparing the selection methods by AIC ([`simulation`]).

pub mod ccc;
pub mod dependence;
pub mod error;
pub mod families;
pub mod model;
pub mod numeric;
pub mod selection;
pub mod simulation;
pub mod structure;

pub use error::{Result, VineError};

/// Evaluation clamp at the unit-square boundary, guarding density
/// singularities at the corners.
pub const UNIT_EPS: f64 = 1e-10;

/// Clamp a copula-scale value into the open unit interval.
#[inline]
pub fn clamp_unit(u: f64) -> f64 {
    u.clamp(UNIT_EPS, 1.0 - UNIT_EPS)
}
