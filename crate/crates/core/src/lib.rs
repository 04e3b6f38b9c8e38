//! Numerical laboratory for mean curvature flow of curves and hypersurfaces
//! that are asymptotic to regular cones.
//!
//! The crate is organised by subsystem:
//!
//! - [`geometry`]: discrete graphs and polylines, pointwise curvature fields,
//!   normal-graph calculus over a base curve.
//! - [`gaussian`]: Gaussian areas `F_{P,t}`, entropy lower bounds and
//!   monotonicity diagnostics.
//! - [`flow`]: explicit integrators for graphical MCF and curve shortening,
//!   rescaled (normalized) flow diagnostics and deviation traces.
//! - [`expander`]: shooting solvers for self-expanders and the weighted
//!   stability form of their linearization.
//! - [`harness`]: experiment configs, exponent fitting, blow-down comparison
//!   and result emission used by the `mcflab` binary.
//!
//! Batch work (entropy grids, shooting scans, bump sweeps, experiment sweeps)
//! runs on rayon when the `parallel` feature is enabled and falls back to
//! plain iterators otherwise; see [`par`].

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod expander;
pub mod flow;
pub mod gaussian;
pub mod geometry;
pub mod harness;
pub mod par;

pub use error::{Error, Result};
pub use geometry::Vec2;
