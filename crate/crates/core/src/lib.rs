//! Structural models and optimisers for lattice-skin structures.
//!
//! A lattice-skin structure couples a pin-jointed truss lattice with a
//! Kirchhoff-Love thin shell discretised on a Catmull-Clark subdivision
//! surface. This crate provides:
//!
//! - lattice generation from unit-cell templates ([`lattice`]),
//! - truss and shell finite elements ([`truss`], [`shell`]),
//! - the Lagrange-multiplier coupling between them, solved by constraint
//!   elimination ([`couple`]),
//! - infill topology optimisation of strut cross-sections with SIMP-like
//!   penalisation, a cell-based sensitivity filter and lattice extraction
//!   ([`penalise`], [`topopt`], [`extract`]),
//! - free-form-deformation shape optimisation and form-finding ([`ffd`],
//!   [`shapeopt`]),
//! - a small constrained optimiser shared by both problems ([`optimizer`]).
//!
//! All heavy loops are data-parallel via rayon when the default `parallel`
//! feature is enabled; results are bit-identical for any thread count because
//! every reduction runs in a canonical order.

pub mod couple;
pub mod error;
pub mod extract;
pub mod ffd;
pub mod geometry;
pub mod lattice;
pub mod model;
pub mod optimizer;
pub mod parallel;
pub mod penalise;
pub mod shapeopt;
pub mod shell;
pub mod sparse;
pub mod topopt;
pub mod truss;

pub use error::{Error, Result};
