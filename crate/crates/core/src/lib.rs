//! Numerical differential geometry of curves and torse-forming vector
//! fields on coordinate-chart Riemannian manifolds.
//!
//! The crate evaluates metrics and Christoffel symbols on charts, computes
//! Frenet frames and curvatures of sampled or closed-form curves, fits and
//! classifies torse-forming vector fields (concircular, recurrent, torqued,
//! anti-torqued), verifies the characterizing ODE systems of anti-torqued
//! slant helices and torqued curves, and synthesizes such curves by ODE
//! integration. A CLI front end (`torsegeo`) drives the same library and
//! emits machine-readable JSON reports and CSV plot data.

pub mod cli;
pub mod curvegeo;
pub mod diff;
pub mod error;
pub mod fields;
pub mod manifold;
pub mod ode;
pub mod slant;
pub mod synthesis;
pub mod torqued;

pub use error::{Error, Result};
