//! Graphical lasso estimation through soft-thresholding of the covariance:
//! a closed-form estimate with verifiable optimality conditions, an error
//! certificate when it is only approximate, and a block coordinate descent
//! solver for reference and refinement.

pub mod closed_form;
pub mod consistency;
pub mod covariance;
pub mod datagen;
pub mod graph;
pub mod metrics;
pub mod numerics;
pub mod solver;
pub mod solution;

pub use solution::{ComponentOutcome, GlSolution, KktClause, KktReport, Method};
