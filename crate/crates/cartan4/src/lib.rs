//! Verification and computation toolkit for the classification of
//! non-reductive homogeneous pseudo-Riemannian four-manifolds: exact
//! structure-constant algebra, the Cartan extension machinery, curvature
//! and Einstein analysis, coordinate-chart checks, and a catalog of every
//! classified case with a replayable validation pipeline.

pub mod cartan;
pub mod catalog;
pub mod chart;
pub mod cli;
pub mod geometry;
pub mod liealg;
pub mod linalg;
pub mod scalar;
