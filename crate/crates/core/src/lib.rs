//! Topological measurement of language drift: embedding point clouds,
//! Vietoris-Rips persistent homology, diagram distances, an echo-chamber
//! simulator and a manifest-driven pipeline tying them together.

pub mod corpus;
pub mod diagram_distance;
pub mod echochamber;
pub mod embedding;
pub mod error;
pub mod matrix;
pub mod pipeline;
pub mod projection;
pub mod rng;
pub mod topology;

pub use error::{Error, Result};
