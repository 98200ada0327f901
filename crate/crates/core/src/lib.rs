//! Spectral density estimation of normalized graph adjacency matrices from
//! random walks, with the hard instances, exact spectra and experiment
//! harnesses needed to study its limits.

pub mod chebyshev;
pub mod diff;
pub mod distinguishers;
pub mod error;
pub mod graph;
pub mod instances;
pub mod linalg;
pub mod moments;
pub mod reconstruct;
pub mod report;
pub mod rng;
pub mod simplex;
pub mod spectrum;
pub mod verify;

pub use error::{Error, Result};
pub use graph::{build_graph, Edge, Overlay, Starts, WalkTranscript, WeightedGraph};
pub use report::ExperimentReport;
pub use rng::RandomSource;
pub use spectrum::{Interval, SpectralMeasure};
pub use verify::{verify_all, Budget, CriterionResult, VerifySummary};
