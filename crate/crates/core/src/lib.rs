//! Event-driven simulation and analysis of coalescence, fragmentation and
//! dynamical percolation on critical Erdős–Rényi random graphs.
//!
//! The crate is organized around five subsystems:
//!
//! * [`graph`] — the discrete measured graph, critical-window sampling,
//!   component and distance queries;
//! * [`structure`] — 2-core, kernel, trimming, core projection, the
//!   depth-first height profile and path-length bounds;
//! * [`dynamics`] — continuous-time evolution under Poisson edge updates,
//!   snapshot observers and the coalescence/fragmentation time change;
//! * [`coalescent`] — an independent multiplicative-coalescent oracle on mass
//!   sequences, structure classification and brute-force bound checkers;
//! * [`metric`] — distances between finite measured metric spaces and between
//!   component collections (Gromov–Hausdorff–Prokhorov family).

pub mod coalescent;
pub mod dynamics;
pub mod error;
pub mod graph;
pub mod metric;
pub mod rng;
pub mod stats;
pub mod structure;

pub use error::{Error, Result};
pub use graph::{ComponentSummary, GraphState, SizeSequence};
