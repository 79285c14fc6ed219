//! Validation and optimization of select-and-arrange formation puzzles.
//!
//! A puzzle asks for `N` distinct items out of a pool of `M`, placed on the
//! nodes of a formation graph, subject to linear requirements over the
//! selected items and a minimum synergy over the arrangement. The crate
//! finds feasible formations with a guided randomized constructive search
//! and searches for cheap ones with a hybrid graph-based genetic algorithm
//! whose offspring are repaired by the same constructive search, optionally
//! split over islands that periodically regroup by fitness.

pub mod benchmark;
pub mod cli;
pub mod constraints;
pub mod constructor;
pub mod domain;
pub mod error;
pub mod evolution;
pub mod instance;
pub mod islands;
pub mod oracle;
pub mod persistence;
pub mod rng;
pub mod synergy;

pub use domain::{evaluate, validate_puzzle, FeasibilityReport, FormationGraph, Item, Pool, Puzzle, Requirement, Solution};
pub use error::{Error, Result};
pub use instance::Instance;
