//! Loopless flux balance analysis.
//!
//! FBA optima may carry flux around internal cycles. This crate solves the
//! loopless variant, where every internal flux must be
//! compatible with a potential difference `Δμ = S_Iᵀ μ` of opposite sign, by
//! three monolithic MIP encodings ([`formulations`]) and by a combinatorial
//! Benders decomposition ([`benders`]). [`verifier`] certifies results
//! independently, [`enzyme`] builds enzyme-constrained variants and [`bench`]
//! runs method × instance grids.

pub mod bench;
pub mod benders;
pub mod enzyme;
pub mod error;
pub mod exec;
pub mod formulations;
pub mod io;
pub mod model;
pub mod report;
pub mod solver;
pub mod sparse;
pub mod synthetic;
pub mod verifier;

pub use crate::error::{Error, Result};
pub use crate::exec::Execution;
pub use crate::formulations::{FluxSystem, Formulation, LooplessConfig};
pub use crate::model::{build_example_loop_model, FluxSolution, MetabolicModel};
pub use crate::solver::{Backend, HighsBackend, SolveSettings, SolveStatus};
