//! Sparse recovery with the sparsity-in-levels model.
//!
//! The crate provides iterative hard thresholding and CoSaMP together with
//! their in-levels variants ([`solvers`]), the measurement operators they run
//! against ([`operators`], [`sampling`], [`wavelets`]), an equality-constrained
//! basis pursuit baseline ([`bp`]), brute-force oracles for small instances
//! ([`verification`]) and the phase-transition and function-approximation
//! experiment drivers ([`experiments`]).

pub mod bp;
pub mod error;
pub mod experiments;
pub mod model;
pub mod operators;
pub mod rng;
pub mod sampling;
pub mod solvers;
pub mod thresholding;
pub mod verification;
pub mod wavelets;

pub use error::{Error, Result};
pub use model::{LevelStructure, LocalSparsities, Signal, SparsityModel, SupportSet, C64};
