//! Comparison theorems for multidimensional and matrix-valued SDEs with
//! jumps: condition checkers, a coupled jump-diffusion Monte Carlo engine,
//! and the cone geometry connecting the two.

pub mod conditions;
pub mod engine;
pub mod error;
pub mod generator;
pub mod geometry;
pub mod linalg;
pub mod model;
pub mod psdcone;
pub mod rng;

pub use error::{ConditionError, EngineError, GeneratorError, LinalgError, ModelError, PsdError};
