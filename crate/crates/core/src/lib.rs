//! Pessimistic Best-of-N selection in a linear-Gaussian world.
//!
//! The crate has three layers:
//! - geometry and randomness: [`linalg`], [`rng`], [`rewards`];
//! - uncertainty and selection: [`rnd`] (random-network-distillation
//!   models), [`selection`] (BoN / LCB / oracle / softmax / Poisson), and
//!   [`predictor`] (the practical feature-space reranker);
//! - experiments: [`theory`] (closed-form targets), [`harness`]
//!   (Monte-Carlo runner), and [`verify`] (the built-in check suite).

pub mod error;
pub mod harness;
pub mod linalg;
pub mod predictor;
pub mod rewards;
pub mod rnd;
pub mod rng;
pub mod selection;
pub mod theory;
pub mod tolerances;
pub mod verify;

pub use error::{Error, Result};
pub use harness::{
    load_config, read_results, run_simulation, summarize, write_results, ExperimentConfig,
    OutputFormat, ResultRow,
};
pub use verify::{run_verification, VerificationReport, VerifyLevel, VerifyOptions};
