//! Sequential Monte Carlo sampling from sequence-level power distributions.
//!
//! For an autoregressive token model `p(y|x)` and an exponent `alpha >= 1`,
//! the power distribution `pi_alpha(y|x) ∝ p(y|x)^alpha` concentrates mass on
//! high-likelihood sequences without touching the model itself. This crate
//! samples from `pi_alpha` with a particle ensemble that advances all
//! candidates in one batched decode, corrects them with per-token importance
//! weights, and resamples when the effective sample size collapses.
//!
//! Everything runs against small, exactly enumerable toy models so each piece
//! can be validated end to end:
//!
//! - [`lm`] — toy autoregressive models (tabular, n-gram, synthetic-logit)
//!   with incremental per-particle decode state, the KV-cache analog.
//! - [`target`] — brute-force enumeration of `p` and `pi_alpha` over all
//!   terminated sequences, plus Renyi-entropy diagnostics.
//! - [`engine`] — the particle sampler: proposal sampling, incremental
//!   weighting, ESS-triggered resampling, exponent ramping, and an SIS mode.
//! - [`mh`] — a block-structured Metropolis-Hastings power sampler used as a
//!   cost and correctness baseline.
//! - [`cost`] — closed-form compute/latency formulas reconciled against
//!   empirical token-eval ledgers.
//! - [`cli`] — the `power-smc` binary: one subcommand per experiment, all
//!   emitting CSV/JSON artifacts.
//!
//! The `examples/` directory has one runnable program per capability; start
//! with `cargo run --example exact_oracle`.

pub mod cli;
pub mod cost;
pub mod engine;
pub mod error;
pub mod lm;
pub mod mh;
pub mod numeric;
pub mod presets;
pub mod report;
pub mod resample;
pub mod rng;
pub mod target;

pub use error::{Error, Result};
pub use lm::{DecodeState, LogProbRow, ToyModel, Vocabulary};

/// Token identifier. Ids run over `0..=V` where `V` is the ordinary-token
/// count; one id in that range is the EOS token.
pub type TokenId = u32;
