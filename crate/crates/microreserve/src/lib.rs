//! Multi-state micro-level claims reserving.
//!
//! The engine fits discrete-time competing-risk transition models and
//! spliced payment severities from individual claim histories, estimates
//! IBNR claim counts from a run-off triangle, and simulates predictive
//! reserve distributions for a whole portfolio, with a chain-ladder
//! baseline and proper scoring rules for evaluation.
//!
//! Pipeline stages map onto modules:
//!
//! - [`claims_data`]: ingestion, discretization into fixed-length periods,
//!   covariate engineering, per-state training sets, run-off triangles.
//! - [`glm`]: the shared multinomial/binomial maximum-likelihood engine.
//! - [`binning`]: data-driven binning of continuous predictors.
//! - [`time_model`]: per-state transition hazards and the reporting model.
//! - [`payment_model`]: spliced severities (GPD tails, truncated-normal
//!   body, covariate-driven mixture weights).
//! - [`ibnr`]: negative-binomial IBNR count model.
//! - [`chain_ladder`]: deterministic chain ladder and the ODP bootstrap.
//! - [`simulator`]: Monte-Carlo reserve distributions for RBNS and IBNR
//!   claims.
//! - [`evaluation`]: CRPS, interval score/PICP, pointwise accuracy.
//! - [`synthetic`]: ground-truth portfolio generator for validation.
//!
//! See the book under `book/` for a guided tour.

pub mod binning;
pub mod chain_ladder;
pub mod claims_data;
pub mod config;
pub mod error;
pub mod evaluation;
pub mod glm;
pub mod ibnr;
pub mod money;
pub mod payment_model;
pub mod schema;
pub mod pipeline;
pub mod rng;
pub mod simulator;
pub mod stats;
pub mod synthetic;
pub mod time_model;
pub mod triangle;

pub use config::ModelConfig;
pub use error::{Error, Result};
pub use money::Money;
