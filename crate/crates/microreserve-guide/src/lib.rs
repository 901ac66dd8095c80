//! The book under `book/` embeds runnable code, and mdbook cannot execute
//! snippets against workspace crates. This crate includes every chapter
//! as module documentation, so `cargo test --doc -p microreserve-guide`
//! compiles and runs each snippet. A chapter that drifts from the library
//! fails the build.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/claims-data.md")]
pub mod claims_data {}

#[doc = include_str!("../../../book/src/hazards.md")]
pub mod hazards {}

#[doc = include_str!("../../../book/src/payments.md")]
pub mod payments {}

#[doc = include_str!("../../../book/src/counts.md")]
pub mod counts {}

#[doc = include_str!("../../../book/src/simulation.md")]
pub mod simulation {}

#[doc = include_str!("../../../book/src/scoring.md")]
pub mod scoring {}

#[doc = include_str!("../../../book/src/pipeline.md")]
pub mod pipeline {}

#[doc = include_str!("../../../README.md")]
pub mod readme {}
