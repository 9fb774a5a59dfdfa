//! Two-party primitives, their regular quantum embeddings, and the
//! state-comparison challenge game that separates coherent from separable
//! measurement strategies.
//!
//! Modules, bottom up:
//!
//! - [`classical`]: finite joint distributions, dependent parts, entropies.
//! - [`quantum`]: pure states, density operators, POVMs, Lüders measurement.
//! - [`embedding`]: regular embeddings of primitives and their classification.
//! - [`discrimination`]: two-state discrimination bounds and the optimal
//!   unambiguous measurement.
//! - [`game`]: the challenge protocol, comparison strategies, payoff
//!   evaluation, separable search, and the gap certificate.
//! - [`ideal`]: the per-copy ideal-functionality oracle with residual tracking.

pub mod classical;
pub mod discrimination;
pub mod embedding;
pub mod error;
pub mod game;
pub mod ideal;
pub mod linalg;
pub mod quantum;
pub mod random;

pub use error::{Error, Result};
