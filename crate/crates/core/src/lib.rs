//! Contextual linear bandits whose rewards are spread over a long, sparse
//! window of past actions.
//!
//! The reward at round `t` is `Σ_k w_k ⟨ξ_{t−k}, θ⟩ + ε`. Writing
//! `φ = w ⊗ θ` turns each epoch's estimation step into a block-sparse
//! regression, solved with a group Lasso ([`lasso`]). [`agents`] holds the
//! Doubling Lasso and AD-Lasso learners plus single-delay baselines.
//! [`riplab`] measures the recovery behaviour of the block-circulant
//! designs these learners produce. [`harness`] runs seeded experiments
//! and presets and writes CSV traces.
//!
//! ```
//! use longhorizon::harness::diagnostic_q;
//!
//! let q = diagnostic_q(&[0.0, 0.6, 0.8], 0.5).unwrap();
//! assert_eq!(q.q, 2);
//! ```

pub mod agents;
pub mod env;
pub mod error;
pub mod harness;
pub mod lasso;
pub mod linalg;
pub mod riplab;
pub mod rng;

pub use error::{Error, Result};
