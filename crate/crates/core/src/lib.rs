//! Continuous-variable state toolkit: truncated Fock-space states, the
//! beam-splitter loss channel, homodyne sampling, maximum-likelihood
//! tomography and phase-space analysis.

// `!(x > 0.0)` style guards are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod channel;
pub mod cli;
pub mod error;
pub mod fock;
pub mod homodyne;
pub mod io;
pub mod linalg;
pub mod mle;

pub use error::{Error, Result};
