//! Streaming canonical correlation analysis by stochastic approximation.
//!
//! Two solvers work on the convex relaxation of rank-`k` CCA, fed one
//! paired sample at a time through empirically whitened gradients:
//!
//! * [`msg`]: projected stochastic gradient over the nuclear/spectral norm
//!   ball, with an optional rank cap.
//! * [`meg`]: matrix exponentiated gradient over capped density matrices in
//!   the dilated space.
//!
//! Averaged iterates are rounded to rank-`k` solutions by [`rounding`] and
//! scored by [`evaluation`]. [`harness`] generates synthetic data, reads and
//! writes dataset files, and drives complete runs.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evaluation;
pub mod harness;
pub mod meg;
pub mod msg;
pub mod oracle;
pub mod rounding;
pub mod sample;
pub mod solver;
pub mod spectral;
pub mod whitening;

pub use error::{CcaError, Result};
pub use sample::PairedSample;
