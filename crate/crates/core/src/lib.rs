//! Butterfly-patterned partial sums for drawing from many discrete
//! distributions at once on a SIMD warp.
//!
//! The crate is organised bottom-up:
//!
//! * [`dist`] holds the single-lane machinery: weight vectors, prefix
//!   tables, linear and binary search, the alias-method baseline, and the
//!   brute-force oracle the rest of the crate is checked against.
//! * [`warp`] is a deterministic lockstep emulator of a `W`-lane warp with
//!   `shuffle`/`shuffle_xor`/`any` and a memory-transaction recorder.
//! * [`butterfly`] expresses the transposed caching, transposed partial
//!   sums, butterfly table construction and butterfly search as lane
//!   programs on that emulator, plus the three `draw_z` kernels.
//! * [`lda`] is a small uncollapsed LDA Gibbs sampler that drives the
//!   kernels end to end.
//! * [`bench`] turns traces into reports and runs kernel sweeps.

pub mod bench;
pub mod butterfly;
pub mod dist;
mod error;
pub mod lda;
mod matrix;
mod real;
pub mod warp;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use real::{Precision, Real};
