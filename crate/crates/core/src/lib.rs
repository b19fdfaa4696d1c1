//! Distribution of B-free integers in short intervals.
//!
//! The crate is organised around five modules:
//!
//! * [`bset`]: sieving sets `B`, exact B-free segments, `μ_B` and the
//!   semigroups `⟨B⟩` and `[B]`.
//! * [`constants`]: Euler products, `ζ`, `γ(α)`, `A_α` and the sinc moment
//!   integral, each returned as an [`Approximation`] with an error bound.
//! * [`stats`]: the histogram-first pipeline over `n ≤ X`: window counts,
//!   centred and weighted moments, absolute moments, gaps and KS distance.
//! * [`theory`]: exponential-sum kernels, reduced fractions, the exact
//!   variance `C₂(H)`, truncated `C_k` and the constrained-sum inequalities.
//! * [`fbm`]: the interpolated walk `Q(τ)`, normalised paths, ensemble
//!   covariances and a Cholesky fBm sampler.

pub mod arith;
pub mod bset;
pub mod constants;
mod error;
pub mod fbm;
pub mod stats;
pub mod theory;

pub use constants::{Approximation, Rigor};
pub use error::{Error, Result};
