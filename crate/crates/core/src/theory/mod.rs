//! Analytic side: kernels, reduced fractions, variance sums, truncated
//! higher moments and the constrained-sum inequalities.

mod congruence;
pub mod kernels;
mod fractions;
mod moments;
mod variance;

pub use fractions::{reduced_count, reduced_fractions, ReducedFractionSet};
pub use kernels::{e_kernel, f_kernel, phi_kernel, PhiKernel};
pub use variance::{c2_exact, c2_weighted};
pub use congruence::{
    constrained_sum, fundamental_lemma_margin, j_kernel, lcm_all, ms_lemma_margin, s_h, Coordinate,
    Margin, MAX_HALF_TUPLES,
};
pub use moments::{ck_truncated, MAX_TOTAL_WORK};
