//! Analytic constants: densities, variance constants and the sinc moment.

mod euler;
pub mod quadrature;
pub mod zeta;

use std::f64::consts::PI;
use std::fmt;

pub use euler::{euler_product, partial_product, LocalFactor};

use crate::bset::{count_semigroup, estimate_index, SievingSet};
use crate::{Error, Result};

/// Whether an error bound is backed by an inequality or only indicative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rigor {
    Rigorous,
    Heuristic,
}

impl fmt::Display for Rigor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rigor::Rigorous => "rigorous",
            Rigor::Heuristic => "heuristic",
        })
    }
}

/// A numeric value with an absolute error bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Approximation {
    pub value: f64,
    pub abs_error: f64,
    pub rigor: Rigor,
    /// How the underlying series or product was cut off.
    pub truncation: String,
    pub notes: Vec<String>,
}

impl Approximation {
    pub fn lower(&self) -> f64 {
        self.value - self.abs_error
    }

    pub fn upper(&self) -> f64 {
        self.value + self.abs_error
    }

    pub fn contains(&self, x: f64) -> bool {
        (self.lower()..=self.upper()).contains(&x)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Precondition(format!("alpha = {alpha} outside (0, 1)")))
    }
}

/// Density `∏ (1 − 1/b)` of the `B`-free integers.
pub fn density(set: &SievingSet, cutoff: u64) -> Result<Approximation> {
    euler_product(set, &LocalFactor::new([(-1.0, 1.0)])?, cutoff)
}

/// `γ(α) = (2π)^α / π² · cos(πα/2) · Γ(1−α)`.
pub fn gamma_alpha(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok((2.0 * PI).powf(alpha) / (PI * PI) * (PI * alpha / 2.0).cos() * libm::tgamma(1.0 - alpha))
}

/// Local factor `1 − 2/b + 2 b^{-(1+α)} − b^{-2α}` of the variance constant.
pub fn variance_factor(alpha: f64) -> Result<LocalFactor> {
    LocalFactor::new([(-2.0, 1.0), (2.0, 1.0 + alpha), (-1.0, 2.0 * alpha)])
}

const INDEX_TOLERANCE: f64 = 0.05;
const INDEX_LIMIT: u64 = 1_000_000_000_000;
const INDEX_COUNT_CAP: u64 = 2_000_000;

fn index_note(set: &SievingSet, alpha: f64) -> Option<String> {
    // Walk the limit up so that dense custom semigroups stay affordable.
    let mut limit = 1_000_000u64;
    while limit < INDEX_LIMIT && count_semigroup(set, limit * 100, false) <= INDEX_COUNT_CAP {
        limit *= 100;
    }
    match estimate_index(set, limit) {
        Ok(est) if (est.alpha - alpha).abs() > INDEX_TOLERANCE => Some(format!(
            "alpha = {alpha} differs from the empirical index {:.4} (limit {limit}) by more than {INDEX_TOLERANCE}",
            est.alpha
        )),
        Ok(_) => None,
        Err(e) => Some(format!("index not determined: {e}")),
    }
}

/// Variance constant `ζ(2−α) γ(α) ∏ (1 − 2/b + 2/b^{1+α} − 1/b^{2α})`.
///
/// The result is downgraded to [`Rigor::Heuristic`] when `alpha` is far from
/// the empirical growth index of `⟨B⟩`.
pub fn a_alpha(set: &SievingSet, alpha: f64, cutoff: u64) -> Result<Approximation> {
    let gamma = gamma_alpha(alpha)?;
    let (zeta, zeta_err) = zeta::zeta_with_error(2.0 - alpha);
    let prod = euler_product(set, &variance_factor(alpha)?, cutoff)?;
    let scale = zeta * gamma;
    let value = scale * prod.value;
    let abs_error = scale.abs() * prod.abs_error
        + (gamma * prod.value).abs() * zeta_err
        + 8.0 * f64::EPSILON * value.abs();
    let mut out = Approximation {
        value,
        abs_error,
        rigor: prod.rigor,
        truncation: prod.truncation,
        notes: prod.notes,
    };
    if let Some(note) = index_note(set, alpha) {
        out.rigor = Rigor::Heuristic;
        out.notes.push(note);
    }
    Ok(out)
}

/// `A = ζ(3/2)/π · ∏_p (1 − 3/p² + 2/p³)` for the squarefree integers.
pub fn a_squarefree(cutoff: u64) -> Result<Approximation> {
    let set = SievingSet::squarefree();
    let (zeta, zeta_err) = zeta::zeta_with_error(1.5);
    // In terms of b = p²: 1 − 3 b^{-1} + 2 b^{-3/2}.
    let prod = euler_product(&set, &LocalFactor::new([(-3.0, 1.0), (2.0, 1.5)])?, cutoff)?;
    let value = zeta / PI * prod.value;
    let abs_error =
        zeta / PI * prod.abs_error + prod.value / PI * zeta_err + 8.0 * f64::EPSILON * value;
    Ok(Approximation {
        value,
        abs_error,
        rigor: prod.rigor,
        truncation: prod.truncation,
        notes: prod.notes,
    })
}

/// Closed form of `∫₀^∞ τ^{1−α} V(τ)² dτ` with `V(τ) = sin(πτ)/(πτ)`:
/// `−2^{α−1} π^{α−2} cos(πα/2) Γ(−α)`.
pub fn v_moment_closed(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(-(2f64.powf(alpha - 1.0)) * PI.powf(alpha - 2.0) * (PI * alpha / 2.0).cos()
        * libm::tgamma(-alpha))
}

/// Result of integrating the sinc moment numerically.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureCheck {
    pub closed: f64,
    pub numeric: f64,
    /// Quadrature error estimate plus the tail remainder bound.
    pub numeric_error: f64,
    /// Upper end of the numerically integrated range.
    pub split: u64,
}

impl QuadratureCheck {
    pub fn discrepancy(&self) -> f64 {
        (self.closed - self.numeric).abs()
    }
}

/// Integrates `τ^{1−α} V(τ)²` on `[0, T]` unit interval by unit interval
/// and adds the tail beyond the integer `T` in closed form.
///
/// Two integrations by parts give
/// `∫_T^∞ = T^{−α}/(2π²α) − (1+α) T^{−2−α}/(8π⁴) ± (1+α) T^{−2−α}/(8π⁴)`.
pub fn quadrature_check(alpha: f64, tol: f64) -> Result<QuadratureCheck> {
    let closed = v_moment_closed(alpha)?;
    if !(tol > 0.0) {
        return Err(Error::Precondition(format!("tolerance {tol} must be positive")));
    }
    let pi4 = PI.powi(4);
    let remainder = |t: f64| (1.0 + alpha) * t.powf(-2.0 - alpha) / (8.0 * pi4);
    let mut split = 16u64;
    while remainder(split as f64) > 0.1 * tol && split < 1 << 20 {
        split *= 2;
    }
    let integrand = |t: f64| {
        if t == 0.0 {
            return 0.0;
        }
        let v = (PI * t).sin() / (PI * t);
        t.powf(1.0 - alpha) * v * v
    };
    let per_interval = 0.5 * tol / split as f64;
    let mut numeric = 0.0;
    let mut err = 0.0;
    for k in 0..split {
        let (v, e) = quadrature::integrate(&integrand, k as f64, (k + 1) as f64, per_interval);
        numeric += v;
        err += e;
    }
    let t = split as f64;
    numeric += t.powf(-alpha) / (2.0 * PI * PI * alpha) - remainder(t);
    Ok(QuadratureCheck { closed, numeric, numeric_error: err + remainder(t), split })
}
