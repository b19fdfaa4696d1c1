//! Truncated Euler products over a sieving set with accelerated tails.

use super::zeta::{integer_tail_bound, prime_tail};
use super::{Approximation, Rigor};
use crate::arith::{iroot, primes_slice, KahanSum};
use crate::bset::{SetKind, SievingSet};
use crate::{Error, Result};

/// Local factor `f(b) = 1 + Σ c_i · b^{-e_i}` with every `e_i > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalFactor {
    terms: Vec<(f64, f64)>,
}

impl LocalFactor {
    /// Builds a factor from `(coefficient, exponent)` pairs.
    pub fn new(terms: impl Into<Vec<(f64, f64)>>) -> Result<Self> {
        let terms = terms.into();
        if terms.is_empty() || terms.iter().any(|&(c, e)| !c.is_finite() || !(e > 0.0)) {
            return Err(Error::Precondition(
                "local factor needs finite coefficients and positive exponents".into(),
            ));
        }
        Ok(Self { terms })
    }

    /// `f(b) − 1`.
    pub fn excess(&self, b: f64) -> f64 {
        self.terms.iter().map(|&(c, e)| c * b.powf(-e)).sum()
    }

    /// `f(b)`.
    pub fn eval(&self, b: f64) -> f64 {
        1.0 + self.excess(b)
    }

    fn min_exponent(&self) -> f64 {
        self.terms.iter().map(|t| t.1).fold(f64::INFINITY, f64::min)
    }

    fn coef_mass(&self) -> f64 {
        self.terms.iter().map(|t| t.0.abs()).sum()
    }
}

enum Accum {
    Log(KahanSum),
    Zero,
}

impl Accum {
    fn push(&mut self, y: f64) -> Result<()> {
        if let Accum::Log(sum) = self {
            if y == -1.0 {
                *self = Accum::Zero;
            } else if y < -1.0 {
                return Err(Error::Precondition(format!(
                    "local factor {} is negative",
                    1.0 + y
                )));
            } else {
                sum.add(y.ln_1p());
            }
        }
        Ok(())
    }
}

fn prime_bound(set: &SievingSet, cutoff: u64) -> u64 {
    iroot(cutoff, set.power().unwrap_or(1))
}

/// `∏_{b ∈ B, b ≤ cutoff} f(b)` with no tail correction.
pub fn partial_product(set: &SievingSet, factor: &LocalFactor, cutoff: u64) -> Result<f64> {
    let mut acc = Accum::Log(KahanSum::new());
    match set.kind() {
        SetKind::Custom => {
            for &b in set.custom_elements().iter().filter(|&&b| b <= cutoff) {
                acc.push(factor.excess(b as f64))?;
            }
        }
        SetKind::PowerFree(m) => {
            let (primes, end) = primes_slice(prime_bound(set, cutoff));
            let m = *m as f64;
            for &p in &primes[..end] {
                acc.push(factor.excess((p as f64).powf(m)))?;
            }
        }
    }
    Ok(match acc {
        Accum::Log(s) => s.value().exp(),
        Accum::Zero => 0.0,
    })
}

/// `∏_{b ∈ B} f(b)` as an [`Approximation`].
///
/// Custom sets are finite, so the product is exact up to rounding. For
/// `PowerFree(m)` the factors with `b ≤ cutoff` are multiplied out and the
/// remaining `log f(p^m)` for `p > cutoff^{1/m}` is summed through the
/// expansion `ln(1+y) = y − y²/2 + R`, where the first two orders are prime
/// sums evaluated by the prime zeta function and `|R| ≤ |y|³/(3(1−|y|))` is
/// bounded by the integral rule.
pub fn euler_product(set: &SievingSet, factor: &LocalFactor, cutoff: u64) -> Result<Approximation> {
    match set.kind() {
        SetKind::Custom => {
            let mut value = 1.0;
            for &b in set.custom_elements() {
                let f = factor.eval(b as f64);
                if f < 0.0 {
                    return Err(Error::Precondition(format!("local factor at b = {b} is negative")));
                }
                value *= f;
            }
            Ok(Approximation {
                value,
                abs_error: 0.0,
                rigor: Rigor::Rigorous,
                truncation: format!("exact over all {} elements", set.custom_elements().len()),
                notes: Vec::new(),
            })
        }
        SetKind::PowerFree(m) => {
            if cutoff < 100 {
                return Err(Error::Precondition(format!(
                    "cutoff {cutoff} below 100 for a power-free rule"
                )));
            }
            let m = *m as f64;
            let p_max = prime_bound(set, cutoff);
            let s_min = m * factor.min_exponent();
            if s_min <= 1.0 {
                return Err(Error::Precondition(format!(
                    "product does not converge absolutely: smallest prime exponent {s_min} ≤ 1"
                )));
            }
            let mass = factor.coef_mass();
            let y_max = mass * ((p_max + 1) as f64).powf(-s_min);
            if y_max >= 0.5 {
                return Err(Error::Precondition(format!(
                    "cutoff {cutoff} too small for the tail expansion"
                )));
            }

            let head = partial_product(set, factor, cutoff)?;
            if head == 0.0 {
                return Ok(Approximation {
                    value: 0.0,
                    abs_error: 0.0,
                    rigor: Rigor::Rigorous,
                    truncation: "a local factor vanishes".into(),
                    notes: Vec::new(),
                });
            }

            let mut tail = KahanSum::new();
            let mut tail_err = 0.0;
            for &(c, e) in &factor.terms {
                let (t, err) = prime_tail(m * e, p_max);
                tail.add(c * t);
                tail_err += c.abs() * err;
            }
            for &(ci, ei) in &factor.terms {
                for &(cj, ej) in &factor.terms {
                    let (t, err) = prime_tail(m * (ei + ej), p_max);
                    tail.add(-0.5 * ci * cj * t);
                    tail_err += 0.5 * (ci * cj).abs() * err;
                }
            }
            let cubic = mass.powi(3) / (3.0 * (1.0 - y_max)) * integer_tail_bound(3.0 * s_min, p_max);
            tail_err += cubic;

            let value = head * tail.value().exp();
            let abs_error = value * tail_err.exp_m1() + 16.0 * f64::EPSILON * value;
            Ok(Approximation {
                value,
                abs_error,
                rigor: Rigor::Rigorous,
                truncation: format!(
                    "b <= {cutoff} (p <= {p_max}); prime-sum tail to second order, cubic remainder <= {cubic:.3e}"
                ),
                notes: Vec::new(),
            })
        }
    }
}
