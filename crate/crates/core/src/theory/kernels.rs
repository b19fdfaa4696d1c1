//! Exponential-sum kernels `E_H`, `F_H`, `Φ_H` and the periodic `ψ_H`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::arith::dist_to_int;
use crate::stats::{DiscreteWeights, StepFunction};
use crate::Result;

/// Below this distance to an integer `E_H` switches to its series form.
const SERIES_THRESHOLD: f64 = 1e-9;

/// `e(x) = exp(2πix)`.
pub fn e(x: f64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * x)
}

/// `sin(πx)/(πx)` with `V(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    let y = PI * x;
    if y.abs() < 1e-4 {
        1.0 - y * y / 6.0 + y.powi(4) / 120.0
    } else {
        y.sin() / y
    }
}

/// `E_H(t) = Σ_{n=1}^{H} e(nt)`.
///
/// Evaluated as `e((H+1)u/2) · H · V(Hu)/V(u)` with `u` the signed distance
/// from `t` to the nearest integer; for `|u| < 10⁻⁹` the ratio is expanded
/// to second order in `u`.
pub fn e_kernel(h: u64, t: f64) -> Complex64 {
    if h == 0 {
        return Complex64::new(0.0, 0.0);
    }
    let u = t - t.round();
    if u == 0.0 {
        return Complex64::new(h as f64, 0.0);
    }
    let hf = h as f64;
    let ratio = if u.abs() < SERIES_THRESHOLD {
        // sin(πHu)/sin(πu) = H V(Hu) / V(u), V(u) = 1 − (πu)²/6 + …
        hf * sinc(hf * u) * (1.0 + (PI * u).powi(2) / 6.0)
    } else {
        (PI * hf * u).sin() / (PI * u).sin()
    };
    e((hf + 1.0) * u / 2.0) * ratio
}

/// `F_H(t) = min(H, 1/‖t‖)`, with `F_H(0) = H`.
pub fn f_kernel(h: u64, t: f64) -> f64 {
    let d = dist_to_int(t);
    if d == 0.0 {
        h as f64
    } else {
        (h as f64).min(1.0 / d)
    }
}

/// `Φ_H(t) = Σ_m φ(m/H) e(mt)` for a step function, stored as integer
/// windows so each evaluation is a weighted difference of `E` values.
#[derive(Debug, Clone)]
pub struct PhiKernel {
    h: u64,
    weights: DiscreteWeights,
}

impl PhiKernel {
    pub fn new(phi: &StepFunction, h: u64) -> Result<Self> {
        Ok(Self { h, weights: phi.discretize(h)? })
    }

    pub fn h(&self) -> u64 {
        self.h
    }

    pub fn weights(&self) -> &DiscreteWeights {
        &self.weights
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        let q = self.weights.denominator as f64;
        self.weights
            .windows
            .iter()
            .zip(&self.weights.weights)
            .map(|(w, &k)| (e_kernel(w.hi, t) - e_kernel(w.lo, t)) * (k as f64 / q))
            .sum()
    }

    /// `φ(m/H)` at an integer `m`.
    pub fn coefficient(&self, m: i64) -> f64 {
        let q = self.weights.denominator as f64;
        self.weights
            .windows
            .iter()
            .zip(&self.weights.weights)
            .filter(|(w, _)| (w.lo as i64) < m && m <= w.hi as i64)
            .map(|(_, &k)| k as f64 / q)
            .sum()
    }

    /// Largest `m` with a possibly nonzero coefficient.
    pub fn reach(&self) -> u64 {
        self.weights.windows.iter().map(|w| w.hi).max().unwrap_or(0)
    }
}

/// `Φ_H(t)` for a step function.
pub fn phi_kernel(phi: &StepFunction, h: u64, t: f64) -> Result<Complex64> {
    Ok(PhiKernel::new(phi, h)?.eval(t))
}

/// `ψ_H(n, d) = Σ_m φ(m/H) (1_{m ≡ −n (d)} − 1/d)` summed directly.
pub fn psi_direct(kernel: &PhiKernel, n: i64, d: u64) -> f64 {
    let d = d as i64;
    (1..=kernel.reach() as i64)
        .map(|m| {
            let hit = if (m + n).rem_euclid(d) == 0 { 1.0 } else { 0.0 };
            kernel.coefficient(m) * (hit - 1.0 / d as f64)
        })
        .sum()
}

/// `ψ_H(n, d)` through its finite Fourier expansion in `n`.
pub fn psi_fourier(kernel: &PhiKernel, n: i64, d: u64) -> f64 {
    let s: Complex64 = (1..d)
        .map(|l| {
            let t = l as f64 / d as f64;
            let phase = ((n * l as i64).rem_euclid(d as i64)) as f64 / d as f64;
            kernel.eval(t) * e(phase)
        })
        .sum();
    s.re / d as f64
}
