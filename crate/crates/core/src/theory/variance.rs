//! The limiting variance `C₂(H)` and its weighted form `C₂(H; φ)`.

use std::collections::HashMap;

use crate::arith::{gcd, iroot, KahanSum};
use crate::bset::{count_semigroup, for_each_product, SetKind, SievingSet};
use crate::constants::{euler_product, LocalFactor};
use crate::stats::StepFunction;
use crate::{Approximation, Error, Result, Rigor};

use super::kernels::PhiKernel;

/// Most elements of `[B]` a variance sum may visit.
pub const MAX_TERMS: u64 = 50_000_000;
/// Most elements of `[B]` entering the pairwise weighted sum.
pub const MAX_PAIR_ELEMENTS: usize = 20_000;
const PRODUCT_CUTOFF: u64 = 1_000_000;

/// `∏_{b ∈ B, b ≠ 2} (1 − 2/b)` with its absolute error. A generator equal
/// to 2 contributes a zero factor and is handled separately.
fn nonzero_factor_product(set: &SievingSet) -> Result<(f64, f64)> {
    match set.kind() {
        SetKind::Custom => Ok((
            set.custom_elements()
                .iter()
                .filter(|&&b| b != 2)
                .map(|&b| 1.0 - 2.0 / b as f64)
                .product(),
            0.0,
        )),
        SetKind::PowerFree(_) => {
            let a = euler_product(set, &LocalFactor::new([(-2.0, 1.0)])?, PRODUCT_CUTOFF)?;
            Ok((a.value, a.abs_error))
        }
    }
}

/// Rigorous bound on `Σ_{d ∈ [B], d > limit} 1/d`, or `None` when the bound
/// needs the partial sum up to `limit` (custom sets).
fn reciprocal_tail_bound(set: &SievingSet, limit: u64) -> Option<f64> {
    let m = set.power()?;
    // [B] ⊂ { n^m }, so the tail is at most Σ_{n > N} n^{-m} ≤ N^{1-m}/(m−1).
    let n = iroot(limit, m).max(1) as f64;
    Some(n.powf(1.0 - m as f64) / (m as f64 - 1.0))
}

/// Product of every custom generator, when it fits in a `u64`.
fn full_product(set: &SievingSet) -> Option<u64> {
    if set.power().is_some() {
        return None;
    }
    set.custom_elements().iter().try_fold(1u64, |p, &b| p.checked_mul(b))
}

/// Exact variance constant
/// `C₂(H) = Σ_{d ∈ [B]} ∏_{b ∤ d}(1 − 2/b) · s(d − s)/d²`, `s = H mod d`.
///
/// This is the sinc-series form with its inner sum done in closed form:
/// `2H²/d² Σ_{λ≥1} V(Hλ/d)² = {H/d}(1 − {H/d})`. Every term is nonnegative
/// and at most `H/d`, so truncating at `d ≤ D` leaves a one-sided tail in
/// `[0, H Σ_{d>D} 1/d]`. `D` grows until half that width is below `eps`.
pub fn c2_exact(set: &SievingSet, h: u64, eps: f64) -> Result<Approximation> {
    if h == 0 {
        return Err(Error::Precondition("H must be at least 1".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::Precondition(format!("target error {eps} must be positive")));
    }
    let hf = h as f64;

    // Choose the truncation point.
    let (limit, tail) = if let Some(all) = full_product(set) {
        (all, 0.0)
    } else {
        let mut limit = h.max(16).saturating_mul(h.max(16));
        loop {
            let tail = match reciprocal_tail_bound(set, limit) {
                Some(t) => hf * t,
                None => hf * custom_reciprocal_tail(set, limit),
            };
            if tail / 2.0 < eps {
                break (limit, tail);
            }
            let count_guess = match set.power() {
                Some(m) => iroot(limit, m),
                None => count_semigroup(set, limit, true),
            };
            let next = limit.checked_mul(16).filter(|_| count_guess < MAX_TERMS);
            match next {
                Some(n) => limit = n,
                None => {
                    return Err(Error::CostGuard(format!(
                        "C2 tail {tail:.3e} still above 2*eps at d <= {limit}"
                    )))
                }
            }
        }
    };

    let (base, base_err) = nonzero_factor_product(set)?;
    let has_two = set.power().is_none() && set.custom_elements().first() == Some(&2);
    let mut sum = KahanSum::new();
    let mut abs_sum = 0.0;
    let mut terms = 0u64;
    for_each_product(
        set,
        limit,
        true,
        (1.0f64, false),
        &|(p, two), b, _| if b == 2 { (p, true) } else { (p * (1.0 - 2.0 / b as f64), two) },
        &mut |d, (p, two)| {
            terms += 1;
            if d == 1 || (has_two && !two) {
                return;
            }
            let s = (h % d) as f64;
            let df = d as f64;
            let t = base / p * (s / df) * ((df - s) / df);
            sum.add(t);
            abs_sum += t.abs();
        },
    );
    let s = sum.value();
    let rounding = 8.0 * f64::EPSILON * abs_sum + if base != 0.0 { s.abs() * base_err / base } else { 0.0 };
    Ok(Approximation {
        value: s + tail / 2.0,
        abs_error: tail / 2.0 + rounding,
        rigor: Rigor::Rigorous,
        truncation: format!("d <= {limit} over [B] ({terms} terms); tail <= H * sum_(d>D) 1/d"),
        notes: Vec::new(),
    })
}

/// `Σ_{d ∈ [B], d > limit} 1/d = ∏(1 + 1/b) − Σ_{d ≤ limit} 1/d`.
fn custom_reciprocal_tail(set: &SievingSet, limit: u64) -> f64 {
    let total: f64 = set.custom_elements().iter().map(|&b| 1.0 + 1.0 / b as f64).product();
    let mut partial = KahanSum::new();
    for_each_product(set, limit, true, (), &|_, _, _| (), &mut |d, _| partial.add(1.0 / d as f64));
    (total - partial.value()).max(0.0) + 4.0 * f64::EPSILON * total
}

/// `S(g) = Σ_{λ=1}^{g−1} |Φ_H(λ/g)|²`, exactly, from the integer
/// coefficients `K_m = Q φ(m/H)`: by Plancherel on `ℤ/gℤ`,
/// `Q² S(g) = g Σ_r (Σ_{m ≡ r} K_m)² − (Σ_m K_m)²`.
fn plancherel_sum(coeffs: &[i64], g: u64) -> i128 {
    let total: i128 = coeffs.iter().map(|&k| k as i128).sum();
    let squares: i128 = if g as usize >= coeffs.len() {
        coeffs.iter().map(|&k| (k as i128) * (k as i128)).sum()
    } else {
        let mut classes = vec![0i128; g as usize];
        for (m, &k) in coeffs.iter().enumerate() {
            classes[(m + 1) % g as usize] += k as i128;
        }
        classes.iter().map(|c| c * c).sum()
    };
    g as i128 * squares - total * total
}

/// `C₂(H; φ) = Σ_{d₁, d₂ ∈ [B]} μ_B(d₁)μ_B(d₂)/(d₁d₂) · S((d₁, d₂))`,
/// truncated at `d₁, d₂ ≤ D`.
///
/// The omitted tail is extrapolated from the sums at `D` and `D/4`
/// assuming it decays like `D^{α−1}`, which makes the error heuristic unless
/// the set is finite and entirely below `D`.
pub fn c2_weighted(set: &SievingSet, h: u64, phi: &StepFunction, dmax: u64) -> Result<Approximation> {
    if h == 0 {
        return Err(Error::Precondition("H must be at least 1".into()));
    }
    let kernel = PhiKernel::new(phi, h)?;
    let w = kernel.weights();
    let q = w.denominator;
    let mut coeffs = vec![0i64; kernel.reach() as usize];
    for (win, &k) in w.windows.iter().zip(&w.weights) {
        for c in &mut coeffs[win.lo as usize..win.hi as usize] {
            *c += k;
        }
    }

    let mut elems: Vec<(u64, f64)> = Vec::new();
    for_each_product(set, dmax, true, 1.0f64, &|s, _, _| -s, &mut |d, s| {
        if d > 1 {
            elems.push((d, s));
        }
    });
    elems.sort_by_key(|e| e.0);
    if elems.len() > MAX_PAIR_ELEMENTS {
        return Err(Error::CostGuard(format!(
            "{} elements of [B] below {dmax}; at most {MAX_PAIR_ELEMENTS} allowed",
            elems.len()
        )));
    }

    let q2 = (q as f64) * (q as f64);
    let mut cache: HashMap<u64, f64> = HashMap::new();
    let mut s_of = |g: u64| *cache.entry(g).or_insert_with(|| plancherel_sum(&coeffs, g) as f64 / q2);
    let quarter = dmax / 4;
    let mut full = KahanSum::new();
    let mut inner = KahanSum::new();
    for (i, &(d1, s1)) in elems.iter().enumerate() {
        for &(d2, s2) in &elems[i..] {
            let g = gcd(d1, d2);
            if g == 1 {
                continue;
            }
            let mult = if d1 == d2 { 1.0 } else { 2.0 };
            let t = mult * s1 * s2 / (d1 as f64 * d2 as f64) * s_of(g);
            full.add(t);
            if d2 <= quarter {
                inner.add(t);
            }
        }
    }
    let value = full.value();
    let complete = full_product(set).is_some_and(|p| p <= dmax);
    if complete {
        return Ok(Approximation {
            value,
            abs_error: 16.0 * f64::EPSILON * value.abs(),
            rigor: Rigor::Rigorous,
            truncation: format!("all of [B] (d <= {dmax})"),
            notes: Vec::new(),
        });
    }
    let alpha = set.natural_index().unwrap_or(0.0);
    let rho = 4f64.powf(alpha - 1.0);
    let tail = (value - inner.value()) * rho / (1.0 - rho);
    Ok(Approximation {
        value: value + tail,
        abs_error: tail.abs(),
        rigor: Rigor::Heuristic,
        truncation: format!(
            "d1, d2 <= {dmax} ({} elements); tail extrapolated with decay D^({alpha:.4}-1)",
            elems.len()
        ),
        notes: Vec::new(),
    })
}
