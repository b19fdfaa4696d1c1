//! `ζ(s)` for real `s > 1` by Euler–Maclaurin summation, and prime sums
//! `Σ_{p>P} p^{-s}` through the prime zeta function.

use crate::arith::{primes_slice, KahanSum};

/// `B_2, B_4, …, B_28`.
const BERNOULLI_EVEN: [f64; 14] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
    8553103.0 / 6.0,
    -23749461029.0 / 870.0,
];

const EM_CUT: u32 = 16;
const EM_TERMS: usize = 12;

/// `ζ(s) − 1` with an error bound, for real `s > 1`.
///
/// Direct sum over `2 ≤ n < N`, then the Euler–Maclaurin tail with
/// `EM_TERMS` Bernoulli corrections; the remainder is bounded by the first
/// omitted correction (valid for real `s`).
pub fn zeta_minus_one(s: f64) -> (f64, f64) {
    assert!(s > 1.0, "zeta evaluated at s = {s} ≤ 1");
    let n = EM_CUT as f64;
    let mut sum = KahanSum::new();
    for k in (2..EM_CUT).rev() {
        sum.add((k as f64).powf(-s));
    }
    sum.add(n.powf(1.0 - s) / (s - 1.0));
    sum.add(0.5 * n.powf(-s));
    // rising = s (s+1) ⋯ (s+2k-2), fact = (2k)!
    let mut rising = s;
    let mut fact = 2.0;
    let mut npow = n.powf(-s - 1.0);
    let mut last = 0.0;
    for (k, &b) in BERNOULLI_EVEN.iter().enumerate().take(EM_TERMS + 1) {
        let term = b / fact * rising * npow;
        if k == EM_TERMS {
            last = term.abs();
            break;
        }
        sum.add(term);
        let j = 2.0 * (k as f64 + 1.0);
        rising *= (s + j - 1.0) * (s + j);
        fact *= (j + 1.0) * (j + 2.0);
        npow /= n * n;
    }
    let value = sum.value();
    (value, last + 4.0 * f64::EPSILON * value.abs())
}

/// `ζ(s)` for real `s > 1`.
pub fn zeta(s: f64) -> f64 {
    1.0 + zeta_minus_one(s).0
}

/// `ζ(s)` with its error bound.
pub fn zeta_with_error(s: f64) -> (f64, f64) {
    let (v, e) = zeta_minus_one(s);
    (1.0 + v, e + f64::EPSILON)
}

fn mobius_small(n: u32) -> i32 {
    let mut n = n;
    let mut sign = 1;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            n /= p;
            if n.is_multiple_of(p) {
                return 0;
            }
            sign = -sign;
        }
        p += 1;
    }
    if n > 1 {
        sign = -sign;
    }
    sign
}

/// Prime zeta `P(s) = Σ_p p^{-s} = Σ_n μ(n)/n · ln ζ(ns)` for `s > 1`,
/// with an error bound.
pub fn prime_zeta(s: f64) -> (f64, f64) {
    assert!(s > 1.0, "prime zeta evaluated at s = {s} ≤ 1");
    let mut sum = KahanSum::new();
    let mut err = 0.0;
    let mut n = 1u32;
    loop {
        let x = n as f64 * s;
        // ln ζ(x) ≤ ζ(x) − 1 ≤ 2^{-x} (1 + 2/(x−1)).
        let envelope = 2f64.powf(-x) * (1.0 + 2.0 / (x - 1.0));
        if n > 1 && envelope < 1e-20 {
            // Remaining terms form a geometric series in 2^{-s}.
            err += envelope / (1.0 - 2f64.powf(-s));
            break;
        }
        let mu = mobius_small(n);
        if mu != 0 {
            let (zm1, e) = zeta_minus_one(x);
            sum.add(mu as f64 / n as f64 * zm1.ln_1p());
            err += e / n as f64;
        }
        n += 1;
    }
    (sum.value(), err + 4.0 * f64::EPSILON * sum.value().abs())
}

/// Crude bound `Σ_{n>P} n^{-s} ≤ P^{1-s}/(s−1)`.
pub fn integer_tail_bound(s: f64, p: u64) -> f64 {
    (p as f64).powf(1.0 - s) / (s - 1.0)
}

/// `Σ_{p > bound} p^{-s}` for `s > 1`, as `(value, abs_error)`.
///
/// Computed as `P(s) − Σ_{p ≤ bound} p^{-s}` and clamped into the
/// rigorous envelope `[0, bound^{1-s}/(s−1)]`.
pub fn prime_tail(s: f64, bound: u64) -> (f64, f64) {
    let crude = integer_tail_bound(s, bound.max(1));
    if crude < 1e-30 {
        return (0.5 * crude, 0.5 * crude);
    }
    let (pz, pz_err) = prime_zeta(s);
    let (primes, end) = primes_slice(bound);
    let mut partial = KahanSum::new();
    // Largest primes first keeps the compensated sum well conditioned.
    for &p in primes[..end].iter().rev() {
        partial.add((p as f64).powf(-s));
    }
    let partial = partial.value();
    let raw = pz - partial;
    let numeric = pz_err + 8.0 * f64::EPSILON * pz.abs();
    let value = raw.clamp(0.0, crude);
    let err = (numeric + (value - raw).abs()).min(crude);
    (value, err)
}
