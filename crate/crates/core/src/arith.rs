//! Small integer and floating-point helpers shared by every module.

use std::sync::{Mutex, OnceLock};

pub use num_integer::{gcd, lcm};

/// All primes `p ≤ n`, by a plain byte sieve of Eratosthenes.
pub fn primes_upto(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::with_capacity(estimate_pi(n as u64));
    let mut i = 2;
    while i <= n {
        if !composite[i] {
            primes.push(i as u64);
            if let Some(start) = i.checked_mul(i) {
                let mut j = start;
                while j <= n {
                    composite[j] = true;
                    j += i;
                }
            }
        }
        i += 1;
    }
    primes
}

fn estimate_pi(n: u64) -> usize {
    if n < 17 {
        return 8;
    }
    let x = n as f64;
    (1.26 * x / x.ln()) as usize
}

/// Primes up to `n`, served from a process-wide cache that only grows.
pub fn cached_primes(n: u64) -> std::sync::Arc<Vec<u64>> {
    static CACHE: OnceLock<Mutex<std::sync::Arc<Vec<u64>>>> = OnceLock::new();
    let cell = CACHE.get_or_init(|| Mutex::new(std::sync::Arc::new(primes_upto(1 << 16))));
    let mut guard = cell.lock().expect("prime cache poisoned");
    let covered = guard.last().copied().unwrap_or(0);
    if covered < n && !covers(&guard, n) {
        let bound = n.max(2 * covered);
        *guard = std::sync::Arc::new(primes_upto(bound));
    }
    guard.clone()
}

fn covers(primes: &[u64], n: u64) -> bool {
    // The cache was sieved up to at least the last prime; a request between
    // the last prime and the next one is still fully served.
    primes.last().is_some_and(|&p| n <= p)
}

/// Primes `p ≤ n` as a fresh slice view over the cache.
pub fn primes_slice(n: u64) -> (std::sync::Arc<Vec<u64>>, usize) {
    let all = cached_primes(n);
    let end = all.partition_point(|&p| p <= n);
    (all, end)
}

/// `⌊n^(1/m)⌋` computed exactly.
pub fn iroot(n: u64, m: u32) -> u64 {
    if m == 1 || n < 2 {
        return n;
    }
    let mut r = (n as f64).powf(1.0 / m as f64).round() as u64;
    while r > 0 && checked_pow(r, m).is_none_or(|v| v > n) {
        r -= 1;
    }
    while checked_pow(r + 1, m).is_some_and(|v| v <= n) {
        r += 1;
    }
    r
}

pub fn checked_pow(base: u64, exp: u32) -> Option<u64> {
    base.checked_pow(exp)
}

/// Neumaier compensated summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &KahanSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = KahanSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Fixed-order pairwise summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 64;
    if xs.len() <= BLOCK {
        return xs.iter().copied().collect::<KahanSum>().value();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Distance from `t` to the nearest integer.
#[inline]
pub fn dist_to_int(t: f64) -> f64 {
    (t - t.round()).abs()
}
