//! Histogram-first statistics of window counts `N(n, H)` over `n ≤ X`.
//!
//! One sliding pass builds an exact integer histogram of window values;
//! moments, absolute moments, gap counts and the KS distance are all read
//! off that histogram.

mod scan;
mod step;

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Signed, ToPrimitive, Zero};

pub use scan::{scan_windows, Window, CHUNK, MAX_WINDOW};
pub use step::{DiscreteWeights, StepFunction, StepPiece};

use crate::arith::KahanSum;
use crate::bset::SievingSet;
use crate::constants;
use crate::{Error, Result};

/// Cutoff used for the density entering default centres.
const CENTER_CUTOFF: u64 = 1_000_000;
/// Largest span of integer values a weighted histogram may hold.
const MAX_VALUE_SPAN: u64 = 100_000_000;

/// `counts[j]` is the number of `n ∈ [1, X]` whose window `(n, n+H]` holds
/// exactly `j` B-free integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowHistogram {
    pub x: u64,
    pub h: u64,
    pub counts: Vec<u64>,
    pub set: String,
}

impl WindowHistogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Exact sample mean of the window values.
    pub fn mean(&self) -> BigRational {
        let s: BigInt = self
            .counts
            .iter()
            .enumerate()
            .map(|(j, &c)| BigInt::from(j) * c)
            .sum();
        BigRational::new(s, BigInt::from(self.x))
    }

    fn values(&self) -> impl Iterator<Item = (i64, u64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c > 0)
            .map(|(j, &c)| (j as i64, c))
    }
}

fn check_range(x: u64, h: u64) -> Result<()> {
    if h == 0 || h > x {
        return Err(Error::Precondition(format!("need 1 <= H <= X, got H = {h}, X = {x}")));
    }
    Ok(())
}

/// Histogram of `N(n, H)` for `n ∈ [1, X]`.
pub fn window_histogram(set: &SievingSet, x: u64, h: u64) -> Result<WindowHistogram> {
    Ok(window_histograms(set, x, &[h])?.remove(0))
}

/// Histograms for several window lengths from a single sieve pass.
pub fn window_histograms(set: &SievingSet, x: u64, hs: &[u64]) -> Result<Vec<WindowHistogram>> {
    for &h in hs {
        check_range(x, h)?;
    }
    let windows: Vec<Window> = hs.iter().map(|&h| Window::upto(h)).collect();
    let init = || hs.iter().map(|&h| vec![0u64; h as usize + 1]).collect::<Vec<_>>();
    let hists = scan_windows(
        set,
        x,
        &windows,
        init,
        |acc, _, counts| {
            for (hist, &c) in acc.iter_mut().zip(counts) {
                hist[c as usize] += 1;
            }
        },
        |acc, part| {
            for (a, p) in acc.iter_mut().zip(part) {
                for (x, y) in a.iter_mut().zip(p) {
                    *x += y;
                }
            }
        },
    )?;
    let label = set.label();
    Ok(hs
        .iter()
        .zip(hists)
        .map(|(&h, counts)| WindowHistogram { x, h, counts, set: label.clone() })
        .collect())
}

/// The centre subtracted before taking moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Center {
    pub value: f64,
    pub abs_error: f64,
    pub provenance: String,
}

impl Center {
    pub fn exact(value: f64) -> Self {
        Self { value, abs_error: 0.0, provenance: "supplied".into() }
    }

    /// `𝓜_B · mass`, with the density taken from its Euler product.
    pub fn density_times(set: &SievingSet, mass: Rational64) -> Result<Self> {
        let d = constants::density(set, CENTER_CUTOFF)?;
        let m = *mass.numer() as f64 / *mass.denom() as f64;
        Ok(Self {
            value: d.value * m,
            abs_error: d.abs_error * m.abs() + f64::EPSILON * (d.value * m).abs(),
            provenance: format!("density({}) x {mass}; {}", set.label(), d.truncation),
        })
    }

    /// `𝓜_B · H`.
    pub fn density_window(set: &SievingSet, h: u64) -> Result<Self> {
        Self::density_times(set, Rational64::from_integer(h as i64))
    }
}

/// One centred moment.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentEntry {
    pub k: u32,
    pub value: f64,
    /// Bound on the change of the moment caused by the centre's error.
    pub center_sensitivity: f64,
}

/// Centred moments `M_k = (1/X) Σ_n (value(n) − centre)^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    pub x: u64,
    pub h: u64,
    pub center: Center,
    pub moments: Vec<MomentEntry>,
}

impl MomentReport {
    pub fn get(&self, k: u32) -> Option<f64> {
        self.moments.iter().find(|m| m.k == k).map(|m| m.value)
    }
}

fn rational(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::Precondition(format!("non-finite value {x}")))
}

/// Exact power sums `Σ c · v^i` for `i = 0..=kmax`.
fn power_sums(values: impl Iterator<Item = (i64, u64)>, kmax: u32) -> Vec<BigInt> {
    let mut sums = vec![BigInt::zero(); kmax as usize + 1];
    for (v, c) in values {
        let v = BigInt::from(v);
        let mut term = BigInt::from(c);
        for s in sums.iter_mut() {
            *s += &term;
            term *= &v;
        }
    }
    sums
}

/// `Σ c (v − center)^k` as an exact rational, via the binomial expansion of
/// the power sums.
fn centred_sum(sums: &[BigInt], center: &BigRational, k: u32) -> BigRational {
    let neg = -center.clone();
    let mut total = BigRational::zero();
    let mut binom = BigInt::one();
    let mut cpow = vec![BigRational::one()];
    for i in 1..=k as usize {
        let next = &cpow[i - 1] * &neg;
        cpow.push(next);
    }
    for i in 0..=k as usize {
        let coef = BigRational::from_integer(binom.clone() * &sums[i]);
        total += coef * &cpow[k as usize - i];
        binom = binom * (k as usize - i) / (i + 1);
    }
    total
}

fn moments_from_values(
    values: impl Iterator<Item = (i64, u64)>,
    x: u64,
    h: u64,
    scale: i64,
    center: Center,
    span: f64,
    ks: &[u32],
) -> Result<MomentReport> {
    let kmax = ks.iter().copied().max().unwrap_or(0);
    let sums = power_sums(values, kmax);
    let q = BigRational::from_integer(BigInt::from(scale));
    let c = rational(center.value)? * &q;
    let xr = BigRational::from_integer(BigInt::from(x));
    let mut moments = Vec::with_capacity(ks.len());
    for &k in ks {
        let exact = centred_sum(&sums, &c, k) / (&xr * num_traits::pow(q.clone(), k as usize));
        let value = exact.to_f64().unwrap_or(f64::NAN);
        let center_sensitivity = if k == 0 {
            0.0
        } else {
            k as f64 * span.powi(k as i32 - 1) * center.abs_error
        };
        moments.push(MomentEntry { k, value, center_sensitivity });
    }
    Ok(MomentReport { x, h, center, moments })
}

/// Centred moments of a window histogram.
pub fn empirical_moments(hist: &WindowHistogram, center: Center, ks: &[u32]) -> Result<MomentReport> {
    if !(0.0..=hist.h as f64).contains(&center.value) {
        return Err(Error::Precondition(format!(
            "centre {} outside [0, {}]",
            center.value, hist.h
        )));
    }
    let span = hist.h as f64;
    moments_from_values(hist.values(), hist.x, hist.h, 1, center, span, ks)
}

/// Histogram of the integer numerators `Σ w_j · count_j` of a weighted sum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedHistogram {
    pub x: u64,
    pub h: u64,
    pub min_value: i64,
    pub counts: Vec<u64>,
    pub weights: DiscreteWeights,
}

impl WeightedHistogram {
    fn values(&self) -> impl Iterator<Item = (i64, u64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c > 0)
            .map(|(i, &c)| (self.min_value + i as i64, c))
    }
}

/// Exact histogram of `Σ_u φ((u−n)/H) 1_{B-free}(u)` over `n ∈ [1, X]`.
pub fn weighted_histogram(
    set: &SievingSet,
    x: u64,
    h: u64,
    phi: &StepFunction,
) -> Result<WeightedHistogram> {
    if h == 0 {
        return Err(Error::Precondition("H must be at least 1".into()));
    }
    let weights = phi.discretize(h)?;
    let (mut lo, mut hi) = (0i64, 0i64);
    for (w, &k) in weights.windows.iter().zip(&weights.weights) {
        let reach = k * (w.hi - w.lo) as i64;
        if k < 0 {
            lo += reach;
        } else {
            hi += reach;
        }
    }
    let span = (hi - lo) as u64 + 1;
    if span > MAX_VALUE_SPAN {
        return Err(Error::CostGuard(format!("weighted value span {span} too large")));
    }
    let counts = if weights.windows.is_empty() {
        let mut c = vec![0u64; span as usize];
        c[(-lo) as usize] = x;
        c
    } else {
        let ws = &weights.weights;
        scan_windows(
            set,
            x,
            &weights.windows,
            || vec![0u64; span as usize],
            |acc, _, counts| {
                let v: i64 = counts.iter().zip(ws).map(|(&c, &k)| c as i64 * k).sum();
                acc[(v - lo) as usize] += 1;
            },
            |acc, part| {
                for (a, p) in acc.iter_mut().zip(part) {
                    *a += p;
                }
            },
        )?
    };
    Ok(WeightedHistogram { x, h, min_value: lo, counts, weights })
}

/// `M_k(X, H; φ)` centred at `𝓜_B · Σ_h φ(h/H)`.
pub fn weighted_moments(
    set: &SievingSet,
    x: u64,
    h: u64,
    phi: &StepFunction,
    ks: &[u32],
) -> Result<MomentReport> {
    let hist = weighted_histogram(set, x, h, phi)?;
    let center = Center::density_times(set, phi.lattice_mass(h)?)?;
    weighted_moments_from(&hist, center, ks)
}

/// Moments of a precomputed weighted histogram about a given centre.
pub fn weighted_moments_from(
    hist: &WeightedHistogram,
    center: Center,
    ks: &[u32],
) -> Result<MomentReport> {
    let q = hist.weights.denominator;
    let span = (hist.counts.len() - 1) as f64 / q as f64;
    moments_from_values(hist.values(), hist.x, hist.h, q, center, span, ks)
}

/// `(1/X) Σ_n |N(n,H) − centre|^λ`.
pub fn absolute_moment(hist: &WindowHistogram, center: f64, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Precondition(format!("lambda = {lambda} must be positive")));
    }
    let sum: KahanSum = hist
        .values()
        .map(|(j, c)| c as f64 * (j as f64 - center).abs().powf(lambda))
        .collect();
    Ok(sum.value() / hist.x as f64)
}

/// Number of `n ≤ X` whose window holds no B-free integer.
pub fn gap_count(hist: &WindowHistogram) -> u64 {
    hist.counts[0]
}

/// Exact check of `counts[0]/X ≤ M_{2k} / centre^{2k}`.
pub fn gap_moment_inequality(hist: &WindowHistogram, center: f64, k: u32) -> Result<bool> {
    let c = rational(center)?;
    if c.is_zero() {
        return Err(Error::Degenerate("centre is zero".into()));
    }
    let sums = power_sums(hist.values(), 2 * k);
    let rhs = centred_sum(&sums, &c, 2 * k);
    let lhs = BigRational::from_integer(BigInt::from(gap_count(hist)))
        * num_traits::pow(c.abs(), 2 * k as usize);
    Ok(lhs <= rhs)
}

/// Standard normal distribution function.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Empirical distribution of `(N(n,H) − centre)/scale` against `Φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CltSample {
    /// Atoms `z_j` with the empirical CDF `F(z_j)`.
    pub cdf: Vec<(f64, f64)>,
    /// `sup_z |F(z) − Φ(z)|`, attained at an atom or just below one.
    pub ks: f64,
    /// `max_j |F(z_j) − Φ(z_j + 1/(2·scale))|`: the lattice-corrected distance.
    pub ks_midpoint: f64,
}

/// Normalised window counts and their Kolmogorov–Smirnov distance to `Φ`.
pub fn clt_sample(hist: &WindowHistogram, center: f64, scale: f64) -> Result<CltSample> {
    if !(scale > 0.0) {
        return Err(Error::Precondition(format!("scale = {scale} must be positive")));
    }
    let x = hist.x as f64;
    let half = 0.5 / scale;
    let mut below = 0u64;
    let mut cdf = Vec::new();
    let mut ks = 0f64;
    let mut ks_midpoint = 0f64;
    for (j, c) in hist.values() {
        let z = (j as f64 - center) / scale;
        let phi = normal_cdf(z);
        let left = below as f64 / x;
        below += c;
        let right = below as f64 / x;
        ks = ks.max((right - phi).abs()).max((phi - left).abs());
        ks_midpoint = ks_midpoint.max((right - normal_cdf(z + half)).abs());
        cdf.push((z, right));
    }
    Ok(CltSample { cdf, ks, ks_midpoint })
}
