//! The interpolated `B`-free walk and its fractional Brownian limit.
//!
//! For a start `n`, `Q(τ) = Σ_{k ≤ ⌊τ⌋} ξ_k + {τ} ξ_{⌊τ⌋+1}` with
//! `ξ_k = 1_{B-free}(n + k) − 𝓜_B`, and the path `W(t) = Q(tH)/√(A_α N_⟨B⟩(H))`.

mod reference;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use reference::{fbm_covariance, fbm_reference, FbmSampler};

use crate::arith::KahanSum;
use crate::bset::{bfree_segment, count_semigroup, SievingSet};
use crate::constants::{a_alpha, density};
use crate::stats::{scan_windows, Window};
use crate::{Approximation, Error, Result, Rigor};

const CONSTANT_CUTOFF: u64 = 1_000_000;
/// Most paths a stored ensemble may hold.
pub const MAX_STORED_PATHS: u64 = 10_000_000;

/// `Q(τ)` for one starting point.
#[derive(Debug, Clone)]
pub struct Walk {
    n: u64,
    density: f64,
    /// `prefix[k]` counts B-free integers in `(n, n + k]`.
    prefix: Vec<u32>,
}

impl Walk {
    /// Sieves `(n, n + h + 1]` so that `Q` is available on `[0, h]`.
    pub fn new(set: &SievingSet, n: u64, h: u64) -> Result<Self> {
        let density = density(set, CONSTANT_CUTOFF)?.value;
        Self::with_density(set, n, h, density)
    }

    fn with_density(set: &SievingSet, n: u64, h: u64, density: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Precondition("walk start must be at least 1".into()));
        }
        let seg = bfree_segment(set, n + 1, h + 1)?;
        let mut prefix = Vec::with_capacity(h as usize + 2);
        prefix.push(0u32);
        let mut c = 0u32;
        for i in 0..=h {
            c += seg.bit(i) as u32;
            prefix.push(c);
        }
        Ok(Self { n, density, prefix })
    }

    pub fn start(&self) -> u64 {
        self.n
    }

    /// Largest argument accepted by [`Walk::q`].
    pub fn span(&self) -> f64 {
        (self.prefix.len() - 2) as f64
    }

    /// `Q(τ)` for `0 ≤ τ ≤ span`.
    pub fn q(&self, tau: f64) -> f64 {
        assert!((0.0..=self.span()).contains(&tau), "tau = {tau} outside the sieved range");
        let k = tau.floor() as usize;
        let frac = tau - k as f64;
        let bit = (self.prefix[k + 1] - self.prefix[k]) as f64;
        self.prefix[k] as f64 + frac * bit - self.density * tau
    }
}

/// `Q(τ)` for the walk started at `n`.
pub fn walk(set: &SievingSet, n: u64, h: u64, tau: f64) -> Result<f64> {
    if !(0.0..=h as f64).contains(&tau) {
        return Err(Error::Precondition(format!("tau = {tau} outside [0, {h}]")));
    }
    Ok(Walk::new(set, n, h)?.q(tau))
}

/// The scale `√(A_α N_⟨B⟩(H))` dividing `Q(tH)`.
#[derive(Debug, Clone)]
pub struct Normalization {
    pub alpha: f64,
    pub constant: Approximation,
    pub semigroup_count: u64,
    pub scale: f64,
}

impl Normalization {
    pub fn new(set: &SievingSet, h: u64, alpha: f64) -> Result<Self> {
        let mut constant = a_alpha(set, alpha, CONSTANT_CUTOFF)?;
        if set.power().is_none() {
            constant.rigor = Rigor::Heuristic;
            constant.notes.push("regular variation of a custom semigroup is not verified".into());
        }
        let semigroup_count = count_semigroup(set, h, false);
        let scale = (constant.value * semigroup_count as f64).sqrt();
        Ok(Self { alpha, constant, semigroup_count, scale })
    }
}

/// Grid values of one normalised path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub n: u64,
    pub h: u64,
    pub values: Vec<f64>,
}

/// Stored paths sharing one grid and normalisation.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub x: u64,
    pub h: u64,
    pub grid: Vec<f64>,
    pub normalization: Normalization,
    pub paths: Vec<PathSample>,
    pub warnings: Vec<String>,
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() || grid.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(Error::Precondition("grid must be a nonempty subset of [0, 1]".into()));
    }
    Ok(())
}

fn regime_warnings(x: u64, h: u64) -> Vec<String> {
    let ratio = (h as f64).ln() / (x as f64).ln();
    if x > 1 && ratio > 0.5 {
        vec![format!("log H / log X = {ratio:.3} exceeds 0.5; far from the small-window regime")]
    } else {
        Vec::new()
    }
}

fn path_values(walk: &Walk, h: u64, grid: &[f64], scale: f64) -> Vec<f64> {
    grid.iter().map(|&t| walk.q(t * h as f64) / scale).collect()
}

/// Paths started at `sample_count` starting points drawn uniformly from
/// `[1, X]` with a seeded generator: without replacement when
/// `sample_count > X/2`, with replacement otherwise, and every `n` once
/// when `sample_count ≥ X`.
pub fn path_ensemble(
    set: &SievingSet,
    x: u64,
    h: u64,
    grid: &[f64],
    sample_count: u64,
    seed: u64,
    alpha: f64,
) -> Result<Ensemble> {
    check_grid(grid)?;
    if h == 0 || h > x {
        return Err(Error::Precondition(format!("need 1 <= H <= X, got H = {h}, X = {x}")));
    }
    if sample_count == 0 {
        return Err(Error::Precondition("sample_count must be at least 1".into()));
    }
    let count = sample_count.min(x);
    if count > MAX_STORED_PATHS {
        return Err(Error::CostGuard(format!(
            "{count} stored paths requested; use full_covariance for complete enumeration"
        )));
    }
    let normalization = Normalization::new(set, h, alpha)?;
    let dens = density(set, CONSTANT_CUTOFF)?.value;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts: Vec<u64> = if sample_count >= x {
        (1..=x).collect()
    } else if 2 * sample_count > x {
        index::sample(&mut rng, x as usize, count as usize)
            .into_iter()
            .map(|i| i as u64 + 1)
            .collect()
    } else {
        (0..count).map(|_| rng.gen_range(1..=x)).collect()
    };
    let paths = starts
        .into_iter()
        .map(|n| {
            let w = Walk::with_density(set, n, h, dens)?;
            Ok(PathSample { n, h, values: path_values(&w, h, grid, normalization.scale) })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut warnings = regime_warnings(x, h);
    warnings.extend(normalization.constant.notes.iter().cloned());
    Ok(Ensemble { x, h, grid: grid.to_vec(), normalization, paths, warnings })
}

/// One cell of the covariance comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceCell {
    pub s: f64,
    pub t: f64,
    pub empirical: f64,
    pub theoretical: f64,
    pub stderr: f64,
}

impl CovarianceCell {
    pub fn deviation(&self) -> f64 {
        (self.empirical - self.theoretical).abs()
    }
}

/// Empirical `E[W(s) W(t)]` against the fBm covariance with `2γ = α`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceReport {
    pub alpha: f64,
    pub samples: u64,
    pub grid: Vec<f64>,
    /// Cells for `s ≤ t` in grid order.
    pub cells: Vec<CovarianceCell>,
    /// `(t, mean of W(t), standard error)`.
    pub means: Vec<(f64, f64, f64)>,
}

impl CovarianceReport {
    pub fn cell(&self, s: f64, t: f64) -> Option<&CovarianceCell> {
        self.cells.iter().find(|c| (c.s == s && c.t == t) || (c.s == t && c.t == s))
    }

    pub fn max_deviation(&self) -> f64 {
        self.cells.iter().map(CovarianceCell::deviation).fold(0.0, f64::max)
    }
}

/// Running sums for the covariance of grid values.
#[derive(Debug, Clone)]
struct Moments {
    count: u64,
    first: Vec<KahanSum>,
    second: Vec<KahanSum>,
    products: Vec<KahanSum>,
    products_sq: Vec<KahanSum>,
}

impl Moments {
    fn new(m: usize) -> Self {
        let pairs = m * (m + 1) / 2;
        Self {
            count: 0,
            first: vec![KahanSum::new(); m],
            second: vec![KahanSum::new(); m],
            products: vec![KahanSum::new(); pairs],
            products_sq: vec![KahanSum::new(); pairs],
        }
    }

    fn push(&mut self, v: &[f64]) {
        self.count += 1;
        let mut p = 0;
        for i in 0..v.len() {
            self.first[i].add(v[i]);
            self.second[i].add(v[i] * v[i]);
            for j in i..v.len() {
                let x = v[i] * v[j];
                self.products[p].add(x);
                self.products_sq[p].add(x * x);
                p += 1;
            }
        }
    }

    fn merge(&mut self, o: Moments) {
        self.count += o.count;
        for (a, b) in [
            (&mut self.first, &o.first),
            (&mut self.second, &o.second),
            (&mut self.products, &o.products),
            (&mut self.products_sq, &o.products_sq),
        ] {
            for (x, y) in a.iter_mut().zip(b) {
                x.merge(y);
            }
        }
    }

    /// Report for values already divided by the normalisation.
    fn report(&self, grid: &[f64], alpha: f64, scale: f64) -> CovarianceReport {
        let n = self.count as f64;
        let s2 = scale * scale;
        let stderr = |sum: f64, sq: f64| {
            let mean = sum / n;
            let var = (sq / n - mean * mean).max(0.0);
            (var / n).sqrt()
        };
        let mut cells = Vec::new();
        let mut p = 0;
        for i in 0..grid.len() {
            for j in i..grid.len() {
                let sum = self.products[p].value();
                let sq = self.products_sq[p].value();
                cells.push(CovarianceCell {
                    s: grid[i],
                    t: grid[j],
                    empirical: sum / n / s2,
                    theoretical: fbm_covariance(alpha / 2.0, grid[i], grid[j]),
                    stderr: stderr(sum, sq) / s2,
                });
                p += 1;
            }
        }
        let means = (0..grid.len())
            .map(|i| {
                let sum = self.first[i].value();
                let sq = self.second[i].value();
                (grid[i], sum / n / scale, stderr(sum, sq) / scale)
            })
            .collect();
        CovarianceReport { alpha, samples: self.count, grid: grid.to_vec(), cells, means }
    }
}

/// Covariance report of a stored ensemble.
pub fn covariance_report(ensemble: &Ensemble) -> Result<CovarianceReport> {
    if ensemble.paths.is_empty() {
        return Err(Error::Precondition("empty ensemble".into()));
    }
    let mut m = Moments::new(ensemble.grid.len());
    for p in &ensemble.paths {
        m.push(&p.values);
    }
    Ok(m.report(&ensemble.grid, ensemble.normalization.alpha, 1.0))
}

/// Covariance over every `n ∈ [1, X]`, streamed without storing paths.
///
/// Each grid point `t` reads the window `(n, n + ⌊tH⌋]` and, when `tH` is
/// not an integer, the single next indicator. Sums are compensated per
/// chunk and merged in chunk order, so the report is independent of the
/// number of threads.
pub fn full_covariance(
    set: &SievingSet,
    x: u64,
    h: u64,
    grid: &[f64],
    alpha: f64,
) -> Result<(CovarianceReport, Normalization)> {
    check_grid(grid)?;
    if h == 0 || h > x {
        return Err(Error::Precondition(format!("need 1 <= H <= X, got H = {h}, X = {x}")));
    }
    let normalization = Normalization::new(set, h, alpha)?;
    let dens = density(set, CONSTANT_CUTOFF)?.value;

    // Per grid point: (window index, optional next-indicator index, fraction, τ).
    let mut windows: Vec<Window> = Vec::new();
    let mut index_of = |w: Window| match windows.iter().position(|&v| v == w) {
        Some(i) => i,
        None => {
            windows.push(w);
            windows.len() - 1
        }
    };
    let plan: Vec<(usize, Option<usize>, f64, f64)> = grid
        .iter()
        .map(|&t| {
            let tau = t * h as f64;
            let k = tau.floor() as u64;
            let frac = tau - k as f64;
            let base = index_of(Window::upto(k));
            let next = (frac > 0.0).then(|| index_of(Window::new(k, k + 1)));
            (base, next, frac, tau)
        })
        .collect();
    let m = grid.len();
    let scale = normalization.scale;
    let moments = scan_windows(
        set,
        x,
        &windows,
        || Moments::new(m),
        |acc, _, counts| {
            let mut v = [0.0f64; 32];
            let mut vals = Vec::new();
            let buf: &mut [f64] = if m <= 32 { &mut v[..m] } else { vals.resize(m, 0.0); &mut vals };
            for (slot, &(base, next, frac, tau)) in buf.iter_mut().zip(&plan) {
                let bit = next.map_or(0.0, |i| counts[i] as f64);
                *slot = (counts[base] as f64 + frac * bit - dens * tau) / scale;
            }
            acc.push(buf);
        },
        |acc, part| acc.merge(part),
    )?;
    Ok((moments.report(grid, alpha, 1.0), normalization))
}
