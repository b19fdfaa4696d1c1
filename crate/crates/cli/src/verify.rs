//! Invariant suites behind `bfree-lab verify`.
//!
//! Each suite runs a batch of exact identities or inequalities and reports
//! how many failed. Random instances come from a ChaCha generator seeded by
//! `--seed`, so a suite replays the same trials on every run.

use std::f64::consts::PI;

use bfree_core::arith::gcd;
use bfree_core::bset::{bfree_segment, for_each_product, SievingSet};
use bfree_core::constants::{a_alpha, a_squarefree, density, quadrature_check};
use bfree_core::fbm::{fbm_covariance, FbmSampler};
use bfree_core::stats::{gap_moment_inequality, window_histograms, Center, StepFunction};
use bfree_core::theory::kernels::e;
use bfree_core::theory::{
    ck_truncated, f_kernel, fundamental_lemma_margin, j_kernel, ms_lemma_margin, s_h, PhiKernel,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::output::{Report, Table};
use crate::CliError;

pub const SUITES: &[&str] = &[
    "convolution",
    "fundamental-lemma",
    "ms-lemma",
    "parseval",
    "gap",
    "oracles",
    "sinc-moment",
    "constant-identity",
    "fbm-reference",
];

/// Slack allowed on floating-point inequalities.
pub const SLACK: f64 = 1e-9;

/// Counts checks and failures; optionally flips the first inequality it sees.
#[derive(Debug, Default)]
pub struct Checker {
    negate_pending: bool,
    pub checks: u64,
    pub failures: u64,
    pub first_failure: Option<String>,
}

impl Checker {
    pub fn new(negate: bool) -> Self {
        Self { negate_pending: negate, ..Self::default() }
    }

    fn record(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(what());
            }
        }
    }

    /// An inequality; the one `--self-test-negate` flips.
    pub fn holds(&mut self, ok: bool, what: impl FnOnce() -> String) {
        let ok = if self.negate_pending {
            self.negate_pending = false;
            !ok
        } else {
            ok
        };
        self.record(ok, what);
    }

    pub fn le(&mut self, lhs: f64, rhs: f64, what: impl FnOnce() -> String) {
        self.holds(lhs <= rhs + SLACK, || format!("{}: {lhs:.17e} > {rhs:.17e}", what()));
    }

    /// An identity `a = b` up to a relative tolerance.
    pub fn close(&mut self, a: f64, b: f64, rel: f64, what: impl FnOnce() -> String) {
        let ok = (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0);
        self.record(ok, || format!("{}: {a:.17e} vs {b:.17e}", what()));
    }

    pub fn equal<T: PartialEq + std::fmt::Debug>(&mut self, a: T, b: T, what: impl FnOnce() -> String) {
        let ok = a == b;
        self.record(ok, || format!("{}: {a:?} vs {b:?}", what()));
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// `Σ_{d | n, d ∈ [B]} μ_B(d) = 1_{B-free}(n)` for `n ≤ limit`.
pub fn convolution(c: &mut Checker, set: &SievingSet, limit: u64) -> Result<(), CliError> {
    let mut conv = vec![0i64; limit as usize + 1];
    for_each_product(set, limit, true, 1i64, &|s, _, _| -s, &mut |d, s| {
        let mut m = d;
        while m <= limit {
            conv[m as usize] += s;
            m += d;
        }
    });
    let seg = bfree_segment(set, 1, limit)?;
    let mut bad = None;
    for n in 1..=limit {
        let want = seg.bit(n - 1) as i64;
        if conv[n as usize] != want && bad.is_none() {
            bad = Some((n, conv[n as usize], want));
        }
    }
    c.checks += limit - 1;
    c.equal(bad, None, || format!("convolution identity over {set}"));
    Ok(())
}

fn random_table(rng: &mut ChaCha8Rng, m: u64) -> Vec<Complex64> {
    (0..m).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

const SQUAREFREE_POOL: [u64; 7] = [4, 9, 25, 36, 100, 225, 49];

/// Random instances of the constrained-sum bound over full residue
/// systems. The last modulus is the lcm of the others, which makes every
/// generator of the lcm divide at least two moduli.
pub fn fundamental_lemma(c: &mut Checker, trials: u64, rng: &mut ChaCha8Rng) -> Result<(), CliError> {
    let set = SievingSet::squarefree();
    for _ in 0..trials {
        let k = rng.gen_range(1..=3);
        let mut moduli: Vec<u64> = (0..k).map(|_| SQUAREFREE_POOL[rng.gen_range(0..6)]).collect();
        let l = moduli.iter().fold(1u64, |l, &m| l / gcd(l, m) * m);
        moduli.push(l);
        let tables: Vec<_> = moduli.iter().map(|&m| random_table(rng, m)).collect();
        let m = fundamental_lemma_margin(&set, &moduli, &tables)?;
        c.le(m.lhs, m.rhs, || format!("fundamental lemma at {moduli:?}"));
    }
    Ok(())
}

/// Random instances of the bound over reduced numerators with `G = F_H`
/// and `G₀(q) = qH`.
pub fn ms_lemma(c: &mut Checker, trials: u64, rng: &mut ChaCha8Rng) -> Result<(), CliError> {
    let set = SievingSet::squarefree();
    for _ in 0..trials {
        let k = rng.gen_range(2..=3);
        let moduli: Vec<u64> = (0..k).map(|_| SQUAREFREE_POOL[rng.gen_range(0..SQUAREFREE_POOL.len())]).collect();
        let h = rng.gen_range(2..60u64);
        let m = ms_lemma_margin(&set, &moduli, |t| Complex64::new(f_kernel(h, t), 0.0), |q| (q * h) as f64)?;
        c.le(m.lhs, m.rhs, || format!("MS lemma at {moduli:?}, H = {h}"));
    }
    Ok(())
}

/// `Σ_{ℓ mod d} |Φ_H(ℓ/d)|² = d Σ_{r mod d} (Σ_{m ≡ r} φ(m/H))²`.
pub fn parseval(c: &mut Checker, phi: &StepFunction, dmax: u64, hmax: u64) -> Result<(), CliError> {
    for h in 1..=hmax {
        let kernel = PhiKernel::new(phi, h)?;
        let coeffs: Vec<f64> = (1..=kernel.reach() as i64).map(|m| kernel.coefficient(m)).collect();
        for d in 1..=dmax {
            let lhs: f64 = (0..d).map(|l| kernel.eval(l as f64 / d as f64).norm_sqr()).sum();
            let mut classes = vec![0f64; d as usize];
            for (i, &k) in coeffs.iter().enumerate() {
                classes[(i + 1) % d as usize] += k;
            }
            let rhs = d as f64 * classes.iter().map(|x| x * x).sum::<f64>();
            c.close(lhs, rhs, 1e-9, || format!("Parseval at d = {d}, H = {h}"));
        }
    }
    Ok(())
}

/// The Chebyshev gap bound `|gaps| · (𝓜H)^{2k} ≤ Σ (N − 𝓜H)^{2k}`, exactly.
pub fn gap(c: &mut Checker, set: &SievingSet, x: u64, hs: &[u64]) -> Result<(), CliError> {
    for hist in window_histograms(set, x, hs)? {
        let center = Center::density_window(set, hist.h)?.value;
        for k in 1..=2 {
            let ok = gap_moment_inequality(&hist, center, k)?;
            c.holds(ok, || format!("gap inequality {set}, X = {x}, H = {}, k = {k}", hist.h));
        }
    }
    Ok(())
}

/// `S_H(r)` by nested loops over every numerator tuple.
pub fn brute_s_h(set: &SievingSet, h: u64, moduli: &[u64]) -> f64 {
    let r = moduli.iter().fold(1u64, |l, &m| l / gcd(l, m) * m);
    let lists: Vec<Vec<u64>> = moduli
        .iter()
        .map(|&m| (1..=m).filter(|&a| set.is_bfree(gcd(a, m))).collect())
        .collect();
    let mut idx = vec![0usize; moduli.len()];
    let mut total = 0.0;
    'outer: loop {
        let num: u64 = idx.iter().zip(moduli).zip(&lists).map(|((&i, &m), l)| l[i] * (r / m)).sum();
        if num.is_multiple_of(r) {
            total += idx
                .iter()
                .zip(moduli)
                .zip(&lists)
                .map(|((&i, &m), l)| f_kernel(h, l[i] as f64 / m as f64))
                .product::<f64>();
        }
        for j in 0..idx.len() {
            idx[j] += 1;
            if idx[j] < lists[j].len() {
                continue 'outer;
            }
            idx[j] = 0;
        }
        return total;
    }
}

/// `J_H(b, n)` with `Φ_H` summed term by term.
pub fn brute_j(set: &SievingSet, coeffs: &[f64], b: u64, n: u64) -> Complex64 {
    let phi = |t: f64| -> Complex64 {
        coeffs.iter().enumerate().map(|(i, &k)| e((i as f64 + 1.0) * t) * k).sum()
    };
    (1..=n)
        .filter(|&a| set.is_bfree(gcd(a, n)) && set.is_bfree(gcd((b + n - a) % n, n)))
        .map(|a| phi(a as f64 / n as f64) * phi(((b + n - a) % n) as f64 / n as f64))
        .sum()
}

/// `C_k(H; φ)` of a finite set: the indicator is periodic modulo the
/// product `P` of the generators, so the limiting moment is the average of
/// `(Σ_m φ(m/H) 1(n + m) − 𝓜 Σ_m φ(m/H))^k` over one period.
pub fn periodic_ck(set: &SievingSet, coeffs: &[f64], k: u32) -> f64 {
    let gens = set.custom_elements();
    let period: u64 = gens.iter().product();
    let dens: f64 = gens.iter().map(|&b| 1.0 - 1.0 / b as f64).product();
    let mass: f64 = coeffs.iter().sum();
    let free = |n: u64| gens.iter().all(|&b| !n.is_multiple_of(b));
    let total: f64 = (0..period)
        .map(|n| {
            let v: f64 = coeffs
                .iter()
                .enumerate()
                .filter(|&(i, _)| free(n + i as u64 + 1))
                .map(|(_, &c)| c)
                .sum();
            (v - dens * mass).powi(k as i32)
        })
        .sum();
    total / period as f64
}

pub fn kernel_coefficients(kernel: &PhiKernel) -> Vec<f64> {
    (1..=kernel.reach() as i64).map(|m| kernel.coefficient(m)).collect()
}

fn oracles(c: &mut Checker, trials: u64, rng: &mut ChaCha8Rng) -> Result<(), CliError> {
    let sq = SievingSet::squarefree();
    let pool = [4u64, 9, 25, 36, 49, 100];
    for _ in 0..trials.min(30) {
        let k = rng.gen_range(2..=3);
        let moduli: Vec<u64> = (0..k).map(|_| pool[rng.gen_range(0..pool.len())]).collect();
        let h = rng.gen_range(1..40);
        c.close(s_h(&sq, h, &moduli)?, brute_s_h(&sq, h, &moduli), 1e-9, || format!("S_H at {moduli:?}, H = {h}"));
    }
    let phi = StepFunction::parse("0 1/2 1\n1/2 1 -1/3")?;
    for _ in 0..trials.min(30) {
        let n = [4u64, 9, 36, 100, 225][rng.gen_range(0..5)];
        let b = rng.gen_range(1..=n);
        let h = rng.gen_range(1..30);
        let kernel = PhiKernel::new(&phi, h)?;
        let want = brute_j(&sq, &kernel_coefficients(&kernel), b, n);
        let got = j_kernel(&sq, &kernel, b, n)?;
        let scale = want.norm().max(1.0);
        c.close(got.re / scale, want.re / scale, 1e-9, || format!("J_H re at b = {b}, n = {n}"));
        c.close(got.im / scale, want.im / scale, 1e-9, || format!("J_H im at b = {b}, n = {n}"));
    }
    for gens in [vec![4u64, 9], vec![4, 25], vec![8, 9], vec![4, 9, 25]] {
        let set = SievingSet::custom(gens.clone())?;
        let period: u64 = gens.iter().product();
        for h in [3u64, 10] {
            for phi in [StepFunction::indicator(), phi.clone()] {
                let kernel = PhiKernel::new(&phi, h)?;
                let coeffs = kernel_coefficients(&kernel);
                for k in 2..=4 {
                    let got = ck_truncated(&set, h, &phi, k, period)?.value;
                    let want = periodic_ck(&set, &coeffs, k);
                    c.close(got, want, 1e-9, || format!("C_{k} over {gens:?}, H = {h}"));
                }
            }
        }
    }
    Ok(())
}

fn sinc_moment(c: &mut Checker) -> Result<(), CliError> {
    for alpha in [0.2, 0.3, 0.5, 0.7, 0.8] {
        let q = quadrature_check(alpha, 1e-9)?;
        c.le(q.discrepancy(), 1e-6, || format!("sinc moment at alpha = {alpha}"));
    }
    Ok(())
}

fn constant_identity(c: &mut Checker) -> Result<(), CliError> {
    let sq = SievingSet::squarefree();
    let a = a_alpha(&sq, 0.5, 1_000_000)?;
    let b = a_squarefree(1_000_000)?;
    c.le((a.value - b.value).abs(), 1e-10, || "A_1/2 against the squarefree constant".into());
    let d = density(&sq, 1_000_000)?;
    c.holds(d.contains(6.0 / (PI * PI)), || format!("density interval {d:?} misses 6/pi^2"));
    Ok(())
}

/// Sample covariance of the Cholesky sampler against the closed form,
/// within three standard errors.
pub fn fbm_reference_check(c: &mut Checker, hurst: f64, samples: u64, seed: u64) -> Result<(), CliError> {
    let grid = [0.25, 0.5, 1.0];
    let sampler = FbmSampler::new(hurst, &grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.len();
    let mut sums = vec![(0f64, 0f64); n * n];
    let mut incr = (0f64, 0f64);
    for _ in 0..samples {
        let z = sampler.sample(&mut rng);
        for i in 0..n {
            for j in 0..n {
                let p = z[i] * z[j];
                sums[i * n + j].0 += p;
                sums[i * n + j].1 += p * p;
            }
        }
        let d = (z[2] - z[1]).powi(2);
        incr.0 += d;
        incr.1 += d * d;
    }
    let s = samples as f64;
    let band = |(sum, sq): (f64, f64)| {
        let mean = sum / s;
        (mean, 3.0 * ((sq / s - mean * mean).max(0.0) / s).sqrt())
    };
    for i in 0..n {
        for j in i..n {
            let (mean, tol) = band(sums[i * n + j]);
            let want = fbm_covariance(hurst, grid[i], grid[j]);
            c.le((mean - want).abs(), tol, || format!("fBm covariance at ({}, {})", grid[i], grid[j]));
        }
    }
    let (mean, tol) = band(incr);
    c.le((mean - 0.5f64.powf(2.0 * hurst)).abs(), tol, || "fBm increment variance".into());
    Ok(())
}

/// Runs one suite by name.
pub fn run_suite(name: &str, c: &mut Checker, trials: u64, seed: u64) -> Result<(), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match name {
        "convolution" => {
            for set in [SievingSet::squarefree(), SievingSet::cubefree(), SievingSet::custom(vec![4, 9, 25, 7])?] {
                convolution(c, &set, 100_000)?;
            }
        }
        "fundamental-lemma" => fundamental_lemma(c, trials, &mut rng)?,
        "ms-lemma" => ms_lemma(c, trials, &mut rng)?,
        "parseval" => {
            parseval(c, &StepFunction::indicator(), 200, 500)?;
            parseval(c, &StepFunction::parse("0 1/3 2\n1/3 1 -1")?, 60, 60)?;
        }
        "gap" => {
            gap(c, &SievingSet::squarefree(), 1_000_000, &[1, 2, 5, 10, 50, 100])?;
            gap(c, &SievingSet::cubefree(), 1_000_000, &[5, 20])?;
        }
        "oracles" => oracles(c, trials, &mut rng)?,
        "sinc-moment" => sinc_moment(c)?,
        "constant-identity" => constant_identity(c)?,
        "fbm-reference" => fbm_reference_check(c, 0.25, trials.max(1) * 20, seed)?,
        other => {
            return Err(CliError::Config(format!("unknown suite {other:?}; known: {}", SUITES.join(", "))))
        }
    }
    Ok(())
}

pub fn run(cfg: &RunConfig) -> Result<Report, CliError> {
    let names: Vec<&str> = match &cfg.suite {
        Some(s) => s.split(',').map(str::trim).filter(|s| !s.is_empty()).collect(),
        None => SUITES.to_vec(),
    };
    let mut table = Table::new("verify", &["suite", "checks", "failures", "status", "first_failure"]);
    let mut negate = cfg.self_test_negate;
    let mut all = true;
    for name in names {
        let mut c = Checker::new(negate);
        run_suite(name, &mut c, cfg.trials, cfg.seed)?;
        negate = c.negate_pending;
        all &= c.passed();
        table.push(vec![
            name.into(),
            c.checks.into(),
            c.failures.into(),
            (if c.passed() { "pass" } else { "fail" }).into(),
            c.first_failure.unwrap_or_default().into(),
        ]);
    }
    Ok(Report { tables: vec![table], notes: Vec::new(), passed: Some(all) })
}
