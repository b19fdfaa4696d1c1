//! Reference fractional Brownian motion on a finite grid.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

const JITTER: f64 = 1e-12;

/// `½(s^{2γ} + t^{2γ} − |t − s|^{2γ})`.
pub fn fbm_covariance(hurst: f64, s: f64, t: f64) -> f64 {
    let e = 2.0 * hurst;
    0.5 * (s.abs().powf(e) + t.abs().powf(e) - (t - s).abs().powf(e))
}

/// Cholesky sampler for fBm with Hurst parameter `γ` observed on a grid.
#[derive(Debug, Clone)]
pub struct FbmSampler {
    grid: Vec<f64>,
    /// Positions of the grid points with `t > 0`; `W(0) = 0` is fixed.
    active: Vec<usize>,
    factor: DMatrix<f64>,
}

impl FbmSampler {
    pub fn new(hurst: f64, grid: &[f64]) -> Result<Self> {
        if !(hurst > 0.0 && hurst < 1.0) {
            return Err(Error::Precondition(format!("Hurst parameter {hurst} outside (0, 1)")));
        }
        if grid.iter().any(|t| !(0.0..=1.0).contains(t)) || grid.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Precondition("grid must be sorted inside [0, 1]".into()));
        }
        let active: Vec<usize> = (0..grid.len()).filter(|&i| grid[i] > 0.0).collect();
        let n = active.len();
        let cov = DMatrix::from_fn(n, n, |i, j| fbm_covariance(hurst, grid[active[i]], grid[active[j]]));
        let factor = match cov.clone().cholesky() {
            Some(c) => c.l(),
            None => (cov + DMatrix::identity(n, n) * JITTER)
                .cholesky()
                .ok_or(Error::NotPositiveDefinite { jitter: JITTER })?
                .l(),
        };
        Ok(Self { grid: grid.to_vec(), active, factor })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// One path on the grid.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let z = DVector::from_fn(self.active.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
        let x = &self.factor * z;
        let mut out = vec![0.0; self.grid.len()];
        for (k, &i) in self.active.iter().enumerate() {
            out[i] = x[k];
        }
        out
    }
}

/// A reference fBm path on `grid`, reproducible from `seed`.
pub fn fbm_reference(hurst: f64, grid: &[f64], seed: u64) -> Result<Vec<f64>> {
    let sampler = FbmSampler::new(hurst, grid)?;
    Ok(sampler.sample(&mut ChaCha8Rng::seed_from_u64(seed)))
}
