//! Monte Carlo trajectories of the three-measurement protocol, and a
//! chi-squared comparison against exact statistics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::hilbert::{DiagonalDensity, EnergySpectrum, UnitaryPropagator};
use crate::par;
use crate::protocol::JointDistribution3;

/// Trajectories per independent RNG stream. Fixed so results do not depend
/// on the thread count.
const CHUNK: u64 = 1 << 16;

fn cumulative(weights: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    let mut cdf: Vec<f64> = weights
        .map(|w| {
            acc += w;
            acc
        })
        .collect();
    if let Some(last) = cdf.last().copied() {
        if last > 0.0 {
            cdf.iter_mut().for_each(|c| *c /= last);
        }
    }
    cdf
}

fn draw(cdf: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.gen();
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

/// Sample `n_samples` outcome paths `(k2, k1, k0)`: `k0` from the initial
/// populations, then each later outcome from the transition column of the
/// previous one.
pub fn sample_trajectories(
    rho0: &DiagonalDensity,
    u10: &UnitaryPropagator,
    u21: &UnitaryPropagator,
    n_samples: u64,
    seed: u64,
    spectra: &[EnergySpectrum; 3],
) -> Result<JointDistribution3> {
    if n_samples == 0 {
        return Err(Error::param("n_samples", "need at least one sample"));
    }
    let (d2, d1, d0) = (spectra[2].dim(), spectra[1].dim(), spectra[0].dim());
    for (expected, found) in [
        (d0, rho0.dim()),
        (d0, u10.dim()),
        (d1, u10.dim()),
        (d1, u21.dim()),
        (d2, u21.dim()),
    ] {
        if expected != found {
            return Err(Error::DimensionMismatch { expected, found });
        }
    }
    let t10 = u10.transition_probabilities();
    let t21 = u21.transition_probabilities();
    let cdf0 = cumulative(rho0.populations().iter().copied());
    let cdf10: Vec<Vec<f64>> = t10.column_iter().map(|c| cumulative(c.iter().copied())).collect();
    let cdf21: Vec<Vec<f64>> = t21.column_iter().map(|c| cumulative(c.iter().copied())).collect();

    let chunks = n_samples.div_ceil(CHUNK);
    let partial = par::map_range(chunks as usize, |chunk| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(chunk as u64);
        let len = CHUNK.min(n_samples - chunk as u64 * CHUNK);
        let mut counts = vec![0u64; d2 * d1 * d0];
        for _ in 0..len {
            let k0 = draw(&cdf0, &mut rng);
            let k1 = draw(&cdf10[k0], &mut rng);
            let k2 = draw(&cdf21[k1], &mut rng);
            counts[(k2 * d1 + k1) * d0 + k0] += 1;
        }
        counts
    });
    let mut counts = vec![0u64; d2 * d1 * d0];
    for part in partial {
        counts.iter_mut().zip(part).for_each(|(c, p)| *c += p);
    }
    JointDistribution3::from_counts(&counts, spectra)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquaredReport {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson goodness of fit of sampled paths against exact probabilities.
/// Paths expected fewer than five times are pooled into one bin.
pub fn chi_squared_test(sampled: &JointDistribution3, exact: &JointDistribution3) -> Result<ChiSquaredReport> {
    let n = sampled
        .samples()
        .ok_or_else(|| Error::param("sampled", "distribution carries no sample count"))? as f64;
    if sampled.dims() != exact.dims() {
        let (a, b, c) = exact.dims();
        let (x, y, z) = sampled.dims();
        return Err(Error::DimensionMismatch {
            expected: a * b * c,
            found: x * y * z,
        });
    }
    let mut statistic = 0.0;
    let mut bins = 0usize;
    let (mut pooled_obs, mut pooled_exp) = (0.0, 0.0);
    for ((k2, k1, k0), p) in exact.paths() {
        let observed = sampled.get(k2, k1, k0) * n;
        let expected = p * n;
        if expected >= 5.0 {
            statistic += (observed - expected).powi(2) / expected;
            bins += 1;
        } else {
            pooled_obs += observed;
            pooled_exp += expected;
        }
    }
    if pooled_exp > 0.0 {
        statistic += (pooled_obs - pooled_exp).powi(2) / pooled_exp;
        bins += 1;
    }
    if bins < 2 {
        return Ok(ChiSquaredReport {
            statistic,
            dof: 0,
            p_value: 1.0,
        });
    }
    let dof = bins - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::param("dof", e.to_string()))?;
    Ok(ChiSquaredReport {
        statistic,
        dof,
        p_value: 1.0 - dist.cdf(statistic),
    })
}
