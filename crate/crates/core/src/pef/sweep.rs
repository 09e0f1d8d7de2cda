//! Power sweeps and slice evaluations of optimised PEFs.

use rayon::prelude::*;

use super::{logprob_rate, optimize_pef, Pef, PefOptConfig, PefOptimum};
use crate::bell::{joint, slice_behaviour, JointDistribution, SettingsDistribution, SliceCoords};
use crate::error::{param, Result};

/// `count` log-spaced powers in `[lo, hi]`.
pub fn beta_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && count >= 2) {
        return Err(param(format!("invalid beta grid ({lo}, {hi}, {count})")));
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..count)
        .map(|i| {
            if i + 1 == count {
                hi
            } else {
                (a + (b - a) * i as f64 / (count - 1) as f64).exp()
            }
        })
        .collect())
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub beta: f64,
    pub optimum: PefOptimum,
    /// Net rate for each requested trial count.
    pub net_rates: Vec<f64>,
}

/// Optimises at every power, in parallel, and evaluates net rates.
pub fn sweep_rates(
    target: &JointDistribution,
    betas: &[f64],
    trial_counts: &[f64],
    epsilon: f64,
    extremals: &[JointDistribution],
) -> Result<Vec<SweepRow>> {
    betas
        .par_iter()
        .map(|&beta| {
            let mut cfg = PefOptConfig::new(beta, target.clone())?;
            cfg.epsilon = epsilon;
            let optimum = optimize_pef(&cfg, extremals)?;
            let net_rates = trial_counts.iter().map(|n| optimum.rate + epsilon.log2() / (n * beta)).collect();
            Ok(SweepRow { beta, optimum, net_rates })
        })
        .collect()
}

/// Index of the row maximising the net rate for trial count number `which`.
pub fn argmax_beta(rows: &[SweepRow], which: usize) -> Option<usize> {
    (0..rows.len()).max_by(|&i, &j| rows[i].net_rates[which].total_cmp(&rows[j].net_rates[which]))
}

/// Log-prob rate of `f` at a slice point with settings `s`.
pub fn rate_on_slice(f: &Pef, s: &SettingsDistribution, coords: SliceCoords) -> Result<f64> {
    Ok(logprob_rate(f, &joint(&slice_behaviour(coords)?, s)?))
}

/// The `S` at which the rate of `f` along fixed `S'` crosses zero.
///
/// The rate is affine in `S`, so two evaluations determine the root.
pub fn zero_rate_intercept(f: &Pef, s: &SettingsDistribution, s_prime: f64) -> Result<Option<f64>> {
    let b = 4.0 - s_prime.abs();
    if !(b > 0.0) {
        return Ok(None);
    }
    let a = -b;
    let ra = rate_on_slice(f, s, SliceCoords { s: a, s_prime })?;
    let rb = rate_on_slice(f, s, SliceCoords { s: b, s_prime })?;
    if (ra - rb).abs() < 1e-300 {
        return Ok(None);
    }
    let root = a + (b - a) * ra / (ra - rb);
    Ok((a..=b).contains(&root).then_some(root))
}
