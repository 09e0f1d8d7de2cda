use rayon::prelude::*;
use serde::Serialize;

use crate::bell::{no_signalling_check, Behaviour, JointDistribution};
use crate::entropy::AttackModel;
use crate::error::{domain, param, Error, Result};
use crate::pef::Pef;

use super::LogAccumulator;

/// Largest number of enumerated trial sequences.
pub const SEQUENCE_LIMIT: usize = 1 << 22;

/// Exact failure probabilities of the PEF test on an IID product.
#[derive(Debug, Clone, Serialize)]
pub struct Theorem1Check {
    pub n: usize,
    /// `(eps, P(mu(C|Z) >= (eps prod F)^(-1/beta)))` per grid point.
    pub probabilities: Vec<(f64, f64)>,
    /// `max_eps (P - eps)`.
    pub max_excess: f64,
    /// `E[prod F * mu(C|Z)^beta]`.
    pub supermartingale: f64,
}

impl Theorem1Check {
    pub fn holds(&self) -> bool {
        self.max_excess <= 1e-12 && self.supermartingale <= 1.0 + 1e-12
    }
}

fn sequence_count(per_trial: usize, n: usize) -> Result<usize> {
    u32::try_from(n)
        .ok()
        .and_then(|n| per_trial.checked_pow(n))
        .filter(|c| *c <= SEQUENCE_LIMIT)
        .ok_or_else(|| Error::Resource(format!("{per_trial}^{n} sequences exceed the enumeration limit")))
}

/// Enumerates every `(e, z, c)` sequence of length `n` under the IID product
/// of `d` and evaluates the PEF test event exactly. `mu` is the conditional
/// `d(c|z, e)` of the true distribution.
pub fn theorem1_exact_check(f: &Pef, d: &JointDistribution, n: usize, epsilon_grid: &[f64]) -> Result<Theorem1Check> {
    let sc = d.scenario();
    if f.scenario() != sc {
        return Err(domain("PEF and distribution have different scenarios"));
    }
    if n == 0 {
        return Err(param("need at least one trial"));
    }
    if let Some(e) = epsilon_grid.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
        return Err(param(format!("epsilon {e} outside (0,1)")));
    }
    let (nz, nc) = (sc.settings_count(), sc.outcome_count());
    let ne = d.label_count();

    // per-trial cells with positive probability: (probability, beta log2 mu + log2 F)
    let beta = f.beta();
    let mut cells = Vec::new();
    for e in 0..ne {
        for z in 0..nz {
            let block: f64 = (0..nc).map(|c| d.prob_e(e, z, c)).sum();
            for c in 0..nc {
                let p = d.prob_e(e, z, c);
                if p > 0.0 {
                    cells.push((p, beta * (p / block).log2() + f.log2_value(z, c)));
                }
            }
        }
    }
    let k = cells.len();
    let total = sequence_count(k, n)?;

    // (probability, beta log2 mu + sum log2 F) per sequence
    let tail = total / k;
    let mut seqs: Vec<(f64, f64)> = (0..k)
        .into_par_iter()
        .flat_map_iter(|first| {
            let cells = &cells;
            (0..tail).map(move |rest| {
                let (mut p, mut t) = cells[first];
                let mut r = rest;
                for _ in 1..n {
                    let (q, s) = cells[r % k];
                    r /= k;
                    p *= q;
                    t += s;
                }
                (p, t)
            })
        })
        .collect();

    let mut mart = LogAccumulator::default();
    for (p, t) in &seqs {
        mart.push(p * t.exp2());
    }

    // event: t + log2 eps >= 0, counted with a small conservative slack
    seqs.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut prefix = Vec::with_capacity(seqs.len() + 1);
    let mut acc = LogAccumulator::default();
    prefix.push(0.0);
    for (p, _) in &seqs {
        acc.push(*p);
        prefix.push(acc.value());
    }
    let probabilities: Vec<(f64, f64)> = epsilon_grid
        .iter()
        .map(|&eps| {
            let cut = -eps.log2() - 1e-12;
            let count = seqs.partition_point(|(_, t)| *t >= cut);
            (eps, prefix[count])
        })
        .collect();
    let max_excess = probabilities.iter().map(|(e, p)| p - e).fold(f64::NEG_INFINITY, f64::max);
    Ok(Theorem1Check { n, probabilities, max_excess, supermartingale: mart.value() })
}

/// Experiment-model record for an explicit IID attack product: per trial,
/// the largest deviation of the conditional next-trial distribution given
/// the past and the full label sequence from the component `w(c,z|e_i)`,
/// the largest no-signalling violation of that conditional behaviour, and
/// the largest settings-independence residual.
#[derive(Debug, Clone, Serialize)]
pub struct Theta {
    pub conditional_deviation: Vec<f64>,
    pub memberships: Vec<f64>,
    pub settings_residuals: Vec<f64>,
}

impl Theta {
    pub fn holds(&self) -> bool {
        self.conditional_deviation
            .iter()
            .chain(&self.memberships)
            .chain(&self.settings_residuals)
            .all(|v| *v <= 1e-12)
    }
}

pub fn experiment_model_check(a: &AttackModel, n: usize) -> Result<Theta> {
    let d = &a.single_trial;
    let sc = d.scenario();
    let (nz, nc) = (sc.settings_count(), sc.outcome_count());
    let k = sc.len();
    let weights = d.label_weights();
    let settings = d.settings_marginal();
    let live: Vec<usize> = (0..d.label_count()).filter(|e| weights[*e] > 0.0).collect();
    if n == 0 {
        return Err(param("need at least one trial"));
    }
    sequence_count(k * live.len(), n)?;
    let total = k.pow(n as u32);

    let mut theta = Theta { conditional_deviation: vec![0.0; n], memberships: vec![0.0; n], settings_residuals: vec![0.0; n] };
    let mut labels = vec![0usize; n];
    for code in 0..live.len().pow(n as u32) {
        let mut r = code;
        for slot in labels.iter_mut().rev() {
            *slot = live[r % live.len()];
            r /= live.len();
        }
        // joint over (z, c) sequences given the label sequence, trial 0 most significant
        let seq: Vec<f64> = (0..total)
            .map(|idx| {
                let mut p = 1.0;
                let mut r = idx;
                for i in (0..n).rev() {
                    p *= d.slice_e(labels[i])[r % k] / weights[labels[i]];
                    r /= k;
                }
                p
            })
            .collect();
        for i in 0..n {
            let block = k.pow((n - 1 - i) as u32);
            let omega: Vec<f64> = d.slice_e(labels[i]).iter().map(|p| p / weights[labels[i]]).collect();
            for prefix in 0..k.pow(i as u32) {
                let base = prefix * k * block;
                let marg: Vec<f64> =
                    (0..k).map(|cell| seq[base + cell * block..base + (cell + 1) * block].iter().sum()).collect();
                let norm: f64 = marg.iter().sum();
                if norm <= 0.0 {
                    continue;
                }
                let cond: Vec<f64> = marg.iter().map(|m| m / norm).collect();
                let dev = cond.iter().zip(&omega).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                theta.conditional_deviation[i] = theta.conditional_deviation[i].max(dev);
                let mut b = vec![0.0; k];
                for z in 0..nz {
                    let pz: f64 = cond[z * nc..(z + 1) * nc].iter().sum();
                    theta.settings_residuals[i] = theta.settings_residuals[i].max((pz - settings[z]).abs());
                    for c in 0..nc {
                        b[z * nc + c] = cond[z * nc + c] / pz;
                    }
                }
                let report = no_signalling_check(&Behaviour::new(sc, b)?);
                theta.memberships[i] = theta.memberships[i].max(report.max_violation);
            }
        }
    }
    Ok(theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::{joint, pr_box, PrLabel, Scenario, SettingsDistribution};
    use crate::pef::{f_k, ns_222_extremals};

    fn pr() -> JointDistribution {
        joint(&pr_box(PrLabel::STANDARD), &SettingsDistribution::uniform(Scenario::CHSH)).unwrap()
    }

    #[test]
    fn constant_pef_single_trial() {
        // mu(c|z) = 1/2 on the PR support, so the event is 2^-beta >= 1/eps: never for eps < 1
        let f = Pef::constant(Scenario::CHSH, 1.0).unwrap();
        let check = theorem1_exact_check(&f, &pr(), 1, &[0.5]).unwrap();
        assert_eq!(check.probabilities, vec![(0.5, 0.0)]);
        assert!((check.supermartingale - 0.5).abs() < 1e-15);
    }

    #[test]
    fn f_k_passes_on_pr_products() {
        let ext = ns_222_extremals(&SettingsDistribution::uniform(Scenario::CHSH)).unwrap();
        let f = f_k(3, &ext).unwrap();
        let grid: Vec<f64> = (1..100).map(|i| i as f64 / 100.0).collect();
        for n in 1..=3 {
            let check = theorem1_exact_check(&f, &pr(), n, &grid).unwrap();
            assert!(check.holds(), "n = {n}: {check:?}");
        }
    }

    #[test]
    fn too_many_sequences() {
        let f = Pef::constant(Scenario::CHSH, 1.0).unwrap();
        assert!(matches!(theorem1_exact_check(&f, &pr(), 12, &[0.1]), Err(Error::Resource(_))));
    }
}
