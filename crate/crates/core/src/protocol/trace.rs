use serde::Serialize;

use crate::bell::{Behaviour, Scenario};
use crate::entropy::AttackModel;
use crate::error::Result;

use super::{simulate, TrialRecord};

/// Sampled attack with realised statistics.
#[derive(Debug, Clone, Serialize)]
pub struct AttackTrace {
    #[serde(skip)]
    pub trials: Vec<TrialRecord>,
    pub labels: Vec<String>,
    pub label_counts: Vec<u64>,
    /// Largest `|p_hat(c|z) - p(c|z)|` of the e-marginal against the attack's
    /// marginal behaviour.
    pub marginal_deviation: f64,
    /// Same per label, against each component; `None` for unseen labels.
    pub component_deviation: Vec<Option<f64>>,
}

impl AttackTrace {
    pub fn label_fractions(&self) -> Vec<f64> {
        let n = self.trials.len().max(1) as f64;
        self.label_counts.iter().map(|c| *c as f64 / n).collect()
    }
}

/// Empirical conditional behaviour of the trials with label `e` (all trials
/// when `e` is `None`). Unseen settings get uniform outcomes.
pub fn empirical_behaviour(sc: Scenario, trials: &[TrialRecord], e: Option<usize>) -> Result<Behaviour> {
    let (nz, nc) = (sc.settings_count(), sc.outcome_count());
    let mut counts = vec![0u64; sc.len()];
    for t in trials.iter().filter(|t| e.is_none() || t.e == e) {
        counts[t.z * nc + t.c] += 1;
    }
    let mut probs = vec![0.0; sc.len()];
    for z in 0..nz {
        let row = &counts[z * nc..(z + 1) * nc];
        let total: u64 = row.iter().sum();
        for c in 0..nc {
            probs[z * nc + c] = if total == 0 { 1.0 / nc as f64 } else { row[c] as f64 / total as f64 };
        }
    }
    Behaviour::new(sc, probs)
}

/// Samples `n` trials of the IID attack: the label and then `(c, z)` given
/// the label, through one inverse-CDF draw over `[e][z][c]`.
pub fn attack_trace(a: &AttackModel, n: usize, seed: u64) -> Result<AttackTrace> {
    let d = &a.single_trial;
    let sc = d.scenario();
    let trials = simulate(d, n, seed);
    let mut label_counts = vec![0u64; d.label_count()];
    for t in &trials {
        label_counts[t.e.expect("labelled attack")] += 1;
    }
    let marginal_deviation = empirical_behaviour(sc, &trials, None)?.max_abs_diff(&d.behaviour()?);
    let component_deviation = (0..d.label_count())
        .map(|e| {
            if label_counts[e] == 0 {
                return Ok(None);
            }
            Ok(Some(empirical_behaviour(sc, &trials, Some(e))?.max_abs_diff(&d.component(e)?)))
        })
        .collect::<Result<_>>()?;
    Ok(AttackTrace { trials, labels: d.labels().to_vec(), label_counts, marginal_deviation, component_deviation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::{joint, pr_box, slice_behaviour, JointDistribution, PrLabel, SettingsDistribution, SliceCoords};
    use crate::entropy::optimal_iid_attack;

    #[test]
    fn single_component_matches_simulate() {
        let sc = Scenario::CHSH;
        let s = SettingsDistribution::uniform(sc);
        let b = pr_box(PrLabel::STANDARD);
        let labelled = JointDistribution::from_components(&[("PR:000".into(), 1.0, b.clone())], &s).unwrap();
        let a = AttackModel::new(labelled, 1).unwrap();
        let trace = attack_trace(&a, 5000, 17).unwrap();
        let plain = simulate(&joint(&b, &s).unwrap(), 5000, 17);
        assert!(trace.trials.iter().zip(&plain).all(|(x, y)| (x.index, x.z, x.c) == (y.index, y.z, y.c)));
    }

    #[test]
    fn optimal_attack_reproduces_target() {
        let sc = Scenario::CHSH;
        let s = SettingsDistribution::uniform(sc);
        let target = slice_behaviour(SliceCoords::new(2.6, 0.0).unwrap()).unwrap();
        let a = optimal_iid_attack(&target, &s).unwrap();
        let trace = attack_trace(&a, 20_000, 4).unwrap();
        assert!(trace.marginal_deviation < 0.03, "{}", trace.marginal_deviation);
        assert_eq!(trace.label_counts.iter().sum::<u64>(), 20_000);
    }
}
