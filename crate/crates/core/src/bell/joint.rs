use super::{Behaviour, Scenario, SettingsDistribution, NORM_TOL};
use crate::error::{check_len, domain, Result};

/// Joint distribution over outcomes and settings, optionally extended by a
/// side-information label `e`.
///
/// Entries are stored as `[e][z][c]`; without labels there is a single
/// implicit label.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    scenario: Scenario,
    labels: Vec<String>,
    probs: Vec<f64>,
}

/// `mu(c, z) = b(c|z) s(z)`.
pub fn joint(b: &Behaviour, s: &SettingsDistribution) -> Result<JointDistribution> {
    let sc = b.scenario();
    check_len(sc.settings_count(), s.len())?;
    let nc = sc.outcome_count();
    let probs = b
        .probs()
        .iter()
        .enumerate()
        .map(|(i, p)| p * s.probs()[i / nc])
        .collect();
    Ok(JointDistribution { scenario: sc, labels: Vec::new(), probs })
}

impl JointDistribution {
    pub fn new(scenario: Scenario, probs: Vec<f64>) -> Result<Self> {
        check_len(scenario.len(), probs.len())?;
        validate(&probs)?;
        Ok(JointDistribution { scenario, labels: Vec::new(), probs })
    }

    pub fn with_labels(scenario: Scenario, labels: Vec<String>, probs: Vec<f64>) -> Result<Self> {
        if labels.is_empty() {
            return Err(domain("label set must be non-empty"));
        }
        check_len(scenario.len() * labels.len(), probs.len())?;
        validate(&probs)?;
        Ok(JointDistribution { scenario, labels, probs })
    }

    /// `p(e, z, c) = w_e s(z) b_e(c|z)`.
    pub fn from_components(components: &[(String, f64, Behaviour)], s: &SettingsDistribution) -> Result<Self> {
        let first = components.first().ok_or_else(|| domain("no components"))?;
        let sc = first.2.scenario();
        let mut labels = Vec::with_capacity(components.len());
        let mut probs = Vec::with_capacity(sc.len() * components.len());
        for (label, w, b) in components {
            if b.scenario() != sc {
                return Err(domain("components have different scenarios"));
            }
            if *w < 0.0 {
                return Err(domain(format!("negative component weight {w}")));
            }
            let j = joint(b, s)?;
            labels.push(label.clone());
            probs.extend(j.probs.iter().map(|p| w * p));
        }
        JointDistribution::with_labels(sc, labels, probs)
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn has_labels(&self) -> bool {
        !self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label_count(&self) -> usize {
        self.labels.len().max(1)
    }

    /// Flat `[e][z][c]` entries.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob_e(&self, e: usize, z: usize, c: usize) -> f64 {
        self.probs[e * self.scenario.len() + self.scenario.index(z, c)]
    }

    /// Entries of label `e` in canonical `(z, c)` order.
    pub fn slice_e(&self, e: usize) -> &[f64] {
        let n = self.scenario.len();
        &self.probs[e * n..(e + 1) * n]
    }

    /// `p(c, z)` summed over labels, in canonical order.
    pub fn cz_marginal(&self) -> Vec<f64> {
        let n = self.scenario.len();
        let mut out = vec![0.0; n];
        for chunk in self.probs.chunks(n) {
            for (o, p) in out.iter_mut().zip(chunk) {
                *o += p;
            }
        }
        out
    }

    pub fn marginal_over_e(&self) -> JointDistribution {
        JointDistribution { scenario: self.scenario, labels: Vec::new(), probs: self.cz_marginal() }
    }

    pub fn settings_marginal(&self) -> Vec<f64> {
        let nc = self.scenario.outcome_count();
        self.cz_marginal().chunks(nc).map(|b| b.iter().sum()).collect()
    }

    pub fn label_weights(&self) -> Vec<f64> {
        self.probs.chunks(self.scenario.len()).map(|b| b.iter().sum()).collect()
    }

    /// `p(c | z, e)`, defined as zero when `p(z, e) = 0`.
    pub fn conditional(&self, e: usize, z: usize, c: usize) -> f64 {
        let nc = self.scenario.outcome_count();
        let base = e * self.scenario.len() + z * nc;
        let pze: f64 = self.probs[base..base + nc].iter().sum();
        if pze > 0.0 {
            self.probs[base + c] / pze
        } else {
            0.0
        }
    }

    /// The behaviour `p(c|z)` after summing out labels.
    pub fn behaviour(&self) -> Result<Behaviour> {
        conditional_behaviour(self.scenario, &self.cz_marginal())
    }

    /// The behaviour of the component with label `e`.
    pub fn component(&self, e: usize) -> Result<Behaviour> {
        conditional_behaviour(self.scenario, self.slice_e(e))
    }

    pub fn settings(&self) -> Result<SettingsDistribution> {
        SettingsDistribution::new(self.settings_marginal())
    }

    /// `w * self + (1 - w) * other` over the `(c, z)` marginals.
    pub fn mix(&self, other: &JointDistribution, w: f64) -> Result<JointDistribution> {
        if other.scenario != self.scenario {
            return Err(domain("mixing distributions of different scenarios"));
        }
        let probs = self
            .cz_marginal()
            .iter()
            .zip(other.cz_marginal())
            .map(|(a, b)| w * a + (1.0 - w) * b)
            .collect();
        JointDistribution::new(self.scenario, probs)
    }

    /// Total-variation distance between the `(c, z)` marginals.
    pub fn tv_distance(&self, other: &JointDistribution) -> f64 {
        0.5 * self
            .cz_marginal()
            .iter()
            .zip(other.cz_marginal())
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }
}

fn validate(probs: &[f64]) -> Result<()> {
    if let Some(p) = probs.iter().find(|p| !(**p >= 0.0 && p.is_finite())) {
        return Err(domain(format!("invalid probability {p}")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > NORM_TOL {
        return Err(domain(format!("joint probabilities sum to {total}")));
    }
    Ok(())
}

fn conditional_behaviour(sc: Scenario, cz: &[f64]) -> Result<Behaviour> {
    let nc = sc.outcome_count();
    let mut probs = Vec::with_capacity(cz.len());
    for (z, blk) in cz.chunks(nc).enumerate() {
        let pz: f64 = blk.iter().sum();
        if pz <= 0.0 {
            return Err(domain(format!("settings tuple {z} has zero probability")));
        }
        probs.extend(blk.iter().map(|p| p / pz));
    }
    Behaviour::new(sc, probs)
}
