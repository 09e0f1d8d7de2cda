//! Bell scenarios, behaviours and settings distributions.
//!
//! A behaviour for an `(n, m, k)` scenario is stored as a flat vector of
//! `(k*m)^n` conditional probabilities. Settings tuples are ordered
//! lexicographically with party 0 most significant, and within each settings
//! block the outcome tuples follow the same ordering. For `(2,2,2)` the flat
//! index is `(2x + y) * 4 + (2a + b)`.

mod boxes;
mod enumerate;
mod joint;
mod special;

pub use boxes::{chsh_value, correlators, ld_box, pr_box, slice_behaviour, LdLabel, PrLabel, SliceCoords};
pub use enumerate::{ld_enumerate, no_signalling_check, SignallingReport, LD_ENUMERATION_BUDGET};
pub use joint::{joint, JointDistribution};
pub use special::{ghz_mixture_322, nl_box_223, nl_box_223_relabelled, nl_box_232, nl_boxes_232, special_boxes, SpecialBoxes};

use serde::{Deserialize, Serialize};

use crate::error::{check_len, domain, Error, Result};

/// Tolerance applied when validating normalisation of user-provided vectors.
pub const NORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Scenario {
    pub parties: usize,
    pub settings: usize,
    pub outcomes: usize,
}

impl Scenario {
    /// The two-party, two-setting, two-outcome CHSH scenario.
    pub const CHSH: Scenario = Scenario { parties: 2, settings: 2, outcomes: 2 };

    pub fn new(parties: usize, settings: usize, outcomes: usize) -> Result<Self> {
        if parties == 0 || settings == 0 || outcomes == 0 {
            return Err(domain("scenario dimensions must be positive"));
        }
        let s = Scenario { parties, settings, outcomes };
        let per_party = settings
            .checked_mul(outcomes)
            .ok_or_else(|| Error::Resource("scenario size overflows".into()))?;
        u32::try_from(parties)
            .ok()
            .and_then(|n| per_party.checked_pow(n))
            .ok_or_else(|| Error::Resource(format!("scenario {s} is too large to index")))?;
        Ok(s)
    }

    pub fn settings_count(&self) -> usize {
        self.settings.pow(self.parties as u32)
    }

    pub fn outcome_count(&self) -> usize {
        self.outcomes.pow(self.parties as u32)
    }

    /// Number of coordinates of a behaviour, `(k*m)^n`.
    pub fn len(&self) -> usize {
        self.settings_count() * self.outcome_count()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, z: usize, c: usize) -> usize {
        z * self.outcome_count() + c
    }

    pub fn settings_tuple(&self, z: usize) -> Vec<usize> {
        digits(z, self.settings, self.parties)
    }

    pub fn outcome_tuple(&self, c: usize) -> Vec<usize> {
        digits(c, self.outcomes, self.parties)
    }

    pub fn settings_index(&self, tuple: &[usize]) -> usize {
        undigits(tuple, self.settings)
    }

    pub fn outcome_index(&self, tuple: &[usize]) -> usize {
        undigits(tuple, self.outcomes)
    }

    pub fn is_chsh(&self) -> bool {
        *self == Scenario::CHSH
    }

    pub(crate) fn require_chsh(&self) -> Result<()> {
        if self.is_chsh() {
            Ok(())
        } else {
            Err(domain(format!("operation requires the (2,2,2) scenario, got {self}")))
        }
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{})", self.parties, self.settings, self.outcomes)
    }
}

fn digits(mut v: usize, base: usize, len: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for slot in out.iter_mut().rev() {
        *slot = v % base;
        v /= base;
    }
    out
}

fn undigits(tuple: &[usize], base: usize) -> usize {
    tuple.iter().fold(0, |acc, &d| acc * base + d)
}

/// Conditional outcome probabilities `mu(c|z)` in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct Behaviour {
    scenario: Scenario,
    probs: Vec<f64>,
}

impl Behaviour {
    pub fn new(scenario: Scenario, probs: Vec<f64>) -> Result<Self> {
        check_len(scenario.len(), probs.len())?;
        if let Some(p) = probs.iter().find(|p| !(-NORM_TOL..=1.0 + NORM_TOL).contains(*p)) {
            return Err(domain(format!("probability {p} outside [0,1]")));
        }
        let nc = scenario.outcome_count();
        for (z, block) in probs.chunks(nc).enumerate() {
            let total: f64 = block.iter().sum();
            if (total - 1.0).abs() > NORM_TOL {
                return Err(domain(format!("settings block {z} sums to {total}, not 1")));
            }
        }
        Ok(Behaviour { scenario, probs })
    }

    /// Builds a behaviour from a function of `(settings tuple, outcome tuple)`.
    pub fn from_fn(scenario: Scenario, f: impl Fn(&[usize], &[usize]) -> f64) -> Result<Self> {
        let mut probs = Vec::with_capacity(scenario.len());
        for z in 0..scenario.settings_count() {
            let zt = scenario.settings_tuple(z);
            for c in 0..scenario.outcome_count() {
                probs.push(f(&zt, &scenario.outcome_tuple(c)));
            }
        }
        Behaviour::new(scenario, probs)
    }

    /// Every outcome tuple equally likely for every settings tuple.
    pub fn uniform(scenario: Scenario) -> Self {
        let p = 1.0 / scenario.outcome_count() as f64;
        Behaviour { scenario, probs: vec![p; scenario.len()] }
    }

    /// Convex combination `sum_i w_i * b_i`.
    pub fn mixture(parts: &[(f64, &Behaviour)]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| domain("empty mixture"))?;
        let scenario = first.1.scenario;
        let mut probs = vec![0.0; scenario.len()];
        let mut total = 0.0;
        for (w, b) in parts {
            if b.scenario != scenario {
                return Err(domain("mixture components have different scenarios"));
            }
            if *w < 0.0 {
                return Err(domain(format!("negative mixture weight {w}")));
            }
            total += w;
            for (p, q) in probs.iter_mut().zip(&b.probs) {
                *p += w * q;
            }
        }
        if (total - 1.0).abs() > NORM_TOL {
            return Err(domain(format!("mixture weights sum to {total}")));
        }
        Behaviour::new(scenario, probs)
    }

    /// `w * self + (1 - w) * other`.
    pub fn mix(&self, other: &Behaviour, w: f64) -> Result<Self> {
        Behaviour::mixture(&[(w, self), (1.0 - w, other)])
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_probs(self) -> Vec<f64> {
        self.probs
    }

    pub fn prob(&self, z: usize, c: usize) -> f64 {
        self.probs[self.scenario.index(z, c)]
    }

    pub fn block(&self, z: usize) -> &[f64] {
        let nc = self.scenario.outcome_count();
        &self.probs[z * nc..(z + 1) * nc]
    }

    pub fn max_abs_diff(&self, other: &Behaviour) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Distribution of settings tuples; every entry strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct SettingsDistribution {
    probs: Vec<f64>,
}

impl SettingsDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(domain("settings distribution is empty"));
        }
        if let Some(p) = probs.iter().find(|p| !(**p > 0.0)) {
            return Err(domain(format!("settings probability {p} is not strictly positive")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(domain(format!("settings probabilities sum to {total}")));
        }
        Ok(SettingsDistribution { probs })
    }

    pub fn uniform(scenario: Scenario) -> Self {
        let nz = scenario.settings_count();
        SettingsDistribution { probs: vec![1.0 / nz as f64; nz] }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// On-disk representation of a behaviour.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BehaviourFile {
    pub scenario: [usize; 3],
    pub order: String,
    pub probs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub settings: Option<Vec<f64>>,
}

impl BehaviourFile {
    pub fn from_parts(b: &Behaviour, s: Option<&SettingsDistribution>) -> Self {
        let sc = b.scenario();
        BehaviourFile {
            scenario: [sc.parties, sc.settings, sc.outcomes],
            order: "lex".into(),
            probs: b.probs().to_vec(),
            settings: s.map(|s| s.probs().to_vec()),
        }
    }

    /// Validates the file and returns the behaviour plus its settings
    /// distribution (uniform when absent).
    pub fn into_parts(self) -> Result<(Behaviour, SettingsDistribution)> {
        if self.order != "lex" {
            return Err(domain(format!("unsupported coordinate order {:?}", self.order)));
        }
        let [n, m, k] = self.scenario;
        let scenario = Scenario::new(n, m, k)?;
        let b = Behaviour::new(scenario, self.probs)?;
        let s = match self.settings {
            Some(p) => {
                check_len(scenario.settings_count(), p.len())?;
                SettingsDistribution::new(p)?
            }
            None => SettingsDistribution::uniform(scenario),
        };
        Ok((b, s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chsh_index_matches_table_layout() {
        let s = Scenario::CHSH;
        assert_eq!(s.len(), 16);
        assert_eq!(s.settings_tuple(2), vec![1, 0]);
        assert_eq!(s.outcome_tuple(1), vec![0, 1]);
        assert_eq!(s.index(s.settings_index(&[1, 1]), s.outcome_index(&[1, 0])), 14);
    }

    #[test]
    fn tuple_round_trip() {
        let s = Scenario::new(3, 3, 2).unwrap();
        for z in 0..s.settings_count() {
            assert_eq!(s.settings_index(&s.settings_tuple(z)), z);
        }
    }

    #[test]
    fn rejects_unnormalised() {
        let s = Scenario::CHSH;
        assert!(Behaviour::new(s, vec![0.3; 16]).is_err());
        assert!(Behaviour::new(s, vec![0.25; 15]).is_err());
        assert!(SettingsDistribution::new(vec![0.5, 0.5, 0.0, 0.0]).is_err());
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(Scenario::new(0, 2, 2).is_err());
        assert!(Scenario::new(64, 64, 64).is_err());
    }
}
