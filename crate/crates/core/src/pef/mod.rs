//! Probability estimation factors: validity, rates, entropy estimators and
//! robustness.
//!
//! A [`Pef`] stores `log2 F` rather than `F` so that factors extremely close
//! to one (small powers) keep full relative precision.

mod optimize;
mod sweep;

pub use optimize::{beta_threshold_report, optimize_pef, BetaThresholdReport, PefOptConfig, PefOptimum, SolveStatus};
pub use sweep::{argmax_beta, beta_grid, rate_on_slice, sweep_rates, zero_rate_intercept, SweepRow};

use serde::{Deserialize, Serialize};

use crate::bell::{joint, ld_box, pr_box, JointDistribution, LdLabel, PrLabel, Scenario, SettingsDistribution};
use crate::entropy::{cond_shannon, Conditioning};
use crate::error::{check_len, domain, param, Error, Result};

/// Slack accepted on the validity constraints.
pub const VALIDITY_TOL: f64 = 1e-9;

/// Smallest power at which the PR-box constraints are implied by the LD ones.
pub fn beta_threshold() -> f64 {
    (4.0f64 / 3.0).log2()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pef {
    scenario: Scenario,
    log2_values: Vec<f64>,
    beta: f64,
}

impl Pef {
    pub fn new(scenario: Scenario, values: &[f64], beta: f64) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(domain(format!("PEF value {v} is not strictly positive")));
        }
        Pef::from_log2(scenario, values.iter().map(|v| v.log2()).collect(), beta)
    }

    pub fn from_log2(scenario: Scenario, log2_values: Vec<f64>, beta: f64) -> Result<Self> {
        check_len(scenario.len(), log2_values.len())?;
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(param(format!("power beta = {beta} must be positive")));
        }
        if log2_values.iter().any(|v| !v.is_finite()) {
            return Err(domain("PEF values must be finite and positive"));
        }
        Ok(Pef { scenario, log2_values, beta })
    }

    /// `F = 1` everywhere.
    pub fn constant(scenario: Scenario, beta: f64) -> Result<Self> {
        Pef::from_log2(scenario, vec![0.0; scenario.len()], beta)
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn log2_values(&self) -> &[f64] {
        &self.log2_values
    }

    pub fn values(&self) -> Vec<f64> {
        self.log2_values.iter().map(|v| v.exp2()).collect()
    }

    pub fn log2_value(&self, z: usize, c: usize) -> f64 {
        self.log2_values[self.scenario.index(z, c)]
    }

    /// `F^gamma` as a PEF with power `gamma * beta`.
    pub fn powered(&self, gamma: f64) -> Result<Pef> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(param(format!("gamma = {gamma} outside (0, 1]")));
        }
        Pef::from_log2(self.scenario, self.log2_values.iter().map(|v| v * gamma).collect(), self.beta * gamma)
    }

    pub fn to_file(&self, extremals: &[JointDistribution]) -> PefFile {
        PefFile {
            beta: self.beta,
            values: self.values(),
            model: "ns-222".into(),
            validity: PefFileValidity { worst_constraint: is_valid_pef(self, extremals).worst_constraint },
            log2_values: Some(self.log2_values.clone()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PefFileValidity {
    pub worst_constraint: f64,
}

/// On-disk PEF; `log2_values`, when present, takes precedence over `values`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PefFile {
    pub beta: f64,
    pub values: Vec<f64>,
    pub model: String,
    pub validity: PefFileValidity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log2_values: Option<Vec<f64>>,
}

impl PefFile {
    pub fn into_pef(self) -> Result<Pef> {
        if self.model != "ns-222" {
            return Err(domain(format!("unsupported PEF model {:?}", self.model)));
        }
        match self.log2_values {
            Some(l) => Pef::from_log2(Scenario::CHSH, l, self.beta),
            None => Pef::new(Scenario::CHSH, &self.values, self.beta),
        }
    }
}

/// The 8 PR and 16 LD joint distributions of the `(2,2,2)` no-signalling model.
pub fn ns_222_extremals(s: &SettingsDistribution) -> Result<Vec<JointDistribution>> {
    let mut out = Vec::with_capacity(24);
    for l in PrLabel::all() {
        out.push(joint(&pr_box(l), s)?);
    }
    for l in LdLabel::all() {
        out.push(joint(&ld_box(l), s)?);
    }
    Ok(out)
}

/// Names matching [`ns_222_extremals`].
pub fn ns_222_extremal_labels() -> Vec<String> {
    PrLabel::all()
        .map(|l| format!("PR:{l}"))
        .chain(LdLabel::all().map(|l| format!("LD:{l}")))
        .collect()
}

/// `E_sigma[F sigma(C|Z)^beta] - 1`, evaluated as a sum of `expm1` terms.
pub fn constraint_excess(log2_values: &[f64], beta: f64, sigma: &JointDistribution) -> f64 {
    let cz = sigma.cz_marginal();
    let nc = sigma.scenario().outcome_count();
    let mut total = 0.0;
    for (blk_f, blk_p) in log2_values.chunks(nc).zip(cz.chunks(nc)) {
        let pz: f64 = blk_p.iter().sum();
        for (lf, p) in blk_f.iter().zip(blk_p) {
            if *p > 0.0 {
                let exponent = lf + beta * (p / pz).log2();
                total += p * (exponent * std::f64::consts::LN_2).exp_m1();
            }
        }
    }
    total
}

/// `E_sigma[F sigma(C|Z)^beta]` for a nonnegative, possibly zero, score.
pub fn constraint_value_linear(values: &[f64], beta: f64, sigma: &JointDistribution) -> f64 {
    let cz = sigma.cz_marginal();
    let nc = sigma.scenario().outcome_count();
    let mut total = 0.0;
    for (blk_f, blk_p) in values.chunks(nc).zip(cz.chunks(nc)) {
        let pz: f64 = blk_p.iter().sum();
        for (f, p) in blk_f.iter().zip(blk_p) {
            if *p > 0.0 {
                total += f * p * (p / pz).powf(beta);
            }
        }
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PefValidity {
    pub valid: bool,
    pub worst_constraint: f64,
    pub worst_index: usize,
}

/// Checks the defining inequality at each extremal distribution.
pub fn is_valid_pef(f: &Pef, extremals: &[JointDistribution]) -> PefValidity {
    let (worst_index, excess) = extremals
        .iter()
        .map(|s| constraint_excess(&f.log2_values, f.beta, s))
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((0, -1.0));
    PefValidity { valid: excess <= VALIDITY_TOL, worst_constraint: 1.0 + excess, worst_index }
}

/// `E_d[log2 F] / beta`.
pub fn logprob_rate(f: &Pef, d: &JointDistribution) -> f64 {
    expected_log2(f.log2_values(), d) / f.beta
}

/// Log-prob rate with the finite-`n` penalty `log2(eps) / (n beta)`.
pub fn net_logprob_rate(f: &Pef, d: &JointDistribution, n: f64, epsilon: f64) -> f64 {
    logprob_rate(f, d) + epsilon.log2() / (n * f.beta)
}

fn expected_log2(log2_values: &[f64], d: &JointDistribution) -> f64 {
    d.cz_marginal()
        .iter()
        .zip(log2_values)
        .filter(|(p, _)| **p > 0.0)
        .map(|(p, l)| p * l)
        .sum()
}

/// Affine score `K` bounded above by the conditional surprisal on the model.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyEstimator {
    scenario: Scenario,
    values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorCheck {
    pub valid: bool,
    /// Largest `E_sigma[K] - H_sigma(C|Z)` over the extremals.
    pub worst_gap: f64,
}

impl EntropyEstimator {
    pub fn new(scenario: Scenario, values: Vec<f64>) -> Result<Self> {
        check_len(scenario.len(), values.len())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(domain("estimator values must be finite"));
        }
        Ok(EntropyEstimator { scenario, values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn expectation(&self, d: &JointDistribution) -> f64 {
        d.cz_marginal().iter().zip(&self.values).map(|(p, k)| p * k).sum()
    }

    pub fn check(&self, extremals: &[JointDistribution]) -> EstimatorCheck {
        let worst_gap = extremals
            .iter()
            .map(|s| self.expectation(s) - cond_shannon(s, Conditioning::Settings))
            .fold(f64::NEG_INFINITY, f64::max);
        EstimatorCheck { valid: worst_gap <= 1e-12, worst_gap }
    }
}

/// `K(abxy) = 1` if `a ^ b = xy`, else `-3`.
pub fn k_star() -> EntropyEstimator {
    let sc = Scenario::CHSH;
    let values = (0..16)
        .map(|i| {
            let (z, c) = (i / 4, i % 4);
            let xy = (z >> 1) & z & 1;
            let ab = (c >> 1) ^ (c & 1);
            if ab == xy {
                1.0
            } else {
                -3.0
            }
        })
        .collect();
    EntropyEstimator { scenario: sc, values }
}

/// `F = 2^((K - eps) gamma)` with power `gamma`, using the largest `gamma`
/// found by bisection for which `F` is valid at every extremal.
pub fn pef_from_estimator(k: &EntropyEstimator, eps: f64, extremals: &[JointDistribution]) -> Result<Pef> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(param(format!("eps = {eps} outside (0, 1/2)")));
    }
    let shifted: Vec<f64> = k.values.iter().map(|v| v - eps).collect();
    let log2_at = |gamma: f64| -> Vec<f64> { shifted.iter().map(|v| v * gamma).collect() };
    let feasible = |gamma: f64| {
        let l = log2_at(gamma);
        extremals.iter().all(|s| constraint_excess(&l, gamma, s) <= 0.0)
    };
    let (mut lo, mut hi) = if feasible(1.0) {
        let mut lo = 1.0;
        loop {
            if lo > 1e18 {
                return Err(Error::Numerical("estimator PEF stays valid for unbounded powers".into()));
            }
            if !feasible(2.0 * lo) {
                break (lo, 2.0 * lo);
            }
            lo *= 2.0;
        }
    } else {
        let mut hi = 1.0;
        loop {
            let lo = hi / 2.0;
            if lo < 1e-300 {
                return Err(Error::Numerical("no feasible power found for estimator".into()));
            }
            if feasible(lo) {
                break (lo, hi);
            }
            hi = lo;
        }
    };
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Pef::from_log2(k.scenario, log2_at(lo), lo)
}

/// The estimator PEF `F_k` built from `K*` with `eps = e^{-k}`.
pub fn f_k(k: u32, extremals: &[JointDistribution]) -> Result<Pef> {
    pef_from_estimator(&k_star(), (-(k as f64)).exp(), extremals)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustnessReport {
    pub bound: f64,
    pub actual_gap: f64,
    pub tv: f64,
    pub radius: f64,
    pub holds: bool,
}

/// Compares log-prob rates at `rho` and `sigma` against `(L - l) d_TV`, where
/// `L` and `l` bound `log2 G` for `F = G^beta`.
pub fn robustness(f: &Pef, rho: &JointDistribution, sigma: &JointDistribution) -> Result<RobustnessReport> {
    let g: Vec<f64> = f.log2_values.iter().map(|v| v / f.beta).collect();
    let hi = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = g.iter().copied().fold(f64::INFINITY, f64::min);
    let span = hi - lo;
    if span <= 1e-15 * hi.abs().max(1.0) {
        return Err(domain("robustness bound is undefined for a constant PEF"));
    }
    let o_rho = expected_log2(&g, rho);
    let o_sigma = expected_log2(&g, sigma);
    let tv = rho.tv_distance(sigma);
    let bound = span * tv;
    let actual_gap = (o_rho - o_sigma).abs();
    Ok(RobustnessReport { bound, actual_gap, tv, radius: o_rho / span, holds: actual_gap <= bound + 1e-12 })
}
