//! Concave PEF optimisation by a primal-dual interior-point method.
//!
//! The program minimises `-sum_i rho_i ln F_i` subject to
//! `A F + s = 1`, `s >= 0` (one row of `A` per extremal distribution) and
//! `F >= f_min`. Slacks and multipliers are kept as separate variables so
//! that nearly active constraints retain full precision.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{beta_threshold, constraint_value_linear, is_valid_pef, ns_222_extremals, Pef};
use crate::bell::{joint, pr_box, slice_behaviour, JointDistribution, PrLabel, Scenario, SettingsDistribution, SliceCoords};
use crate::error::{param, Error, Result};

const MAX_ITERATIONS: usize = 200;
const STEP_FRACTION: f64 = 0.995;
const MU_TOL: f64 = 1e-14;
const RESIDUAL_TOL: f64 = 1e-10;
/// Largest spread of the objective across restarts still called stable.
pub const RESTART_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct PefOptConfig {
    pub beta: f64,
    pub target: JointDistribution,
    pub n: f64,
    pub epsilon: f64,
    pub f_min: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl PefOptConfig {
    pub fn new(beta: f64, target: JointDistribution) -> Result<Self> {
        PefOptConfig { beta, target, n: 1e5, epsilon: 1e-4, f_min: 1e-12, restarts: 10, seed: 0 }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(param(format!("beta = {} must be positive", self.beta)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(param(format!("epsilon = {} outside (0, 1)", self.epsilon)));
        }
        if !(self.f_min > 0.0 && self.f_min <= 1.0) {
            return Err(param(format!("f_min = {} outside (0, 1]", self.f_min)));
        }
        if !(self.n >= 1.0) {
            return Err(param(format!("n = {} must be at least 1", self.n)));
        }
        if self.restarts == 0 {
            return Err(param("at least one restart is required"));
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    NotConverged,
}

#[derive(Debug, Clone)]
pub struct PefOptimum {
    pub pef: Pef,
    /// `E_rho[log2 F] / beta`.
    pub rate: f64,
    pub net_rate: f64,
    pub status: SolveStatus,
    /// Infinity norm of the Lagrangian gradient at the returned point.
    pub kkt_residual: f64,
    pub max_violation: f64,
    /// Spread of `E_rho[log2 F]` across restarts.
    pub restart_spread: f64,
}

struct Problem {
    d: usize,
    a: DMatrix<f64>,
    rho: DVector<f64>,
    f_min: f64,
}

struct Iterate {
    f: DVector<f64>,
    kkt: f64,
    converged: bool,
}

fn max_step(x: &DVector<f64>, dx: &DVector<f64>) -> f64 {
    x.iter()
        .zip(dx.iter())
        .filter(|(_, d)| **d < 0.0)
        .map(|(v, d)| -v / d)
        .fold(1.0, f64::min)
}

impl Problem {
    fn new(cfg: &PefOptConfig, extremals: &[JointDistribution]) -> Result<Self> {
        let sc = cfg.target.scenario();
        let d = sc.len();
        let nc = sc.outcome_count();
        let mut a = DMatrix::zeros(extremals.len(), d);
        for (j, s) in extremals.iter().enumerate() {
            if s.scenario() != sc {
                return Err(param("extremal scenario does not match the target"));
            }
            let cz = s.cz_marginal();
            for (z, blk) in cz.chunks(nc).enumerate() {
                let pz: f64 = blk.iter().sum();
                for (c, p) in blk.iter().enumerate() {
                    if *p > 0.0 {
                        a[(j, z * nc + c)] = p * (p / pz).powf(cfg.beta);
                    }
                }
            }
        }
        Ok(Problem { d, a, rho: DVector::from_vec(cfg.target.cz_marginal()), f_min: cfg.f_min })
    }

    fn strictly_feasible(&self, f: &DVector<f64>) -> bool {
        f.iter().all(|v| *v > self.f_min) && (&self.a * f).iter().all(|v| *v < 1.0)
    }

    fn dual_residual(&self, f: &DVector<f64>, lambda: &DVector<f64>, nu: &DVector<f64>) -> DVector<f64> {
        let grad = DVector::from_fn(self.d, |i, _| -self.rho[i] / f[i]);
        grad + self.a.tr_mul(lambda) - nu
    }

    fn solve_from(&self, f0: DVector<f64>) -> Iterate {
        let m = self.a.nrows();
        let d = self.d;
        let mut f = f0;
        let mut s = DVector::from_fn(m, |j, _| 1.0 - self.a.row(j).dot(&f.transpose()));
        let mut h = f.map(|v| v - self.f_min);
        let mut lambda = s.map(|v| 1.0 / v);
        let mut nu = h.map(|v| 1.0 / v);
        let count = (m + d) as f64;
        let mut converged = false;

        for _ in 0..MAX_ITERATIONS {
            let rd = self.dual_residual(&f, &lambda, &nu);
            let rp = &self.a * &f + &s - DVector::from_element(m, 1.0);
            let mu = (lambda.dot(&s) + nu.dot(&h)) / count;
            if mu < MU_TOL && rd.amax() < RESIDUAL_TOL && rp.amax() < 1e-13 {
                converged = true;
                break;
            }
            let ls = lambda.component_div(&s);
            let nh = nu.component_div(&h);
            let mut mat = self.a.tr_mul(&DMatrix::from_diagonal(&ls)) * &self.a;
            for i in 0..d {
                mat[(i, i)] += self.rho[i] / (f[i] * f[i]) + nh[i];
            }
            let Some(chol) = mat.cholesky() else { break };

            // Complementarity targets `lambda s -> target`, `nu h -> target`, with an
            // optional second-order correction from the affine step.
            let direction = |target: f64, corr_s: Option<(&DVector<f64>, &DVector<f64>)>| {
                let mut comp_s = DVector::from_fn(m, |j, _| target - lambda[j] * s[j]);
                let comp_h = DVector::from_fn(d, |i, _| target - nu[i] * h[i]);
                if let Some((ds, dl)) = corr_s {
                    comp_s -= ds.component_mul(dl);
                }
                let rhs_s = (&comp_s + lambda.component_mul(&rp)).component_div(&s);
                let rhs = -&rd - self.a.tr_mul(&rhs_s) + comp_h.component_div(&h);
                let df = chol.solve(&rhs);
                let ds = -&rp - &self.a * &df;
                let dl = (&comp_s - lambda.component_mul(&ds)).component_div(&s);
                let dn = (&comp_h - nu.component_mul(&df)).component_div(&h);
                (df, ds, dl, dn)
            };

            let (df_a, ds_a, dl_a, dn_a) = direction(0.0, None);
            let alpha_a = max_step(&s, &ds_a)
                .min(max_step(&h, &df_a))
                .min(max_step(&lambda, &dl_a))
                .min(max_step(&nu, &dn_a));
            let mu_aff = ((&lambda + alpha_a * &dl_a).dot(&(&s + alpha_a * &ds_a))
                + (&nu + alpha_a * &dn_a).dot(&(&h + alpha_a * &df_a)))
                / count;
            let sigma = (mu_aff / mu).powi(3).clamp(0.0, 1.0);
            let (df, ds, dl, dn) = direction(sigma * mu, Some((&ds_a, &dl_a)));

            let alpha = (STEP_FRACTION
                * max_step(&s, &ds).min(max_step(&h, &df)).min(max_step(&lambda, &dl)).min(max_step(&nu, &dn)))
            .min(1.0);
            f += alpha * &df;
            s += alpha * &ds;
            lambda += alpha * &dl;
            nu += alpha * &dn;
            h = f.map(|v| v - self.f_min);
        }
        let kkt = self.dual_residual(&f, &lambda, &nu).amax();
        Iterate { f, kkt, converged }
    }

    fn objective(&self, f: &DVector<f64>) -> f64 {
        (0..self.d).filter(|&i| self.rho[i] > 0.0).map(|i| self.rho[i] * f[i].log2()).sum()
    }

    fn max_violation(&self, f: &DVector<f64>) -> f64 {
        let lower = f.iter().map(|v| self.f_min - v).fold(0.0f64, f64::max);
        (&self.a * f).iter().map(|v| v - 1.0).fold(lower, f64::max)
    }
}

/// Maximises `E_rho[log2 F]` over PEFs with power `cfg.beta` valid at each
/// extremal distribution.
pub fn optimize_pef(cfg: &PefOptConfig, extremals: &[JointDistribution]) -> Result<PefOptimum> {
    let cfg = cfg.clone().validated()?;
    let problem = Problem::new(&cfg, extremals)?;
    if problem.rho.iter().all(|p| *p <= 0.0) {
        return Err(param("target distribution has empty support"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut runs = Vec::with_capacity(cfg.restarts);
    for r in 0..cfg.restarts {
        let start = if r == 0 {
            DVector::from_element(problem.d, 0.5)
        } else {
            DVector::from_fn(problem.d, |_, _| 0.9 * rng.random_range(0.05..1.0))
        };
        if !problem.strictly_feasible(&start) {
            return Err(Error::Numerical("restart point is not strictly feasible".into()));
        }
        runs.push(problem.solve_from(start));
    }
    let objectives: Vec<f64> = runs.iter().map(|r| problem.objective(&r.f)).collect();
    let best = (0..runs.len()).max_by(|&i, &j| objectives[i].total_cmp(&objectives[j])).expect("at least one run");
    let spread = objectives.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v))
        - objectives.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    let run = &runs[best];
    let max_violation = problem.max_violation(&run.f);
    let status = if runs.iter().all(|r| r.converged) && spread <= RESTART_TOL && max_violation <= 1e-9 {
        SolveStatus::Converged
    } else {
        SolveStatus::NotConverged
    };
    let sc = cfg.target.scenario();
    let pef = Pef::new(sc, run.f.as_slice(), cfg.beta)?;
    let rate = objectives[best] / cfg.beta;
    Ok(PefOptimum {
        net_rate: rate + cfg.epsilon.log2() / (cfg.n * cfg.beta),
        rate,
        pef,
        status,
        kkt_residual: run.kkt,
        max_violation,
        restart_spread: spread,
    })
}

#[derive(Debug, Clone)]
pub struct BetaThresholdReport {
    pub threshold: f64,
    pub betas: Vec<f64>,
    /// Largest entrywise difference between optimisers across `betas`.
    pub max_deviation: f64,
    /// PR-constraint value of the counterexample at `threshold - probe`.
    pub counterexample_below: f64,
    /// PR-constraint value of the counterexample at the threshold.
    pub counterexample_at: f64,
    pub probe: f64,
    /// Distinct LD-constraint values of the counterexample.
    pub counterexample_ld_values: Vec<f64>,
}

impl BetaThresholdReport {
    pub fn flips_at_threshold(&self) -> bool {
        self.counterexample_at <= 1.0 + 1e-12 && self.counterexample_below > 1.0
    }
}

/// `F(abxy) = [a ^ b = xy] / (3 s(xy))`, feasible exactly from the threshold up.
pub fn threshold_counterexample(s: &SettingsDistribution) -> Vec<f64> {
    (0..16)
        .map(|i| {
            let (z, c) = (i / 4, i % 4);
            let xy = (z >> 1) & z & 1;
            if (c >> 1) ^ (c & 1) == xy {
                1.0 / (3.0 * s.probs()[z])
            } else {
                0.0
            }
        })
        .collect()
}

/// Checks that optimisers coincide for powers above `log2(4/3)` and that the
/// counterexample changes feasibility at the threshold.
pub fn beta_threshold_report(target: Option<&JointDistribution>, probe: f64) -> Result<BetaThresholdReport> {
    let s = SettingsDistribution::uniform(Scenario::CHSH);
    let anchor;
    let target = match target {
        Some(t) => t,
        None => {
            anchor = joint(&slice_behaviour(SliceCoords::new(2.6, 0.0)?)?, &s)?;
            &anchor
        }
    };
    let extremals = ns_222_extremals(&s)?;
    let threshold = beta_threshold();
    let betas = vec![threshold, 0.5, 0.7, 1.0];
    let mut optima = Vec::with_capacity(betas.len());
    for &beta in &betas {
        let opt = optimize_pef(&PefOptConfig::new(beta, target.clone())?, &extremals)?;
        if opt.status != SolveStatus::Converged {
            return Err(Error::NonConvergence(format!("optimiser did not converge at beta = {beta}")));
        }
        debug_assert!(is_valid_pef(&opt.pef, &extremals).valid);
        optima.push(opt.pef.values());
    }
    let mut max_deviation: f64 = 0.0;
    for v in &optima[1..] {
        for (a, b) in v.iter().zip(&optima[0]) {
            max_deviation = max_deviation.max((a - b).abs());
        }
    }
    let f = threshold_counterexample(&s);
    let pr = joint(&pr_box(PrLabel::STANDARD), &s)?;
    let mut ld_values: Vec<f64> = extremals[8..]
        .iter()
        .map(|e| constraint_value_linear(&f, threshold - probe, e))
        .collect();
    ld_values.sort_by(f64::total_cmp);
    ld_values.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    Ok(BetaThresholdReport {
        threshold,
        betas,
        max_deviation,
        counterexample_below: constraint_value_linear(&f, threshold - probe, &pr),
        counterexample_at: constraint_value_linear(&f, threshold, &pr),
        probe,
        counterexample_ld_values: ld_values,
    })
}
