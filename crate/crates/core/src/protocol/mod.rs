//! Trial streams: sampling, PEF accumulation and min-entropy certificates.

mod exact;
mod trace;

pub use exact::{experiment_model_check, theorem1_exact_check, Theorem1Check, Theta, SEQUENCE_LIMIT};
pub use trace::{attack_trace, empirical_behaviour, AttackTrace};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bell::{JointDistribution, Scenario};
use crate::error::{domain, param, Result};
use crate::pef::Pef;

/// Trials per independently seeded sampling block.
pub const BLOCK: usize = 1 << 16;

/// One time-ordered trial. `z` and `c` are canonical settings and outcome
/// indices; `e` is the side-information label when known.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialRecord {
    pub index: u64,
    pub z: usize,
    pub c: usize,
    pub e: Option<usize>,
}

/// Inverse-CDF sampler over the canonical `[e][z][c]` order.
struct Sampler {
    cdf: Vec<f64>,
}

impl Sampler {
    fn new(probs: &[f64]) -> Self {
        let mut acc = 0.0;
        let cdf = probs
            .iter()
            .map(|p| {
                acc += p.max(0.0);
                acc
            })
            .collect();
        Sampler { cdf }
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> usize {
        let total = *self.cdf.last().expect("non-empty distribution");
        let u = rng.random::<f64>() * total;
        self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1)
    }
}

fn block_rng(seed: u64, block: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(block as u64);
    rng
}

/// Draws `n` IID trials from `d`. Labelled distributions record `e`.
///
/// Trials are generated in blocks of [`BLOCK`], each from its own ChaCha20
/// stream, so the output depends only on `seed`.
pub fn simulate(d: &JointDistribution, n: usize, seed: u64) -> Vec<TrialRecord> {
    let sc = d.scenario();
    let cells = sc.len();
    let labelled = d.has_labels();
    let sampler = Sampler::new(d.probs());
    let blocks = n.div_ceil(BLOCK);
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = block_rng(seed, b);
            let start = b * BLOCK;
            let end = (start + BLOCK).min(n);
            (start..end)
                .map(|i| {
                    let k = sampler.draw(&mut rng);
                    let rest = k % cells;
                    TrialRecord {
                        index: i as u64 + 1,
                        z: rest / sc.outcome_count(),
                        c: rest % sc.outcome_count(),
                        e: labelled.then_some(k / cells),
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .concat()
}

/// Compensated (Neumaier) running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct LogAccumulator {
    sum: f64,
    comp: f64,
    count: u64,
}

impl LogAccumulator {
    pub fn push(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
        self.count += 1;
    }

    pub fn merge(&mut self, other: &LogAccumulator) {
        let count = self.count + other.count;
        self.push(other.sum);
        self.push(other.comp);
        self.count = count;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }

    pub fn count(&self) -> u64 {
        self.count
    }
}

fn check_record(sc: Scenario, t: &TrialRecord) -> Result<()> {
    if t.z >= sc.settings_count() || t.c >= sc.outcome_count() {
        return Err(domain(format!("trial {} is outside the {sc} alphabet", t.index)));
    }
    Ok(())
}

/// `sum_i log2 F(c_i, z_i)`, reduced block by block in trial order.
pub fn accumulate(f: &Pef, trials: &[TrialRecord]) -> Result<f64> {
    let sc = f.scenario();
    let parts = trials
        .par_chunks(BLOCK)
        .map(|chunk| {
            let mut acc = LogAccumulator::default();
            for t in chunk {
                check_record(sc, t)?;
                acc.push(f.log2_value(t.z, t.c));
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = LogAccumulator::default();
    for p in &parts {
        total.merge(p);
    }
    Ok(total.value())
}

/// Outcome of the protocol. Probabilities that may underflow are also given
/// in log2 form; bounds are only present when the run succeeded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub n: u64,
    pub beta: f64,
    pub epsilon: f64,
    pub p: f64,
    pub log2_p: f64,
    pub kappa: f64,
    /// `log2` of the PEF product.
    pub pef_product: f64,
    pub success: bool,
    pub bound_thm2: Option<f64>,
    pub bound_cor1: Option<f64>,
    pub smoothing: f64,
    pub input_digest: Option<String>,
}

/// Protocol parameters; `log2_p` is the success threshold in bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyParams {
    pub epsilon: f64,
    pub log2_p: f64,
    pub kappa: f64,
}

impl CertifyParams {
    fn validate(&self, sc: Scenario, n: usize) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(param(format!("epsilon must lie in (0,1), got {}", self.epsilon)));
        }
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return Err(param(format!("kappa must lie in (0,1], got {}", self.kappa)));
        }
        if self.log2_p.is_nan() || self.log2_p > 0.0 {
            return Err(param(format!("p must lie in (0,1], got 2^{}", self.log2_p)));
        }
        let floor = -(n as f64) * (sc.outcome_count() as f64).log2();
        if self.log2_p < floor * (1.0 + 1e-12) - 1e-12 {
            return Err(param(format!("p = 2^{} is below |C|^-n = 2^{floor}", self.log2_p)));
        }
        Ok(())
    }
}

/// Evaluates the success event `(eps prod F)^(-1/beta) <= p` and, on success,
/// the min-entropy bounds `log2 kappa - log2 p` and
/// `(1 + 1/beta) log2 kappa - log2 p`.
pub fn certify(f: &Pef, trials: &[TrialRecord], params: CertifyParams) -> Result<Certificate> {
    params.validate(f.scenario(), trials.len())?;
    let beta = f.beta();
    let log_prod = accumulate(f, trials)?;
    let CertifyParams { epsilon, log2_p, kappa } = params;
    let success = -(epsilon.log2() + log_prod) / beta <= log2_p;
    let lk = kappa.log2();
    Ok(Certificate {
        n: trials.len() as u64,
        beta,
        epsilon,
        p: log2_p.exp2(),
        log2_p,
        kappa,
        pef_product: log_prod,
        success,
        bound_thm2: success.then_some(lk - log2_p),
        bound_cor1: success.then(|| (1.0 + 1.0 / beta) * lk - log2_p),
        smoothing: epsilon / kappa,
        input_digest: None,
    })
}

/// Success threshold from the 5th percentile of the anticipated log-product
/// under a normal approximation: `log2 p = -(log2 eps + L05)/beta`, clamped
/// to `[log2 |C|^-n, 0]`.
pub fn choose_log2_p(f: &Pef, anticipated: &JointDistribution, n: usize, epsilon: f64) -> Result<f64> {
    if anticipated.scenario() != f.scenario() {
        return Err(domain("PEF and anticipated distribution have different scenarios"));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(param(format!("epsilon must lie in (0,1), got {epsilon}")));
    }
    let cz = anticipated.cz_marginal();
    let (mut m1, mut m2) = (0.0, 0.0);
    for (p, l) in cz.iter().zip(f.log2_values()) {
        if *p > 0.0 {
            m1 += p * l;
            m2 += p * l * l;
        }
    }
    let sd = (m2 - m1 * m1).max(0.0).sqrt();
    let n_f = n as f64;
    let l05 = n_f * m1 - 1.6448536269514722 * n_f.sqrt() * sd;
    let floor = -n_f * (f.scenario().outcome_count() as f64).log2();
    Ok((-(epsilon.log2() + l05) / f.beta()).clamp(floor, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::{joint, ld_box, pr_box, LdLabel, PrLabel, SettingsDistribution};

    fn pr_joint() -> JointDistribution {
        let sc = Scenario::CHSH;
        joint(&pr_box(PrLabel::STANDARD), &SettingsDistribution::uniform(sc)).unwrap()
    }

    #[test]
    fn empty_and_deterministic_streams() {
        assert!(simulate(&pr_joint(), 0, 1).is_empty());
        let sc = Scenario::CHSH;
        // fixed settings z = 2 with a deterministic box
        let b = ld_box(LdLabel::new(1, 0, 1, 1));
        let mut probs = vec![0.0; sc.len()];
        probs[sc.index(2, 0)..sc.index(3, 0)].copy_from_slice(b.block(2));
        let d = JointDistribution::new(sc, probs).unwrap();
        let trials = simulate(&d, 1000, 9);
        assert!(trials.iter().all(|t| t.z == 2 && t.c == trials[0].c));
    }

    #[test]
    fn simulation_is_seeded() {
        let d = pr_joint();
        assert_eq!(simulate(&d, 70_000, 5), simulate(&d, 70_000, 5));
        assert_ne!(simulate(&d, 1000, 5), simulate(&d, 1000, 6));
        let t = simulate(&d, 70_000, 5);
        assert!(t.iter().enumerate().all(|(i, r)| r.index == i as u64 + 1));
    }

    #[test]
    fn accumulate_basics() {
        let sc = Scenario::CHSH;
        let one = Pef::constant(sc, 0.1).unwrap();
        let trials = simulate(&pr_joint(), 500, 1);
        assert_eq!(accumulate(&one, &trials).unwrap(), 0.0);
        let two = Pef::new(sc, &[2.0; 16], 0.1).unwrap();
        assert_eq!(accumulate(&two, &trials[..1]).unwrap(), 1.0);
        let bad = [TrialRecord { index: 1, z: 4, c: 0, e: None }];
        assert!(accumulate(&one, &bad).is_err());
    }

    #[test]
    fn neumaier_beats_naive() {
        let mut acc = LogAccumulator::default();
        let vals = [1.0, 1e100, 1.0, -1e100];
        for v in vals {
            acc.push(v);
        }
        assert_eq!(acc.value(), 2.0);
    }

    #[test]
    fn certificate_arithmetic() {
        let sc = Scenario::CHSH;
        let f = Pef::new(sc, &[2.0; 16], 1.0).unwrap();
        let trials = simulate(&pr_joint(), 40, 3);
        let params = CertifyParams { epsilon: 0.5, log2_p: -7.0, kappa: 1.0 };
        let c = certify(&f, &trials, params).unwrap();
        assert!(c.success);
        assert_eq!(c.bound_cor1, Some(7.0));
        assert_eq!(c.bound_thm2, Some(7.0));

        let one = Pef::constant(sc, 1.0).unwrap();
        let c = certify(&one, &trials, CertifyParams { log2_p: 0.0, ..params }).unwrap();
        assert!(!c.success);
        assert!(c.bound_cor1.is_none());

        assert!(certify(&f, &trials, CertifyParams { log2_p: -81.0, ..params }).is_err());
        assert!(certify(&f, &trials, CertifyParams { epsilon: 1.0, ..params }).is_err());
        assert!(certify(&f, &trials, CertifyParams { kappa: 0.0, ..params }).is_err());
    }
}
