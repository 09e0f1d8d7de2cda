//! Conditional entropies of joint distributions and optimal IID attacks.

use serde::{Deserialize, Serialize};

use crate::bell::{
    ld_box, ld_enumerate, no_signalling_check, Behaviour, JointDistribution, LdLabel,
    SettingsDistribution,
};
use crate::error::{domain, param, Error, Result};
use crate::polytope::{decompose_nonlocal, local_membership, AttackDecomposition, Membership};

/// Which variables the outcome entropy is conditioned on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conditioning {
    Settings,
    SettingsAndE,
}

/// A table `p[e][z][c]` with arbitrary dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Table<'a> {
    pub labels: usize,
    pub settings: usize,
    pub outcomes: usize,
    pub probs: &'a [f64],
}

impl Table<'_> {
    fn blocks(&self) -> impl Iterator<Item = &[f64]> {
        self.probs.chunks(self.outcomes)
    }

    /// `-sum p(c,y) log2 p(c|y)` where `y` runs over the `(e, z)` blocks.
    pub fn cond_shannon(&self) -> f64 {
        let mut h = 0.0;
        for blk in self.blocks() {
            let py: f64 = blk.iter().sum();
            if py <= 0.0 {
                continue;
            }
            for p in blk.iter().filter(|p| **p > 0.0) {
                h -= p * (p / py).log2();
            }
        }
        h.max(0.0)
    }

    /// `-log2 sum_y max_c p(c,y)`.
    pub fn minentropy_avg(&self) -> f64 {
        let guess: f64 = self.blocks().map(|b| b.iter().copied().fold(0.0, f64::max)).sum();
        0.0 - guess.log2()
    }

    /// `-log2 max_{c,y} p(c|y)` over blocks of positive probability.
    pub fn minentropy_worst(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for blk in self.blocks() {
            let py: f64 = blk.iter().sum();
            if py > 0.0 {
                worst = worst.max(blk.iter().copied().fold(0.0, f64::max) / py);
            }
        }
        0.0 - worst.log2()
    }
}

fn table(d: &JointDistribution) -> Table<'_> {
    let sc = d.scenario();
    Table { labels: d.label_count(), settings: sc.settings_count(), outcomes: sc.outcome_count(), probs: d.probs() }
}

/// Conditional Shannon entropy of the outcomes in bits.
pub fn cond_shannon(d: &JointDistribution, on: Conditioning) -> f64 {
    match on {
        Conditioning::SettingsAndE => table(d).cond_shannon(),
        Conditioning::Settings => table(&d.marginal_over_e()).cond_shannon(),
    }
}

/// Average-guessing conditional min-entropy given settings and `e`.
pub fn minentropy_avg(d: &JointDistribution) -> f64 {
    table(d).minentropy_avg()
}

/// Worst-case conditional min-entropy given settings and `e`.
pub fn minentropy_worst(d: &JointDistribution) -> f64 {
    table(d).minentropy_worst()
}

/// `n`-fold IID product of a joint distribution, indexed by label, settings
/// and outcome sequences with trial 0 as the most significant digit.
#[derive(Debug, Clone)]
pub struct IidPower {
    pub trials: usize,
    pub labels: usize,
    pub settings: usize,
    pub outcomes: usize,
    pub probs: Vec<f64>,
}

/// Upper bound on the number of enumerated sequence cells.
pub const ENUMERATION_LIMIT: usize = 1 << 24;

impl IidPower {
    pub fn new(d: &JointDistribution, n: usize) -> Result<Self> {
        let t = table(d);
        let per_trial = t.labels * t.settings * t.outcomes;
        u32::try_from(n)
            .ok()
            .and_then(|n| per_trial.checked_pow(n))
            .filter(|c| *c <= ENUMERATION_LIMIT)
            .ok_or_else(|| Error::Resource(format!("{per_trial}^{n} sequence cells exceed the enumeration limit")))?;
        let (ne, nz, nc) = (t.labels.pow(n as u32), t.settings.pow(n as u32), t.outcomes.pow(n as u32));
        let mut probs = vec![0.0; ne * nz * nc];
        for (idx, slot) in probs.iter_mut().enumerate() {
            let c = idx % nc;
            let z = (idx / nc) % nz;
            let e = idx / (nc * nz);
            let mut p = 1.0;
            for i in (0..n).rev() {
                let shift = (n - 1 - i) as u32;
                let ci = c / t.outcomes.pow(shift) % t.outcomes;
                let zi = z / t.settings.pow(shift) % t.settings;
                let ei = e / t.labels.pow(shift) % t.labels;
                p *= t.probs[(ei * t.settings + zi) * t.outcomes + ci];
                if p == 0.0 {
                    break;
                }
            }
            *slot = p;
        }
        Ok(IidPower { trials: n, labels: ne, settings: nz, outcomes: nc, probs })
    }

    pub fn table(&self) -> Table<'_> {
        Table { labels: self.labels, settings: self.settings, outcomes: self.outcomes, probs: &self.probs }
    }
}

/// Single-trial distribution of an IID attack over `(c, z, e)`.
#[derive(Debug, Clone)]
pub struct AttackModel {
    pub single_trial: JointDistribution,
    pub trials: usize,
}

impl AttackModel {
    pub fn new(single_trial: JointDistribution, trials: usize) -> Result<Self> {
        if trials == 0 {
            return Err(param("attack must cover at least one trial"));
        }
        if !single_trial.has_labels() {
            return Err(domain("attack distribution needs side-information labels"));
        }
        Ok(AttackModel { single_trial, trials })
    }

    pub fn weights(&self) -> Vec<(String, f64)> {
        self.single_trial.labels().iter().cloned().zip(self.single_trial.label_weights()).collect()
    }

    pub fn entropy_bits_per_trial(&self) -> f64 {
        cond_shannon(&self.single_trial, Conditioning::SettingsAndE)
    }

    pub fn to_report(&self, target: Option<String>) -> AttackReport {
        AttackReport {
            target,
            components: self.weights().into_iter().map(|(e, weight)| AttackComponent { e, weight }).collect(),
            entropy_bits_per_trial: self.entropy_bits_per_trial(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttackComponent {
    pub e: String,
    pub weight: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttackReport {
    pub target: Option<String>,
    pub components: Vec<AttackComponent>,
    pub entropy_bits_per_trial: f64,
}

/// `-log2 sum_{z,e} max_c w(c,z,e)` for the single-trial attack distribution.
pub fn iid_minentropy_rate(a: &AttackModel) -> f64 {
    minentropy_avg(&a.single_trial)
}

/// IID attack of minimal conditional Shannon entropy reproducing `target`.
pub fn optimal_iid_attack(target: &Behaviour, s: &SettingsDistribution) -> Result<AttackModel> {
    target.scenario().require_chsh()?;
    let ns = no_signalling_check(target);
    if !ns.no_signalling {
        return Err(domain(format!("target is signalling (violation {:e})", ns.max_violation)));
    }
    let components = match decompose_nonlocal(target) {
        Ok(dec) => attack_components(&dec),
        Err(Error::Domain(_)) => local_components(target)?,
        Err(e) => return Err(e),
    };
    AttackModel::new(JointDistribution::from_components(&components, s)?, 1)
}

fn attack_components(dec: &AttackDecomposition) -> Vec<(String, f64, Behaviour)> {
    dec.components().into_iter().filter(|(_, w, _)| *w > 0.0).collect()
}

fn local_components(target: &Behaviour) -> Result<Vec<(String, f64, Behaviour)>> {
    let Membership::Local { weights } = local_membership(target)? else {
        return Err(Error::Numerical("behaviour satisfies every CHSH inequality but failed membership".into()));
    };
    let enumerated = ld_enumerate(target.scenario())?;
    let mut out = Vec::new();
    for (w, b) in weights.iter().zip(&enumerated) {
        if *w <= 0.0 {
            continue;
        }
        let label = LdLabel::all()
            .find(|l| ld_box(*l) == *b)
            .expect("every deterministic CHSH box has a label");
        out.push((format!("LD:{label}"), *w, b.clone()));
    }
    let total: f64 = out.iter().map(|(_, w, _)| w).sum();
    out.iter_mut().for_each(|(_, w, _)| *w /= total);
    Ok(out)
}

/// Minimal per-trial conditional entropy over convex attacks.
pub fn hmin(target: &Behaviour, s: &SettingsDistribution) -> Result<f64> {
    Ok(optimal_iid_attack(target, s)?.entropy_bits_per_trial())
}

/// Both sides of `worst <= avg <= worst(sigma) + log2(1/eps')`, with the
/// truncated-and-rescaled witness `sigma`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothBound {
    pub eps: f64,
    pub eps_prime: f64,
    pub worst: f64,
    pub avg: f64,
    /// Worst-case min-entropy of the constructed `sigma`.
    pub witness_worst: f64,
    /// Total-variation distance from the input to `sigma`.
    pub witness_distance: f64,
    pub lower: f64,
    pub upper: f64,
}

impl SmoothBound {
    pub fn holds(&self) -> bool {
        const TOL: f64 = 1e-12;
        self.worst <= self.avg + TOL && self.avg <= self.upper + TOL && self.witness_distance <= self.eps_prime + TOL
    }
}

pub fn smooth_bound_relation(d: &JointDistribution, eps: f64, eps_prime: f64) -> Result<SmoothBound> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(param(format!("eps = {eps} outside [0, 1]")));
    }
    if !(eps_prime > 0.0 && eps_prime < 1.0) {
        return Err(param(format!("eps' = {eps_prime} outside (0, 1)")));
    }
    let t = table(d);
    let nc = t.outcomes;
    let p: f64 = t.blocks().map(|b| b.iter().copied().fold(0.0, f64::max)).sum();
    let cutoff = p / eps_prime;
    let mut kept = vec![0.0; t.probs.len()];
    for (y, blk) in t.blocks().enumerate() {
        let py: f64 = blk.iter().sum();
        if py <= 0.0 {
            continue;
        }
        let top = blk.iter().copied().fold(0.0, f64::max) / py;
        if top <= cutoff {
            kept[y * nc..(y + 1) * nc].copy_from_slice(blk);
        }
    }
    let w: f64 = kept.iter().sum();
    kept.iter_mut().for_each(|v| *v /= w);
    let distance = 0.5 * kept.iter().zip(t.probs).map(|(a, b)| (a - b).abs()).sum::<f64>();
    let sigma = Table { probs: &kept, ..t.clone() };
    let worst = t.minentropy_worst();
    let avg = t.minentropy_avg();
    let witness_worst = sigma.minentropy_worst();
    Ok(SmoothBound {
        eps,
        eps_prime,
        worst,
        avg,
        witness_worst,
        witness_distance: distance,
        lower: worst,
        upper: witness_worst + (1.0 / eps_prime).log2(),
    })
}
