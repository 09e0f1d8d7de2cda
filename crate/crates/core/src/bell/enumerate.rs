use super::{Behaviour, Scenario};
use crate::error::{Error, Result};

/// Upper bound on `count * coordinates` materialised by [`ld_enumerate`].
pub const LD_ENUMERATION_BUDGET: usize = 1 << 26;

/// All local deterministic behaviours of a scenario.
///
/// Assignment `lambda` gives party `i` the outcome `lambda[i*m + x_i]`;
/// assignments are produced in lexicographic order.
pub fn ld_enumerate(scenario: Scenario) -> Result<Vec<Behaviour>> {
    let Scenario { parties: n, settings: m, outcomes: k } = scenario;
    let slots = n * m;
    let count = u32::try_from(slots)
        .ok()
        .and_then(|s| k.checked_pow(s))
        .filter(|c| c.checked_mul(scenario.len()).is_some_and(|t| t <= LD_ENUMERATION_BUDGET))
        .ok_or_else(|| Error::Resource(format!("too many deterministic behaviours for {scenario}")))?;

    let nz = scenario.settings_count();
    let nc = scenario.outcome_count();
    let zs: Vec<Vec<usize>> = (0..nz).map(|z| scenario.settings_tuple(z)).collect();
    let mut lambda = vec![0usize; slots];
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut probs = vec![0.0; scenario.len()];
        for (z, zt) in zs.iter().enumerate() {
            let c = (0..n).fold(0, |acc, i| acc * k + lambda[i * m + zt[i]]);
            probs[z * nc + c] = 1.0;
        }
        out.push(Behaviour { scenario, probs });
        for d in lambda.iter_mut().rev() {
            *d += 1;
            if *d < k {
                break;
            }
            *d = 0;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignallingReport {
    pub no_signalling: bool,
    pub max_violation: f64,
}

/// Checks that summing out any one party's outcome leaves a distribution that
/// does not depend on that party's setting.
pub fn no_signalling_check(b: &Behaviour) -> SignallingReport {
    let sc = b.scenario();
    let n = sc.parties;
    let mut worst: f64 = 0.0;
    for j in 0..n {
        let mut lo = vec![f64::INFINITY; sc.len()];
        let mut hi = vec![f64::NEG_INFINITY; sc.len()];
        for z in 0..sc.settings_count() {
            let mut zt = sc.settings_tuple(z);
            zt[j] = 0;
            let z0 = sc.settings_index(&zt);
            let blk = b.block(z);
            let mut marg = vec![0.0; sc.outcome_count()];
            for (c, p) in blk.iter().enumerate() {
                let mut ct = sc.outcome_tuple(c);
                ct[j] = 0;
                marg[sc.outcome_index(&ct)] += p;
            }
            for (c0, m) in marg.iter().enumerate() {
                if sc.outcome_tuple(c0)[j] != 0 {
                    continue;
                }
                let key = sc.index(z0, c0);
                lo[key] = lo[key].min(*m);
                hi[key] = hi[key].max(*m);
            }
        }
        for (l, h) in lo.iter().zip(&hi) {
            if l.is_finite() {
                worst = worst.max(h - l);
            }
        }
    }
    SignallingReport { no_signalling: worst <= super::NORM_TOL, max_violation: worst }
}
