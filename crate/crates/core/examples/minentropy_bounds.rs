//! Conditional Shannon and min-entropies of attacks, IID products, and the
//! smooth worst-case versus average min-entropy relation.

use pefkit::bell::{ld_box, pr_box, JointDistribution, LdLabel, PrLabel, Scenario, SettingsDistribution};
use pefkit::entropy::{cond_shannon, minentropy_avg, minentropy_worst, smooth_bound_relation, Conditioning, IidPower};

fn main() -> pefkit::Result<()> {
    let s = SettingsDistribution::uniform(Scenario::CHSH);
    let d = JointDistribution::from_components(
        &[("PR:000".into(), 0.5, pr_box(PrLabel::STANDARD)), ("LD:0000".into(), 0.5, ld_box(LdLabel::new(0, 0, 0, 0)))],
        &s,
    )?;
    println!(
        "half PR, half LD: H(C|ZE) = {:.6}, average min-entropy = {:.6}, worst case = {:.6}",
        cond_shannon(&d, Conditioning::SettingsAndE),
        minentropy_avg(&d),
        minentropy_worst(&d)
    );
    for n in 1..=3 {
        let t = IidPower::new(&d, n)?;
        println!("  {n} trials: average min-entropy per trial {:.12}", t.table().minentropy_avg() / n as f64);
    }
    for (eps, eps_prime) in [(0.05, 0.05), (0.1, 0.05), (0.3, 0.2)] {
        let b = smooth_bound_relation(&d, eps, eps_prime)?;
        println!(
            "  eps={eps} eps'={eps_prime}: worst {:.4} <= avg {:.4} <= {:.4}; smoothed worst case {:.4} at distance {:.4}",
            b.worst, b.avg, b.upper, b.witness_worst, b.witness_distance
        );
    }
    Ok(())
}
