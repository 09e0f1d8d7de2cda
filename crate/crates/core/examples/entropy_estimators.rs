//! The entropy estimator K* and the PEF family F_k built from it.

use pefkit::bell::{joint, ld_box, pr_box, slice_behaviour, LdLabel, PrLabel, Scenario, SettingsDistribution, SliceCoords};
use pefkit::pef::{f_k, is_valid_pef, k_star, logprob_rate, ns_222_extremals};

fn main() -> pefkit::Result<()> {
    let s = SettingsDistribution::uniform(Scenario::CHSH);
    let extremals = ns_222_extremals(&s)?;
    let k = k_star();
    println!("K* expectations:");
    for pr in PrLabel::all() {
        print!(" PR:{pr}={}", k.expectation(&joint(&pr_box(pr), &s)?));
    }
    println!();
    for ld in LdLabel::all() {
        print!(" {ld}={}", k.expectation(&joint(&ld_box(ld), &s)?));
    }
    println!("\nestimator inequality holds on all extremals: {}", k.check(&extremals).valid);

    let rho = joint(&slice_behaviour(SliceCoords::new(2.6, 0.0)?)?, &s)?;
    println!("\nE_rho[K*] = {:.6} at slice(2.6, 0)", k.expectation(&rho));
    for kk in [1u32, 2, 5, 10, 20, 30] {
        let f = f_k(kk, &extremals)?;
        let validity = is_valid_pef(&f, &extremals);
        println!(
            "F_{kk:<2}: beta={:.3e} rate={:.12} (E[K*]-e^-k = {:.12}) worst constraint {:.12}",
            f.beta(),
            logprob_rate(&f, &rho),
            k.expectation(&rho) - (-(kk as f64)).exp(),
            validity.worst_constraint
        );
    }
    Ok(())
}
