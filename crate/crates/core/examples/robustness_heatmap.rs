//! How a PEF optimised at one slice point performs elsewhere on the slice:
//! a coarse text heat map, zero-rate intercepts and the robustness bound.

use pefkit::bell::{joint, slice_behaviour, Scenario, SettingsDistribution, SliceCoords};
use pefkit::pef::{f_k, ns_222_extremals, optimize_pef, rate_on_slice, robustness, zero_rate_intercept, PefOptConfig};

fn main() -> pefkit::Result<()> {
    let s = SettingsDistribution::uniform(Scenario::CHSH);
    let extremals = ns_222_extremals(&s)?;
    let anchor = joint(&slice_behaviour(SliceCoords::new(2.6, 0.0)?)?, &s)?;

    for beta in [0.1, 0.01] {
        let opt = optimize_pef(&PefOptConfig::new(beta, anchor.clone())?, &extremals)?;
        println!("beta = {beta}: zero-rate intercept at S'=0 is S = {:.5}", zero_rate_intercept(&opt.pef, &s, 0.0)?.unwrap_or(f64::NAN));
        println!("  rows S' from 2 to -2, columns S from 2 to 2.83; '#' positive rate, '.' non-positive");
        for i in 0..9 {
            let sp = 2.0 - 0.5 * i as f64;
            let line: String = (0..30)
                .map(|j| {
                    let sv = 2.0 + (8f64.sqrt() - 2.0) * j as f64 / 29.0;
                    match SliceCoords::new(sv, sp) {
                        Ok(c) if c.is_quantum() => match rate_on_slice(&opt.pef, &s, c) {
                            Ok(r) if r > 0.0 => '#',
                            _ => '.',
                        },
                        _ => ' ',
                    }
                })
                .collect();
            println!("  {sp:>5.1} {line}");
        }
    }

    let f = f_k(5, &extremals)?;
    let rho = anchor;
    let sigma = joint(&slice_behaviour(SliceCoords::new(2.3, 0.5)?)?, &s)?;
    let r = robustness(&f, &rho, &sigma)?;
    println!(
        "\nF_5 from slice(2.6,0) to slice(2.3,0.5): |dO| = {:.6} <= bound {:.6} (d_TV {:.4}), radius {:.6}",
        r.actual_gap, r.bound, r.tv, r.radius
    );
    Ok(())
}
