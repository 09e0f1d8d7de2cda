//! Exact failure probabilities of the PEF test for short IID sequences, and
//! the experiment-model conditions of an explicit attack.

use pefkit::bell::{joint, slice_behaviour, Scenario, SettingsDistribution, SliceCoords};
use pefkit::entropy::{optimal_iid_attack, AttackModel};
use pefkit::pef::{f_k, ns_222_extremals, optimize_pef, PefOptConfig};
use pefkit::protocol::{experiment_model_check, theorem1_exact_check};

fn main() -> pefkit::Result<()> {
    let s = SettingsDistribution::uniform(Scenario::CHSH);
    let extremals = ns_222_extremals(&s)?;
    let target = slice_behaviour(SliceCoords::new(2.6, 0.0)?)?;
    let rho = joint(&target, &s)?;
    let grid: Vec<f64> = (1..100).map(|i| i as f64 / 100.0).collect();

    let optimised = optimize_pef(&PefOptConfig::new(0.2, rho.clone())?, &extremals)?.pef;
    let f5 = f_k(5, &extremals)?;
    for (name, f) in [("optimised beta=0.2", &optimised), ("F_5", &f5)] {
        for n in 1..=3 {
            let check = theorem1_exact_check(f, &rho, n, &grid)?;
            println!(
                "{name:<18} n={n}: largest P = {:.3e} (at eps = 0.99), max_eps(P - eps) = {:+.3e}, E[prod F mu^beta] = {:.12}, holds {}",
                check.probabilities.last().map(|(_, p)| *p).unwrap_or(0.0),
                check.max_excess,
                check.supermartingale,
                check.holds()
            );
        }
    }

    // the attack's own labelled distribution also satisfies the test bound
    let attack = optimal_iid_attack(&target, &s)?;
    let check = theorem1_exact_check(&optimised, &attack.single_trial, 2, &grid)?;
    println!("against the optimal attack, n=2: max excess {:+.3e}", check.max_excess);

    let theta = experiment_model_check(&AttackModel::new(attack.single_trial.clone(), 3)?, 3)?;
    println!(
        "experiment-model conditions over 3 trials: conditional {:?}, no-signalling {:?}, settings {:?}, holds {}",
        theta.conditional_deviation, theta.memberships, theta.settings_residuals, theta.holds()
    );
    Ok(())
}
