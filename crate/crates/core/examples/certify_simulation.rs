//! End to end: choose a power, optimise the PEF, simulate 1e5 trials, pick a
//! success threshold and certify min-entropy.

use pefkit::bell::{joint, slice_behaviour, Scenario, SettingsDistribution, SliceCoords};
use pefkit::io::to_json;
use pefkit::pef::{argmax_beta, beta_grid, ns_222_extremals, optimize_pef, sweep_rates, PefOptConfig};
use pefkit::protocol::{certify, choose_log2_p, simulate, CertifyParams};

fn main() -> pefkit::Result<()> {
    let (n, epsilon, kappa, seed) = (100_000usize, 1e-4, 0.95, 42);
    let s = SettingsDistribution::uniform(Scenario::CHSH);
    let extremals = ns_222_extremals(&s)?;
    let rho = joint(&slice_behaviour(SliceCoords::new(2.6, 0.0)?)?, &s)?;

    let rows = sweep_rates(&rho, &beta_grid(1e-3, 1.0, 60)?, &[n as f64], epsilon, &extremals)?;
    let beta = rows[argmax_beta(&rows, 0).expect("non-empty grid")].beta;
    let mut cfg = PefOptConfig::new(beta, rho.clone())?;
    cfg.n = n as f64;
    cfg.epsilon = epsilon;
    let f = optimize_pef(&cfg, &extremals)?.pef;

    let trials = simulate(&rho, n, seed);
    let log2_p = choose_log2_p(&f, &rho, n, epsilon)?;
    let cert = certify(&f, &trials, CertifyParams { epsilon, log2_p, kappa })?;
    print!("{}", to_json(&cert)?);
    if let Some(bits) = cert.bound_cor1 {
        println!("certified {:.4} bits per trial (beta = {beta:.5})", bits / n as f64);
    }
    Ok(())
}
