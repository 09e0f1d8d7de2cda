//! Net log-prob rates over a log-spaced grid of powers for two experiment
//! lengths; longer experiments favour smaller powers.

use pefkit::bell::{joint, slice_behaviour, Scenario, SettingsDistribution, SliceCoords};
use pefkit::pef::{argmax_beta, beta_grid, ns_222_extremals, sweep_rates};

fn main() -> pefkit::Result<()> {
    let s = SettingsDistribution::uniform(Scenario::CHSH);
    let rho = joint(&slice_behaviour(SliceCoords::new(2.6, 0.0)?)?, &s)?;
    let counts = [1.5e5, 2.4e5];
    let betas = beta_grid(1e-3, 1e-1, 200)?;
    let start = std::time::Instant::now();
    let rows = sweep_rates(&rho, &betas, &counts, 1e-4, &ns_222_extremals(&s)?)?;
    println!("200 optimisations in {:?}", start.elapsed());
    for r in rows.iter().step_by(20) {
        println!("beta={:.5} rate={:.6} net={:.6} / {:.6}", r.beta, r.optimum.rate, r.net_rates[0], r.net_rates[1]);
    }
    for (which, n) in counts.iter().enumerate() {
        let best = &rows[argmax_beta(&rows, which).expect("non-empty grid")];
        println!("n={n:.1e}: best beta {:.5}, net rate {:.6}", best.beta, best.net_rates[which]);
    }
    Ok(())
}
