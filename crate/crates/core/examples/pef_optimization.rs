//! Optimise a PEF for a slice behaviour and report its rate, validity and
//! the zero-rate contour on the slice.

use pefkit::bell::{joint, slice_behaviour, SettingsDistribution, SliceCoords, Scenario};
use pefkit::pef::{is_valid_pef, ns_222_extremals, optimize_pef, zero_rate_intercept, PefOptConfig};

fn main() -> pefkit::Result<()> {
    let s = SettingsDistribution::uniform(Scenario::CHSH);
    let rho = joint(&slice_behaviour(SliceCoords::new(2.6, 0.0)?)?, &s)?;
    let extremals = ns_222_extremals(&s)?;

    for beta in [1e-3, 1e-2, 0.1, 0.415, 1.0] {
        let start = std::time::Instant::now();
        let opt = optimize_pef(&PefOptConfig::new(beta, rho.clone())?, &extremals)?;
        let validity = is_valid_pef(&opt.pef, &extremals);
        let intercept = zero_rate_intercept(&opt.pef, &s, 0.0)?;
        println!(
            "beta={beta:<6} rate={:.6} status={:?} kkt={:.1e} spread={:.1e} worst={:.12} zero-rate S={:?} ({:?})",
            opt.rate,
            opt.status,
            opt.kkt_residual,
            opt.restart_spread,
            validity.worst_constraint,
            intercept,
            start.elapsed()
        );
    }
    Ok(())
}
