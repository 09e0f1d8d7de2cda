//! Above beta = log2(4/3) the PR constraints are implied by the LD ones, so
//! optimal PEFs stop depending on beta.

use pefkit::pef::{beta_threshold, beta_threshold_report};

fn main() -> pefkit::Result<()> {
    let report = beta_threshold_report(None, 0.05)?;
    println!("threshold log2(4/3) = {:.15}", beta_threshold());
    println!("powers compared: {:?}", report.betas);
    println!("largest entrywise difference between optimisers: {:.3e}", report.max_deviation);
    println!(
        "counterexample PR constraint: {:.15} at the threshold, {:.15} at threshold - {} (2^{} = {:.15})",
        report.counterexample_at,
        report.counterexample_below,
        report.probe,
        report.probe,
        report.probe.exp2()
    );
    println!("LD constraint values: {:?}", report.counterexample_ld_values);
    println!("feasibility flips at the threshold: {}", report.flips_at_threshold());
    Ok(())
}
