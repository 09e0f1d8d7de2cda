//! Local polytope membership by linear programming: separating functionals,
//! distance to the polytope, and the mixture counterexamples.

use pefkit::bell::{pr_box, slice_behaviour, Behaviour, PrLabel, Scenario, SliceCoords};
use pefkit::polytope::{counterexample_suite, local_membership, nonlocality_strength, violated_inequality, Membership};

fn main() -> pefkit::Result<()> {
    for (name, b) in [
        ("uniform", Behaviour::uniform(Scenario::CHSH)),
        ("slice(2.2, 1.0)", slice_behaviour(SliceCoords::new(2.2, 1.0)?)?),
        ("slice(2.6, 0.0)", slice_behaviour(SliceCoords::new(2.6, 0.0)?)?),
        ("PR:000", pr_box(PrLabel::STANDARD)),
    ] {
        match local_membership(&b)? {
            Membership::Local { weights } => {
                let used = weights.iter().filter(|w| **w > 1e-12).count();
                println!("{name}: local, {used} deterministic boxes in the mixture");
            }
            Membership::Nonlocal { witness } => println!(
                "{name}: nonlocal, witness value {:.3e} (negative certifies), violates PR:{}, distance to polytope {:.6}",
                witness.evaluate(&b),
                violated_inequality(&b).map(|l| l.to_string()).unwrap_or_default(),
                nonlocality_strength(&b)?
            ),
        }
    }

    let start = std::time::Instant::now();
    let report = counterexample_suite()?;
    let (local, nonlocal): (Vec<_>, Vec<_>) = report.cases.iter().partition(|c| c.local);
    println!("\n{} equal PR-pair mixtures checked, all local: {}", local.len(), local.iter().all(|c| c.matches()));
    for case in nonlocal {
        println!("{:<26} {} nonlocal (expected {})", case.name, case.scenario, if case.expected_local { "local" } else { "nonlocal" });
    }
    println!("all verdicts as expected: {} ({:?})", report.all_match, start.elapsed());
    Ok(())
}
