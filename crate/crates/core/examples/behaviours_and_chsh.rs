//! PR and deterministic boxes, their CHSH values, and the two-parameter
//! slice. Pass a directory to also write behaviour JSON files there.

use std::path::PathBuf;

use pefkit::bell::{
    chsh_value, correlators, ld_box, no_signalling_check, pr_box, slice_behaviour, LdLabel, PrLabel, SettingsDistribution,
    SliceCoords,
};
use pefkit::io::write_behaviour;

fn main() -> pefkit::Result<()> {
    println!("CHSH value of each LD box under each functional B^abc:");
    print!("{:>6}", "");
    for ld in LdLabel::all() {
        print!("{:>5}", ld.to_string().trim_start_matches("LD:"));
    }
    println!();
    for pr in PrLabel::all() {
        print!("{:>6}", pr.to_string());
        for ld in LdLabel::all() {
            print!("{:>5}", chsh_value(&ld_box(ld), pr));
        }
        println!();
    }

    for pr in PrLabel::all() {
        let saturating: Vec<String> = pr.saturating_lds().iter().map(|l| l.to_string()).collect();
        println!("PR:{pr} scores 4 on its own functional; saturated at 2 by {}", saturating.join(" "));
        assert_eq!(chsh_value(&pr_box(pr), pr), 4.0);
    }

    let tsirelson = 8f64.sqrt();
    for (s, sp) in [(2.6, 0.0), (tsirelson, 0.0), (2.2, 1.0)] {
        let coords = SliceCoords::new(s, sp)?;
        let b = slice_behaviour(coords)?;
        let ns = no_signalling_check(&b);
        println!(
            "slice S={s:.4} S'={sp:.1}: correlators {:?}, no-signalling {} ({:.1e}), quantum {}",
            correlators(&b),
            ns.no_signalling,
            ns.max_violation,
            coords.is_quantum()
        );
    }

    if let Some(dir) = std::env::args_os().nth(1).map(PathBuf::from) {
        std::fs::create_dir_all(&dir)?;
        let s = SettingsDistribution::uniform(pefkit::bell::Scenario::CHSH);
        write_behaviour(&dir.join("slice_2.6.json"), &slice_behaviour(SliceCoords::new(2.6, 0.0)?)?, Some(&s))?;
        write_behaviour(&dir.join("tsirelson.json"), &slice_behaviour(SliceCoords::new(tsirelson, 0.0)?)?, None)?;
        write_behaviour(&dir.join("pr_box.json"), &pr_box(PrLabel::STANDARD), None)?;
        write_behaviour(&dir.join("uniform.json"), &pefkit::bell::Behaviour::uniform(pefkit::bell::Scenario::CHSH), None)?;
        println!("wrote behaviour files to {}", dir.display());
    }
    Ok(())
}
