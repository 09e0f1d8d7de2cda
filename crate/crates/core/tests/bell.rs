use pefkit::bell::{
    chsh_value, correlators, joint, ld_box, ld_enumerate, nl_box_223, nl_box_223_relabelled, no_signalling_check,
    pr_box, slice_behaviour, Behaviour, LdLabel, PrLabel, Scenario, SettingsDistribution, SliceCoords,
};
use proptest::prelude::*;

const H: f64 = 0.5;

/// The PR box for the standard CHSH expression and the eight deterministic
/// boxes saturating it, in the published order.
const SIMPLEX_PR1: [[f64; 16]; 9] = [
    [H, 0., 0., H, H, 0., 0., H, H, 0., 0., H, 0., H, H, 0.],
    [1., 0., 0., 0., 1., 0., 0., 0., 1., 0., 0., 0., 1., 0., 0., 0.],
    [0., 0., 0., 1., 0., 0., 0., 1., 0., 0., 0., 1., 0., 0., 0., 1.],
    [1., 0., 0., 0., 0., 1., 0., 0., 1., 0., 0., 0., 0., 1., 0., 0.],
    [0., 0., 0., 1., 0., 0., 1., 0., 0., 0., 0., 1., 0., 0., 1., 0.],
    [1., 0., 0., 0., 1., 0., 0., 0., 0., 0., 1., 0., 0., 0., 1., 0.],
    [0., 0., 0., 1., 0., 0., 0., 1., 0., 1., 0., 0., 0., 1., 0., 0.],
    [0., 1., 0., 0., 1., 0., 0., 0., 0., 0., 0., 1., 0., 0., 1., 0.],
    [0., 0., 1., 0., 0., 0., 0., 1., 1., 0., 0., 0., 0., 1., 0., 0.],
];

/// Deterministic boxes of each non-local simplex, one row per functional.
const SIMPLICES: [(&str, [&str; 8]); 8] = [
    ("000", ["0000", "0101", "0010", "0111", "1000", "1101", "1011", "1110"]),
    ("001", ["0001", "0011", "0100", "0110", "1001", "1010", "1100", "1111"]),
    ("010", ["0000", "0010", "0101", "0111", "1001", "1010", "1100", "1111"]),
    ("011", ["0001", "0011", "0100", "0110", "1000", "1011", "1101", "1110"]),
    ("100", ["0000", "0011", "0101", "0110", "1000", "1010", "1101", "1111"]),
    ("101", ["0001", "0010", "0100", "0111", "1001", "1011", "1100", "1110"]),
    ("110", ["0001", "0010", "0100", "0111", "1000", "1010", "1101", "1111"]),
    ("111", ["0000", "0011", "0101", "0110", "1001", "1011", "1100", "1110"]),
];

fn ld(s: &str) -> LdLabel {
    format!("LD:{s}").parse().unwrap()
}

#[test]
fn simplex_vectors_match_published_table() {
    assert_eq!(pr_box(PrLabel::STANDARD).probs(), &SIMPLEX_PR1[0]);
    for (row, name) in SIMPLEX_PR1[1..].iter().zip(SIMPLICES[0].1) {
        assert_eq!(ld_box(ld(name)).probs(), row, "LD:{name}");
    }
}

#[test]
fn simplex_membership_matches_published_table() {
    for (pr, lds) in SIMPLICES {
        let label: PrLabel = format!("PR:{pr}").parse().unwrap();
        let mut want: Vec<LdLabel> = lds.iter().map(|s| ld(s)).collect();
        want.sort_by_key(|l| l.index());
        assert_eq!(label.saturating_lds().to_vec(), want, "PR:{pr}");
        for l in LdLabel::all() {
            let v = chsh_value(&ld_box(l), label);
            assert_eq!(v == 2.0, want.contains(&l));
            assert!(v.abs() == 2.0);
        }
    }
}

#[test]
fn pr_boxes_reach_four_on_exactly_one_functional() {
    for p in PrLabel::all() {
        let vals: Vec<f64> = PrLabel::all().map(|q| chsh_value(&pr_box(p), q)).collect();
        assert_eq!(vals.iter().filter(|v| **v == 4.0).count(), 1);
        assert_eq!(chsh_value(&pr_box(p), p), 4.0);
    }
}

#[test]
fn simplex_is_affinely_independent() {
    for p in PrLabel::all() {
        let base = pr_box(p);
        let diffs: Vec<f64> = p
            .saturating_lds()
            .iter()
            .flat_map(|l| ld_box(*l).probs().iter().zip(base.probs()).map(|(a, b)| a - b).collect::<Vec<_>>())
            .collect();
        let m = nalgebra::DMatrix::from_row_slice(8, 16, &diffs);
        assert_eq!(m.rank(1e-10), 8, "PR:{p}");
    }
}

#[test]
fn cglmp_pair_matches_published_table() {
    let t = 1.0 / 3.0;
    let diag = [t, 0., 0., 0., t, 0., 0., 0., t];
    let shifted = [0., t, 0., 0., 0., t, t, 0., 0.];
    let top: Vec<f64> = [diag, diag, diag, shifted].concat();
    let bottom: Vec<f64> = [shifted, diag, diag, diag].concat();
    assert_eq!(nl_box_223().probs(), top.as_slice());
    assert_eq!(nl_box_223_relabelled().probs(), bottom.as_slice());
    assert!(no_signalling_check(&nl_box_223()).no_signalling);
}

#[test]
fn tsirelson_point_matches_published_table() {
    let r2 = 2f64.sqrt();
    let a = (r2 + 1.0) / (4.0 * r2);
    let b = (r2 - 1.0) / (4.0 * r2);
    let q = slice_behaviour(SliceCoords::new(8f64.sqrt(), 0.0).unwrap()).unwrap();
    let want = [a, b, b, a, a, b, b, a, a, b, b, a, b, a, a, b];
    for (x, y) in q.probs().iter().zip(want) {
        assert!((x - y).abs() < 1e-15);
    }
}

#[test]
fn ld_count_and_order() {
    assert_eq!(ld_enumerate(Scenario::CHSH).unwrap().len(), 16);
    assert_eq!(ld_enumerate(Scenario::new(2, 2, 3).unwrap()).unwrap().len(), 81);
    assert_eq!(ld_enumerate(Scenario::new(2, 3, 2).unwrap()).unwrap().len(), 64);
    assert_eq!(ld_enumerate(Scenario::new(3, 2, 2).unwrap()).unwrap().len(), 64);
    // lambda = (a0, a1, b0, b1) with a0 most significant
    let lds = ld_enumerate(Scenario::CHSH).unwrap();
    for (k, b) in lds.iter().enumerate() {
        let (a0, a1, b0, b1) = (k >> 3 & 1, k >> 2 & 1, k >> 1 & 1, k & 1);
        for z in 0..4 {
            let (x, y) = (z >> 1, z & 1);
            let a = if x == 0 { a0 } else { a1 };
            let bb = if y == 0 { b0 } else { b1 };
            assert_eq!(b.prob(z, 2 * a + bb), 1.0);
        }
    }
}

#[test]
fn behaviour_file_round_trip() {
    let dir = std::env::temp_dir().join(format!("pefkit-bell-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("b.json");
    let b = slice_behaviour(SliceCoords::new(2.6, 0.3).unwrap()).unwrap();
    let s = SettingsDistribution::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
    pefkit::io::write_behaviour(&path, &b, Some(&s)).unwrap();
    let (b2, s2) = pefkit::io::read_behaviour(&path).unwrap();
    assert_eq!(b, b2);
    assert_eq!(s.probs(), s2.probs());
    std::fs::write(&path, r#"{"scenario":[2,2,2],"order":"lex","probs":[1,0,0,0]}"#).unwrap();
    assert!(pefkit::io::read_behaviour(&path).is_err());
}

fn simplex_point() -> impl Strategy<Value = (PrLabel, Vec<f64>)> {
    (0usize..8, prop::collection::vec(0.0f64..1.0, 9)).prop_filter_map("nonzero PR weight", |(p, raw)| {
        let total: f64 = raw.iter().sum();
        (raw[0] > 1e-3 && total > 0.0).then(|| (PrLabel::from_index(p), raw.iter().map(|r| r / total).collect()))
    })
}

fn point(pr: PrLabel, w: &[f64]) -> Behaviour {
    let parts: Vec<(f64, Behaviour)> = std::iter::once((w[0], pr_box(pr)))
        .chain(pr.saturating_lds().iter().zip(&w[1..]).map(|(l, x)| (*x, ld_box(*l))))
        .collect();
    let refs: Vec<(f64, &Behaviour)> = parts.iter().map(|(w, b)| (*w, b)).collect();
    Behaviour::mixture(&refs).unwrap()
}

proptest! {
    #[test]
    fn exactly_one_functional_exceeds_two((pr, w) in simplex_point()) {
        let b = point(pr, &w);
        let above: Vec<PrLabel> = PrLabel::all().filter(|q| chsh_value(&b, *q) > 2.0 + 1e-12).collect();
        prop_assert_eq!(above, vec![pr]);
        // each saturating LD contributes 2, the PR box 4
        prop_assert!((chsh_value(&b, pr) - (2.0 + 2.0 * w[0])).abs() < 1e-12);
    }

    #[test]
    fn slice_coordinates_are_recovered(s in -4.0f64..4.0, sp in -4.0f64..4.0) {
        prop_assume!((s + sp).abs() <= 4.0 && (s - sp).abs() <= 4.0);
        let b = slice_behaviour(SliceCoords::new(s, sp).unwrap()).unwrap();
        prop_assert!((chsh_value(&b, PrLabel::STANDARD) - s).abs() < 1e-12);
        prop_assert!((chsh_value(&b, PrLabel::new(1, 1, 1)) - sp).abs() < 1e-12);
        let e = correlators(&b);
        prop_assert!((e[0] + e[3]).abs() < 1e-12 && (e[1] - e[2]).abs() < 1e-12);
        prop_assert!(no_signalling_check(&b).no_signalling);
    }

    #[test]
    fn mixtures_of_extremals_are_no_signalling(w in prop::collection::vec(0.0f64..1.0, 24)) {
        let total: f64 = w.iter().sum();
        prop_assume!(total > 0.0);
        let boxes: Vec<Behaviour> = PrLabel::all().map(pr_box).chain(LdLabel::all().map(ld_box)).collect();
        let parts: Vec<(f64, &Behaviour)> = w.iter().map(|x| x / total).zip(&boxes).collect();
        let b = Behaviour::mixture(&parts).unwrap();
        prop_assert!(no_signalling_check(&b).no_signalling);
        let j = joint(&b, &SettingsDistribution::uniform(Scenario::CHSH)).unwrap();
        prop_assert!((j.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn labels_round_trip(i in 0usize..16) {
        let l = LdLabel::from_index(i);
        prop_assert_eq!(l.to_string().parse::<LdLabel>().unwrap(), l);
        let p = PrLabel::from_index(i % 8);
        prop_assert_eq!(format!("PR:{p}").parse::<PrLabel>().unwrap(), p);
    }
}
