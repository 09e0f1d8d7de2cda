use pefkit::bell::{
    joint, ld_box, pr_box, slice_behaviour, Behaviour, JointDistribution, LdLabel, PrLabel, Scenario,
    SettingsDistribution, SliceCoords,
};
use pefkit::entropy::hmin;
use pefkit::pef::{
    constraint_excess, f_k, is_valid_pef, k_star, logprob_rate, ns_222_extremals, optimize_pef, pef_from_estimator,
    robustness, EntropyEstimator, Pef, PefFile, PefOptConfig, SolveStatus,
};
use proptest::prelude::*;

fn uniform() -> SettingsDistribution {
    SettingsDistribution::uniform(Scenario::CHSH)
}

fn slice_joint(s: f64, sp: f64) -> JointDistribution {
    joint(&slice_behaviour(SliceCoords::new(s, sp).unwrap()).unwrap(), &uniform()).unwrap()
}

fn optimised(beta: f64, target: &JointDistribution) -> Pef {
    let opt = optimize_pef(&PefOptConfig::new(beta, target.clone()).unwrap(), &ns_222_extremals(&uniform()).unwrap()).unwrap();
    assert_eq!(opt.status, SolveStatus::Converged);
    opt.pef
}

/// `E_sigma[F sigma(C|Z)^beta]` evaluated directly.
fn constraint(f: &Pef, sigma: &JointDistribution) -> f64 {
    let sc = sigma.scenario();
    let nc = sc.outcome_count();
    let mut total = 0.0;
    for z in 0..sc.settings_count() {
        let pz: f64 = (0..nc).map(|c| sigma.prob_e(0, z, c)).sum();
        for c in 0..nc {
            let p = sigma.prob_e(0, z, c);
            if p > 0.0 {
                total += p * f.log2_value(z, c).exp2() * (p / pz).powf(f.beta());
            }
        }
    }
    total
}

#[test]
fn k_star_expectations() {
    let k = k_star();
    let s = uniform();
    let pr: Vec<f64> = PrLabel::all().map(|p| k.expectation(&joint(&pr_box(p), &s).unwrap())).collect();
    assert_eq!(pr, vec![1.0, -3.0, -1.0, -1.0, -1.0, -1.0, -1.0, -1.0]);
    for l in LdLabel::all() {
        let v = k.expectation(&joint(&ld_box(l), &s).unwrap());
        let in_simplex = PrLabel::STANDARD.saturating_lds().contains(&l);
        assert_eq!(v, if in_simplex { 0.0 } else { -2.0 }, "{l}");
    }
    assert!(k.check(&ns_222_extremals(&s).unwrap()).valid);
}

#[test]
fn estimator_pef_identity() {
    let ext = ns_222_extremals(&uniform()).unwrap();
    let rho = slice_joint(2.6, 0.0);
    let k = k_star();
    for eps in [0.3, 0.1, 1e-3, 1e-8] {
        let f = pef_from_estimator(&k, eps, &ext).unwrap();
        assert!(is_valid_pef(&f, &ext).valid);
        assert!((logprob_rate(&f, &rho) - (k.expectation(&rho) - eps)).abs() < 1e-12);
    }
    // an invalid estimator is rejected by its own check
    let bad = EntropyEstimator::new(Scenario::CHSH, vec![1.0; 16]).unwrap();
    assert!(!bad.check(&ext).valid);
}

#[test]
fn f_k_radius_converges_to_nonlocality_strength() {
    let ext = ns_222_extremals(&uniform()).unwrap();
    let s_val = 2.6;
    let rho = slice_joint(s_val, 0.0);
    let sigma = slice_joint(2.3, 0.4);
    for k in [1u32, 3, 10, 30] {
        let r = robustness(&f_k(k, &ext).unwrap(), &rho, &sigma).unwrap();
        let want = 0.25 * ((s_val - 2.0) / 2.0 - (-(k as f64)).exp());
        assert!((r.radius - want).abs() < 1e-12, "k={k}: {} vs {want}", r.radius);
    }
    let r30 = robustness(&f_k(30, &ext).unwrap(), &rho, &sigma).unwrap();
    let strength = pefkit::polytope::nonlocality_strength(&slice_behaviour(SliceCoords::new(s_val, 0.0).unwrap()).unwrap()).unwrap();
    assert!((r30.radius - strength).abs() < 1e-6);
}

#[test]
fn robustness_bound_is_tight_for_opposite_pr_boxes() {
    let ext = ns_222_extremals(&uniform()).unwrap();
    let f = f_k(4, &ext).unwrap();
    let rho = joint(&pr_box(PrLabel::new(0, 0, 0)), &uniform()).unwrap();
    let sigma = joint(&pr_box(PrLabel::new(0, 0, 1)), &uniform()).unwrap();
    let r = robustness(&f, &rho, &sigma).unwrap();
    assert!((r.tv - 1.0).abs() < 1e-15);
    assert!((r.actual_gap - r.bound).abs() < 1e-9);
}

#[test]
fn optimal_rate_is_bounded_by_hmin_and_monotone_in_beta() {
    let b = slice_behaviour(SliceCoords::new(2.6, 0.0).unwrap()).unwrap();
    let rho = joint(&b, &uniform()).unwrap();
    let h = hmin(&b, &uniform()).unwrap();
    let mut last = f64::INFINITY;
    for beta in [1e-3, 3e-3, 1e-2, 3e-2, 0.1, 0.3, 1.0] {
        let rate = logprob_rate(&optimised(beta, &rho), &rho);
        assert!(rate <= h + 1e-6, "beta={beta}: {rate} > {h}");
        assert!(rate <= last + 1e-9, "rate increased at beta={beta}");
        last = rate;
    }
}

#[test]
fn local_target_certifies_nothing() {
    let rho = joint(&Behaviour::uniform(Scenario::CHSH), &uniform()).unwrap();
    for beta in [0.01, 0.5] {
        assert!(logprob_rate(&optimised(beta, &rho), &rho) <= 1e-9);
    }
}

#[test]
fn pef_file_round_trip_is_exact() {
    let ext = ns_222_extremals(&uniform()).unwrap();
    let f = optimised(0.05, &slice_joint(2.6, 0.0));
    let text = pefkit::io::to_json(&f.to_file(&ext)).unwrap();
    let back: PefFile = serde_json::from_str(&text).unwrap();
    assert!(back.validity.worst_constraint <= 1.0 + 1e-9);
    assert_eq!(back.into_pef().unwrap(), f);
}

fn ns_mixture() -> impl Strategy<Value = JointDistribution> {
    prop::collection::vec(0.0f64..1.0, 24).prop_filter_map("non-empty", |w| {
        let total: f64 = w.iter().sum();
        (total > 1e-6).then(|| {
            let boxes: Vec<Behaviour> = PrLabel::all().map(pr_box).chain(LdLabel::all().map(ld_box)).collect();
            let parts: Vec<(f64, &Behaviour)> = w.iter().map(|x| x / total).zip(&boxes).collect();
            joint(&Behaviour::mixture(&parts).unwrap(), &uniform()).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn validity_at_extremals_extends_to_mixtures(sigma in ns_mixture(), beta_exp in -3.0f64..0.0) {
        let beta = 10f64.powf(beta_exp);
        let f = optimised(beta, &slice_joint(2.6, 0.0));
        prop_assert!(constraint(&f, &sigma) <= 1.0 + 1e-9);
        prop_assert!(constraint_excess(f.log2_values(), beta, &sigma) <= 1e-9);
    }

    #[test]
    fn powers_of_valid_pefs_stay_valid(gamma in 0.01f64..1.0, k in 1u32..8) {
        let ext = ns_222_extremals(&uniform()).unwrap();
        let f = f_k(k, &ext).unwrap();
        let g = f.powered(gamma).unwrap();
        prop_assert!(is_valid_pef(&g, &ext).valid);
        prop_assert!((g.beta() - gamma * f.beta()).abs() < 1e-15);
        let rho = slice_joint(2.6, 0.0);
        // log-prob rate is invariant under powering
        prop_assert!((logprob_rate(&g, &rho) - logprob_rate(&f, &rho)).abs() < 1e-12);
    }

    #[test]
    fn robustness_on_random_slice_pairs(s1 in 2.0f64..2.8, t1 in -0.8f64..0.8, s2 in 2.0f64..2.8, t2 in -0.8f64..0.8, k in 1u32..12) {
        let ext = ns_222_extremals(&uniform()).unwrap();
        let f = f_k(k, &ext).unwrap();
        let r = robustness(&f, &slice_joint(s1, t1), &slice_joint(s2, t2)).unwrap();
        prop_assert!(r.holds);
        prop_assert!(r.actual_gap <= r.bound + 1e-12);
    }
}
