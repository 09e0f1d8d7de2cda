use pefkit::bell::{
    chsh_value, joint, ld_box, pr_box, slice_behaviour, JointDistribution, LdLabel, PrLabel, Scenario,
    SettingsDistribution, SliceCoords,
};
use pefkit::entropy::{optimal_iid_attack, AttackModel};
use pefkit::pef::{f_k, is_valid_pef, ns_222_extremals, optimize_pef, Pef, PefOptConfig};
use pefkit::protocol::{
    accumulate, attack_trace, certify, choose_log2_p, empirical_behaviour, experiment_model_check, simulate, theorem1_exact_check,
    CertifyParams, TrialRecord,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;

fn uniform() -> SettingsDistribution {
    SettingsDistribution::uniform(Scenario::CHSH)
}

fn slice_joint(s: f64) -> JointDistribution {
    joint(&slice_behaviour(SliceCoords::new(s, 0.0).unwrap()).unwrap(), &uniform()).unwrap()
}

fn optimised(beta: f64, target: &JointDistribution) -> Pef {
    optimize_pef(&PefOptConfig::new(beta, target.clone()).unwrap(), &ns_222_extremals(&uniform()).unwrap()).unwrap().pef
}

fn counts(trials: &[TrialRecord]) -> Vec<f64> {
    let mut c = vec![0.0; 16];
    for t in trials {
        c[t.z * 4 + t.c] += 1.0;
    }
    c
}

#[test]
fn pr_cell_frequencies() {
    let d = joint(&pr_box(PrLabel::STANDARD), &uniform()).unwrap();
    let n = 100_000;
    let c = counts(&simulate(&d, n, 11));
    for (i, p) in d.probs().iter().enumerate() {
        let f = c[i] / n as f64;
        if *p > 0.0 {
            assert!((f - 0.125).abs() < 0.005, "cell {i}: {f}");
        } else {
            assert_eq!(f, 0.0);
        }
    }
}

#[test]
fn chi_square_smoke_test() {
    let d = slice_joint(2.6);
    let n = 100_000.0;
    let c = counts(&simulate(&d, n as usize, 3));
    let chi2: f64 = d.probs().iter().zip(&c).map(|(p, o)| (o - n * p).powi(2) / (n * p)).sum();
    // 15 degrees of freedom; 37.7 is the 0.999 quantile
    assert!(chi2 < 37.7, "chi2 = {chi2}");
}

#[test]
fn mean_log_pef_within_three_standard_errors() {
    let rho = slice_joint(2.6);
    let f = optimised(0.05, &rho);
    let trials = simulate(&rho, 50_000, 8);
    let vals: Vec<f64> = trials.iter().map(|t| f.log2_value(t.z, t.c)).collect();
    let n = vals.len() as f64;
    let mean = accumulate(&f, &trials).unwrap() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let expected: f64 = rho.cz_marginal().iter().zip(f.log2_values()).map(|(p, l)| p * l).sum();
    assert!((mean - expected).abs() <= 3.0 * (var / n).sqrt());
}

#[test]
fn accumulation_is_order_independent() {
    let rho = slice_joint(2.6);
    let f = optimised(0.01, &rho);
    let mut trials = simulate(&rho, 200_000, 1);
    let a = accumulate(&f, &trials).unwrap();
    trials.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(5));
    let b = accumulate(&f, &trials).unwrap();
    assert!((a - b).abs() < 1e-9);
}

#[test]
fn certificate_bits_equal_threshold_bits() {
    let f = Pef::new(Scenario::CHSH, &[2.0; 16], 1.0).unwrap();
    let trials = simulate(&slice_joint(2.6), 64, 2);
    for k in [1.0, 10.0, 40.0] {
        let c = certify(&f, &trials, CertifyParams { epsilon: 0.01, log2_p: -k, kappa: 1.0 }).unwrap();
        assert!(c.success);
        assert_eq!(c.bound_cor1, Some(k));
    }
}

#[test]
fn constant_pef_never_succeeds() {
    let f = Pef::constant(Scenario::CHSH, 0.5).unwrap();
    let trials = simulate(&slice_joint(2.6), 100, 2);
    for log2_p in [0.0, -1.0, -50.0] {
        let c = certify(&f, &trials, CertifyParams { epsilon: 0.5, log2_p, kappa: 1.0 }).unwrap();
        assert!(!c.success && c.bound_thm2.is_none() && c.bound_cor1.is_none());
    }
}

#[test]
fn local_devices_rarely_pass() {
    // facet behaviour: local, and hardest to reject
    let local = slice_joint(2.0);
    let f = optimised(0.2, &slice_joint(2.6));
    let rate = |n: usize| {
        let hits = (0..1000u64)
            .filter(|seed| {
                let t = simulate(&local, n, *seed);
                certify(&f, &t, CertifyParams { epsilon: 0.1, log2_p: -0.05 * n as f64, kappa: 1.0 }).unwrap().success
            })
            .count();
        hits as f64 / 1000.0
    };
    let rates: Vec<f64> = [40, 160, 640].into_iter().map(rate).collect();
    assert!(rates.iter().all(|r| *r <= 0.03), "{rates:?}");
    assert!(rates[2] <= rates[0], "{rates:?}");
}

#[test]
fn markov_bound_is_attained_by_a_deterministic_box() {
    // F = 4 on one cell of LD:0000 and (nearly) zero elsewhere is valid, and
    // the test event has probability exactly eps at eps = 4^-n
    let ext = ns_222_extremals(&uniform()).unwrap();
    let mut values = vec![1e-300; 16];
    values[0] = 4.0;
    let f = Pef::new(Scenario::CHSH, &values, 1.0).unwrap();
    assert!(is_valid_pef(&f, &ext).valid);
    let d = joint(&ld_box(LdLabel::new(0, 0, 0, 0)), &uniform()).unwrap();
    for n in 1..=3 {
        let eps = 0.25f64.powi(n as i32);
        let check = theorem1_exact_check(&f, &d, n, &[eps, eps * 0.999]).unwrap();
        assert_eq!(check.probabilities[0].1, eps);
        assert_eq!(check.probabilities[1].1, 0.0);
        assert!(check.holds());
        assert!((check.supermartingale - 1.0).abs() < 1e-12);
    }
}

#[test]
fn failure_probability_on_grid() {
    let ext = ns_222_extremals(&uniform()).unwrap();
    let rho = slice_joint(2.6);
    let grid: Vec<f64> = (1..100).map(|i| i as f64 / 100.0).collect();
    for f in [optimised(0.3, &rho), f_k(5, &ext).unwrap(), f_k(1, &ext).unwrap()] {
        for n in 1..=3 {
            let check = theorem1_exact_check(&f, &rho, n, &grid).unwrap();
            assert!(check.max_excess <= 1e-12 && check.supermartingale <= 1.0 + 1e-12, "{check:?}");
        }
    }
}

#[test]
fn simulated_certificate_tracks_the_net_rate() {
    let (n, epsilon, beta) = (100_000usize, 1e-4, 0.013);
    let rho = slice_joint(2.6);
    let mut cfg = PefOptConfig::new(beta, rho.clone()).unwrap();
    cfg.n = n as f64;
    cfg.epsilon = epsilon;
    let f = optimize_pef(&cfg, &ns_222_extremals(&uniform()).unwrap()).unwrap().pef;
    let trials = simulate(&rho, n, 42);
    let log2_p = choose_log2_p(&f, &rho, n, epsilon).unwrap();
    let cert = certify(&f, &trials, CertifyParams { epsilon, log2_p, kappa: 1.0 }).unwrap();
    assert!(cert.success);
    let expected = 0.3 - epsilon.log2().abs() / (n as f64 * beta);
    let got = cert.bound_cor1.unwrap() / n as f64;
    assert!((got - expected).abs() <= 0.15 * expected, "{got} vs {expected}");
}

#[test]
fn attack_traces_follow_the_model() {
    let target = slice_behaviour(SliceCoords::new(2.6, 0.0).unwrap()).unwrap();
    let attack = optimal_iid_attack(&target, &uniform()).unwrap();
    for n in 1..=3 {
        let theta = experiment_model_check(&AttackModel::new(attack.single_trial.clone(), n).unwrap(), n).unwrap();
        assert!(theta.holds(), "{theta:?}");
    }
    let n = 100_000;
    let trace = attack_trace(&attack, n, 21).unwrap();
    let observed = empirical_behaviour(Scenario::CHSH, &trace.trials, None).unwrap();
    assert!((chsh_value(&observed, PrLabel::STANDARD) - 2.6).abs() < 0.03);
    let lambda = attack.weights()[0].1;
    let se = (lambda * (1.0 - lambda) / n as f64).sqrt();
    assert!((trace.label_fractions()[0] - lambda).abs() < 3.0 * se);
    assert!(trace.component_deviation.iter().flatten().all(|d| *d < 0.05));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn simulation_is_a_function_of_the_seed(seed in any::<u64>(), n in 0usize..3000) {
        let d = slice_joint(2.4);
        let a = simulate(&d, n, seed);
        prop_assert_eq!(a.len(), n);
        prop_assert_eq!(&a, &simulate(&d, n, seed));
        prop_assert!(a.iter().enumerate().all(|(i, t)| t.index == i as u64 + 1 && t.z < 4 && t.c < 4));
    }

    #[test]
    fn success_matches_log_domain_event(log2_p in -60.0f64..0.0, eps in 0.001f64..0.9, seed in 0u64..50) {
        let rho = slice_joint(2.7);
        let f = f_k(3, &ns_222_extremals(&uniform()).unwrap()).unwrap();
        let trials = simulate(&rho, 300, seed);
        let c = certify(&f, &trials, CertifyParams { epsilon: eps, log2_p, kappa: 0.9 }).unwrap();
        let event = -(eps.log2() + c.pef_product) / f.beta() <= log2_p;
        prop_assert_eq!(c.success, event);
        if let Some(b) = c.bound_cor1 {
            prop_assert!((b - ((1.0 + 1.0 / f.beta()) * 0.9f64.log2() - log2_p)).abs() < 1e-12);
        }
    }
}
