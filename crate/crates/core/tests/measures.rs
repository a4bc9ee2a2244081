use gdms::measures::{
    construct_generic_word, empirical_periodic_quotient, q_of_bernoulli, q_of_periodic, q_of_periodic_level,
    semicontinuity_counterexample, BernoulliOptions, BernoulliSpec, Entropy, GapVerdict, GenericWordOptions,
};
use gdms::multifractal::{estimate_kl, KlOptions};
use gdms::{Alphabet, PotentialVector, SystemDescriptor, Word};
use proptest::prelude::*;

fn gauss() -> SystemDescriptor {
    SystemDescriptor::continued_fraction(Alphabet::Infinite)
}

fn coin() -> (SystemDescriptor, PotentialVector) {
    (
        SystemDescriptor::similarity(vec![0.5, 0.5]).unwrap(),
        PotentialVector::per_symbol(vec![vec![0.0], vec![1.0]]).unwrap(),
    )
}

#[test]
fn golden_cycle() {
    let j = PotentialVector::cf_parity_example();
    let q = q_of_periodic(&gauss(), &j, &Word::new(vec![1])).unwrap();
    let x = (5f64.sqrt() - 1.0) / 2.0;
    let i = 2.0 * (1.0 + x).ln();
    assert!((q.i_mean.mid() - i).abs() < 1e-13 && q.i_mean.width() < 1e-12, "{:?}", q.i_mean);
    for c in &q.q_value {
        assert!((c.mid() - 1.0 / i).abs() < 1e-12);
        assert!((c.mid() - 1.039).abs() < 1e-3);
    }
}

#[test]
fn two_one_cycle_against_fixed_point() {
    // [0; 2, 1, 2, 1, ...] solves 2x^2 + 2x - 1 = 0.
    let x = (3f64.sqrt() - 1.0) / 2.0;
    let y = 1.0 / (1.0 + x);
    let i = 2.0 * (2.0 + y).ln() + 2.0 * (1.0 + x).ln();
    let j = PotentialVector::cf_parity_example();
    let q = q_of_periodic(&gauss(), &j, &Word::new(vec![2, 1])).unwrap();
    let sj = [1.0 - 1.0, 1.0 - 1.0];
    assert!((q.i_mean.mid() * 2.0 - i).abs() < 1e-12);
    for (c, s) in q.q_value.iter().zip(sj) {
        assert!((c.mid() - s / i).abs() < 1e-9);
    }
    let long = empirical_periodic_quotient(&gauss(), &PotentialVector::per_symbol(vec![vec![1.0], vec![0.0]]).unwrap(), &Word::new(vec![2, 1]), 1_000_000, 0.5).unwrap();
    assert!((long[0] - 1.0 / i).abs() < 1e-6, "{long:?}");
}

#[test]
fn similarity_cycle_is_reciprocal_log() {
    let (sys, j) = coin();
    let q = q_of_periodic(&sys, &j, &Word::new(vec![2])).unwrap();
    assert!((q.q_value[0].mid() - 1.0 / 2f64.ln()).abs() < 1e-15);
    let err = q_of_periodic(&sys, &j, &Word::new(vec![3])).unwrap_err();
    assert!(matches!(err, gdms::Error::UnknownEdge { .. } | gdms::Error::Inadmissible { .. } | gdms::Error::NotCyclable { .. }), "{err:?}");
}

#[test]
fn periodic_level_enclosures_shrink() {
    let j = PotentialVector::per_symbol(vec![vec![1.0], vec![-1.0], vec![0.5]]).unwrap();
    let sys = gauss();
    let c = Word::new(vec![1, 3]);
    let tight = q_of_periodic(&sys, &j, &c).unwrap().q_value[0];
    let mut prev = f64::INFINITY;
    for m in 1..=24 {
        let q = q_of_periodic_level(&sys, &j, &c, m).unwrap()[0];
        assert!(q.encloses(&tight), "m={m} {q} {tight}");
        for x0 in [0.0, 0.3, 1.0] {
            let e = empirical_periodic_quotient(&sys, &j, &c, m, x0).unwrap()[0];
            assert!(q.widen(1e-12).contains(e), "m={m} {q} {e}");
        }
        assert!(q.width() * m as f64 <= 3.0 * tight.mid().abs() * 4f64.ln());
        assert!(q.width() <= prev);
        prev = q.width();
    }
}

#[test]
fn uniform_coin_has_log_two_mean() {
    let (sys, j) = coin();
    let s = q_of_bernoulli(&sys, &j, &BernoulliSpec::Finite { probs: vec![0.5, 0.5] }, &BernoulliOptions::default()).unwrap();
    assert!((s.i_mean.lo - 2f64.ln()).abs() < 1e-15 && (s.i_mean.hi - 2f64.ln()).abs() < 1e-15);
    assert!((s.q_value[0].mid() - 0.5 / 2f64.ln()).abs() < 1e-15);
    match s.entropy {
        Entropy::Value(h) => assert!((h.mid() - 2f64.ln()).abs() < 1e-15),
        e => panic!("{e:?}"),
    }
}

#[test]
fn degenerate_bernoulli_is_the_fixed_point() {
    let j = PotentialVector::cf_parity_example();
    let s = q_of_bernoulli(&gauss(), &j, &BernoulliSpec::Finite { probs: vec![1.0] }, &BernoulliOptions::default()).unwrap();
    let i = 2.0 * ((5f64.sqrt() + 1.0) / 2.0).ln();
    assert!(s.i_mean.contains(i) && s.i_mean.width() < 1e-9, "{:?}", s.i_mean);
}

#[test]
fn inverse_square_and_heavy_tail() {
    let sys = gauss();
    let j = PotentialVector::cf_parity_example();
    let opts = BernoulliOptions { cutoff: 20_000, ..Default::default() };
    let lim = q_of_bernoulli(&sys, &j, &BernoulliSpec::InverseSquare, &opts).unwrap();
    // 2/S sum log(k+1)/k^2 from the upper cylinder bound, log k / k^2 from the lower.
    assert!(lim.i_mean.hi < 2.2 && lim.i_mean.hi > 2.18, "{:?}", lim.i_mean);
    assert!(lim.i_mean.lo > 1.1);
    match lim.entropy {
        Entropy::Value(h) => {
            let exact = (std::f64::consts::PI.powi(2) / 6.0).ln() + 2.0 * 6.0 / std::f64::consts::PI.powi(2) * 0.937_548_254_315_843_8;
            assert!(h.widen(1e-12).contains(exact), "{h}");
        }
        e => panic!("{e:?}"),
    }
    let heavy = q_of_bernoulli(&sys, &j, &BernoulliSpec::HeavyTail, &opts).unwrap();
    assert_eq!(heavy.i_mean.hi, f64::INFINITY);
    assert_eq!(heavy.entropy, Entropy::Infinite);
    assert!(heavy.q_value.iter().all(|q| q.contains(0.0)));
}

#[test]
fn monte_carlo_is_seeded_and_consistent() {
    let sys = gauss();
    let j = PotentialVector::zero(1);
    let opts = BernoulliOptions { cutoff: 1000, mc_samples: 4000, seed: 7 };
    let spec = BernoulliSpec::Finite { probs: vec![0.25; 4] };
    let a = q_of_bernoulli(&sys, &j, &spec, &opts).unwrap();
    let b = q_of_bernoulli(&sys, &j, &spec, &opts).unwrap();
    assert_eq!(a, b);
    let mc = a.monte_carlo.unwrap();
    assert!(a.i_mean.widen(5.0 * mc.std_error).contains(mc.i_mean), "{mc:?} {:?}", a.i_mean);
}

#[test]
fn counterexample_needs_large_log_n() {
    let r = semicontinuity_counterexample(100.0, &[1e3, 1e4, 1e5]).unwrap();
    assert!(r.limit_i_mean.hi <= 3.0);
    assert!(r.rows.iter().all(|row| !row.valid));
    assert_eq!(r.verdict, GapVerdict::Inconclusive);

    let r = semicontinuity_counterexample(5.0, &[1e50, 1e60, 1e70]).unwrap();
    assert_eq!(r.verdict, GapVerdict::StrictGap, "{}", r.reason);
    for row in &r.rows {
        assert!(row.valid);
        assert!(row.i_mean.lo >= row.floor, "{row:?}");
    }
    assert!(r.rows.windows(2).all(|w| w[1].cylinder_gap[0] < w[0].cylinder_gap[0]));

    let r = semicontinuity_counterexample(0.1, &[1e3, 1e4, 1e5]).unwrap();
    assert_eq!(r.verdict, GapVerdict::Inconclusive);
}

#[test]
fn generic_word_hits_cycle_target() {
    let (sys, j) = coin();
    let target = [1.0 / (2.0 * 2f64.ln())];
    let schedule: Vec<f64> = (1..=6).map(|k| 0.5f64.powi(k)).collect();
    let g = construct_generic_word(&sys, &j, &target, &schedule, &GenericWordOptions::default()).unwrap();
    assert!(g.complete, "{}", g.note);
    for c in &g.checkpoints {
        assert!(c.error <= c.epsilon, "{c:?}");
    }
    let out = construct_generic_word(&sys, &j, &[2.0], &schedule, &GenericWordOptions::default());
    assert!(out.is_err());
}

#[test]
fn generic_word_on_continued_fractions() {
    let sys = gauss();
    let j = PotentialVector::per_symbol(vec![vec![1.0], vec![0.0], vec![0.0]]).unwrap();
    let target = [0.4];
    let schedule: Vec<f64> = (1..=4).map(|k| 0.5f64.powi(k)).collect();
    let opts = GenericWordOptions { max_period: 8, truncation: 3, ..Default::default() };
    let g = construct_generic_word(&sys, &j, &target, &schedule, &opts).unwrap();
    assert!(g.complete, "{}", g.note);
    let errs: Vec<f64> = g.checkpoints.iter().map(|c| c.error).collect();
    assert!(errs.iter().zip(&schedule).all(|(e, s)| e <= s), "{errs:?}");
    assert_eq!(g.prefix(5).len(), 5);
}

#[test]
fn kl_samples_contain_gradients() {
    let (sys, j) = coin();
    let m: Vec<Vec<f64>> = vec![vec![0.2], vec![0.7], vec![1.2]];
    let r = estimate_kl(&sys, &j, &m, &KlOptions { truncation: 2, ..Default::default() }).unwrap();
    let ends: Vec<f64> = r.k_points.iter().filter(|(w, _)| w.len() == 1).map(|(_, q)| q[0]).collect();
    assert_eq!(ends.len(), 2);
    assert!(ends.contains(&0.0));
    assert!(ends.iter().any(|q| (q - 1.0 / 2f64.ln()).abs() < 1e-14));
    assert!(r.consistent, "{r:?}");
    let far = estimate_kl(&sys, &j, &[vec![2.0]], &KlOptions { truncation: 2, ..Default::default() }).unwrap();
    assert!(!far.consistent);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn quotient_range_bound(cycle in proptest::collection::vec(1u32..=8, 1..6)) {
        let j = PotentialVector::cf_parity_example();
        let q = q_of_periodic(&gauss(), &j, &Word::new(cycle)).unwrap();
        let sup_j = 2f64.sqrt();
        let inf_i = -SystemDescriptor::continued_fraction(Alphabet::Infinite).family().contraction().ln();
        let norm = q.q_mid().iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!(norm <= sup_j / inf_i + 1e-12);
    }

    #[test]
    fn finite_entropy_bounded_by_support(w in proptest::collection::vec(0.01f64..1.0, 1..7)) {
        let total: f64 = w.iter().sum();
        let probs: Vec<f64> = w.iter().map(|x| x / total).collect();
        let (sys, _) = (SystemDescriptor::continued_fraction(Alphabet::Finite(6)), ());
        let s = q_of_bernoulli(&sys, &PotentialVector::zero(1), &BernoulliSpec::Finite { probs: probs.clone() }, &BernoulliOptions::default());
        if let Ok(s) = s {
            let h = match s.entropy { Entropy::Value(h) => h.mid(), _ => f64::NAN };
            let exact: f64 = -probs.iter().map(|p| p * p.ln()).sum::<f64>();
            prop_assert!((h - exact).abs() < 1e-12);
            prop_assert!(h <= (probs.len() as f64).ln() + 1e-12);
        }
    }
}
