#![allow(clippy::needless_range_loop)]

use std::collections::HashMap;

use genbound::algorithms::*;
use genbound::problem::{DiscreteDistribution, HypothesisKey, Learner, Loss, Protocol};
use genbound::stability::*;
use proptest::prelude::*;

/// Direct evaluation of the definitions over every ordered `(S, Zᵢ′)` and row.
/// Deterministic learners only.
struct Brute {
    beta2: f64,
    gamma: [f64; 4],
}

fn brute<A, L>(alg: &A, loss: &L, dist: &DiscreteDistribution<A::Instance>, n: usize) -> Brute
where
    A: Learner,
    A::Hypothesis: std::fmt::Debug,
    L: Loss<A::Hypothesis, A::Instance>,
{
    let k = dist.len();
    let sup = dist.support();
    let mu = dist.masses();
    let total = k.pow(n as u32 + 1);
    let mut beta2 = 0f64;
    let mut gamma = [0f64; 4];
    for i in 0..n {
        // key(w) -> (loss row of w, mass, Σ mass·loss row of wⁱ)
        let mut cond: HashMap<HypothesisKey, (Vec<f64>, f64, Vec<f64>)> = HashMap::new();
        let mut pair_sup: HashMap<(HypothesisKey, HypothesisKey), (f64, f64)> = HashMap::new();
        let mut g4 = 0.0;
        for code in 0..total {
            let mut c = code;
            let mut idx = Vec::new();
            for _ in 0..=n {
                idx.push(c % k);
                c /= k;
            }
            let mass: f64 = idx.iter().map(|&j| mu[j]).product();
            let s: Vec<_> = idx[..n].iter().map(|&j| sup[j].clone()).collect();
            let mut si = s.clone();
            si[i] = sup[idx[n]].clone();
            let w = alg.train(&s, 0).unwrap();
            let wi = alg.train(&si, 0).unwrap();
            let lw: Vec<f64> = sup.iter().map(|z| loss.eval(&w, z)).collect();
            let lwi: Vec<f64> = sup.iter().map(|z| loss.eval(&wi, z)).collect();
            for z in 0..k {
                beta2 = beta2.max((lw[z] - lwi[z]).abs());
            }
            let gi = (lw[idx[i]] - lwi[idx[i]]).abs();
            g4 += mass * gi * gi;
            let e = pair_sup
                .entry((alg.key(&w), alg.key(&wi)))
                .or_insert((0.0, 0.0));
            e.0 += mass;
            e.1 = e.1.max(gi);
            let e = cond
                .entry(alg.key(&w))
                .or_insert((lw.clone(), 0.0, vec![0.0; k]));
            e.1 += mass;
            for z in 0..k {
                e.2[z] += mass * lwi[z];
            }
        }
        let mut g1 = 0f64;
        let mut g2 = 0.0;
        for (lw, m, acc) in cond.values() {
            for z in 0..k {
                let d = lw[z] - acc[z] / m;
                g1 = g1.max(d.abs());
                g2 += m * mu[z] * d * d;
            }
        }
        let g3: f64 = pair_sup.values().map(|(m, s)| m * s).sum();
        gamma[0] = gamma[0].max(g1);
        gamma[1] = gamma[1].max(g2.sqrt());
        gamma[2] = gamma[2].max(g3);
        gamma[3] = gamma[3].max(f64::sqrt(g4));
    }
    Brute { beta2, gamma }
}

fn check_against_brute<A, L>(alg: &A, loss: &L, dist: &DiscreteDistribution<A::Instance>, n: usize)
where
    A: Learner,
    A::Hypothesis: std::fmt::Debug,
    L: Loss<A::Hypothesis, A::Instance>,
{
    let oracle = brute(alg, loss, dist, n);
    for p in [
        Protocol::new(alg, loss, dist, n).unwrap(),
        Protocol::new(alg, loss, dist, n).unwrap().ordered(),
    ] {
        let r = stability_exact(&p).unwrap().report;
        assert!((r.beta2.value - oracle.beta2).abs() < 1e-12);
        let got = [
            r.gamma1.unwrap().value,
            r.gamma2.unwrap().value,
            r.gamma3.value,
            r.gamma4.value,
        ];
        for (g, o) in got.iter().zip(oracle.gamma) {
            assert!((g - o).abs() < 1e-12, "{got:?} vs {:?}", oracle.gamma);
        }
        for v in got {
            assert!(v <= r.beta2.value + 1e-12);
        }
        assert!(got[1] <= got[0] + 1e-12);
    }
}

#[test]
fn sign_erm_matches_definitions() {
    let alg = SignErm::new(RademacherErmConfig::default()).unwrap();
    for n in [2, 3, 4] {
        check_against_brute(&alg, &alg.loss(), &SignErm::distribution(), n);
    }
}

#[test]
fn threshold_and_rerm_match_definitions() {
    let thr = ThresholdErm::new(ThresholdErmConfig::default()).unwrap();
    check_against_brute(&thr, &ZeroOneLoss, &thr.distribution(), 3);
    let r = RegularizedErm::new(RegularizedErmConfig::default()).unwrap();
    check_against_brute(&r, &r.loss(), &RegularizedErm::default_distribution(), 3);
}

#[test]
fn sign_erm_tables() {
    let alg = SignErm::new(RademacherErmConfig::default()).unwrap();
    let loss = alg.loss();
    let dist = SignErm::distribution();
    let p = Protocol::new(&alg, &loss, &dist, 3).unwrap();
    let a = stability_exact(&p).unwrap();
    assert_eq!(a.report.beta2.value, 2.0);
    assert_eq!(a.report.beta1.value, 2.0);
    let t = a.tables(1);
    let mut opposite = 0;
    for (&(wp, wm), st) in &t.pairs {
        if wp == wm {
            assert_eq!(st.delta1, 0.0);
            assert_eq!(st.lambda(), 0.0);
        } else {
            assert_ne!(p.hypothesis(wp), p.hypothesis(wm));
            assert_eq!(st.delta1, 2.0);
            assert!((st.lambda() - 1.0).abs() < 1e-12);
            opposite += 1;
        }
    }
    assert_eq!(opposite, 2);
    for z in 0..2 {
        assert_eq!(t.delta2[z], Some(2.0));
    }
    assert!(t.expected_delta1() <= a.report.beta2.value);
}

#[test]
fn constant_algorithm_is_perfectly_stable() {
    struct Constant;
    impl Learner for Constant {
        type Instance = i8;
        type Hypothesis = i8;
        fn train(&self, _: &[i8], _: u32) -> genbound::Result<i8> {
            Ok(1)
        }
        fn key(&self, h: &i8) -> HypothesisKey {
            HypothesisKey::exact([*h as i64])
        }
        fn is_symmetric(&self) -> bool {
            true
        }
    }
    let dist = SignErm::distribution();
    let loss = |w: &i8, z: &i8| -(*w as f64) * (*z as f64);
    let p = Protocol::new(&Constant, &loss, &dist, 3).unwrap();
    let r = stability_exact(&p).unwrap().report;
    for v in [r.beta1.value, r.beta2.value, r.gamma3.value, r.gamma4.value] {
        assert_eq!(v, 0.0);
    }
    assert_eq!(r.gamma1.unwrap().value, 0.0);
    assert_eq!(r.gamma2.unwrap().value, 0.0);
}

#[test]
fn onehot_gd_uniform_stability() {
    for n in [2usize, 3] {
        let alg = OneHotGd::new(OneHotGdConfig::paper(n)).unwrap();
        let dist = alg.distribution();
        let p = Protocol::new(&alg, &OneHotLinearLoss, &dist, n).unwrap();
        let b = beta2_exact(&p).unwrap();
        // moving one unit of count between two coordinates changes w by η·T/n
        let expect = 1.0 / (n as f64).sqrt();
        assert!((b - expect).abs() < 1e-12, "n={n}: {b}");
        assert!(b * (n as f64).sqrt() <= 2.0 * 2f64.sqrt());
    }
}

#[test]
fn two_seed_weak_stability_averages_over_seeds() {
    /// Outputs the first instance when seed is 0 and a constant otherwise.
    struct Coin;
    impl Learner for Coin {
        type Instance = i8;
        type Hypothesis = i8;
        fn train(&self, s: &[i8], seed: u32) -> genbound::Result<i8> {
            Ok(if seed == 0 { s[0] } else { 1 })
        }
        fn key(&self, h: &i8) -> HypothesisKey {
            HypothesisKey::exact([*h as i64])
        }
        fn seeds(&self) -> genbound::problem::SeedDistribution {
            genbound::problem::SeedDistribution::uniform(2).unwrap()
        }
        fn is_symmetric(&self) -> bool {
            false
        }
    }
    let dist = SignErm::distribution();
    let loss = |w: &i8, z: &i8| -(*w as f64) * (*z as f64);
    let p = Protocol::new(&Coin, &loss, &dist, 2).unwrap();
    let r = stability_exact(&p).unwrap().report;
    assert_eq!(r.beta2.value, 2.0);
    assert_eq!(r.beta1.value, 1.0);
}

#[test]
fn sampled_beta_is_a_lower_bound() {
    let alg = SignErm::new(RademacherErmConfig::default()).unwrap();
    let loss = alg.loss();
    let dist = SignErm::distribution();
    let p = Protocol::new(&alg, &loss, &dist, 3).unwrap();
    assert!(beta_mc(&p, 0, 1).is_err());
    let b = beta_mc(&p, 200, 5).unwrap();
    assert_eq!(b, 2.0);
    let r = stability_mc(&p, 500, 3).unwrap();
    assert_eq!(r.beta2.method, StabilityMethod::McLowerBound);
    assert!(r.gamma1.is_none());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sampled_beta_monotone_and_below_exact(seed in any::<u64>(), a in 1usize..40, b in 1usize..40) {
        let thr = ThresholdErm::new(ThresholdErmConfig::default()).unwrap();
        let dist = thr.distribution();
        let p = Protocol::new(&thr, &ZeroOneLoss, &dist, 3).unwrap();
        let exact = beta2_exact(&p).unwrap();
        let (lo, hi) = (a.min(b), a.max(b));
        let x = beta_mc(&p, lo, seed).unwrap();
        let y = beta_mc(&p, hi, seed).unwrap();
        prop_assert!(x <= y);
        prop_assert!(y <= exact + 1e-12);
    }

    #[test]
    fn lambda_in_unit_interval(n in 2usize..5, tie in prop::sample::select(vec![-1i8, 1])) {
        let cfg = RademacherErmConfig { tie_break: tie, ..Default::default() };
        let alg = SignErm::new(cfg).unwrap();
        let loss = alg.loss();
        let dist = SignErm::distribution();
        let p = Protocol::new(&alg, &loss, &dist, n).unwrap();
        let a = stability_exact(&p).unwrap();
        for t in a.computed_tables() {
            prop_assert!(t.max_lambda() <= 1.0 + 1e-12);
            prop_assert!(t.expected_delta1() <= a.report.beta2.value + 1e-12);
        }
    }
}
