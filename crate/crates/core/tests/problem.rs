use genbound::algorithms::*;
use genbound::problem::*;
use genbound::Error;
use proptest::prelude::*;

/// Gen error by looping over every ordered training sample, independent of the engine.
fn brute_gen_error<A, L>(
    alg: &A,
    loss: &L,
    dist: &DiscreteDistribution<A::Instance>,
    n: usize,
) -> f64
where
    A: Learner,
    L: Loss<A::Hypothesis, A::Instance>,
{
    let k = dist.len();
    let mut total = 0.0;
    let mut idx = vec![0usize; n];
    loop {
        let sample: Vec<_> = idx.iter().map(|&j| dist.support()[j].clone()).collect();
        let mass: f64 = idx.iter().map(|&j| dist.mass(j)).product();
        for &(seed, sm) in alg.seeds().seeds() {
            let w = alg.train(&sample, seed).unwrap();
            total +=
                mass * sm * (population_risk(loss, dist, &w) - empirical_risk(loss, &sample, &w));
        }
        let mut pos = n;
        loop {
            if pos == 0 {
                return total;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < k {
                break;
            }
            idx[pos] = 0;
        }
    }
}

fn check_all_forms<A, L>(alg: &A, loss: &L, dist: &DiscreteDistribution<A::Instance>, n: usize)
where
    A: Learner,
    L: Loss<A::Hypothesis, A::Instance>,
{
    let oracle = brute_gen_error(alg, loss, dist, n);
    for p in [
        Protocol::new(alg, loss, dist, n).unwrap(),
        Protocol::new(alg, loss, dist, n).unwrap().ordered(),
    ] {
        let r = gen_error_standard(&p, Mode::Exact).unwrap();
        assert!(
            (r.gen_error - oracle).abs() < 1e-12,
            "standard {} vs {oracle}",
            r.gen_error
        );
        assert!((r.direct_gen_error() - oracle).abs() < 1e-12);
        for e in [
            gen_error_flipped(&p, Mode::Exact).unwrap(),
            gen_error_masked_data(&p, Mode::Exact).unwrap(),
            gen_error_masked_hyp(&p, Mode::Exact).unwrap(),
        ] {
            assert!((e.value - oracle).abs() < 1e-12, "{} vs {oracle}", e.value);
        }
    }
}

#[test]
fn exact_gen_error_matches_brute_force() {
    let sign = SignErm::new(RademacherErmConfig::default()).unwrap();
    for n in 1..=6 {
        check_all_forms(&sign, &sign.loss(), &SignErm::distribution(), n);
    }
    let th = ThresholdErm::new(ThresholdErmConfig::default()).unwrap();
    for n in 1..=4 {
        check_all_forms(&th, &ZeroOneLoss, &th.distribution(), n);
    }
    let rerm = RegularizedErm::new(RegularizedErmConfig::default()).unwrap();
    for n in 1..=4 {
        check_all_forms(
            &rerm,
            &rerm.loss(),
            &RegularizedErm::default_distribution(),
            n,
        );
    }
    let gd = OneHotGd::new(OneHotGdConfig::paper(2)).unwrap();
    check_all_forms(&gd, &OneHotLinearLoss, &gd.distribution(), 2);
}

#[test]
fn sign_erm_gen_error_values() {
    let sign = SignErm::new(RademacherErmConfig::default()).unwrap();
    let loss = sign.loss();
    let dist = SignErm::distribution();
    for (n, expect) in [(3, 0.5), (5, 0.375), (7, 0.3125)] {
        let p = Protocol::new(&sign, &loss, &dist, n).unwrap();
        let g = gen_error_standard(&p, Mode::Exact).unwrap().gen_error;
        assert!((g - expect).abs() < 1e-12, "n={n}: {g}");
    }
}

#[test]
fn monte_carlo_within_four_stderr() {
    let th = ThresholdErm::new(ThresholdErmConfig::default()).unwrap();
    let dist = th.distribution();
    let p = Protocol::new(&th, &ZeroOneLoss, &dist, 3).unwrap();
    let exact = gen_error_standard(&p, Mode::Exact).unwrap().gen_error;
    let mc = gen_error_standard(
        &p,
        Mode::MonteCarlo {
            samples: 20_000,
            seed: 7,
        },
    )
    .unwrap();
    let se = mc.method.stderr().unwrap();
    assert!(se > 0.0);
    assert!(
        (mc.gen_error - exact).abs() <= 4.0 * se,
        "{} vs {exact} (se {se})",
        mc.gen_error
    );
    let again = gen_error_standard(
        &p,
        Mode::MonteCarlo {
            samples: 20_000,
            seed: 7,
        },
    )
    .unwrap();
    assert_eq!(mc, again);
}

#[test]
fn budget_is_enforced() {
    let sign = SignErm::new(RademacherErmConfig::default()).unwrap();
    let loss = sign.loss();
    let dist = SignErm::distribution();
    let p = Protocol::new(&sign, &loss, &dist, 3)
        .unwrap()
        .with_budget(5.0);
    assert!(matches!(
        gen_error_standard(&p, Mode::Exact),
        Err(Error::BudgetExceeded { .. })
    ));
    assert!(matches!(
        enumerate_outcomes(&dist, 4, 10.0),
        Err(Error::BudgetExceeded { .. })
    ));
}

#[test]
fn distribution_validation() {
    assert!(matches!(
        DiscreteDistribution::new(vec![1, 2], vec![0.5, 0.6]),
        Err(Error::InvalidDistribution(_))
    ));
    assert!(matches!(
        DiscreteDistribution::new(vec![1, 1], vec![0.5, 0.5]),
        Err(Error::InvalidDistribution(_))
    ));
    assert!(matches!(
        DiscreteDistribution::new(vec![1, 2], vec![1.0]),
        Err(Error::LengthMismatch { .. })
    ));
    assert!(matches!(
        DiscreteDistribution::<i32>::uniform(vec![]),
        Err(Error::InvalidDistribution(_))
    ));
}

#[test]
fn supersample_operations() {
    let ss = Supersample::from_columns(vec![1, 2, 3], vec![4, 5, 6]).unwrap();
    let mask = Mask::from_bits(&[0, 1, 0]).unwrap();
    assert_eq!(
        apply_mask(&ss, &mask).unwrap(),
        EvaluationSet(vec![1, 5, 3])
    );
    assert_eq!(ss.swap_row(1).unwrap().plus_column(), vec![1, 5, 3]);
    assert!(matches!(ss.swap_row(3), Err(Error::IndexOutOfRange { .. })));
    assert!(matches!(
        Mask::from_bits(&[2]),
        Err(Error::InvalidParameter(_))
    ));
    assert!(matches!(
        apply_mask(&ss, &Mask::new(vec![true])),
        Err(Error::LengthMismatch { .. })
    ));
    assert_eq!(neighbor_sample(&[1, 2, 3], 9, 0).unwrap(), vec![9, 2, 3]);
}

proptest! {
    #[test]
    fn multisets_cover_all_mass(k in 1usize..5, count in 0usize..6) {
        let probs: Vec<f64> = (1..=k).map(|j| j as f64).collect();
        let s: f64 = probs.iter().sum();
        let probs: Vec<f64> = probs.iter().map(|p| p / s).collect();
        let mut total = 0.0;
        let mut seen = 0usize;
        for_each_multiset(&probs, count, |idx, w| {
            assert!(idx.windows(2).all(|p| p[0] <= p[1]));
            total += w;
            seen += 1;
        });
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert_eq!(seen as f64, multiset_count(k, count));
    }

    #[test]
    fn tuples_enumerate_product_space(k in 1usize..4, count in 0usize..5) {
        let mut seen = 0usize;
        for_each_tuple(k, count, |_| seen += 1);
        prop_assert_eq!(seen, k.pow(count as u32));
    }
}
