use std::f64::consts::LN_2;

use genbound::algorithms::*;
use genbound::information::*;
use genbound::numeric::binary_entropy;
use genbound::problem::{Mode, Protocol};

fn sign_setup() -> (
    SignErm,
    SignLoss,
    genbound::problem::DiscreteDistribution<i8>,
) {
    let alg = SignErm::new(RademacherErmConfig::default()).unwrap();
    let loss = alg.loss();
    (alg, loss, SignErm::distribution())
}

#[test]
fn sign_erm_whole_sample_information_is_ln2() {
    let (alg, loss, dist) = sign_setup();
    let p = Protocol::new(&alg, &loss, &dist, 3).unwrap();
    let v = iomi_total(&p).unwrap().value;
    assert!((v - LN_2).abs() < 1e-12, "{v}");
}

#[test]
fn sign_erm_individual_iomi_matches_hand_value() {
    let (alg, loss, dist) = sign_setup();
    let p = Protocol::new(&alg, &loss, &dist, 3).unwrap();
    // P(W = ε₁) = 3/4 with both marginals fair
    let oracle = LN_2 - binary_entropy(0.75);
    for i in 0..3 {
        let v = quantity(&p, Quantity::IomiIndividual, i, Mode::Exact)
            .unwrap()
            .value;
        assert!((v - oracle).abs() < 1e-12, "row {i}: {v} vs {oracle}");
    }
}

#[test]
fn w_given_first_instance_table() {
    let (alg, loss, dist) = sign_setup();
    let p = Protocol::new(&alg, &loss, &dist, 3).unwrap();
    let t = build_protocol_table(&p, 0, &[Var::WPlus, Var::ZPlus]).unwrap();
    let z_plus = dist.index_of(&1).unwrap() as u32;
    let mut agree = 0.0;
    let mut total = 0.0;
    for (cell, m) in t.cells() {
        if cell[1] == z_plus {
            total += m;
            if p.hypothesis(genbound::problem::HypId(cell[0])) == 1 {
                agree += m;
            }
        }
    }
    assert!((agree / total - 0.75).abs() < 1e-12);
}

#[test]
fn orderings_on_small_configs() {
    let (alg, loss, dist) = sign_setup();
    let thr = ThresholdErm::new(ThresholdErmConfig::default()).unwrap();
    let tdist = thr.distribution();
    for n in [2, 3] {
        let p = Protocol::new(&alg, &loss, &dist, n).unwrap();
        check_chain(&p, false);
        let p = Protocol::new(&thr, &ZeroOneLoss, &tdist, n).unwrap();
        check_chain(&p, true);
    }
}

fn check_chain<A, L>(p: &Protocol<'_, A, L>, with_f: bool)
where
    A: genbound::problem::Learner,
    L: genbound::problem::Loss<A::Hypothesis, A::Instance>,
{
    let mut qs = vec![
        Quantity::IomiIndividual,
        Quantity::IomiConditional,
        Quantity::HypCmi,
        Quantity::SsCmi,
        Quantity::LdMi,
        Quantity::LdCmi,
        Quantity::ECmi,
    ];
    if with_f {
        qs.push(Quantity::FCmi);
    }
    for i in 0..p.n() {
        let vals: std::collections::HashMap<Quantity, f64> = quantities_exact(p, &qs, i)
            .unwrap()
            .into_iter()
            .map(|(q, d)| (q, d.expectation()))
            .collect();
        let v = |q| vals[&q];
        let tol = 1e-10;
        assert!((v(Quantity::HypCmi) - v(Quantity::SsCmi)).abs() < tol);
        assert!(v(Quantity::IomiIndividual) <= v(Quantity::IomiConditional) + tol);
        assert!(v(Quantity::LdMi) <= v(Quantity::LdCmi) + tol);
        assert!(v(Quantity::LdCmi) <= v(Quantity::ECmi) + tol);
        let top = if with_f {
            assert!(v(Quantity::ECmi) <= v(Quantity::FCmi) + tol);
            v(Quantity::FCmi)
        } else {
            v(Quantity::ECmi)
        };
        assert!(top <= v(Quantity::SsCmi) + tol);
        assert!(v(Quantity::HypCmi) <= LN_2 + tol);
    }
}

#[test]
fn sign_erm_hyp_cmi_hand_value() {
    // (W̃⁺, W̃⁻) = (ε₁⁺, ε₁⁻) iff the other two instances cancel; U is then
    // revealed exactly when ε₁⁺ ≠ ε₁⁻
    let (alg, loss, dist) = sign_setup();
    let p = Protocol::new(&alg, &loss, &dist, 3).unwrap();
    let v = quantity(&p, Quantity::HypCmi, 0, Mode::Exact)
        .unwrap()
        .value;
    assert!((v - LN_2 / 4.0).abs() < 1e-12, "{v}");
    let d = quantity_disintegrated(&p, Quantity::HypCmi, 0).unwrap();
    assert!((d.sup() - LN_2).abs() < 1e-12);
}

#[test]
fn f_cmi_unsupported_without_predictions() {
    let (alg, loss, dist) = sign_setup();
    let p = Protocol::new(&alg, &loss, &dist, 2).unwrap();
    assert!(matches!(
        quantity(&p, Quantity::FCmi, 0, Mode::Exact),
        Err(genbound::Error::Unsupported(..))
    ));
}

#[test]
fn onehot_hyp_cmi_closed_form() {
    let n = 2;
    let alg = OneHotGd::new(OneHotGdConfig::paper(n)).unwrap();
    let dist = alg.distribution();
    let p = Protocol::new(&alg, &OneHotLinearLoss, &dist, n).unwrap();
    let d = alg.cfg.d as f64;
    let v = quantity(&p, Quantity::HypCmi, 0, Mode::Exact)
        .unwrap()
        .value;
    assert!((v - LN_2 * (1.0 - 1.0 / d)).abs() < 1e-12, "{v}");
    let std = quantity(&p, Quantity::StdCmi, 0, Mode::Exact)
        .unwrap()
        .value;
    assert!(std >= 0.1 * LN_2, "{std}");
}

#[test]
fn plugin_tracks_exact_value() {
    let thr = ThresholdErm::new(ThresholdErmConfig::default()).unwrap();
    let dist = thr.distribution();
    let p = Protocol::new(&thr, &ZeroOneLoss, &dist, 3).unwrap();
    for q in [Quantity::IomiIndividual, Quantity::HypCmi, Quantity::FCmi] {
        let exact = quantity(&p, q, 1, Mode::Exact).unwrap().value;
        let mc = quantity(
            &p,
            q,
            1,
            Mode::MonteCarlo {
                samples: 20_000,
                seed: 11,
            },
        )
        .unwrap();
        let se = mc.method.stderr().unwrap();
        assert!(
            (mc.value - exact).abs() <= 4.0 * se,
            "{q}: {} vs {exact} ± {se}",
            mc.value
        );
    }
}

#[test]
fn plugin_rejects_tiny_sample() {
    let (alg, loss, dist) = sign_setup();
    let p = Protocol::new(&alg, &loss, &dist, 2).unwrap();
    assert!(plugin_estimate(&p, Quantity::HypCmi, 0, 99, 1).is_err());
}

#[test]
fn vector_cmi_bounded_by_mask_entropy() {
    let (alg, loss, dist) = sign_setup();
    let p = Protocol::new(&alg, &loss, &dist, 3).unwrap();
    let v = vec_cmi(&p).unwrap();
    assert_eq!(v.method, VectorMethod::Exact);
    assert!(v.value >= 0.0 && v.value <= 3.0 * LN_2 + 1e-12);
    let tiny = Protocol::new(&alg, &loss, &dist, 3)
        .unwrap()
        .with_budget(10.0);
    assert_eq!(vec_cmi(&tiny).unwrap().method, VectorMethod::Ceiling);
}

#[test]
fn threshold_vector_f_cmi_dominates_row_sum() {
    let thr = ThresholdErm::new(ThresholdErmConfig::default()).unwrap();
    let dist = thr.distribution();
    let p = Protocol::new(&thr, &ZeroOneLoss, &dist, 3).unwrap();
    let joint = vec_f_cmi(&p).unwrap().unwrap();
    let sum: f64 = (0..3)
        .map(|i| quantity(&p, Quantity::FCmi, i, Mode::Exact).unwrap().value)
        .sum();
    assert!(sum <= joint + 1e-10, "{sum} > {joint}");
    let n = 3.0;
    assert!(joint <= 2.0 * (std::f64::consts::E * n).ln());
}
