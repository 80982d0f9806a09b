//! Acceptance criteria 1-9. Each test prints one `PASS`/`FAIL` line before asserting.

#![allow(clippy::needless_range_loop)]

use std::f64::consts::{E, LN_2, SQRT_2};
use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::{Duration, Instant};

use genbound::algorithms::*;
use genbound::bounds::{bernstein_h, birthday_floor};
use genbound::experiments::*;
use genbound::information::{plugin_estimate, quantity, ALL_QUANTITIES};
use genbound::numeric::log_log_slope;
use genbound::problem::{Learner, Loss, Mode, Protocol};
use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestRunner};

/// The larger runs need most of the memory budget, so criteria run one at a time.
static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(criterion: u32, title: &str, failures: &[String]) {
    if failures.is_empty() {
        println!("PASS criterion {criterion}: {title}");
    } else {
        println!("FAIL criterion {criterion}: {title}");
        for f in failures {
            println!("    {f}");
        }
    }
    assert!(
        failures.is_empty(),
        "criterion {criterion} failed:\n{}",
        failures.join("\n")
    );
}

const SWEEP_CONFIGS: &[(Example, &[usize])] = &[
    (Example::SignErm, &[1, 2, 3, 4, 5, 6, 7]),
    (Example::OnehotGd, &[1, 2, 3]),
    (Example::RegularizedErm, &[3]),
    (Example::ThresholdErm, &[1, 2, 3, 4, 5]),
];

struct Sweep {
    analyses: Vec<Analysis>,
    elapsed: Duration,
}

/// Exact analyses of every acceptance config, computed once.
fn all_configs() -> &'static Sweep {
    static CELL: OnceLock<Sweep> = OnceLock::new();
    CELL.get_or_init(|| {
        let start = Instant::now();
        let mut analyses = Vec::new();
        for &(example, ns) in SWEEP_CONFIGS {
            let cfg = ExperimentConfig::new(example, ns.to_vec());
            for &n in ns {
                analyses.push(analyse(&cfg, n).unwrap());
            }
        }
        Sweep {
            analyses,
            elapsed: start.elapsed(),
        }
    })
}

fn label(a: &Analysis) -> String {
    format!("{} n={}", a.example, a.n)
}

fn rows(a: &Analysis, name: &str) -> Vec<f64> {
    a.row_values(name)
        .unwrap_or_else(|| panic!("{}: no {name}", label(a)))
}

fn scalar(a: &Analysis, name: &str) -> f64 {
    a.scalar(name)
        .unwrap_or_else(|| panic!("{}: no {name}", label(a)))
}

#[test]
fn criterion_1_sign_erm_exactness() {
    let _g = serial();
    let mut bad = Vec::new();
    let start = Instant::now();
    for n in [3usize, 5, 7] {
        // E|Σε| over all 2^n sign patterns
        let mean_abs: f64 = (0..1u32 << n)
            .map(|bits| {
                let s: i32 = (0..n)
                    .map(|j| if bits >> j & 1 == 1 { 1 } else { -1 })
                    .sum();
                f64::from(s.abs())
            })
            .sum::<f64>()
            / f64::from(1u32 << n);
        let oracle = mean_abs / n as f64;
        let cfg = ExperimentConfig::new(Example::SignErm, vec![n]);
        let a = analyse(&cfg, n).unwrap();
        for name in [
            "gen_error",
            "gen_error_direct",
            "gen_error_flipped",
            "gen_error_masked_data",
            "gen_error_masked_hyp",
        ] {
            let v = scalar(&a, name);
            if (v - oracle).abs() > 1e-10 {
                bad.push(format!("n={n}: {name} = {v}, enumeration gives {oracle}"));
            }
        }
        let g = scalar(&a, "gen_error");
        if g < 1.0 / (2.0 * n as f64).sqrt() {
            bad.push(format!("n={n}: gen error {g} below 1/sqrt(2n)"));
        }
        let info = scalar(&a, "iomi_total");
        if (info - LN_2).abs() > 1e-10 || info > 1.0 {
            bad.push(format!("n={n}: I(W;S) = {info}"));
        }
        let beta2 = scalar(&a, "beta2");
        if beta2 != 2.0 {
            bad.push(format!("n={n}: beta2 = {beta2}"));
        }
    }
    let t = start.elapsed();
    if t >= Duration::from_secs(5) {
        bad.push(format!("took {t:?}"));
    }
    report(1, "sign-ERM gen error, I(W;S) and beta2 are exact", &bad);
}

#[test]
fn criterion_2_bound_soundness() {
    let _g = serial();
    let sweep = all_configs();
    let mut bad = Vec::new();
    for a in &sweep.analyses {
        for b in a.bounds.iter().filter(|b| b.applicable) {
            let cmp = b
                .comparison
                .unwrap_or_else(|| panic!("{} {}: no comparison", label(a), b.id));
            if b.value < cmp - 1e-9 {
                bad.push(format!(
                    "{} {}: bound {} < {}",
                    label(a),
                    b.id,
                    b.value,
                    cmp
                ));
            }
        }
    }
    if sweep.elapsed >= Duration::from_secs(120) {
        bad.push(format!("exact runs took {:?}", sweep.elapsed));
    }
    report(2, "every applicable bound dominates its exact target", &bad);
}

#[test]
fn criterion_3_hypothesis_cmi_relations() {
    let _g = serial();
    let mut bad = Vec::new();
    for a in &all_configs().analyses {
        let hyp = rows(a, "hyp_cmi");
        let iomi = rows(a, "iomi_individual");
        let ss = rows(a, "ss_cmi");
        for i in 0..a.n {
            if hyp[i] > iomi[i] + 1e-10 {
                bad.push(format!(
                    "{} row {}: hyp_cmi {} > iomi_individual {}",
                    label(a),
                    i + 1,
                    hyp[i],
                    iomi[i]
                ));
            }
            if (hyp[i] - ss[i]).abs() > 1e-10 {
                bad.push(format!(
                    "{} row {}: hyp_cmi {} != ss_cmi {}",
                    label(a),
                    i + 1,
                    hyp[i],
                    ss[i]
                ));
            }
        }
    }
    report(3, "hyp_cmi <= iomi_individual and hyp_cmi = ss_cmi", &bad);
}

#[test]
fn criterion_4_data_processing_chain() {
    let _g = serial();
    let mut bad = Vec::new();
    for a in &all_configs().analyses {
        let mut chain = vec!["ld_cmi", "e_cmi"];
        if a.example == Example::ThresholdErm {
            chain.push("f_cmi");
        }
        chain.push("ss_cmi");
        let values: Vec<Vec<f64>> = chain.iter().map(|q| rows(a, q)).collect();
        for i in 0..a.n {
            for k in 1..chain.len() {
                if values[k - 1][i] > values[k][i] + 1e-10 {
                    bad.push(format!(
                        "{} row {}: {} {} > {} {}",
                        label(a),
                        i + 1,
                        chain[k - 1],
                        values[k - 1][i],
                        chain[k],
                        values[k][i]
                    ));
                }
            }
        }
    }
    report(4, "ld_cmi <= e_cmi (<= f_cmi) <= ss_cmi", &bad);
}

#[test]
fn criterion_5_onehot_failure_and_rescue() {
    let _g = serial();
    let start = Instant::now();
    let mut bad = Vec::new();

    let mut cfg = ExperimentConfig::new(Example::OnehotGd, vec![2]);
    cfg.quantities = Some(vec!["std_cmi".into()]);
    let a = analyse(&cfg, 2).unwrap();
    for (i, v) in rows(&a, "std_cmi").into_iter().enumerate() {
        if v < 0.1 * LN_2 {
            bad.push(format!("n=2 row {}: std_cmi {v} < 0.1 ln2", i + 1));
        }
    }

    let mut cfg = ExperimentConfig::new(Example::OnehotGd, vec![3]);
    cfg.mode = RunMode::Mc;
    cfg.mc_samples = 1_000_000;
    cfg.quantities = Some(vec!["std_cmi".into()]);
    let a = analyse(&cfg, 3).unwrap();
    let v = &a.rows["std_cmi"][0];
    let se = v.stderr.expect("sampled value has a stderr");
    if v.method != "mc" || v.value - 4.0 * se < 0.05 {
        bad.push(format!(
            "n=3 std_cmi {} ({}) with stderr {se}",
            v.value, v.method
        ));
    }

    let mut cfg = ExperimentConfig::new(Example::OnehotGd, vec![2, 3, 4]);
    cfg.quantities = Some(vec!["hyp_cmi".into(), "iomi_individual".into()]);
    cfg.bounds = Some(vec!["cmi_uniform".into(), "iomi_baseline".into()]);
    let analyses = analyse_all(&cfg).unwrap();
    let mut new_pts = Vec::new();
    let mut base_pts = Vec::new();
    for a in &analyses {
        let n = a.n as f64;
        let beta2 = scalar(a, "beta2");
        if beta2 * n.sqrt() > 2.0 * SQRT_2 + 1e-12 {
            bad.push(format!("n={}: beta2 sqrt(n) = {}", a.n, beta2 * n.sqrt()));
        }
        let cu = a.bound("cmi_uniform").unwrap();
        if cu.value > (2.0 * LN_2).sqrt() * beta2 + 1e-12 {
            bad.push(format!(
                "n={}: cmi_uniform {} above sqrt(2 ln2) beta2",
                a.n, cu.value
            ));
        }
        new_pts.push((n, cu.value));
        base_pts.push((n, a.bound("iomi_baseline").unwrap().value));
    }
    let new_slope = log_log_slope(&new_pts).unwrap();
    let base_slope = log_log_slope(&base_pts).unwrap();
    if new_slope > -0.35 {
        bad.push(format!("cmi_uniform slope {new_slope} > -0.35"));
    }
    if base_slope < -0.1 {
        bad.push(format!("iomi_baseline slope {base_slope} < -0.1"));
    }
    let t = start.elapsed();
    if t >= Duration::from_secs(180) {
        bad.push(format!("took {t:?}"));
    }
    println!("    cmi_uniform slope {new_slope:.4}, iomi_baseline slope {base_slope:.4}, {t:?}");
    report(
        5,
        "one-hot GD: standard CMI stays large, uniform-stability CMI bound decays",
        &bad,
    );
}

#[test]
fn criterion_6_scaled_sign_erm_rate() {
    let _g = serial();
    let l = 1.0;
    let ns = [3usize, 5, 7, 9];
    let mut cfg = ExperimentConfig::new(Example::SignErmScaled, ns.to_vec());
    cfg.params.l = Some(l);
    let mut bad = Vec::new();
    let mut pts = Vec::new();
    for a in analyse_all(&cfg).unwrap() {
        let n = a.n as f64;
        let g = scalar(&a, "gen_error");
        if g < l / (SQRT_2 * n) {
            bad.push(format!("n={}: gen error {g} < L/(sqrt2 n)", a.n));
        }
        let b = a.bound("iomi_uniform").unwrap();
        // beta2 = 2L/sqrt(n) and sum_i I(W;Z_i) <= I(W;S) <= ln2
        let ceiling = 2.0 * l * (2.0 * LN_2).sqrt() / n;
        if b.value > ceiling + 1e-12 {
            bad.push(format!("n={}: iomi_uniform {} > {ceiling}", a.n, b.value));
        }
        pts.push((n, b.value));
    }
    let slope = log_log_slope(&pts).unwrap();
    if slope > -0.8 {
        bad.push(format!("iomi_uniform slope {slope} > -0.8"));
    }
    println!("    iomi_uniform slope {slope:.4}");
    report(
        6,
        "scaled sign-ERM: gen error floor and O(1/n) uniform-stability IOMI bound",
        &bad,
    );
}

#[test]
fn criterion_7_constants_and_helpers() {
    let _g = serial();
    let mut bad = Vec::new();
    let h1 = bernstein_h(1.0).unwrap();
    if (h1 - (E - 2.0)).abs() > 1e-12 {
        bad.push(format!("h(1) = {h1}"));
    }
    for a in &all_configs().analyses {
        let lambda = scalar(a, "max_lambda");
        if lambda > 1.0 {
            bad.push(format!("{}: max Lambda {lambda}", label(a)));
        }
        // gamma3 here is E[Delta_1], the largest row value
        let b = a.bound("cmi_fast_delta").unwrap();
        let gamma3 = scalar(a, "induced_gamma3");
        let ceiling = (LN_2 + E - 2.0) * gamma3;
        if b.applicable && b.value > ceiling + 1e-12 {
            bad.push(format!(
                "{}: cmi_fast_delta {} > (ln2 + e - 2) gamma3 = {ceiling}",
                label(a),
                b.value
            ));
        }
    }
    for n in [2usize, 3, 4] {
        let f = birthday_floor(n, 2 * n * n);
        if f < 0.1 {
            bad.push(format!("n={n}: birthday floor {f}"));
        }
    }
    report(
        7,
        "h(1), Lambda <= 1, fast CMI ceiling and birthday floor",
        &bad,
    );
}

#[test]
fn criterion_8_vc_bound() {
    let _g = serial();
    let start = Instant::now();
    let mut bad = Vec::new();
    let mut cfg = ExperimentConfig::new(Example::ThresholdErm, vec![4, 5]);
    cfg.params.m = Some(6);
    cfg.quantities = Some(vec!["f_cmi".into()]);
    cfg.bounds = Some(vec!["vc_rhs".into()]);
    for a in analyse_all(&cfg).unwrap() {
        let n = a.n as f64;
        let lhs = rows(&a, "f_cmi")
            .iter()
            .map(|v| v.max(0.0).sqrt())
            .sum::<f64>()
            / n;
        let rhs = (2.0 * (E * n).ln() / n).sqrt();
        if lhs > rhs {
            bad.push(format!("n={}: {lhs} > {rhs}", a.n));
        }
    }
    let t = start.elapsed();
    if t >= Duration::from_secs(30) {
        bad.push(format!("took {t:?}"));
    }
    report(8, "threshold ERM functional CMI under the VC rate", &bad);
}

/// Plug-in estimates of every supported quantity at row 1 against exact values.
fn plugin_check<A, L>(name: &str, p: &Protocol<'_, A, L>, bad: &mut Vec<String>)
where
    A: Learner,
    L: Loss<A::Hypothesis, A::Instance>,
{
    for (k, &q) in ALL_QUANTITIES.iter().enumerate() {
        let Ok(exact) = quantity(p, q, 0, Mode::Exact) else {
            continue;
        };
        let mc = plugin_estimate(p, q, 0, 200_000, 1000 + k as u64).unwrap();
        let se = mc.method.stderr().unwrap();
        if (mc.value - exact.value).abs() > 4.0 * se {
            bad.push(format!(
                "{name} {q}: plug-in {} vs exact {} (stderr {se})",
                mc.value, exact.value
            ));
        }
    }
}

#[test]
fn criterion_9_oracle_cross_checks() {
    let _g = serial();
    let mut bad = Vec::new();

    let mut runner = TestRunner::new(PropConfig {
        cases: 1000,
        failure_persistence: None,
        ..PropConfig::default()
    });
    let strategy = (1usize..24)
        .prop_flat_map(|d| {
            (
                Just(d),
                prop::collection::vec((0..d as u32).prop_map(OneHot), 1..16),
            )
        })
        .prop_flat_map(|(d, s)| (Just(d), Just(s), 0.0f64..2.0, 0usize..80));
    let gd = runner.run(&strategy, |(d, sample, eta, t)| {
        let cfg = OneHotGdConfig {
            d,
            eta,
            t,
            n: sample.len(),
        };
        let a = gd_onehot_closed(&cfg, &sample).unwrap();
        let b = gd_onehot_iterative(&cfg, &sample).unwrap();
        for (x, y) in a.w.iter().zip(&b.w) {
            prop_assert!((x - y).abs() <= 1e-10, "{} vs {}", x, y);
        }
        Ok(())
    });
    if let Err(e) = gd {
        bad.push(format!("gd closed form vs iteration: {e}"));
    }

    let sign = SignErm::new(RademacherErmConfig::default()).unwrap();
    let sign_loss = sign.loss();
    let sign_dist = SignErm::distribution();
    plugin_check(
        "sign-erm n=3",
        &Protocol::new(&sign, &sign_loss, &sign_dist, 3).unwrap(),
        &mut bad,
    );
    let th = ThresholdErm::new(ThresholdErmConfig::default()).unwrap();
    let th_dist = th.distribution();
    plugin_check(
        "threshold-erm n=3",
        &Protocol::new(&th, &ZeroOneLoss, &th_dist, 3).unwrap(),
        &mut bad,
    );
    let rerm = RegularizedErm::new(RegularizedErmConfig::default()).unwrap();
    let rerm_loss = rerm.loss();
    let rerm_dist = RegularizedErm::default_distribution();
    plugin_check(
        "regularized-erm n=3",
        &Protocol::new(&rerm, &rerm_loss, &rerm_dist, 3).unwrap(),
        &mut bad,
    );
    let gdl = OneHotGd::new(OneHotGdConfig::paper(2)).unwrap();
    let gd_dist = gdl.distribution();
    plugin_check(
        "onehot-gd n=2",
        &Protocol::new(&gdl, &OneHotLinearLoss, &gd_dist, 2).unwrap(),
        &mut bad,
    );

    for a in &all_configs().analyses {
        let derived = scalar(a, "bernstein_gamma2");
        let exact = scalar(a, "gamma2");
        if derived < exact - 1e-12 {
            bad.push(format!(
                "{}: derived gamma2 {derived} < exact gamma2 {exact}",
                label(a)
            ));
        }
    }
    report(
        9,
        "closed-form GD, plug-in estimates and derived gamma2 agree with oracles",
        &bad,
    );
}
