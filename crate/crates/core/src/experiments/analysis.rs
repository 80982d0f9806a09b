//! Everything computed for one `(example, n)` pair.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;

use crate::algorithms::{
    OneHotGd, OneHotGdConfig, RademacherErmConfig, RegularizedErm, RegularizedErmConfig, SignErm,
    ThresholdErm, ThresholdErmConfig,
};
use crate::bounds::{
    b_bernstein, b_cmi_delta1, b_cmi_fast_delta, b_cmi_fast_uniform, b_cmi_sch_c, b_cmi_uniform,
    b_iomi_baseline, b_iomi_disintegrated, b_iomi_fast, b_iomi_sch_a, b_iomi_uniform, b_ld, b_rerm,
    b_second_moment, b_second_moment_strong, b_ss_cmi_delta2, birthday_floor,
    enumerated_loss_range, fit_bernstein, vc_check, BoundReport, HypRow, LossRenormalization,
    RermMode,
};
use crate::error::{Error, Result};
use crate::information::{
    iomi_total, quantities_exact, quantity, seed_disintegrated_iomi, vec_cmi, vec_f_cmi,
    Disintegrated, Quantity, VectorCmi, VectorMethod, ALL_QUANTITIES,
};
use crate::problem::{
    gen_error_flipped, gen_error_masked_data, gen_error_masked_hyp, gen_error_standard,
    second_moment_exact, Learner, Loss, Method, Mode, Protocol,
};
use crate::stability::{
    stability_exact, stability_mc, StabilityAnalysis, StabilityReport, StabilityValue,
};

use super::config::{Example, ExperimentConfig, RunMode};

/// Row outcomes above which per-row quantities get one enumeration each,
/// so only one large table is alive at a time.
const SHARED_PASS_LIMIT: f64 = 2e6;

/// One reported number.
#[derive(Debug, Clone, PartialEq)]
pub struct Value {
    pub value: f64,
    /// `exact`, `mc`, `ceiling`, `mc-lower-bound`, `mc-estimate` or `derived`.
    pub method: String,
    pub stderr: Option<f64>,
}

impl Value {
    pub fn exact(value: f64) -> Self {
        Self::labeled(value, "exact")
    }

    pub fn labeled(value: f64, method: &str) -> Self {
        Self {
            value,
            method: method.to_string(),
            stderr: None,
        }
    }

    fn from_method(value: f64, method: &Method) -> Self {
        Self {
            value,
            method: method.label().to_string(),
            stderr: method.stderr(),
        }
    }

    fn stability(v: &StabilityValue) -> Self {
        Self::labeled(v.value, v.method.label())
    }

    pub fn is_exact(&self) -> bool {
        self.method == "exact"
    }
}

/// Snapshot of one `(example, n)` run; the invariant checks read only this.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub example: Example,
    pub n: usize,
    pub mode: RunMode,
    pub exact_gen_error: Option<f64>,
    /// Aggregate values keyed by quantity name.
    pub scalars: BTreeMap<String, Value>,
    /// Per-row values keyed by quantity name, indexed by 0-based row.
    pub rows: BTreeMap<String, Vec<Value>>,
    pub stability: Option<StabilityReport>,
    pub bounds: Vec<BoundReport>,
}

impl Analysis {
    pub fn scalar(&self, name: &str) -> Option<f64> {
        self.scalars.get(name).map(|v| v.value)
    }

    pub fn row_values(&self, name: &str) -> Option<Vec<f64>> {
        self.rows
            .get(name)
            .map(|vs| vs.iter().map(|v| v.value).collect())
    }

    pub fn bound(&self, id: &str) -> Option<&BoundReport> {
        self.bounds.iter().find(|b| b.id == id)
    }

    fn set_scalar(&mut self, name: &str, v: Value) {
        self.scalars.insert(name.to_string(), v);
    }
}

/// splitmix64 finalizer, used to derive independent seeds per task.
pub(crate) fn mix_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Budget errors become `None` when sampling may take over.
fn within_budget<T>(r: Result<T>, fallback: bool) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::BudgetExceeded { .. }) if fallback => Ok(None),
        Err(e) => Err(e),
    }
}

/// Runs the configured example at sample size `n`.
pub fn analyse(cfg: &ExperimentConfig, n: usize) -> Result<Analysis> {
    cfg.validate()?;
    let p = &cfg.params;
    match cfg.example {
        Example::OnehotGd => {
            let base = OneHotGdConfig::paper(n);
            let gd = OneHotGd::new(OneHotGdConfig {
                d: p.d.unwrap_or(base.d),
                eta: p.eta.unwrap_or(base.eta),
                t: p.t.unwrap_or(base.t),
                n,
            })?;
            let dist = gd.distribution();
            let loss = crate::algorithms::OneHotLinearLoss;
            let proto = Protocol::new(&gd, &loss, &dist, n)?.with_budget(cfg.budget);
            let mut a = analyse_protocol(&proto, cfg, cfg.example)?;
            a.set_scalar("d", Value::labeled(gd.cfg.d as f64, "derived"));
            a.set_scalar(
                "birthday_floor",
                Value::labeled(birthday_floor(n, gd.cfg.d), "derived"),
            );
            Ok(a)
        }
        Example::SignErm | Example::SignErmScaled => {
            let l = p.l.unwrap_or(1.0);
            let mut sc = if cfg.example == Example::SignErm {
                RademacherErmConfig {
                    r0: p.r0.unwrap_or(1.0),
                    l,
                    tie_break: 1,
                }
            } else {
                RademacherErmConfig::scaled(n, l)
            };
            if let Some(t) = p.tie_break {
                sc.tie_break = t;
            }
            let alg = SignErm::new(sc)?;
            let dist = SignErm::distribution();
            let loss = alg.loss();
            let proto = Protocol::new(&alg, &loss, &dist, n)?.with_budget(cfg.budget);
            analyse_protocol(&proto, cfg, cfg.example)
        }
        Example::RegularizedErm => {
            let rc = RegularizedErmConfig {
                lambda: p.lambda.unwrap_or(1.0),
                l: p.l.unwrap_or(1.0),
            };
            let alg = RegularizedErm::new(rc)?;
            let dist = RegularizedErm::default_distribution();
            let loss = alg.loss();
            let proto = Protocol::new(&alg, &loss, &dist, n)?.with_budget(cfg.budget);
            let mut a = analyse_protocol(&proto, cfg, cfg.example)?;
            if cfg.wants_bound("rerm_lipschitz") {
                let r = match a.row_values(Quantity::HypCmi.name()) {
                    Some(h) => compare(b_rerm(&rc, &h, RermMode::Lipschitz)?, a.exact_gen_error),
                    None => BoundReport::inapplicable("rerm_lipschitz", "needs hyp_cmi"),
                };
                a.bounds.push(r);
            }
            Ok(a)
        }
        Example::ThresholdErm => {
            let alg = ThresholdErm::new(ThresholdErmConfig {
                m: p.m.unwrap_or(6),
                true_threshold: p.true_threshold.unwrap_or(4),
            })?;
            let dist = alg.distribution();
            let loss = crate::algorithms::ZeroOneLoss;
            let proto = Protocol::new(&alg, &loss, &dist, n)?.with_budget(cfg.budget);
            let mut a = analyse_protocol(&proto, cfg, cfg.example)?;
            if cfg.wants_bound("vc_rhs") {
                let r = match a.rows.get(Quantity::FCmi.name()) {
                    Some(f) if n > 2 => {
                        let values: Vec<f64> = f.iter().map(|v| v.value).collect();
                        let r = vc_check(1, &values)?;
                        let lhs = r.component_value("lhs").expect("vc_check sets lhs");
                        a.set_scalar("vc_lhs", Value::labeled(lhs, f[0].method.as_str()));
                        r
                    }
                    Some(_) => BoundReport::inapplicable("vc_rhs", "needs n > d + 1 = 2"),
                    None => BoundReport::inapplicable("vc_rhs", "needs f_cmi"),
                };
                a.bounds.push(r);
            }
            Ok(a)
        }
    }
}

fn compare(r: BoundReport, gen: Option<f64>) -> BoundReport {
    match gen {
        Some(g) => r.with_comparison(g.abs()),
        None => r,
    }
}

/// Per-row exact disintegrations kept for the bounds.
struct RowTables {
    hyp: Option<Vec<Disintegrated>>,
    ss: Option<Vec<Disintegrated>>,
    ld: Option<Vec<Disintegrated>>,
    per_seed_iomi: Option<Vec<Disintegrated>>,
}

fn analyse_protocol<A, L>(
    p: &Protocol<'_, A, L>,
    cfg: &ExperimentConfig,
    example: Example,
) -> Result<Analysis>
where
    A: Learner,
    L: Loss<A::Hypothesis, A::Instance>,
{
    let n = p.n();
    let exact_mode = cfg.mode == RunMode::Exact;
    let fallback = !exact_mode || cfg.mc_fallback;
    let mc = |tag: u64| Mode::MonteCarlo {
        samples: cfg.mc_samples,
        seed: mix_seed(cfg.seed ^ n as u64, tag),
    };
    let mut a = Analysis {
        example,
        n,
        mode: cfg.mode,
        exact_gen_error: None,
        scalars: BTreeMap::new(),
        rows: BTreeMap::new(),
        stability: None,
        bounds: Vec::new(),
    };
    let mut all_exact = true;

    // generalization error
    let exact_risk = within_budget(gen_error_standard(p, Mode::Exact), fallback)?;
    a.exact_gen_error = exact_risk.as_ref().map(|r| r.gen_error);
    let risk_mode = match (&exact_risk, exact_mode) {
        (Some(_), true) => Mode::Exact,
        _ => mc(1),
    };
    let risk = match (&exact_risk, risk_mode) {
        (Some(r), Mode::Exact) => r.clone(),
        _ => gen_error_standard(p, risk_mode)?,
    };
    a.set_scalar(
        "gen_error",
        Value::from_method(risk.gen_error, &risk.method),
    );
    a.set_scalar(
        "gen_error_direct",
        Value::from_method(risk.direct_gen_error(), &risk.method),
    );
    a.set_scalar(
        "population_risk",
        Value::from_method(risk.expected_population, &risk.method),
    );
    a.set_scalar(
        "empirical_risk",
        Value::from_method(risk.expected_empirical, &risk.method),
    );
    let evaluators = [
        ("gen_error_flipped", gen_error_flipped(p, risk_mode)?),
        (
            "gen_error_masked_data",
            gen_error_masked_data(p, risk_mode)?,
        ),
        ("gen_error_masked_hyp", gen_error_masked_hyp(p, risk_mode)?),
    ];
    for (name, est) in evaluators {
        a.set_scalar(name, Value::from_method(est.value, &est.method));
    }

    // whole-sample quantities; the sample pass also interns every reachable output
    if let Some(total) = within_budget(iomi_total(p), fallback)? {
        a.set_scalar("iomi_total", Value::exact(total.value));
        a.set_scalar("iomi_total_bits", Value::exact(total.value / LN_2));
    }
    let (lo, hi) = p
        .loss()
        .declared_range()
        .unwrap_or_else(|| enumerated_loss_range(p));
    let renorm = LossRenormalization::unit_from_range(lo, hi).ok();
    let second_moment = match (within_budget(second_moment_exact(p), fallback)?, renorm) {
        (Some(m), Some(r)) => {
            let scaled = m / (r.scale * r.scale);
            a.set_scalar("gen_second_moment", Value::exact(scaled));
            Some(scaled)
        }
        _ => None,
    };

    // stability
    let stab: Option<StabilityAnalysis> = within_budget(stability_exact(p), fallback)?;
    let report = match &stab {
        Some(s) => s.report.clone(),
        None => {
            all_exact = false;
            stability_mc(p, cfg.mc_samples, mix_seed(cfg.seed ^ n as u64, 2))?
        }
    };
    a.set_scalar("beta1", Value::stability(&report.beta1));
    a.set_scalar("beta2", Value::stability(&report.beta2));
    if let Some(g) = &report.gamma1 {
        a.set_scalar("gamma1", Value::stability(g));
    }
    if let Some(g) = &report.gamma2 {
        a.set_scalar("gamma2", Value::stability(g));
    }
    a.set_scalar("gamma3", Value::stability(&report.gamma3));
    a.set_scalar("gamma4", Value::stability(&report.gamma4));
    if let Some(g) = report.induced_gamma3 {
        a.set_scalar("induced_gamma3", Value::exact(g));
    }
    if let Some(s) = &stab {
        let lambda = s
            .computed_tables()
            .iter()
            .map(|t| t.max_lambda())
            .fold(0.0, f64::max);
        a.set_scalar("max_lambda", Value::exact(lambda));
    }
    a.stability = Some(report.clone());

    // per-row information quantities
    let has_predictions =
        p.hypothesis_count() > 0 && p.predict_at(crate::problem::HypId(0), 0).is_some();
    let selected: Vec<Quantity> = cfg
        .selected_quantities()
        .unwrap_or_else(|| ALL_QUANTITIES.to_vec())
        .into_iter()
        .filter(|&q| q != Quantity::FCmi || has_predictions)
        .collect();
    let rows = p.row_indices();
    let mut tables = RowTables {
        hyp: None,
        ss: None,
        ld: None,
        per_seed_iomi: None,
    };
    let mut exact_values: BTreeMap<Quantity, Vec<(Disintegrated, f64)>> = BTreeMap::new();
    if exact_mode {
        let shared = p.row_cost() <= SHARED_PASS_LIMIT;
        for &i in &rows {
            let groups: Vec<Vec<Quantity>> = if shared {
                vec![selected.clone()]
            } else {
                selected.iter().map(|&q| vec![q]).collect()
            };
            for group in groups {
                let Some(results) = within_budget(quantities_exact(p, &group, i), fallback)? else {
                    continue;
                };
                for (q, d) in results {
                    let v = d.expectation();
                    exact_values.entry(q).or_default().push((d, v));
                }
            }
        }
    }
    let mut sampled_any = false;
    for (qi, &q) in selected.iter().enumerate() {
        let values: Vec<Value> = match exact_values.get(&q) {
            Some(v) if v.len() == rows.len() => v.iter().map(|(_, x)| Value::exact(*x)).collect(),
            _ => {
                sampled_any = true;
                rows.iter()
                    .map(|&i| {
                        let tag = 100 + 10_000 * qi as u64 + i as u64;
                        let est = quantity(p, q, i, mc(tag))?;
                        Ok(Value::from_method(est.value, &est.method))
                    })
                    .collect::<Result<_>>()?
            }
        };
        a.rows.insert(q.name().to_string(), expand(p, values));
    }
    if sampled_any {
        all_exact = false;
    }
    let take = |q: Quantity, vals: &mut BTreeMap<Quantity, Vec<(Disintegrated, f64)>>| {
        vals.remove(&q)
            .filter(|v| v.len() == rows.len())
            .map(|v| expand(p, v.into_iter().map(|(d, _)| d).collect()))
    };
    tables.hyp = take(Quantity::HypCmi, &mut exact_values);
    tables.ss = take(Quantity::SsCmi, &mut exact_values);
    tables.ld = take(Quantity::LdCmi, &mut exact_values);
    if let Some(h) = &tables.hyp {
        a.rows.insert(
            "hyp_cmi_sup".into(),
            h.iter().map(|d| Value::exact(d.sup())).collect(),
        );
    }
    if exact_mode
        && a.rows
            .get(Quantity::IomiIndividual.name())
            .is_some_and(|v| v[0].is_exact())
    {
        tables.per_seed_iomi = if p.is_deterministic() {
            let iomi = a
                .row_values(Quantity::IomiIndividual.name())
                .expect("checked");
            Some(
                iomi.into_iter()
                    .map(|v| Disintegrated {
                        entries: vec![(vec![0], 1.0, v)],
                    })
                    .collect(),
            )
        } else {
            within_budget(p.per_row(|i| seed_disintegrated_iomi(p, i)), fallback)?
        };
    }

    // joint quantities
    let vec = if exact_mode && stab.is_some() {
        let v = vec_cmi(p)?;
        let label = match v.method {
            VectorMethod::Exact => "exact",
            VectorMethod::Ceiling => "ceiling",
        };
        a.set_scalar("vec_cmi", Value::labeled(v.value, label));
        Some(v)
    } else {
        None
    };
    if exact_mode && has_predictions && selected.contains(&Quantity::FCmi) {
        if let Some(v) = vec_f_cmi(p)? {
            a.set_scalar("vec_f_cmi", Value::exact(v));
        }
    }

    let ctx = BoundInputs {
        cfg,
        a: &a,
        report: &report,
        stab: stab.as_ref(),
        tables: &tables,
        vec: vec.as_ref(),
        renorm,
        second_moment,
        symmetric: p.learner().is_symmetric(),
        sigma: (hi - lo) / 2.0,
    };
    let mut bounds = general_bounds(&ctx)?;
    if cfg.wants_bound("bernstein") {
        bounds.push(
            match (a.row_values(Quantity::IomiIndividual.name()), exact_mode) {
                (Some(iomi), true) => {
                    let fit = fit_bernstein(p, 1.0, Vec::new())?;
                    a.set_scalar(
                        "bernstein_gamma2",
                        Value::labeled(fit.derived_gamma2(), "derived"),
                    );
                    b_bernstein(&fit, hi - lo, &iomi)?
                }
                (Some(_), false) => BoundReport::inapplicable("bernstein", "needs exact risks"),
                (None, _) => BoundReport::inapplicable("bernstein", "needs iomi_individual"),
            },
        );
    }
    for b in &mut bounds {
        if b.comparison.is_none() && b.id != "second_moment" && b.id != "second_moment_strong" {
            *b = compare(b.clone(), a.exact_gen_error);
        }
    }
    a.bounds = bounds;
    if !all_exact {
        a.set_scalar("inputs_sampled", Value::labeled(1.0, "derived"));
    }
    Ok(a)
}

/// Repeats row 0 for exchangeable rows.
fn expand<A, L, T: Clone>(p: &Protocol<'_, A, L>, v: Vec<T>) -> Vec<T>
where
    A: Learner,
    L: Loss<A::Hypothesis, A::Instance>,
{
    if v.len() == 1 && p.n() > 1 {
        vec![v[0].clone(); p.n()]
    } else {
        v
    }
}

struct BoundInputs<'a> {
    cfg: &'a ExperimentConfig,
    a: &'a Analysis,
    report: &'a StabilityReport,
    stab: Option<&'a StabilityAnalysis>,
    tables: &'a RowTables,
    vec: Option<&'a VectorCmi>,
    renorm: Option<LossRenormalization>,
    second_moment: Option<f64>,
    symmetric: bool,
    sigma: f64,
}

/// Every bound id the runner can report.
pub const BOUND_IDS: [&str; 20] = [
    "iomi_sch_a",
    "iomi_sch_a_conditional",
    "iomi_uniform",
    "iomi_disintegrated",
    "iomi_fast",
    "iomi_baseline",
    "cmi_delta1",
    "cmi_sch_c",
    "cmi_uniform",
    "cmi_fast_delta",
    "cmi_fast_uniform",
    "ss_cmi_delta2",
    "ld_unconditional",
    "ld_disintegrated",
    "ld_conditional",
    "second_moment",
    "second_moment_strong",
    "bernstein",
    "rerm_lipschitz",
    "vc_rhs",
];

fn general_bounds(c: &BoundInputs<'_>) -> Result<Vec<BoundReport>> {
    let allow = c.cfg.allow_mc_stability;
    let r = c.report;
    let rows = |q: Quantity| c.a.row_values(q.name());
    let iomi = rows(Quantity::IomiIndividual);
    let iomi_cond = rows(Quantity::IomiConditional);
    let hyp = rows(Quantity::HypCmi);
    let ld_mi = rows(Quantity::LdMi);
    let n = c.a.n;
    let mut out = Vec::new();
    let missing =
        |id: &'static str, what: &str| BoundReport::inapplicable(id, format!("needs {what}"));

    let beta2 = ("beta2", r.beta2);
    match (&r.gamma1, &iomi, &iomi_cond) {
        (Some(g1), Some(i), Some(ic)) => {
            let [x, y] = b_iomi_sch_a(g1.value, i, ic)?;
            out.push(x.gate_stability(&[("gamma1", *g1)], allow));
            out.push(y.gate_stability(&[("gamma1", *g1)], allow));
        }
        (None, ..) => {
            out.push(missing("iomi_sch_a", "exact gamma1"));
            out.push(missing("iomi_sch_a_conditional", "exact gamma1"));
        }
        _ => {
            out.push(missing(
                "iomi_sch_a",
                "iomi_individual and iomi_conditional",
            ));
            out.push(missing(
                "iomi_sch_a_conditional",
                "iomi_individual and iomi_conditional",
            ));
        }
    }
    out.push(match &iomi {
        Some(i) => b_iomi_uniform(r.beta2.value, i, c.a.scalar("iomi_total"))?
            .gate_stability(&[beta2], allow),
        None => missing("iomi_uniform", "iomi_individual"),
    });
    out.push(match &c.tables.per_seed_iomi {
        Some(d) => b_iomi_disintegrated(r.beta2.value, d)?.gate_stability(&[beta2], allow),
        None => missing("iomi_disintegrated", "exact iomi_individual"),
    });
    out.push(match (&r.gamma1, &r.gamma2, &iomi) {
        (Some(g1), Some(g2), Some(i)) => b_iomi_fast(g1.value, g2.value, i)?
            .gate_stability(&[("gamma1", *g1), ("gamma2", *g2)], allow),
        (_, _, None) => missing("iomi_fast", "iomi_individual"),
        _ => missing("iomi_fast", "exact gamma1 and gamma2"),
    });
    out.push(match &iomi {
        Some(i) => b_iomi_baseline(c.sigma, i)?,
        None => missing("iomi_baseline", "iomi_individual"),
    });

    let hyp_rows: Option<Vec<HypRow<'_>>> = match (c.stab, &c.tables.hyp) {
        (Some(s), Some(h)) => Some(
            h.iter()
                .enumerate()
                .map(|(i, d)| HypRow {
                    tables: s.tables(i),
                    hyp_cmi: d,
                })
                .collect(),
        ),
        _ => None,
    };
    out.push(match &hyp_rows {
        Some(rs) => b_cmi_delta1(rs)?,
        None => missing("cmi_delta1", "exact stability tables and hyp_cmi"),
    });
    out.push(match (r.induced_gamma3, &c.a.row_values("hyp_cmi_sup")) {
        (Some(g3), Some(sup)) => b_cmi_sch_c(g3, sup)?,
        _ => missing("cmi_sch_c", "exact stability tables and hyp_cmi"),
    });
    out.push(match &hyp {
        Some(h) => b_cmi_uniform(r.beta2.value, h)?.gate_stability(&[beta2], allow),
        None => missing("cmi_uniform", "hyp_cmi"),
    });
    out.push(match &hyp_rows {
        Some(rs) => b_cmi_fast_delta(rs)?,
        None => missing("cmi_fast_delta", "exact stability tables and hyp_cmi"),
    });
    out.push(match &hyp {
        Some(h) => b_cmi_fast_uniform(r.beta2.value, r.gamma4.value, h)?
            .gate_stability(&[beta2, ("gamma4", r.gamma4)], allow),
        None => missing("cmi_fast_uniform", "hyp_cmi"),
    });
    out.push(match (c.stab, &c.tables.ss) {
        (Some(s), Some(ss)) => {
            let d2: Vec<&[Option<f64>]> = (0..n).map(|i| s.tables(i).delta2.as_slice()).collect();
            let refs: Vec<&Disintegrated> = ss.iter().collect();
            b_ss_cmi_delta2(&d2, &refs)?
        }
        _ => missing("ss_cmi_delta2", "exact stability tables and ss_cmi"),
    });
    match (&ld_mi, &c.tables.ld) {
        (Some(mi), Some(ld)) => {
            let refs: Vec<&Disintegrated> = ld.iter().collect();
            for b in b_ld(r.beta2.value, mi, &refs)? {
                out.push(b.gate_stability(&[beta2], allow));
            }
        }
        _ => {
            for id in ["ld_unconditional", "ld_disintegrated", "ld_conditional"] {
                out.push(missing(id, "ld_mi and exact ld_cmi"));
            }
        }
    }
    let moment = |b: BoundReport| match c.second_moment {
        Some(m) => b.with_comparison(m),
        None => b,
    };
    out.push(match c.vec {
        Some(v) => moment(b_second_moment(
            r.beta2.value,
            v.value,
            n,
            c.symmetric,
            c.renorm,
        )?),
        None => missing("second_moment", "exact vec_cmi"),
    });
    out.push(match (c.stab, c.vec, &r.gamma2) {
        (Some(s), Some(v), Some(g2)) => {
            let ts: Vec<_> = (0..n).map(|i| s.tables(i)).collect();
            moment(b_second_moment_strong(
                &ts,
                v,
                g2.value,
                c.symmetric,
                c.renorm,
            )?)
        }
        _ => missing("second_moment_strong", "exact stability tables and vec_cmi"),
    });
    Ok(out
        .into_iter()
        .filter(|b| c.cfg.wants_bound(b.id))
        .collect())
}
