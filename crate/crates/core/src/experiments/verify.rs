//! The invariant suite, as pure checks over an [`Analysis`].

use std::f64::consts::{E, LN_2};
use std::fmt;

use super::analysis::Analysis;
use super::config::RunMode;

/// Tolerance for exact equalities and information inequalities.
pub const INFO_TOL: f64 = 1e-10;
/// Tolerance for the soundness sandwich.
pub const SOUND_TOL: f64 = 1e-9;
/// Tolerance for stability orderings.
pub const STABILITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub invariant: &'static str,
    pub status: Status,
    /// Violations with values, or why the check was skipped.
    pub details: Vec<String>,
}

impl CheckOutcome {
    fn from_violations(invariant: &'static str, details: Vec<String>) -> Self {
        let status = if details.is_empty() {
            Status::Pass
        } else {
            Status::Fail
        };
        Self {
            invariant,
            status,
            details,
        }
    }

    fn skip(invariant: &'static str, why: &str) -> Self {
        Self {
            invariant,
            status: Status::Skip,
            details: vec![why.to_string()],
        }
    }
}

/// Checks of one analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub label: String,
    pub outcomes: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.status != Status::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.outcomes.iter().filter(|o| o.status == Status::Fail)
    }

    pub fn outcome(&self, invariant: &str) -> Option<&CheckOutcome> {
        self.outcomes.iter().find(|o| o.invariant == invariant)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for o in &self.outcomes {
            let tag = match o.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Skip => "SKIP",
            };
            writeln!(f, "{tag} {} {}", self.label, o.invariant)?;
            if o.status != Status::Pass {
                for d in &o.details {
                    writeln!(f, "    {d}")?;
                }
            }
        }
        Ok(())
    }
}

pub type Check = fn(&Analysis) -> CheckOutcome;

/// Every invariant check, in report order.
pub const CHECKS: [(&str, Check); 12] = [
    ("gen_error_evaluators_agree", check_evaluators),
    ("hyp_cmi_le_iomi", check_hyp_le_iomi),
    ("hyp_cmi_eq_ss_cmi", check_hyp_eq_ss),
    ("data_processing_chain", check_chain),
    ("iomi_le_iomi_conditional", check_iomi_conditional),
    ("cmi_within_ln2", check_cmi_range),
    ("bound_soundness", check_soundness),
    ("stability_orderings", check_stability),
    ("bound_orderings", check_bound_orderings),
    ("vc_chain", check_vc_chain),
    ("bernstein_gamma2", check_bernstein),
    ("vec_cmi_within_ceiling", check_vec_cmi),
];

pub fn verify_analysis(a: &Analysis) -> VerifyReport {
    let label = format!("{} n={}", a.example, a.n);
    if a.mode != RunMode::Exact {
        return VerifyReport {
            label,
            outcomes: vec![CheckOutcome::skip(
                "exact_mode",
                "invariants are checked on exact runs only",
            )],
        };
    }
    VerifyReport {
        label,
        outcomes: CHECKS.iter().map(|(_, check)| check(a)).collect(),
    }
}

fn fmt(v: f64) -> String {
    crate::numeric::fmt_sig12(v)
}

/// Exact per-row values of `name`.
fn exact_rows(a: &Analysis, name: &str) -> Option<Vec<f64>> {
    let vs = a.rows.get(name)?;
    vs.iter()
        .all(|v| v.is_exact())
        .then(|| vs.iter().map(|v| v.value).collect())
}

fn exact_scalar(a: &Analysis, name: &str) -> Option<f64> {
    a.scalars
        .get(name)
        .filter(|v| v.is_exact())
        .map(|v| v.value)
}

/// `lhs[i] ≤ rhs[i] + tol` for every row.
fn rows_le(a: &Analysis, lhs: &str, rhs: &str, tol: f64, out: &mut Vec<String>) -> bool {
    let (Some(x), Some(y)) = (exact_rows(a, lhs), exact_rows(a, rhs)) else {
        return false;
    };
    for (i, (x, y)) in x.iter().zip(&y).enumerate() {
        if *x > y + tol {
            out.push(format!(
                "row {}: {lhs} = {} > {rhs} = {}",
                i + 1,
                fmt(*x),
                fmt(*y)
            ));
        }
    }
    true
}

pub fn check_evaluators(a: &Analysis) -> CheckOutcome {
    const ID: &str = "gen_error_evaluators_agree";
    let Some(g) = exact_scalar(a, "gen_error") else {
        return CheckOutcome::skip(ID, "no exact gen_error");
    };
    let mut bad = Vec::new();
    for name in [
        "gen_error_direct",
        "gen_error_masked_data",
        "gen_error_masked_hyp",
        "gen_error_flipped",
    ] {
        match exact_scalar(a, name) {
            Some(v) if (v - g).abs() <= INFO_TOL => {}
            Some(v) => bad.push(format!(
                "{name} = {} differs from gen_error = {}",
                fmt(v),
                fmt(g)
            )),
            None => bad.push(format!("{name} missing")),
        }
    }
    CheckOutcome::from_violations(ID, bad)
}

pub fn check_hyp_le_iomi(a: &Analysis) -> CheckOutcome {
    const ID: &str = "hyp_cmi_le_iomi";
    let mut bad = Vec::new();
    if !rows_le(a, "hyp_cmi", "iomi_individual", INFO_TOL, &mut bad) {
        return CheckOutcome::skip(ID, "needs exact hyp_cmi and iomi_individual");
    }
    CheckOutcome::from_violations(ID, bad)
}

pub fn check_hyp_eq_ss(a: &Analysis) -> CheckOutcome {
    const ID: &str = "hyp_cmi_eq_ss_cmi";
    let mut bad = Vec::new();
    let both = rows_le(a, "hyp_cmi", "ss_cmi", INFO_TOL, &mut bad)
        && rows_le(a, "ss_cmi", "hyp_cmi", INFO_TOL, &mut bad);
    if !both {
        return CheckOutcome::skip(ID, "needs exact hyp_cmi and ss_cmi");
    }
    CheckOutcome::from_violations(ID, bad)
}

pub fn check_chain(a: &Analysis) -> CheckOutcome {
    const ID: &str = "data_processing_chain";
    let present: Vec<&str> = ["ld_mi", "ld_cmi", "e_cmi", "f_cmi", "ss_cmi"]
        .into_iter()
        .filter(|q| exact_rows(a, q).is_some())
        .collect();
    if present.len() < 2 {
        return CheckOutcome::skip(ID, "needs at least two exact quantities of the chain");
    }
    let mut bad = Vec::new();
    for w in present.windows(2) {
        rows_le(a, w[0], w[1], INFO_TOL, &mut bad);
    }
    CheckOutcome::from_violations(ID, bad)
}

pub fn check_iomi_conditional(a: &Analysis) -> CheckOutcome {
    const ID: &str = "iomi_le_iomi_conditional";
    let mut bad = Vec::new();
    if !rows_le(a, "iomi_individual", "iomi_conditional", INFO_TOL, &mut bad) {
        return CheckOutcome::skip(ID, "needs exact iomi_individual and iomi_conditional");
    }
    CheckOutcome::from_violations(ID, bad)
}

pub fn check_cmi_range(a: &Analysis) -> CheckOutcome {
    const ID: &str = "cmi_within_ln2";
    let mut bad = Vec::new();
    let mut any = false;
    for q in [
        "hyp_cmi",
        "hyp_cmi_sup",
        "ss_cmi",
        "std_cmi",
        "ld_mi",
        "ld_cmi",
        "e_cmi",
        "f_cmi",
    ] {
        let Some(vs) = exact_rows(a, q) else { continue };
        any = true;
        for (i, v) in vs.iter().enumerate() {
            if !(*v >= -INFO_TOL && *v <= LN_2 + INFO_TOL) {
                bad.push(format!(
                    "row {}: {q} = {} outside [0, ln 2]",
                    i + 1,
                    fmt(*v)
                ));
            }
        }
    }
    for q in ["iomi_individual", "iomi_conditional"] {
        for (i, v) in exact_rows(a, q).unwrap_or_default().iter().enumerate() {
            if *v < -INFO_TOL {
                bad.push(format!("row {}: {q} = {} is negative", i + 1, fmt(*v)));
            }
        }
    }
    if !any {
        return CheckOutcome::skip(ID, "no exact CMI values");
    }
    CheckOutcome::from_violations(ID, bad)
}

pub fn check_soundness(a: &Analysis) -> CheckOutcome {
    const ID: &str = "bound_soundness";
    if a.scalars.contains_key("inputs_sampled") {
        return CheckOutcome::skip(ID, "some inputs were sampled");
    }
    let mut bad = Vec::new();
    let mut any = false;
    for b in &a.bounds {
        if let (true, Some(c)) = (b.applicable, b.comparison) {
            any = true;
            if !b.is_sound(SOUND_TOL) {
                bad.push(format!("{} = {} < {}", b.id, fmt(b.value), fmt(c)));
            }
        }
    }
    if !any {
        return CheckOutcome::skip(ID, "no applicable bound with an exact comparison");
    }
    CheckOutcome::from_violations(ID, bad)
}

pub fn check_stability(a: &Analysis) -> CheckOutcome {
    const ID: &str = "stability_orderings";
    let Some(beta2) = exact_scalar(a, "beta2") else {
        return CheckOutcome::skip(ID, "no exact stability");
    };
    let mut bad = Vec::new();
    let mut le = |x: &str, y: &str, yv: f64| {
        if let Some(xv) = exact_scalar(a, x) {
            if xv > yv + STABILITY_TOL {
                bad.push(format!("{x} = {} > {y} = {}", fmt(xv), fmt(yv)));
            }
        }
    };
    for g in [
        "beta1",
        "gamma1",
        "gamma2",
        "gamma3",
        "gamma4",
        "induced_gamma3",
    ] {
        le(g, "beta2", beta2);
    }
    if let Some(g1) = exact_scalar(a, "gamma1") {
        le("gamma2", "gamma1", g1);
    }
    le("max_lambda", "1", 1.0);
    CheckOutcome::from_violations(ID, bad)
}

pub fn check_bound_orderings(a: &Analysis) -> CheckOutcome {
    const ID: &str = "bound_orderings";
    let mut bad = Vec::new();
    let value = |id: &str| a.bound(id).filter(|b| b.applicable).map(|b| b.value);
    let mut le = |x: (&str, Option<f64>), y: (&str, Option<f64>), tol: f64| {
        if let (Some(xv), Some(yv)) = (x.1, y.1) {
            if xv > yv + tol {
                bad.push(format!("{} = {} > {} = {}", x.0, fmt(xv), y.0, fmt(yv)));
            }
        }
    };
    le(
        ("iomi_sch_a", value("iomi_sch_a")),
        ("iomi_sch_a_conditional", value("iomi_sch_a_conditional")),
        1e-12,
    );
    let comp = |id: &str, c: &str| {
        a.bound(id)
            .filter(|b| b.applicable)
            .and_then(|b| b.component_value(c))
    };
    le(
        ("cmi_uniform", value("cmi_uniform")),
        ("cmi_uniform.ceiling", comp("cmi_uniform", "ceiling")),
        1e-12,
    );
    le(
        ("cmi_fast_delta", value("cmi_fast_delta")),
        ("cmi_fast_delta.ceiling", comp("cmi_fast_delta", "ceiling")),
        1e-12,
    );
    le(
        (
            "ld_unconditional.ld_min",
            comp("ld_unconditional", "ld_min"),
        ),
        ("ld_disintegrated", value("ld_disintegrated")),
        1e-12,
    );
    le(
        ("ld_disintegrated", value("ld_disintegrated")),
        ("ld_conditional", value("ld_conditional")),
        1e-12,
    );
    le(
        ("ld_unconditional", value("ld_unconditional")),
        ("ld_conditional", value("ld_conditional")),
        1e-12,
    );
    CheckOutcome::from_violations(ID, bad)
}

pub fn check_vc_chain(a: &Analysis) -> CheckOutcome {
    const ID: &str = "vc_chain";
    let Some(f) = exact_rows(a, "f_cmi") else {
        return CheckOutcome::skip(ID, "no exact f_cmi");
    };
    let mut bad = Vec::new();
    let sum: f64 = f.iter().sum();
    if let Some(v) = exact_scalar(a, "vec_f_cmi") {
        if sum > v + INFO_TOL {
            bad.push(format!(
                "sum of f_cmi = {} > vec_f_cmi = {}",
                fmt(sum),
                fmt(v)
            ));
        }
        let sauer = 2.0 * (E * a.n as f64).ln();
        if v > sauer + INFO_TOL {
            bad.push(format!(
                "vec_f_cmi = {} > 2 ln(e n) = {}",
                fmt(v),
                fmt(sauer)
            ));
        }
    }
    if let Some(b) = a.bound("vc_rhs").filter(|b| b.applicable) {
        if !b.is_sound(INFO_TOL) {
            bad.push(format!(
                "mean sqrt f_cmi = {} > vc_rhs = {}",
                fmt(b.comparison.unwrap_or(f64::NAN)),
                fmt(b.value)
            ));
        }
    }
    CheckOutcome::from_violations(ID, bad)
}

pub fn check_bernstein(a: &Analysis) -> CheckOutcome {
    const ID: &str = "bernstein_gamma2";
    let (Some(derived), Some(g2)) = (a.scalar("bernstein_gamma2"), exact_scalar(a, "gamma2"))
    else {
        return CheckOutcome::skip(ID, "needs a Bernstein fit and exact gamma2");
    };
    let mut bad = Vec::new();
    if derived < g2 - STABILITY_TOL {
        bad.push(format!(
            "derived gamma2 = {} < gamma2 = {}",
            fmt(derived),
            fmt(g2)
        ));
    }
    CheckOutcome::from_violations(ID, bad)
}

pub fn check_vec_cmi(a: &Analysis) -> CheckOutcome {
    const ID: &str = "vec_cmi_within_ceiling";
    let Some(v) = a.scalar("vec_cmi") else {
        return CheckOutcome::skip(ID, "no vec_cmi");
    };
    let ceiling = a.n as f64 * LN_2;
    let mut bad = Vec::new();
    if !(v >= -INFO_TOL && v <= ceiling + INFO_TOL) {
        bad.push(format!(
            "vec_cmi = {} outside [0, n ln 2 = {}]",
            fmt(v),
            fmt(ceiling)
        ));
    }
    CheckOutcome::from_violations(ID, bad)
}
