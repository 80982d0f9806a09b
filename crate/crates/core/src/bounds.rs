//! Closed-form generalization bounds evaluated on exact or sampled inputs.
//!
//! Every evaluator checks its preconditions and returns an inapplicable
//! report rather than a number when one fails. The Bernstein-function
//! constant is `h(1) = e − 2` throughout; values with the rounded `0.72`
//! are kept alongside for reference.

use std::f64::consts::{E, LN_2, SQRT_2};

use crate::algorithms::RegularizedErmConfig;
use crate::error::{Error, Result};
use crate::information::{Disintegrated, VectorCmi};
use crate::numeric::NeumaierSum;
use crate::problem::{HypId, Learner, Loss, Protocol};
use crate::stability::{DeltaTables, StabilityValue};

/// `h(1) = e − 2`.
pub const H1: f64 = E - 2.0;
/// The two-digit rounding of `h(1)` used in the printed constants.
pub const H1_ROUNDED: f64 = 0.72;

/// `h(x) = (eˣ − x − 1) / x²`.
pub fn bernstein_h(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::param(format!(
            "bernstein_h needs a finite x > 0, got {x}"
        )));
    }
    if x < 1e-4 {
        return Ok(0.5 + x / 6.0 + x * x / 24.0 + x * x * x / 120.0);
    }
    Ok((x.exp_m1() - x) / (x * x))
}

/// Affine map `ℓ ↦ (ℓ + shift) / scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRenormalization {
    pub shift: f64,
    pub scale: f64,
}

impl LossRenormalization {
    pub const IDENTITY: Self = Self {
        shift: 0.0,
        scale: 1.0,
    };

    /// Maps `[lo, hi]` onto `[0, 1]`.
    pub fn unit_from_range(lo: f64, hi: f64) -> Result<Self> {
        if !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::param(format!("invalid loss range [{lo}, {hi}]")));
        }
        let width = hi - lo;
        Ok(Self {
            shift: -lo,
            scale: if width > 0.0 { width } else { 1.0 },
        })
    }

    pub fn apply(&self, loss: f64) -> f64 {
        (loss + self.shift) / self.scale
    }

    /// Rescales a loss difference, such as a stability parameter or a generalization error.
    pub fn difference(&self, delta: f64) -> f64 {
        delta / self.scale
    }
}

/// Smallest and largest loss over every enumerated hypothesis and instance.
pub fn enumerated_loss_range<A, L>(p: &Protocol<'_, A, L>) -> (f64, f64)
where
    A: Learner,
    L: Loss<A::Hypothesis, A::Instance>,
{
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for h in 0..p.hypothesis_count() {
        for z in 0..p.k() {
            let l = p.loss_at(HypId(h as u32), z);
            lo = lo.min(l);
            hi = hi.max(l);
        }
    }
    (lo, hi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub id: &'static str,
    /// `NaN` when inapplicable.
    pub value: f64,
    /// Same formula with `0.72` for `h(1)`, where the constant appears.
    pub rounded_value: Option<f64>,
    pub components: Vec<(String, f64)>,
    pub applicable: bool,
    pub reason: Option<String>,
    /// Exact `|gen error|`, or the exact second moment for moment bounds.
    pub comparison: Option<f64>,
    pub renormalization: Option<LossRenormalization>,
}

impl BoundReport {
    fn new(id: &'static str, value: f64) -> Self {
        Self {
            id,
            value,
            rounded_value: None,
            components: Vec::new(),
            applicable: true,
            reason: None,
            comparison: None,
            renormalization: None,
        }
    }

    pub fn inapplicable(id: &'static str, reason: impl Into<String>) -> Self {
        Self {
            applicable: false,
            reason: Some(reason.into()),
            ..Self::new(id, f64::NAN)
        }
    }

    fn component(mut self, name: &str, value: f64) -> Self {
        self.components.push((name.to_string(), value));
        self
    }

    fn rounded(mut self, value: f64) -> Self {
        self.rounded_value = Some(value);
        self
    }

    pub fn component_value(&self, name: &str) -> Option<f64> {
        self.components.iter().find(|(n, _)| n == name).map(|c| c.1)
    }

    pub fn with_comparison(mut self, value: f64) -> Self {
        self.comparison = Some(value);
        self
    }

    /// Marks the report inapplicable when a stability input was sampled,
    /// unless sampled values were explicitly allowed.
    pub fn gate_stability(self, inputs: &[(&str, StabilityValue)], allow_sampled: bool) -> Self {
        if allow_sampled || !self.applicable {
            return self;
        }
        match inputs.iter().find(|(_, v)| !v.is_exact()) {
            Some((name, v)) => {
                let mut r = Self::inapplicable(
                    self.id,
                    format!(
                        "{name} is a sampled {} value, not a supremum",
                        v.method.label()
                    ),
                );
                r.components = self.components;
                r.comparison = self.comparison;
                r
            }
            None => self,
        }
    }

    /// `value ≥ comparison − tol`; vacuous when inapplicable or uncompared.
    pub fn is_sound(&self, tol: f64) -> bool {
        match (self.applicable, self.comparison) {
            (true, Some(c)) => self.value >= c - tol,
            _ => true,
        }
    }
}

fn check_nonneg(what: &str, values: &[f64]) -> Result<()> {
    if let Some(v) = values.iter().find(|v| !(**v >= -1e-10) || !v.is_finite()) {
        return Err(Error::param(format!(
            "{what} must be finite and non-negative, got {v}"
        )));
    }
    Ok(())
}

fn sqrt0(v: f64) -> f64 {
    v.max(0.0).sqrt()
}

fn mean_sqrt(values: &[f64]) -> f64 {
    values
        .iter()
        .map(|&v| sqrt0(v))
        .collect::<NeumaierSum>()
        .value()
        / values.len() as f64
}

fn mean(values: &[f64]) -> f64 {
    values.iter().copied().collect::<NeumaierSum>().value() / values.len() as f64
}

fn check_rows(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::param("need at least one row"));
    }
    Ok(())
}

/// `(√2 γ₁ / n) Σ √I(W̃⁺; Z̃ᵢ⁺)` and the same with `I(W̃⁺; Z̃ᵢ⁺ | W̃ᵢ⁻)`.
pub fn b_iomi_sch_a(
    gamma1: f64,
    iomi: &[f64],
    iomi_conditional: &[f64],
) -> Result<[BoundReport; 2]> {
    check_rows(iomi)?;
    check_nonneg("gamma1", &[gamma1])?;
    check_nonneg("iomi", iomi)?;
    check_nonneg("iomi_conditional", iomi_conditional)?;
    if iomi.len() != iomi_conditional.len() {
        return Err(Error::LengthMismatch {
            expected: iomi.len(),
            actual: iomi_conditional.len(),
        });
    }
    Ok([
        BoundReport::new("iomi_sch_a", SQRT_2 * gamma1 * mean_sqrt(iomi))
            .component("gamma1", gamma1)
            .component("mean_iomi", mean(iomi)),
        BoundReport::new(
            "iomi_sch_a_conditional",
            SQRT_2 * gamma1 * mean_sqrt(iomi_conditional),
        )
        .component("gamma1", gamma1)
        .component("mean_iomi_conditional", mean(iomi_conditional)),
    ])
}

/// `(√2 β₂ / n) Σ √I(W; Zᵢ)`, with the aggregate `√2 β₂ √(I(W;S)/n)` when given.
pub fn b_iomi_uniform(beta2: f64, iomi: &[f64], iomi_total: Option<f64>) -> Result<BoundReport> {
    check_rows(iomi)?;
    check_nonneg("beta2", &[beta2])?;
    check_nonneg("iomi", iomi)?;
    let mut r = BoundReport::new("iomi_uniform", SQRT_2 * beta2 * mean_sqrt(iomi))
        .component("beta2", beta2)
        .component("mean_iomi", mean(iomi));
    if let Some(total) = iomi_total {
        check_nonneg("iomi_total", &[total])?;
        r = r.component(
            "aggregate",
            SQRT_2 * beta2 * sqrt0(total / iomi.len() as f64),
        );
    }
    Ok(r)
}

/// The individual bound with a fixed sub-Gaussian proxy `σ` in place of a stability parameter.
pub fn b_iomi_baseline(sigma: f64, iomi: &[f64]) -> Result<BoundReport> {
    check_rows(iomi)?;
    check_nonneg("sigma", &[sigma])?;
    check_nonneg("iomi", iomi)?;
    Ok(
        BoundReport::new("iomi_baseline", SQRT_2 * sigma * mean_sqrt(iomi))
            .component("sigma", sigma),
    )
}

/// `(√2 β₂ / n) Σᵢ E_R √I^R(W̃⁺; Z̃ᵢ⁺)` from per-row seed disintegrations.
pub fn b_iomi_disintegrated(beta2: f64, per_seed: &[Disintegrated]) -> Result<BoundReport> {
    if per_seed.is_empty() {
        return Err(Error::param("need at least one row"));
    }
    check_nonneg("beta2", &[beta2])?;
    let rows: Vec<f64> = per_seed
        .iter()
        .map(|d| d.weighted(|_| 1.0, sqrt0))
        .collect();
    Ok(
        BoundReport::new("iomi_disintegrated", SQRT_2 * beta2 * mean(&rows))
            .component("beta2", beta2),
    )
}

/// `(γ₁/n) Σ I(W;Zᵢ) + h(1) γ₂² / γ₁`.
pub fn b_iomi_fast(gamma1: f64, gamma2: f64, iomi: &[f64]) -> Result<BoundReport> {
    check_rows(iomi)?;
    check_nonneg("gamma", &[gamma1, gamma2])?;
    check_nonneg("iomi", iomi)?;
    if gamma1 == 0.0 {
        return Ok(BoundReport::inapplicable(
            "iomi_fast",
            "gamma1 = 0 leaves the free parameter 1/gamma1 undefined",
        ));
    }
    let head = gamma1 * mean(iomi);
    let tail = gamma2 * gamma2 / gamma1;
    Ok(BoundReport::new("iomi_fast", head + H1 * tail)
        .rounded(head + H1_ROUNDED * tail)
        .component("gamma1", gamma1)
        .component("gamma2", gamma2)
        .component("gamma1_at_most_1", f64::from(u8::from(gamma1 <= 1.0))))
}

/// Per-row inputs for the hypothesis-conditioned bounds.
#[derive(Debug, Clone, Copy)]
pub struct HypRow<'a> {
    pub tables: &'a DeltaTables,
    /// `hyp_cmi` disintegrated over `(w̃⁺, w̃ᵢ⁻)`.
    pub hyp_cmi: &'a Disintegrated,
}

fn delta1_of(row: &HypRow<'_>, z: &[u32]) -> Result<f64> {
    row.tables
        .delta1(HypId(z[0]), HypId(z[1]))
        .ok_or_else(|| Error::param(format!("no delta1 entry for hypothesis pair {z:?}")))
}

fn row_weighted(
    row: &HypRow<'_>,
    f: impl Fn(f64, f64, &crate::stability::PairStats) -> f64,
) -> Result<f64> {
    let mut acc = NeumaierSum::new();
    for (z, m, i) in &row.hyp_cmi.entries {
        let d = delta1_of(row, z)?;
        let st = row.tables.pairs[&(HypId(z[0]), HypId(z[1]))];
        acc.add(m * f(d, *i, &st));
    }
    Ok(acc.value())
}

/// `(√2/n) Σ min{E[Δ₁ √I^{W̃ᵢ}], √(E[Δ₁²] I(Ẑᵢ;Uᵢ|W̃ᵢ))}`.
pub fn b_cmi_delta1(rows: &[HypRow<'_>]) -> Result<BoundReport> {
    if rows.is_empty() {
        return Err(Error::param("need at least one row"));
    }
    let mut first = Vec::with_capacity(rows.len());
    let mut second = Vec::with_capacity(rows.len());
    for row in rows {
        first.push(row_weighted(row, |d, i, _| d * sqrt0(i))?);
        second.push(sqrt0(
            row.tables.expected_delta1_sq() * row.hyp_cmi.expectation(),
        ));
    }
    let per_row: Vec<f64> = first.iter().zip(&second).map(|(a, b)| a.min(*b)).collect();
    Ok(BoundReport::new("cmi_delta1", SQRT_2 * mean(&per_row))
        .component("disintegrated_form", SQRT_2 * mean(&first))
        .component("second_moment_form", SQRT_2 * mean(&second)))
}

/// `(√2 γ₃ / n) Σ √(sup_w̃ I^{w̃}(Ẑᵢ;Uᵢ))`.
pub fn b_cmi_sch_c(gamma3: f64, sup_hyp_cmi: &[f64]) -> Result<BoundReport> {
    check_rows(sup_hyp_cmi)?;
    check_nonneg("gamma3", &[gamma3])?;
    check_nonneg("sup_hyp_cmi", sup_hyp_cmi)?;
    Ok(
        BoundReport::new("cmi_sch_c", SQRT_2 * gamma3 * mean_sqrt(sup_hyp_cmi))
            .component("gamma3", gamma3),
    )
}

/// `(√2 β₂ / n) Σ √I(Ẑᵢ;Uᵢ|W̃ᵢ)`, never above `√(2 ln 2) β₂`.
pub fn b_cmi_uniform(beta2: f64, hyp_cmi: &[f64]) -> Result<BoundReport> {
    check_rows(hyp_cmi)?;
    check_nonneg("beta2", &[beta2])?;
    check_nonneg("hyp_cmi", hyp_cmi)?;
    Ok(
        BoundReport::new("cmi_uniform", SQRT_2 * beta2 * mean_sqrt(hyp_cmi))
            .component("beta2", beta2)
            .component("ceiling", (2.0 * LN_2).sqrt() * beta2),
    )
}

/// `(1/n) Σ E[Δ₁(W̃ᵢ)(I^{W̃ᵢ} + h(1) Λ(W̃ᵢ))]`.
pub fn b_cmi_fast_delta(rows: &[HypRow<'_>]) -> Result<BoundReport> {
    if rows.is_empty() {
        return Err(Error::param("need at least one row"));
    }
    let mut exact = Vec::with_capacity(rows.len());
    let mut rounded = Vec::with_capacity(rows.len());
    let mut ed1 = 0f64;
    let mut max_lambda = 0f64;
    for row in rows {
        exact.push(row_weighted(row, |d, i, st| d * (i + H1 * st.lambda()))?);
        rounded.push(row_weighted(row, |d, i, st| {
            d * (i + H1_ROUNDED * st.lambda())
        })?);
        ed1 = ed1.max(row.tables.expected_delta1());
        max_lambda = max_lambda.max(row.tables.max_lambda());
    }
    Ok(BoundReport::new("cmi_fast_delta", mean(&exact))
        .rounded(mean(&rounded))
        .component("induced_gamma3", ed1)
        .component("ceiling", (LN_2 + H1) * ed1)
        .component("max_lambda", max_lambda))
}

/// `(β₂/n) Σ I(Ẑᵢ;Uᵢ|W̃ᵢ) + h(1) γ₄² / β₂`.
pub fn b_cmi_fast_uniform(beta2: f64, gamma4: f64, hyp_cmi: &[f64]) -> Result<BoundReport> {
    check_rows(hyp_cmi)?;
    check_nonneg("stability", &[beta2, gamma4])?;
    check_nonneg("hyp_cmi", hyp_cmi)?;
    if beta2 == 0.0 {
        return Ok(BoundReport::inapplicable(
            "cmi_fast_uniform",
            "beta2 = 0 leaves the free parameter 1/beta2 undefined",
        ));
    }
    let head = beta2 * mean(hyp_cmi);
    let tail = gamma4 * gamma4 / beta2;
    Ok(BoundReport::new("cmi_fast_uniform", head + H1 * tail)
        .rounded(head + H1_ROUNDED * tail)
        .component("beta2", beta2)
        .component("gamma4", gamma4))
}

fn second_moment_gate(
    id: &'static str,
    symmetric: bool,
    renorm: Option<LossRenormalization>,
) -> Option<BoundReport> {
    if !symmetric {
        return Some(BoundReport::inapplicable(
            id,
            "algorithm is not symmetric in the sample",
        ));
    }
    if renorm.is_none() {
        return Some(BoundReport::inapplicable(
            id,
            "loss is not known to lie in [0, 1] and no renormalization was given",
        ));
    }
    None
}

/// `4β₂²((1.5 I(E;U|W̃) + 0.75 ln 3)/n + 1) + 1/n` in the renormalized scale.
///
/// `beta2` is in the original loss scale.
pub fn b_second_moment(
    beta2: f64,
    vec_cmi: f64,
    n: usize,
    symmetric: bool,
    renorm: Option<LossRenormalization>,
) -> Result<BoundReport> {
    check_nonneg("inputs", &[beta2, vec_cmi])?;
    if n == 0 {
        return Err(Error::param("n must be positive"));
    }
    if let Some(r) = second_moment_gate("second_moment", symmetric, renorm) {
        return Ok(r);
    }
    let renorm = renorm.expect("gated");
    let b = renorm.difference(beta2);
    let n = n as f64;
    let value = 4.0 * b * b * ((1.5 * vec_cmi + 0.75 * 3f64.ln()) / n + 1.0) + 1.0 / n;
    let rounded = 4.0 * b * b * ((1.5 * vec_cmi + 0.82) / n + 1.0) + 1.0 / n;
    let mut r = BoundReport::new("second_moment", value)
        .rounded(rounded)
        .component("beta2_scaled", b)
        .component("vec_cmi", vec_cmi);
    r.renormalization = Some(renorm);
    Ok(r)
}

/// `(6/n) E[Δ̄₁(W̃)(I^{W̃}(E;U) + ln3/2)] + 1/n + 4γ₂²` in the renormalized scale.
///
/// `tables[i]` must hold row `i`'s Δ₁; with a budget ceiling in place of the
/// exact disintegration, `I^{W̃}` is replaced by `n ln 2`.
pub fn b_second_moment_strong(
    tables: &[&DeltaTables],
    vec: &VectorCmi,
    gamma2: f64,
    symmetric: bool,
    renorm: Option<LossRenormalization>,
) -> Result<BoundReport> {
    let n = tables.len();
    if n == 0 {
        return Err(Error::param("need at least one row"));
    }
    check_nonneg("gamma2", &[gamma2])?;
    if let Some(r) = second_moment_gate("second_moment_strong", symmetric, renorm) {
        return Ok(r);
    }
    let renorm = renorm.expect("gated");
    let nf = n as f64;
    let half_ln3 = 3f64.ln() / 2.0;
    let s2 = renorm.scale * renorm.scale;
    let expectation = match &vec.per_condition {
        Some(d) => {
            let mut acc = NeumaierSum::new();
            for ((_, m, info), (w_plus, w_minus)) in d.entries.iter().zip(&vec.conditions) {
                let mut bar = 0.0;
                for (i, &wm) in w_minus.iter().enumerate() {
                    let d1 = tables[i]
                        .delta1(*w_plus, wm)
                        .ok_or_else(|| Error::param(format!("no delta1 entry for row {i}")))?;
                    bar += d1 * d1 / s2;
                }
                acc.add(m * bar / nf * (info + half_ln3));
            }
            acc.value()
        }
        None => {
            let bar = tables
                .iter()
                .map(|t| t.expected_delta1_sq() / s2)
                .sum::<f64>()
                / nf;
            bar * (nf * LN_2 + half_ln3)
        }
    };
    let g2 = renorm.difference(gamma2);
    let mut r = BoundReport::new(
        "second_moment_strong",
        6.0 / nf * expectation + 1.0 / nf + 4.0 * g2 * g2,
    )
    .component("gamma2_scaled", g2);
    r.renormalization = Some(renorm);
    Ok(r)
}

/// `(√2/n) Σ min{E[Δ₂(Z̃ᵢ⁺) √I^{Z̃ᵢ⁺}], √(E[Δ₂²] I(Wᵢ,W̄ᵢ;Uᵢ|Z̃ᵢ⁺))}`.
///
/// `ss_cmi[i]` is disintegrated over the support position of `Z̃ᵢ⁺`.
pub fn b_ss_cmi_delta2(
    delta2: &[&[Option<f64>]],
    ss_cmi: &[&Disintegrated],
) -> Result<BoundReport> {
    if delta2.is_empty() || delta2.len() != ss_cmi.len() {
        return Err(Error::LengthMismatch {
            expected: delta2.len(),
            actual: ss_cmi.len(),
        });
    }
    let mut first = Vec::new();
    let mut second = Vec::new();
    for (d2, dis) in delta2.iter().zip(ss_cmi) {
        let lookup = |z: &[u32]| d2.get(z[0] as usize).copied().flatten().unwrap_or(0.0);
        first.push(dis.weighted(|z| lookup(z), sqrt0));
        let e_sq = dis.weighted(|z| lookup(z).powi(2), |_| 1.0);
        second.push(sqrt0(e_sq * dis.expectation()));
    }
    let per_row: Vec<f64> = first.iter().zip(&second).map(|(a, b)| a.min(*b)).collect();
    Ok(BoundReport::new("ss_cmi_delta2", SQRT_2 * mean(&per_row))
        .component("disintegrated_form", SQRT_2 * mean(&first))
        .component("second_moment_form", SQRT_2 * mean(&second)))
}

/// Loss-difference bounds: with `I(ΔLᵢ;Uᵢ)`, with `E√I^{Z̃ᵢ⁺}(ΔLᵢ;Uᵢ)`, and with `I(ΔLᵢ;Uᵢ|Z̃ᵢ⁺)`.
///
/// The first two are combined row by row into the `ld_min` component.
pub fn b_ld(beta2: f64, ld_mi: &[f64], ld_cmi: &[&Disintegrated]) -> Result<[BoundReport; 3]> {
    check_rows(ld_mi)?;
    check_nonneg("beta2", &[beta2])?;
    check_nonneg("ld_mi", ld_mi)?;
    if ld_mi.len() != ld_cmi.len() {
        return Err(Error::LengthMismatch {
            expected: ld_mi.len(),
            actual: ld_cmi.len(),
        });
    }
    let dis: Vec<f64> = ld_cmi.iter().map(|d| d.weighted(|_| 1.0, sqrt0)).collect();
    let cond: Vec<f64> = ld_cmi.iter().map(|d| d.expectation()).collect();
    let unc: Vec<f64> = ld_mi.iter().map(|&v| sqrt0(v)).collect();
    let min: Vec<f64> = unc.iter().zip(&dis).map(|(a, b)| a.min(*b)).collect();
    let c = SQRT_2 * beta2;
    Ok([
        BoundReport::new("ld_unconditional", c * mean(&unc))
            .component("beta2", beta2)
            .component("ld_min", c * mean(&min)),
        BoundReport::new("ld_disintegrated", c * mean(&dis)).component("beta2", beta2),
        BoundReport::new("ld_conditional", c * mean_sqrt(&cond)).component("beta2", beta2),
    ])
}

/// Minimal Bernstein constants over the reachable hypotheses.
#[derive(Debug, Clone, PartialEq)]
pub struct BernsteinFit {
    /// Infinite when some hypothesis has zero excess risk but a distinct loss profile.
    pub b: f64,
    pub kappa: f64,
    pub w_star: HypId,
    pub risk_star: f64,
    /// `E_W[(L_μ(W) − L_μ(w*))^{1/κ}]`.
    pub excess: f64,
    /// `L_μ − L_μ(w*)`.
    pub expected_excess_risk: f64,
    pub hypotheses: usize,
}

impl BernsteinFit {
    /// `γ₂ = √(4 B E[(L_μ(W) − L_μ(w*))^{1/κ}])`.
    pub fn derived_gamma2(&self) -> f64 {
        if !self.b.is_finite() {
            return f64::INFINITY;
        }
        if self.excess == 0.0 {
            return 0.0;
        }
        (4.0 * self.b * self.excess).sqrt()
    }
}

/// Fits `(B, κ)` with `w*` the risk minimizer among hypotheses reached by
/// training on some sample, plus any `candidates`.
pub fn fit_bernstein<A, L>(
    p: &Protocol<'_, A, L>,
    kappa: f64,
    candidates: Vec<A::Hypothesis>,
) -> Result<BernsteinFit>
where
    A: Learner,
    L: Loss<A::Hypothesis, A::Instance>,
{
    if !(kappa >= 1.0) {
        return Err(Error::param(format!(
            "kappa must be at least 1, got {kappa}"
        )));
    }
    let mut output_mass: Vec<f64> = Vec::new();
    p.for_each_sample("bernstein fit", |o| {
        let j = o.w.0 as usize;
        if output_mass.len() <= j {
            output_mass.resize(j + 1, 0.0);
        }
        output_mass[j] += o.mass;
    })?;
    for c in candidates {
        p.intern(c);
    }
    let count = p.hypothesis_count();
    let risks: Vec<f64> = (0..count)
        .map(|h| p.population_risk(HypId(h as u32)))
        .collect();
    let (star, &risk_star) = risks
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::param("no hypotheses"))?;
    let w_star = HypId(star as u32);
    let masses = p.dist().masses();
    let mut b = 0f64;
    for h in 0..count {
        let excess = (risks[h] - risk_star).max(0.0);
        let var: f64 = (0..p.k())
            .map(|z| masses[z] * (p.loss_at(HypId(h as u32), z) - p.loss_at(w_star, z)).powi(2))
            .sum();
        if var == 0.0 {
            continue;
        }
        if excess == 0.0 {
            b = f64::INFINITY;
            continue;
        }
        b = b.max(var / excess.powf(1.0 / kappa));
    }
    let mut excess = NeumaierSum::new();
    let mut expected = NeumaierSum::new();
    for (h, &m) in output_mass.iter().enumerate() {
        let e = (risks[h] - risk_star).max(0.0);
        excess.add(m * e.powf(1.0 / kappa));
        expected.add(m * e);
    }
    Ok(BernsteinFit {
        b,
        kappa,
        w_star,
        risk_star,
        excess: excess.value(),
        expected_excess_risk: expected.value(),
        hypotheses: count,
    })
}

/// `(C/n) Σ I(W;Zᵢ) + 4h(1) (B/C) (L_μ − L_μ(w*))` for losses in `[0, C]`.
pub fn b_bernstein(fit: &BernsteinFit, c: f64, iomi: &[f64]) -> Result<BoundReport> {
    check_rows(iomi)?;
    check_nonneg("iomi", iomi)?;
    if fit.kappa != 1.0 {
        return Ok(BoundReport::inapplicable("bernstein", "needs kappa = 1"));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Ok(BoundReport::inapplicable(
            "bernstein",
            "loss range C must be positive and finite",
        ));
    }
    if !fit.b.is_finite() {
        return Ok(BoundReport::inapplicable(
            "bernstein",
            "no finite Bernstein constant: a zero-excess hypothesis differs from w*",
        ));
    }
    let head = c * mean(iomi);
    let excess = fit.expected_excess_risk;
    if excess == 0.0 {
        return Ok(BoundReport::new("bernstein", head)
            .rounded(head)
            .component("b", fit.b)
            .component("c", c)
            .component("derived_gamma2", 0.0));
    }
    Ok(
        BoundReport::new("bernstein", head + 4.0 * H1 * fit.b / c * excess)
            .rounded(head + 2.88 * fit.b / c * excess)
            .component("b", fit.b)
            .component("c", c)
            .component("derived_gamma2", fit.derived_gamma2()),
    )
}

/// `√(2 d ln(e n / d) / n)`.
pub fn b_vc_rhs(d_vc: usize, n: usize) -> Result<f64> {
    if d_vc == 0 || n <= d_vc + 1 {
        return Err(Error::param(format!(
            "need n > d + 1 with d >= 1, got n = {n}, d = {d_vc}"
        )));
    }
    let (d, n) = (d_vc as f64, n as f64);
    Ok((2.0 * d * (E * n / d).ln() / n).sqrt())
}

/// Compares `(1/n) Σ √I(Fᵢ,F̄ᵢ;Uᵢ|Z̃ᵢ⁺)` with [`b_vc_rhs`].
pub fn vc_check(d_vc: usize, f_cmi: &[f64]) -> Result<BoundReport> {
    check_rows(f_cmi)?;
    check_nonneg("f_cmi", f_cmi)?;
    let rhs = b_vc_rhs(d_vc, f_cmi.len())?;
    let lhs = mean_sqrt(f_cmi);
    Ok(BoundReport::new("vc_rhs", rhs)
        .component("lhs", lhs)
        .with_comparison(lhs))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RermMode {
    Lipschitz,
    /// `ρ`-smooth non-negative loss with expected empirical risk `L̂ₙ`.
    Smooth {
        rho: f64,
        empirical_risk: f64,
    },
}

/// `β (avg I(Ẑ;Uᵢ|W̃ᵢ) + h(1))` with `β = 2L²/(λn)`, or `48ρL̂ₙ/(λn)` when smooth.
pub fn b_rerm(cfg: &RegularizedErmConfig, hyp_cmi: &[f64], mode: RermMode) -> Result<BoundReport> {
    check_rows(hyp_cmi)?;
    check_nonneg("hyp_cmi", hyp_cmi)?;
    cfg.validate()?;
    let n = hyp_cmi.len() as f64;
    let beta = match mode {
        RermMode::Lipschitz => 2.0 * cfg.l * cfg.l / (cfg.lambda * n),
        RermMode::Smooth {
            rho,
            empirical_risk,
        } => {
            check_nonneg("smooth parameters", &[rho, empirical_risk])?;
            if cfg.lambda < 2.0 * rho / n {
                return Err(Error::param(format!(
                    "smooth mode needs lambda >= 2 rho / n = {}, got {}",
                    2.0 * rho / n,
                    cfg.lambda
                )));
            }
            48.0 * rho * empirical_risk / (cfg.lambda * n)
        }
    };
    let avg = mean(hyp_cmi);
    let id = match mode {
        RermMode::Lipschitz => "rerm_lipschitz",
        RermMode::Smooth { .. } => "rerm_smooth",
    };
    Ok(BoundReport::new(id, beta * (avg + H1))
        .rounded(beta * (avg + H1_ROUNDED))
        .component("beta2", beta))
}

/// `(1 − (2n−1)/d)^{2n−1}`, or 0 when `d ≤ 2n − 1`.
pub fn birthday_floor(n: usize, d: usize) -> f64 {
    let m = 2 * n as i64 - 1;
    if n == 0 {
        return 1.0;
    }
    if d as i64 <= m {
        return 0.0;
    }
    (1.0 - m as f64 / d as f64).powi(m as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn h_series_and_closed_form_agree_near_switch() {
        let x = 1e-4;
        let series = 0.5 + x / 6.0 + x * x / 24.0;
        assert!((bernstein_h(x).unwrap() - series).abs() < 1e-10);
        assert!((bernstein_h(x * 0.999).unwrap() - series).abs() < 1e-7);
    }

    #[test]
    fn renormalization_maps_range() {
        let r = LossRenormalization::unit_from_range(-2.0, 2.0).unwrap();
        assert_eq!(r.apply(-2.0), 0.0);
        assert_eq!(r.apply(2.0), 1.0);
        assert_eq!(r.difference(2.0), 0.5);
    }
}
