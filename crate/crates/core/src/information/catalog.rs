//! Named information quantities.

use std::fmt;
use std::str::FromStr;

use rustc_hash::FxHashMap;

use super::plugin::plugin_estimate;
use super::protocol::{build_protocol_tables, Var};
use super::table::{clamp_info, Disintegrated, JointTable};
use crate::error::{Error, Result};
use crate::problem::{HypId, Learner, Loss, Method, Mode, Protocol};

/// Per-row quantities, each `I(X;Y|Z)` over protocol variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Quantity {
    /// `I(W̃⁺; Z̃ᵢ⁺) = I(W; Zᵢ)`
    IomiIndividual,
    /// `I(W̃⁺; Z̃ᵢ⁺ | W̃ᵢ⁻)`
    IomiConditional,
    /// `I(Ẑᵢ; Uᵢ | W̃ᵢ)`
    HypCmi,
    /// `I(Wᵢ, W̄ᵢ; Uᵢ | Z̃ᵢ⁺)`
    SsCmi,
    /// `I(W; Uᵢ | Z̃ᵢ)` in the standard supersample
    StdCmi,
    /// `I(ΔLᵢ; Uᵢ)`
    LdMi,
    /// `I(ΔLᵢ; Uᵢ | Z̃ᵢ⁺)`
    LdCmi,
    /// `I(Lᵢ, L̄ᵢ; Uᵢ | Z̃ᵢ⁺)`
    ECmi,
    /// `I(Fᵢ, F̄ᵢ; Uᵢ | Z̃ᵢ⁺)`
    FCmi,
}

pub const ALL_QUANTITIES: [Quantity; 9] = [
    Quantity::IomiIndividual,
    Quantity::IomiConditional,
    Quantity::HypCmi,
    Quantity::SsCmi,
    Quantity::StdCmi,
    Quantity::LdMi,
    Quantity::LdCmi,
    Quantity::ECmi,
    Quantity::FCmi,
];

/// `(X, Y, Z)` variable lists of a quantity.
pub struct QuantitySpec {
    pub x: &'static [Var],
    pub y: &'static [Var],
    pub z: &'static [Var],
}

impl QuantitySpec {
    /// All variables in `x, y, z` order, which is the table axis order.
    pub fn vars(&self) -> Vec<Var> {
        self.x.iter().chain(self.y).chain(self.z).copied().collect()
    }

    fn names(list: &[Var]) -> Vec<&'static str> {
        list.iter().map(|v| v.name()).collect()
    }
}

impl Quantity {
    pub fn name(self) -> &'static str {
        match self {
            Quantity::IomiIndividual => "iomi_individual",
            Quantity::IomiConditional => "iomi_conditional",
            Quantity::HypCmi => "hyp_cmi",
            Quantity::SsCmi => "ss_cmi",
            Quantity::StdCmi => "std_cmi",
            Quantity::LdMi => "ld_mi",
            Quantity::LdCmi => "ld_cmi",
            Quantity::ECmi => "e_cmi",
            Quantity::FCmi => "f_cmi",
        }
    }

    pub fn spec(self) -> QuantitySpec {
        use Var::*;
        let (x, y, z): (&'static [Var], &'static [Var], &'static [Var]) = match self {
            Quantity::IomiIndividual => (&[WPlus], &[ZPlus], &[]),
            Quantity::IomiConditional => (&[WPlus], &[ZPlus], &[WMinus]),
            Quantity::HypCmi => (&[ZHat], &[U], &[WPlus, WMinus]),
            Quantity::SsCmi => (&[WSel, WBar], &[U], &[ZPlus]),
            Quantity::StdCmi => (&[WStd], &[U], &[ZPlus, ZMinus]),
            Quantity::LdMi => (&[DeltaL], &[U], &[]),
            Quantity::LdCmi => (&[DeltaL], &[U], &[ZPlus]),
            Quantity::ECmi => (&[LSel, LBar], &[U], &[ZPlus]),
            Quantity::FCmi => (&[FSel, FBar], &[U], &[ZPlus]),
        };
        QuantitySpec { x, y, z }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ALL_QUANTITIES
            .iter()
            .copied()
            .find(|q| q.name() == s)
            .ok_or_else(|| Error::Unsupported(s.to_string(), "unknown quantity".into()))
    }
}

/// One information value in nats.
#[derive(Debug, Clone, PartialEq)]
pub struct InfoEstimate {
    pub quantity: String,
    /// 0-based row, `None` for joint quantities.
    pub index: Option<usize>,
    pub value: f64,
    pub method: Method,
}

impl InfoEstimate {
    pub fn exact(quantity: impl Into<String>, index: Option<usize>, value: f64) -> Self {
        Self {
            quantity: quantity.into(),
            index,
            value: clamp_info(value),
            method: Method::Exact,
        }
    }
}

fn evaluate(q: Quantity, table: &JointTable) -> Result<Disintegrated> {
    let s = q.spec();
    table.disintegrated(
        &QuantitySpec::names(s.x),
        &QuantitySpec::names(s.y),
        &QuantitySpec::names(s.z),
    )
}

/// Exact per-condition values for row `i`.
pub fn quantity_disintegrated<A, L>(
    p: &Protocol<'_, A, L>,
    q: Quantity,
    i: usize,
) -> Result<Disintegrated>
where
    A: Learner,
    L: Loss<A::Hypothesis, A::Instance>,
{
    let vars = q.spec().vars();
    let table = build_protocol_tables(p, i, q.name(), &[&vars])?.remove(0);
    evaluate(q, &table)
}

/// Value of a catalog quantity at row `i`, exact or by plug-in sampling.
pub fn quantity<A, L>(
    p: &Protocol<'_, A, L>,
    q: Quantity,
    i: usize,
    mode: Mode,
) -> Result<InfoEstimate>
where
    A: Learner,
    L: Loss<A::Hypothesis, A::Instance>,
{
    match mode {
        Mode::Exact => Ok(InfoEstimate::exact(
            q.name(),
            Some(i),
            quantity_disintegrated(p, q, i)?.expectation(),
        )),
        Mode::MonteCarlo { samples, seed } => plugin_estimate(p, q, i, samples, seed),
    }
}

/// Exact values of several quantities for row `i`, sharing one enumeration.
pub fn quantities_exact<A, L>(
    p: &Protocol<'_, A, L>,
    qs: &[Quantity],
    i: usize,
) -> Result<Vec<(Quantity, Disintegrated)>>
where
    A: Learner,
    L: Loss<A::Hypothesis, A::Instance>,
{
    let vars: Vec<Vec<Var>> = qs.iter().map(|q| q.spec().vars()).collect();
    let specs: Vec<&[Var]> = vars.iter().map(|v| v.as_slice()).collect();
    let what = qs.iter().map(|q| q.name()).collect::<Vec<_>>().join(",");
    let tables = build_protocol_tables(p, i, &what, &specs)?;
    qs.iter()
        .zip(tables)
        .map(|(&q, t)| Ok((q, evaluate(q, &t)?)))
        .collect()
}

/// `I^R(W̃⁺; Z̃ᵢ⁺)` for every seed value.
pub fn seed_disintegrated_iomi<A, L>(p: &Protocol<'_, A, L>, i: usize) -> Result<Disintegrated>
where
    A: Learner,
    L: Loss<A::Hypothesis, A::Instance>,
{
    let vars = [Var::WPlus, Var::ZPlus, Var::Seed];
    let table = build_protocol_tables(p, i, "iomi_individual by seed", &[&vars])?.remove(0);
    table.disintegrated(&["w_plus"], &["z_plus"], &["seed"])
}

/// `I(W; S)` over the whole training sample.
///
/// For symmetric learners samples are enumerated as multisets; `W` depends
/// on `S` only through its multiset, so the value is unchanged.
pub fn iomi_total<A, L>(p: &Protocol<'_, A, L>) -> Result<InfoEstimate>
where
    A: Learner,
    L: Loss<A::Hypothesis, A::Instance>,
{
    let mut table = JointTable::new(&["w", "s"])?;
    let mut samples: FxHashMap<Vec<usize>, u32> = FxHashMap::default();
    p.for_each_sample("iomi_total", |o| {
        let next = samples.len() as u32;
        let s = *samples.entry(o.sample.to_vec()).or_insert(next);
        table.add(&[o.w.0, s], o.mass);
    })?;
    Ok(InfoEstimate::exact(
        "iomi_total",
        None,
        table.mutual_info(&["w"], &["s"])?,
    ))
}

fn intern_code<T: Clone + Eq + std::hash::Hash>(
    codes: &mut FxHashMap<Vec<T>, u32>,
    key: &[T],
) -> u32 {
    if let Some(&c) = codes.get(key) {
        return c;
    }
    let c = codes.len() as u32;
    codes.insert(key.to_vec(), c);
    c
}

/// How a joint quantity over all rows was obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum VectorMethod {
    Exact,
    /// Enumeration exceeds the budget; `n ln 2 = H(U)` is used instead.
    Ceiling,
}

/// `I(E; U | W̃)` with its per-`W̃` values.
#[derive(Debug, Clone)]
pub struct VectorCmi {
    pub value: f64,
    pub method: VectorMethod,
    /// `(w̃⁺, w̃⁻₁..ₙ)` for each condition in `per_condition`.
    pub conditions: Vec<(HypId, Vec<HypId>)>,
    /// Aligned with `conditions`.
    pub per_condition: Option<Disintegrated>,
}

/// Outcomes visited by a full supersample enumeration with all `2ⁿ` masks.
pub fn vector_cost<A, L>(p: &Protocol<'_, A, L>) -> f64
where
    A: Learner,
    L: Loss<A::Hypothesis, A::Instance>,
{
    p.supersample_cost() * 2f64.powi(p.n() as i32)
}

/// `I(E; U | W̃)`, or the ceiling `n ln 2` when over budget.
pub fn vec_cmi<A, L>(p: &Protocol<'_, A, L>) -> Result<VectorCmi>
where
    A: Learner,
    L: Loss<A::Hypothesis, A::Instance>,
{
    let n = p.n();
    if vector_cost(p) > p.budget() {
        return Ok(VectorCmi {
            value: n as f64 * std::f64::consts::LN_2,
            method: VectorMethod::Ceiling,
            conditions: Vec::new(),
            per_condition: None,
        });
    }
    let mut table = JointTable::new(&["e", "u", "w_tilde"])?;
    let mut w_codes: FxHashMap<Vec<u32>, u32> = FxHashMap::default();
    let mut conditions = Vec::new();
    let mut e_codes: FxHashMap<Vec<u32>, u32> = FxHashMap::default();
    let mut key = Vec::with_capacity(n + 1);
    let mut e = vec![0u32; n];
    let masks = 1u32 << n;
    p.for_each_supersample("vec_cmi", |o| {
        key.clear();
        key.push(o.w_plus.0);
        key.extend(o.w_minus.iter().map(|h| h.0));
        let next = w_codes.len() as u32;
        let w = *w_codes.entry(key.clone()).or_insert_with(|| {
            conditions.push((o.w_plus, o.w_minus.to_vec()));
            next
        });
        let mass = o.mass / masks as f64;
        for u in 0..masks {
            for (j, slot) in e.iter_mut().enumerate() {
                *slot = if u >> j & 1 == 0 {
                    o.plus[j]
                } else {
                    o.minus[j]
                } as u32;
            }
            let ec = intern_code(&mut e_codes, &e);
            table.add(&[ec, u, w], mass);
        }
    })?;
    let d = table.disintegrated(&["e"], &["u"], &["w_tilde"])?;
    // reorder conditions to match the disintegration's first-seen order
    let ordered = d
        .entries
        .iter()
        .map(|(z, _, _)| conditions[z[0] as usize].clone())
        .collect();
    Ok(VectorCmi {
        value: clamp_info(d.expectation()),
        method: VectorMethod::Exact,
        conditions: ordered,
        per_condition: Some(d),
    })
}

/// `I(F_[n], F̄_[n]; U | Z̃⁺_[n])`, `None` when over budget.
pub fn vec_f_cmi<A, L>(p: &Protocol<'_, A, L>) -> Result<Option<f64>>
where
    A: Learner,
    L: Loss<A::Hypothesis, A::Instance>,
{
    if vector_cost(p) > p.budget() {
        return Ok(None);
    }
    let n = p.n();
    let mut table = JointTable::new(&["f", "u", "z_plus"])?;
    let mut f_codes: FxHashMap<Vec<u8>, u32> = FxHashMap::default();
    let mut z_codes: FxHashMap<Vec<usize>, u32> = FxHashMap::default();
    let mut f = vec![0u8; 2 * n];
    let masks = 1u32 << n;
    let mut err = None;
    p.for_each_supersample("vec_f_cmi", |o| {
        if err.is_some() {
            return;
        }
        let zc = intern_code(&mut z_codes, o.plus);
        let mass = o.mass / masks as f64;
        for u in 0..masks {
            for j in 0..n {
                let (w, w_bar) = if u >> j & 1 == 0 {
                    (o.w_plus, o.w_minus[j])
                } else {
                    (o.w_minus[j], o.w_plus)
                };
                match (p.predict_at(w, o.plus[j]), p.predict_at(w_bar, o.plus[j])) {
                    (Some(a), Some(b)) => {
                        f[2 * j] = a;
                        f[2 * j + 1] = b;
                    }
                    _ => {
                        err = Some(Error::Unsupported(
                            "vec_f_cmi".into(),
                            "the algorithm does not expose label predictions".into(),
                        ));
                        return;
                    }
                }
            }
            let fc = intern_code(&mut f_codes, &f);
            table.add(&[fc, u, zc], mass);
        }
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(Some(table.cond_mutual_info(&["f"], &["u"], &["z_plus"])?))
}
