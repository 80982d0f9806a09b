//! Joint laws of per-row protocol variables.

use rustc_hash::FxHashMap;

use super::table::JointTable;
use crate::error::{Error, Result};
use crate::numeric::quantize;
use crate::problem::{Learner, Loss, Protocol, RowOutcome};

/// A per-row random variable of the supersample protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    /// `Z̃ᵢ⁺`
    ZPlus,
    /// `Z̃ᵢ⁻`
    ZMinus,
    /// `Uᵢ`
    U,
    /// `R`
    Seed,
    /// `W̃ᵢ⁺`
    WPlus,
    /// `W̃ᵢ⁻`
    WMinus,
    /// `Ẑᵢ = Z̃_{i,Uᵢ}`
    ZHat,
    /// `Wᵢ = W̃_{i,Uᵢ}`
    WSel,
    /// `W̄ᵢ = W̃_{i,Ūᵢ}`
    WBar,
    /// Hypothesis trained on the `U`-selected entries (standard supersample).
    WStd,
    /// `ΔLᵢ = ℓ(Wᵢ, Z̃ᵢ⁺) − ℓ(W̄ᵢ, Z̃ᵢ⁺)`
    DeltaL,
    /// `Lᵢ = ℓ(Wᵢ, Z̃ᵢ⁺)`
    LSel,
    /// `L̄ᵢ = ℓ(W̄ᵢ, Z̃ᵢ⁺)`
    LBar,
    /// Prediction of `Wᵢ` at `Z̃ᵢ⁺`.
    FSel,
    /// Prediction of `W̄ᵢ` at `Z̃ᵢ⁺`.
    FBar,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::ZPlus => "z_plus",
            Var::ZMinus => "z_minus",
            Var::U => "u",
            Var::Seed => "seed",
            Var::WPlus => "w_plus",
            Var::WMinus => "w_minus",
            Var::ZHat => "z_hat",
            Var::WSel => "w",
            Var::WBar => "w_bar",
            Var::WStd => "w_std",
            Var::DeltaL => "delta_l",
            Var::LSel => "l",
            Var::LBar => "l_bar",
            Var::FSel => "f",
            Var::FBar => "f_bar",
        }
    }

    fn needs_mask(self) -> bool {
        matches!(
            self,
            Var::U
                | Var::ZHat
                | Var::WSel
                | Var::WBar
                | Var::WStd
                | Var::DeltaL
                | Var::LSel
                | Var::LBar
                | Var::FSel
                | Var::FBar
        )
    }

    fn needs_minus(self) -> bool {
        !matches!(self, Var::ZPlus | Var::WPlus | Var::Seed)
    }
}

/// Interns quantized loss values so they can serve as table codes.
#[derive(Debug, Default)]
pub struct LossCodes {
    codes: FxHashMap<i64, u32>,
}

impl LossCodes {
    pub fn code(&mut self, value: f64) -> u32 {
        let next = self.codes.len() as u32;
        *self.codes.entry(quantize(value)).or_insert(next)
    }
}

/// Encodes `var` for one row outcome under mask bit `u`.
pub(crate) fn encode<A, L>(
    p: &Protocol<'_, A, L>,
    codes: &mut LossCodes,
    o: &RowOutcome,
    u: u8,
    var: Var,
) -> Result<u32>
where
    A: Learner,
    L: Loss<A::Hypothesis, A::Instance>,
{
    let (w, w_bar) = if u == 0 {
        (o.w_plus, o.w_minus)
    } else {
        (o.w_minus, o.w_plus)
    };
    let predict = |h| {
        p.predict_at(h, o.z_plus).map(u32::from).ok_or_else(|| {
            Error::Unsupported(
                "f_cmi".into(),
                "the algorithm does not expose label predictions".into(),
            )
        })
    };
    Ok(match var {
        Var::ZPlus => o.z_plus as u32,
        Var::ZMinus => o.z_minus as u32,
        Var::U => u as u32,
        Var::Seed => o.seed as u32,
        Var::WPlus => o.w_plus.0,
        Var::WMinus => o.w_minus.0,
        Var::ZHat => (if u == 0 { o.z_plus } else { o.z_minus }) as u32,
        Var::WSel | Var::WStd => w.0,
        Var::WBar => w_bar.0,
        Var::DeltaL => codes.code(p.loss_at(w, o.z_plus) - p.loss_at(w_bar, o.z_plus)),
        Var::LSel => codes.code(p.loss_at(w, o.z_plus)),
        Var::LBar => codes.code(p.loss_at(w_bar, o.z_plus)),
        Var::FSel => predict(w)?,
        Var::FBar => predict(w_bar)?,
    })
}

/// Exact joint tables of several variable lists for row `i`, in one pass.
///
/// Only the draws the variables depend on are enumerated: lists over
/// `{Z̃ᵢ⁺, W̃ᵢ⁺, R}` skip `Z̃ᵢ⁻`, and the mask bit is split analytically.
pub fn build_protocol_tables<A, L>(
    p: &Protocol<'_, A, L>,
    i: usize,
    what: &str,
    specs: &[&[Var]],
) -> Result<Vec<JointTable>>
where
    A: Learner,
    L: Loss<A::Hypothesis, A::Instance>,
{
    let mut tables = specs
        .iter()
        .map(|vars| JointTable::new(&vars.iter().map(|v| v.name()).collect::<Vec<_>>()))
        .collect::<Result<Vec<_>>>()?;
    let mut codes = LossCodes::default();
    let masked: Vec<bool> = specs
        .iter()
        .map(|vars| vars.iter().any(|v| v.needs_mask()))
        .collect();
    let mut err = None;
    let mut buf = [0u32; super::table::MAX_AXES];

    if specs
        .iter()
        .all(|vars| vars.iter().all(|v| !v.needs_minus()))
    {
        let k = p.k();
        let masses = p.dist().masses();
        let seeds = p.seeds().seeds();
        p.for_each_rest_block(i, what, |block| {
            for (s, &(_, sm)) in seeds.iter().enumerate() {
                for z in 0..k {
                    let o = RowOutcome {
                        mass: block.mass * sm * masses[z],
                        seed: s,
                        z_plus: z,
                        z_minus: z,
                        w_plus: block.hyps[s * k + z],
                        w_minus: block.hyps[s * k + z],
                    };
                    for (t, vars) in tables.iter_mut().zip(specs) {
                        for (slot, &v) in vars.iter().enumerate() {
                            buf[slot] = match v {
                                Var::ZPlus => o.z_plus as u32,
                                Var::WPlus => o.w_plus.0,
                                _ => o.seed as u32,
                            };
                        }
                        t.add(&buf[..vars.len()], o.mass);
                    }
                }
            }
        })?;
        return Ok(tables);
    }

    p.for_each_row_outcome(i, what, |o| {
        if err.is_some() {
            return;
        }
        for ((t, vars), &split) in tables.iter_mut().zip(specs).zip(&masked) {
            let bits: &[u8] = if split { &[0, 1] } else { &[0] };
            let mass = if split { o.mass * 0.5 } else { o.mass };
            for &u in bits {
                for (slot, &v) in vars.iter().enumerate() {
                    match encode(p, &mut codes, o, u, v) {
                        Ok(c) => buf[slot] = c,
                        Err(e) => {
                            err = Some(e);
                            return;
                        }
                    }
                }
                t.add(&buf[..vars.len()], mass);
            }
        }
    })?;
    match err {
        Some(e) => Err(e),
        None => Ok(tables),
    }
}

/// Exact joint table of `vars` for row `i`.
pub fn build_protocol_table<A, L>(
    p: &Protocol<'_, A, L>,
    i: usize,
    vars: &[Var],
) -> Result<JointTable>
where
    A: Learner,
    L: Loss<A::Hypothesis, A::Instance>,
{
    let what = vars.iter().map(|v| v.name()).collect::<Vec<_>>().join(",");
    Ok(build_protocol_tables(p, i, &what, &[vars])?.remove(0))
}
