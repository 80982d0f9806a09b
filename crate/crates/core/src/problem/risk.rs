//! Generalization error through the direct route and the three supersample
//! forms, exact or sampled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Learner, Loss, Protocol, RowOutcome};
use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, NeumaierSum};

/// Resamples used for every bootstrap standard error.
pub const BOOTSTRAP_RESAMPLES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    Exact,
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Exact,
    MonteCarlo { samples: usize, stderr: f64 },
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::MonteCarlo { .. } => "mc",
        }
    }

    pub fn stderr(&self) -> Option<f64> {
        match self {
            Method::Exact => None,
            Method::MonteCarlo { stderr, .. } => Some(*stderr),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub method: Method,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskReport {
    /// `L_μ = E[L_μ(W)]`.
    pub expected_population: f64,
    /// `L̂ₙ = E[L_S(W)]`.
    pub expected_empirical: f64,
    /// `ℰ_μ(𝒜)` from the supersample form.
    pub gen_error: f64,
    pub method: Method,
}

impl RiskReport {
    /// `L_μ − L̂ₙ` from the direct route; equals `gen_error` up to rounding.
    pub fn direct_gen_error(&self) -> f64 {
        self.expected_population - self.expected_empirical
    }
}

/// Standard error of the mean of `values` from resampled means.
pub fn bootstrap_mean_stderr(values: &[f64], seed: u64) -> f64 {
    bootstrap_stderr(values.len(), seed, |idx| {
        compensated_sum(idx.iter().map(|&j| values[j])) / idx.len() as f64
    })
}

/// Bootstrap standard deviation of `stat` over index resamples of `0..len`.
pub fn bootstrap_stderr(len: usize, seed: u64, mut stat: impl FnMut(&[usize]) -> f64) -> f64 {
    if len < 2 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut idx = vec![0usize; len];
    let stats: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| {
            for j in idx.iter_mut() {
                *j = rng.random_range(0..len);
            }
            stat(&idx)
        })
        .collect();
    let mean = compensated_sum(stats.iter().copied()) / stats.len() as f64;
    let var = compensated_sum(stats.iter().map(|s| (s - mean).powi(2))) / (stats.len() - 1) as f64;
    var.sqrt()
}

fn check_samples(samples: usize) -> Result<()> {
    if samples == 0 {
        return Err(Error::param("Monte Carlo sample count must be positive"));
    }
    Ok(())
}

/// Row-averaged expectation of `term` over the exact row law.
fn exact_row_average<A, L>(
    p: &Protocol<'_, A, L>,
    what: &str,
    term: impl Fn(&RowOutcome) -> f64,
) -> Result<f64>
where
    A: Learner,
    L: Loss<A::Hypothesis, A::Instance>,
{
    let rows = p.per_row(|i| {
        let mut acc = NeumaierSum::new();
        p.for_each_row_outcome(i, what, |o| acc.add(o.mass * term(o)))?;
        Ok(acc.value())
    })?;
    Ok(compensated_sum(rows) / p.n() as f64)
}

/// Sampled version: draws a uniform row, then a row outcome and a fair bit.
fn mc_row_average<A, L>(
    p: &Protocol<'_, A, L>,
    samples: usize,
    seed: u64,
    term: impl Fn(&RowOutcome, u8) -> f64,
) -> Result<Estimate>
where
    A: Learner,
    L: Loss<A::Hypothesis, A::Instance>,
{
    check_samples(samples)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(samples);
    for _ in 0..samples {
        let i = rng.random_range(0..p.n());
        let o = p.sample_row(&mut rng, i)?;
        let u: u8 = rng.random_range(0..2);
        values.push(term(&o, u));
    }
    let value = compensated_sum(values.iter().copied()) / samples as f64;
    let stderr = bootstrap_mean_stderr(&values, seed);
    Ok(Estimate {
        value,
        method: Method::MonteCarlo { samples, stderr },
    })
}

/// `L_μ` and `L̂ₙ` straight from their definitions.
fn direct_risks<A, L>(p: &Protocol<'_, A, L>, mode: Mode) -> Result<(f64, f64)>
where
    A: Learner,
    L: Loss<A::Hypothesis, A::Instance>,
{
    let n = p.n() as f64;
    match mode {
        Mode::Exact => {
            let mut pop = NeumaierSum::new();
            let mut emp = NeumaierSum::new();
            p.for_each_sample("expected risks", |o| {
                pop.add(o.mass * p.population_risk(o.w));
                let ls = compensated_sum(o.sample.iter().map(|&z| p.loss_at(o.w, z))) / n;
                emp.add(o.mass * ls);
            })?;
            Ok((pop.value(), emp.value()))
        }
        Mode::MonteCarlo { samples, seed } => {
            check_samples(samples)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
            let mut pop = NeumaierSum::new();
            let mut emp = NeumaierSum::new();
            for _ in 0..samples {
                let (s, w) = p.sample_training(&mut rng)?;
                pop.add(p.population_risk(w));
                emp.add(compensated_sum(s.iter().map(|&z| p.loss_at(w, z))) / n);
            }
            Ok((pop.value() / samples as f64, emp.value() / samples as f64))
        }
    }
}

fn standard_term<A, L>(p: &Protocol<'_, A, L>, o: &RowOutcome) -> f64
where
    A: Learner,
    L: Loss<A::Hypothesis, A::Instance>,
{
    p.loss_at(o.w_minus, o.z_plus) - p.loss_at(o.w_plus, o.z_plus)
}

/// `(1/n) Σᵢ E[ℓ(W̃ᵢ⁻, Z̃ᵢ⁺) − ℓ(W̃ᵢ⁺, Z̃ᵢ⁺)]`, with the direct risks attached.
pub fn gen_error_standard<A, L>(p: &Protocol<'_, A, L>, mode: Mode) -> Result<RiskReport>
where
    A: Learner,
    L: Loss<A::Hypothesis, A::Instance>,
{
    let (pop, emp) = direct_risks(p, mode)?;
    let est = match mode {
        Mode::Exact => Estimate {
            value: exact_row_average(p, "gen_error", |o| standard_term(p, o))?,
            method: Method::Exact,
        },
        Mode::MonteCarlo { samples, seed } => {
            mc_row_average(p, samples, seed, |o, _| standard_term(p, o))?
        }
    };
    Ok(RiskReport {
        expected_population: pop,
        expected_empirical: emp,
        gen_error: est.value,
        method: est.method,
    })
}

/// Superscripts flipped: `(1/n) Σᵢ E[ℓ(W̃ᵢ⁺, Z̃ᵢ⁻) − ℓ(W̃ᵢ⁻, Z̃ᵢ⁻)]`.
pub fn gen_error_flipped<A, L>(p: &Protocol<'_, A, L>, mode: Mode) -> Result<Estimate>
where
    A: Learner,
    L: Loss<A::Hypothesis, A::Instance>,
{
    let term = |o: &RowOutcome| p.loss_at(o.w_plus, o.z_minus) - p.loss_at(o.w_minus, o.z_minus);
    match mode {
        Mode::Exact => Ok(Estimate {
            value: exact_row_average(p, "gen_error", term)?,
            method: Method::Exact,
        }),
        Mode::MonteCarlo { samples, seed } => mc_row_average(p, samples, seed, |o, _| term(o)),
    }
}

/// `(1/n) Σᵢ E[(−1)^{Uᵢ}(ℓ(W̃ᵢ⁻, Ẑᵢ) − ℓ(W̃ᵢ⁺, Ẑᵢ))]` with `Ẑᵢ = Z̃_{i,Uᵢ}`.
pub fn gen_error_masked_data<A, L>(p: &Protocol<'_, A, L>, mode: Mode) -> Result<Estimate>
where
    A: Learner,
    L: Loss<A::Hypothesis, A::Instance>,
{
    let term = |o: &RowOutcome, u: u8| {
        let z = if u == 0 { o.z_plus } else { o.z_minus };
        let gap = p.loss_at(o.w_minus, z) - p.loss_at(o.w_plus, z);
        if u == 0 {
            gap
        } else {
            -gap
        }
    };
    match mode {
        // the mask bit is averaged analytically
        Mode::Exact => Ok(Estimate {
            value: exact_row_average(p, "gen_error", |o| 0.5 * (term(o, 0) + term(o, 1)))?,
            method: Method::Exact,
        }),
        Mode::MonteCarlo { samples, seed } => mc_row_average(p, samples, seed, term),
    }
}

/// `(1/n) Σᵢ E[(−1)^{Uᵢ}(ℓ(W̄ᵢ, Z̃ᵢ⁺) − ℓ(Wᵢ, Z̃ᵢ⁺))]` with `Wᵢ = W̃_{i,Uᵢ}`.
pub fn gen_error_masked_hyp<A, L>(p: &Protocol<'_, A, L>, mode: Mode) -> Result<Estimate>
where
    A: Learner,
    L: Loss<A::Hypothesis, A::Instance>,
{
    let term = |o: &RowOutcome, u: u8| {
        let (w, w_bar) = if u == 0 {
            (o.w_plus, o.w_minus)
        } else {
            (o.w_minus, o.w_plus)
        };
        let gap = p.loss_at(w_bar, o.z_plus) - p.loss_at(w, o.z_plus);
        if u == 0 {
            gap
        } else {
            -gap
        }
    };
    match mode {
        Mode::Exact => Ok(Estimate {
            value: exact_row_average(p, "gen_error", |o| 0.5 * (term(o, 0) + term(o, 1)))?,
            method: Method::Exact,
        }),
        Mode::MonteCarlo { samples, seed } => mc_row_average(p, samples, seed, term),
    }
}

/// `E[(L_μ(W) − L_S(W))²]` by enumerating training samples.
pub fn second_moment_exact<A, L>(p: &Protocol<'_, A, L>) -> Result<f64>
where
    A: Learner,
    L: Loss<A::Hypothesis, A::Instance>,
{
    second_moment_with(p, |l| l)
}

/// Second moment after mapping every loss value through `f` (used for
/// renormalized losses).
pub fn second_moment_with<A, L>(p: &Protocol<'_, A, L>, f: impl Fn(f64) -> f64) -> Result<f64>
where
    A: Learner,
    L: Loss<A::Hypothesis, A::Instance>,
{
    let n = p.n() as f64;
    let k = p.k();
    let masses = p.dist().masses();
    let mut acc = NeumaierSum::new();
    p.for_each_sample("second_moment", |o| {
        let pop = compensated_sum((0..k).map(|z| masses[z] * f(p.loss_at(o.w, z))));
        let emp = compensated_sum(o.sample.iter().map(|&z| f(p.loss_at(o.w, z)))) / n;
        acc.add(o.mass * (pop - emp).powi(2));
    })?;
    Ok(acc.value())
}
