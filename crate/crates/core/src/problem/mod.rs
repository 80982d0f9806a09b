//! Data spaces, learning algorithms, losses and the supersample construction.
//!
//! Indices in this API are 0-based: row `i` of an `n`-row supersample is
//! `rows[i]`, and `neighbor_sample(column, z, i)` replaces `column[i]`.
//! Reports and CSV output use 1-based row numbers.

mod enumerate;
mod protocol;
mod risk;

use std::fmt::Debug;
use std::hash::Hash;

use rand::Rng;

use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, quantize};

pub use enumerate::{enumerate_outcomes, for_each_multiset, for_each_tuple, multiset_count};
pub use protocol::{HypId, Protocol, RestBlock, RowOutcome, SampleOutcome, SupersampleOutcome};
pub use risk::{
    bootstrap_mean_stderr, bootstrap_stderr, gen_error_flipped, gen_error_masked_data,
    gen_error_masked_hyp, gen_error_standard, second_moment_exact, second_moment_with, Estimate,
    Method, Mode, RiskReport, BOOTSTRAP_RESAMPLES,
};

/// Default cap on weighted outcomes visited by a single exact computation.
pub const DEFAULT_BUDGET: f64 = 1e8;

/// A finite distribution over distinct instances.
#[derive(Debug, Clone)]
pub struct DiscreteDistribution<T> {
    support: Vec<T>,
    mass: Vec<f64>,
}

impl<T: Clone + Eq + Hash + Debug> DiscreteDistribution<T> {
    pub fn new(support: Vec<T>, mass: Vec<f64>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        if support.len() != mass.len() {
            return Err(Error::LengthMismatch {
                expected: support.len(),
                actual: mass.len(),
            });
        }
        if let Some(m) = mass.iter().find(|m| !(**m >= 0.0) || !m.is_finite()) {
            return Err(Error::InvalidDistribution(format!("invalid mass {m}")));
        }
        let total = compensated_sum(mass.iter().copied());
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDistribution(format!("masses sum to {total}")));
        }
        let mut seen = rustc_hash::FxHashSet::default();
        for z in &support {
            if !seen.insert(z.clone()) {
                return Err(Error::InvalidDistribution(format!(
                    "duplicate support value {z:?}"
                )));
            }
        }
        Ok(Self { support, mass })
    }

    pub fn uniform(support: Vec<T>) -> Result<Self> {
        let k = support.len();
        if k == 0 {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        Self::new(support, vec![1.0 / k as f64; k])
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn support(&self) -> &[T] {
        &self.support
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn mass(&self, idx: usize) -> f64 {
        self.mass[idx]
    }

    pub fn index_of(&self, z: &T) -> Option<usize> {
        self.support.iter().position(|s| s == z)
    }

    /// Draws a support index by inverse CDF.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (idx, m) in self.mass.iter().enumerate() {
            acc += m;
            if u < acc {
                return idx;
            }
        }
        // u landed in the rounding gap above the last partial sum
        self.mass.iter().rposition(|&m| m > 0.0).unwrap_or(0)
    }
}

/// Finite law of the algorithm's internal randomness.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedDistribution {
    seeds: Vec<(u32, f64)>,
}

impl SeedDistribution {
    pub fn deterministic() -> Self {
        Self {
            seeds: vec![(0, 1.0)],
        }
    }

    pub fn new(seeds: Vec<(u32, f64)>) -> Result<Self> {
        if seeds.is_empty() {
            return Err(Error::param("seed distribution must be nonempty"));
        }
        let total = compensated_sum(seeds.iter().map(|s| s.1));
        if seeds.iter().any(|s| !(s.1 >= 0.0)) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::param(format!(
                "seed masses must be nonnegative and sum to 1, got {total}"
            )));
        }
        Ok(Self { seeds })
    }

    pub fn uniform(count: u32) -> Result<Self> {
        if count == 0 {
            return Err(Error::param("seed count must be positive"));
        }
        Self::new((0..count).map(|s| (s, 1.0 / count as f64)).collect())
    }

    pub fn seeds(&self) -> &[(u32, f64)] {
        &self.seeds
    }

    pub fn len(&self) -> usize {
        self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seeds.is_empty()
    }

    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (idx, (_, m)) in self.seeds.iter().enumerate() {
            acc += m;
            if u < acc {
                return idx;
            }
        }
        self.seeds.len() - 1
    }
}

/// Canonical, hashable identity of a hypothesis.
///
/// Two hypotheses with equal keys must be the same function; information
/// quantities are computed over keys, so a key that separates equal
/// hypotheses overstates mutual information.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HypothesisKey(pub Vec<i64>);

impl HypothesisKey {
    pub fn exact(stat: impl IntoIterator<Item = i64>) -> Self {
        Self(stat.into_iter().collect())
    }

    /// Rounds each coordinate to the 1e-9 grid.
    pub fn quantized(coords: &[f64]) -> Self {
        Self(coords.iter().map(|&x| quantize(x)).collect())
    }
}

/// A learning algorithm `(sample, seed) -> hypothesis`.
pub trait Learner: Sync {
    type Instance: Clone + Eq + Hash + Debug + Send + Sync;
    type Hypothesis: Clone + Debug + Send + Sync;

    fn train(&self, sample: &[Self::Instance], seed: u32) -> Result<Self::Hypothesis>;

    fn key(&self, h: &Self::Hypothesis) -> HypothesisKey;

    fn seeds(&self) -> SeedDistribution {
        SeedDistribution::deterministic()
    }

    /// True when the output does not depend on the order of the sample.
    fn is_symmetric(&self) -> bool;

    /// Predicted label of `z` for classification algorithms.
    fn predict(&self, _h: &Self::Hypothesis, _z: &Self::Instance) -> Option<u8> {
        None
    }
}

pub trait Loss<H, Z>: Sync {
    fn eval(&self, w: &H, z: &Z) -> f64;

    fn declared_range(&self) -> Option<(f64, f64)> {
        None
    }
}

impl<H, Z, F> Loss<H, Z> for F
where
    F: Fn(&H, &Z) -> f64 + Sync,
{
    fn eval(&self, w: &H, z: &Z) -> f64 {
        self(w, z)
    }
}

/// `L_μ(w)`.
pub fn population_risk<H, Z, L>(loss: &L, dist: &DiscreteDistribution<Z>, w: &H) -> f64
where
    Z: Clone + Eq + Hash + Debug,
    L: Loss<H, Z> + ?Sized,
{
    compensated_sum(
        dist.support()
            .iter()
            .zip(dist.masses())
            .map(|(z, m)| m * loss.eval(w, z)),
    )
}

/// `L_S(w)`.
pub fn empirical_risk<H, Z, L>(loss: &L, sample: &[Z], w: &H) -> f64
where
    L: Loss<H, Z> + ?Sized,
{
    compensated_sum(sample.iter().map(|z| loss.eval(w, z))) / sample.len() as f64
}

/// An ordered training sample of `n >= 1` instances.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample<T>(Vec<T>);

impl<T> Sample<T> {
    pub fn new(items: Vec<T>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::param("sample must contain at least one instance"));
        }
        Ok(Self(items))
    }

    pub fn items(&self) -> &[T] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }
}

impl<T> std::ops::Deref for Sample<T> {
    type Target = [T];
    fn deref(&self) -> &[T] {
        &self.0
    }
}

/// Copy of `column` with position `i` replaced by `replacement`.
pub fn neighbor_sample<T: Clone>(column: &[T], replacement: T, i: usize) -> Result<Vec<T>> {
    if i >= column.len() {
        return Err(Error::IndexOutOfRange {
            index: i,
            len: column.len(),
        });
    }
    let mut out = column.to_vec();
    out[i] = replacement;
    Ok(out)
}

/// `n x 2` instance matrix; column `+` trains, column `-` supplies replacements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Supersample<T> {
    rows: Vec<(T, T)>,
}

impl<T: Clone> Supersample<T> {
    pub fn new(rows: Vec<(T, T)>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::param("supersample needs at least one row"));
        }
        Ok(Self { rows })
    }

    pub fn from_columns(plus: Vec<T>, minus: Vec<T>) -> Result<Self> {
        if plus.len() != minus.len() {
            return Err(Error::LengthMismatch {
                expected: plus.len(),
                actual: minus.len(),
            });
        }
        Self::new(plus.into_iter().zip(minus).collect())
    }

    pub fn rows(&self) -> &[(T, T)] {
        &self.rows
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn plus_column(&self) -> Vec<T> {
        self.rows.iter().map(|r| r.0.clone()).collect()
    }

    /// Same matrix with the two entries of row `i` exchanged.
    pub fn swap_row(&self, i: usize) -> Result<Self> {
        if i >= self.rows.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.rows.len(),
            });
        }
        let mut rows = self.rows.clone();
        let (a, b) = rows[i].clone();
        rows[i] = (b, a);
        Ok(Self { rows })
    }
}

/// Per-row selector: `false` picks column `+`, `true` picks column `-`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mask(Vec<bool>);

impl Mask {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        bits.iter()
            .map(|&b| match b {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(Error::param(format!(
                    "mask bit must be 0 or 1, got {other}"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// The instances `Ẑ_i = Z̃_{i,U_i}` selected by a mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvaluationSet<T>(pub Vec<T>);

pub fn apply_mask<T: Clone>(ss: &Supersample<T>, mask: &Mask) -> Result<EvaluationSet<T>> {
    if ss.n() != mask.len() {
        return Err(Error::LengthMismatch {
            expected: ss.n(),
            actual: mask.len(),
        });
    }
    Ok(EvaluationSet(
        ss.rows()
            .iter()
            .zip(mask.bits())
            .map(|((p, m), &flip)| if flip { m.clone() } else { p.clone() })
            .collect(),
    ))
}

/// Hypotheses induced by a supersample: one shared `W̃⁺` and `n` neighbours.
#[derive(Debug, Clone)]
pub struct NeighborhoodMatrix<H> {
    pub w_plus: H,
    pub w_minus: Vec<H>,
}

impl<H> NeighborhoodMatrix<H> {
    pub fn n(&self) -> usize {
        self.w_minus.len()
    }

    /// `(W̃ᵢ⁺, W̃ᵢ⁻)`; the first entry is the same for every row.
    pub fn row(&self, i: usize) -> (&H, &H) {
        (&self.w_plus, &self.w_minus[i])
    }

    pub fn rows(&self) -> impl Iterator<Item = (&H, &H)> {
        self.w_minus.iter().map(move |m| (&self.w_plus, m))
    }
}

/// Trains `W̃⁺` on column `+` and each `W̃ᵢ⁻` on column `+` with row `i`
/// replaced by its `-` entry. All `n + 1` runs share `seed`.
pub fn build_hypothesis_matrix<A: Learner>(
    alg: &A,
    ss: &Supersample<A::Instance>,
    seed: u32,
) -> Result<NeighborhoodMatrix<A::Hypothesis>> {
    let plus = ss.plus_column();
    let w_plus = alg.train(&plus, seed)?;
    let w_minus = ss
        .rows()
        .iter()
        .enumerate()
        .map(|(i, (_, zm))| alg.train(&neighbor_sample(&plus, zm.clone(), i)?, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(NeighborhoodMatrix { w_plus, w_minus })
}
