//! Exact and sampled realizations of the supersample protocol.
//!
//! Every per-row quantity depends only on `(rest, Z̃ᵢ⁺, Z̃ᵢ⁻, R)`, where
//! `rest` is the other `n - 1` entries of column `+`. The engine enumerates
//! `rest` once per row and trains one hypothesis per candidate value of the
//! row entry, so both `W̃⁺` and `W̃ᵢ⁻` come from the same table: `W̃ᵢ⁻` for
//! `Z̃ᵢ⁻ = z` is the hypothesis trained with `z` at position `i`.
//!
//! For order-independent learners `rest` is enumerated as a multiset with
//! multinomial weights, and all rows share one law.

use std::cell::RefCell;

use rand::Rng;
use rustc_hash::FxHashMap;

use super::enumerate::{for_each_multiset, for_each_tuple, multiset_count};
use super::{DiscreteDistribution, HypothesisKey, Learner, Loss, SeedDistribution, DEFAULT_BUDGET};
use crate::error::{Error, Result};
use crate::numeric::compensated_sum;

/// Interned hypothesis handle, stable for the lifetime of a [`Protocol`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HypId(pub u32);

struct Store<H> {
    index: FxHashMap<HypothesisKey, u32>,
    hyps: Vec<H>,
    // flat [hyp * k + z]
    losses: Vec<f64>,
    preds: Vec<Option<u8>>,
}

/// One value of `rest` for a row, with the hypotheses trained on every
/// completion of that row.
pub struct RestBlock<'b> {
    pub mass: f64,
    pub rest: &'b [usize],
    /// Seed-major: `hyps[s * k + z]` is trained with support point `z` at the row.
    pub hyps: &'b [HypId],
}

/// A weighted outcome of `(R, Z̃ᵢ⁺, Z̃ᵢ⁻)` with the induced hypothesis pair.
#[derive(Debug, Clone, Copy)]
pub struct RowOutcome {
    pub mass: f64,
    pub seed: usize,
    pub z_plus: usize,
    pub z_minus: usize,
    pub w_plus: HypId,
    pub w_minus: HypId,
}

pub struct SampleOutcome<'b> {
    pub mass: f64,
    pub seed: usize,
    pub sample: &'b [usize],
    pub w: HypId,
}

pub struct SupersampleOutcome<'b> {
    pub mass: f64,
    pub seed: usize,
    pub plus: &'b [usize],
    pub minus: &'b [usize],
    pub w_plus: HypId,
    pub w_minus: &'b [HypId],
}

/// A learning problem `(algorithm, loss, μ, n)` with hypothesis interning.
pub struct Protocol<'a, A: Learner, L> {
    learner: &'a A,
    loss: &'a L,
    dist: &'a DiscreteDistribution<A::Instance>,
    n: usize,
    budget: f64,
    seeds: SeedDistribution,
    multisets: bool,
    store: RefCell<Store<A::Hypothesis>>,
}

impl<'a, A, L> Protocol<'a, A, L>
where
    A: Learner,
    L: Loss<A::Hypothesis, A::Instance>,
{
    pub fn new(
        learner: &'a A,
        loss: &'a L,
        dist: &'a DiscreteDistribution<A::Instance>,
        n: usize,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("sample size n must be at least 1"));
        }
        Ok(Self {
            learner,
            loss,
            dist,
            n,
            budget: DEFAULT_BUDGET,
            seeds: learner.seeds(),
            multisets: learner.is_symmetric(),
            store: RefCell::new(Store {
                index: FxHashMap::default(),
                hyps: Vec::new(),
                losses: Vec::new(),
                preds: Vec::new(),
            }),
        })
    }

    pub fn with_budget(mut self, budget: f64) -> Self {
        self.budget = budget;
        self
    }

    /// Forces ordered enumeration even for symmetric learners.
    pub fn ordered(mut self) -> Self {
        self.multisets = false;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.dist.len()
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn learner(&self) -> &A {
        self.learner
    }

    pub fn loss(&self) -> &L {
        self.loss
    }

    pub fn dist(&self) -> &DiscreteDistribution<A::Instance> {
        self.dist
    }

    pub fn seeds(&self) -> &SeedDistribution {
        &self.seeds
    }

    pub fn is_deterministic(&self) -> bool {
        self.seeds.len() == 1
    }

    /// True when every row has the same law, so per-row work is done once.
    pub fn rows_exchangeable(&self) -> bool {
        self.multisets
    }

    pub fn intern(&self, h: A::Hypothesis) -> HypId {
        let key = self.learner.key(&h);
        let mut store = self.store.borrow_mut();
        if let Some(&id) = store.index.get(&key) {
            return HypId(id);
        }
        let id = store.hyps.len() as u32;
        for z in self.dist.support() {
            let l = self.loss.eval(&h, z);
            let p = self.learner.predict(&h, z);
            store.losses.push(l);
            store.preds.push(p);
        }
        store.index.insert(key, id);
        store.hyps.push(h);
        HypId(id)
    }

    pub fn train_id(&self, sample: &[A::Instance], seed: u32) -> Result<HypId> {
        Ok(self.intern(self.learner.train(sample, seed)?))
    }

    #[inline]
    pub fn loss_at(&self, h: HypId, z: usize) -> f64 {
        self.store.borrow().losses[h.0 as usize * self.k() + z]
    }

    #[inline]
    pub fn predict_at(&self, h: HypId, z: usize) -> Option<u8> {
        self.store.borrow().preds[h.0 as usize * self.k() + z]
    }

    pub fn hypothesis(&self, h: HypId) -> A::Hypothesis {
        self.store.borrow().hyps[h.0 as usize].clone()
    }

    pub fn hypothesis_count(&self) -> usize {
        self.store.borrow().hyps.len()
    }

    /// `L_μ(w)` for an interned hypothesis.
    pub fn population_risk(&self, h: HypId) -> f64 {
        let k = self.k();
        let store = self.store.borrow();
        let row = &store.losses[h.0 as usize * k..(h.0 as usize + 1) * k];
        compensated_sum(row.iter().zip(self.dist.masses()).map(|(l, m)| l * m))
    }

    /// Rows that need their own computation; the rest share row 0's law.
    pub fn row_indices(&self) -> Vec<usize> {
        if self.multisets {
            vec![0]
        } else {
            (0..self.n).collect()
        }
    }

    /// Evaluates `f` for every row, reusing row 0 when rows are exchangeable.
    pub fn per_row<T: Clone>(&self, mut f: impl FnMut(usize) -> Result<T>) -> Result<Vec<T>> {
        if self.multisets {
            let v = f(0)?;
            Ok(vec![v; self.n])
        } else {
            (0..self.n).map(f).collect()
        }
    }

    fn rest_outcomes(&self) -> f64 {
        if self.multisets {
            multiset_count(self.k(), self.n - 1)
        } else {
            (self.k() as f64).powi(self.n as i32 - 1)
        }
    }

    /// Weighted outcomes visited by one row enumeration.
    pub fn row_cost(&self) -> f64 {
        self.rest_outcomes() * (self.k() * self.k() * self.seeds.len()) as f64
    }

    /// Weighted outcomes visited by a full-sample enumeration.
    pub fn sample_cost(&self) -> f64 {
        let samples = if self.multisets {
            multiset_count(self.k(), self.n)
        } else {
            (self.k() as f64).powi(self.n as i32)
        };
        samples * self.seeds.len() as f64
    }

    /// Weighted outcomes visited by a full-supersample enumeration.
    pub fn supersample_cost(&self) -> f64 {
        (self.k() as f64).powi(2 * self.n as i32) * self.seeds.len() as f64
    }

    pub fn check_budget(&self, what: &str, required: f64) -> Result<()> {
        if required > self.budget {
            return Err(Error::BudgetExceeded {
                what: what.to_string(),
                required,
                budget: self.budget,
            });
        }
        Ok(())
    }

    pub fn for_each_rest_block(
        &self,
        i: usize,
        what: &str,
        mut f: impl FnMut(&RestBlock),
    ) -> Result<()> {
        if i >= self.n {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.n,
            });
        }
        self.check_budget(what, self.row_cost())?;
        let k = self.k();
        let support = self.dist.support();
        let mut buf: Vec<A::Instance> = vec![support[0].clone(); self.n];
        let mut hyps = vec![HypId(0); k * self.seeds.len()];
        let mut err = None;
        let mut visit = |rest: &[usize], mass: f64| {
            if err.is_some() || mass == 0.0 {
                return;
            }
            let mut slot = 0;
            for (pos, item) in buf.iter_mut().enumerate() {
                if pos != i {
                    *item = support[rest[slot]].clone();
                    slot += 1;
                }
            }
            for (s, &(seed, _)) in self.seeds.seeds().iter().enumerate() {
                for z in 0..k {
                    buf[i] = support[z].clone();
                    match self.train_id(&buf, seed) {
                        Ok(h) => hyps[s * k + z] = h,
                        Err(e) => {
                            err = Some(e);
                            return;
                        }
                    }
                }
            }
            f(&RestBlock {
                mass,
                rest,
                hyps: &hyps,
            });
        };
        if self.multisets {
            for_each_multiset(self.dist.masses(), self.n - 1, &mut visit);
        } else {
            let masses = self.dist.masses();
            for_each_tuple(k, self.n - 1, |rest| {
                let m = rest.iter().map(|&j| masses[j]).product();
                visit(rest, m);
            });
        }
        err.map_or(Ok(()), Err)
    }

    pub fn for_each_row_outcome(
        &self,
        i: usize,
        what: &str,
        mut f: impl FnMut(&RowOutcome),
    ) -> Result<()> {
        let k = self.k();
        let masses = self.dist.masses();
        let seeds = self.seeds.seeds();
        self.for_each_rest_block(i, what, |block| {
            for (s, &(_, sm)) in seeds.iter().enumerate() {
                let base = block.mass * sm;
                if base == 0.0 {
                    continue;
                }
                for zp in 0..k {
                    let mp = base * masses[zp];
                    if mp == 0.0 {
                        continue;
                    }
                    for zm in 0..k {
                        let mass = mp * masses[zm];
                        if mass == 0.0 {
                            continue;
                        }
                        f(&RowOutcome {
                            mass,
                            seed: s,
                            z_plus: zp,
                            z_minus: zm,
                            w_plus: block.hyps[s * k + zp],
                            w_minus: block.hyps[s * k + zm],
                        });
                    }
                }
            }
        })
    }

    /// Every training sample (a multiset for symmetric learners) and seed.
    pub fn for_each_sample(&self, what: &str, mut f: impl FnMut(&SampleOutcome)) -> Result<()> {
        self.check_budget(what, self.sample_cost())?;
        let support = self.dist.support();
        let masses = self.dist.masses();
        let mut buf: Vec<A::Instance> = Vec::with_capacity(self.n);
        let mut err = None;
        let mut visit = |sample: &[usize], mass: f64| {
            if err.is_some() || mass == 0.0 {
                return;
            }
            buf.clear();
            buf.extend(sample.iter().map(|&j| support[j].clone()));
            for (s, &(seed, sm)) in self.seeds.seeds().iter().enumerate() {
                if sm == 0.0 {
                    continue;
                }
                match self.train_id(&buf, seed) {
                    Ok(w) => f(&SampleOutcome {
                        mass: mass * sm,
                        seed: s,
                        sample,
                        w,
                    }),
                    Err(e) => {
                        err = Some(e);
                        return;
                    }
                }
            }
        };
        if self.multisets {
            for_each_multiset(masses, self.n, &mut visit);
        } else {
            for_each_tuple(self.k(), self.n, |sample| {
                let m = sample.iter().map(|&j| masses[j]).product();
                visit(sample, m);
            });
        }
        err.map_or(Ok(()), Err)
    }

    /// Every ordered supersample and seed with the full hypothesis matrix.
    pub fn for_each_supersample(
        &self,
        what: &str,
        mut f: impl FnMut(&SupersampleOutcome),
    ) -> Result<()> {
        self.check_budget(what, self.supersample_cost())?;
        let k = self.k();
        let n = self.n;
        let support = self.dist.support();
        let masses = self.dist.masses();
        let mut buf: Vec<A::Instance> = vec![support[0].clone(); n];
        // neighbours[i * k + z]: trained with z at row i
        let mut neighbours = vec![HypId(0); n * k];
        let mut w_minus = vec![HypId(0); n];
        let mut err = None;
        for_each_tuple(k, n, |plus| {
            if err.is_some() {
                return;
            }
            let mp: f64 = plus.iter().map(|&j| masses[j]).product();
            if mp == 0.0 {
                return;
            }
            for (s, &(seed, sm)) in self.seeds.seeds().iter().enumerate() {
                if sm == 0.0 {
                    continue;
                }
                for (pos, &j) in plus.iter().enumerate() {
                    buf[pos] = support[j].clone();
                }
                let w_plus = match self.train_id(&buf, seed) {
                    Ok(w) => w,
                    Err(e) => {
                        err = Some(e);
                        return;
                    }
                };
                for row in 0..n {
                    for z in 0..k {
                        buf[row] = support[z].clone();
                        match self.train_id(&buf, seed) {
                            Ok(w) => neighbours[row * k + z] = w,
                            Err(e) => {
                                err = Some(e);
                                return;
                            }
                        }
                    }
                    buf[row] = support[plus[row]].clone();
                }
                for_each_tuple(k, n, |minus| {
                    let mm: f64 = minus.iter().map(|&j| masses[j]).product();
                    if mm == 0.0 {
                        return;
                    }
                    for (row, &z) in minus.iter().enumerate() {
                        w_minus[row] = neighbours[row * k + z];
                    }
                    f(&SupersampleOutcome {
                        mass: mp * sm * mm,
                        seed: s,
                        plus,
                        minus,
                        w_plus,
                        w_minus: &w_minus,
                    });
                });
            }
        });
        err.map_or(Ok(()), Err)
    }

    /// Draws one row outcome for row `i` (mass 1).
    pub fn sample_row<R: Rng + ?Sized>(&self, rng: &mut R, i: usize) -> Result<RowOutcome> {
        if i >= self.n {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.n,
            });
        }
        let support = self.dist.support();
        let mut buf: Vec<A::Instance> = (0..self.n)
            .map(|_| support[self.dist.sample_index(rng)].clone())
            .collect();
        let z_plus = self.dist.sample_index(rng);
        let z_minus = self.dist.sample_index(rng);
        let s = self.seeds.sample_index(rng);
        let seed = self.seeds.seeds()[s].0;
        buf[i] = support[z_plus].clone();
        let w_plus = self.train_id(&buf, seed)?;
        buf[i] = support[z_minus].clone();
        let w_minus = self.train_id(&buf, seed)?;
        Ok(RowOutcome {
            mass: 1.0,
            seed: s,
            z_plus,
            z_minus,
            w_plus,
            w_minus,
        })
    }

    /// Draws `(S, R)` and trains on it.
    pub fn sample_training<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(Vec<usize>, HypId)> {
        let idx: Vec<usize> = (0..self.n).map(|_| self.dist.sample_index(rng)).collect();
        let buf: Vec<A::Instance> = idx
            .iter()
            .map(|&j| self.dist.support()[j].clone())
            .collect();
        let s = self.seeds.sample_index(rng);
        let w = self.train_id(&buf, self.seeds.seeds()[s].0)?;
        Ok((idx, w))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::NeumaierSum;

    /// Order-dependent learner: outputs the first instance plus a seed offset.
    struct FirstPlusSeed;
    impl Learner for FirstPlusSeed {
        type Instance = u8;
        type Hypothesis = u8;
        fn train(&self, sample: &[u8], seed: u32) -> Result<u8> {
            Ok(sample[0] + seed as u8)
        }
        fn key(&self, h: &u8) -> HypothesisKey {
            HypothesisKey::exact([*h as i64])
        }
        fn seeds(&self) -> SeedDistribution {
            SeedDistribution::uniform(2).unwrap()
        }
        fn is_symmetric(&self) -> bool {
            false
        }
    }

    fn absdiff(w: &u8, z: &u8) -> f64 {
        (*w as f64 - *z as f64).abs()
    }

    #[test]
    fn row_outcomes_sum_to_one() {
        let dist = DiscreteDistribution::new(vec![0u8, 1, 2], vec![0.2, 0.3, 0.5]).unwrap();
        let p = Protocol::new(&FirstPlusSeed, &absdiff, &dist, 3).unwrap();
        for i in 0..3 {
            let mut total = NeumaierSum::new();
            p.for_each_row_outcome(i, "test", |o| total.add(o.mass))
                .unwrap();
            assert!((total.value() - 1.0).abs() < 1e-12);
        }
        let mut total = NeumaierSum::new();
        p.for_each_supersample("test", |o| total.add(o.mass))
            .unwrap();
        assert!((total.value() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn row_zero_neighbour_uses_replacement() {
        let dist = DiscreteDistribution::uniform(vec![0u8, 1]).unwrap();
        let p = Protocol::new(&FirstPlusSeed, &absdiff, &dist, 2).unwrap();
        p.for_each_row_outcome(0, "test", |o| {
            let seed = p.seeds().seeds()[o.seed].0 as u8;
            assert_eq!(p.hypothesis(o.w_plus), o.z_plus as u8 + seed);
            assert_eq!(p.hypothesis(o.w_minus), o.z_minus as u8 + seed);
        })
        .unwrap();
        // row 1 never touches the first position
        p.for_each_row_outcome(1, "test", |o| assert_eq!(o.w_plus, o.w_minus))
            .unwrap();
    }

    #[test]
    fn budget_errors_name_the_quantity() {
        let dist = DiscreteDistribution::uniform((0u8..10).collect()).unwrap();
        let p = Protocol::new(&FirstPlusSeed, &absdiff, &dist, 8)
            .unwrap()
            .with_budget(1e6);
        match p.for_each_row_outcome(0, "hyp_cmi", |_| {}) {
            Err(Error::BudgetExceeded { what, .. }) => assert_eq!(what, "hyp_cmi"),
            other => panic!("{:?}", other.err()),
        }
    }
}
