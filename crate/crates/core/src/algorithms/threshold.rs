//! Realizable threshold classification on the grid `{1, …, m}`.

use crate::error::{Error, Result};
use crate::problem::{DiscreteDistribution, HypothesisKey, Learner, Loss};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdErmConfig {
    pub m: u32,
    pub true_threshold: u32,
}

impl Default for ThresholdErmConfig {
    fn default() -> Self {
        Self {
            m: 6,
            true_threshold: 4,
        }
    }
}

impl ThresholdErmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.true_threshold == 0 || self.true_threshold > self.m {
            return Err(Error::param(format!(
                "need 1 <= true_threshold <= m, got threshold {} and m {}",
                self.true_threshold, self.m
            )));
        }
        Ok(())
    }
}

/// A labelled point `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Labeled {
    pub x: u32,
    pub y: u8,
}

/// `f_t(x) = 1[x ≥ t]`.
pub fn predict_threshold(t: u32, x: u32) -> u8 {
    u8::from(x >= t)
}

/// The threshold `min{x : y = 1}`, or `m + 1` when no positive is seen.
pub fn threshold_erm(cfg: &ThresholdErmConfig, sample: &[Labeled]) -> Result<u32> {
    cfg.validate()?;
    let mut max_neg = 0u32;
    let mut min_pos = cfg.m + 1;
    for z in sample {
        if z.x == 0 || z.x > cfg.m || z.y > 1 {
            return Err(Error::InvalidInstance(format!(
                "{z:?} outside grid 1..={} x {{0,1}}",
                cfg.m
            )));
        }
        if z.y == 1 {
            min_pos = min_pos.min(z.x);
        } else {
            max_neg = max_neg.max(z.x);
        }
    }
    if max_neg >= min_pos {
        return Err(Error::NotRealizable(format!(
            "negative at x={max_neg} is not below positive at x={min_pos}"
        )));
    }
    Ok(min_pos)
}

#[derive(Debug, Clone)]
pub struct ThresholdErm {
    pub cfg: ThresholdErmConfig,
}

impl ThresholdErm {
    pub fn new(cfg: ThresholdErmConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg })
    }

    /// `x` uniform on the grid, labelled by the true threshold.
    pub fn distribution(&self) -> DiscreteDistribution<Labeled> {
        let support = (1..=self.cfg.m)
            .map(|x| Labeled {
                x,
                y: predict_threshold(self.cfg.true_threshold, x),
            })
            .collect();
        DiscreteDistribution::uniform(support).expect("m >= 1")
    }
}

impl Learner for ThresholdErm {
    type Instance = Labeled;
    type Hypothesis = u32;

    fn train(&self, sample: &[Labeled], _seed: u32) -> Result<u32> {
        threshold_erm(&self.cfg, sample)
    }

    fn key(&self, h: &u32) -> HypothesisKey {
        HypothesisKey::exact([*h as i64])
    }

    fn is_symmetric(&self) -> bool {
        true
    }

    fn predict(&self, t: &u32, z: &Labeled) -> Option<u8> {
        Some(predict_threshold(*t, z.x))
    }
}

/// 0-1 loss of a threshold classifier.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroOneLoss;

impl Loss<u32, Labeled> for ZeroOneLoss {
    fn eval(&self, t: &u32, z: &Labeled) -> f64 {
        f64::from(u8::from(predict_threshold(*t, z.x) != z.y))
    }

    fn declared_range(&self) -> Option<(f64, f64)> {
        Some((0.0, 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: u32, y: u8) -> Labeled {
        Labeled { x, y }
    }

    #[test]
    fn sentinel_for_all_negative() {
        let cfg = ThresholdErmConfig::default();
        assert_eq!(threshold_erm(&cfg, &[pt(1, 0), pt(2, 0)]).unwrap(), 7);
    }

    #[test]
    fn bracketing_sample_recovers_truth() {
        let cfg = ThresholdErmConfig::default();
        assert_eq!(
            threshold_erm(&cfg, &[pt(3, 0), pt(4, 1), pt(6, 1)]).unwrap(),
            4
        );
    }

    #[test]
    fn rejects_unrealizable_and_off_grid() {
        let cfg = ThresholdErmConfig::default();
        assert!(matches!(
            threshold_erm(&cfg, &[pt(5, 0), pt(4, 1)]),
            Err(Error::NotRealizable(_))
        ));
        assert!(threshold_erm(&cfg, &[pt(7, 1)]).is_err());
        assert!(threshold_erm(&cfg, &[pt(0, 0)]).is_err());
    }
}
