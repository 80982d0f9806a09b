//! ERM on the two-point Rademacher problem.
//!
//! Instances are `ε z₀/R₀` with `ε = ±1`, hypotheses are `±z₀`, so
//! `⟨w, z⟩ = s·ε·R₀` and both are stored as signs.

use crate::error::{Error, Result};
use crate::problem::{DiscreteDistribution, HypothesisKey, Learner, Loss};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RademacherErmConfig {
    pub r0: f64,
    pub l: f64,
    /// Sign returned when `Σε = 0`.
    pub tie_break: i8,
}

impl Default for RademacherErmConfig {
    fn default() -> Self {
        Self {
            r0: 1.0,
            l: 1.0,
            tie_break: 1,
        }
    }
}

impl RademacherErmConfig {
    /// `R₀ = 1/d` with `d = √n`.
    pub fn scaled(n: usize, l: f64) -> Self {
        Self {
            r0: 1.0 / (n as f64).sqrt(),
            l,
            tie_break: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r0 > 0.0) || !(self.l > 0.0) {
            return Err(Error::param(format!(
                "R0 and L must be positive, got R0={} L={}",
                self.r0, self.l
            )));
        }
        if self.tie_break != 1 && self.tie_break != -1 {
            return Err(Error::param("tie break must be +1 or -1"));
        }
        Ok(())
    }
}

/// Returns the sign `s` of the ERM `s·z₀`.
pub fn sign_erm(cfg: &RademacherErmConfig, sample: &[i8]) -> Result<i8> {
    cfg.validate()?;
    let mut sum = 0i64;
    for &e in sample {
        if e != 1 && e != -1 {
            return Err(Error::InvalidInstance(format!("ε = {e} is not ±1")));
        }
        sum += e as i64;
    }
    Ok(match sum.signum() {
        0 => cfg.tie_break,
        s => s as i8,
    })
}

#[derive(Debug, Clone)]
pub struct SignErm {
    pub cfg: RademacherErmConfig,
}

impl SignErm {
    pub fn new(cfg: RademacherErmConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg })
    }

    pub fn distribution() -> DiscreteDistribution<i8> {
        DiscreteDistribution::uniform(vec![1, -1]).expect("two distinct points")
    }

    pub fn loss(&self) -> SignLoss {
        SignLoss {
            l: self.cfg.l,
            r0: self.cfg.r0,
        }
    }
}

impl Learner for SignErm {
    type Instance = i8;
    type Hypothesis = i8;

    fn train(&self, sample: &[i8], _seed: u32) -> Result<i8> {
        sign_erm(&self.cfg, sample)
    }

    fn key(&self, h: &i8) -> HypothesisKey {
        HypothesisKey::exact([*h as i64])
    }

    fn is_symmetric(&self) -> bool {
        true
    }
}

/// `ℓ(s z₀, ε z₀/R₀) = −L·s·ε·R₀`.
#[derive(Debug, Clone, Copy)]
pub struct SignLoss {
    pub l: f64,
    pub r0: f64,
}

impl Loss<i8, i8> for SignLoss {
    fn eval(&self, s: &i8, e: &i8) -> f64 {
        -self.l * (*s as f64) * (*e as f64) * self.r0
    }

    fn declared_range(&self) -> Option<(f64, f64)> {
        let b = self.l * self.r0;
        Some((-b, b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn majority_sign() {
        let cfg = RademacherErmConfig::default();
        assert_eq!(sign_erm(&cfg, &[1, 1, -1]).unwrap(), 1);
        assert_eq!(sign_erm(&cfg, &[-1, -1, -1]).unwrap(), -1);
        assert_eq!(sign_erm(&cfg, &[1, -1]).unwrap(), 1);
        assert!(sign_erm(&cfg, &[1, 0]).is_err());
    }

    #[test]
    fn scaled_radius() {
        let cfg = RademacherErmConfig::scaled(9, 1.0);
        assert!((cfg.r0 - 1.0 / 3.0).abs() < 1e-15);
    }
}
