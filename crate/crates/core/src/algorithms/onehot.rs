//! Projected gradient descent on the linear loss over one-hot data.

use crate::error::{Error, Result};
use crate::problem::{DiscreteDistribution, HypothesisKey, Learner, Loss};

/// The one-hot vector `e(index + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OneHot(pub u32);

impl OneHot {
    /// Parses a dense vector; exactly one coordinate must be 1, the rest 0.
    pub fn from_vector(v: &[f64]) -> Result<Self> {
        let mut hit = None;
        for (j, &x) in v.iter().enumerate() {
            if x == 1.0 && hit.is_none() {
                hit = Some(j);
            } else if x != 0.0 {
                return Err(Error::InvalidInstance(format!("{v:?} is not one-hot")));
            }
        }
        hit.map(|j| OneHot(j as u32))
            .ok_or_else(|| Error::InvalidInstance(format!("{v:?} is not one-hot")))
    }

    pub fn to_vector(self, d: usize) -> Vec<f64> {
        let mut v = vec![0.0; d];
        v[self.0 as usize] = 1.0;
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneHotGdConfig {
    pub d: usize,
    pub eta: f64,
    pub t: usize,
    pub n: usize,
}

impl OneHotGdConfig {
    /// `d = 2n²`, `η = 1/(n√n)`, `T = n²`.
    pub fn paper(n: usize) -> Self {
        let nf = n as f64;
        Self {
            d: 2 * n * n,
            eta: 1.0 / (nf * nf.sqrt()),
            t: n * n,
            n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::param("d must be at least 1"));
        }
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return Err(Error::param(format!(
                "learning rate must be nonnegative, got {}",
                self.eta
            )));
        }
        if self.n == 0 {
            return Err(Error::param("n must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GdHypothesis {
    pub w: Vec<f64>,
    /// Occurrences of each coordinate in the training sample.
    pub counts: Vec<u32>,
}

fn counts(cfg: &OneHotGdConfig, sample: &[OneHot]) -> Result<Vec<u32>> {
    cfg.validate()?;
    if sample.is_empty() {
        return Err(Error::param("sample must contain at least one instance"));
    }
    let mut c = vec![0u32; cfg.d];
    for z in sample {
        let j = z.0 as usize;
        if j >= cfg.d {
            return Err(Error::InvalidInstance(format!(
                "coordinate {} outside dimension {}",
                j + 1,
                cfg.d
            )));
        }
        c[j] += 1;
    }
    Ok(c)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `w_T = ηTμ̂` if `ηT‖μ̂‖ ≤ 1`, else `μ̂/‖μ̂‖`.
pub fn gd_onehot_closed(cfg: &OneHotGdConfig, sample: &[OneHot]) -> Result<GdHypothesis> {
    let c = counts(cfg, sample)?;
    let scale = cfg.eta * cfg.t as f64 / sample.len() as f64;
    let mut w: Vec<f64> = c.iter().map(|&k| scale * k as f64).collect();
    let r = norm(&w);
    if r > 1.0 {
        w.iter_mut().for_each(|x| *x /= r);
    }
    Ok(GdHypothesis { w, counts: c })
}

/// `T` steps of `w ← Π(w + ημ̂)` from `w₀ = 0`, `Π` the unit-ball projection.
pub fn gd_onehot_iterative(cfg: &OneHotGdConfig, sample: &[OneHot]) -> Result<GdHypothesis> {
    let c = counts(cfg, sample)?;
    let n = sample.len() as f64;
    let mu: Vec<f64> = c.iter().map(|&k| k as f64 / n).collect();
    let mut w = vec![0.0; cfg.d];
    for _ in 0..cfg.t {
        for (wj, mj) in w.iter_mut().zip(&mu) {
            *wj += cfg.eta * mj;
        }
        let r = norm(&w);
        if r > 1.0 {
            w.iter_mut().for_each(|x| *x /= r);
        }
    }
    Ok(GdHypothesis { w, counts: c })
}

/// GD learner using the closed form.
#[derive(Debug, Clone)]
pub struct OneHotGd {
    pub cfg: OneHotGdConfig,
}

impl OneHotGd {
    pub fn new(cfg: OneHotGdConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg })
    }

    /// Uniform distribution over the `d` one-hot vectors.
    pub fn distribution(&self) -> DiscreteDistribution<OneHot> {
        DiscreteDistribution::uniform((0..self.cfg.d as u32).map(OneHot).collect())
            .expect("d >= 1 checked on construction")
    }
}

impl Learner for OneHotGd {
    type Instance = OneHot;
    type Hypothesis = GdHypothesis;

    fn train(&self, sample: &[OneHot], _seed: u32) -> Result<GdHypothesis> {
        gd_onehot_closed(&self.cfg, sample)
    }

    fn key(&self, h: &GdHypothesis) -> HypothesisKey {
        // with no movement every sample yields w = 0
        if self.cfg.eta * self.cfg.t as f64 == 0.0 {
            return HypothesisKey::exact([]);
        }
        // the count vector determines w (its sum is n), and w determines it back
        HypothesisKey::exact(h.counts.iter().map(|&c| c as i64))
    }

    fn is_symmetric(&self) -> bool {
        true
    }
}

/// `ℓ(w, e(j)) = −w_j`, valued in `[−1, 1]` on the unit ball.
#[derive(Debug, Clone, Copy, Default)]
pub struct OneHotLinearLoss;

impl Loss<GdHypothesis, OneHot> for OneHotLinearLoss {
    fn eval(&self, w: &GdHypothesis, z: &OneHot) -> f64 {
        -w.w[z.0 as usize]
    }

    fn declared_range(&self) -> Option<(f64, f64)> {
        Some((-1.0, 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_steps_give_origin() {
        let cfg = OneHotGdConfig {
            t: 0,
            ..OneHotGdConfig::paper(2)
        };
        let h = gd_onehot_closed(&cfg, &[OneHot(0), OneHot(1)]).unwrap();
        assert!(h.w.iter().all(|&x| x == 0.0));
        let h = gd_onehot_iterative(&cfg, &[OneHot(0), OneHot(1)]).unwrap();
        assert!(h.w.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn boundary_and_normalized_cases() {
        let cfg = OneHotGdConfig::paper(2);
        assert_eq!((cfg.d, cfg.t), (8, 4));
        let h = gd_onehot_closed(&cfg, &[OneHot(0), OneHot(1)]).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((h.w[0] - r).abs() < 1e-12 && (h.w[1] - r).abs() < 1e-12);
        assert!(h.w[2..].iter().all(|&x| x == 0.0));
        let h = gd_onehot_closed(&cfg, &[OneHot(0), OneHot(0)]).unwrap();
        assert!((h.w[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_instances() {
        let cfg = OneHotGdConfig::paper(2);
        assert!(gd_onehot_closed(&cfg, &[OneHot(8), OneHot(0)]).is_err());
        assert!(OneHot::from_vector(&[0.0, 0.5]).is_err());
        assert!(OneHot::from_vector(&[1.0, 1.0]).is_err());
        assert!(OneHot::from_vector(&[0.0, 0.0]).is_err());
        assert_eq!(OneHot::from_vector(&[0.0, 1.0, 0.0]).unwrap(), OneHot(1));
    }
}
