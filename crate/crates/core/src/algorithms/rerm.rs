//! Tikhonov-regularized ERM for the linear loss.

use std::hash::{Hash, Hasher};

use crate::error::{Error, Result};
use crate::problem::{DiscreteDistribution, HypothesisKey, Learner, Loss};

/// A real vector instance, compared bitwise so it can be hashed.
#[derive(Debug, Clone)]
pub struct Point(pub Vec<f64>);

impl PartialEq for Point {
    fn eq(&self, other: &Self) -> bool {
        self.0.len() == other.0.len()
            && self
                .0
                .iter()
                .zip(&other.0)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl Eq for Point {}

impl Hash for Point {
    fn hash<H: Hasher>(&self, state: &mut H) {
        for x in &self.0 {
            x.to_bits().hash(state);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizedErmConfig {
    pub lambda: f64,
    pub l: f64,
}

impl Default for RegularizedErmConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            l: 1.0,
        }
    }
}

impl RegularizedErmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) {
            return Err(Error::param(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if !(self.l > 0.0) {
            return Err(Error::param(format!("L must be positive, got {}", self.l)));
        }
        Ok(())
    }
}

/// `argmin_w −L⟨w, μ̂⟩ + λ‖w‖² = L·μ̂/(2λ)`.
pub fn regularized_erm(cfg: &RegularizedErmConfig, sample: &[Point]) -> Result<Vec<f64>> {
    cfg.validate()?;
    let first = sample
        .first()
        .ok_or_else(|| Error::param("sample must be nonempty"))?;
    let dim = first.0.len();
    let mut w = vec![0.0; dim];
    for z in sample {
        if z.0.len() != dim {
            return Err(Error::LengthMismatch {
                expected: dim,
                actual: z.0.len(),
            });
        }
        for (wj, zj) in w.iter_mut().zip(&z.0) {
            *wj += zj;
        }
    }
    let scale = cfg.l / (2.0 * cfg.lambda * sample.len() as f64);
    w.iter_mut().for_each(|x| *x *= scale);
    Ok(w)
}

#[derive(Debug, Clone)]
pub struct RegularizedErm {
    pub cfg: RegularizedErmConfig,
}

impl RegularizedErm {
    pub fn new(cfg: RegularizedErmConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg })
    }

    /// Three points on the unit circle with masses 0.5, 0.3, 0.2.
    pub fn default_distribution() -> DiscreteDistribution<Point> {
        DiscreteDistribution::new(
            vec![
                Point(vec![1.0, 0.0]),
                Point(vec![0.0, 1.0]),
                Point(vec![-0.6, -0.8]),
            ],
            vec![0.5, 0.3, 0.2],
        )
        .expect("valid default distribution")
    }

    pub fn loss(&self) -> LinearLoss {
        LinearLoss { l: self.cfg.l }
    }
}

impl Learner for RegularizedErm {
    type Instance = Point;
    type Hypothesis = Vec<f64>;

    fn train(&self, sample: &[Point], _seed: u32) -> Result<Vec<f64>> {
        regularized_erm(&self.cfg, sample)
    }

    fn key(&self, h: &Vec<f64>) -> HypothesisKey {
        HypothesisKey::quantized(h)
    }

    fn is_symmetric(&self) -> bool {
        true
    }
}

/// `ℓ(w, z) = −L⟨w, z⟩`, unbounded over unconstrained `w`.
#[derive(Debug, Clone, Copy)]
pub struct LinearLoss {
    pub l: f64,
}

impl Loss<Vec<f64>, Point> for LinearLoss {
    fn eval(&self, w: &Vec<f64>, z: &Point) -> f64 {
        -self.l * w.iter().zip(&z.0).map(|(a, b)| a * b).sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_mean_gives_origin() {
        let cfg = RegularizedErmConfig::default();
        let w = regularized_erm(&cfg, &[Point(vec![1.0, 2.0]), Point(vec![-1.0, -2.0])]).unwrap();
        assert_eq!(w, vec![0.0, 0.0]);
    }

    #[test]
    fn rejects_nonpositive_lambda() {
        let cfg = RegularizedErmConfig {
            lambda: 0.0,
            l: 1.0,
        };
        assert!(regularized_erm(&cfg, &[Point(vec![1.0])]).is_err());
    }
}
