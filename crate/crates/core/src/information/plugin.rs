//! Plug-in estimates from sampled protocol draws.
//!
//! Frequencies replace probabilities, so the estimate is biased upward by
//! roughly `(|X|−1)(|Y|−1)|Z| / 2N`; no correction is applied.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;

use super::catalog::{InfoEstimate, Quantity};
use super::protocol::{encode, LossCodes};
use super::table::clamp_info;
use crate::error::{Error, Result};
use crate::numeric::NeumaierSum;
use crate::problem::{bootstrap_stderr, Learner, Loss, Method, Protocol};

/// Fewest draws accepted by [`plugin_estimate`].
pub const MIN_PLUGIN_SAMPLES: usize = 100;

/// Interned cell ids of each draw for the four projections the estimator needs.
#[derive(Debug, Clone, Default)]
pub struct PluginCells {
    pub xyz: Vec<u32>,
    pub xz: Vec<u32>,
    pub yz: Vec<u32>,
    pub z: Vec<u32>,
    sizes: [usize; 4],
    degenerate: bool,
}

fn intern(map: &mut FxHashMap<Vec<u32>, u32>, key: &[u32]) -> u32 {
    if let Some(&id) = map.get(key) {
        return id;
    }
    let id = map.len() as u32;
    map.insert(key.to_vec(), id);
    id
}

impl PluginCells {
    /// Builds cell ids from draws given as `(x, y, z)` code tuples.
    pub fn from_draws<'a>(
        draws: impl IntoIterator<Item = (&'a [u32], &'a [u32], &'a [u32])>,
    ) -> Self {
        let mut maps: [FxHashMap<Vec<u32>, u32>; 4] = Default::default();
        let mut xs: FxHashMap<Vec<u32>, u32> = FxHashMap::default();
        let mut ys: FxHashMap<Vec<u32>, u32> = FxHashMap::default();
        let mut out = PluginCells::default();
        let mut key = Vec::new();
        for (x, y, z) in draws {
            intern(&mut xs, x);
            intern(&mut ys, y);
            key.clear();
            key.extend_from_slice(x);
            key.push(u32::MAX);
            key.extend_from_slice(y);
            key.push(u32::MAX);
            key.extend_from_slice(z);
            out.xyz.push(intern(&mut maps[0], &key));
            key.clear();
            key.extend_from_slice(x);
            key.push(u32::MAX);
            key.extend_from_slice(z);
            out.xz.push(intern(&mut maps[1], &key));
            key.clear();
            key.extend_from_slice(y);
            key.push(u32::MAX);
            key.extend_from_slice(z);
            out.yz.push(intern(&mut maps[2], &key));
            out.z.push(intern(&mut maps[3], z));
        }
        for (s, m) in out.sizes.iter_mut().zip(&maps) {
            *s = m.len();
        }
        out.degenerate = xs.len() <= 1 || ys.len() <= 1;
        out
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    /// Plug-in `I(X;Y|Z)` over the draws selected by `idx`.
    pub fn estimate_on(&self, idx: &[usize]) -> f64 {
        if self.degenerate || idx.is_empty() {
            return 0.0;
        }
        let cols = [&self.xyz, &self.xz, &self.yz, &self.z];
        let signs = [1.0, -1.0, -1.0, 1.0];
        let mut acc = NeumaierSum::new();
        for ((col, &size), sign) in cols.iter().zip(&self.sizes).zip(signs) {
            let mut counts = vec![0u32; size];
            for &j in idx {
                counts[col[j] as usize] += 1;
            }
            for c in counts {
                if c > 1 {
                    let c = f64::from(c);
                    acc.add(sign * c * c.ln());
                }
            }
        }
        clamp_info(acc.value() / idx.len() as f64).max(0.0)
    }

    pub fn estimate(&self) -> f64 {
        let all: Vec<usize> = (0..self.len()).collect();
        self.estimate_on(&all)
    }
}

/// Plug-in estimate of `q` at row `i` from `samples` seeded draws.
pub fn plugin_estimate<A, L>(
    p: &Protocol<'_, A, L>,
    q: Quantity,
    i: usize,
    samples: usize,
    seed: u64,
) -> Result<InfoEstimate>
where
    A: Learner,
    L: Loss<A::Hypothesis, A::Instance>,
{
    if samples < MIN_PLUGIN_SAMPLES {
        return Err(Error::param(format!(
            "plug-in estimation needs at least {MIN_PLUGIN_SAMPLES} samples, got {samples}"
        )));
    }
    let spec = q.spec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut codes = LossCodes::default();
    let (nx, ny) = (spec.x.len(), spec.y.len());
    let width = spec.x.len() + spec.y.len() + spec.z.len();
    let vars = spec.vars();
    let mut flat = Vec::with_capacity(samples * width);
    for _ in 0..samples {
        let o = p.sample_row(&mut rng, i)?;
        let u: u8 = rng.random_range(0..2);
        for &v in &vars {
            flat.push(encode(p, &mut codes, &o, u, v)?);
        }
    }
    let cells = PluginCells::from_draws(
        flat.chunks(width)
            .map(|c| (&c[..nx], &c[nx..nx + ny], &c[nx + ny..])),
    );
    let value = cells.estimate();
    let stderr = bootstrap_stderr(cells.len(), seed, |idx| cells.estimate_on(idx));
    Ok(InfoEstimate {
        quantity: q.name().to_string(),
        index: Some(i),
        value,
        method: Method::MonteCarlo { samples, stderr },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_variable_is_exactly_zero() {
        let draws: Vec<[u32; 2]> = (0..500).map(|j| [7, j % 3]).collect();
        let cells = PluginCells::from_draws(draws.iter().map(|d| (&d[..1], &d[1..2], &[][..])));
        assert_eq!(cells.estimate(), 0.0);
    }

    #[test]
    fn copied_bit_gives_entropy() {
        let draws: Vec<[u32; 2]> = (0..1000).map(|j| [j % 2, j % 2]).collect();
        let cells = PluginCells::from_draws(draws.iter().map(|d| (&d[..1], &d[1..2], &[][..])));
        assert!((cells.estimate() - std::f64::consts::LN_2).abs() < 1e-12);
    }
}
