use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::numeric::NeumaierSum;

/// Most axes a single table carries; composite variables are interned first.
pub const MAX_AXES: usize = 4;

/// Values below this are rounding noise around zero.
pub const NEGATIVE_TOLERANCE: f64 = 1e-10;

/// Positive values below this are treated as rounding noise too; square roots
/// of information values would otherwise amplify it.
pub const ZERO_SNAP: f64 = 1e-13;

pub type CellKey = [u32; MAX_AXES];

/// Probability mass over tuples of encoded variable values.
#[derive(Debug, Clone)]
pub struct JointTable {
    axes: Vec<String>,
    cells: FxHashMap<CellKey, f64>,
}

/// Per-condition values `I^z(X;Y)` with the condition's mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Disintegrated {
    /// `(z, P(z), I^z)` in first-seen order.
    pub entries: Vec<(Vec<u32>, f64, f64)>,
}

impl Disintegrated {
    /// `E_Z[I^Z] = I(X;Y|Z)`.
    pub fn expectation(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.1 * e.2)
            .collect::<NeumaierSum>()
            .value()
    }

    pub fn sup(&self) -> f64 {
        self.entries.iter().map(|e| e.2).fold(0.0, f64::max)
    }

    /// `E_Z[f(z) · g(I^z)]`.
    pub fn weighted(&self, mut f: impl FnMut(&[u32]) -> f64, g: impl Fn(f64) -> f64) -> f64 {
        self.entries
            .iter()
            .map(|(z, m, v)| m * f(z) * g(*v))
            .collect::<NeumaierSum>()
            .value()
    }
}

pub(crate) fn clamp_info(v: f64) -> f64 {
    if (-NEGATIVE_TOLERANCE..ZERO_SNAP).contains(&v) {
        0.0
    } else {
        v
    }
}

#[inline]
fn mlogm(m: f64) -> f64 {
    if m > 0.0 {
        m * m.ln()
    } else {
        0.0
    }
}

fn project(key: &CellKey, idx: &[usize]) -> CellKey {
    let mut out = [0u32; MAX_AXES];
    for (slot, &j) in idx.iter().enumerate() {
        out[slot] = key[j];
    }
    out
}

impl JointTable {
    pub fn new(axes: &[&str]) -> Result<Self> {
        if axes.len() > MAX_AXES {
            return Err(Error::param(format!(
                "at most {MAX_AXES} axes, got {}",
                axes.len()
            )));
        }
        for (j, a) in axes.iter().enumerate() {
            if axes[..j].contains(a) {
                return Err(Error::param(format!("duplicate axis `{a}`")));
            }
        }
        Ok(Self {
            axes: axes.iter().map(|s| s.to_string()).collect(),
            cells: FxHashMap::default(),
        })
    }

    pub fn axes(&self) -> &[String] {
        &self.axes
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Adds `mass` to the cell `values`; zero masses are dropped.
    #[inline]
    pub fn add(&mut self, values: &[u32], mass: f64) {
        debug_assert_eq!(values.len(), self.axes.len());
        if mass <= 0.0 {
            return;
        }
        let mut key = [0u32; MAX_AXES];
        key[..values.len()].copy_from_slice(values);
        *self.cells.entry(key).or_insert(0.0) += mass;
    }

    pub fn total_mass(&self) -> f64 {
        self.cells
            .values()
            .copied()
            .collect::<NeumaierSum>()
            .value()
    }

    pub fn mass(&self, values: &[u32]) -> f64 {
        let mut key = [0u32; MAX_AXES];
        key[..values.len()].copy_from_slice(values);
        self.cells.get(&key).copied().unwrap_or(0.0)
    }

    pub fn cells(&self) -> impl Iterator<Item = (&[u32], f64)> {
        let k = self.axes.len();
        self.cells.iter().map(move |(key, &m)| (&key[..k], m))
    }

    pub fn axis(&self, name: &str) -> Result<usize> {
        self.axes
            .iter()
            .position(|a| a == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    fn axes_of(&self, names: &[&str]) -> Result<Vec<usize>> {
        names.iter().map(|n| self.axis(n)).collect()
    }

    /// Marginal law of `vars`.
    pub fn marginal(&self, vars: &[&str]) -> Result<JointTable> {
        let idx = self.axes_of(vars)?;
        let mut out = JointTable::new(vars)?;
        for (key, &m) in &self.cells {
            *out.cells.entry(project(key, &idx)).or_insert(0.0) += m;
        }
        Ok(out)
    }

    /// `H(vars)` in nats.
    pub fn entropy(&self, vars: &[&str]) -> Result<f64> {
        let idx = self.axes_of(vars)?;
        Ok(self.entropy_idx(&idx))
    }

    fn entropy_idx(&self, idx: &[usize]) -> f64 {
        let total = self.total_mass();
        let mut acc = NeumaierSum::new();
        if idx.len() == self.axes.len() && idx.iter().enumerate().all(|(a, &b)| a == b) {
            for &m in self.cells.values() {
                acc.add(-mlogm(m / total));
            }
        } else {
            let mut marg: FxHashMap<CellKey, f64> = FxHashMap::default();
            for (key, &m) in &self.cells {
                *marg.entry(project(key, idx)).or_insert(0.0) += m;
            }
            for &m in marg.values() {
                acc.add(-mlogm(m / total));
            }
        }
        acc.value()
    }

    /// `I(X;Y)`.
    pub fn mutual_info(&self, x: &[&str], y: &[&str]) -> Result<f64> {
        self.cond_mutual_info(x, y, &[])
    }

    /// `I(X;Y|Z) = H(X,Z) + H(Y,Z) − H(X,Y,Z) − H(Z)`.
    pub fn cond_mutual_info(&self, x: &[&str], y: &[&str], z: &[&str]) -> Result<f64> {
        Ok(clamp_info(self.disintegrated(x, y, z)?.expectation()))
    }

    /// `z ↦ I^z(X;Y)` for every condition value with positive mass.
    pub fn disintegrated(&self, x: &[&str], y: &[&str], z: &[&str]) -> Result<Disintegrated> {
        let xi = self.axes_of(x)?;
        let yi = self.axes_of(y)?;
        let zi = self.axes_of(z)?;
        let xz: Vec<usize> = xi.iter().chain(&zi).copied().collect();
        let yz: Vec<usize> = yi.iter().chain(&zi).copied().collect();
        let xyz: Vec<usize> = xi.iter().chain(&yi).chain(&zi).copied().collect();
        if xyz.len() > MAX_AXES {
            return Err(Error::param("too many variables"));
        }
        let total = self.total_mass();

        // tables built in x, y, z axis order need no projection for the joint
        let identity = xyz.len() == self.axes.len() && xyz.iter().enumerate().all(|(a, &b)| a == b);
        let mut m_xyz: FxHashMap<CellKey, f64> = FxHashMap::default();
        let mut m_xz: FxHashMap<CellKey, f64> = FxHashMap::default();
        let mut m_yz: FxHashMap<CellKey, f64> = FxHashMap::default();
        // condition key -> slot in output
        let mut slot: FxHashMap<CellKey, usize> = FxHashMap::default();
        let mut zs: Vec<(CellKey, NeumaierSum)> = Vec::new();
        for (key, &m) in &self.cells {
            let m = m / total;
            if !identity {
                *m_xyz.entry(project(key, &xyz)).or_insert(0.0) += m;
            }
            *m_xz.entry(project(key, &xz)).or_insert(0.0) += m;
            *m_yz.entry(project(key, &yz)).or_insert(0.0) += m;
            let zk = project(key, &zi);
            let s = *slot.entry(zk).or_insert_with(|| {
                zs.push((zk, NeumaierSum::new()));
                zs.len() - 1
            });
            zs[s].1.add(m);
        }
        // Σ m ln m per condition, with signs from the entropy identity
        let mut acc: Vec<NeumaierSum> = vec![NeumaierSum::new(); zs.len()];
        let zoff_xyz = xi.len() + yi.len();
        let cond_of = |key: &CellKey, off: usize| -> CellKey {
            let mut out = [0u32; MAX_AXES];
            out[..zi.len()].copy_from_slice(&key[off..off + zi.len()]);
            out
        };
        let joint = if identity { &self.cells } else { &m_xyz };
        for (k, &m) in joint {
            acc[slot[&cond_of(k, zoff_xyz)]].add(mlogm(m / if identity { total } else { 1.0 }));
        }
        for (k, &m) in &m_xz {
            acc[slot[&cond_of(k, xi.len())]].add(-mlogm(m));
        }
        for (k, &m) in &m_yz {
            acc[slot[&cond_of(k, yi.len())]].add(-mlogm(m));
        }
        let entries = zs
            .into_iter()
            .zip(acc)
            .map(|((zk, mz), mut a)| {
                let mz = mz.value();
                a.add(mlogm(mz));
                (zk[..zi.len()].to_vec(), mz, clamp_info(a.value() / mz))
            })
            .collect();
        Ok(Disintegrated { entries })
    }
}
