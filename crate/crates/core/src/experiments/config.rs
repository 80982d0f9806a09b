use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::information::Quantity;
use crate::problem::DEFAULT_BUDGET;

/// Smallest Monte Carlo sample count accepted in `mc` mode.
pub const MIN_MC_SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Example {
    OnehotGd,
    SignErm,
    SignErmScaled,
    RegularizedErm,
    ThresholdErm,
}

impl Example {
    pub const ALL: [Example; 5] = [
        Example::OnehotGd,
        Example::SignErm,
        Example::SignErmScaled,
        Example::RegularizedErm,
        Example::ThresholdErm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Example::OnehotGd => "onehot-gd",
            Example::SignErm => "sign-erm",
            Example::SignErmScaled => "sign-erm-scaled",
            Example::RegularizedErm => "regularized-erm",
            Example::ThresholdErm => "threshold-erm",
        }
    }

    fn params(self) -> &'static [&'static str] {
        match self {
            Example::OnehotGd => &["d", "eta", "t"],
            Example::SignErm => &["l", "r0", "tie_break"],
            Example::SignErmScaled => &["l", "tie_break"],
            Example::RegularizedErm => &["l", "lambda"],
            Example::ThresholdErm => &["m", "true_threshold"],
        }
    }
}

impl fmt::Display for Example {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Example {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Example::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Config(format!("example: unknown example `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunMode {
    #[default]
    Exact,
    Mc,
}

impl FromStr for RunMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(RunMode::Exact),
            "mc" => Ok(RunMode::Mc),
            _ => Err(Error::Config(format!(
                "mode: expected `exact` or `mc`, got `{s}`"
            ))),
        }
    }
}

/// Overrides of the example parameters; unset fields keep the defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExampleParams {
    /// One-hot dimension; defaults to `2n²` for each `n`.
    pub d: Option<usize>,
    /// GD step size; defaults to `1/(n√n)`.
    pub eta: Option<f64>,
    /// GD iterations; defaults to `n²`.
    pub t: Option<usize>,
    pub l: Option<f64>,
    pub r0: Option<f64>,
    pub tie_break: Option<i8>,
    pub lambda: Option<f64>,
    pub m: Option<u32>,
    pub true_threshold: Option<u32>,
}

impl ExampleParams {
    fn set(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        let fields: [(&'static str, bool); 9] = [
            ("d", self.d.is_some()),
            ("eta", self.eta.is_some()),
            ("t", self.t.is_some()),
            ("l", self.l.is_some()),
            ("r0", self.r0.is_some()),
            ("tie_break", self.tie_break.is_some()),
            ("lambda", self.lambda.is_some()),
            ("m", self.m.is_some()),
            ("true_threshold", self.true_threshold.is_some()),
        ];
        for (name, present) in fields {
            if present {
                out.push(name);
            }
        }
        out
    }
}

fn default_mc_samples() -> usize {
    100_000
}

fn default_budget() -> f64 {
    DEFAULT_BUDGET
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub example: Example,
    pub n_list: Vec<usize>,
    #[serde(default)]
    pub mode: RunMode,
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
    #[serde(default)]
    pub seed: u64,
    /// Per-row quantities to compute; all supported ones when absent.
    #[serde(default)]
    pub quantities: Option<Vec<String>>,
    /// Bound ids to report; all when absent.
    #[serde(default)]
    pub bounds: Option<Vec<String>>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Weighted outcomes allowed per exact computation.
    #[serde(default = "default_budget")]
    pub budget: f64,
    /// In exact mode, estimate over-budget quantities by sampling instead of failing.
    #[serde(default)]
    pub mc_fallback: bool,
    /// Feed sampled stability values into bounds.
    #[serde(default)]
    pub allow_mc_stability: bool,
    #[serde(default)]
    pub params: ExampleParams,
}

impl ExperimentConfig {
    /// A config with every default for `example`.
    pub fn new(example: Example, n_list: Vec<usize>) -> Self {
        Self {
            example,
            n_list,
            mode: RunMode::Exact,
            mc_samples: default_mc_samples(),
            seed: 0,
            quantities: None,
            bounds: None,
            output: None,
            budget: default_budget(),
            mc_fallback: false,
            allow_mc_stability: false,
            params: ExampleParams::default(),
        }
    }

    /// Parses and validates JSON, reporting the line and column of syntax errors.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            let suffix = format!(" at line {} column {}", e.line(), e.column());
            let msg = msg.strip_suffix(&suffix).unwrap_or(&msg);
            Error::Config(format!("line {}, column {}: {msg}", e.line(), e.column()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::Config(format!("{field}: {msg}")));
        if self.n_list.is_empty() {
            return bad("n_list", "must be nonempty".into());
        }
        if self.n_list.contains(&0) {
            return bad("n_list", "sample sizes must be at least 1".into());
        }
        let mut seen = self.n_list.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.n_list.len() {
            return bad("n_list", "contains duplicates".into());
        }
        if self.mode == RunMode::Mc && self.mc_samples < MIN_MC_SAMPLES {
            return bad(
                "mc_samples",
                format!(
                    "must be at least {MIN_MC_SAMPLES} in mc mode, got {}",
                    self.mc_samples
                ),
            );
        }
        if !(self.budget >= 1.0) {
            return bad("budget", format!("must be at least 1, got {}", self.budget));
        }
        if let Some(qs) = &self.quantities {
            for q in qs {
                if q.parse::<Quantity>().is_err() {
                    return bad("quantities", format!("unknown quantity `{q}`"));
                }
            }
        }
        if let Some(bs) = &self.bounds {
            for b in bs {
                if !super::BOUND_IDS.contains(&b.as_str()) {
                    return bad("bounds", format!("unknown bound `{b}`"));
                }
            }
        }
        let allowed = self.example.params();
        if let Some(p) = self.params.set().into_iter().find(|p| !allowed.contains(p)) {
            return bad(
                &format!("params.{p}"),
                format!(
                    "does not apply to {}; allowed: {}",
                    self.example,
                    allowed.join(", ")
                ),
            );
        }
        Ok(())
    }

    /// Selected per-row quantities, in catalog order.
    pub fn selected_quantities(&self) -> Option<Vec<Quantity>> {
        self.quantities.as_ref().map(|qs| {
            let mut out: Vec<Quantity> = qs.iter().filter_map(|q| q.parse().ok()).collect();
            out.sort();
            out.dedup();
            out
        })
    }

    pub fn wants_bound(&self, id: &str) -> bool {
        self.bounds
            .as_ref()
            .is_none_or(|bs| bs.iter().any(|b| b == id))
    }
}
