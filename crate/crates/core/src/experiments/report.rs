//! CSV rows and sweep rate fits.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::numeric::{fmt_sig12, log_log_slope};

use super::analysis::{Analysis, Value};
use super::config::Example;

pub const CSV_HEADER: &str =
    "example,n,index,quantity,value,method,stderr,applicable,exact_gen_error";

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub example: Example,
    pub n: usize,
    /// 0-based row, `None` for aggregates.
    pub index: Option<usize>,
    pub quantity: String,
    /// `NaN` for inapplicable bounds.
    pub value: f64,
    pub method: String,
    pub stderr: Option<f64>,
    pub applicable: bool,
    pub exact_gen_error: Option<f64>,
}

impl ReportRow {
    fn sort_key(&self) -> (Example, usize, usize, &str) {
        (
            self.example,
            self.n,
            self.index.map_or(0, |i| i + 1),
            &self.quantity,
        )
    }

    pub fn to_csv_line(&self) -> String {
        let opt = |v: Option<f64>| v.map(fmt_sig12).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.example,
            self.n,
            self.index
                .map_or("all".to_string(), |i| (i + 1).to_string()),
            self.quantity,
            if self.value.is_nan() {
                String::new()
            } else {
                fmt_sig12(self.value)
            },
            self.method,
            opt(self.stderr),
            self.applicable,
            opt(self.exact_gen_error),
        )
    }
}

fn value_row(a: &Analysis, index: Option<usize>, quantity: String, v: &Value) -> ReportRow {
    ReportRow {
        example: a.example,
        n: a.n,
        index,
        quantity,
        value: v.value,
        method: v.method.clone(),
        stderr: v.stderr,
        applicable: true,
        exact_gen_error: a.exact_gen_error,
    }
}

/// Flattens an analysis into report rows, sorted.
pub fn analysis_rows(a: &Analysis) -> Vec<ReportRow> {
    let mut out = Vec::new();
    for (name, v) in &a.scalars {
        out.push(value_row(a, None, name.clone(), v));
    }
    for (name, vs) in &a.rows {
        for (i, v) in vs.iter().enumerate() {
            out.push(value_row(a, Some(i), name.clone(), v));
        }
    }
    let method = if a.scalars.contains_key("inputs_sampled") {
        "mc"
    } else {
        "exact"
    };
    for b in &a.bounds {
        let mut row = value_row(a, None, b.id.to_string(), &Value::labeled(b.value, method));
        row.applicable = b.applicable;
        out.push(row);
        if !b.applicable {
            continue;
        }
        if let Some(r) = b.rounded_value {
            out.push(value_row(
                a,
                None,
                format!("{}.rounded", b.id),
                &Value::labeled(r, method),
            ));
        }
        for (name, v) in &b.components {
            out.push(value_row(
                a,
                None,
                format!("{}.{name}", b.id),
                &Value::labeled(*v, method),
            ));
        }
    }
    sort_rows(&mut out);
    out
}

pub fn sort_rows(rows: &mut [ReportRow]) {
    rows.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}

pub fn render_csv(rows: &[ReportRow]) -> String {
    let mut s = String::with_capacity(64 * (rows.len() + 1));
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.to_csv_line());
        s.push('\n');
    }
    s
}

/// Least-squares slope of `ln(value)` against `ln(n)` for one quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub example: Example,
    pub quantity: String,
    pub slope: f64,
    pub points: usize,
}

pub const SLOPE_HEADER: &str = "example,quantity,slope,points";

/// Fits every quantity present with a positive finite value at each `n`.
///
/// Per-row quantities are averaged over rows first.
pub fn rate_fits(analyses: &[Analysis]) -> Vec<RateFit> {
    let mut series: BTreeMap<(Example, String), Vec<(f64, f64)>> = BTreeMap::new();
    let mut counts: BTreeMap<Example, usize> = BTreeMap::new();
    for a in analyses {
        *counts.entry(a.example).or_default() += 1;
        let mut push = |name: String, v: f64| {
            series
                .entry((a.example, name))
                .or_default()
                .push((a.n as f64, v));
        };
        for (name, v) in &a.scalars {
            push(name.clone(), v.value);
        }
        for (name, vs) in &a.rows {
            push(
                name.clone(),
                vs.iter().map(|v| v.value).sum::<f64>() / vs.len() as f64,
            );
        }
        for b in a.bounds.iter().filter(|b| b.applicable) {
            push(b.id.to_string(), b.value);
        }
    }
    series
        .into_iter()
        .filter(|((ex, _), pts)| pts.len() == counts[ex])
        .filter_map(|((example, quantity), pts)| {
            log_log_slope(&pts).map(|slope| RateFit {
                example,
                quantity,
                slope,
                points: pts.len(),
            })
        })
        .collect()
}

pub fn render_slopes(fits: &[RateFit]) -> String {
    let mut s = String::new();
    s.push_str(SLOPE_HEADER);
    s.push('\n');
    for f in fits {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            f.example,
            f.quantity,
            fmt_sig12(f.slope),
            f.points
        );
    }
    s
}
