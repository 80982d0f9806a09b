//! Config-driven runs of the examples: CSV reports, sweeps and the invariant suite.

mod analysis;
mod config;
mod report;
mod verify;

pub use analysis::{analyse, Analysis, Value, BOUND_IDS};
pub use config::{Example, ExampleParams, ExperimentConfig, RunMode, MIN_MC_SAMPLES};
pub use report::{
    analysis_rows, rate_fits, render_csv, render_slopes, sort_rows, RateFit, ReportRow, CSV_HEADER,
    SLOPE_HEADER,
};
pub use verify::{
    check_bernstein, check_bound_orderings, check_chain, check_cmi_range, check_evaluators,
    check_hyp_eq_ss, check_hyp_le_iomi, check_iomi_conditional, check_soundness, check_stability,
    check_vc_chain, check_vec_cmi, verify_analysis, CheckOutcome, Status, VerifyReport, CHECKS,
    INFO_TOL, SOUND_TOL, STABILITY_TOL,
};

use crate::error::{Error, Result};

/// Analyses every `n` of the config in order.
pub fn analyse_all(cfg: &ExperimentConfig) -> Result<Vec<Analysis>> {
    cfg.n_list.iter().map(|&n| analyse(cfg, n)).collect()
}

/// Sorted report rows of several analyses.
pub fn report_rows(analyses: &[Analysis]) -> Vec<ReportRow> {
    let mut rows: Vec<ReportRow> = analyses.iter().flat_map(analysis_rows).collect();
    sort_rows(&mut rows);
    rows
}

/// The CSV report of a config.
pub fn run(cfg: &ExperimentConfig) -> Result<String> {
    Ok(render_csv(&report_rows(&analyse_all(cfg)?)))
}

/// The CSV report plus log-log rate fits; needs at least two sample sizes.
pub fn sweep(cfg: &ExperimentConfig) -> Result<(String, Vec<RateFit>)> {
    check_sweep(cfg)?;
    let analyses = analyse_all(cfg)?;
    Ok((render_csv(&report_rows(&analyses)), rate_fits(&analyses)))
}

pub fn check_sweep(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.n_list.len() < 2 {
        return Err(Error::Config(
            "n_list: a sweep needs at least two sample sizes".into(),
        ));
    }
    Ok(())
}

pub fn check_verify(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.mode != RunMode::Exact {
        return Err(Error::Config("mode: verify runs in exact mode only".into()));
    }
    Ok(())
}

/// Runs the invariant suite on every `n` of an exact config.
pub fn verify(cfg: &ExperimentConfig) -> Result<Vec<VerifyReport>> {
    check_verify(cfg)?;
    Ok(analyse_all(cfg)?.iter().map(verify_analysis).collect())
}
