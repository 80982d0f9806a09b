use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use genbound::experiments::{
    analyse, check_sweep, check_verify, rate_fits, render_csv, render_slopes, report_rows,
    verify_analysis, Analysis, ExperimentConfig, RunMode,
};
use genbound::Error;

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_BUDGET: u8 = 3;
const EXIT_INVARIANT: u8 = 4;

#[derive(Parser)]
#[command(
    name = "genbound",
    version,
    about = "Evaluate generalization bounds on enumerable learning problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute every quantity and bound, write a CSV report.
    Run(Opts),
    /// Like run, plus log-log rate fits over n_list.
    Sweep(Opts),
    /// Check the invariant suite; exits 4 on any failure.
    Verify(Opts),
}

#[derive(Args)]
struct Opts {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config mode.
    #[arg(long, value_parser = ["exact", "mc"])]
    mode: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Weighted outcomes allowed per exact computation.
    #[arg(long)]
    budget: Option<f64>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidParameter(_) | Error::InvalidDistribution(_) => {
            EXIT_CONFIG
        }
        Error::BudgetExceeded { .. } => EXIT_BUDGET,
        _ => EXIT_FAILURE,
    }
}

fn load(opts: &Opts) -> Result<ExperimentConfig, Error> {
    let text = fs::read_to_string(&opts.config)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", opts.config.display())))?;
    let mut cfg = ExperimentConfig::from_json(&text)?;
    if let Some(m) = &opts.mode {
        cfg.mode = m.parse()?;
    }
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    if let Some(b) = opts.budget {
        cfg.budget = b;
    }
    if let Some(o) = &opts.out {
        cfg.output = Some(o.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn thread_pool() -> Result<rayon::ThreadPool, Error> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("GENBOUND_THREADS") {
        let n: usize = v.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            Error::Config(format!(
                "GENBOUND_THREADS must be a positive integer, got `{v}`"
            ))
        })?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn analyse_parallel(cfg: &ExperimentConfig) -> Result<Vec<Analysis>, Error> {
    let pool = thread_pool()?;
    pool.install(|| cfg.n_list.par_iter().map(|&n| analyse(cfg, n)).collect())
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => {
            fs::write(p, text).map_err(|e| Error::Io(format!("cannot write {}: {e}", p.display())))
        }
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::Io(e.to_string())),
    }
}

/// `results.csv` becomes `results.slopes.csv`.
fn slopes_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}.slopes.csv"))
}

fn execute(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Run(opts) => {
            let cfg = load(&opts)?;
            let analyses = analyse_parallel(&cfg)?;
            write_output(cfg.output.as_deref(), &render_csv(&report_rows(&analyses)))?;
            Ok(0)
        }
        Command::Sweep(opts) => {
            let cfg = load(&opts)?;
            check_sweep(&cfg)?;
            let analyses = analyse_parallel(&cfg)?;
            write_output(cfg.output.as_deref(), &render_csv(&report_rows(&analyses)))?;
            let slopes = render_slopes(&rate_fits(&analyses));
            match &cfg.output {
                Some(out) => write_output(Some(&slopes_path(out)), &slopes)?,
                None => eprint!("{slopes}"),
            }
            Ok(0)
        }
        Command::Verify(opts) => {
            let mut cfg = load(&opts)?;
            if opts.mode.is_none() {
                cfg.mode = RunMode::Exact;
            }
            check_verify(&cfg)?;
            let analyses = analyse_parallel(&cfg)?;
            let mut text = String::new();
            let mut ok = true;
            for a in &analyses {
                let r = verify_analysis(a);
                ok &= r.passed();
                text.push_str(&r.to_string());
            }
            text.push_str(if ok {
                "all invariants hold\n"
            } else {
                "invariant failures found\n"
            });
            write_output(cfg.output.as_deref(), &text)?;
            Ok(if ok { 0 } else { EXIT_INVARIANT })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
