//! Batch front-end: rate sweeps over exponents, simulations and leakage,
//! emitted as versioned CSV (and mirrored JSON with arg-min payloads).
//!
//! Exit codes: 0 success (including flagged-unconverged grids), 2 config
//! error, 3 guard violation.

mod config;
mod output;

pub use config::{
    ExponentSpec, MetricSpec, OneOrMany, OutputSpec, RatesSpec, RunConfig, SimulationSpec,
    SourceSpec,
};
pub use output::{argmin_json, Cell, Table, Units};

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::codec::{RatePair, MAX_VECTORS};
use crate::decoders::DecodingMetric;
use crate::exponents::{
    fa_exponent_gallager, fa_exponent_types, fr_expurgated_exponent, fr_expurgated_sup_beta,
    fr_map_exponent, fr_random_exponent, secrecy_exponent, ExponentResult, GridOpts,
};
use crate::montecarlo::{
    exact_leakage, fit_exponent, simulate, SourceModel,
};
use crate::{Error, Result};

/// Secret-key authentication over random binning: exponents and
/// finite-blocklength simulation.
#[derive(Debug, Parser)]
#[command(name = "binauth", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Path to the TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Master seed override.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Grid resolution override.
    #[arg(long, global = true)]
    pub grid: Option<u32>,

    /// CSV output path (stdout when omitted).
    #[arg(long, global = true)]
    pub out_csv: Option<PathBuf>,

    /// JSON output path (skipped when omitted).
    #[arg(long, global = true)]
    pub out_json: Option<PathBuf>,

    /// Worker threads (defaults to the rayon heuristic).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Display units for rate-like columns.
    #[arg(long, global = true, default_value = "nats")]
    pub units: Units,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Evaluate the configured single-letter exponents over the rate sweep.
    Exponent,
    /// Monte Carlo FR/FA estimates with exact leakage per (n, rates).
    Simulate,
    /// Exact leakage per (rates, n, code) with the secrecy-exponent
    /// reference.
    Leakage,
    /// Exponents and simulation side by side over the sweep.
    Sweep,
}

/// Entry point; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // Clap handles --help/--version through this path too.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        // A closed stdout (e.g. piping into head) is not an error.
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidConfig(_) | Error::Io(_) => 2,
                Error::GuardExceeded { .. } => 3,
                _ => 1,
            }
        }
    }
}

fn execute(cli: &Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        // Ignore failure when a global pool already exists (e.g. repeated
        // invocations in one process).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("--config is required".into()))?;
    let text = std::fs::read_to_string(config_path)?;
    let mut cfg = RunConfig::from_toml(&text)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(grid) = cli.grid {
        cfg.grid_resolution = grid;
    }
    cfg.validate()?;

    let table = match cli.command {
        Command::Exponent => cmd_exponent(&cfg, cli.units)?,
        Command::Simulate => cmd_simulate(&cfg, cli.units)?,
        Command::Leakage => cmd_leakage(&cfg, cli.units)?,
        Command::Sweep => cmd_sweep(&cfg, cli.units)?,
    };

    let csv_path = cli
        .out_csv
        .clone()
        .or_else(|| cfg.output.csv.as_ref().map(PathBuf::from));
    match csv_path {
        Some(path) => table.write_csv_file(path)?,
        None => table.write_csv(std::io::stdout().lock())?,
    }
    let json_path = cli
        .out_json
        .clone()
        .or_else(|| cfg.output.json.as_ref().map(PathBuf::from));
    if let Some(path) = json_path {
        table.write_json_file(path)?;
    }
    Ok(())
}

fn exponent_columns() -> Vec<&'static str> {
    vec![
        "config_hash",
        "seed",
        "source",
        "metric",
        "kind",
        "r_w",
        "r_s",
        "units",
        "value",
        "grid_resolution",
        "refined",
        "converged",
    ]
}

/// One row per (exponent kind, rate pair).
pub fn cmd_exponent(cfg: &RunConfig, units: Units) -> Result<Table> {
    let model = cfg.source.build()?;
    let metric = cfg.metric.build(&model)?;
    let opts = cfg.grid_opts();
    let hash = cfg.stable_hash();
    let mut table = Table::new("exponent-v1", exponent_columns());
    for rates in cfg.rate_pairs()? {
        for kind in &cfg.exponent.kinds {
            let result = evaluate_exponent(kind, &model, &metric, rates, &opts)?;
            push_exponent_row(
                &mut table, cfg, &hash, &metric, kind, rates, units, &result,
            );
        }
    }
    Ok(table)
}

fn evaluate_exponent(
    kind: &str,
    model: &SourceModel,
    metric: &DecodingMetric,
    rates: RatePair,
    opts: &GridOpts,
) -> Result<ExponentResult> {
    match kind {
        "fr_random" => fr_random_exponent(model.joint(), rates.r_w, metric, opts),
        "fr_map" => fr_map_exponent(model.joint(), rates.r_w, opts),
        "fa_types" => fa_exponent_types(model.p_x(), rates.r_w, rates.r_s, opts),
        "fa_gallager" => fa_exponent_gallager(model.p_x(), rates.r_w, rates.r_s, opts),
        "secrecy" => secrecy_exponent(model.p_x(), rates.r_s + rates.r_w, opts),
        "fr_expurgated" => fr_expurgated_exponent(
            model.p_x(),
            model.p_y_given_x(),
            rates.r_w,
            metric,
            opts,
        ),
        "fr_expurgated_sup_beta" => {
            fr_expurgated_sup_beta(model.p_x(), model.p_y_given_x(), rates.r_w, opts)
        }
        other => Err(Error::InvalidConfig(format!(
            "unknown exponent kind {other:?}"
        ))),
    }
}

#[allow(clippy::too_many_arguments)]
fn push_exponent_row(
    table: &mut Table,
    cfg: &RunConfig,
    hash: &str,
    metric: &DecodingMetric,
    kind: &str,
    rates: RatePair,
    units: Units,
    result: &ExponentResult,
) {
    table.push_with_extra(
        vec![
            Cell::Text(hash.into()),
            Cell::UInt(cfg.seed),
            Cell::Text(cfg.source.describe()),
            Cell::Text(metric.to_string()),
            Cell::Text(kind.into()),
            Cell::Float(units.convert(rates.r_w)),
            Cell::Float(units.convert(rates.r_s)),
            Cell::Text(units.label().into()),
            Cell::Float(units.convert(result.value)),
            Cell::UInt(result.grid_resolution as u64),
            Cell::Bool(result.refined),
            Cell::Bool(result.converged),
        ],
        Some(argmin_json(&result.argmin)),
    );
}

/// Pre-flight guard enumeration: every configured blocklength must fit the
/// exact and sampling guards before any work starts.
fn check_simulation_guards(cfg: &RunConfig, model: &SourceModel) -> Result<()> {
    for &n in &cfg.simulation.n {
        let vectors = (model.x_size() as u128).pow(n);
        if vectors > MAX_VECTORS as u128 {
            return Err(Error::GuardExceeded {
                what: "source vector enumeration (check simulation.n)",
                count: vectors,
                limit: MAX_VECTORS as u128,
            });
        }
    }
    Ok(())
}

fn simulate_columns() -> Vec<&'static str> {
    vec![
        "config_hash",
        "seed",
        "source",
        "metric",
        "n",
        "r_w",
        "r_s",
        "units",
        "num_codes",
        "trials_per_code",
        "fr_estimate",
        "fr_lo",
        "fr_hi",
        "fa_estimate",
        "fa_lo",
        "fa_hi",
        "leakage",
        "fr_slope",
        "fr_slope_stderr",
    ]
}

/// One row per (n, rate pair), with the fitted empirical FR slope when at
/// least three blocklengths qualify.
pub fn cmd_simulate(cfg: &RunConfig, units: Units) -> Result<Table> {
    let model = cfg.source.build()?;
    check_simulation_guards(cfg, &model)?;
    let metric = cfg.metric.build(&model)?;
    let hash = cfg.stable_hash();
    let mut table = Table::new("simulate-v1", simulate_columns());
    for rates in cfg.rate_pairs()? {
        let mut fr_points = Vec::new();
        let mut rows = Vec::new();
        for &n in &cfg.simulation.n {
            let report = simulate(
                &model,
                rates,
                &metric,
                n,
                cfg.simulation.codes,
                cfg.simulation.trials,
                cfg.seed,
            )?;
            let fr = report.fr.expect("simulate fills fr");
            if n >= cfg.simulation.fit_min_n {
                fr_points.push((n, fr.p_hat));
            }
            rows.push((n, report));
        }
        let fit = if fr_points.len() >= 3 {
            fit_exponent(&fr_points).ok()
        } else {
            None
        };
        for (n, report) in rows {
            let fr = report.fr.expect("simulate fills fr");
            let fa = report.fa.expect("simulate fills fa");
            table.push(vec![
                Cell::Text(hash.clone()),
                Cell::UInt(cfg.seed),
                Cell::Text(cfg.source.describe()),
                Cell::Text(metric.to_string()),
                Cell::UInt(n as u64),
                Cell::Float(units.convert(rates.r_w)),
                Cell::Float(units.convert(rates.r_s)),
                Cell::Text(units.label().into()),
                Cell::UInt(cfg.simulation.codes as u64),
                Cell::UInt(cfg.simulation.trials),
                Cell::Float(fr.p_hat),
                Cell::Float(fr.lo),
                Cell::Float(fr.hi),
                Cell::Float(fa.p_hat),
                Cell::Float(fa.lo),
                Cell::Float(fa.hi),
                Cell::MaybeFloat(report.leakage_nats.map(|l| units.convert(l))),
                Cell::MaybeFloat(fit.as_ref().map(|f| units.convert(f.slope))),
                Cell::MaybeFloat(fit.as_ref().map(|f| units.convert(f.stderr))),
            ]);
        }
    }
    Ok(table)
}

fn leakage_columns() -> Vec<&'static str> {
    vec![
        "config_hash",
        "seed",
        "source",
        "n",
        "r_w",
        "r_s",
        "units",
        "code_index",
        "leakage",
        "secrecy_exponent",
    ]
}

/// Exact `I(S;W)` per (rate pair, n, code index), with `E_sec(r_s + r_w)`
/// as the reference column.
pub fn cmd_leakage(cfg: &RunConfig, units: Units) -> Result<Table> {
    let model = cfg.source.build()?;
    check_simulation_guards(cfg, &model)?;
    let opts = cfg.grid_opts();
    let hash = cfg.stable_hash();
    let mut table = Table::new("leakage-v1", leakage_columns());
    for rates in cfg.rate_pairs()? {
        let e_sec = secrecy_exponent(model.p_x(), rates.r_s + rates.r_w, &opts)?;
        for &n in &cfg.simulation.n {
            for c in 0..cfg.simulation.codes {
                let code = crate::montecarlo::ensemble_code(&model, rates, n, cfg.seed, c)?;
                let leak = exact_leakage(&code, model.p_x())?;
                table.push(vec![
                    Cell::Text(hash.clone()),
                    Cell::UInt(cfg.seed),
                    Cell::Text(cfg.source.describe()),
                    Cell::UInt(n as u64),
                    Cell::Float(units.convert(rates.r_w)),
                    Cell::Float(units.convert(rates.r_s)),
                    Cell::Text(units.label().into()),
                    Cell::UInt(c as u64),
                    Cell::Float(units.convert(leak)),
                    Cell::Float(units.convert(e_sec.value)),
                ]);
            }
        }
    }
    Ok(table)
}

fn sweep_columns() -> Vec<&'static str> {
    vec![
        "config_hash",
        "seed",
        "source",
        "metric",
        "n",
        "r_w",
        "r_s",
        "units",
        "fr_estimate",
        "fr_lo",
        "fr_hi",
        "fa_estimate",
        "fa_lo",
        "fa_hi",
        "leakage",
        "fr_slope",
        "fr_exponent",
        "fa_exponent",
        "secrecy_exponent",
    ]
}

/// Simulation rows with the theoretical exponents alongside, for direct
/// empirical-vs-single-letter comparison.
pub fn cmd_sweep(cfg: &RunConfig, units: Units) -> Result<Table> {
    let model = cfg.source.build()?;
    check_simulation_guards(cfg, &model)?;
    let metric = cfg.metric.build(&model)?;
    let opts = cfg.grid_opts();
    let hash = cfg.stable_hash();
    let mut table = Table::new("sweep-v1", sweep_columns());
    for rates in cfg.rate_pairs()? {
        let fr_exp = fr_random_exponent(model.joint(), rates.r_w, &metric, &opts)?;
        let fa_exp = fa_exponent_types(model.p_x(), rates.r_w, rates.r_s, &opts)?;
        let sec = secrecy_exponent(model.p_x(), rates.r_s + rates.r_w, &opts)?;
        let mut fr_points = Vec::new();
        let mut rows = Vec::new();
        for &n in &cfg.simulation.n {
            let report = simulate(
                &model,
                rates,
                &metric,
                n,
                cfg.simulation.codes,
                cfg.simulation.trials,
                cfg.seed,
            )?;
            let fr = report.fr.expect("simulate fills fr");
            if n >= cfg.simulation.fit_min_n {
                fr_points.push((n, fr.p_hat));
            }
            rows.push((n, report));
        }
        let fit = if fr_points.len() >= 3 {
            fit_exponent(&fr_points).ok()
        } else {
            None
        };
        for (n, report) in rows {
            let fr = report.fr.expect("simulate fills fr");
            let fa = report.fa.expect("simulate fills fa");
            table.push(vec![
                Cell::Text(hash.clone()),
                Cell::UInt(cfg.seed),
                Cell::Text(cfg.source.describe()),
                Cell::Text(metric.to_string()),
                Cell::UInt(n as u64),
                Cell::Float(units.convert(rates.r_w)),
                Cell::Float(units.convert(rates.r_s)),
                Cell::Text(units.label().into()),
                Cell::Float(fr.p_hat),
                Cell::Float(fr.lo),
                Cell::Float(fr.hi),
                Cell::Float(fa.p_hat),
                Cell::Float(fa.lo),
                Cell::Float(fa.hi),
                Cell::MaybeFloat(report.leakage_nats.map(|l| units.convert(l))),
                Cell::MaybeFloat(fit.as_ref().map(|f| units.convert(f.slope))),
                Cell::Float(units.convert(fr_exp.value)),
                Cell::Float(units.convert(fa_exp.value)),
                Cell::Float(units.convert(sec.value)),
            ]);
        }
    }
    Ok(table)
}

