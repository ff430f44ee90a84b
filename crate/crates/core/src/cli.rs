//! Command-line front end.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::bandwidth::{cv_median_table, median_candidates, Bandwidths};
use crate::bootstrap::{run_bootstrap, BootstrapConfig, BootstrapResult, CiOrientation};
use crate::cdf::Cdf;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::io::{link_frame, read_covariates, read_population, read_sample, write_columns};
use crate::km::km_cdf;
use crate::model::ModelCdf;
use crate::simulation::{
    run_design_based, run_model_based, summary_text, MetricTable, Pilot, QUARTILES,
};

#[derive(Debug, Parser)]
#[command(
    name = "fpcdf",
    version,
    about = "Finite-population CDF estimation for right-censored durations"
)]
pub struct Cli {
    /// Flat TOML config file; flags override its values
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Kaplan-Meier and model-based CDF curves of a sample
    Estimate(RunConfig),
    /// Bootstrap bias, variance and confidence intervals
    Bootstrap(RunConfig),
    /// Model-based Monte Carlo study on AFT-Weibull populations
    SimulateModel(RunConfig),
    /// Design-based Monte Carlo study on a fixed population file
    SimulateDesign(RunConfig),
}

impl Command {
    fn flags(&self) -> &RunConfig {
        match self {
            Command::Estimate(c)
            | Command::Bootstrap(c)
            | Command::SimulateModel(c)
            | Command::SimulateDesign(c) => c,
        }
    }
}

/// Exit code for an error category.
pub fn exit_code(e: &Error) -> u8 {
    match e.category() {
        "config" => 3,
        "ingestion" => 4,
        "input" => 5,
        "data" => 6,
        _ => 7,
    }
}

/// Runs a parsed command line; returns the files written.
pub fn run(cli: Cli) -> Result<Vec<PathBuf>> {
    let base = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let config = base.overlay(cli.command.flags().clone());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Estimate(_) => cmd_estimate(&config),
        Command::Bootstrap(_) => cmd_bootstrap(&config),
        Command::SimulateModel(_) => cmd_simulate_model(&config),
        Command::SimulateDesign(_) => cmd_simulate_design(&config),
    })
}

fn out_file(config: &RunConfig, name: &str) -> Result<PathBuf> {
    let dir = config.out_dir();
    fs::create_dir_all(&dir)?;
    Ok(dir.join(name))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)?;
    Ok(())
}

/// Writes `curve.csv` (t, F_KM, F_M) and `quartiles.csv`, plus
/// `estimate.txt` with the bandwidths.
pub fn cmd_estimate(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let sample = read_sample(config.require(&config.sample, "sample")?)?;
    let covariates = read_covariates(config.require(&config.population, "population")?)?;
    let frame = link_frame(&sample, &covariates)?;
    let mut notes = String::new();
    let bw = match (config.h_t, config.h_x) {
        (Some(h_t), Some(h_x)) => {
            let _ = writeln!(notes, "bandwidths: fixed");
            Bandwidths::new(h_t, h_x)?
        }
        (None, None) => {
            let (h_t, h_x) = median_candidates(frame.sample(), &config.fractions())?;
            let (bw, cv) = cv_median_table(frame.sample(), &h_t, &h_x)?.best();
            let _ = writeln!(notes, "bandwidths: cross-validation (criterion {cv})");
            bw
        }
        _ => return Err(Error::Config("give both `h_t` and `h_x` or neither".into())),
    };
    let _ = writeln!(notes, "h_t = {}\nh_x = {}", bw.h_t, bw.h_x);
    let _ = writeln!(notes, "N = {}\nn = {}", frame.size(), frame.sample_size());

    let grid = config.eval_grid().resolve(frame.sample())?;
    let km = km_cdf(frame.sample())?;
    let model = ModelCdf::fit(&frame, bw)?;
    let f_km: Vec<f64> = grid.iter().map(|&t| km.eval(t)).collect();
    let f_m = model.curve(&grid);

    let curve = out_file(config, "curve.csv")?;
    write_columns(&curve, &["t", "F_KM", "F_M"], &[&grid, &f_km, &f_m])?;
    let q_km = QUARTILES
        .iter()
        .map(|&p| km.quantile(p))
        .collect::<Result<Vec<_>>>()?;
    let q_m = QUARTILES
        .iter()
        .map(|&p| model.quantile(p))
        .collect::<Result<Vec<_>>>()?;
    let quartiles = out_file(config, "quartiles.csv")?;
    write_columns(&quartiles, &["p", "KM", "M"], &[&QUARTILES, &q_km, &q_m])?;
    let summary = out_file(config, "estimate.txt")?;
    write_text(&summary, &notes)?;
    Ok(vec![curve, quartiles, summary])
}

/// Writes `bootstrap.csv` and `bootstrap.txt`; with `keep_replicates`, also
/// `replicates.csv`.
pub fn cmd_bootstrap(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let sample = read_sample(config.require(&config.sample, "sample")?)?;
    let covariates = read_covariates(config.require(&config.population, "population")?)?;
    let frame = link_frame(&sample, &covariates)?;
    let settings = config.bootstrap()?;
    let result = run_bootstrap(&frame, &settings)?;
    write_bootstrap(config, &settings, &result)
}

fn write_bootstrap(
    config: &RunConfig,
    settings: &BootstrapConfig,
    r: &BootstrapResult,
) -> Result<Vec<PathBuf>> {
    let table = out_file(config, "bootstrap.csv")?;
    write_columns(
        &table,
        &[
            "t",
            "km",
            "km_bias",
            "km_variance",
            "km_lower",
            "km_upper",
            "m",
            "m_bias",
            "m_variance",
            "m_lower",
            "m_upper",
        ],
        &[
            &r.grid,
            &r.km.point,
            &r.km.bias,
            &r.km.variance,
            &r.km.ci_lower,
            &r.km.ci_upper,
            &r.model.point,
            &r.model.bias,
            &r.model.variance,
            &r.model.ci_lower,
            &r.model.ci_upper,
        ],
    )?;
    let mut text = String::new();
    let _ = writeln!(text, "B = {}", r.populations);
    let _ = writeln!(text, "R = {}", r.samples);
    let _ = writeln!(text, "seed = {}", settings.seed);
    let _ = writeln!(text, "alpha = {}", settings.alpha);
    let orientation = match settings.orientation {
        CiOrientation::Basic => "basic",
        CiOrientation::Reflected => "reflected",
    };
    let _ = writeln!(text, "ci = {orientation}");
    let _ = writeln!(text, "effective_replicates = {}", r.effective_replicates);
    let _ = writeln!(text, "dropped_replicates = {}", r.dropped_replicates);
    let _ = writeln!(
        text,
        "h_t = {}\nh_x = {}\nlambda = {}",
        r.bandwidths.h_t, r.bandwidths.h_x, r.lambda
    );
    let summary = out_file(config, "bootstrap.txt")?;
    write_text(&summary, &text)?;
    let mut files = vec![table, summary];

    if settings.keep_replicates {
        let path = out_file(config, "replicates.csv")?;
        let mut w = csv::Writer::from_path(&path).map_err(|e| Error::Io(e.into()))?;
        let write = |w: &mut csv::Writer<fs::File>, row: Vec<String>| {
            w.write_record(row).map_err(|e| Error::Io(e.into()))
        };
        let mut header = vec!["b".to_string(), "r".into(), "estimator".into()];
        header.extend(r.grid.iter().map(f64::to_string));
        write(&mut w, header)?;
        for rep in &r.replicates {
            for (name, curve) in [("km", &rep.km), ("m", &rep.model)] {
                let mut row = vec![rep.b.to_string(), rep.r.to_string(), name.to_string()];
                row.extend(curve.iter().map(f64::to_string));
                write(&mut w, row)?;
            }
        }
        w.flush()?;
        files.push(path);
    }
    Ok(files)
}

/// Writes `metrics.csv`, `quartiles.csv` and `summary.txt` for a metric
/// table.
pub fn write_metrics(
    config: &RunConfig,
    table: &MetricTable,
    header: &str,
) -> Result<Vec<PathBuf>> {
    let metrics = out_file(config, "metrics.csv")?;
    write_columns(
        &metrics,
        &[
            "t",
            "km_bias",
            "km_variance",
            "km_mse",
            "m_bias",
            "m_variance",
            "m_mse",
        ],
        &[
            &table.grid,
            &table.km.bias,
            &table.km.variance,
            &table.km.mse,
            &table.model.bias,
            &table.model.variance,
            &table.model.mse,
        ],
    )?;
    let col = |f: &dyn Fn(&crate::simulation::QuartileMetrics) -> f64| -> Vec<f64> {
        table.quartiles.iter().map(f).collect()
    };
    let quartiles = out_file(config, "quartiles.csv")?;
    write_columns(
        &quartiles,
        &[
            "p",
            "target",
            "km_rel_bias",
            "km_rel_rmse",
            "m_rel_bias",
            "m_rel_rmse",
            "km_fixed_rel_bias",
            "km_fixed_rel_rmse",
            "m_fixed_rel_bias",
            "m_fixed_rel_rmse",
        ],
        &[
            &col(&|q| q.p),
            &col(&|q| q.target),
            &col(&|q| q.km.bias),
            &col(&|q| q.km.rmse),
            &col(&|q| q.model.bias),
            &col(&|q| q.model.rmse),
            &col(&|q| q.km_fixed.bias),
            &col(&|q| q.km_fixed.rmse),
            &col(&|q| q.model_fixed.bias),
            &col(&|q| q.model_fixed.rmse),
        ],
    )?;
    let summary = out_file(config, "summary.txt")?;
    write_text(&summary, &summary_text(header, table))?;
    Ok(vec![metrics, quartiles, summary])
}

pub fn cmd_simulate_model(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let scenario = config.scenario()?;
    let table = run_model_based(&scenario)?;
    let bound = Pilot::for_scenario(&scenario).censoring_bound(scenario.tau)?;
    let header = format!(
        "model-based study: N = {}, n = {}, S = {}, sigma = {}, HR = {:.2}, tau = {}, seed = {}\ncensoring bound c = {}",
        scenario.population,
        scenario.sample,
        scenario.iterations,
        scenario.sigma,
        scenario.hazard_ratio(),
        scenario.tau,
        scenario.seed,
        bound.map_or("none".to_string(), |c| c.to_string()),
    );
    write_metrics(config, &table, &header)
}

pub fn cmd_simulate_design(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let population = read_population(config.require(&config.population, "population")?)?;
    let design = config.design(population.len())?;
    let table = run_design_based(&population, &design)?;
    let header = format!(
        "design-based study: N = {}, n = {}, S = {}, seed = {}",
        population.len(),
        design.sample,
        design.iterations,
        design.seed
    );
    write_metrics(config, &table, &header)
}
