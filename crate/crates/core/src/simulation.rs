//! Monte Carlo harnesses.
//!
//! The model-based study draws a fresh population from an AFT-Weibull
//! superpopulation at every iteration and compares both estimators with the
//! population's true CDF. The design-based study resamples one fixed
//! population and compares with the Kaplan-Meier estimate computed on all of
//! its units.

use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;

use crate::bandwidth::{ase_oracle_bandwidths, median_candidates, Bandwidths, DEFAULT_FRACTIONS};
use crate::cdf::{Cdf, StepCdf};
use crate::error::{Error, Result};
use crate::km::km_cdf;
use crate::model::PopulationFrame;
use crate::rng::{stage, substream};
use crate::sample::CensoredSample;
use crate::stats::{empirical_cdf, empirical_quantile_sorted, linspace, percentile_sorted};

pub const QUARTILES: [f64; 3] = [0.25, 0.5, 0.75];

/// `exp(0.2 / sigma)`.
pub fn hazard_ratio(sigma: f64) -> f64 {
    (0.2 / sigma).exp()
}

pub fn sigma_for_hazard_ratio(hr: f64) -> f64 {
    0.2 / hr.ln()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimScenario {
    /// Population size `N`.
    pub population: usize,
    /// Sample size `n`.
    pub sample: usize,
    /// Iterations `S`.
    pub iterations: usize,
    pub sigma: f64,
    /// Target censoring rate in the population.
    pub tau: f64,
    pub grid_points: usize,
    pub grid_lo: f64,
    pub grid_hi: f64,
    /// Candidate bandwidths for the ASE oracle, as fractions of the sample
    /// ranges.
    pub fractions: Vec<f64>,
    pub seed: u64,
    pub pilot_size: usize,
}

impl Default for SimScenario {
    fn default() -> Self {
        Self {
            population: 200,
            sample: 20,
            iterations: 1000,
            sigma: 0.5,
            tau: 0.0,
            grid_points: 30,
            grid_lo: 0.05,
            grid_hi: 0.95,
            fractions: DEFAULT_FRACTIONS.to_vec(),
            seed: 1,
            pilot_size: 1_000_000,
        }
    }
}

impl SimScenario {
    pub fn validate(&self) -> Result<()> {
        if self.sample == 0 || self.sample > self.population {
            return Err(Error::invalid(format!(
                "sample size must be in 1..={}, got {}",
                self.population, self.sample
            )));
        }
        if self.iterations == 0 {
            return Err(Error::invalid("at least one iteration is needed"));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        if !(0.0..1.0).contains(&self.tau) {
            return Err(Error::invalid(format!(
                "censoring rate must be in [0, 1), got {}",
                self.tau
            )));
        }
        check_grid_policy(self.grid_points, self.grid_lo, self.grid_hi)?;
        if self.fractions.is_empty() || self.fractions.iter().any(|f| !(*f > 0.0)) {
            return Err(Error::invalid("bandwidth fractions must be positive"));
        }
        if self.pilot_size < 2 {
            return Err(Error::invalid("pilot must have at least two draws"));
        }
        Ok(())
    }

    pub fn hazard_ratio(&self) -> f64 {
        hazard_ratio(self.sigma)
    }
}

fn check_grid_policy(points: usize, lo: f64, hi: f64) -> Result<()> {
    if points == 0 || !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
        return Err(Error::invalid("bad evaluation-grid percentiles"));
    }
    Ok(())
}

/// Draws `(x, t)` with `x ~ U(1, 4)`, `u = log(-log U)` and
/// `t = exp(-3 + 0.2 x + sigma u)`.
pub fn draw_unit<R: Rng + ?Sized>(sigma: f64, rng: &mut R) -> (f64, f64) {
    let x = 1.0 + 3.0 * rng.random::<f64>();
    let u = (-open01(rng).ln()).ln();
    (x, (-3.0 + 0.2 * x + sigma * u).exp())
}

fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(rand::distr::Open01)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimPopulation {
    pub x: Vec<f64>,
    pub t: Vec<f64>,
    pub y: Vec<f64>,
    pub delta: Vec<bool>,
}

impl SimPopulation {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn censoring_rate(&self) -> f64 {
        self.delta.iter().filter(|&&d| !d).count() as f64 / self.len() as f64
    }

    pub fn observe(&self, units: &[usize]) -> Result<CensoredSample> {
        CensoredSample::new(
            units.iter().map(|&u| self.y[u]).collect(),
            units.iter().map(|&u| self.delta[u]).collect(),
            units.iter().map(|&u| self.x[u]).collect(),
        )
    }

    /// All units as observed data.
    pub fn as_sample(&self) -> Result<CensoredSample> {
        CensoredSample::new(self.y.clone(), self.delta.clone(), self.x.clone())
    }
}

/// One population of `size` units; censoring times are `U(0, c)` when
/// `censor_bound` is `Some(c)` and absent otherwise.
pub fn gen_population<R: Rng + ?Sized>(
    size: usize,
    sigma: f64,
    censor_bound: Option<f64>,
    rng: &mut R,
) -> SimPopulation {
    let mut pop = SimPopulation {
        x: Vec::with_capacity(size),
        t: Vec::with_capacity(size),
        y: Vec::with_capacity(size),
        delta: Vec::with_capacity(size),
    };
    for _ in 0..size {
        let (x, t) = draw_unit(sigma, rng);
        let c = censor_bound.map_or(f64::INFINITY, |c| c * rng.random::<f64>());
        pop.x.push(x);
        pop.t.push(t);
        pop.y.push(t.min(c));
        pop.delta.push(t <= c);
    }
    pop
}

/// Large reference draw of event times, shared by every censoring rate of
/// a given `sigma` and seed.
#[derive(Debug, Clone)]
pub struct Pilot {
    sorted: Vec<f64>,
    prefix: Vec<f64>,
}

impl Pilot {
    pub fn new(sigma: f64, size: usize, seed: u64) -> Self {
        let mut rng = substream(seed, &[stage::SIM_PILOT]);
        let mut sorted: Vec<f64> = (0..size).map(|_| draw_unit(sigma, &mut rng).1).collect();
        sorted.sort_by(f64::total_cmp);
        let mut prefix = Vec::with_capacity(size + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for &t in &sorted {
            acc += t;
            prefix.push(acc);
        }
        Self { sorted, prefix }
    }

    pub fn for_scenario(scenario: &SimScenario) -> Self {
        Self::new(scenario.sigma, scenario.pilot_size, scenario.seed)
    }

    pub fn times(&self) -> &[f64] {
        &self.sorted
    }

    /// Empirical quantile of the pilot times.
    pub fn quantile(&self, p: f64) -> f64 {
        empirical_quantile_sorted(&self.sorted, p)
    }

    pub fn quartiles(&self) -> [f64; 3] {
        QUARTILES.map(|p| self.quantile(p))
    }

    /// `points` equally spaced times between two percentiles.
    pub fn grid(&self, points: usize, lo: f64, hi: f64) -> Vec<f64> {
        linspace(
            percentile_sorted(&self.sorted, lo),
            percentile_sorted(&self.sorted, hi),
            points,
        )
    }

    /// `P(c < t)` with `c ~ U(0, bound)`, averaged over the pilot times
    /// (the uniform is integrated out exactly).
    pub fn censoring_probability(&self, bound: f64) -> f64 {
        let below = self.sorted.partition_point(|&t| t < bound);
        let m = self.sorted.len() as f64;
        (self.prefix[below] / bound + (self.sorted.len() - below) as f64) / m
    }

    /// Upper bound `c` of the censoring distribution giving rate `tau`;
    /// `None` for `tau = 0`.
    pub fn censoring_bound(&self, tau: f64) -> Result<Option<f64>> {
        if tau == 0.0 {
            return Ok(None);
        }
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::invalid(format!(
                "censoring rate must be in [0, 1), got {tau}"
            )));
        }
        let mut hi = self.sorted[self.sorted.len() - 1].max(f64::MIN_POSITIVE);
        while self.censoring_probability(hi) > tau {
            hi *= 2.0;
        }
        let mut lo = hi;
        while self.censoring_probability(lo) < tau {
            lo /= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.censoring_probability(mid) > tau {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(Some(0.5 * (lo + hi)))
    }
}

/// Censoring bound for the scenario, from its pilot.
pub fn calibrate_censoring(scenario: &SimScenario) -> Result<Option<f64>> {
    Pilot::for_scenario(scenario).censoring_bound(scenario.tau)
}

/// Per-iteration curves and quartiles.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub truth: Vec<f64>,
    pub km: Vec<f64>,
    pub model: Vec<f64>,
    pub true_quartiles: [f64; 3],
    pub km_quartiles: [f64; 3],
    pub model_quartiles: [f64; 3],
    /// Quartiles that fell back to the terminal time.
    pub quartile_failures: usize,
    pub bandwidths: Option<Bandwidths>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveMetrics {
    pub bias: Vec<f64>,
    pub variance: Vec<f64>,
    pub mse: Vec<f64>,
    /// Mean of `mse` over the grid.
    pub mase: f64,
}

/// Relative bias and square root of relative MSE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeError {
    pub bias: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuartileMetrics {
    pub p: f64,
    /// Fixed target (model quartile or census-estimate quartile).
    pub target: f64,
    /// Against each iteration's own true quartile.
    pub km: RelativeError,
    pub model: RelativeError,
    /// Against the fixed target.
    pub km_fixed: RelativeError,
    pub model_fixed: RelativeError,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricTable {
    pub grid: Vec<f64>,
    pub km: CurveMetrics,
    pub model: CurveMetrics,
    /// `MASE(KM) / MASE(M)`.
    pub mase_ratio: f64,
    pub quartiles: Vec<QuartileMetrics>,
    pub iterations: usize,
    pub failures: usize,
    pub quartile_failures: usize,
    pub records: Vec<IterationRecord>,
}

fn curve_metrics(
    records: &[IterationRecord],
    pick: impl Fn(&IterationRecord) -> &[f64],
) -> CurveMetrics {
    let k = records[0].truth.len();
    let s = records.len() as f64;
    let mut bias = vec![0.0; k];
    let mut mse = vec![0.0; k];
    let mut mean = vec![0.0; k];
    for rec in records {
        for (i, (&e, &f)) in pick(rec).iter().zip(&rec.truth).enumerate() {
            bias[i] += e - f;
            mse[i] += (e - f) * (e - f);
            mean[i] += e;
        }
    }
    for i in 0..k {
        bias[i] /= s;
        mse[i] /= s;
        mean[i] /= s;
    }
    let mut variance = vec![0.0; k];
    for rec in records {
        for (i, &e) in pick(rec).iter().enumerate() {
            variance[i] += (e - mean[i]) * (e - mean[i]);
        }
    }
    variance.iter_mut().for_each(|v| *v /= s);
    let mase = mse.iter().sum::<f64>() / k as f64;
    CurveMetrics {
        bias,
        variance,
        mse,
        mase,
    }
}

fn relative_error(pairs: impl Iterator<Item = (f64, f64)>) -> RelativeError {
    let (mut sum, mut sq, mut count) = (0.0, 0.0, 0usize);
    for (est, target) in pairs {
        let rel = (est - target) / target;
        sum += rel;
        sq += rel * rel;
        count += 1;
    }
    let c = count as f64;
    RelativeError {
        bias: sum / c,
        rmse: (sq / c).sqrt(),
    }
}

/// Aggregates completed iterations. `failures` counts iterations that did
/// not complete.
pub fn aggregate(
    grid: Vec<f64>,
    records: Vec<IterationRecord>,
    fixed_targets: [f64; 3],
    failures: usize,
) -> Result<MetricTable> {
    if records.is_empty() {
        return Err(Error::Empty("every iteration failed"));
    }
    let km = curve_metrics(&records, |r| &r.km);
    let model = curve_metrics(&records, |r| &r.model);
    let quartiles = QUARTILES
        .iter()
        .enumerate()
        .map(|(q, &p)| QuartileMetrics {
            p,
            target: fixed_targets[q],
            km: relative_error(
                records
                    .iter()
                    .map(|r| (r.km_quartiles[q], r.true_quartiles[q])),
            ),
            model: relative_error(
                records
                    .iter()
                    .map(|r| (r.model_quartiles[q], r.true_quartiles[q])),
            ),
            km_fixed: relative_error(
                records
                    .iter()
                    .map(|r| (r.km_quartiles[q], fixed_targets[q])),
            ),
            model_fixed: relative_error(
                records
                    .iter()
                    .map(|r| (r.model_quartiles[q], fixed_targets[q])),
            ),
        })
        .collect();
    Ok(MetricTable {
        grid,
        mase_ratio: km.mase / model.mase,
        km,
        model,
        quartiles,
        iterations: records.len() + failures,
        failures,
        quartile_failures: records.iter().map(|r| r.quartile_failures).sum(),
        records,
    })
}

fn quartiles_of<C: Cdf>(cdf: &C, terminal: f64, failures: &mut usize) -> [f64; 3] {
    QUARTILES.map(|p| {
        cdf.quantile(p).unwrap_or_else(|_| {
            *failures += 1;
            terminal
        })
    })
}

/// Fits both estimators on `units` with ASE-oracle bandwidths against
/// `truth` on `grid`.
fn estimate(
    iteration: usize,
    frame: &PopulationFrame,
    grid: &[f64],
    truth: Vec<f64>,
    true_quartiles: [f64; 3],
    fractions: &[f64],
) -> Result<IterationRecord> {
    let km: StepCdf = km_cdf(frame.sample())?;
    let (h_t, h_x) = median_candidates(frame.sample(), fractions)?;
    let sel = ase_oracle_bandwidths(frame, &h_t, &h_x, &truth, grid)?;
    let mut quartile_failures = 0;
    let km_quartiles = quartiles_of(&km, km.terminal_time(), &mut quartile_failures);
    let model_quartiles = quartiles_of(
        &sel.model,
        sel.model.terminal_time(),
        &mut quartile_failures,
    );
    Ok(IterationRecord {
        iteration,
        km: grid.iter().map(|&t| km.eval(t)).collect(),
        model: sel.model.curve(grid),
        truth,
        true_quartiles,
        km_quartiles,
        model_quartiles,
        quartile_failures,
        bandwidths: Some(sel.bandwidths),
    })
}

fn sorted_units<R: Rng + ?Sized>(rng: &mut R, size: usize, n: usize) -> Vec<usize> {
    let mut units = rand::seq::index::sample(rng, size, n).into_vec();
    units.sort_unstable();
    units
}

fn split_results(results: Vec<Result<IterationRecord>>) -> (Vec<IterationRecord>, usize) {
    let mut failures = 0;
    let records = results
        .into_iter()
        .filter_map(|r| r.map_err(|_| failures += 1).ok())
        .collect();
    (records, failures)
}

/// One model-based iteration.
pub fn model_iteration(
    scenario: &SimScenario,
    iteration: usize,
    censor_bound: Option<f64>,
    grid: &[f64],
) -> Result<IterationRecord> {
    let mut rng = substream(scenario.seed, &[stage::SIM_ITERATION, iteration as u64]);
    let pop = gen_population(scenario.population, scenario.sigma, censor_bound, &mut rng);
    let units = sorted_units(&mut rng, scenario.population, scenario.sample);
    let truth = grid.iter().map(|&t| empirical_cdf(&pop.t, t)).collect();
    let mut sorted_t = pop.t.clone();
    sorted_t.sort_by(f64::total_cmp);
    let true_quartiles = QUARTILES.map(|p| empirical_quantile_sorted(&sorted_t, p));
    let frame = PopulationFrame::new(pop.x.clone(), units.clone(), pop.observe(&units)?)?;
    estimate(
        iteration,
        &frame,
        grid,
        truth,
        true_quartiles,
        &scenario.fractions,
    )
}

/// The model-based study.
pub fn run_model_based(scenario: &SimScenario) -> Result<MetricTable> {
    scenario.validate()?;
    let pilot = Pilot::for_scenario(scenario);
    let bound = pilot.censoring_bound(scenario.tau)?;
    let grid = pilot.grid(scenario.grid_points, scenario.grid_lo, scenario.grid_hi);
    let targets = pilot.quartiles();
    drop(pilot);
    let results: Vec<_> = (0..scenario.iterations)
        .into_par_iter()
        .map(|s| model_iteration(scenario, s, bound, &grid))
        .collect();
    let (records, failures) = split_results(results);
    aggregate(grid, records, targets, failures)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignConfig {
    pub sample: usize,
    pub iterations: usize,
    pub grid_points: usize,
    pub grid_lo: f64,
    pub grid_hi: f64,
    pub fractions: Vec<f64>,
    pub seed: u64,
}

impl Default for DesignConfig {
    fn default() -> Self {
        Self {
            sample: 20,
            iterations: 1000,
            grid_points: 30,
            grid_lo: 0.05,
            grid_hi: 0.95,
            fractions: DEFAULT_FRACTIONS.to_vec(),
            seed: 1,
        }
    }
}

impl DesignConfig {
    pub fn validate(&self, population: usize) -> Result<()> {
        if self.sample == 0 || self.sample > population {
            return Err(Error::invalid(format!(
                "sample size must be in 1..={population}, got {}",
                self.sample
            )));
        }
        if self.iterations == 0 {
            return Err(Error::invalid("at least one iteration is needed"));
        }
        if self.fractions.is_empty() || self.fractions.iter().any(|f| !(*f > 0.0)) {
            return Err(Error::invalid("bandwidth fractions must be positive"));
        }
        check_grid_policy(self.grid_points, self.grid_lo, self.grid_hi)
    }
}

/// One design-based iteration against the census estimate `target`.
pub fn design_iteration(
    population: &CensoredSample,
    config: &DesignConfig,
    iteration: usize,
    grid: &[f64],
    target: &StepCdf,
) -> Result<IterationRecord> {
    let mut rng = substream(config.seed, &[stage::DESIGN_ITERATION, iteration as u64]);
    let units = sorted_units(&mut rng, population.len(), config.sample);
    let frame = PopulationFrame::new(
        population.x().to_vec(),
        units.clone(),
        population.select(&units)?,
    )?;
    let truth = grid.iter().map(|&t| target.eval(t)).collect();
    let mut failures = 0;
    let true_quartiles = quartiles_of(target, target.terminal_time(), &mut failures);
    estimate(
        iteration,
        &frame,
        grid,
        truth,
        true_quartiles,
        &config.fractions,
    )
}

/// The design-based study on a fixed population.
pub fn run_design_based(population: &CensoredSample, config: &DesignConfig) -> Result<MetricTable> {
    config.validate(population.len())?;
    let target = km_cdf(population)?;
    let mut sorted = population.y().to_vec();
    sorted.sort_by(f64::total_cmp);
    let grid = linspace(
        percentile_sorted(&sorted, config.grid_lo),
        percentile_sorted(&sorted, config.grid_hi),
        config.grid_points,
    );
    let mut failures = 0;
    let targets = quartiles_of(&target, target.terminal_time(), &mut failures);
    let results: Vec<_> = (0..config.iterations)
        .into_par_iter()
        .map(|s| design_iteration(population, config, s, &grid, &target))
        .collect();
    let (records, failures) = split_results(results);
    aggregate(grid, records, targets, failures)
}

/// Plain-text summary: MASE values and ratio, then quartile relative bias
/// with root relative MSE in parentheses.
pub fn summary_text(title: &str, table: &MetricTable) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{title}");
    let _ = writeln!(
        out,
        "iterations: {} (failed: {}, quartile fallbacks: {})",
        table.iterations, table.failures, table.quartile_failures
    );
    let _ = writeln!(out, "MASE(KM) = {:.6}", table.km.mase);
    let _ = writeln!(out, "MASE(M)  = {:.6}", table.model.mase);
    let _ = writeln!(out, "MASE ratio KM/M = {:.2}", table.mase_ratio);
    let _ = writeln!(out);
    let _ = writeln!(out, "{:<8}{:>10}{:>22}{:>22}", "", "target", "KM", "M");
    for q in &table.quartiles {
        let name = format!("Q{}", (q.p * 4.0).round() as usize);
        let _ = writeln!(
            out,
            "{:<8}{:>10.3}{:>22}{:>22}",
            name,
            q.target,
            format!("{:.3} ({:.3})", q.km.bias, q.km.rmse),
            format!("{:.3} ({:.3})", q.model.bias, q.model.rmse),
        );
    }
    let _ = writeln!(out, "against fixed targets:");
    for q in &table.quartiles {
        let name = format!("Q{}", (q.p * 4.0).round() as usize);
        let _ = writeln!(
            out,
            "{:<8}{:>10.3}{:>22}{:>22}",
            name,
            q.target,
            format!("{:.3} ({:.3})", q.km_fixed.bias, q.km_fixed.rmse),
            format!("{:.3} ({:.3})", q.model_fixed.bias, q.model_fixed.rmse),
        );
    }
    out
}
