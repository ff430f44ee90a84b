//! Censoring-adapted residual bootstrap for the bias and variance of the
//! prediction error of `F_KM` and `F_M`, with percentile confidence
//! intervals.
//!
//! 1. Fit the conditional median and the smoothed residual CDF on the
//!    original sample (bandwidths by cross-validation).
//! 2. Synthesize `B` populations `t* = m(x) + eps*`, censored by `c*` drawn
//!    from the smoothed reverse Kaplan-Meier CDF.
//! 3. Draw `R` samples of size `n` without replacement from each one and
//!    re-estimate, with the 30%-of-range bandwidths.

use rand::distr::Open01;
use rand::Rng;
use rayon::prelude::*;

use crate::bandwidth::{
    cv_lambda_table, cv_median_table, data_driven_bandwidths, first_argmin, lambda_candidates,
    median_candidates, BandwidthGrid, Bandwidths, DATA_DRIVEN_FRACTION, DEFAULT_FRACTIONS,
};
use crate::cdf::{Cdf, SmoothedCdf};
use crate::conditional::BeranEstimator;
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::km::{km_cdf, product_limit, reverse_km_cdf};
use crate::model::{residuals_from_medians, ModelCdf, PopulationFrame, ResidualSet};
use crate::rng::{stage, substream};
use crate::sample::{min_max, CensoredSample};
use crate::stats::{empirical_cdf, empirical_quantile_sorted, linspace};

/// How candidate bandwidths are obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec {
    /// Fractions of the observed time, covariate and residual ranges.
    Relative(Vec<f64>),
    Explicit(BandwidthGrid),
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Relative(DEFAULT_FRACTIONS.to_vec())
    }
}

impl GridSpec {
    pub fn median_candidates(&self, sample: &CensoredSample) -> Result<(Vec<f64>, Vec<f64>)> {
        match self {
            GridSpec::Relative(f) => median_candidates(sample, f),
            GridSpec::Explicit(g) => Ok((g.h_t.clone(), g.h_x.clone())),
        }
    }

    pub fn lambda_candidates(&self, res: &ResidualSet) -> Result<Vec<f64>> {
        match self {
            GridSpec::Relative(f) => lambda_candidates(res, f),
            GridSpec::Explicit(g) => Ok(g.lambda.clone()),
        }
    }
}

/// The generators fitted on the original sample.
#[derive(Debug, Clone)]
pub struct FittedModel {
    pub bandwidths: Bandwidths,
    pub lambda: f64,
    pub x_all: Vec<f64>,
    /// `m(x_k)` for every population unit.
    pub medians: Vec<f64>,
    pub residuals: ResidualSet,
    /// Smoothed residual CDF `G_lambda0`.
    pub error_cdf: SmoothedCdf,
    /// Smoothed reverse Kaplan-Meier CDF; `None` when nothing was censored.
    pub censoring_cdf: Option<SmoothedCdf>,
}

/// Fits `m`, `G_lambda0` and the censoring CDF.
pub fn fit_generators(pop: &PopulationFrame, grids: &GridSpec) -> Result<FittedModel> {
    let sample = pop.sample();
    if sample.uncensored_count() < 2 {
        return Err(Error::degenerate(
            "the bootstrap needs at least two uncensored units",
        ));
    }
    let (h_t, h_x) = grids.median_candidates(sample)?;
    let bandwidths = cv_median_table(sample, &h_t, &h_x)?.best().0;

    let medians =
        BeranEstimator::new(sample).medians(pop.x_all(), bandwidths.h_x, bandwidths.h_t)?;
    let sample_medians: Vec<f64> = pop.sampled().iter().map(|&u| medians[u]).collect();
    let residuals = residuals_from_medians(sample, &sample_medians);

    let lambdas = grids.lambda_candidates(&residuals)?;
    let lambda = lambdas[first_argmin(&cv_lambda_table(&residuals, &lambdas)?)];
    let error_cdf = SmoothedCdf::from_step(
        &product_limit(&residuals.eps, &residuals.delta)?,
        KernelSpec::triweight(lambda)?,
    );

    Ok(FittedModel {
        bandwidths,
        lambda,
        x_all: pop.x_all().to_vec(),
        medians,
        residuals,
        error_cdf,
        censoring_cdf: censoring_cdf(sample)?,
    })
}

/// Smoothed reverse Kaplan-Meier CDF of the censoring times. The bandwidth
/// is 30% of the range of the censored observations, or of all
/// observations when fewer than two distinct censored values exist.
pub fn censoring_cdf(sample: &CensoredSample) -> Result<Option<SmoothedCdf>> {
    let censored: Vec<f64> = sample
        .y()
        .iter()
        .zip(sample.delta())
        .filter(|(_, &d)| !d)
        .map(|(&y, _)| y)
        .collect();
    if censored.is_empty() {
        return Ok(None);
    }
    let (lo, hi) = min_max(&censored);
    let range = if hi > lo {
        hi - lo
    } else {
        let (ylo, yhi) = sample.y_range();
        yhi - ylo
    };
    if !(range > 0.0) {
        return Err(Error::degenerate(
            "cannot smooth the censoring distribution",
        ));
    }
    let rev = reverse_km_cdf(sample)?;
    Ok(Some(SmoothedCdf::from_step(
        &rev,
        KernelSpec::triweight(DATA_DRIVEN_FRACTION * range)?,
    )))
}

/// A synthesized population; the uncensored event times are kept.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthPopulation {
    pub t: Vec<f64>,
    pub y: Vec<f64>,
    pub delta: Vec<bool>,
    pub x: Vec<f64>,
}

impl SynthPopulation {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// `F*(t) = #(t*_k <= t) / N`.
    pub fn true_cdf(&self, t: f64) -> f64 {
        empirical_cdf(&self.t, t)
    }

    pub fn censoring_rate(&self) -> f64 {
        self.delta.iter().filter(|&&d| !d).count() as f64 / self.len() as f64
    }

    /// Observed data of the given units.
    pub fn observe(&self, units: &[usize]) -> Result<CensoredSample> {
        CensoredSample::new(
            units.iter().map(|&u| self.y[u]).collect(),
            units.iter().map(|&u| self.delta[u]).collect(),
            units.iter().map(|&u| self.x[u]).collect(),
        )
    }
}

/// Draws `t*_k = m(x_k) + eps*_k` and `c*_k` by numerical inversion, one
/// pair of uniforms per unit in population order.
pub fn synth_population<R: Rng + ?Sized>(
    model: &FittedModel,
    rng: &mut R,
) -> Result<SynthPopulation> {
    let size = model.x_all.len();
    let mut out = SynthPopulation {
        t: Vec::with_capacity(size),
        y: Vec::with_capacity(size),
        delta: Vec::with_capacity(size),
        x: model.x_all.clone(),
    };
    for k in 0..size {
        let u_err: f64 = rng.sample(Open01);
        let u_cens: f64 = rng.sample(Open01);
        let t = model.medians[k] + model.error_cdf.quantile(u_err)?;
        let c = match &model.censoring_cdf {
            Some(g) => g.quantile(u_cens)?,
            None => f64::INFINITY,
        };
        out.t.push(t);
        out.y.push(t.min(c));
        out.delta.push(t <= c);
    }
    Ok(out)
}

/// `synth_population` on the stream of bootstrap population `b`.
pub fn synth_population_seeded(
    model: &FittedModel,
    seed: u64,
    b: usize,
) -> Result<SynthPopulation> {
    synth_population(
        model,
        &mut substream(seed, &[stage::BOOTSTRAP_POPULATION, b as u64]),
    )
}

/// Units of replicate sample `r` from population `b` (sorted).
pub fn replicate_units(seed: u64, b: usize, r: usize, size: usize, n: usize) -> Vec<usize> {
    let mut rng = substream(seed, &[stage::BOOTSTRAP_SAMPLE, b as u64, r as u64]);
    let mut units = rand::seq::index::sample(&mut rng, size, n).into_vec();
    units.sort_unstable();
    units
}

/// Where the evaluation times come from.
#[derive(Debug, Clone, PartialEq)]
pub enum EvalGrid {
    /// `points` equally spaced times between two percentiles of the event
    /// times, estimated by inverting the sample's Kaplan-Meier CDF.
    Percentiles {
        lo: f64,
        hi: f64,
        points: usize,
    },
    Explicit(Vec<f64>),
}

impl Default for EvalGrid {
    fn default() -> Self {
        EvalGrid::Percentiles {
            lo: 0.01,
            hi: 0.99,
            points: 30,
        }
    }
}

impl EvalGrid {
    pub fn resolve(&self, sample: &CensoredSample) -> Result<Vec<f64>> {
        match self {
            EvalGrid::Percentiles { lo, hi, points } => {
                let unit = 0.0..1.0;
                if !(unit.contains(lo) && unit.contains(hi))
                    || *lo <= 0.0
                    || lo > hi
                    || *points == 0
                {
                    return Err(Error::invalid(
                        "grid percentiles must satisfy 0 < lo <= hi < 1",
                    ));
                }
                let km = km_cdf(sample)?;
                Ok(linspace(km.quantile(*lo)?, km.quantile(*hi)?, *points))
            }
            EvalGrid::Explicit(v) if !v.is_empty() => Ok(v.clone()),
            EvalGrid::Explicit(_) => Err(Error::invalid("empty evaluation grid")),
        }
    }
}

/// Orientation of the interval built from the quantiles of the pooled
/// deviations `F* - F`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CiOrientation {
    /// `[F - q(1 - a/2), F + q(a/2)]`.
    Reflected,
    /// `[F - q(1 - a/2), F - q(a/2)]`, the basic bootstrap interval.
    #[default]
    Basic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapConfig {
    /// Number of bootstrap populations.
    pub populations: usize,
    /// Samples per bootstrap population.
    pub samples: usize,
    pub alpha: f64,
    pub grid: EvalGrid,
    pub seed: u64,
    pub grids: GridSpec,
    pub orientation: CiOrientation,
    /// Keep every replicate's curves in the result.
    pub keep_replicates: bool,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            populations: 200,
            samples: 1000,
            alpha: 0.05,
            grid: EvalGrid::default(),
            seed: 1,
            grids: GridSpec::default(),
            orientation: CiOrientation::default(),
            keep_replicates: false,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.populations == 0 || self.samples == 0 {
            return Err(Error::invalid("B and R must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(format!(
                "alpha must be in (0, 1), got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Bootstrap summary of one estimator on the evaluation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorSummary {
    /// Estimate from the original sample.
    pub point: Vec<f64>,
    pub bias: Vec<f64>,
    pub variance: Vec<f64>,
    pub ci_lower: Vec<f64>,
    pub ci_upper: Vec<f64>,
}

/// Curves of one replicate sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateRecord {
    pub b: usize,
    pub r: usize,
    pub units: Vec<usize>,
    pub bandwidths: Bandwidths,
    pub km: Vec<f64>,
    pub model: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BootstrapResult {
    pub grid: Vec<f64>,
    pub km: EstimatorSummary,
    pub model: EstimatorSummary,
    pub bandwidths: Bandwidths,
    pub lambda: f64,
    pub populations: usize,
    pub samples: usize,
    pub effective_replicates: usize,
    pub dropped_replicates: usize,
    /// `F*b` on the grid, per population.
    pub population_cdfs: Vec<Vec<f64>>,
    /// Empty unless `keep_replicates` was set.
    pub replicates: Vec<ReplicateRecord>,
}

/// `[F - q(1 - a/2), F + q(a/2)]` (reflected) or `[F - q(1 - a/2),
/// F - q(a/2)]` (basic), where `q(a)` is the `ceil(a M)`-th smallest of the
/// `M` pooled deviations. Endpoints are clipped to [0, 1].
pub fn percentile_ci(
    point: f64,
    deviations: &[f64],
    alpha: f64,
    orientation: CiOrientation,
) -> Result<(f64, f64)> {
    if deviations.is_empty() {
        return Err(Error::Empty("no bootstrap deviations"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!(
            "alpha must be in (0, 1), got {alpha}"
        )));
    }
    let mut sorted = deviations.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q_lo = empirical_quantile_sorted(&sorted, alpha / 2.0);
    let q_hi = empirical_quantile_sorted(&sorted, 1.0 - alpha / 2.0);
    let (lower, upper) = match orientation {
        CiOrientation::Reflected => (point - q_hi, point + q_lo),
        CiOrientation::Basic => (point - q_hi, point - q_lo),
    };
    Ok((lower.clamp(0.0, 1.0), upper.clamp(0.0, 1.0)))
}

/// Bias, variance and intervals from replicate curves.
///
/// `estimates[b]` holds the surviving replicate curves of population `b`
/// and `population_cdfs[b]` its true CDF on the same grid.
pub fn summarize(
    point: &[f64],
    population_cdfs: &[Vec<f64>],
    estimates: &[Vec<&[f64]>],
    alpha: f64,
    orientation: CiOrientation,
) -> Result<EstimatorSummary> {
    let k = point.len();
    let total: usize = estimates.iter().map(Vec::len).sum();
    if total == 0 {
        return Err(Error::Empty("every bootstrap replicate failed"));
    }
    let m = total as f64;
    let mut bias = vec![0.0; k];
    let mut variance = vec![0.0; k];
    let mut deviations = vec![Vec::with_capacity(total); k];
    for (truth, reps) in population_cdfs.iter().zip(estimates) {
        if reps.is_empty() {
            continue;
        }
        for i in 0..k {
            let mean = reps.iter().map(|e| e[i]).sum::<f64>() / reps.len() as f64;
            for e in reps {
                let dev = e[i] - truth[i];
                bias[i] += dev;
                variance[i] += (e[i] - mean) * (e[i] - mean);
                deviations[i].push(dev);
            }
        }
    }
    let mut ci_lower = Vec::with_capacity(k);
    let mut ci_upper = Vec::with_capacity(k);
    for i in 0..k {
        bias[i] /= m;
        variance[i] /= m;
        let (lo, hi) = percentile_ci(point[i], &deviations[i], alpha, orientation)?;
        ci_lower.push(lo);
        ci_upper.push(hi);
    }
    Ok(EstimatorSummary {
        point: point.to_vec(),
        bias,
        variance,
        ci_lower,
        ci_upper,
    })
}

struct PopulationRun {
    truth: Vec<f64>,
    replicates: Vec<Option<ReplicateRecord>>,
}

/// Runs the whole procedure on the original sample `pop`.
pub fn run_bootstrap(pop: &PopulationFrame, config: &BootstrapConfig) -> Result<BootstrapResult> {
    config.validate()?;
    let fitted = fit_generators(pop, &config.grids)?;
    let grid = config.grid.resolve(pop.sample())?;
    let point_km: Vec<f64> = {
        let km = km_cdf(pop.sample())?;
        grid.iter().map(|&t| km.eval(t)).collect()
    };
    let point_m = ModelCdf::fit(pop, fitted.bandwidths)?.curve(&grid);

    let size = pop.size();
    let n = pop.sample_size();
    let runs = (0..config.populations)
        .into_par_iter()
        .map(|b| -> Result<PopulationRun> {
            let synth = synth_population_seeded(&fitted, config.seed, b)?;
            let truth = grid.iter().map(|&t| synth.true_cdf(t)).collect();
            let replicates = (0..config.samples)
                .into_par_iter()
                .map(|r| {
                    let units = replicate_units(config.seed, b, r, size, n);
                    replicate(&synth, &units, &grid).map(|(bandwidths, km, model)| {
                        ReplicateRecord {
                            b,
                            r,
                            units,
                            bandwidths,
                            km,
                            model,
                        }
                    })
                })
                .collect();
            Ok(PopulationRun { truth, replicates })
        })
        .collect::<Result<Vec<_>>>()?;

    let population_cdfs: Vec<Vec<f64>> = runs.iter().map(|p| p.truth.clone()).collect();
    let surviving: Vec<Vec<&ReplicateRecord>> = runs
        .iter()
        .map(|p| p.replicates.iter().flatten().collect())
        .collect();
    let effective: usize = surviving.iter().map(Vec::len).sum();
    let km_curves: Vec<Vec<&[f64]>> = surviving
        .iter()
        .map(|v| v.iter().map(|r| r.km.as_slice()).collect())
        .collect();
    let m_curves: Vec<Vec<&[f64]>> = surviving
        .iter()
        .map(|v| v.iter().map(|r| r.model.as_slice()).collect())
        .collect();
    let km = summarize(
        &point_km,
        &population_cdfs,
        &km_curves,
        config.alpha,
        config.orientation,
    )?;
    let model = summarize(
        &point_m,
        &population_cdfs,
        &m_curves,
        config.alpha,
        config.orientation,
    )?;

    let replicates = if config.keep_replicates {
        runs.into_iter()
            .flat_map(|p| p.replicates.into_iter().flatten())
            .collect()
    } else {
        Vec::new()
    };
    Ok(BootstrapResult {
        grid,
        km,
        model,
        bandwidths: fitted.bandwidths,
        lambda: fitted.lambda,
        populations: config.populations,
        samples: config.samples,
        effective_replicates: effective,
        dropped_replicates: config.populations * config.samples - effective,
        population_cdfs,
        replicates,
    })
}

/// Estimates from one replicate sample, `None` when the sample cannot
/// support the data-driven bandwidths.
fn replicate(
    synth: &SynthPopulation,
    units: &[usize],
    grid: &[f64],
) -> Option<(Bandwidths, Vec<f64>, Vec<f64>)> {
    let sample = synth.observe(units).ok()?;
    let bw = data_driven_bandwidths(&sample).ok()?;
    let pop = PopulationFrame::new(synth.x.clone(), units.to_vec(), sample).ok()?;
    let model = ModelCdf::fit(&pop, bw).ok()?;
    let km = model.km();
    Some((
        bw,
        grid.iter().map(|&t| km.eval(t)).collect(),
        model.curve(grid),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_deviation_interval() {
        let devs = [0.05; 10];
        let (lo, hi) = percentile_ci(0.5, &devs, 0.05, CiOrientation::Reflected).unwrap();
        assert!((lo - 0.45).abs() < 1e-15 && (hi - 0.55).abs() < 1e-15);
        let (lo, hi) = percentile_ci(0.5, &devs, 0.05, CiOrientation::Basic).unwrap();
        assert!((lo - 0.45).abs() < 1e-15 && (hi - 0.45).abs() < 1e-15);
    }

    #[test]
    fn zero_deviations_collapse() {
        for o in [CiOrientation::Reflected, CiOrientation::Basic] {
            assert_eq!(percentile_ci(0.3, &[0.0; 4], 0.1, o).unwrap(), (0.3, 0.3));
        }
    }

    #[test]
    fn symmetric_deviations_at_half_level() {
        // M = 4: q(0.25) is the 1st order statistic, q(0.75) the 3rd
        let devs = [0.1, -0.1, 0.1, -0.1];
        let (lo, hi) = percentile_ci(0.5, &devs, 0.5, CiOrientation::Reflected).unwrap();
        assert!((lo - 0.4).abs() < 1e-15);
        assert!((hi - 0.4).abs() < 1e-15);
        let (lo, hi) = percentile_ci(0.5, &devs, 0.5, CiOrientation::Basic).unwrap();
        assert!((lo - 0.4).abs() < 1e-15);
        assert!((hi - 0.6).abs() < 1e-15);
    }

    #[test]
    fn interval_is_clipped() {
        let (lo, hi) = percentile_ci(0.02, &[-0.3, 0.3], 0.5, CiOrientation::Basic).unwrap();
        assert_eq!(lo, 0.0);
        assert!((hi - 0.32).abs() < 1e-15);
    }

    #[test]
    fn empty_deviations_error() {
        assert!(percentile_ci(0.5, &[], 0.05, CiOrientation::Basic).is_err());
    }

    #[test]
    fn injected_truth_has_no_bias_or_variance() {
        let truth = vec![vec![0.1, 0.4, 0.9]];
        let est = vec![vec![truth[0].as_slice()]];
        let s = summarize(&[0.2, 0.5, 0.8], &truth, &est, 0.05, CiOrientation::Basic).unwrap();
        assert_eq!(s.bias, vec![0.0; 3]);
        assert_eq!(s.variance, vec![0.0; 3]);
        assert_eq!(s.ci_lower, vec![0.2, 0.5, 0.8]);
    }

    #[test]
    fn variance_ignores_constant_offsets() {
        let truth = vec![vec![0.5], vec![0.4]];
        let a = [[0.3], [0.6], [0.45], [0.5]];
        let shifted = a.map(|v| [v[0] + 0.1]);
        let est_a = vec![vec![&a[0][..], &a[1][..]], vec![&a[2][..], &a[3][..]]];
        let est_s = vec![
            vec![&shifted[0][..], &shifted[1][..]],
            vec![&shifted[2][..], &shifted[3][..]],
        ];
        let s1 = summarize(&[0.5], &truth, &est_a, 0.1, CiOrientation::Basic).unwrap();
        let s2 = summarize(&[0.5], &truth, &est_s, 0.1, CiOrientation::Basic).unwrap();
        assert!((s1.variance[0] - s2.variance[0]).abs() < 1e-15);
        assert!((s2.bias[0] - s1.bias[0] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn default_grid_follows_km_quantiles() {
        let s =
            CensoredSample::from_indicators(vec![1.0, 2.0, 3.0, 4.0], &[1, 0, 1, 1], vec![0.0; 4])
                .unwrap();
        let g = EvalGrid::Percentiles {
            lo: 0.1,
            hi: 0.9,
            points: 4,
        }
        .resolve(&s)
        .unwrap();
        assert_eq!(g, vec![1.0, 2.0, 3.0, 4.0]);
        assert!(EvalGrid::Percentiles {
            lo: 0.0,
            hi: 0.9,
            points: 4
        }
        .resolve(&s)
        .is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = BootstrapConfig::default();
        assert!(c.validate().is_ok());
        c.alpha = 1.0;
        assert!(c.validate().is_err());
        c.alpha = 0.05;
        c.samples = 0;
        assert!(c.validate().is_err());
    }
}
