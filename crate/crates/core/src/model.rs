//! The model-based finite-population CDF estimator.
//!
//! Sampled units contribute through the Kaplan-Meier estimate of the
//! sample CDF. Each non-sampled unit `j` contributes the predicted
//! probability `G(t - m(x_j))`, where `m` is the smoothed conditional median
//! and `G` the Kaplan-Meier CDF of the (censored) sample residuals:
//!
//! ```text
//! F_M(t) = ( n * F_KM(t) + sum_{j not sampled} G_KM(t - m(x_j)) ) / N
//! ```

use std::collections::HashSet;

use crate::bandwidth::Bandwidths;
use crate::cdf::{check_probability, Cdf, StepCdf};
use crate::conditional::BeranEstimator;
use crate::error::{Error, Result};
use crate::km::{km_cdf, product_limit};
use crate::sample::CensoredSample;

/// Covariates of every population unit, plus the sampled subset and its
/// observed data. Unit identifiers are 0-based positions in `x_all`.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationFrame {
    x_all: Vec<f64>,
    sampled: Vec<usize>,
    non_sampled: Vec<usize>,
    sample: CensoredSample,
}

impl PopulationFrame {
    /// `sampled[i]` is the population unit observed as `sample` unit `i`.
    pub fn new(x_all: Vec<f64>, sampled: Vec<usize>, sample: CensoredSample) -> Result<Self> {
        let size = x_all.len();
        if sampled.len() != sample.len() {
            return Err(Error::invalid(format!(
                "{} sample indices for {} sampled units",
                sampled.len(),
                sample.len()
            )));
        }
        if let Some(j) = x_all.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "population covariate {j} is not finite"
            )));
        }
        let mut seen = HashSet::with_capacity(sampled.len());
        for (i, &unit) in sampled.iter().enumerate() {
            if unit >= size {
                return Err(Error::invalid(format!(
                    "sample index {unit} outside a population of {size}"
                )));
            }
            if !seen.insert(unit) {
                return Err(Error::invalid(format!("unit {unit} sampled twice")));
            }
            if x_all[unit] != sample.x()[i] {
                return Err(Error::invalid(format!(
                    "covariate of sampled unit {unit} is {} in the sample but {} in the population",
                    sample.x()[i],
                    x_all[unit]
                )));
            }
        }
        let non_sampled = (0..size).filter(|u| !seen.contains(u)).collect();
        Ok(Self {
            x_all,
            sampled,
            non_sampled,
            sample,
        })
    }

    /// The whole population observed.
    pub fn census(sample: CensoredSample) -> Self {
        let x_all = sample.x().to_vec();
        let sampled = (0..sample.len()).collect();
        Self {
            x_all,
            sampled,
            non_sampled: Vec::new(),
            sample,
        }
    }

    /// Population size `N`.
    pub fn size(&self) -> usize {
        self.x_all.len()
    }

    /// Sample size `n`.
    pub fn sample_size(&self) -> usize {
        self.sampled.len()
    }

    pub fn x_all(&self) -> &[f64] {
        &self.x_all
    }

    pub fn sampled(&self) -> &[usize] {
        &self.sampled
    }

    pub fn non_sampled(&self) -> &[usize] {
        &self.non_sampled
    }

    pub fn sample(&self) -> &CensoredSample {
        &self.sample
    }
}

/// Residuals `y_j - m(x_j)` of the sampled units, censored whenever `y_j`
/// is.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualSet {
    pub eps: Vec<f64>,
    pub delta: Vec<bool>,
}

impl ResidualSet {
    pub fn len(&self) -> usize {
        self.eps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eps.is_empty()
    }

    pub fn uncensored_count(&self) -> usize {
        self.delta.iter().filter(|&&d| d).count()
    }

    /// Same residuals with position `j` removed.
    pub fn without(&self, j: usize) -> Self {
        let eps = self
            .eps
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != j)
            .map(|(_, &e)| e)
            .collect();
        let delta = self
            .delta
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != j)
            .map(|(_, &d)| d)
            .collect();
        Self { eps, delta }
    }
}

/// Residuals against the smoothed conditional median fitted on the sample
/// itself.
pub fn residuals(sample: &CensoredSample, bw: Bandwidths) -> Result<ResidualSet> {
    let medians = BeranEstimator::new(sample).medians(sample.x(), bw.h_x, bw.h_t)?;
    Ok(residuals_from_medians(sample, &medians))
}

pub(crate) fn residuals_from_medians(sample: &CensoredSample, medians: &[f64]) -> ResidualSet {
    ResidualSet {
        eps: sample.y().iter().zip(medians).map(|(y, m)| y - m).collect(),
        delta: sample.delta().to_vec(),
    }
}

/// Kaplan-Meier CDF of the residuals, on the whole real line.
pub fn residual_cdf(res: &ResidualSet) -> Result<StepCdf> {
    product_limit(&res.eps, &res.delta)
}

/// `F_M` fitted for one bandwidth pair. Holds the Kaplan-Meier term, the
/// residual CDF and the conditional medians of the non-sampled units, so
/// that evaluation on a grid costs no refitting.
#[derive(Debug, Clone)]
pub struct ModelCdf {
    population_size: usize,
    sample_size: usize,
    km: StepCdf,
    residual_cdf: StepCdf,
    /// `m(x_j)` for the non-sampled units, in population order.
    predicted: Vec<f64>,
    bandwidths: Option<Bandwidths>,
}

impl ModelCdf {
    pub fn fit(pop: &PopulationFrame, bw: Bandwidths) -> Result<Self> {
        let beran = BeranEstimator::new(pop.sample());
        let medians = beran.medians(pop.x_all(), bw.h_x, bw.h_t)?;
        let mut model = Self::from_medians(pop, &medians)?;
        model.bandwidths = Some(bw);
        Ok(model)
    }

    /// Assembles the estimator from conditional medians of every population
    /// unit (indexed like `pop.x_all()`).
    pub fn from_medians(pop: &PopulationFrame, medians: &[f64]) -> Result<Self> {
        if medians.len() != pop.size() {
            return Err(Error::invalid(
                "one conditional median per population unit is required",
            ));
        }
        let sample = pop.sample();
        let sample_medians: Vec<f64> = pop.sampled().iter().map(|&u| medians[u]).collect();
        let res = residuals_from_medians(sample, &sample_medians);
        Ok(Self {
            population_size: pop.size(),
            sample_size: pop.sample_size(),
            km: km_cdf(sample)?,
            residual_cdf: residual_cdf(&res)?,
            predicted: pop.non_sampled().iter().map(|&u| medians[u]).collect(),
            bandwidths: None,
        })
    }

    pub fn km(&self) -> &StepCdf {
        &self.km
    }

    pub fn residual_cdf(&self) -> &StepCdf {
        &self.residual_cdf
    }

    pub fn predicted_medians(&self) -> &[f64] {
        &self.predicted
    }

    pub fn bandwidths(&self) -> Option<Bandwidths> {
        self.bandwidths
    }

    pub fn curve(&self, grid: &[f64]) -> Vec<f64> {
        grid.iter().map(|&t| self.eval(t)).collect()
    }

    /// Point from which both terms equal 1.
    pub fn terminal_time(&self) -> f64 {
        let g_end = self.residual_cdf.terminal_time();
        self.predicted
            .iter()
            .fold(self.km.terminal_time(), |acc, &m| acc.max(m + g_end))
    }

    /// Every location where the estimator can jump, sorted.
    fn breakpoints(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self.km.times().to_vec();
        for &m in &self.predicted {
            pts.extend(self.residual_cdf.times().iter().map(|&g| m + g));
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }
}

impl Cdf for ModelCdf {
    fn eval(&self, t: f64) -> f64 {
        let km = self.km.eval(t);
        if self.predicted.is_empty() {
            return km;
        }
        let predicted: f64 = self
            .predicted
            .iter()
            .map(|&m| self.residual_cdf.eval_shifted(t, m))
            .sum();
        ((self.sample_size as f64 * km + predicted) / self.population_size as f64).min(1.0)
    }

    fn quantile(&self, p: f64) -> Result<f64> {
        check_probability(p)?;
        if self.predicted.is_empty() {
            return self.km.quantile(p);
        }
        let pts = self.breakpoints();
        let idx = pts.partition_point(|&t| self.eval(t) < p);
        Ok(match pts.get(idx) {
            Some(&t) => t,
            None => self.terminal_time(),
        })
    }
}

/// `F_M(t)` for a single `t`.
pub fn f_m(t: f64, pop: &PopulationFrame, bw: Bandwidths) -> Result<f64> {
    Ok(ModelCdf::fit(pop, bw)?.eval(t))
}

/// `F_M` on a grid of times.
pub fn f_m_curve(grid: &[f64], pop: &PopulationFrame, bw: Bandwidths) -> Result<Vec<f64>> {
    Ok(ModelCdf::fit(pop, bw)?.curve(grid))
}

/// Generalized inverse of `F_M`.
pub fn f_m_quantile(p: f64, pop: &PopulationFrame, bw: Bandwidths) -> Result<f64> {
    ModelCdf::fit(pop, bw)?.quantile(p)
}
