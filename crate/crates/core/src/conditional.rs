//! Conditional distribution of the duration given the covariate:
//! Nadaraya-Watson weights, the generalized (Beran) product-limit
//! estimator, its integrated-kernel smoothing in time, and the conditional
//! median obtained by inverting the smoothed estimator.

use crate::cdf::{Cdf, SmoothedCdf, StepCdf};
use crate::error::{Error, Result};
use crate::kernel::{Kernel, KernelSpec};
use crate::km::RiskGroups;
use crate::sample::CensoredSample;

/// Normalized kernel weights of the sample units around `x0`.
///
/// When no sample covariate falls inside the kernel window, the unit
/// nearest to `x0` gets weight 1 (ties go to the smaller index).
pub fn nw_weights(x0: f64, xs: &[f64], kernel: KernelSpec) -> Vec<f64> {
    let mut w: Vec<f64> = xs.iter().map(|&x| kernel.weight(x0, x)).collect();
    let total: f64 = w.iter().sum();
    if total > 0.0 {
        for v in &mut w {
            *v /= total;
        }
        return w;
    }
    let nearest = xs
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(best, dist), (j, &x)| {
            let d = (x0 - x).abs();
            if d < dist {
                (j, d)
            } else {
                (best, dist)
            }
        })
        .0;
    w.iter_mut().for_each(|v| *v = 0.0);
    if !w.is_empty() {
        w[nearest] = 1.0;
    }
    w
}

/// Generalized Kaplan-Meier estimator bound to one sample; the time
/// ordering is computed once and shared by every covariate value.
#[derive(Debug, Clone)]
pub struct BeranEstimator {
    groups: RiskGroups,
    x: Vec<f64>,
    kernel: Kernel,
}

impl BeranEstimator {
    pub fn new(sample: &CensoredSample) -> Self {
        Self::with_kernel(sample, Kernel::Triweight)
    }

    pub fn with_kernel(sample: &CensoredSample, kernel: Kernel) -> Self {
        Self {
            groups: RiskGroups::new(sample.y(), sample.delta()),
            x: sample.x().to_vec(),
            kernel,
        }
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    /// Conditional step CDF at covariate value `x0`.
    pub fn cdf_at(&self, x0: f64, h_x: f64) -> Result<StepCdf> {
        let spec = KernelSpec::new(self.kernel, h_x)?;
        let w = nw_weights(x0, &self.x, spec);
        Ok(self.groups.product_limit(|u| w[u]))
    }

    /// Conditional CDF smoothed in time with bandwidth `h_t`.
    pub fn smoothed_at(&self, x0: f64, h_x: f64, h_t: f64) -> Result<SmoothedCdf> {
        let step = self.cdf_at(x0, h_x)?;
        Ok(SmoothedCdf::from_step(
            &step,
            KernelSpec::new(self.kernel, h_t)?,
        ))
    }

    /// Conditional median `F_SGKM^{-1}(0.5 | x0)`.
    pub fn median_at(&self, x0: f64, h_x: f64, h_t: f64) -> Result<f64> {
        self.smoothed_at(x0, h_x, h_t)?.quantile(0.5)
    }

    /// Conditional medians at many covariate values, sharing the step CDF
    /// computation across time bandwidths.
    pub fn medians(&self, xs: &[f64], h_x: f64, h_t: f64) -> Result<Vec<f64>> {
        let time_kernel = KernelSpec::new(self.kernel, h_t)?;
        xs.iter()
            .map(|&x0| {
                let step = self.cdf_at(x0, h_x)?;
                SmoothedCdf::from_step(&step, time_kernel).quantile(0.5)
            })
            .collect()
    }
}

/// Generalized Kaplan-Meier estimate of the CDF of the duration given
/// `X = x0`.
pub fn beran_cdf(x0: f64, sample: &CensoredSample, h_x: f64) -> Result<StepCdf> {
    BeranEstimator::new(sample).cdf_at(x0, h_x)
}

/// Integrated-kernel smoothing of a step CDF in time. The mass sits at the
/// step's event locations, with the terminal point carrying what is left
/// to reach 1.
pub fn smooth_cdf(step: &StepCdf, kernel: KernelSpec) -> SmoothedCdf {
    SmoothedCdf::from_step(step, kernel)
}

/// Smoothed conditional median of the duration given `X = x0`.
pub fn conditional_median(x0: f64, sample: &CensoredSample, h_x: f64, h_t: f64) -> Result<f64> {
    if !(h_t > 0.0) {
        return Err(Error::invalid(format!("h_T must be positive, got {h_t}")));
    }
    BeranEstimator::new(sample).median_at(x0, h_x, h_t)
}
