//! Nonparametric model-based estimation of the distribution function of a
//! right-censored duration in a finite population.
//!
//! The population CDF is split into a sampled part, estimated with the
//! Kaplan-Meier estimator, and a non-sampled part, predicted from a
//! covariate known for every unit through a censored median-regression
//! model `t = m(x) + eps`. The conditional median `m` comes from a
//! time-smoothed generalized (Beran) Kaplan-Meier estimator.
//!
//! Around the estimator the crate provides bandwidth selection, a
//! censoring-adapted residual bootstrap for the bias and variance of the
//! prediction error, and Monte Carlo harnesses (model-based and
//! design-based).

pub mod bandwidth;
pub mod bootstrap;
pub mod cdf;
pub mod cli;
pub mod conditional;
pub mod config;
pub mod error;
pub mod io;
pub mod kernel;
pub mod km;
pub mod model;
pub mod rng;
pub mod sample;
pub mod simulation;
pub mod stats;

pub use bandwidth::{BandwidthGrid, Bandwidths};
pub use cdf::{quantile, Cdf, SmoothedCdf, StepCdf};
pub use conditional::{beran_cdf, conditional_median, nw_weights, smooth_cdf, BeranEstimator};
pub use error::{Error, Result};
pub use kernel::{Kernel, KernelSpec};
pub use km::{km_cdf, reverse_km_cdf, weighted_km_cdf};
pub use model::{f_m, f_m_curve, f_m_quantile, ModelCdf, PopulationFrame, ResidualSet};
pub use sample::CensoredSample;
