//! Bandwidth selection: censoring-adapted leave-one-out cross-validation
//! for the conditional-median bandwidths, cross-validation for the
//! residual-smoothing bandwidth, the 30%-of-range rule, and the ASE oracle
//! used in simulations.
//!
//! Every selector scans its grid `h_T`-major (then `h_X`) and keeps the
//! first minimum, so results are deterministic.

use rayon::prelude::*;

use crate::cdf::{Cdf, SmoothedCdf};
use crate::conditional::BeranEstimator;
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::km::product_limit;
use crate::model::{ModelCdf, PopulationFrame, ResidualSet};
use crate::sample::{min_max, CensoredSample};
use crate::stats::linspace;

/// Fractions of the data range used for default grids.
pub const DEFAULT_FRACTIONS: [f64; 10] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

/// Fraction of the data range used by the quick data-driven rule.
pub const DATA_DRIVEN_FRACTION: f64 = 0.3;

/// Number of residual values at which the `lambda` criterion is evaluated.
pub const LAMBDA_CV_POINTS: usize = 30;

/// Time-axis and covariate-axis bandwidths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bandwidths {
    pub h_t: f64,
    pub h_x: f64,
}

impl Bandwidths {
    pub fn new(h_t: f64, h_x: f64) -> Result<Self> {
        for (name, h) in [("h_T", h_t), ("h_X", h_x)] {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {h}")));
            }
        }
        Ok(Self { h_t, h_x })
    }
}

/// Candidate bandwidths for each smoothing parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthGrid {
    pub h_t: Vec<f64>,
    pub h_x: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl BandwidthGrid {
    pub fn new(h_t: Vec<f64>, h_x: Vec<f64>, lambda: Vec<f64>) -> Result<Self> {
        for (name, v) in [("h_T", &h_t), ("h_X", &h_x), ("lambda", &lambda)] {
            check_candidates(name, v)?;
        }
        Ok(Self { h_t, h_x, lambda })
    }

    /// Grid built from fractions of the sample's time range, covariate range
    /// and residual range.
    pub fn relative(sample: &CensoredSample, res: &ResidualSet, fractions: &[f64]) -> Result<Self> {
        let (h_t, h_x) = median_candidates(sample, fractions)?;
        let lambda = lambda_candidates(res, fractions)?;
        Self::new(h_t, h_x, lambda)
    }
}

fn check_candidates(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::invalid(format!("{name} grid is empty")));
    }
    if v.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
        return Err(Error::invalid(format!(
            "{name} grid has a non-positive entry"
        )));
    }
    Ok(())
}

fn scaled_range(name: &str, values: &[f64], fractions: &[f64]) -> Result<Vec<f64>> {
    let (lo, hi) = min_max(values);
    let range = hi - lo;
    if !(range > 0.0) {
        return Err(Error::degenerate(format!("{name} has zero range")));
    }
    let grid: Vec<f64> = fractions.iter().map(|f| f * range).collect();
    check_candidates(name, &grid)?;
    Ok(grid)
}

/// `(h_T candidates, h_X candidates)` as fractions of the observed ranges.
pub fn median_candidates(
    sample: &CensoredSample,
    fractions: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    Ok((
        scaled_range("observed times", sample.y(), fractions)?,
        scaled_range("covariate", sample.x(), fractions)?,
    ))
}

/// `lambda` candidates as fractions of the residual range.
pub fn lambda_candidates(res: &ResidualSet, fractions: &[f64]) -> Result<Vec<f64>> {
    scaled_range("residuals", &res.eps, fractions)
}

/// `h_T` = 30% of the range of `y`, `h_X` = 30% of the range of `x`.
pub fn data_driven_bandwidths(sample: &CensoredSample) -> Result<Bandwidths> {
    if sample.len() < 2 {
        return Err(Error::degenerate(
            "data-driven bandwidths need at least two units",
        ));
    }
    let (ylo, yhi) = sample.y_range();
    let (xlo, xhi) = sample.x_range();
    if !(yhi > ylo) {
        return Err(Error::degenerate("observed times have zero range"));
    }
    if !(xhi > xlo) {
        return Err(Error::degenerate("covariate has zero range"));
    }
    Bandwidths::new(
        DATA_DRIVEN_FRACTION * (yhi - ylo),
        DATA_DRIVEN_FRACTION * (xhi - xlo),
    )
}

/// Criterion values over a two-way grid, `values[i_t][i_x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CriterionTable {
    pub h_t: Vec<f64>,
    pub h_x: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl CriterionTable {
    /// First minimum in `h_T`-major order.
    pub fn argmin(&self) -> (usize, usize) {
        let mut best = (0, 0);
        let mut best_v = f64::INFINITY;
        for (i, row) in self.values.iter().enumerate() {
            for (k, &v) in row.iter().enumerate() {
                if v < best_v {
                    best_v = v;
                    best = (i, k);
                }
            }
        }
        best
    }

    pub fn best(&self) -> (Bandwidths, f64) {
        let (i, k) = self.argmin();
        (
            Bandwidths {
                h_t: self.h_t[i],
                h_x: self.h_x[k],
            },
            self.values[i][k],
        )
    }
}

/// Leave-one-out criterion `sum_{j uncensored} |y_j - m_{-j}(x_j)|` over
/// every `(h_T, h_X)` pair.
pub fn cv_median_table(
    sample: &CensoredSample,
    h_t: &[f64],
    h_x: &[f64],
) -> Result<CriterionTable> {
    check_candidates("h_T", h_t)?;
    check_candidates("h_X", h_x)?;
    if sample.uncensored_count() < 2 {
        return Err(Error::degenerate(
            "cross-validation needs at least two uncensored units",
        ));
    }
    let time_kernels = h_t
        .iter()
        .map(|&h| KernelSpec::triweight(h))
        .collect::<Result<Vec<_>>>()?;
    let held_out: Vec<usize> = (0..sample.len()).filter(|&j| sample.delta()[j]).collect();
    let terms = held_out
        .par_iter()
        .map(|&j| -> Result<Vec<Vec<f64>>> {
            let rest = sample.without_unit(j).expect("at least two units");
            let beran = BeranEstimator::new(&rest);
            let (xj, yj) = (sample.x()[j], sample.y()[j]);
            let mut out = vec![vec![0.0; h_x.len()]; h_t.len()];
            for (k, &hx) in h_x.iter().enumerate() {
                let step = beran.cdf_at(xj, hx)?;
                for (i, &kern) in time_kernels.iter().enumerate() {
                    let m = SmoothedCdf::from_step(&step, kern).quantile(0.5)?;
                    out[i][k] = (yj - m).abs();
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut values = vec![vec![0.0; h_x.len()]; h_t.len()];
    for term in &terms {
        for (row, trow) in values.iter_mut().zip(term) {
            for (v, t) in row.iter_mut().zip(trow) {
                *v += t;
            }
        }
    }
    Ok(CriterionTable {
        h_t: h_t.to_vec(),
        h_x: h_x.to_vec(),
        values,
    })
}

/// `(h_T, h_X)` minimizing the leave-one-out absolute-error criterion.
pub fn cv_median_bandwidths(sample: &CensoredSample, grid: &BandwidthGrid) -> Result<Bandwidths> {
    Ok(cv_median_table(sample, &grid.h_t, &grid.h_x)?.best().0)
}

/// The 30 evaluation points of the `lambda` criterion: equally spaced from
/// the smallest to the largest residual, both included.
pub fn lambda_cv_points(res: &ResidualSet) -> Vec<f64> {
    let (lo, hi) = min_max(&res.eps);
    linspace(lo, hi, LAMBDA_CV_POINTS)
}

/// `sum_u sum_{j uncensored} (1(eps_j <= u) - G_{lambda,-j}(u))^2` for each
/// candidate `lambda`.
pub fn cv_lambda_table(res: &ResidualSet, lambdas: &[f64]) -> Result<Vec<f64>> {
    check_candidates("lambda", lambdas)?;
    if res.uncensored_count() < 2 {
        return Err(Error::degenerate(
            "lambda cross-validation needs at least two uncensored residuals",
        ));
    }
    let points = lambda_cv_points(res);
    let mut table = vec![0.0; lambdas.len()];
    for j in (0..res.len()).filter(|&j| res.delta[j]) {
        let rest = res.without(j);
        let step = product_limit(&rest.eps, &rest.delta)?;
        let ej = res.eps[j];
        for (slot, &lambda) in table.iter_mut().zip(lambdas) {
            let g = SmoothedCdf::from_step(&step, KernelSpec::triweight(lambda)?);
            *slot += points
                .iter()
                .map(|&u| {
                    let ind = if ej <= u { 1.0 } else { 0.0 };
                    let d = ind - g.eval(u);
                    d * d
                })
                .sum::<f64>();
        }
    }
    Ok(table)
}

/// `lambda_0`, the first minimizer of the `lambda` criterion.
pub fn cv_lambda(res: &ResidualSet, grid: &BandwidthGrid) -> Result<f64> {
    let table = cv_lambda_table(res, &grid.lambda)?;
    Ok(grid.lambda[first_argmin(&table)])
}

pub(crate) fn first_argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x < v[best] {
            best = i;
        }
    }
    best
}

/// Outcome of the ASE-oracle search.
#[derive(Debug, Clone)]
pub struct AseSelection {
    pub bandwidths: Bandwidths,
    pub ase: f64,
    pub table: CriterionTable,
    /// `F_M` refitted at the selected pair.
    pub model: ModelCdf,
}

/// Bandwidth pair minimizing the averaged squared error of `F_M` against
/// known target values on `eval_grid`.
pub fn ase_oracle_bandwidths(
    pop: &PopulationFrame,
    h_t: &[f64],
    h_x: &[f64],
    target: &[f64],
    eval_grid: &[f64],
) -> Result<AseSelection> {
    check_candidates("h_T", h_t)?;
    check_candidates("h_X", h_x)?;
    if target.len() != eval_grid.len() || eval_grid.is_empty() {
        return Err(Error::invalid(
            "target values must match a nonempty evaluation grid",
        ));
    }
    let beran = BeranEstimator::new(pop.sample());
    let time_kernels = h_t
        .iter()
        .map(|&h| KernelSpec::triweight(h))
        .collect::<Result<Vec<_>>>()?;
    let k = eval_grid.len() as f64;
    let mut values = vec![vec![0.0; h_x.len()]; h_t.len()];
    for (kx, &hx) in h_x.iter().enumerate() {
        let steps = pop
            .x_all()
            .iter()
            .map(|&x0| beran.cdf_at(x0, hx))
            .collect::<Result<Vec<_>>>()?;
        for (it, &kern) in time_kernels.iter().enumerate() {
            let medians = steps
                .iter()
                .map(|s| SmoothedCdf::from_step(s, kern).quantile(0.5))
                .collect::<Result<Vec<_>>>()?;
            let model = ModelCdf::from_medians(pop, &medians)?;
            values[it][kx] = eval_grid
                .iter()
                .zip(target)
                .map(|(&t, &f)| {
                    let d = model.eval(t) - f;
                    d * d
                })
                .sum::<f64>()
                / k;
        }
    }
    let table = CriterionTable {
        h_t: h_t.to_vec(),
        h_x: h_x.to_vec(),
        values,
    };
    let (bandwidths, ase) = table.best();
    let model = ModelCdf::fit(pop, bandwidths)?;
    Ok(AseSelection {
        bandwidths,
        ase,
        table,
        model,
    })
}
