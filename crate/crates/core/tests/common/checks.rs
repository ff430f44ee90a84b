//! Fixture comparisons shared by the oracle tests and the acceptance report.
//! Each returns the largest absolute discrepancy against the literal loop.

use super::*;
use fpcdf::bandwidth::{cv_lambda_table, cv_median_table, DATA_DRIVEN_FRACTION};
use fpcdf::bootstrap::{
    fit_generators, replicate_units, run_bootstrap, synth_population_seeded, BootstrapConfig,
    EvalGrid, GridSpec,
};
use fpcdf::model::{PopulationFrame, ResidualSet};
use fpcdf::rng::substream;
use fpcdf::simulation::gen_population;

pub fn eight_units() -> CensoredSample {
    CensoredSample::from_indicators(
        vec![1.3, 2.9, 0.7, 4.1, 3.3, 2.2, 5.0, 1.8],
        &[1, 1, 0, 1, 1, 0, 1, 1],
        vec![1.2, 2.5, 1.9, 3.7, 3.1, 2.8, 3.9, 1.5],
    )
    .unwrap()
}

pub fn cv_median_discrepancy() -> f64 {
    let s = eight_units();
    let h_t = [0.43, 1.3, 3.1];
    let h_x = [0.27, 0.81, 2.2];
    let table = cv_median_table(&s, &h_t, &h_x).unwrap();
    let mut worst = 0.0f64;
    for (i, &ht) in h_t.iter().enumerate() {
        for (k, &hx) in h_x.iter().enumerate() {
            worst = worst.max((table.values[i][k] - cv_median(&s, ht, hx)).abs());
        }
    }
    worst
}

pub fn cv_lambda_discrepancy() -> f64 {
    let res = ResidualSet {
        eps: vec![-0.8, 0.35, -0.1, 1.2, 0.05, -0.45],
        delta: vec![true, true, false, true, true, false],
    };
    let lambdas = [0.1, 0.4, 0.9, 2.0];
    let table = cv_lambda_table(&res, &lambdas).unwrap();
    table
        .iter()
        .zip(&lambdas)
        .map(|(v, &l)| (v - cv_lambda(&res.eps, &res.delta, l)).abs())
        .fold(0.0, f64::max)
}

/// Small AFT population with 25% censoring and a sample of its units.
pub fn micro_frame(seed: u64, size: usize, n: usize) -> PopulationFrame {
    let mut rng = substream(seed, &[]);
    let pop = gen_population(size, 0.1, Some(0.18), &mut rng);
    let mut units = rand::seq::index::sample(&mut rng, size, n).into_vec();
    units.sort();
    PopulationFrame::new(pop.x.clone(), units.clone(), pop.observe(&units).unwrap()).unwrap()
}

/// B = 2, R = 2 bootstrap against an explicit double loop. Returns the
/// discrepancy and the number of effective replicates.
pub fn micro_bootstrap_discrepancy() -> (f64, usize) {
    let frame = micro_frame(104, 40, 12);
    let grid = vec![0.05, 0.07, 0.09, 0.11, 0.14];
    let config = BootstrapConfig {
        populations: 2,
        samples: 2,
        seed: 9,
        grid: EvalGrid::Explicit(grid.clone()),
        grids: GridSpec::Relative(vec![0.2, 0.5, 1.0]),
        keep_replicates: true,
        ..Default::default()
    };
    let result = run_bootstrap(&frame, &config).unwrap();
    let fitted = fit_generators(&frame, &config.grids).unwrap();
    let (n, size) = (frame.sample_size(), frame.size());

    let mut bias = [vec![0.0; grid.len()], vec![0.0; grid.len()]];
    let mut var = [vec![0.0; grid.len()], vec![0.0; grid.len()]];
    let mut count = 0.0;
    for b in 0..2 {
        let synth = synth_population_seeded(&fitted, 9, b).unwrap();
        let truth: Vec<f64> = grid
            .iter()
            .map(|&t| synth.t.iter().filter(|&&v| v <= t).count() as f64 / size as f64)
            .collect();
        let mut curves = [Vec::new(), Vec::new()];
        for r in 0..2 {
            let units = replicate_units(9, b, r, size, n);
            let s = synth.observe(&units).unwrap();
            let range = |v: &[f64]| {
                v.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                    - v.iter().cloned().fold(f64::INFINITY, f64::min)
            };
            let (h_t, h_x) = (
                DATA_DRIVEN_FRACTION * range(s.y()),
                DATA_DRIVEN_FRACTION * range(s.x()),
            );
            let medians: Vec<f64> = synth.x.iter().map(|&x| median(x, &s, h_x, h_t)).collect();
            curves[0].push(
                grid.iter()
                    .map(|&t| km(s.y(), s.delta(), t))
                    .collect::<Vec<_>>(),
            );
            curves[1].push(
                grid.iter()
                    .map(|&t| f_m_from_medians(size, &units, &s, &medians, t))
                    .collect::<Vec<_>>(),
            );
            count += 1.0;
        }
        for e in 0..2 {
            for i in 0..grid.len() {
                let mean = (curves[e][0][i] + curves[e][1][i]) / 2.0;
                for c in &curves[e] {
                    bias[e][i] += c[i] - truth[i];
                    var[e][i] += (c[i] - mean) * (c[i] - mean);
                }
            }
        }
    }
    let mut worst = 0.0f64;
    for i in 0..grid.len() {
        worst = worst
            .max((result.km.bias[i] - bias[0][i] / count).abs())
            .max((result.km.variance[i] - var[0][i] / count).abs())
            .max((result.model.bias[i] - bias[1][i] / count).abs())
            .max((result.model.variance[i] - var[1][i] / count).abs());
    }
    (worst, result.effective_replicates)
}
