use fpcdf::bootstrap::{
    censoring_cdf, fit_generators, synth_population, synth_population_seeded, FittedModel, GridSpec,
};
use fpcdf::model::ResidualSet;
use fpcdf::rng::substream;
use fpcdf::simulation::{
    gen_population, run_design_based, run_model_based, DesignConfig, Pilot, SimScenario,
};
use fpcdf::{Cdf, CensoredSample, KernelSpec, PopulationFrame, SmoothedCdf, StepCdf};

fn constant_median_sample() -> CensoredSample {
    let n = 12;
    CensoredSample::new(
        vec![2.0; n],
        vec![true; n],
        (0..n).map(|j| 1.0 + j as f64 * 0.25).collect(),
    )
    .unwrap()
}

#[test]
fn residual_generator_of_noise_free_sample_centers_at_zero() {
    let frame = PopulationFrame::census(constant_median_sample());
    let grid = fpcdf::BandwidthGrid::new(vec![0.5, 1.0], vec![0.5, 1.5], vec![0.05, 0.2]).unwrap();
    let fitted = fit_generators(&frame, &GridSpec::Explicit(grid)).unwrap();
    assert!(fitted.error_cdf.quantile(0.5).unwrap().abs() < 1e-3);
    let masses: f64 = fitted.error_cdf.jumps().map(|(_, m)| m).sum();
    assert!((masses - 1.0).abs() < 1e-12);
    let (lo, hi) = fitted.error_cdf.support();
    let eps_min = fitted
        .residuals
        .eps
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    assert_eq!(lo, eps_min - fitted.lambda);
    assert_eq!(fitted.error_cdf.eval(lo - 1e-9), 0.0);
    assert_eq!(fitted.error_cdf.eval(hi), 1.0);
}

#[test]
fn degenerate_generators_reproduce_the_medians() {
    let medians = vec![1.0, 2.5, 4.0, 0.5];
    let model = FittedModel {
        bandwidths: fpcdf::Bandwidths::new(1.0, 1.0).unwrap(),
        lambda: 1e-12,
        x_all: vec![0.0, 1.0, 2.0, 3.0],
        medians: medians.clone(),
        residuals: ResidualSet {
            eps: vec![0.0],
            delta: vec![true],
        },
        error_cdf: SmoothedCdf::from_step(
            &StepCdf::point_mass(0.0),
            KernelSpec::triweight(1e-12).unwrap(),
        ),
        censoring_cdf: Some(SmoothedCdf::from_step(
            &StepCdf::point_mass(100.0),
            KernelSpec::triweight(1.0).unwrap(),
        )),
    };
    let pop = synth_population(&model, &mut substream(1, &[])).unwrap();
    assert!(pop.delta.iter().all(|&d| d));
    for (y, m) in pop.y.iter().zip(&medians) {
        assert!((y - m).abs() < 1e-11);
    }
}

fn reference_frame(seed: u64) -> PopulationFrame {
    let mut rng = substream(seed, &[]);
    let pilot = Pilot::new(0.1, 100_000, seed);
    let bound = pilot.censoring_bound(0.25).unwrap();
    let pop = gen_population(400, 0.1, bound, &mut rng);
    let mut units = rand::seq::index::sample(&mut rng, 400, 40).into_vec();
    units.sort();
    PopulationFrame::new(pop.x.clone(), units.clone(), pop.observe(&units).unwrap()).unwrap()
}

#[test]
fn synthesized_censoring_rate_matches_fitted_distributions() {
    let frame = reference_frame(31);
    let mut fitted = fit_generators(&frame, &GridSpec::default()).unwrap();
    // spread 10,000 units over the fitted medians
    let base_x = fitted.x_all.clone();
    let base_m = fitted.medians.clone();
    fitted.x_all = (0..10_000).map(|k| base_x[k % base_x.len()]).collect();
    fitted.medians = (0..10_000).map(|k| base_m[k % base_m.len()]).collect();
    let pop = synth_population(&fitted, &mut substream(8, &[])).unwrap();

    // P(c < m + eps) = int G_c(m + e) dG(e), by the midpoint rule
    let g = &fitted.error_cdf;
    let gc = fitted.censoring_cdf.as_ref().unwrap();
    let (lo, hi) = g.support();
    let steps = 4000;
    let width = (hi - lo) / steps as f64;
    let expected = base_m
        .iter()
        .map(|&m| {
            (0..steps)
                .map(|i| {
                    let e = lo + (i as f64 + 0.5) * width;
                    // the censoring CDF is continuous, so P(c < s) = G_c(s)
                    gc.eval(m + e) * g.density(e) * width
                })
                .sum::<f64>()
        })
        .sum::<f64>()
        / base_m.len() as f64;
    let se = (expected * (1.0 - expected) / 10_000.0).sqrt();
    assert!(
        (pop.censoring_rate() - expected).abs() < 4.0 * se + 1e-3,
        "{} vs {expected}",
        pop.censoring_rate()
    );
}

#[test]
fn synthesized_population_is_reproducible() {
    let frame = reference_frame(32);
    let fitted = fit_generators(&frame, &GridSpec::default()).unwrap();
    let a = synth_population_seeded(&fitted, 5, 3).unwrap();
    let b = synth_population_seeded(&fitted, 5, 3).unwrap();
    let c = synth_population_seeded(&fitted, 5, 4).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.t, c.t);
}

#[test]
fn no_censored_units_means_no_synthetic_censoring() {
    let s = CensoredSample::from_indicators(vec![1.0, 2.0, 3.0], &[1, 1, 1], vec![1.0, 2.0, 3.0])
        .unwrap();
    assert!(censoring_cdf(&s).unwrap().is_none());
}

#[test]
fn calibrated_bound_hits_the_rate_on_a_fresh_population() {
    let pilot = Pilot::new(0.5, 1_000_000, 3);
    let mut last = f64::INFINITY;
    for (i, tau) in [0.1, 0.25, 0.5].into_iter().enumerate() {
        let c = pilot.censoring_bound(tau).unwrap().unwrap();
        assert!(c < last);
        last = c;
        let pop = gen_population(100_000, 0.5, Some(c), &mut substream(77, &[i as u64]));
        assert!(
            (pop.censoring_rate() - tau).abs() < 0.01,
            "tau {tau}: {}",
            pop.censoring_rate()
        );
    }
    let pop = gen_population(
        1000,
        0.5,
        pilot.censoring_bound(0.0).unwrap(),
        &mut substream(1, &[]),
    );
    assert!(pop.delta.iter().all(|&d| d));
}

#[test]
fn census_without_censoring_has_no_error() {
    let scenario = SimScenario {
        population: 25,
        sample: 25,
        iterations: 3,
        tau: 0.0,
        pilot_size: 10_000,
        fractions: vec![0.3, 1.0],
        ..Default::default()
    };
    let table = run_model_based(&scenario).unwrap();
    for m in [&table.km, &table.model] {
        assert!(m.bias.iter().chain(&m.mse).all(|&v| v == 0.0));
    }
}

#[test]
fn design_census_sample_reproduces_target() {
    let pop = gen_population(30, 0.5, Some(0.3), &mut substream(2, &[]))
        .as_sample()
        .unwrap();
    let config = DesignConfig {
        sample: 30,
        iterations: 2,
        fractions: vec![0.5, 1.0],
        ..Default::default()
    };
    let table = run_design_based(&pop, &config).unwrap();
    assert_eq!(table.km.mase, 0.0);
    assert_eq!(table.model.mase, 0.0);
    for r in &table.records {
        assert_eq!(r.km, r.truth);
    }
}

#[test]
fn model_run_is_deterministic_across_thread_counts() {
    let scenario = SimScenario {
        population: 60,
        sample: 12,
        iterations: 6,
        tau: 0.25,
        pilot_size: 20_000,
        fractions: vec![0.2, 0.6, 1.0],
        seed: 17,
        ..Default::default()
    };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_model_based(&scenario).unwrap())
    };
    assert_eq!(run(1), run(3));
}
