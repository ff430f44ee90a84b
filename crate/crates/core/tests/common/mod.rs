//! Brute-force reference implementations written straight from the
//! defining sums and products. They share no code with the library beyond
//! plain data types.

#![allow(dead_code)]

pub mod checks;

use fpcdf::CensoredSample;
use rand::Rng;

pub fn triweight(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        35.0 / 32.0 * (1.0 - u * u).powi(3)
    }
}

/// Antiderivative of the triweight kernel from the expanded polynomial
/// `1 - 3u^2 + 3u^4 - u^6`.
pub fn triweight_cdf(u: f64) -> f64 {
    if u <= -1.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    let p = |v: f64| v - v.powi(3) + 0.6 * v.powi(5) - v.powi(7) / 7.0;
    35.0 / 32.0 * (p(u) - p(-1.0))
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

/// Weighted product-limit CDF at `t`: `1 - prod (1 - d_w(s) / R_w(s))` over
/// distinct event times `s <= t`, forced to 1 from the largest observation
/// on.
pub fn weighted_km(y: &[f64], delta: &[bool], w: &[f64], t: f64) -> f64 {
    if t >= max_of(y) {
        return 1.0;
    }
    let mut times: Vec<f64> = (0..y.len())
        .filter(|&j| delta[j] && y[j] <= t)
        .map(|j| y[j])
        .collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut surv = 1.0;
    for s in times {
        let d: f64 = (0..y.len())
            .filter(|&j| delta[j] && y[j] == s)
            .map(|j| w[j])
            .sum();
        let r: f64 = (0..y.len()).filter(|&j| y[j] >= s).map(|j| w[j]).sum();
        if r > 0.0 {
            surv *= 1.0 - d / r;
        }
    }
    1.0 - surv
}

pub fn km(y: &[f64], delta: &[bool], t: f64) -> f64 {
    weighted_km(y, delta, &vec![1.0; y.len()], t)
}

/// Nadaraya-Watson weights; the nearest unit takes all the weight when the
/// kernel window is empty.
pub fn nw(x0: f64, xs: &[f64], h: f64) -> Vec<f64> {
    let k: Vec<f64> = xs.iter().map(|&x| triweight((x0 - x) / h)).collect();
    let total: f64 = k.iter().sum();
    if total > 0.0 {
        return k.iter().map(|v| v / total).collect();
    }
    let mut best = 0;
    for j in 1..xs.len() {
        if (x0 - xs[j]).abs() < (x0 - xs[best]).abs() {
            best = j;
        }
    }
    (0..xs.len())
        .map(|j| if j == best { 1.0 } else { 0.0 })
        .collect()
}

pub fn beran(x0: f64, s: &CensoredSample, h_x: f64, t: f64) -> f64 {
    weighted_km(s.y(), s.delta(), &nw(x0, s.x(), h_x), t)
}

/// `sum_l (F(s_l) - F(s_{l-1})) H((u - s_l) / h)` over the distinct event
/// times below the largest observation, then the largest observation with
/// the remaining mass.
pub fn smoothed(f: &dyn Fn(f64) -> f64, y: &[f64], delta: &[bool], h: f64, u: f64) -> f64 {
    let top = max_of(y);
    let mut locs: Vec<f64> = (0..y.len())
        .filter(|&j| delta[j] && y[j] < top)
        .map(|j| y[j])
        .collect();
    locs.sort_by(f64::total_cmp);
    locs.dedup();
    locs.push(top);
    let mut prev = 0.0;
    let mut total = 0.0;
    for &l in &locs {
        let v = if l == top { 1.0 } else { f(l) };
        total += (v - prev) * triweight_cdf((u - l) / h);
        prev = v;
    }
    total
}

/// `inf { u : f(u) >= p }` by plain bisection to the last bit.
pub fn invert(f: &dyn Fn(f64) -> f64, p: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) >= p {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Smoothed Beran conditional median at `x0`.
pub fn median(x0: f64, s: &CensoredSample, h_x: f64, h_t: f64) -> f64 {
    let step = |t: f64| beran(x0, s, h_x, t);
    let f = |u: f64| smoothed(&step, s.y(), s.delta(), h_t, u);
    let lo = s.y().iter().cloned().fold(f64::INFINITY, f64::min) - h_t;
    invert(&f, 0.5, lo, max_of(s.y()) + h_t)
}

pub fn drop_unit(s: &CensoredSample, j: usize) -> CensoredSample {
    let keep: Vec<usize> = (0..s.len()).filter(|&i| i != j).collect();
    CensoredSample::new(
        keep.iter().map(|&i| s.y()[i]).collect(),
        keep.iter().map(|&i| s.delta()[i]).collect(),
        keep.iter().map(|&i| s.x()[i]).collect(),
    )
    .unwrap()
}

/// `sum_{j uncensored} |y_j - m_{-j}(x_j)|`.
pub fn cv_median(s: &CensoredSample, h_t: f64, h_x: f64) -> f64 {
    (0..s.len())
        .filter(|&j| s.delta()[j])
        .map(|j| (s.y()[j] - median(s.x()[j], &drop_unit(s, j), h_x, h_t)).abs())
        .sum()
}

/// `sum_u sum_{j uncensored} (1(eps_j <= u) - G_{lambda,-j}(u))^2` over 30
/// equally spaced points spanning the residuals.
pub fn cv_lambda(eps: &[f64], delta: &[bool], lambda: f64) -> f64 {
    let lo = eps.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = max_of(eps);
    let mut total = 0.0;
    for i in 0..30 {
        let u = lo + (hi - lo) * i as f64 / 29.0;
        for j in (0..eps.len()).filter(|&j| delta[j]) {
            let e: Vec<f64> = (0..eps.len()).filter(|&k| k != j).map(|k| eps[k]).collect();
            let d: Vec<bool> = (0..eps.len())
                .filter(|&k| k != j)
                .map(|k| delta[k])
                .collect();
            let step = |v: f64| km(&e, &d, v);
            let g = smoothed(&step, &e, &d, lambda, u);
            let ind = if eps[j] <= u { 1.0 } else { 0.0 };
            total += (ind - g) * (ind - g);
        }
    }
    total
}

/// Model-based estimator at `t`, with medians for every population unit.
pub fn f_m(
    x_all: &[f64],
    sampled: &[usize],
    s: &CensoredSample,
    h_t: f64,
    h_x: f64,
    t: f64,
) -> f64 {
    let medians: Vec<f64> = x_all.iter().map(|&x| median(x, s, h_x, h_t)).collect();
    f_m_from_medians(x_all.len(), sampled, s, &medians, t)
}

pub fn f_m_from_medians(
    size: usize,
    sampled: &[usize],
    s: &CensoredSample,
    medians: &[f64],
    t: f64,
) -> f64 {
    let eps: Vec<f64> = (0..s.len())
        .map(|j| s.y()[j] - medians[sampled[j]])
        .collect();
    let mut total = s.len() as f64 * km(s.y(), s.delta(), t);
    for k in (0..size).filter(|k| !sampled.contains(k)) {
        total += km(&eps, s.delta(), t - medians[k]);
    }
    (total / size as f64).min(1.0)
}

/// Random censored sample with distinct continuous values.
pub fn random_sample<R: Rng>(rng: &mut R, n: usize, censor_prob: f64) -> CensoredSample {
    let y: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
    let delta: Vec<bool> = (0..n).map(|_| !rng.random_bool(censor_prob)).collect();
    let x: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..4.0)).collect();
    CensoredSample::new(y, delta, x).unwrap()
}

pub fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
    assert!(
        (a - b).abs() <= tol,
        "{what}: {a} vs {b} (diff {})",
        (a - b).abs()
    );
}
