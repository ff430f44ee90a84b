//! Small numeric helpers shared by the harnesses.

/// `k` equally spaced points from `a` to `b`, both included.
pub fn linspace(a: f64, b: f64, k: usize) -> Vec<f64> {
    match k {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let step = (b - a) / (k - 1) as f64;
            let mut v: Vec<f64> = (0..k).map(|i| a + step * i as f64).collect();
            v[k - 1] = b;
            v
        }
    }
}

/// Percentile of already sorted data with linear interpolation between
/// order statistics (`p` in [0, 1]).
pub fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of empty data");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Percentile of unsorted data.
pub fn percentile(data: &[f64], p: f64) -> f64 {
    let mut v = data.to_vec();
    v.sort_by(f64::total_cmp);
    percentile_sorted(&v, p)
}

/// `k` equally spaced times between the `lo` and `hi` percentiles of `data`.
pub fn percentile_grid(data: &[f64], lo: f64, hi: f64, k: usize) -> Vec<f64> {
    let mut v = data.to_vec();
    v.sort_by(f64::total_cmp);
    linspace(percentile_sorted(&v, lo), percentile_sorted(&v, hi), k)
}

/// Empirical CDF `#(v <= t) / n`.
pub fn empirical_cdf(values: &[f64], t: f64) -> f64 {
    values.iter().filter(|&&v| v <= t).count() as f64 / values.len() as f64
}

/// Generalized inverse of the empirical CDF: the `ceil(p n)`-th order
/// statistic.
pub fn empirical_quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let k = ((p * n as f64).ceil() as usize).clamp(1, n);
    sorted[k - 1]
}
