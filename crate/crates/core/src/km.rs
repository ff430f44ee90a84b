//! Product-limit (Kaplan-Meier) estimation with the Efron terminal
//! convention, unweighted and with per-unit weights.
//!
//! Tied times are grouped: all uncensored units at a time leave the risk
//! set together, and censored units tied with them are still at risk.

use std::cmp::Ordering;

use crate::cdf::StepCdf;
use crate::error::{Error, Result};
use crate::sample::CensoredSample;

/// Units grouped by distinct observed time, in ascending order. Built once
/// per sample and reused for any number of weightings.
#[derive(Debug, Clone)]
pub(crate) struct RiskGroups {
    times: Vec<f64>,
    /// Group `k` holds `order[start[k]..start[k + 1]]`.
    start: Vec<usize>,
    order: Vec<usize>,
    event: Vec<bool>,
}

impl RiskGroups {
    pub(crate) fn new(y: &[f64], delta: &[bool]) -> Self {
        let mut order: Vec<usize> = (0..y.len()).collect();
        order.sort_by(|&a, &b| match y[a].total_cmp(&y[b]) {
            // uncensored before censored at equal times
            Ordering::Equal => delta[b].cmp(&delta[a]).then(a.cmp(&b)),
            o => o,
        });
        let mut times = Vec::new();
        let mut start = Vec::new();
        for (pos, &u) in order.iter().enumerate() {
            if times.last() != Some(&y[u]) {
                times.push(y[u]);
                start.push(pos);
            }
        }
        start.push(order.len());
        let event = order.iter().map(|&u| delta[u]).collect();
        Self {
            times,
            start,
            order,
            event,
        }
    }

    pub(crate) fn terminal_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Weighted product-limit CDF. `weight(u)` is the weight of unit `u`;
    /// the total must be positive.
    pub(crate) fn product_limit(&self, weight: impl Fn(usize) -> f64) -> StepCdf {
        let k_count = self.times.len();
        let mut event_w = vec![0.0; k_count];
        let mut censor_w = vec![0.0; k_count];
        let mut has_event = vec![false; k_count];
        for k in 0..k_count {
            for pos in self.start[k]..self.start[k + 1] {
                let w = weight(self.order[pos]);
                if self.event[pos] {
                    event_w[k] += w;
                    has_event[k] = true;
                } else {
                    censor_w[k] += w;
                }
            }
        }
        // weight still at risk just before group k
        let mut at_risk = vec![0.0; k_count + 1];
        for k in (0..k_count).rev() {
            at_risk[k] = at_risk[k + 1] + event_w[k] + censor_w[k];
        }
        let total = at_risk[0];

        // Survival is tracked in telescoped form
        //   S = R_after * prod (R_after + c) / R_after / W
        // which reduces to a single count ratio without censoring.
        let mut times = Vec::new();
        let mut values = Vec::new();
        let mut correction = 1.0;
        let mut prev = 0.0_f64;
        let mut frozen = false;
        for k in 0..k_count.saturating_sub(1) {
            let after = at_risk[k + 1];
            let f = if frozen {
                prev
            } else if after > 0.0 {
                correction *= (after + censor_w[k]) / after;
                (total - after * correction) / total
            } else {
                // nothing weighted is left at risk past this group
                frozen = true;
                let before = at_risk[k];
                if before > 0.0 {
                    prev + (1.0 - prev) * event_w[k] / before
                } else {
                    prev
                }
            };
            let f = f.clamp(prev, 1.0);
            prev = f;
            if has_event[k] {
                times.push(self.times[k]);
                values.push(f);
            }
        }
        StepCdf::from_parts(times, values, self.terminal_time())
    }
}

/// Product-limit CDF of `(y, delta)` with the Efron convention.
pub fn product_limit(y: &[f64], delta: &[bool]) -> Result<StepCdf> {
    if y.is_empty() {
        return Err(Error::Empty(
            "product-limit estimator needs at least one unit",
        ));
    }
    if y.len() != delta.len() {
        return Err(Error::invalid("times and indicators differ in length"));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("observed times must be finite"));
    }
    Ok(RiskGroups::new(y, delta).product_limit(|_| 1.0))
}

/// Kaplan-Meier CDF of the sample (covariates ignored).
pub fn km_cdf(sample: &CensoredSample) -> Result<StepCdf> {
    product_limit(sample.y(), sample.delta())
}

/// Kaplan-Meier CDF of the censoring times: the product-limit estimator
/// with every indicator flipped.
pub fn reverse_km_cdf(sample: &CensoredSample) -> Result<StepCdf> {
    let flipped: Vec<bool> = sample.delta().iter().map(|d| !d).collect();
    product_limit(sample.y(), &flipped)
}

/// Generalized product-limit CDF with per-unit weights.
pub fn weighted_km_cdf(sample: &CensoredSample, weights: &[f64]) -> Result<StepCdf> {
    if weights.len() != sample.len() {
        return Err(Error::invalid("one weight per unit is required"));
    }
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::invalid("weights must be finite and nonnegative"));
    }
    if !(weights.iter().sum::<f64>() > 0.0) {
        return Err(Error::invalid("weights sum to zero"));
    }
    Ok(RiskGroups::new(sample.y(), sample.delta()).product_limit(|u| weights[u]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cdf::Cdf;

    fn sample(y: &[f64], d: &[u8]) -> CensoredSample {
        CensoredSample::from_indicators(y.to_vec(), d, vec![0.0; y.len()]).unwrap()
    }

    #[test]
    fn uncensored_is_empirical() {
        let f = km_cdf(&sample(&[1.0, 2.0, 3.0], &[1, 1, 1])).unwrap();
        assert_eq!(f.eval(1.0), 1.0 / 3.0);
        assert_eq!(f.eval(2.0), 2.0 / 3.0);
        assert_eq!(f.eval(3.0), 1.0);
        assert_eq!(f.eval(0.5), 0.0);
    }

    #[test]
    fn censored_middle_unit() {
        // factor (1 - 1/3) at 1, no jump at the censored 2, Efron at 3
        let f = km_cdf(&sample(&[1.0, 2.0, 3.0], &[1, 0, 1])).unwrap();
        assert_eq!(f.eval(1.0), 1.0 / 3.0);
        assert_eq!(f.eval(2.5), 1.0 / 3.0);
        assert_eq!(f.eval(2.999), 1.0 / 3.0);
        assert_eq!(f.eval(3.0), 1.0);
    }

    #[test]
    fn all_censored_jumps_at_last_time() {
        let f = km_cdf(&sample(&[1.0, 2.0], &[0, 0])).unwrap();
        assert_eq!(f.eval(1.5), 0.0);
        assert_eq!(f.eval(1.999), 0.0);
        assert_eq!(f.eval(2.0), 1.0);
        assert_eq!(f.times(), &[2.0]);
    }

    #[test]
    fn reverse_km_examples() {
        let f = reverse_km_cdf(&sample(&[1.0, 2.0, 3.0], &[0, 0, 0])).unwrap();
        assert_eq!(f.eval(1.0), 1.0 / 3.0);
        assert_eq!(f.eval(2.0), 2.0 / 3.0);
        assert_eq!(f.eval(3.0), 1.0);

        let f = reverse_km_cdf(&sample(&[1.0, 2.0, 3.0], &[1, 1, 1])).unwrap();
        assert_eq!(f.eval(2.9), 0.0);
        assert_eq!(f.eval(3.0), 1.0);

        let f = reverse_km_cdf(&sample(&[1.0, 2.0, 3.0], &[0, 1, 0])).unwrap();
        assert_eq!(f.eval(1.0), 1.0 / 3.0);
        assert_eq!(f.eval(2.5), 1.0 / 3.0);
        assert_eq!(f.eval(3.0), 1.0);
    }

    #[test]
    fn tied_events_use_grouped_factor() {
        // events at 1 (x2), censored at 1, event at 2, event at 3
        // S(1) = 1 - 2/5, S(2) = S(1) * (1 - 1/2)
        let f = km_cdf(&sample(&[1.0, 1.0, 1.0, 2.0, 3.0], &[1, 1, 0, 1, 1])).unwrap();
        assert!((f.eval(1.0) - 0.4).abs() < 1e-15);
        assert!((f.eval(2.0) - 0.7).abs() < 1e-15);
        assert_eq!(f.eval(3.0), 1.0);
    }

    #[test]
    fn empty_sample_is_an_error() {
        assert!(matches!(product_limit(&[], &[]), Err(Error::Empty(_))));
    }

    #[test]
    fn negative_times_are_fine() {
        let f = product_limit(&[-1.0, 0.0, 1.0], &[true, false, true]).unwrap();
        assert_eq!(f.eval(-1.0), 1.0 / 3.0);
        assert_eq!(f.eval(0.5), 1.0 / 3.0);
        assert_eq!(f.eval(1.0), 1.0);
    }

    #[test]
    fn weighted_hand_case() {
        let s = sample(&[1.0, 2.0, 3.0, 4.0], &[1, 1, 0, 1]);
        let f = weighted_km_cdf(&s, &[0.4, 0.3, 0.2, 0.1]).unwrap();
        assert!((f.eval(1.0) - 0.4).abs() < 1e-15);
        assert!((f.eval(2.0) - 0.7).abs() < 1e-15);
        assert!((f.eval(3.5) - 0.7).abs() < 1e-15);
        assert_eq!(f.eval(4.0), 1.0);
    }

    #[test]
    fn weight_on_one_event_is_degenerate() {
        let s = sample(&[1.0, 2.0, 3.0, 4.0], &[1, 1, 0, 1]);
        let f = weighted_km_cdf(&s, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(f.eval(1.9), 0.0);
        assert_eq!(f.eval(2.0), 1.0);
    }

    #[test]
    fn weight_on_censored_unit_moves_mass_to_terminal() {
        let s = sample(&[1.0, 2.0, 3.0], &[1, 0, 1]);
        let f = weighted_km_cdf(&s, &[0.0, 1.0, 0.0]).unwrap();
        assert_eq!(f.eval(2.9), 0.0);
        assert_eq!(f.eval(3.0), 1.0);
    }

    #[test]
    fn weights_are_validated() {
        let s = sample(&[1.0, 2.0], &[1, 1]);
        assert!(weighted_km_cdf(&s, &[0.0, 0.0]).is_err());
        assert!(weighted_km_cdf(&s, &[-1.0, 2.0]).is_err());
        assert!(weighted_km_cdf(&s, &[1.0]).is_err());
    }
}
