//! Distribution-function representations: right-continuous step functions
//! and their integrated-kernel smoothings.

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;

/// Anything that can be evaluated as a cumulative distribution function.
pub trait Cdf {
    fn eval(&self, t: f64) -> f64;

    /// Generalized inverse `inf { t : F(t) >= p }` for `p` in (0, 1).
    fn quantile(&self, p: f64) -> Result<f64>;
}

/// Generalized inverse of any [`Cdf`].
pub fn quantile<C: Cdf + ?Sized>(cdf: &C, p: f64) -> Result<f64> {
    cdf.quantile(p)
}

pub(crate) fn check_probability(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::Probability(p))
    }
}

/// Right-continuous step CDF. The value is 0 before the first jump,
/// `values[i]` on `[times[i], times[i + 1])`, and exactly 1 from
/// `terminal_time` on.
#[derive(Debug, Clone, PartialEq)]
pub struct StepCdf {
    times: Vec<f64>,
    values: Vec<f64>,
    terminal_time: f64,
}

impl StepCdf {
    /// Jump locations must be strictly increasing, values nondecreasing in
    /// [0, 1], and `terminal_time` no smaller than the last location. The
    /// terminal point is stored as the final jump, with value 1.
    pub fn new(times: Vec<f64>, values: Vec<f64>, terminal_time: f64) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::invalid("step CDF times and values differ in length"));
        }
        if !terminal_time.is_finite() {
            return Err(Error::invalid("terminal time must be finite"));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid(
                "step CDF jump locations must be strictly increasing",
            ));
        }
        if values.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::invalid("step CDF values must be nondecreasing"));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid("step CDF values must lie in [0, 1]"));
        }
        if let Some(&last) = times.last() {
            if !last.is_finite() || times[0].is_nan() || !times[0].is_finite() {
                return Err(Error::invalid("step CDF jump locations must be finite"));
            }
            if last > terminal_time {
                return Err(Error::invalid("terminal time precedes a jump location"));
            }
        }
        Ok(Self::from_parts(times, values, terminal_time))
    }

    /// Unchecked constructor for the estimators in this crate, which build
    /// valid parts by construction.
    pub(crate) fn from_parts(
        mut times: Vec<f64>,
        mut values: Vec<f64>,
        terminal_time: f64,
    ) -> Self {
        match times.last() {
            Some(&last) if last == terminal_time => {
                *values.last_mut().unwrap() = 1.0;
            }
            _ => {
                times.push(terminal_time);
                values.push(1.0);
            }
        }
        Self {
            times,
            values,
            terminal_time,
        }
    }

    /// A CDF putting all its mass at `at`.
    pub fn point_mass(at: f64) -> Self {
        Self::from_parts(Vec::new(), Vec::new(), at)
    }

    /// Jump locations, terminal point included.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Cumulative values at the jump locations; the last one is 1.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn terminal_time(&self) -> f64 {
        self.terminal_time
    }

    /// `(location, mass)` pairs, zero-mass locations included.
    pub fn jumps(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times
            .iter()
            .zip(&self.values)
            .scan(0.0, |prev, (&t, &v)| {
                let mass = v - *prev;
                *prev = v;
                Some((t, mass))
            })
    }

    pub fn first_time(&self) -> f64 {
        self.times[0]
    }
}

impl StepCdf {
    /// `F(t - shift)`, comparing `s + shift <= t` so that evaluation at a
    /// shifted jump `s + shift` always includes that jump.
    pub fn eval_shifted(&self, t: f64, shift: f64) -> f64 {
        if t >= self.terminal_time + shift {
            return 1.0;
        }
        let idx = self.times.partition_point(|&s| s + shift <= t);
        if idx == 0 {
            0.0
        } else {
            self.values[idx - 1]
        }
    }
}

impl Cdf for StepCdf {
    fn eval(&self, t: f64) -> f64 {
        if t >= self.terminal_time {
            return 1.0;
        }
        let idx = self.times.partition_point(|&s| s <= t);
        if idx == 0 {
            0.0
        } else {
            self.values[idx - 1]
        }
    }

    fn quantile(&self, p: f64) -> Result<f64> {
        check_probability(p)?;
        let idx = self.values.partition_point(|&v| v < p);
        // the last value is exactly 1, so idx is always in range
        Ok(self.times[idx.min(self.times.len() - 1)])
    }
}

/// Bisection stops once the bracket is this fraction of the support width.
pub const QUANTILE_TOLERANCE: f64 = 1e-14;

/// Integrated-kernel smoothing of a step CDF:
/// `F(u) = sum_l mass_l * H((u - location_l) / h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedCdf {
    locations: Vec<f64>,
    /// Mass at each location. The last one is chosen so that summing the
    /// masses in order reproduces the step function's final value exactly.
    masses: Vec<f64>,
    total: f64,
    kernel: KernelSpec,
}

impl SmoothedCdf {
    /// Smooths the jumps of `step` (its event locations plus the terminal
    /// point carrying the remaining mass).
    pub fn from_step(step: &StepCdf, kernel: KernelSpec) -> Self {
        let total = *step.values.last().unwrap();
        let mut masses = Vec::with_capacity(step.values.len());
        let (mut prev, mut sum) = (0.0, 0.0);
        for &v in &step.values[..step.values.len() - 1] {
            masses.push(v - prev);
            sum += v - prev;
            prev = v;
        }
        masses.push(total - sum);
        Self {
            locations: step.times.clone(),
            masses,
            total,
            kernel,
        }
    }

    pub fn kernel(&self) -> KernelSpec {
        self.kernel
    }

    pub fn bandwidth(&self) -> f64 {
        self.kernel.bandwidth()
    }

    pub fn locations(&self) -> &[f64] {
        &self.locations
    }

    /// `(location, mass)` pairs.
    pub fn jumps(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.locations
            .iter()
            .copied()
            .zip(self.masses.iter().copied())
    }

    pub fn total_mass(&self) -> f64 {
        self.total
    }

    /// Interval outside of which the function is exactly 0 or 1.
    pub fn support(&self) -> (f64, f64) {
        let h = self.kernel.bandwidth();
        (
            self.locations[0] - h,
            self.locations[self.locations.len() - 1] + h,
        )
    }

    /// Density `f(u) = sum_l mass_l K((u - location_l) / h) / h`.
    pub fn density(&self, u: f64) -> f64 {
        let h = self.kernel.bandwidth();
        self.jumps()
            .map(|(loc, m)| m * self.kernel.eval((u - loc) / h))
            .sum::<f64>()
            / h
    }
}

impl Cdf for SmoothedCdf {
    fn eval(&self, u: f64) -> f64 {
        let (lo, hi) = self.support();
        if u <= lo {
            return 0.0;
        }
        if u >= hi {
            return self.total_mass();
        }
        // Summing every term in a fixed order keeps the result monotone in u
        // under rounding; terms past u + h are exactly zero and skipped.
        let h = self.kernel.bandwidth();
        let mut value = 0.0;
        for (&loc, &m) in self.locations.iter().zip(&self.masses) {
            let z = (u - loc) / h;
            if z <= -1.0 {
                break;
            }
            value += m * self.kernel.eval_integrated(z);
        }
        value
    }

    fn quantile(&self, p: f64) -> Result<f64> {
        check_probability(p)?;
        let (mut lo, mut hi) = self.support();
        let tol = QUANTILE_TOLERANCE * (hi - lo);
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.eval(mid) >= p {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }
}
