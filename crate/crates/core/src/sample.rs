use crate::error::{Error, Result};

/// Observed right-censored data for the sampled units.
///
/// `y[j]` is the observed time `min(t_j, c_j)`, `delta[j]` is `true` when the
/// event was observed (`t_j <= c_j`) and `x[j]` is the covariate.
#[derive(Debug, Clone, PartialEq)]
pub struct CensoredSample {
    y: Vec<f64>,
    delta: Vec<bool>,
    x: Vec<f64>,
}

impl CensoredSample {
    pub fn new(y: Vec<f64>, delta: Vec<bool>, x: Vec<f64>) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::Empty("censored sample has no units"));
        }
        if y.len() != delta.len() || y.len() != x.len() {
            return Err(Error::invalid(format!(
                "length mismatch: y={}, delta={}, x={}",
                y.len(),
                delta.len(),
                x.len()
            )));
        }
        if let Some(j) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("y[{j}] is not finite")));
        }
        if let Some(j) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("x[{j}] is not finite")));
        }
        Ok(Self { y, delta, x })
    }

    /// Builds a sample from 0/1 indicators.
    pub fn from_indicators(y: Vec<f64>, delta: &[u8], x: Vec<f64>) -> Result<Self> {
        let delta = delta
            .iter()
            .enumerate()
            .map(|(j, &d)| match d {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(Error::invalid(format!(
                    "delta[{j}] = {other}, expected 0 or 1"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(y, delta, x)
    }

    /// A sample without covariates (all zero), for plain Kaplan-Meier use.
    pub fn without_covariate(y: Vec<f64>, delta: Vec<bool>) -> Result<Self> {
        let x = vec![0.0; y.len()];
        Self::new(y, delta, x)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn delta(&self) -> &[bool] {
        &self.delta
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn uncensored_count(&self) -> usize {
        self.delta.iter().filter(|&&d| d).count()
    }

    /// Same units with every indicator flipped.
    pub fn flipped(&self) -> Self {
        Self {
            y: self.y.clone(),
            delta: self.delta.iter().map(|d| !d).collect(),
            x: self.x.clone(),
        }
    }

    /// Same units with unit `j` removed. Returns `None` if that would leave
    /// the sample empty.
    pub fn without_unit(&self, j: usize) -> Option<Self> {
        if self.len() <= 1 {
            return None;
        }
        let keep = |v: &[f64]| {
            v.iter()
                .enumerate()
                .filter(|&(i, _)| i != j)
                .map(|(_, &a)| a)
                .collect::<Vec<_>>()
        };
        Some(Self {
            y: keep(&self.y),
            delta: self
                .delta
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != j)
                .map(|(_, &d)| d)
                .collect(),
            x: keep(&self.x),
        })
    }

    /// Sub-sample made of the given unit positions, in that order.
    pub fn select(&self, units: &[usize]) -> Result<Self> {
        if let Some(&bad) = units.iter().find(|&&u| u >= self.len()) {
            return Err(Error::invalid(format!("unit {bad} out of range")));
        }
        Self::new(
            units.iter().map(|&u| self.y[u]).collect(),
            units.iter().map(|&u| self.delta[u]).collect(),
            units.iter().map(|&u| self.x[u]).collect(),
        )
    }

    /// Copy with every observed time shifted by `c`.
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            y: self.y.iter().map(|v| v + c).collect(),
            delta: self.delta.clone(),
            x: self.x.clone(),
        }
    }

    pub fn y_range(&self) -> (f64, f64) {
        min_max(&self.y)
    }

    pub fn x_range(&self) -> (f64, f64) {
        min_max(&self.x)
    }
}

pub(crate) fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &a| {
            (lo.min(a), hi.max(a))
        })
}
