//! Compactly supported smoothing kernels and their integrated versions.

use crate::error::{Error, Result};

/// A symmetric density kernel supported on (-1, 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Kernel {
    /// `K(u) = 35/32 (1 - u^2)^3` on (-1, 1). Twice differentiable at the
    /// support boundary.
    #[default]
    Triweight,
    /// `K(u) = 3/4 (1 - u^2)` on (-1, 1).
    Epanechnikov,
}

impl Kernel {
    /// Density `K(u)`.
    #[inline]
    pub fn density(self, u: f64) -> f64 {
        if u <= -1.0 || u >= 1.0 {
            return 0.0;
        }
        let v = 1.0 - u * u;
        match self {
            Kernel::Triweight => 35.0 / 32.0 * v * v * v,
            Kernel::Epanechnikov => 0.75 * v,
        }
    }

    /// Integrated kernel `H(u) = \int_{-1}^{u} K(s) ds`.
    #[inline]
    pub fn integrated(self, u: f64) -> f64 {
        if u <= -1.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return 1.0;
        }
        let u2 = u * u;
        match self {
            // 35/32 (u - u^3 + 3u^5/5 - u^7/7) + 1/2
            Kernel::Triweight => 0.5 + 35.0 / 32.0 * u * (1.0 - u2 * (1.0 - u2 * (0.6 - u2 / 7.0))),
            Kernel::Epanechnikov => 0.5 + 0.75 * u * (1.0 - u2 / 3.0),
        }
        .clamp(0.0, 1.0)
    }
}

/// A kernel together with its bandwidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    kernel: Kernel,
    bandwidth: f64,
}

impl KernelSpec {
    pub fn new(kernel: Kernel, bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::invalid(format!(
                "bandwidth must be positive, got {bandwidth}"
            )));
        }
        Ok(Self { kernel, bandwidth })
    }

    pub fn triweight(bandwidth: f64) -> Result<Self> {
        Self::new(Kernel::Triweight, bandwidth)
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// `K(u)` on the standardized scale.
    pub fn eval(&self, u: f64) -> f64 {
        self.kernel.density(u)
    }

    /// `H(u)` on the standardized scale.
    pub fn eval_integrated(&self, u: f64) -> f64 {
        self.kernel.integrated(u)
    }

    /// `K((a - b) / h)`.
    #[inline]
    pub fn weight(&self, a: f64, b: f64) -> f64 {
        self.kernel.density((a - b) / self.bandwidth)
    }
}
