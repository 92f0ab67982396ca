//! Long-run variance estimation and studentization.
//!
//! The windowed estimator is
//! `σ̂² = 4 Σ_{|k|<n} W(|k|/b) · n⁻¹ Σ_{i=1}^{n-|k|} ĥ₁(X_i) ĥ₁(X_{i+|k|})`
//! with the Bartlett window `W(x) = (1 - |x|)·1{|x| ≤ 1}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::ProjectionVector;
use crate::uproc::DiffProcess;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LagWindow {
    #[default]
    Bartlett,
}

impl LagWindow {
    #[inline]
    pub fn weight(self, x: f64) -> f64 {
        match self {
            LagWindow::Bartlett => {
                let a = x.abs();
                if a <= 1.0 {
                    1.0 - a
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BandwidthRule {
    /// `b_n = n^{1/3}`, used as a real number.
    #[serde(rename = "n^(1/3)", alias = "auto", alias = "cube_root")]
    CubeRoot,
}

/// Bandwidth `b_n`: a fixed positive value or a sample-size rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Bandwidth {
    Fixed(f64),
    Rule(BandwidthRule),
}

impl Default for Bandwidth {
    fn default() -> Self {
        Bandwidth::Rule(BandwidthRule::CubeRoot)
    }
}

impl Bandwidth {
    pub const CUBE_ROOT: Bandwidth = Bandwidth::Rule(BandwidthRule::CubeRoot);

    /// Resolves to a real bandwidth for sample size `n`.
    ///
    /// The rule is capped at `n - 1`; a fixed value above `n - 1` is an error.
    pub fn resolve(self, n: usize) -> Result<f64> {
        let cap = n.saturating_sub(1).max(1) as f64;
        match self {
            Bandwidth::Rule(BandwidthRule::CubeRoot) => Ok((n as f64).cbrt().min(cap)),
            Bandwidth::Fixed(b) => {
                if !(b.is_finite() && b > 0.0) {
                    Err(Error::Config(format!(
                        "bandwidth must be positive, got {b}"
                    )))
                } else if b > cap {
                    Err(Error::Config(format!(
                        "bandwidth {b} exceeds n - 1 = {cap}"
                    )))
                } else {
                    Ok(b)
                }
            }
        }
    }

    pub fn label(self) -> String {
        match self {
            Bandwidth::Rule(BandwidthRule::CubeRoot) => "n^(1/3)".to_string(),
            Bandwidth::Fixed(b) => format!("{b}"),
        }
    }
}

/// Which variance formula to apply to the projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrvVariant {
    /// Four times the lag-window weighted autocovariance sum.
    #[default]
    Windowed,
    /// `(2/n) Σ ĥ₁(X_i)²`: lag zero only, with factor 2 instead of 4.
    HalfLagZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct LrvConfig {
    pub window: LagWindow,
    pub bandwidth: Bandwidth,
    pub variant: LrvVariant,
}

impl LrvConfig {
    pub fn bartlett(bandwidth: Bandwidth) -> Self {
        Self {
            window: LagWindow::Bartlett,
            bandwidth,
            variant: LrvVariant::Windowed,
        }
    }

    pub fn with_variant(mut self, variant: LrvVariant) -> Self {
        self.variant = variant;
        self
    }
}

/// Estimates `σ²_h` from the projection vector.
pub fn long_run_variance(proj: &ProjectionVector, cfg: &LrvConfig) -> Result<f64> {
    let h = &proj.values;
    let n = h.len();
    if n < 2 {
        return Err(Error::SampleTooSmall { needed: 2, got: n });
    }
    let nf = n as f64;
    let lag0: f64 = h.iter().map(|v| v * v).sum::<f64>() / nf;
    let value = match cfg.variant {
        LrvVariant::HalfLagZero => 2.0 * lag0,
        LrvVariant::Windowed => {
            let b = cfg.bandwidth.resolve(n)?;
            let mut acc = lag0;
            let mut lag = 1;
            while lag < n {
                let w = cfg.window.weight(lag as f64 / b);
                if w <= 0.0 {
                    break;
                }
                let gamma: f64 = h[..n - lag]
                    .iter()
                    .zip(&h[lag..])
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    / nf;
                acc += 2.0 * w * gamma;
                lag += 1;
            }
            4.0 * acc
        }
    };
    if !(value.is_finite() && value > 0.0) {
        return Err(Error::DegenerateVariance { value });
    }
    Ok(value)
}

/// Studentized statistics `(T₁, T₂) = max_k |D(k)| / (√n σ̂)`.
pub fn studentize(diff: &DiffProcess, sigma2: f64) -> Result<(f64, f64)> {
    if !(sigma2.is_finite() && sigma2 > 0.0) {
        return Err(Error::DegenerateVariance { value: sigma2 });
    }
    let scale = (diff.n as f64).sqrt() * sigma2.sqrt();
    let max_abs = |v: &[f64]| v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    Ok((
        max_abs(&diff.first_vs_full) / scale,
        max_abs(&diff.first_vs_last) / scale,
    ))
}
