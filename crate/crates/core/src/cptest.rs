//! End-to-end change-point tests: statistics, p-values and change location.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{projection, Kernel};
use crate::lrv::{long_run_variance, studentize, Bandwidth, LagWindow, LrvConfig, LrvVariant};
use crate::nulldist::p_value;
use crate::series::Series;
use crate::uproc::{diff_processes, DiffProcess};

/// Smallest series accepted by [`run_test`] and [`run_both`].
pub const MIN_TEST_LEN: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    FirstVsFull,
    FirstVsLast,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::FirstVsFull => "first_vs_full",
            Method::FirstVsLast => "first_vs_last",
        }
    }

    pub fn short(self) -> &'static str {
        match self {
            Method::FirstVsFull => "FvsF",
            Method::FirstVsLast => "FvsL",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first_vs_full" | "fvf" => Ok(Method::FirstVsFull),
            "first_vs_last" | "fvl" => Ok(Method::FirstVsLast),
            other => Err(Error::Config(format!("unknown method `{other}`"))),
        }
    }
}

/// Outcome of one test on one series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub method: Method,
    pub statistic: f64,
    pub p_value: f64,
    pub tau_hat: f64,
    pub k_hat: usize,
    /// Set when the process is identically zero; `k_hat` is then meaningless.
    pub no_signal: bool,
    pub sigma2: f64,
    pub n: usize,
    pub kernel: String,
    pub lrv_window: LagWindow,
    pub lrv_bandwidth: Bandwidth,
    pub lrv_variant: LrvVariant,
}

/// Argmax location estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub k_hat: usize,
    pub tau_hat: f64,
    pub no_signal: bool,
}

/// Argmax of `|D(k)|` over `2 ≤ k ≤ n-2`, smallest `k` on ties.
pub fn estimate_location(diff: &DiffProcess, method: Method) -> Location {
    let values = match method {
        Method::FirstVsFull => &diff.first_vs_full,
        Method::FirstVsLast => &diff.first_vs_last,
    };
    let n = diff.n;
    let mut k_hat = 2;
    let mut best = f64::NEG_INFINITY;
    for k in 2..=n.saturating_sub(2).max(2) {
        let v = values[k - 1].abs();
        if v > best {
            best = v;
            k_hat = k;
        }
    }
    Location {
        k_hat,
        tau_hat: k_hat as f64 / n as f64,
        no_signal: values.iter().all(|v| *v == 0.0),
    }
}

/// Difference processes plus the shared variance estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub diff: DiffProcess,
    pub sigma2: f64,
}

/// Runs the shared part of both tests: processes, projection and `σ̂²`.
pub fn analyze(series: &Series, kernel: &dyn Kernel, cfg: &LrvConfig) -> Result<Analysis> {
    if series.len() < MIN_TEST_LEN {
        return Err(Error::SampleTooSmall {
            needed: MIN_TEST_LEN,
            got: series.len(),
        });
    }
    let diff = diff_processes(kernel, series)?;
    let proj = projection(kernel, series)?;
    let sigma2 = long_run_variance(&proj, cfg)?;
    Ok(Analysis { diff, sigma2 })
}

impl Analysis {
    pub fn report(
        &self,
        kernel: &dyn Kernel,
        cfg: &LrvConfig,
        method: Method,
    ) -> Result<TestReport> {
        let (t1, t2) = studentize(&self.diff, self.sigma2)?;
        let statistic = match method {
            Method::FirstVsFull => t1,
            Method::FirstVsLast => t2,
        };
        let loc = estimate_location(&self.diff, method);
        Ok(TestReport {
            method,
            statistic,
            p_value: p_value(statistic),
            tau_hat: loc.tau_hat,
            k_hat: loc.k_hat,
            no_signal: loc.no_signal,
            sigma2: self.sigma2,
            n: self.diff.n,
            kernel: kernel.id().to_string(),
            lrv_window: cfg.window,
            lrv_bandwidth: cfg.bandwidth,
            lrv_variant: cfg.variant,
        })
    }
}

pub fn run_test(
    series: &Series,
    kernel: &dyn Kernel,
    cfg: &LrvConfig,
    method: Method,
) -> Result<TestReport> {
    analyze(series, kernel, cfg)?.report(kernel, cfg, method)
}

/// Both tests from one pass over the data.
pub fn run_both(
    series: &Series,
    kernel: &dyn Kernel,
    cfg: &LrvConfig,
) -> Result<(TestReport, TestReport)> {
    let a = analyze(series, kernel, cfg)?;
    Ok((
        a.report(kernel, cfg, Method::FirstVsFull)?,
        a.report(kernel, cfg, Method::FirstVsLast)?,
    ))
}
