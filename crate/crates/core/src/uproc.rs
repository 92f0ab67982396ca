//! Prefix/suffix U-statistics and the weighted difference processes
//! `D^F_n(k) = k (U_{1:k} - U_{1:n})` and
//! `D^L_n(k) = k(n-k)/n (U_{1:k} - U_{(k+1):n})`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{check_compatible, Kernel};
use crate::numeric::Accumulator;
use crate::series::Series;

/// Smallest series length for which both processes have an interior point.
pub const MIN_PROCESS_LEN: usize = 4;

/// A sequence of U-statistics indexed by an integer `k` starting at `first`.
#[derive(Debug, Clone, PartialEq)]
pub struct UPath {
    first: usize,
    values: Vec<f64>,
}

impl UPath {
    /// Value at index `k`.
    ///
    /// # Panics
    /// If `k` lies outside `first..first + len`.
    pub fn at(&self, k: usize) -> f64 {
        self.values[k - self.first]
    }

    pub fn first_index(&self) -> usize {
        self.first
    }

    pub fn last_index(&self) -> usize {
        self.first + self.values.len() - 1
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

fn pairs(m: usize) -> f64 {
    let m = m as f64;
    m * (m - 1.0) / 2.0
}

/// Raw pair sums `S_k`, `k = 1..=n` at index `k-1`.
pub(crate) fn raw_prefix_sums(kernel: &dyn Kernel, series: &Series) -> Vec<f64> {
    if let Some(s) = kernel.prefix_pair_sums(series) {
        return s;
    }
    let n = series.len();
    let mut out = Vec::with_capacity(n);
    let mut total = Accumulator::for_len(n);
    for k in 0..n {
        let xk = series.get(k);
        let mut column = Accumulator::for_len(n);
        for i in 0..k {
            column.add(kernel.eval(series.get(i), xk));
        }
        total.add(column.value());
        out.push(total.value());
    }
    out
}

fn check_len(series: &Series, needed: usize) -> Result<()> {
    if series.len() < needed {
        return Err(Error::SampleTooSmall {
            needed,
            got: series.len(),
        });
    }
    Ok(())
}

/// `U_{1:k}` for `k = 2..=n`.
pub fn prefix_u(kernel: &dyn Kernel, series: &Series) -> Result<UPath> {
    check_compatible(kernel, series)?;
    check_len(series, 2)?;
    let raw = raw_prefix_sums(kernel, series);
    let values = raw
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, s)| s / pairs(i + 1))
        .collect();
    Ok(UPath { first: 2, values })
}

/// `U_{(k+1):n}` for `k = 0..=n-2`, computed as the prefix path of the
/// reversed series.
pub fn suffix_u(kernel: &dyn Kernel, series: &Series) -> Result<UPath> {
    let rev = prefix_u(kernel, &series.reversed())?;
    let n = series.len();
    let values = (0..=n - 2).map(|k| rev.at(n - k)).collect();
    Ok(UPath { first: 0, values })
}

/// The two weighted difference processes on `k = 1..=n`.
///
/// Indices where a segment would hold fewer than two observations are set
/// to zero: `k = 1` for `D^F`, and `k ∈ {1, n-1, n}` for `D^L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffProcess {
    pub n: usize,
    /// `D^F_n(k)` at index `k - 1`.
    pub first_vs_full: Vec<f64>,
    /// `D^L_n(k)` at index `k - 1`.
    pub first_vs_last: Vec<f64>,
    /// Indices `k` forced to zero in `first_vs_full`.
    pub masked_full: Vec<usize>,
    /// Indices `k` forced to zero in `first_vs_last`.
    pub masked_last: Vec<usize>,
}

impl DiffProcess {
    pub fn d_full(&self, k: usize) -> f64 {
        self.first_vs_full[k - 1]
    }

    pub fn d_last(&self, k: usize) -> f64 {
        self.first_vs_last[k - 1]
    }
}

/// Computes `D^F_n` and `D^L_n` for `kernel` on `series` (`n ≥ 4`).
pub fn diff_processes(kernel: &dyn Kernel, series: &Series) -> Result<DiffProcess> {
    check_compatible(kernel, series)?;
    check_len(series, MIN_PROCESS_LEN)?;
    let forward = raw_prefix_sums(kernel, series);
    let backward = raw_prefix_sums(kernel, &series.reversed());
    Ok(assemble(&forward, &backward))
}

/// Builds both processes from forward raw sums (`forward[k-1] = S_{1:k}`)
/// and reversed raw sums (`backward[m-1]` = pair sum of the last `m`).
pub(crate) fn assemble(forward: &[f64], backward: &[f64]) -> DiffProcess {
    let n = forward.len();
    let nf = n as f64;
    let u_full = forward[n - 1] / pairs(n);
    let mut dfull = vec![0.0; n];
    let mut dlast = vec![0.0; n];
    for k in 2..=n {
        let u_first = forward[k - 1] / pairs(k);
        dfull[k - 1] = k as f64 * (u_first - u_full);
        if k <= n - 2 {
            let u_rest = backward[n - k - 1] / pairs(n - k);
            let kf = k as f64;
            dlast[k - 1] = kf * (nf - kf) / nf * (u_first - u_rest);
        }
    }
    DiffProcess {
        n,
        first_vs_full: dfull,
        first_vs_last: dlast,
        masked_full: vec![1],
        masked_last: vec![1, n - 1, n],
    }
}
