//! Symmetric order-2 kernels and the empirical first-order projection.
//!
//! A kernel `h` defines the U-statistic
//! `U_{k:l} = C(l-k+1, 2)^{-1} Σ_{k≤i<j≤l} h(X_i, X_j)`. The four built-in
//! kernels are Gini's mean difference, the sample variance, the sample
//! covariance and Kendall's tau. Custom kernels go through [`FnKernel`].

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::concord::{concordance_rows, concordance_with_earlier};
use crate::error::{Error, Result};
use crate::fenwick::{dense_ranks, RankFenwick};
use crate::numeric::{sign, Accumulator};
use crate::series::{Dimension, Observation, Series};

/// A symmetric kernel `h(x, y) = h(y, x)` of order two.
///
/// Implementors may override [`Kernel::prefix_pair_sums`] and
/// [`Kernel::row_sums`] with faster algorithms; returning `None` falls back
/// to the generic quadratic loops.
pub trait Kernel: Send + Sync {
    fn id(&self) -> &str;

    fn dimension(&self) -> Dimension;

    fn eval(&self, x: Observation, y: Observation) -> f64;

    /// Whether prefix U-statistics are available in sub-quadratic time.
    fn fast_prefix_capable(&self) -> bool {
        false
    }

    /// Raw pair sums `S_k = Σ_{i<j≤k} h(X_i, X_j)` for `k = 1..=n`, stored at
    /// index `k - 1`.
    fn prefix_pair_sums(&self, _series: &Series) -> Option<Vec<f64>> {
        None
    }

    /// Row sums `Σ_{j=1..n} h(X_i, X_j)` including the diagonal.
    fn row_sums(&self, _series: &Series) -> Option<Vec<f64>> {
        None
    }
}

/// The built-in kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuiltinKernel {
    /// `|x - y|`
    Gmd,
    /// `(x - y)^2 / 2`
    Variance,
    /// `(x2 - x1)(y2 - y1) / 2` on pairs
    Covariance,
    /// `sign((x2 - x1)(y2 - y1))` on pairs
    Kendall,
}

impl BuiltinKernel {
    pub const ALL: [BuiltinKernel; 4] = [
        BuiltinKernel::Gmd,
        BuiltinKernel::Variance,
        BuiltinKernel::Covariance,
        BuiltinKernel::Kendall,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BuiltinKernel::Gmd => "gmd",
            BuiltinKernel::Variance => "variance",
            BuiltinKernel::Covariance => "covariance",
            BuiltinKernel::Kendall => "kendall",
        }
    }
}

impl fmt::Display for BuiltinKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BuiltinKernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        builtin_kernel(s)
    }
}

/// Looks up a built-in kernel by name.
pub fn builtin_kernel(name: &str) -> Result<BuiltinKernel> {
    match name {
        "gmd" => Ok(BuiltinKernel::Gmd),
        "variance" => Ok(BuiltinKernel::Variance),
        "covariance" => Ok(BuiltinKernel::Covariance),
        "kendall" => Ok(BuiltinKernel::Kendall),
        other => Err(Error::Config(format!(
            "unknown kernel `{other}` (expected gmd, variance, covariance or kendall)"
        ))),
    }
}

#[inline]
fn scalar(o: Observation) -> f64 {
    match o {
        Observation::Scalar(x) => x,
        Observation::Pair(_) => panic!("univariate kernel applied to a pair"),
    }
}

#[inline]
fn pair(o: Observation) -> [f64; 2] {
    match o {
        Observation::Pair(p) => p,
        Observation::Scalar(_) => panic!("bivariate kernel applied to a scalar"),
    }
}

#[inline]
fn kendall_sign(a: [f64; 2], b: [f64; 2]) -> i32 {
    sign(b[0] - a[0]) * sign(b[1] - a[1])
}

impl Kernel for BuiltinKernel {
    fn id(&self) -> &str {
        self.name()
    }

    fn dimension(&self) -> Dimension {
        match self {
            BuiltinKernel::Gmd | BuiltinKernel::Variance => Dimension::Univariate,
            BuiltinKernel::Covariance | BuiltinKernel::Kendall => Dimension::Bivariate,
        }
    }

    #[inline]
    fn eval(&self, x: Observation, y: Observation) -> f64 {
        match self {
            BuiltinKernel::Gmd => (scalar(x) - scalar(y)).abs(),
            BuiltinKernel::Variance => {
                let d = scalar(x) - scalar(y);
                d * d / 2.0
            }
            BuiltinKernel::Covariance => {
                let (a, b) = (pair(x), pair(y));
                (b[0] - a[0]) * (b[1] - a[1]) / 2.0
            }
            BuiltinKernel::Kendall => kendall_sign(pair(x), pair(y)) as f64,
        }
    }

    fn fast_prefix_capable(&self) -> bool {
        true
    }

    fn prefix_pair_sums(&self, series: &Series) -> Option<Vec<f64>> {
        match (self, series) {
            (BuiltinKernel::Gmd, Series::Univariate(x)) => Some(gmd_prefix_sums(x)),
            (BuiltinKernel::Variance, Series::Univariate(x)) => Some(variance_prefix_sums(x)),
            (BuiltinKernel::Covariance, Series::Bivariate(p)) => Some(covariance_prefix_sums(p)),
            (BuiltinKernel::Kendall, Series::Bivariate(p)) => Some(kendall_prefix_sums(p)),
            _ => None,
        }
    }

    fn row_sums(&self, series: &Series) -> Option<Vec<f64>> {
        match (self, series) {
            (BuiltinKernel::Gmd, Series::Univariate(x)) => Some(gmd_row_sums(x)),
            (BuiltinKernel::Variance, Series::Univariate(x)) => Some(variance_row_sums(x)),
            (BuiltinKernel::Covariance, Series::Bivariate(p)) => Some(covariance_row_sums(p)),
            (BuiltinKernel::Kendall, Series::Bivariate(p)) => Some(kendall_row_sums(p)),
            _ => None,
        }
    }
}

/// Prefix sums of `|x_i - x_j|` via a Fenwick tree over value ranks.
fn gmd_prefix_sums(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let (ranks, distinct) = dense_ranks(x);
    let mut tree = RankFenwick::new(distinct);
    let mut out = Vec::with_capacity(n);
    let mut total = Accumulator::for_len(n);
    let mut running_sum = 0.0;
    for (k, (&v, &r)) in x.iter().zip(&ranks).enumerate() {
        let (below_count, below_sum) = tree.prefix(r);
        let below_count = below_count as f64;
        let above_count = k as f64 - below_count;
        let above_sum = running_sum - below_sum;
        let contribution = (v * below_count - below_sum) + (above_sum - v * above_count);
        total.add(contribution);
        out.push(total.value());
        tree.insert(r, v);
        running_sum += v;
    }
    out
}

/// Prefix sums of `(x_i - x_j)^2 / 2` via running moments:
/// `Σ_{i<j≤k} (x_i - x_j)^2 / 2 = k/2 · Σ_{i≤k} (x_i - mean_k)^2`.
fn variance_prefix_sums(x: &[f64]) -> Vec<f64> {
    let mut mean = 0.0;
    let mut m2 = 0.0;
    x.iter()
        .enumerate()
        .map(|(i, &v)| {
            let k = (i + 1) as f64;
            let delta = v - mean;
            mean += delta / k;
            m2 += delta * (v - mean);
            k * m2 / 2.0
        })
        .collect()
}

fn kendall_prefix_sums(p: &[[f64; 2]]) -> Vec<f64> {
    let mut total: i64 = 0;
    concordance_with_earlier(p)
        .into_iter()
        .map(|c| {
            total += c;
            total as f64
        })
        .collect()
}

/// Row sums of `|x_i - x_j|` from one sort: for sorted values with prefix
/// sums `S`, `Σ_j |x - x_j| = x (2r - n) - 2 S_r + S_n` with `r` the rank.
fn gmd_row_sums(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = Accumulator::for_len(n);
    for &i in &order {
        acc.add(x[i]);
        prefix.push(acc.value());
    }
    let total = prefix[n];
    let mut out = vec![0.0; n];
    for (pos, &i) in order.iter().enumerate() {
        let r = (pos + 1) as f64;
        let v = x[i];
        out[i] = v * (2.0 * r - n as f64) - 2.0 * prefix[pos + 1] + total;
    }
    out
}

/// Row sums of `(x - x_j)^2 / 2` using `Σ_j (x - x_j)^2 = n (x - m)^2 + Σ_j (x_j - m)^2`.
fn variance_row_sums(x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let ss: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    x.iter()
        .map(|v| (n * (v - mean) * (v - mean) + ss) / 2.0)
        .collect()
}

/// Prefix sums of `(x_j - x_i)(y_j - y_i) / 2` via running co-moments.
fn covariance_prefix_sums(p: &[[f64; 2]]) -> Vec<f64> {
    let (mut mx, mut my, mut c) = (0.0, 0.0, 0.0);
    p.iter()
        .enumerate()
        .map(|(i, &[x, y])| {
            let k = (i + 1) as f64;
            let dx = x - mx;
            mx += dx / k;
            my += (y - my) / k;
            c += dx * (y - my);
            k * c / 2.0
        })
        .collect()
}

fn covariance_row_sums(p: &[[f64; 2]]) -> Vec<f64> {
    let n = p.len() as f64;
    let mx = p.iter().map(|q| q[0]).sum::<f64>() / n;
    let my = p.iter().map(|q| q[1]).sum::<f64>() / n;
    let sc: f64 = p.iter().map(|q| (q[0] - mx) * (q[1] - my)).sum();
    p.iter()
        .map(|q| (n * (q[0] - mx) * (q[1] - my) + sc) / 2.0)
        .collect()
}

fn kendall_row_sums(p: &[[f64; 2]]) -> Vec<f64> {
    concordance_rows(p).into_iter().map(|r| r as f64).collect()
}

/// Number of random pairs used for the symmetry spot check of custom kernels.
pub const SYMMETRY_CHECK_PAIRS: usize = 16;

type KernelFn = dyn Fn(Observation, Observation) -> f64 + Send + Sync;

/// A user-supplied kernel. Symmetry is the caller's contract; it is spot
/// checked on [`SYMMETRY_CHECK_PAIRS`] random pairs at registration.
#[derive(Clone)]
pub struct FnKernel {
    id: String,
    dimension: Dimension,
    f: Arc<KernelFn>,
}

impl fmt::Debug for FnKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnKernel")
            .field("id", &self.id)
            .field("dimension", &self.dimension)
            .finish_non_exhaustive()
    }
}

impl FnKernel {
    pub fn register<F>(id: impl Into<String>, dimension: Dimension, f: F) -> Result<Self>
    where
        F: Fn(Observation, Observation) -> f64 + Send + Sync + 'static,
    {
        let kernel = FnKernel {
            id: id.into(),
            dimension,
            f: Arc::new(f),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_cafe);
        let draw = |rng: &mut ChaCha8Rng| -> Observation {
            let a: f64 = rng.sample(StandardNormal);
            match dimension {
                Dimension::Univariate => Observation::Scalar(a),
                Dimension::Bivariate => Observation::Pair([a, rng.sample(StandardNormal)]),
            }
        };
        for _ in 0..SYMMETRY_CHECK_PAIRS {
            let x = draw(&mut rng);
            let y = draw(&mut rng);
            let (hxy, hyx) = (kernel.eval(x, y), kernel.eval(y, x));
            let scale = hxy.abs().max(hyx.abs()).max(1.0);
            if (hxy - hyx).is_nan() || (hxy - hyx).abs() > 1e-12 * scale {
                return Err(Error::AsymmetricKernel(kernel.id));
            }
        }
        Ok(kernel)
    }
}

impl Kernel for FnKernel {
    fn id(&self) -> &str {
        &self.id
    }

    fn dimension(&self) -> Dimension {
        self.dimension
    }

    fn eval(&self, x: Observation, y: Observation) -> f64 {
        (self.f)(x, y)
    }
}

/// Checks that the series dimensionality matches the kernel's.
pub fn check_compatible(kernel: &dyn Kernel, series: &Series) -> Result<()> {
    if kernel.dimension() != series.dimension() {
        return Err(Error::DimensionMismatch {
            kernel: kernel.id().to_string(),
            expected: kernel.dimension().name(),
            found: series.dimension().name(),
        });
    }
    Ok(())
}

/// Values `ĥ₁(X_i) = n⁻¹ Σ_j h(X_i, X_j) - U_{1:n}` (diagonal included) and
/// the full-sample U-statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionVector {
    pub values: Vec<f64>,
    pub u_full: f64,
}

impl ProjectionVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// Row sums through the generic double loop, diagonal included.
pub(crate) fn generic_row_sums(kernel: &dyn Kernel, series: &Series) -> Vec<f64> {
    let n = series.len();
    let mut rows: Vec<Accumulator> = vec![Accumulator::for_len(n); n];
    for i in 0..n {
        let xi = series.get(i);
        rows[i].add(kernel.eval(xi, xi));
        for j in (i + 1)..n {
            let v = kernel.eval(xi, series.get(j));
            rows[i].add(v);
            rows[j].add(v);
        }
    }
    rows.iter().map(Accumulator::value).collect()
}

/// Empirical first-order Hoeffding projection of `kernel` on `series`.
pub fn projection(kernel: &dyn Kernel, series: &Series) -> Result<ProjectionVector> {
    check_compatible(kernel, series)?;
    let n = series.len();
    if n < 2 {
        return Err(Error::SampleTooSmall { needed: 2, got: n });
    }
    let rows = kernel
        .row_sums(series)
        .unwrap_or_else(|| generic_row_sums(kernel, series));
    Ok(projection_from_rows(kernel, series, &rows))
}

pub(crate) fn projection_from_rows(
    kernel: &dyn Kernel,
    series: &Series,
    rows: &[f64],
) -> ProjectionVector {
    let n = series.len();
    let nf = n as f64;
    let mut diag = Accumulator::for_len(n);
    let mut total = Accumulator::for_len(n);
    for (i, r) in rows.iter().enumerate() {
        let xi = series.get(i);
        diag.add(kernel.eval(xi, xi));
        total.add(*r);
    }
    // Σ_{i≠j} h = 2 Σ_{i<j} h
    let u_full = (total.value() - diag.value()) / (nf * (nf - 1.0));
    let values = rows.iter().map(|r| r / nf - u_full).collect();
    ProjectionVector { values, u_full }
}
