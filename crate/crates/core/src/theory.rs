//! Population quantities under a single change from `F` to `G`: the θ
//! triple and its eccentricity, the fixed- and local-alternative drift
//! functions, the power ranking, argmax consistency and limit variances.

use std::f64::consts::PI;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cptest::Method;
use crate::error::{Error, Result};
use crate::kernel::{check_compatible, Kernel};
use crate::sampler::{substream, Law};
use crate::series::Series;

/// Minimum Monte Carlo size accepted by [`theta_mc`] and [`limit_variances`].
pub const MIN_MC_DRAWS: usize = 1000;

const CHUNK: usize = 1 << 14;

/// Monte Carlo standard errors of a [`ThetaTriple`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaErrors {
    pub theta_f: f64,
    pub theta_g: f64,
    pub theta_fg: f64,
    pub rho: f64,
}

/// `θ_F = E h(X,X')`, `θ_G = E h(Y,Y')`, `θ_FG = E h(X,Y)` and the
/// eccentricity `ρ = θ_FG - (θ_F + θ_G)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaTriple {
    pub theta_f: f64,
    pub theta_g: f64,
    pub theta_fg: f64,
    pub rho: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub se: Option<ThetaErrors>,
}

impl ThetaTriple {
    pub fn new(theta_f: f64, theta_g: f64, theta_fg: f64) -> Self {
        Self {
            theta_f,
            theta_g,
            theta_fg,
            rho: theta_fg - (theta_f + theta_g) / 2.0,
            se: None,
        }
    }

    /// The triple for the reversed change `G → F`.
    pub fn swapped(&self) -> Self {
        Self {
            theta_f: self.theta_g,
            theta_g: self.theta_f,
            se: self.se.map(|e| ThetaErrors {
                theta_f: e.theta_g,
                theta_g: e.theta_f,
                ..e
            }),
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    sum: [f64; 4],
    sq: [f64; 4],
}

impl Moments {
    fn push(&mut self, v: [f64; 4]) {
        self.n += 1.0;
        for (i, x) in v.into_iter().enumerate() {
            self.sum[i] += x;
            self.sq[i] += x * x;
        }
    }

    fn merge(mut self, o: &Moments) -> Self {
        self.n += o.n;
        for i in 0..4 {
            self.sum[i] += o.sum[i];
            self.sq[i] += o.sq[i];
        }
        self
    }

    fn mean(&self, i: usize) -> f64 {
        self.sum[i] / self.n
    }

    fn se(&self, i: usize) -> f64 {
        let mean = self.mean(i);
        let var = ((self.sq[i] - self.n * mean * mean) / (self.n - 1.0)).max(0.0);
        (var / self.n).sqrt()
    }
}

fn chunk_sizes(m: usize) -> Vec<usize> {
    (0..m.div_ceil(CHUNK))
        .map(|c| CHUNK.min(m - c * CHUNK))
        .collect()
}

fn check_law(kernel: &dyn Kernel, law: &Law) -> Result<()> {
    let probe = Series::from_observations(&[law.sample(&mut substream(0, 0))])?;
    check_compatible(kernel, &probe)
}

fn check_draws(m: usize) -> Result<()> {
    if m < MIN_MC_DRAWS {
        return Err(Error::Config(format!(
            "Monte Carlo size must be at least {MIN_MC_DRAWS}, got {m}"
        )));
    }
    Ok(())
}

/// Monte Carlo estimate of the θ triple from `m` independent draws of
/// `(X, X', Y, Y')`.
///
/// Draws are split into fixed chunks with one substream each, so the result
/// does not depend on the number of worker threads.
pub fn theta_mc(kernel: &dyn Kernel, f: &Law, g: &Law, m: usize, seed: u64) -> Result<ThetaTriple> {
    check_draws(m)?;
    check_law(kernel, f)?;
    check_law(kernel, g)?;
    let parts: Vec<Moments> = chunk_sizes(m)
        .into_par_iter()
        .enumerate()
        .map(|(c, size)| {
            let mut rng = substream(seed, c as u64);
            let mut acc = Moments::default();
            for _ in 0..size {
                let x = f.sample(&mut rng);
                let x2 = f.sample(&mut rng);
                let y = g.sample(&mut rng);
                let y2 = g.sample(&mut rng);
                let hf = kernel.eval(x, x2);
                let hg = kernel.eval(y, y2);
                let hfg = kernel.eval(x, y);
                acc.push([hf, hg, hfg, hfg - (hf + hg) / 2.0]);
            }
            acc
        })
        .collect();
    let total = parts.iter().fold(Moments::default(), |a, b| a.merge(b));
    let mut triple = ThetaTriple::new(total.mean(0), total.mean(1), total.mean(2));
    triple.se = Some(ThetaErrors {
        theta_f: total.se(0),
        theta_g: total.se(1),
        theta_fg: total.se(2),
        rho: total.se(3),
    });
    Ok(triple)
}

/// Gini mean difference triple for `F = N(μ, σ₁²)`, `G = N(μ, σ₂²)`.
pub fn gmd_normal_triple(sigma1: f64, sigma2: f64) -> Result<ThetaTriple> {
    if !(sigma1 > 0.0 && sigma2 > 0.0) || !sigma1.is_finite() || !sigma2.is_finite() {
        return Err(Error::Domain(format!(
            "standard deviations must be positive, got {sigma1} and {sigma2}"
        )));
    }
    let c = 2.0 / PI.sqrt();
    Ok(ThetaTriple::new(
        c * sigma1,
        c * sigma2,
        c * ((sigma1 * sigma1 + sigma2 * sigma2) / 2.0).sqrt(),
    ))
}

/// Eccentricity of the variance kernel: `(μ_F - μ_G)²/2`.
pub fn variance_rho(mu_f: f64, mu_g: f64) -> f64 {
    let d = mu_f - mu_g;
    d * d / 2.0
}

/// Eccentricity of the covariance kernel from the two mean vectors.
pub fn cov_rho(mean_f: [f64; 2], mean_g: [f64; 2]) -> f64 {
    0.5 * (mean_f[0] - mean_g[0]) * (mean_f[1] - mean_g[1])
}

/// Kendall's tau of a bivariate normal law: `(2/π) arcsin ρ`.
pub fn kendall_normal_theta(rho_corr: f64) -> Result<f64> {
    if rho_corr.is_nan() || rho_corr.abs() >= 1.0 {
        return Err(Error::Domain(format!(
            "correlation must satisfy |rho| < 1, got {rho_corr}"
        )));
    }
    Ok(2.0 / PI * rho_corr.asin())
}

/// Kendall triple for standard bivariate normals with correlations `ρ₁`
/// before and `ρ₂` after the change.
///
/// `X - Y` is bivariate normal with correlation `(ρ₁+ρ₂)/2`, which gives
/// `θ_FG = (2/π) arcsin((ρ₁+ρ₂)/2)`.
pub fn kendall_normal_triple(rho1: f64, rho2: f64) -> Result<ThetaTriple> {
    Ok(ThetaTriple::new(
        kendall_normal_theta(rho1)?,
        kendall_normal_theta(rho2)?,
        kendall_normal_theta((rho1 + rho2) / 2.0)?,
    ))
}

/// Parameters of the fixed-alternative drift functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftSpec {
    pub tau_star: f64,
    pub theta_f: f64,
    pub theta_g: f64,
    pub rho: f64,
    /// Local-alternative height `Δ`.
    #[serde(default)]
    pub delta: f64,
}

impl DriftSpec {
    pub fn new(tau_star: f64, triple: &ThetaTriple) -> Result<Self> {
        if !(tau_star > 0.0 && tau_star < 1.0) {
            return Err(Error::Domain(format!(
                "tau_star must lie in (0, 1), got {tau_star}"
            )));
        }
        Ok(Self {
            tau_star,
            theta_f: triple.theta_f,
            theta_g: triple.theta_g,
            rho: triple.rho,
            delta: 0.0,
        })
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }
}

/// Limit of `D^F_n([nt])/n` under a fixed alternative.
pub fn psi1(t: f64, s: &DriftSpec) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let tau = s.tau_star;
    let d = s.theta_f - s.theta_g;
    let tail = 2.0 * t * tau * (1.0 - tau) * s.rho;
    if t < tau {
        t * (1.0 - tau) * d - tail
    } else {
        (1.0 - t) * tau * d + 2.0 * (t - tau) / t * tau * s.rho - tail
    }
}

/// Limit of `D^L_n([nt])/n` under a fixed alternative.
pub fn psi2(t: f64, s: &DriftSpec) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let tau = s.tau_star;
    let d = s.theta_f - s.theta_g;
    if t < tau {
        t * (1.0 - tau) * d - 2.0 * t * (tau - t) / (1.0 - t) * (1.0 - tau) * s.rho
    } else {
        (1.0 - t) * tau * d + 2.0 * (t - tau) / t * tau * s.rho - 2.0 * (t - tau) * tau * s.rho
    }
}

/// Closed form of `Ψ₂(t) - Ψ₁(t)`.
pub fn psi_diff(t: f64, s: &DriftSpec) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let tau = s.tau_star;
    if t < tau {
        2.0 * t * t * (1.0 - tau) * (1.0 - tau) * s.rho / (1.0 - t)
    } else {
        2.0 * (1.0 - t) * tau * tau * s.rho
    }
}

/// Location of the maximum of `|Ψ₁|` (`Method::FirstVsFull`) or `|Ψ₂|`
/// over `[0, 1]`.
///
/// Each branch has at most one interior stationary point, available in
/// closed form, so the maximizer is `τ*` or one of those points. Ties go to
/// the smaller `t`.
pub fn drift_argmax(s: &DriftSpec, method: Method) -> f64 {
    let tau = s.tau_star;
    let d = s.theta_f - s.theta_g;
    let rho = s.rho;
    let mut candidates = vec![tau];
    let mut right = |t2: f64| {
        if t2.is_finite() && t2 > 0.0 {
            let t = t2.sqrt();
            if t > tau && t < 1.0 {
                candidates.push(t);
            }
        }
    };
    let psi: fn(f64, &DriftSpec) -> f64 = match method {
        Method::FirstVsFull => {
            right(2.0 * tau * rho / (d + 2.0 * (1.0 - tau) * rho));
            psi1
        }
        Method::FirstVsLast => {
            right(2.0 * tau * rho / (d + 2.0 * rho));
            if rho != 0.0 {
                let u2 = (1.0 - tau) / (1.0 - d / (2.0 * rho));
                if u2.is_finite() && u2 > 0.0 {
                    let t = 1.0 - u2.sqrt();
                    if t > 0.0 && t < tau {
                        candidates.push(t);
                    }
                }
            }
            psi2
        }
    };
    candidates.sort_by(f64::total_cmp);
    let mut best = (candidates[0], psi(candidates[0], s).abs());
    for &t in &candidates[1..] {
        let v = psi(t, s).abs();
        if v > best.1 {
            best = (t, v);
        }
    }
    best.0
}

/// Tent-shaped local-alternative drift with peak `τ*(1-τ*)Δ` at `τ*`.
pub fn phi_local(t: f64, tau_star: f64, delta: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else if t < tau_star {
        t * (1.0 - tau_star) * delta
    } else {
        (1.0 - t) * tau_star * delta
    }
}

/// One point of a drift grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiPoint {
    pub t: f64,
    pub psi1: f64,
    pub psi2: f64,
}

/// `Ψ₁` and `Ψ₂` on `points` equally spaced values `t ∈ [0, 1]`.
pub fn psi_grid(s: &DriftSpec, points: usize) -> Vec<PsiPoint> {
    let last = points.saturating_sub(1).max(1) as f64;
    (0..points)
        .map(|i| {
            let t = i as f64 / last;
            PsiPoint {
                t,
                psi1: psi1(t, s),
                psi2: psi2(t, s),
            }
        })
        .collect()
}

/// Which statistic has the larger drift under a fixed alternative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ranking {
    FirstVsFull,
    FirstVsLast,
    Equal,
    /// `θ_F = θ_G` but `ρ ≠ 0`: both tests remain consistent.
    NoThetaChange,
}

impl fmt::Display for Ranking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Ranking::FirstVsFull => "first_vs_full",
            Ranking::FirstVsLast => "first_vs_last",
            Ranking::Equal => "equal",
            Ranking::NoThetaChange => "no_theta_change",
        })
    }
}

/// Ranks the tests with explicit tolerances for `ρ = 0` and `θ_F = θ_G`.
pub fn power_ranking_with_tolerance(triple: &ThetaTriple, rho_tol: f64, theta_tol: f64) -> Ranking {
    let change = triple.theta_g - triple.theta_f;
    if triple.rho.abs() <= rho_tol {
        Ranking::Equal
    } else if change.abs() <= theta_tol {
        Ranking::NoThetaChange
    } else if (triple.rho > 0.0) == (change > 0.0) {
        Ranking::FirstVsFull
    } else {
        Ranking::FirstVsLast
    }
}

/// Ranks the tests: the first-vs-full test is preferred when `ρ` has the
/// sign of `θ_G - θ_F`. Monte Carlo triples use three standard errors as
/// the zero tolerance, closed forms use exact zero.
pub fn power_ranking(triple: &ThetaTriple) -> Ranking {
    match triple.se {
        Some(e) => power_ranking_with_tolerance(
            triple,
            3.0 * e.rho,
            3.0 * (e.theta_f * e.theta_f + e.theta_g * e.theta_g).sqrt(),
        ),
        None => power_ranking_with_tolerance(triple, 0.0, 0.0),
    }
}

/// Whether the sufficient conditions for a unique maximum of `|Ψ₁|`
/// (strict bounds) and `|Ψ₂|` (non-strict bound) at `τ*` hold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArgmaxConsistency {
    pub first_vs_full: bool,
    pub first_vs_last: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

pub fn argmax_consistency(triple: &ThetaTriple, tau_star: f64) -> Result<ArgmaxConsistency> {
    if !(tau_star > 0.0 && tau_star < 1.0) {
        return Err(Error::Domain(format!(
            "tau_star must lie in (0, 1), got {tau_star}"
        )));
    }
    let d = triple.theta_f - triple.theta_g;
    let rho = triple.rho;
    if d == 0.0 {
        return Ok(ArgmaxConsistency {
            first_vs_full: false,
            first_vs_last: false,
            note: Some("theta_f equals theta_g; the sufficient conditions do not apply".into()),
        });
    }
    let tau = tau_star;
    let scale = 2.0 * (tau - 1.0 + 1.0 / tau);
    let first_vs_full = if d > 0.0 {
        -d / 2.0 < rho && rho < d / scale
    } else {
        d / scale < rho && rho < -d / 2.0
    };
    let bound = 0.5 * (tau / (1.0 - tau)).min((1.0 - tau) / tau) * d.abs();
    Ok(ArgmaxConsistency {
        first_vs_full,
        first_vs_last: rho.abs() <= bound,
        note: None,
    })
}

/// Fixed-alternative limit variances of the two statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitVariances {
    pub var_z1: f64,
    pub var_z2: f64,
    pub se_z1: f64,
    pub se_z2: f64,
    pub outer_draws: usize,
    pub inner_draws: usize,
}

#[derive(Debug, Clone, Copy, Default)]
struct NestedMoments {
    n: f64,
    // Components: ĥ_F(X) - τ ĥ_G(X), ĥ_F(X), ĥ_G(Y).
    s: [f64; 3],
    s2: [f64; 3],
    s3: [f64; 3],
    s4: [f64; 3],
    noise: [f64; 3],
}

impl NestedMoments {
    fn push(&mut self, v: [f64; 3], noise: [f64; 3]) {
        self.n += 1.0;
        for i in 0..3 {
            let x = v[i];
            self.s[i] += x;
            self.s2[i] += x * x;
            self.s3[i] += x * x * x;
            self.s4[i] += x * x * x * x;
            self.noise[i] += noise[i];
        }
    }

    fn merge(mut self, o: &NestedMoments) -> Self {
        self.n += o.n;
        for i in 0..3 {
            self.s[i] += o.s[i];
            self.s2[i] += o.s2[i];
            self.s3[i] += o.s3[i];
            self.s4[i] += o.s4[i];
            self.noise[i] += o.noise[i];
        }
        self
    }

    /// Bias-corrected variance of component `i` and its standard error.
    fn variance(&self, i: usize) -> (f64, f64) {
        let n = self.n;
        let m1 = self.s[i] / n;
        let m2 = self.s2[i] / n - m1 * m1;
        let m4 = self.s4[i] / n - 4.0 * m1 * self.s3[i] / n + 6.0 * m1 * m1 * self.s2[i] / n
            - 3.0 * m1.powi(4);
        let var = m2 * n / (n - 1.0);
        let se = ((m4 - m2 * m2).max(0.0) / n).sqrt();
        (var - self.noise[i] / n, se)
    }
}

fn mean_and_var(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0);
    (mean, var)
}

/// Nested Monte Carlo estimate of the limit variances of `Z₁` and `Z₂`.
///
/// Each of the `m` outer draws approximates `h_F(x) = E h(x, X')` and
/// `h_G(x) = E h(x, Y')` from `⌈√m⌉` fresh inner draws. The inner noise
/// inflates the outer variance by the mean inner variance over `⌈√m⌉`,
/// which is estimated per draw and subtracted.
pub fn limit_variances(
    kernel: &dyn Kernel,
    f: &Law,
    g: &Law,
    tau_star: f64,
    m: usize,
    seed: u64,
) -> Result<LimitVariances> {
    check_draws(m)?;
    check_law(kernel, f)?;
    check_law(kernel, g)?;
    if !(tau_star > 0.0 && tau_star < 1.0) {
        return Err(Error::Domain(format!(
            "tau_star must lie in (0, 1), got {tau_star}"
        )));
    }
    let tau = tau_star;
    let inner = (m as f64).sqrt().ceil() as usize;
    let kf = inner as f64;
    let parts: Vec<NestedMoments> = chunk_sizes(m)
        .into_par_iter()
        .enumerate()
        .map(|(c, size)| {
            let mut rng = substream(seed, c as u64);
            let mut acc = NestedMoments::default();
            let mut hxf = vec![0.0; inner];
            let mut hxg = vec![0.0; inner];
            let mut hyg = vec![0.0; inner];
            for _ in 0..size {
                let x = f.sample(&mut rng);
                let y = g.sample(&mut rng);
                for j in 0..inner {
                    hxf[j] = kernel.eval(x, f.sample(&mut rng));
                    hxg[j] = kernel.eval(x, g.sample(&mut rng));
                    hyg[j] = kernel.eval(y, g.sample(&mut rng));
                }
                let (mf, vf) = mean_and_var(&hxf);
                let (mg, vg) = mean_and_var(&hxg);
                let (my, vy) = mean_and_var(&hyg);
                acc.push(
                    [mf - tau * mg, mf, my],
                    [(vf + tau * tau * vg) / kf, vf / kf, vy / kf],
                );
            }
            acc
        })
        .collect();
    let total = parts
        .iter()
        .fold(NestedMoments::default(), |a, b| a.merge(b));
    let (va, sa) = total.variance(0);
    let (vf, sf) = total.variance(1);
    let (vg, sg) = total.variance(2);
    let cg = 4.0 * tau * tau * (1.0 - tau);
    let c1 = 4.0 * tau;
    let c2 = 4.0 * tau * (1.0 - tau) * (1.0 - tau);
    Ok(LimitVariances {
        var_z1: c1 * va + cg * vg,
        var_z2: c2 * vf + cg * vg,
        se_z1: ((c1 * sa).powi(2) + (cg * sg).powi(2)).sqrt(),
        se_z2: ((c2 * sf).powi(2) + (cg * sg).powi(2)).sqrt(),
        outer_draws: m,
        inner_draws: inner,
    })
}

/// Triple, ranking and consistency flags, optionally with a drift grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub kernel: String,
    pub triple: ThetaTriple,
    pub ranking: Ranking,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_star: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub argmax_consistency: Option<ArgmaxConsistency>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi_grid: Option<Vec<PsiPoint>>,
}

impl TheoryReport {
    pub fn new(
        kernel: &str,
        triple: ThetaTriple,
        tau_star: Option<f64>,
        grid_points: usize,
    ) -> Result<Self> {
        let (consistency, grid) = match tau_star {
            Some(tau) => {
                let c = argmax_consistency(&triple, tau)?;
                let grid = (grid_points > 0)
                    .then(|| DriftSpec::new(tau, &triple).map(|s| psi_grid(&s, grid_points)))
                    .transpose()?;
                (Some(c), grid)
            }
            None => (None, None),
        };
        Ok(Self {
            kernel: kernel.to_string(),
            triple,
            ranking: power_ranking(&triple),
            tau_star,
            argmax_consistency: consistency,
            psi_grid: grid,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn gmd_normal_values() {
        let t = gmd_normal_triple(1.0, 2.0).unwrap();
        assert!(close(t.theta_f, 1.12838, 5e-6));
        assert!(close(t.theta_g, 2.25676, 5e-6));
        assert!(close(t.theta_fg, 1.78412, 5e-6));
        assert!(close(t.rho, 0.09155, 5e-5));
        assert_eq!(gmd_normal_triple(1.0, 1.0).unwrap().rho, 0.0);
        assert!(gmd_normal_triple(0.0, 1.0).is_err());
    }

    #[test]
    fn gmd_normal_scales_linearly() {
        let a = gmd_normal_triple(1.0, 3.0).unwrap();
        let b = gmd_normal_triple(2.5, 7.5).unwrap();
        assert!(close(b.rho, 2.5 * a.rho, 1e-14));
    }

    #[test]
    fn simple_closed_forms() {
        assert_eq!(variance_rho(0.0, 1.0), 0.5);
        assert_eq!(variance_rho(2.0, 2.0), 0.0);
        assert_eq!(cov_rho([0.0, 0.0], [1.0, 2.0]), 1.0);
        assert!(close(kendall_normal_theta(0.5).unwrap(), 1.0 / 3.0, 1e-15));
        assert_eq!(kendall_normal_theta(0.0).unwrap(), 0.0);
        assert_eq!(
            kendall_normal_theta(-0.3).unwrap(),
            -kendall_normal_theta(0.3).unwrap()
        );
        assert!(kendall_normal_theta(1.0).is_err());
    }

    #[test]
    fn kendall_alternative_signs() {
        let n = 63.0_f64;
        let alt2 = kendall_normal_triple(0.0, 6.0 / n.sqrt()).unwrap();
        let alt3 = kendall_normal_triple(-6.0 / n.sqrt(), 0.0).unwrap();
        let alt1 = kendall_normal_triple(-3.0 / n.sqrt(), 3.0 / n.sqrt()).unwrap();
        assert!(alt2.rho < 0.0);
        assert!(alt3.rho > 0.0);
        assert_eq!(alt1.rho, 0.0);
        assert_eq!(power_ranking(&alt2), Ranking::FirstVsLast);
        assert_eq!(power_ranking(&alt3), Ranking::FirstVsFull);
        assert_eq!(power_ranking(&alt1), Ranking::Equal);
    }

    fn spec(tau: f64, triple: ThetaTriple) -> DriftSpec {
        DriftSpec::new(tau, &triple).unwrap()
    }

    #[test]
    fn psi_at_change_point() {
        let s = spec(1.0 / 3.0, gmd_normal_triple(1.0, 2.0).unwrap());
        assert!(close(psi1(1.0 / 3.0, &s), -0.26431, 1e-4));
        assert!(close(psi2(1.0 / 3.0, &s), -0.25075, 1e-4));
        let r = s.rho;
        assert!(close(psi_diff(0.5, &s), 2.0 * 0.5 * (1.0 / 9.0) * r, 1e-15));
    }

    #[test]
    fn psi_endpoints_are_zero() {
        let s = spec(0.4, ThetaTriple::new(1.0, 2.0, 3.0));
        for t in [0.0, 1.0] {
            assert_eq!(psi1(t, &s), 0.0);
            assert_eq!(psi2(t, &s), 0.0);
        }
        assert!(close(psi1(1.0 - 1e-9, &s), 0.0, 1e-7));
        assert!(close(psi2(1.0 - 1e-9, &s), 0.0, 1e-7));
    }

    #[test]
    fn psi_difference_identity() {
        let s = spec(0.3, ThetaTriple::new(0.7, 1.9, 1.6));
        for i in 0..=1000 {
            let t = i as f64 / 1000.0;
            assert!(
                close(psi2(t, &s) - psi1(t, &s), psi_diff(t, &s), 1e-12),
                "t={t}"
            );
        }
    }

    #[test]
    fn zero_rho_makes_limits_equal() {
        let s = spec(0.6, ThetaTriple::new(1.0, 3.0, 2.0));
        assert_eq!(s.rho, 0.0);
        for i in 0..=1000 {
            let t = i as f64 / 1000.0;
            assert!(close(psi1(t, &s), psi2(t, &s), 1e-15));
            assert_eq!(psi_diff(t, &s), 0.0);
        }
    }

    #[test]
    fn difference_has_sign_of_rho() {
        for rho in [-0.4, 0.25] {
            let s = DriftSpec {
                tau_star: 0.45,
                theta_f: 1.0,
                theta_g: 1.5,
                rho,
                delta: 0.0,
            };
            for i in 1..1000 {
                let t = i as f64 / 1000.0;
                assert_eq!(psi_diff(t, &s).signum(), rho.signum());
            }
        }
    }

    // With F = U[1,3] and G = U[0,1], θ_F - θ_G = 1/3 and ρ = 1.
    fn uniform_example() -> DriftSpec {
        spec(0.5, ThetaTriple::new(2.0 / 3.0, 1.0 / 3.0, 1.5))
    }

    #[test]
    fn uniform_example_drift_maximum() {
        let s = uniform_example();
        assert_eq!(s.rho, 1.0);
        assert!(close(psi2(0.5, &s), 1.0 / 12.0, 1e-15));
        let t_max = (3.0_f64 / 7.0).sqrt();
        assert!(close(
            psi2(t_max, &s),
            5.0 / 3.0 - (7.0_f64 / 3.0).sqrt(),
            1e-14
        ));
        let (mut best_t, mut best) = (0.0, 0.0);
        for i in 0..=100_000 {
            let t = i as f64 / 100_000.0;
            let v = psi2(t, &s).abs();
            if v > best {
                best = v;
                best_t = t;
            }
        }
        assert!(close(best_t, t_max, 1e-5));
        assert!(close(drift_argmax(&s, Method::FirstVsLast), t_max, 1e-15));
    }

    #[test]
    fn drift_argmax_matches_grid_search() {
        let mut state = 0x2545_f491_4f6c_dd1d_u64;
        let mut unif = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..200 {
            let s = DriftSpec {
                tau_star: 0.05 + 0.9 * unif(),
                theta_f: 3.0 * unif(),
                theta_g: 3.0 * unif(),
                rho: 4.0 * unif() - 2.0,
                delta: 0.0,
            };
            for (m, f) in [
                (Method::FirstVsFull, psi1 as fn(f64, &DriftSpec) -> f64),
                (Method::FirstVsLast, psi2),
            ] {
                let best = (0..=200_000)
                    .map(|i| f(i as f64 / 200_000.0, &s).abs())
                    .fold(0.0_f64, f64::max);
                let t = drift_argmax(&s, m);
                assert!(f(t, &s).abs() >= best - 1e-12, "{s:?} {m:?}");
            }
        }
    }

    #[test]
    fn reversed_order_mirrors_the_drift() {
        // U[0,1] → U[1,3]: drift is the negative mirror image around t = 1/2.
        let s = spec(0.5, ThetaTriple::new(1.0 / 3.0, 2.0 / 3.0, 1.5));
        assert!(close(psi2(0.5, &s), -1.0 / 12.0, 1e-15));
        let t = 1.0 - (3.0_f64 / 7.0).sqrt();
        assert!(close(
            psi2(t, &s),
            -(5.0 / 3.0 - (7.0_f64 / 3.0).sqrt()),
            1e-14
        ));
    }

    #[test]
    fn tent_function() {
        assert!(close(
            phi_local(1.0 / 3.0, 1.0 / 3.0, 1.0),
            2.0 / 9.0,
            1e-15
        ));
        assert_eq!(phi_local(0.0, 0.3, 2.0), 0.0);
        assert_eq!(phi_local(1.0, 0.3, 2.0), 0.0);
        let peak = phi_local(0.3, 0.3, 2.0);
        for i in 0..=100 {
            assert!(phi_local(i as f64 / 100.0, 0.3, 2.0) <= peak + 1e-15);
        }
    }

    #[test]
    fn ranking_of_normal_scale_changes() {
        assert_eq!(
            power_ranking(&gmd_normal_triple(1.0, 2.0).unwrap()),
            Ranking::FirstVsFull
        );
        assert_eq!(
            power_ranking(&gmd_normal_triple(2.0, 1.0).unwrap()),
            Ranking::FirstVsLast
        );
        assert_eq!(
            power_ranking(&ThetaTriple::new(1.0, 4.0, 2.5)),
            Ranking::Equal
        );
        assert_eq!(
            power_ranking(&ThetaTriple::new(1.0, 1.0, 2.0)),
            Ranking::NoThetaChange
        );
    }

    #[test]
    fn ranking_uses_standard_errors() {
        let mut t = ThetaTriple::new(1.0, 2.0, 1.51);
        t.se = Some(ThetaErrors {
            theta_f: 0.001,
            theta_g: 0.001,
            theta_fg: 0.001,
            rho: 0.004,
        });
        assert_eq!(power_ranking(&t), Ranking::Equal);
        t.se.as_mut().unwrap().rho = 0.001;
        assert_eq!(power_ranking(&t), Ranking::FirstVsFull);
    }

    #[test]
    fn argmax_checker() {
        let c = argmax_consistency(&ThetaTriple::new(1.0, 2.0, 2.0), 0.5).unwrap();
        assert!(c.first_vs_last);
        let c = argmax_consistency(&ThetaTriple::new(1.0, 2.0, 3.5), 0.5).unwrap();
        assert!(!c.first_vs_last);
        let c = argmax_consistency(&ThetaTriple::new(2.0 / 3.0, 1.0 / 3.0, 1.5), 0.5).unwrap();
        assert!(!c.first_vs_last && !c.first_vs_full);
        let c = argmax_consistency(&ThetaTriple::new(1.0, 1.0, 3.0), 0.5).unwrap();
        assert!(!c.first_vs_full && !c.first_vs_last && c.note.is_some());
        // ρ = 0 with a real change satisfies both
        let c = argmax_consistency(&ThetaTriple::new(1.0, 4.0, 2.5), 1.0 / 3.0).unwrap();
        assert!(c.first_vs_full && c.first_vs_last);
    }

    #[test]
    fn part_one_bounds_are_strict() {
        // θ_F < θ_G, τ = 1/2: upper bound (θ_G - θ_F)/2 = 0.5
        let on_bound = ThetaTriple::new(1.0, 2.0, 2.0);
        assert_eq!(on_bound.rho, 0.5);
        assert!(!argmax_consistency(&on_bound, 0.5).unwrap().first_vs_full);
        assert!(argmax_consistency(&on_bound, 0.5).unwrap().first_vs_last);
    }

    #[test]
    fn report_round_trips() {
        let r = TheoryReport::new(
            "gmd",
            gmd_normal_triple(1.0, 2.0).unwrap(),
            Some(1.0 / 3.0),
            11,
        )
        .unwrap();
        let json = serde_json::to_string(&r).unwrap();
        let back: TheoryReport = serde_json::from_str(&json).unwrap();
        assert_eq!(r, back);
        assert_eq!(r.psi_grid.as_ref().unwrap().len(), 11);
    }
}
