//! Seeded Monte Carlo power studies and trajectory bundles.
//!
//! Replication `r` of a scenario with seed `s` draws its whole series from
//! the ChaCha8 stream `(s, r)`, so results do not depend on how
//! replications are scheduled across threads.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cptest::{analyze, Method};
use crate::error::{Error, Result};
use crate::kernel::{BuiltinKernel, Kernel};
use crate::lrv::{studentize, LrvConfig};
use crate::nulldist::p_value;
use crate::sampler::{substream, DistSpec, Law};
use crate::series::{Observation, Series};
use crate::theory::{psi1, psi2, DriftSpec};
use crate::uproc::diff_processes;

/// Default replication count for Kendall designs at `n ≥ KENDALL_LARGE_N`.
pub const KENDALL_LARGE_RUNS: usize = 500;
pub const KENDALL_LARGE_N: usize = 4000;

fn default_alpha() -> f64 {
    0.05
}

/// One simulation design at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default)]
    pub label: String,
    pub kernel: BuiltinKernel,
    pub n: usize,
    /// Change fraction; `None` simulates the null hypothesis.
    #[serde(default)]
    pub tau_star: Option<f64>,
    pub pre: DistSpec,
    #[serde(default)]
    pub post: Option<DistSpec>,
    pub runs: usize,
    pub seed: u64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub lrv: LrvConfig,
}

impl Scenario {
    /// `[nτ*]`: observations `1..=k*` follow the pre-change law.
    pub fn change_index(&self) -> usize {
        match self.tau_star {
            Some(tau) => (self.n as f64 * tau).floor() as usize,
            None => self.n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        match (self.tau_star, &self.post) {
            (Some(tau), Some(_)) if !(tau > 0.0 && tau < 1.0) => {
                return Err(Error::Config(format!(
                    "tau_star must lie in (0, 1), got {tau}"
                )));
            }
            (Some(_), None) => {
                return Err(Error::Config("tau_star is set but post is missing".into()));
            }
            _ => {}
        }
        self.prepare().map(|_| ())
    }

    /// Resolves height rules at this scenario's `n`.
    pub fn prepare(&self) -> Result<Prepared> {
        let pre = self.pre.resolve(self.n)?;
        let post = match (&self.post, self.tau_star) {
            (Some(p), Some(_)) => Some(p.resolve(self.n)?),
            _ => None,
        };
        if let Some(p) = &post {
            if p.dimension() != pre.dimension() {
                return Err(Error::Config(
                    "pre and post laws differ in dimension".into(),
                ));
            }
        }
        Ok(Prepared {
            n: self.n,
            change: self.change_index(),
            seed: self.seed,
            pre,
            post,
        })
    }
}

/// A scenario with resolved laws, able to produce replication series.
#[derive(Debug, Clone)]
pub struct Prepared {
    n: usize,
    change: usize,
    seed: u64,
    pre: Law,
    post: Option<Law>,
}

impl Prepared {
    /// The series of replication `r`.
    pub fn series(&self, r: u64) -> Series {
        let mut rng = substream(self.seed, r);
        let obs: Vec<Observation> = (0..self.n)
            .map(|i| match &self.post {
                Some(post) if i >= self.change => post.sample(&mut rng),
                _ => self.pre.sample(&mut rng),
            })
            .collect();
        Series::from_observations(&obs).expect("laws produce finite values of one dimension")
    }
}

/// Applies `f` to replications `0..runs` in parallel, returning results in
/// replication order.
pub fn map_replications<T, F>(prepared: &Prepared, runs: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&Series) -> T + Sync,
{
    (0..runs as u64)
        .into_par_iter()
        .map(|r| f(&prepared.series(r)))
        .collect()
}

/// Rejection count and frequency of one method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodPower {
    pub rejections: usize,
    pub frequency: f64,
    /// Binomial standard error `√(p(1-p)/runs)`.
    pub se: f64,
}

impl MethodPower {
    fn new(rejections: usize, runs: usize) -> Self {
        let p = rejections as f64 / runs as f64;
        Self {
            rejections,
            frequency: p,
            se: (p * (1.0 - p) / runs as f64).sqrt(),
        }
    }
}

/// Result of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub label: String,
    pub kernel: BuiltinKernel,
    pub n: usize,
    pub tau_star: Option<f64>,
    pub runs: usize,
    /// Replications with a non-positive variance estimate, counted as
    /// non-rejections.
    pub degenerate: usize,
    pub first_vs_full: MethodPower,
    pub first_vs_last: MethodPower,
}

impl PowerRow {
    pub fn power(&self, method: Method) -> &MethodPower {
        match method {
            Method::FirstVsFull => &self.first_vs_full,
            Method::FirstVsLast => &self.first_vs_last,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Counts {
    fvf: usize,
    fvl: usize,
    degenerate: usize,
}

impl Counts {
    fn merge(self, o: Counts) -> Counts {
        Counts {
            fvf: self.fvf + o.fvf,
            fvl: self.fvl + o.fvl,
            degenerate: self.degenerate + o.degenerate,
        }
    }
}

/// Runs a scenario with its built-in kernel.
pub fn run_scenario(s: &Scenario) -> Result<PowerRow> {
    run_scenario_with(s, &s.kernel)
}

/// Runs a scenario with an arbitrary kernel.
pub fn run_scenario_with(s: &Scenario, kernel: &dyn Kernel) -> Result<PowerRow> {
    s.validate()?;
    let prepared = s.prepare()?;
    // Surface configuration errors before fanning out.
    let probe = prepared.series(0);
    if let Err(e) = analyze(&probe, kernel, &s.lrv) {
        if !matches!(e, Error::DegenerateVariance { .. }) {
            return Err(e);
        }
    }
    let counts = (0..s.runs as u64)
        .into_par_iter()
        .map(|r| {
            let series = prepared.series(r);
            match analyze(&series, kernel, &s.lrv) {
                Ok(a) => {
                    let (t1, t2) = studentize(&a.diff, a.sigma2).expect("positive variance");
                    Counts {
                        fvf: usize::from(p_value(t1) <= s.alpha),
                        fvl: usize::from(p_value(t2) <= s.alpha),
                        degenerate: 0,
                    }
                }
                Err(_) => Counts {
                    degenerate: 1,
                    ..Counts::default()
                },
            }
        })
        .reduce(Counts::default, Counts::merge);
    Ok(PowerRow {
        label: s.label.clone(),
        kernel: s.kernel,
        n: s.n,
        tau_star: s.tau_star,
        runs: s.runs,
        degenerate: counts.degenerate,
        first_vs_full: MethodPower::new(counts.fvf, s.runs),
        first_vs_last: MethodPower::new(counts.fvl, s.runs),
    })
}

/// One row of a study: a design evaluated at every sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Design {
    pub label: String,
    #[serde(default)]
    pub tau_star: Option<f64>,
    pub pre: DistSpec,
    #[serde(default)]
    pub post: Option<DistSpec>,
    #[serde(default)]
    pub runs: Option<usize>,
}

/// A study file: designs crossed with sample sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Study {
    #[serde(default)]
    pub title: String,
    pub kernel: BuiltinKernel,
    pub sizes: Vec<usize>,
    pub runs: usize,
    pub seed: u64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub lrv: LrvConfig,
    /// Replications for Kendall designs at large `n` unless a design sets
    /// its own count.
    #[serde(default)]
    pub kendall_large_runs: Option<usize>,
    pub designs: Vec<Design>,
}

impl Study {
    /// All scenarios, design-major. Scenario `i` uses seed
    /// `seed + i·0x9E3779B97F4A7C15` (wrapping).
    pub fn scenarios(&self) -> Vec<Scenario> {
        let mut out = Vec::new();
        for d in &self.designs {
            for &n in &self.sizes {
                let runs = d.runs.unwrap_or_else(|| {
                    if self.kernel == BuiltinKernel::Kendall && n >= KENDALL_LARGE_N {
                        self.kendall_large_runs
                            .unwrap_or(KENDALL_LARGE_RUNS)
                            .min(self.runs)
                    } else {
                        self.runs
                    }
                });
                let i = out.len() as u64;
                out.push(Scenario {
                    label: d.label.clone(),
                    kernel: self.kernel,
                    n,
                    tau_star: d.tau_star,
                    pre: d.pre.clone(),
                    post: d.post.clone(),
                    runs,
                    seed: self
                        .seed
                        .wrapping_add(i.wrapping_mul(0x9E37_79B9_7F4A_7C15)),
                    alpha: self.alpha,
                    lrv: self.lrv,
                });
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() {
            return Err(Error::Config("sizes must not be empty".into()));
        }
        if self.designs.is_empty() {
            return Err(Error::Config("designs must not be empty".into()));
        }
        for s in self.scenarios() {
            s.validate()
                .map_err(|e| Error::Config(format!("design `{}`, n = {}: {e}", s.label, s.n)))?;
        }
        Ok(())
    }

    pub fn run(&self) -> Result<PowerTable> {
        self.validate()?;
        let rows = self
            .scenarios()
            .iter()
            .map(run_scenario)
            .collect::<Result<Vec<_>>>()?;
        Ok(PowerTable {
            title: self.title.clone(),
            rows,
        })
    }
}

/// Rejection frequencies of a set of scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerTable {
    pub title: String,
    pub rows: Vec<PowerRow>,
}

fn tau_label(tau: Option<f64>) -> String {
    tau.map(|t| format!("{t}")).unwrap_or_default()
}

impl PowerTable {
    pub fn find(&self, label: &str, tau_star: Option<f64>, n: usize) -> Option<&PowerRow> {
        self.rows
            .iter()
            .find(|r| r.label == label && r.tau_star == tau_star && r.n == n)
    }

    /// One CSV line per (scenario, method), frequencies in percent.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "label,kernel,n,tau_star,method,rejections,runs,frequency_pct,se_pct,degenerate\n",
        );
        for r in &self.rows {
            for m in [Method::FirstVsFull, Method::FirstVsLast] {
                let p = r.power(m);
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{:.1},{:.2},{}",
                    csv_field(&r.label),
                    r.kernel,
                    r.n,
                    tau_label(r.tau_star),
                    m.short(),
                    p.rejections,
                    r.runs,
                    100.0 * p.frequency,
                    100.0 * p.se,
                    r.degenerate
                );
            }
        }
        out
    }

    /// Aligned text with designs and change locations as row groups and
    /// sample sizes as columns.
    pub fn to_text(&self) -> String {
        let mut sizes: Vec<usize> = self.rows.iter().map(|r| r.n).collect();
        sizes.sort_unstable();
        sizes.dedup();
        let mut groups: Vec<(String, Option<f64>)> = Vec::new();
        for r in &self.rows {
            let key = (r.label.clone(), r.tau_star);
            if !groups.contains(&key) {
                groups.push(key);
            }
        }
        let label_w = groups
            .iter()
            .map(|g| g.0.chars().count())
            .max()
            .unwrap_or(0)
            .max("scenario".len());
        let mut out = String::new();
        if !self.title.is_empty() {
            let _ = writeln!(out, "{}", self.title);
        }
        let _ = write!(
            out,
            "{:<label_w$}  {:>8}  {:>6} |",
            "scenario", "tau*", "test"
        );
        for n in &sizes {
            let _ = write!(out, " {:>7}", n);
        }
        out.push('\n');
        let width = label_w + 2 + 8 + 2 + 6 + 2 + 8 * sizes.len();
        let _ = writeln!(out, "{}", "-".repeat(width));
        let mut previous_label: Option<&str> = None;
        for (label, tau) in &groups {
            for m in [Method::FirstVsFull, Method::FirstVsLast] {
                let shown = if m == Method::FirstVsFull && previous_label != Some(label.as_str()) {
                    label.as_str()
                } else {
                    ""
                };
                let _ = write!(
                    out,
                    "{:<label_w$}  {:>8}  {:>6} |",
                    shown,
                    tau_label(*tau),
                    m.short()
                );
                for n in &sizes {
                    match self.find(label, *tau, *n) {
                        Some(r) => {
                            let _ = write!(out, " {:>7.1}", 100.0 * r.power(m).frequency);
                        }
                        None => {
                            let _ = write!(out, " {:>7}", "-");
                        }
                    }
                }
                out.push('\n');
                previous_label = Some(label.as_str());
            }
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Scaled processes of one realization with optional drift overlays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub k: usize,
    pub t: f64,
    pub d_full: f64,
    pub d_last: f64,
    pub psi1: Option<f64>,
    pub psi2: Option<f64>,
}

/// `(k/n, D^F(k)/n, D^L(k)/n, Ψ₁(k/n), Ψ₂(k/n))` for `k = 1..=n`.
pub fn trajectory_rows(
    series: &Series,
    kernel: &dyn Kernel,
    drift: Option<&DriftSpec>,
) -> Result<Vec<TrajectoryRow>> {
    let d = diff_processes(kernel, series)?;
    let nf = d.n as f64;
    Ok((1..=d.n)
        .map(|k| {
            let t = k as f64 / nf;
            TrajectoryRow {
                k,
                t,
                d_full: d.d_full(k) / nf,
                d_last: d.d_last(k) / nf,
                psi1: drift.map(|s| psi1(t, s)),
                psi2: drift.map(|s| psi2(t, s)),
            }
        })
        .collect())
}

/// Trajectory of replication 0 of `s`.
pub fn trajectory_bundle(s: &Scenario, drift: Option<&DriftSpec>) -> Result<Vec<TrajectoryRow>> {
    s.validate()?;
    let series = s.prepare()?.series(0);
    trajectory_rows(&series, &s.kernel, drift)
}

/// CSV with header `k,t,d_full,d_last[,psi1,psi2]`.
pub fn trajectory_csv(rows: &[TrajectoryRow]) -> String {
    let overlay = rows.first().is_some_and(|r| r.psi1.is_some());
    let mut out = String::from(if overlay {
        "k,t,d_full,d_last,psi1,psi2\n"
    } else {
        "k,t,d_full,d_last\n"
    });
    for r in rows {
        let _ = write!(out, "{},{},{},{}", r.k, r.t, r.d_full, r.d_last);
        if let (Some(a), Some(b)) = (r.psi1, r.psi2) {
            let _ = write!(out, ",{a},{b}");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::HeightRule;
    use crate::sampler::Param;
    use crate::theory::gmd_normal_triple;

    fn null_gmd(n: usize, runs: usize, seed: u64) -> Scenario {
        Scenario {
            label: "null".into(),
            kernel: BuiltinKernel::Gmd,
            n,
            tau_star: None,
            pre: DistSpec::normal(0.0, 1.0),
            post: None,
            runs,
            seed,
            alpha: 0.05,
            lrv: LrvConfig::default(),
        }
    }

    #[test]
    fn change_index_is_floor() {
        let mut s = null_gmd(63, 1, 0);
        s.tau_star = Some(0.25);
        assert_eq!(s.change_index(), 15);
        s.n = 100;
        s.tau_star = Some(1.0 / 3.0);
        assert_eq!(s.change_index(), 33);
    }

    #[test]
    fn single_run_frequency_is_zero_or_one() {
        let row = run_scenario(&null_gmd(50, 1, 4)).unwrap();
        for m in [Method::FirstVsFull, Method::FirstVsLast] {
            let f = row.power(m).frequency;
            assert!(f == 0.0 || f == 1.0);
        }
    }

    #[test]
    fn post_law_applies_after_change() {
        let s = Scenario {
            tau_star: Some(0.5),
            pre: DistSpec::Tabulated { values: vec![1.0] },
            post: Some(DistSpec::Tabulated { values: vec![2.0] }),
            ..null_gmd(9, 1, 0)
        };
        let x = s.prepare().unwrap().series(0);
        assert_eq!(
            x.as_univariate().unwrap(),
            &[1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 2.0, 2.0]
        );
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let s = Scenario {
            tau_star: Some(0.5),
            post: Some(DistSpec::Normal {
                mean: Param::Value(0.0),
                sd: Param::Rule(HeightRule::SigmaLocal { c: 3.0 }),
            }),
            ..null_gmd(63, 64, 17)
        };
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let three = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap();
        let a = one.install(|| run_scenario(&s)).unwrap();
        let b = three.install(|| run_scenario(&s)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn degenerate_replications_are_counted() {
        let s = Scenario {
            pre: DistSpec::Tabulated { values: vec![3.0] },
            ..null_gmd(20, 5, 1)
        };
        let row = run_scenario(&s).unwrap();
        assert_eq!(row.degenerate, 5);
        assert_eq!(row.first_vs_full.rejections, 0);
    }

    #[test]
    fn invalid_scenarios() {
        assert!(run_scenario(&null_gmd(50, 0, 0)).is_err());
        let s = Scenario {
            tau_star: Some(0.5),
            ..null_gmd(50, 1, 0)
        };
        assert!(run_scenario(&s).is_err());
        let s = Scenario {
            kernel: BuiltinKernel::Kendall,
            ..null_gmd(50, 1, 0)
        };
        assert!(matches!(
            run_scenario(&s),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn study_expansion() {
        let study: Study = serde_json::from_str(
            r#"{
                "title": "t", "kernel": "kendall", "sizes": [63, 4000], "runs": 2000, "seed": 5,
                "designs": [
                    {"label": "NH", "pre": {"family": "bivariate_normal", "rho": {"rule": "rho_local", "c": -3}}},
                    {"label": "A1", "tau_star": 0.5,
                     "pre": {"family": "bivariate_normal", "rho": {"rule": "rho_local", "c": -3}},
                     "post": {"family": "bivariate_normal", "rho": {"rule": "rho_local", "c": 3}}}
                ]
            }"#,
        )
        .unwrap();
        let s = study.scenarios();
        assert_eq!(s.len(), 4);
        assert_eq!(s[0].runs, 2000);
        assert_eq!(s[1].runs, KENDALL_LARGE_RUNS);
        assert_eq!(s[3].tau_star, Some(0.5));
        assert_ne!(s[0].seed, s[1].seed);
        study.validate().unwrap();
    }

    #[test]
    fn table_layouts() {
        let table = PowerTable {
            title: "demo".into(),
            rows: vec![
                run_scenario(&null_gmd(30, 10, 1)).unwrap(),
                run_scenario(&null_gmd(40, 10, 2)).unwrap(),
            ],
        };
        let csv = table.to_csv();
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.starts_with("label,kernel,n,tau_star,method"));
        let text = table.to_text();
        assert!(text.contains("FvsF") && text.contains("FvsL"));
        assert!(text.lines().nth(1).unwrap().contains("30"));
    }

    #[test]
    fn trajectory_overlays() {
        let s = Scenario {
            tau_star: Some(1.0 / 3.0),
            post: Some(DistSpec::normal(0.0, 2.0)),
            ..null_gmd(120, 1, 3)
        };
        let drift = DriftSpec::new(1.0 / 3.0, &gmd_normal_triple(1.0, 2.0).unwrap()).unwrap();
        let a = trajectory_bundle(&s, Some(&drift)).unwrap();
        let b = trajectory_bundle(
            &Scenario {
                seed: 99,
                ..s.clone()
            },
            Some(&drift),
        )
        .unwrap();
        assert_eq!(a.len(), 120);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.psi1, y.psi1);
            assert_eq!(x.psi2, y.psi2);
        }
        assert_eq!(a[39].psi1, Some(psi1(40.0 / 120.0, &drift)));
        let csv = trajectory_csv(&a);
        assert!(csv.starts_with("k,t,d_full,d_last,psi1,psi2\n"));
        assert_eq!(csv.lines().count(), 121);
    }
}
