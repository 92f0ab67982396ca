//! U-statistic CUSUM change-point tests comparing the first segment of a
//! series with either the full sample or the remaining segment.

mod concord;
pub mod cptest;
pub mod error;
mod fenwick;
pub mod kernel;
pub mod lrv;
pub mod mcsim;
pub mod nulldist;
mod numeric;
pub mod sampler;
pub mod series;
pub mod theory;
pub mod uproc;

pub use cptest::{
    analyze, estimate_location, run_both, run_test, Analysis, Location, Method, TestReport,
};
pub use error::{Error, Result};
pub use kernel::{builtin_kernel, projection, BuiltinKernel, FnKernel, Kernel, ProjectionVector};
pub use lrv::{
    long_run_variance, studentize, Bandwidth, BandwidthRule, LagWindow, LrvConfig, LrvVariant,
};
pub use mcsim::{run_scenario, trajectory_bundle, PowerRow, PowerTable, Scenario, Study};
pub use nulldist::{kolmogorov_cdf, kolmogorov_quantile, p_value};
pub use sampler::{bivariate_normal_sampler, DistSpec, HeightRule, Law, Param, Sampler};
pub use series::{Dimension, Observation, Series};
pub use theory::{
    argmax_consistency, drift_argmax, gmd_normal_triple, kendall_normal_theta, limit_variances,
    phi_local, power_ranking, psi1, psi2, psi_diff, theta_mc, DriftSpec, Ranking, TheoryReport,
    ThetaTriple,
};
pub use uproc::{diff_processes, prefix_u, suffix_u, DiffProcess, UPath};
