//! Seeded observation generators for simulations and Monte Carlo integrals.
//!
//! Random numbers come from ChaCha8 with one independent stream per
//! replication or chunk (`seed_from_u64(seed)` then `set_stream(index)`).
//! Normal variates use the ziggurat method of `rand_distr::StandardNormal`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Exp, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{Dimension, Observation, Series};

/// Generator for replication or chunk `stream` of a run seeded by `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Sample-size dependent change heights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum HeightRule {
    /// `1 + c/√n`
    SigmaLocal { c: f64 },
    /// `c/√n`
    RhoLocal { c: f64 },
    /// `base + c·n^(-exponent)`
    Local {
        #[serde(default)]
        base: f64,
        c: f64,
        #[serde(default = "half")]
        exponent: f64,
    },
}

fn half() -> f64 {
    0.5
}

/// A distribution parameter: a number or a [`HeightRule`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Param {
    Value(f64),
    Rule(HeightRule),
}

impl From<f64> for Param {
    fn from(v: f64) -> Self {
        Param::Value(v)
    }
}

impl Param {
    pub fn resolve(self, n: usize) -> f64 {
        let nf = n as f64;
        match self {
            Param::Value(v) => v,
            Param::Rule(HeightRule::SigmaLocal { c }) => 1.0 + c / nf.sqrt(),
            Param::Rule(HeightRule::RhoLocal { c }) => c / nf.sqrt(),
            Param::Rule(HeightRule::Local { base, c, exponent }) => base + c * nf.powf(-exponent),
        }
    }
}

/// Distribution description as found in scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DistSpec {
    Normal {
        #[serde(default = "zero")]
        mean: Param,
        #[serde(default = "one")]
        sd: Param,
    },
    Uniform {
        low: Param,
        high: Param,
    },
    Exponential {
        #[serde(default = "one")]
        rate: Param,
    },
    StudentT {
        df: Param,
    },
    /// Uniform resampling from a fixed list.
    Tabulated {
        values: Vec<f64>,
    },
    /// Standard bivariate normal with correlation `rho`.
    BivariateNormal {
        rho: Param,
    },
    /// `shift + scale·X`, componentwise for pairs.
    Affine {
        base: Box<DistSpec>,
        #[serde(default = "zero")]
        shift: Param,
        #[serde(default = "one")]
        scale: Param,
    },
    /// Separate shift and scale per component of a bivariate law.
    ComponentAffine {
        base: Box<DistSpec>,
        shift: [f64; 2],
        scale: [f64; 2],
    },
}

fn zero() -> Param {
    Param::Value(0.0)
}

fn one() -> Param {
    Param::Value(1.0)
}

impl DistSpec {
    pub fn normal(mean: f64, sd: f64) -> Self {
        DistSpec::Normal {
            mean: mean.into(),
            sd: sd.into(),
        }
    }

    pub fn uniform(low: f64, high: f64) -> Self {
        DistSpec::Uniform {
            low: low.into(),
            high: high.into(),
        }
    }

    pub fn bivariate_normal(rho: f64) -> Self {
        DistSpec::BivariateNormal { rho: rho.into() }
    }

    pub fn affine(base: DistSpec, shift: f64, scale: f64) -> Self {
        DistSpec::Affine {
            base: Box::new(base),
            shift: shift.into(),
            scale: scale.into(),
        }
    }

    /// Evaluates height rules at sample size `n` and validates parameters.
    pub fn resolve(&self, n: usize) -> Result<Law> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Config(format!("{name} must be finite, got {v}")))
            }
        };
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        Ok(match self {
            DistSpec::Normal { mean, sd } => Law::Normal {
                mean: finite("mean", mean.resolve(n))?,
                sd: positive("sd", sd.resolve(n))?,
            },
            DistSpec::Uniform { low, high } => {
                let (a, b) = (
                    finite("low", low.resolve(n))?,
                    finite("high", high.resolve(n))?,
                );
                if a >= b {
                    return Err(Error::Config(format!(
                        "uniform needs low < high, got {a} and {b}"
                    )));
                }
                Law::Uniform { low: a, high: b }
            }
            DistSpec::Exponential { rate } => {
                let rate = positive("rate", rate.resolve(n))?;
                Law::Exponential(Exp::new(rate).map_err(|e| Error::Config(e.to_string()))?)
            }
            DistSpec::StudentT { df } => {
                let df = positive("df", df.resolve(n))?;
                Law::StudentT(StudentT::new(df).map_err(|e| Error::Config(e.to_string()))?)
            }
            DistSpec::Tabulated { values } => {
                if values.is_empty() {
                    return Err(Error::Config("tabulated distribution has no values".into()));
                }
                if let Some(i) = values.iter().position(|v| !v.is_finite()) {
                    return Err(Error::NonFinite { index: i });
                }
                Law::Tabulated(values.clone())
            }
            DistSpec::BivariateNormal { rho } => bivariate_normal_law(rho.resolve(n))?,
            DistSpec::Affine { base, shift, scale } => {
                let base = base.resolve(n)?;
                let shift = finite("shift", shift.resolve(n))?;
                let scale = finite("scale", scale.resolve(n))?;
                Law::Affine {
                    base: Box::new(base),
                    shift: [shift; 2],
                    scale: [scale; 2],
                }
            }
            DistSpec::ComponentAffine { base, shift, scale } => {
                let base = base.resolve(n)?;
                if base.dimension() != Dimension::Bivariate {
                    return Err(Error::Config(
                        "component_affine needs a bivariate base".into(),
                    ));
                }
                for v in shift.iter().chain(scale) {
                    finite("component_affine parameter", *v)?;
                }
                Law::Affine {
                    base: Box::new(base),
                    shift: *shift,
                    scale: *scale,
                }
            }
        })
    }
}

/// Parses the command-line form `family:p1,p2,...`.
///
/// Families: `normal:mean,sd`, `uniform:low,high`, `exponential:rate`,
/// `student_t:df` (or `t:df`), `bvnormal:rho`.
impl FromStr for DistSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (family, rest) = s.split_once(':').unwrap_or((s, ""));
        let params: Vec<f64> = if rest.trim().is_empty() {
            Vec::new()
        } else {
            rest.split(',')
                .map(|p| {
                    p.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Config(format!("bad parameter `{p}` in `{s}`")))
                })
                .collect::<Result<_>>()?
        };
        let arity = |k: usize| {
            if params.len() == k {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "`{family}` takes {k} parameter(s), got {}",
                    params.len()
                )))
            }
        };
        match family.trim() {
            "normal" => {
                arity(2)?;
                Ok(DistSpec::normal(params[0], params[1]))
            }
            "uniform" => {
                arity(2)?;
                Ok(DistSpec::uniform(params[0], params[1]))
            }
            "exponential" | "exp" => {
                arity(1)?;
                Ok(DistSpec::Exponential {
                    rate: params[0].into(),
                })
            }
            "student_t" | "t" => {
                arity(1)?;
                Ok(DistSpec::StudentT {
                    df: params[0].into(),
                })
            }
            "bvnormal" | "bivariate_normal" => {
                arity(1)?;
                Ok(DistSpec::bivariate_normal(params[0]))
            }
            other => Err(Error::Config(format!(
                "unknown distribution family `{other}`"
            ))),
        }
    }
}

/// A fully parameterized distribution ready for sampling.
#[derive(Debug, Clone, PartialEq)]
pub enum Law {
    Normal {
        mean: f64,
        sd: f64,
    },
    Uniform {
        low: f64,
        high: f64,
    },
    Exponential(Exp<f64>),
    StudentT(StudentT<f64>),
    Tabulated(Vec<f64>),
    BivariateNormal {
        rho: f64,
        cofactor: f64,
    },
    Affine {
        base: Box<Law>,
        shift: [f64; 2],
        scale: [f64; 2],
    },
}

fn bivariate_normal_law(rho: f64) -> Result<Law> {
    if rho.is_nan() || rho.abs() >= 1.0 {
        return Err(Error::Domain(format!(
            "correlation must satisfy |rho| < 1, got {rho}"
        )));
    }
    Ok(Law::BivariateNormal {
        rho,
        cofactor: (1.0 - rho * rho).sqrt(),
    })
}

impl Law {
    pub fn dimension(&self) -> Dimension {
        match self {
            Law::BivariateNormal { .. } => Dimension::Bivariate,
            Law::Affine { base, .. } => base.dimension(),
            _ => Dimension::Univariate,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Observation {
        match self {
            Law::Normal { mean, sd } => {
                let z: f64 = StandardNormal.sample(rng);
                Observation::Scalar(mean + sd * z)
            }
            Law::Uniform { low, high } => {
                let u: f64 = rng.random();
                Observation::Scalar(low + (high - low) * u)
            }
            Law::Exponential(d) => Observation::Scalar(d.sample(rng)),
            Law::StudentT(d) => Observation::Scalar(d.sample(rng)),
            Law::Tabulated(values) => {
                Observation::Scalar(values[rng.random_range(0..values.len())])
            }
            Law::BivariateNormal { rho, cofactor } => {
                let z1: f64 = StandardNormal.sample(rng);
                let z2: f64 = StandardNormal.sample(rng);
                Observation::Pair([z1, rho * z1 + cofactor * z2])
            }
            Law::Affine { base, shift, scale } => match base.sample(rng) {
                Observation::Scalar(x) => Observation::Scalar(shift[0] + scale[0] * x),
                Observation::Pair([x, y]) => {
                    Observation::Pair([shift[0] + scale[0] * x, shift[1] + scale[1] * y])
                }
            },
        }
    }
}

impl fmt::Display for Law {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Law::Normal { mean, sd } => write!(f, "normal({mean}, {sd})"),
            Law::Uniform { low, high } => write!(f, "uniform({low}, {high})"),
            Law::Exponential(_) => f.write_str("exponential"),
            Law::StudentT(_) => f.write_str("student_t"),
            Law::Tabulated(v) => write!(f, "tabulated({} values)", v.len()),
            Law::BivariateNormal { rho, .. } => write!(f, "bivariate_normal({rho})"),
            Law::Affine { base, shift, scale } => write!(f, "{shift:?} + {scale:?}·{base}"),
        }
    }
}

/// A law paired with its own generator.
#[derive(Debug, Clone)]
pub struct Sampler {
    law: Law,
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(law: Law, seed: u64) -> Self {
        Self {
            law,
            rng: substream(seed, 0),
        }
    }

    pub fn law(&self) -> &Law {
        &self.law
    }

    pub fn draw(&mut self) -> Observation {
        self.law.sample(&mut self.rng)
    }

    pub fn series(&mut self, n: usize) -> Series {
        let obs: Vec<Observation> = (0..n).map(|_| self.draw()).collect();
        Series::from_observations(&obs).expect("laws produce finite values of one dimension")
    }
}

/// Sampler for `(Z₁, ρZ₁ + √(1-ρ²)Z₂)` with `Z₁, Z₂` iid standard normal.
pub fn bivariate_normal_sampler(rho: f64, seed: u64) -> Result<Sampler> {
    Ok(Sampler::new(bivariate_normal_law(rho)?, seed))
}
