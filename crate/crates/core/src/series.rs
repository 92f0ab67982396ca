//! Observed samples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single observation: a real scalar or a pair of reals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Observation {
    Scalar(f64),
    Pair([f64; 2]),
}

impl Observation {
    pub fn is_finite(&self) -> bool {
        match self {
            Observation::Scalar(x) => x.is_finite(),
            Observation::Pair([a, b]) => a.is_finite() && b.is_finite(),
        }
    }

    pub fn dimension(&self) -> Dimension {
        match self {
            Observation::Scalar(_) => Dimension::Univariate,
            Observation::Pair(_) => Dimension::Bivariate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Univariate,
    Bivariate,
}

impl Dimension {
    pub fn name(self) -> &'static str {
        match self {
            Dimension::Univariate => "univariate",
            Dimension::Bivariate => "bivariate",
        }
    }
}

/// An ordered, finite sample `X_1, ..., X_n`.
///
/// Construction rejects NaN and infinite values, so every consumer can
/// assume finiteness.
#[derive(Debug, Clone, PartialEq)]
pub enum Series {
    Univariate(Vec<f64>),
    Bivariate(Vec<[f64; 2]>),
}

impl Series {
    pub fn univariate(values: Vec<f64>) -> Result<Self> {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Series::Univariate(values))
    }

    pub fn bivariate(values: Vec<[f64; 2]>) -> Result<Self> {
        if let Some(index) = values
            .iter()
            .position(|[a, b]| !a.is_finite() || !b.is_finite())
        {
            return Err(Error::NonFinite { index });
        }
        Ok(Series::Bivariate(values))
    }

    /// Builds a series from observations of a single dimensionality.
    pub fn from_observations(obs: &[Observation]) -> Result<Self> {
        let Some(first) = obs.first() else {
            return Ok(Series::Univariate(Vec::new()));
        };
        match first.dimension() {
            Dimension::Univariate => {
                let mut out = Vec::with_capacity(obs.len());
                for (i, o) in obs.iter().enumerate() {
                    match o {
                        Observation::Scalar(x) => out.push(*x),
                        Observation::Pair(_) => {
                            return Err(Error::Config(format!(
                                "observation {i} is bivariate in a univariate series"
                            )))
                        }
                    }
                }
                Series::univariate(out)
            }
            Dimension::Bivariate => {
                let mut out = Vec::with_capacity(obs.len());
                for (i, o) in obs.iter().enumerate() {
                    match o {
                        Observation::Pair(p) => out.push(*p),
                        Observation::Scalar(_) => {
                            return Err(Error::Config(format!(
                                "observation {i} is univariate in a bivariate series"
                            )))
                        }
                    }
                }
                Series::bivariate(out)
            }
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Series::Univariate(v) => v.len(),
            Series::Bivariate(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dimension(&self) -> Dimension {
        match self {
            Series::Univariate(_) => Dimension::Univariate,
            Series::Bivariate(_) => Dimension::Bivariate,
        }
    }

    #[inline]
    pub fn get(&self, i: usize) -> Observation {
        match self {
            Series::Univariate(v) => Observation::Scalar(v[i]),
            Series::Bivariate(v) => Observation::Pair(v[i]),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Observation> + '_ {
        (0..self.len()).map(move |i| self.get(i))
    }

    pub fn reversed(&self) -> Series {
        match self {
            Series::Univariate(v) => Series::Univariate(v.iter().rev().copied().collect()),
            Series::Bivariate(v) => Series::Bivariate(v.iter().rev().copied().collect()),
        }
    }

    /// Multiplies every coordinate by `c`.
    pub fn scaled(&self, c: f64) -> Series {
        match self {
            Series::Univariate(v) => Series::Univariate(v.iter().map(|x| c * x).collect()),
            Series::Bivariate(v) => {
                Series::Bivariate(v.iter().map(|[a, b]| [c * a, c * b]).collect())
            }
        }
    }

    /// Adds `c` to every coordinate.
    pub fn shifted(&self, c: f64) -> Series {
        match self {
            Series::Univariate(v) => Series::Univariate(v.iter().map(|x| x + c).collect()),
            Series::Bivariate(v) => {
                Series::Bivariate(v.iter().map(|[a, b]| [a + c, b + c]).collect())
            }
        }
    }

    pub fn as_univariate(&self) -> Option<&[f64]> {
        match self {
            Series::Univariate(v) => Some(v),
            Series::Bivariate(_) => None,
        }
    }

    pub fn as_bivariate(&self) -> Option<&[[f64; 2]]> {
        match self {
            Series::Bivariate(v) => Some(v),
            Series::Univariate(_) => None,
        }
    }
}
