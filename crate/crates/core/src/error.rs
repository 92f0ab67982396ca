use thiserror::Error;

/// Errors produced by the change-point machinery.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("sample too small: need at least {needed} observations, got {got}")]
    SampleTooSmall { needed: usize, got: usize },

    #[error("degenerate long-run variance estimate ({value})")]
    DegenerateVariance { value: f64 },

    #[error("non-finite observation at index {index}")]
    NonFinite { index: usize },

    #[error("dimension mismatch: kernel `{kernel}` expects {expected} data, series is {found}")]
    DimensionMismatch {
        kernel: String,
        expected: &'static str,
        found: &'static str,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("kernel `{0}` failed the symmetry spot check")]
    AsymmetricKernel(String),
}

pub type Result<T> = std::result::Result<T, Error>;
