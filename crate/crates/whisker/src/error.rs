use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("resonant mode {mode:?}: divisor modulus {modulus:e}")]
    Resonance { mode: Vec<i64>, modulus: f64 },
    #[error("singular matrix at node {node}: condition estimate {cond:e}")]
    Singular { node: usize, cond: f64 },
    #[error("trajectory left the domain at t = {t}")]
    Domain { t: f64 },
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("non-finite value encountered in {0}")]
    NonFinite(String),
    #[error("iteration diverged at step {step}: error grew from {from:e} to {to:e}")]
    Divergence { step: usize, from: f64, to: f64 },
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
