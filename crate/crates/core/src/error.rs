use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    /// J fails to square to minus the identity at the evaluation point.
    #[error("not an almost-complex structure at {point:?}: |J^2 + I| = {deviation:e}")]
    Structure { point: Vec<f64>, deviation: f64 },

    #[error("metric error: {0}")]
    Metric(String),

    #[error("degenerate plane: gram determinant {gram:e} is below {threshold:e}")]
    DegeneratePlane { gram: f64, threshold: f64 },

    #[error("dimension {0} is not admissible here (almost-complex structures need even dimension)")]
    Dimension(usize),

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("usage error: {0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Shape { expected, got })
    }
}
