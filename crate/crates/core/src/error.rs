use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: expected (m={m}, N={n}), got (m={got_m}, N={got_n})")]
    ShapeMismatch {
        m: usize,
        n: usize,
        got_m: usize,
        got_n: usize,
    },
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("truncation N={n} must exceed bandwidth {d}")]
    TruncationTooSmall { n: usize, d: usize },
    #[error("family {family} is not orthonormal (Gram deviation {deviation:.3e})")]
    NotOrthonormal { family: &'static str, deviation: f64 },
    #[error("subspace not contained (residual {0:.3e})")]
    NotContained(f64),
    #[error("symbol has negative Fourier powers")]
    NotAnalytic,
    #[error("symbol is not inner (deviation {0:.3e})")]
    NotInner(f64),
    #[error("symbol is not invertible on the closed disk (min |det| = {0:.3e})")]
    NotInvertible(f64),
    #[error("constant coefficient is singular")]
    SingularConstantTerm,
    #[error("series inversion residual {0:.3e} exceeds tolerance")]
    InversionResidual(f64),
    #[error("zero polynomial")]
    ZeroPolynomial,
    #[error("root {re:.6}{im:+.6}i lies within the refusal band of the unit circle")]
    RootOnCircle { re: f64, im: f64 },
    #[error("symbol is not diagonal")]
    NotDiagonal,
    #[error("model space projections disagree (deviation {0:.3e})")]
    ModelSpaceMismatch(f64),
    #[error("vector is not in the subspace (residual {0:.3e})")]
    NotInSubspace(f64),
    #[error("frame deficient: reconstruction residual {0:.3e}")]
    FrameDeficient(f64),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("eigenvalue computation failed")]
    Eigen,
}

pub type Result<T> = std::result::Result<T, Error>;
