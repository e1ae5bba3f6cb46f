use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("operator is not Hermitian (max |M - M†| = {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("post-selected state is orthogonal to the pre-selected state (|<f|i>| = {overlap:.3e})")]
    OrthogonalPostselection { overlap: f64 },

    #[error("observables do not commute (max |AB - BA| = {residual:.3e})")]
    NonCommuting { residual: f64 },

    #[error("observable is not involutory (max |A^2 - I| = {residual:.3e})")]
    NotInvolutory { residual: f64 },

    #[error("observable is not idempotent (max |A^2 - A| = {residual:.3e})")]
    NotIdempotent { residual: f64 },

    #[error("ket is not normalized (norm^2 = {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },

    #[error("degenerate pointer norm W = {w:.3e}")]
    DegenerateNorm { w: f64 },

    #[error("unsupported pointer monomial `{0}`")]
    UnsupportedMonomial(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grid extent {extent} too small: need at least {required}")]
    ExtentTooSmall { extent: f64, required: f64 },

    #[error("pointer shift {shift} risks wraparound on a grid of half-width {extent}")]
    ClippingRisk { shift: f64, extent: f64 },

    #[error("post-selected pointer has vanishing norm ({norm_sqr:.3e})")]
    VanishingNorm { norm_sqr: f64 },
}

impl Error {
    /// Short machine-readable tag used by the command-line front end.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NotHermitian { .. } => "not-hermitian",
            Error::DimensionMismatch { .. } => "dimension",
            Error::OrthogonalPostselection { .. } => "orthogonal-postselection",
            Error::NonCommuting { .. } => "non-commuting",
            Error::NotInvolutory { .. } => "not-involutory",
            Error::NotIdempotent { .. } => "not-idempotent",
            Error::NotNormalized { .. } => "not-normalized",
            Error::DegenerateNorm { .. } => "degenerate-norm",
            Error::UnsupportedMonomial(_) => "unsupported-monomial",
            Error::InvalidArgument(_) => "invalid-argument",
            Error::ExtentTooSmall { .. } => "extent",
            Error::ClippingRisk { .. } => "clipping",
            Error::VanishingNorm { .. } => "vanishing-norm",
        }
    }
}
