use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("tube radius too large: {0}")]
    TubeRadiusTooLarge(String),

    #[error("curve not injective: {0}")]
    CurveNotInjective(String),

    #[error("no path found: {0}")]
    NoPath(String),

    #[error("dimension too low: avoiding points needs a manifold of dimension >= 2")]
    DimensionTooLow,

    #[error("family mismatch: {0}")]
    FamilyMismatch(String),

    #[error("non-composable pair: beta(g) != alpha(h) (distance {distance:e})")]
    NotComposable { distance: f64 },

    #[error("ill-conditioned fiber map (condition number {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("gauge ball does not fit: {0}")]
    GaugeBall(String),

    #[error(
        "not concordant: pairs {first} and {second} share a {role}; the concordance \
         condition requires pairwise distinct sources and pairwise distinct targets"
    )]
    NotConcordant {
        first: usize,
        second: usize,
        role: &'static str,
    },

    #[error("degenerate spacing: {0}")]
    DegenerateSpacing(String),

    #[error("not independent: {0}")]
    NotIndependent(String),

    #[error("sampling failed: {0}")]
    Sampling(String),

    #[error("construction residual {residual:e} exceeds tolerance {tolerance:e}")]
    Residual { residual: f64, tolerance: f64 },

    #[error("orientation: {0}")]
    Orientation(String),

    #[error("scene: {0}")]
    Scene(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
