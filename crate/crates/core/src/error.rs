use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("exploration length T_e = {t_e} is outside 1..={horizon}")]
    PhaseOutOfRange { t_e: usize, horizon: usize },

    #[error("arrival stream exhausted after {consumed} draws ({required} required)")]
    StreamExhausted { consumed: usize, required: usize },

    #[error(
        "horizon T = {horizon} too small: exploration stepsize {alpha_e:.6e} exceeds the \
         admissible bound 2*d_lo/(3*m*(a_max+d_hi)^2) = {bound:.6e}"
    )]
    HorizonTooSmall {
        horizon: usize,
        alpha_e: f64,
        bound: f64,
    },

    #[error("simplex failed: {reason}\n{dump}")]
    Simplex { reason: String, dump: String },

    #[error("primal LP infeasible: resource vector has a negative entry ({0})")]
    Infeasible(String),

    #[error("growth fit needs positive values, got {value} at T = {horizon}")]
    NonPositiveFit { horizon: usize, value: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
