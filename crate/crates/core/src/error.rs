use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix has numerical rank {rank}, expected at most {expected}")]
    Rank { rank: usize, expected: usize },

    #[error("penalty matrix is rank deficient, cannot use a zero multiplier")]
    SingularPenalty,

    #[error("bisection on the power multiplier failed: {0}")]
    BisectionFailure(String),

    #[error("finite-difference stencil leaves the PSD cone at t = {t}")]
    StencilInfeasible { t: f64 },

    #[error("no rank-reducing direction exists for rank {rank}")]
    NoDirection { rank: usize },

    #[error("initial point is infeasible: {0}")]
    InfeasibleInit(String),

    #[error("user {cell}/{index} has a zero direct channel")]
    ZeroChannel { cell: usize, index: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),

    #[error("invalid value: {0}")]
    Invalid(String),

    #[error("config error at {location}: {message}")]
    Config { location: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable tag, used by the CLI's JSON error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Rank { .. } => "rank",
            Error::SingularPenalty => "singular_penalty",
            Error::BisectionFailure(_) => "bisection_failure",
            Error::StencilInfeasible { .. } => "stencil_infeasible",
            Error::NoDirection { .. } => "no_direction",
            Error::InfeasibleInit(_) => "infeasible_init",
            Error::ZeroChannel { .. } => "zero_channel",
            Error::Dimension(_) => "dimension",
            Error::DegenerateChannel(_) => "degenerate_channel",
            Error::Invalid(_) => "invalid",
            Error::Config { .. } => "config",
            Error::Io(_) => "io",
        }
    }
}
