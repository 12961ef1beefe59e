use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} out of domain: {value}")]
    Domain { what: &'static str, value: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("branching mechanism is identically zero")]
    TrivialMechanism,
    #[error("mechanism has no inverse on [0, inf): Phi never becomes positive")]
    NoInverse,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("undetermined: {0}")]
    Undetermined(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("insufficient conditioning mass: {events} events (effective {effective:.3})")]
    InsufficientConditioning { events: usize, effective: f64 },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T: num_traits::ToPrimitive>(what: &'static str, value: T) -> Error {
    Error::Domain {
        what,
        value: value.to_f64().unwrap_or(f64::NAN),
    }
}
