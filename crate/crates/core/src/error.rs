use thiserror::Error;

/// Errors raised by the plants, controllers and experiment machinery.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Static configuration is inconsistent (bad geometry, infeasible bounds, ...).
    #[error("configuration error: {0}")]
    Config(String),
    /// A caller broke an operation's precondition at run time.
    #[error("contract violation: {0}")]
    Contract(String),
    /// A named detector, link, intersection or metric does not exist.
    #[error("unknown {kind} `{id}`")]
    Lookup { kind: &'static str, id: String },
    /// Argument outside a function's mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// A simulation failed for a particular configuration / seed.
    #[error("run `{config}` with seed {seed} failed: {source}")]
    Run {
        config: String,
        seed: u64,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

pub(crate) fn contract<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Contract(msg.into()))
}
