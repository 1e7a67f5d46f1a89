use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("ill-conditioned Gram matrix (condition estimate {cond:.3e})")]
    IllConditioned { cond: f64 },
    #[error("reference channel has zero energy")]
    ZeroEnergy,
    #[error("vector has zero variance after centering")]
    ZeroVariance,
    #[error("effective BS-RIS channel is identically zero")]
    ZeroEffectiveChannel,
    #[error("memory budget exceeded: {need} entries requested, cap is {cap}")]
    MemoryBudget { need: usize, cap: usize },
    #[error("maximization failed: {0}")]
    Optimization(String),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::Invalid(msg.into())
}

pub(crate) fn ensure_finite(x: f64, what: &'static str) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}
