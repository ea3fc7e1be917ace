use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    Dimensions(String),
    #[error("unknown vertex ({0},{1})")]
    UnknownVertex(i32, i32),
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),
    #[error("inadmissible boundary condition")]
    Inadmissible,
    #[error("desk-scale guard exceeded: {0}")]
    Guard(String),
    #[error("illegal move: {0}")]
    IllegalMove(String),
    #[error("no path between configurations")]
    NoPath,
    #[error("inconsistent bisector configuration: {0}")]
    InconsistentBisector(String),
    #[error("mismatched inputs: {0}")]
    Mismatch(String),
    #[error("non-contractible cycle")]
    NonContractible,
    #[error("not reversible (residual {0:e})")]
    NotReversible(f64),
    #[error("not stationary (residual {0:e})")]
    NotStationary(f64),
    #[error("reducible kernel ({0} components)")]
    Reducible(usize),
    #[error("path leaves the base support at step ({0},{1})")]
    OffSupport(usize, usize),
    #[error("non-planar input: {0}")]
    NonPlanar(String),
    #[error("invalid argument: {0}")]
    Argument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
