use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("node coefficients are not unitary (defect {defect:.3e})")]
    NotUnitary { defect: f64 },

    #[error("override for plane {plane} lies outside a blade of {planes} planes")]
    OverrideOutOfRange { plane: usize, planes: usize },

    #[error("path enumeration over {planes} planes refused (limit {limit})")]
    OracleTooLarge { planes: usize, limit: usize },

    #[error("undefined contrast: {0}")]
    UndefinedContrast(String),

    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),
}
