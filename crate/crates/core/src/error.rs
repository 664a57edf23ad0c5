use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure class, used by the command-line driver to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numeric,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Config => 2,
            ErrorClass::Data => 3,
            ErrorClass::Numeric => 4,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("config: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("duplicate year {0}")]
    DuplicateYear(i32),

    #[error("year gap: {after} is followed by {next}")]
    YearGap { after: i32, next: i32 },

    #[error("non-finite value in year {year}")]
    NonFinite { year: i32 },

    #[error("column `{0}` has no available values")]
    AllMissingColumn(String),

    #[error("duplicate or empty proxy id `{0}`")]
    BadProxyId(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("column `{id}` has zero variance over the calibration years")]
    ZeroVariance { id: String },

    #[error("column `{id}` has {available} available calibration years, need at least 2")]
    TooFewObservations { id: String, available: usize },

    #[error("holdout length {holdout} must be positive and shorter than the {length}-year axis")]
    HoldoutTooLong { holdout: usize, length: usize },

    #[error("series too short: {length} values, need at least {required}")]
    SeriesTooShort { length: usize, required: usize },

    #[error("series has zero variance")]
    ZeroVarianceSeries,

    #[error("null model `{0}` needs fitted AR1 parameters")]
    MissingAr1Params(&'static str),

    #[error("invalid AR1 parameters: {0}")]
    InvalidAr1(String),

    #[error("empty calibration set")]
    EmptyCalibration,

    #[error("proxy `{id}` unavailable in calibration year {year}")]
    UnavailableOnCalibration { id: String, year: i32 },

    #[error("no proxy is complete over the calibration years")]
    NoUsableProxies,

    #[error("lasso did not converge after {sweeps} sweeps (max change {max_change:e})")]
    NonConvergence { sweeps: usize, max_change: f64 },

    #[error("requested {k} principal components but the calibration matrix has rank {rank}")]
    RankExceeded { k: usize, rank: usize },

    #[error("predictor `{id}` missing in year {year}")]
    MissingPredictor { id: String, year: i32 },

    #[error("year {0} is outside the network axis")]
    YearOutOfRange(i32),

    #[error("model is not a principal components regression")]
    NotPcr,

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("empty input")]
    EmptyInput,

    #[error("holdout RMSE of the intercept model is zero; RE undefined")]
    DegenerateIntercept,

    #[error("calibration matrix is rank deficient: {0}")]
    RankDeficient(String),

    #[error("residual covariance is singular")]
    SingularCovariance,

    #[error("{0}")]
    Numeric(String),

    #[error("split starting {start}: {source}")]
    AtSplit {
        start: i32,
        #[source]
        source: Box<Error>,
    },

    #[error("trial {trial}: {source}")]
    AtTrial {
        trial: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("column `{id}`: {source}")]
    AtColumn {
        id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{module}: {source}")]
    InModule {
        module: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn at_split(self, start: i32) -> Self {
        Error::AtSplit {
            start,
            source: Box::new(self),
        }
    }

    pub fn at_trial(self, trial: u64) -> Self {
        Error::AtTrial {
            trial,
            source: Box::new(self),
        }
    }

    pub fn at_column(self, id: impl Into<String>) -> Self {
        Error::AtColumn {
            id: id.into(),
            source: Box::new(self),
        }
    }

    pub fn in_module(self, module: &'static str) -> Self {
        Error::InModule {
            module,
            source: Box::new(self),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) | Error::HoldoutTooLong { .. } => ErrorClass::Config,
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::DuplicateYear(_)
            | Error::YearGap { .. }
            | Error::NonFinite { .. }
            | Error::AllMissingColumn(_)
            | Error::BadProxyId(_)
            | Error::InvalidData(_)
            | Error::UnavailableOnCalibration { .. }
            | Error::NoUsableProxies
            | Error::MissingPredictor { .. }
            | Error::YearOutOfRange(_)
            | Error::LengthMismatch(..)
            | Error::EmptyInput
            | Error::TooFewObservations { .. }
            | Error::SeriesTooShort { .. }
            | Error::EmptyCalibration => ErrorClass::Data,
            Error::AtSplit { source, .. }
            | Error::AtTrial { source, .. }
            | Error::AtColumn { source, .. }
            | Error::InModule { source, .. } => source.class(),
            _ => ErrorClass::Numeric,
        }
    }

    /// Innermost error with all location wrappers removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtSplit { source, .. }
            | Error::AtTrial { source, .. }
            | Error::AtColumn { source, .. }
            | Error::InModule { source, .. } => source.root(),
            other => other,
        }
    }
}
