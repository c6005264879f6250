use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ucum::Dimension;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error in {code:?} at position {position}: {message}")]
    Syntax {
        code: String,
        position: usize,
        message: String,
    },

    #[error("unknown unit {0:?}")]
    UnknownUnit(String),

    #[error("unknown prefix {prefix:?} in {token:?}")]
    UnknownPrefix { prefix: String, token: String },

    #[error("affine unit {0:?} cannot be prefixed, raised to a power, or combined with other units")]
    AffineInCompound(String),

    #[error("cannot convert {source_code:?} ({source_dimension}) to {target_code:?} ({target_dimension})")]
    IncommensurableUnits {
        source_code: String,
        target_code: String,
        source_dimension: Dimension,
        target_dimension: Dimension,
    },

    #[error("value is not finite")]
    NonFiniteValue,

    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("duplicate code {0:?}")]
    DuplicateCode(String),

    #[error("no unit metadata for {0:?}")]
    MissingMetadata(String),

    #[error("unknown quantity kind {0:?}")]
    UnknownQuantityKind(String),

    #[error("unit {unit:?} ({unit_dimension}) does not measure quantity kind {quantity_kind:?} ({kind_dimension})")]
    DimensionMismatch {
        unit: String,
        quantity_kind: String,
        unit_dimension: Dimension,
        kind_dimension: Dimension,
    },

    #[error("unit {unit:?} maps to several quantity kinds ({candidates}); name one explicitly")]
    AmbiguousQuantityKind { unit: String, candidates: String },

    #[error("{kind} {id:?} not found")]
    NotFound { kind: &'static str, id: String },

    #[error("{kind} {id:?} does not exist")]
    DanglingReference { kind: &'static str, id: String },

    #[error("unknown property {0:?}")]
    UnknownProperty(String),

    #[error("empty interval [{min}, {max}]")]
    EmptyInterval { min: f64, max: f64 },

    #[error("invalid request: {0}")]
    Invalid(String),

    #[error("duplicate input id {0:?}")]
    DuplicateInput(String),

    #[error("unsupported export format {0:?}")]
    UnsupportedFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Machine-readable error codes. The set is closed; clients may match on it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ErrorCode {
    BadSyntax,
    UnknownUnit,
    UnknownPrefix,
    AffineInCompound,
    IncommensurableUnits,
    NonFiniteValue,
    FormatError,
    DuplicateCode,
    MissingMetadata,
    UnknownQuantityKind,
    DimensionMismatch,
    AmbiguousQuantityKind,
    NotFound,
    DanglingReference,
    UnknownProperty,
    EmptyInterval,
    InvalidRequest,
    DuplicateInput,
    UnsupportedFormat,
    IoError,
}

/// Broad failure class, used for HTTP status and process exit code mapping.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    NotFound,
    Incommensurable,
    Internal,
}

impl ErrorCode {
    pub const ALL: [ErrorCode; 20] = [
        ErrorCode::BadSyntax,
        ErrorCode::UnknownUnit,
        ErrorCode::UnknownPrefix,
        ErrorCode::AffineInCompound,
        ErrorCode::IncommensurableUnits,
        ErrorCode::NonFiniteValue,
        ErrorCode::FormatError,
        ErrorCode::DuplicateCode,
        ErrorCode::MissingMetadata,
        ErrorCode::UnknownQuantityKind,
        ErrorCode::DimensionMismatch,
        ErrorCode::AmbiguousQuantityKind,
        ErrorCode::NotFound,
        ErrorCode::DanglingReference,
        ErrorCode::UnknownProperty,
        ErrorCode::EmptyInterval,
        ErrorCode::InvalidRequest,
        ErrorCode::DuplicateInput,
        ErrorCode::UnsupportedFormat,
        ErrorCode::IoError,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::BadSyntax => "BAD_SYNTAX",
            ErrorCode::UnknownUnit => "UNKNOWN_UNIT",
            ErrorCode::UnknownPrefix => "UNKNOWN_PREFIX",
            ErrorCode::AffineInCompound => "AFFINE_IN_COMPOUND",
            ErrorCode::IncommensurableUnits => "INCOMMENSURABLE_UNITS",
            ErrorCode::NonFiniteValue => "NON_FINITE_VALUE",
            ErrorCode::FormatError => "FORMAT_ERROR",
            ErrorCode::DuplicateCode => "DUPLICATE_CODE",
            ErrorCode::MissingMetadata => "MISSING_METADATA",
            ErrorCode::UnknownQuantityKind => "UNKNOWN_QUANTITY_KIND",
            ErrorCode::DimensionMismatch => "DIMENSION_MISMATCH",
            ErrorCode::AmbiguousQuantityKind => "AMBIGUOUS_QUANTITY_KIND",
            ErrorCode::NotFound => "NOT_FOUND",
            ErrorCode::DanglingReference => "DANGLING_REFERENCE",
            ErrorCode::UnknownProperty => "UNKNOWN_PROPERTY",
            ErrorCode::EmptyInterval => "EMPTY_INTERVAL",
            ErrorCode::InvalidRequest => "INVALID_REQUEST",
            ErrorCode::DuplicateInput => "DUPLICATE_INPUT",
            ErrorCode::UnsupportedFormat => "UNSUPPORTED_FORMAT",
            ErrorCode::IoError => "IO_ERROR",
        }
    }

    pub fn class(self) -> ErrorClass {
        match self {
            ErrorCode::UnknownUnit
            | ErrorCode::UnknownPrefix
            | ErrorCode::MissingMetadata
            | ErrorCode::UnknownQuantityKind
            | ErrorCode::NotFound
            | ErrorCode::UnknownProperty => ErrorClass::NotFound,
            ErrorCode::IncommensurableUnits => ErrorClass::Incommensurable,
            ErrorCode::IoError => ErrorClass::Internal,
            _ => ErrorClass::Validation,
        }
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Error {
    pub fn code(&self) -> ErrorCode {
        match self {
            Error::Syntax { .. } => ErrorCode::BadSyntax,
            Error::UnknownUnit(_) => ErrorCode::UnknownUnit,
            Error::UnknownPrefix { .. } => ErrorCode::UnknownPrefix,
            Error::AffineInCompound(_) => ErrorCode::AffineInCompound,
            Error::IncommensurableUnits { .. } => ErrorCode::IncommensurableUnits,
            Error::NonFiniteValue => ErrorCode::NonFiniteValue,
            Error::Format { .. } => ErrorCode::FormatError,
            Error::DuplicateCode(_) => ErrorCode::DuplicateCode,
            Error::MissingMetadata(_) => ErrorCode::MissingMetadata,
            Error::UnknownQuantityKind(_) => ErrorCode::UnknownQuantityKind,
            Error::DimensionMismatch { .. } => ErrorCode::DimensionMismatch,
            Error::AmbiguousQuantityKind { .. } => ErrorCode::AmbiguousQuantityKind,
            Error::NotFound { .. } => ErrorCode::NotFound,
            Error::DanglingReference { .. } => ErrorCode::DanglingReference,
            Error::UnknownProperty(_) => ErrorCode::UnknownProperty,
            Error::EmptyInterval { .. } => ErrorCode::EmptyInterval,
            Error::Invalid(_) => ErrorCode::InvalidRequest,
            Error::DuplicateInput(_) => ErrorCode::DuplicateInput,
            Error::UnsupportedFormat(_) => ErrorCode::UnsupportedFormat,
            Error::Io(_) => ErrorCode::IoError,
        }
    }

    /// Structured details for API error bodies (dimension vectors, parse position).
    pub fn details(&self) -> Option<serde_json::Value> {
        match self {
            Error::Syntax { position, code, .. } => {
                Some(serde_json::json!({ "position": position, "code": code }))
            }
            Error::IncommensurableUnits {
                source_dimension,
                target_dimension,
                ..
            } => Some(serde_json::json!({
                "sourceDimension": source_dimension.exponents(),
                "targetDimension": target_dimension.exponents(),
            })),
            Error::DimensionMismatch {
                unit_dimension,
                kind_dimension,
                ..
            } => Some(serde_json::json!({
                "unitDimension": unit_dimension.exponents(),
                "quantityKindDimension": kind_dimension.exponents(),
            })),
            Error::Format { line, .. } => Some(serde_json::json!({ "line": line })),
            _ => None,
        }
    }
}
