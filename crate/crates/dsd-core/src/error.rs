//! Crate-wide error type.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Total end-use energy is zero; the factor identity is undefined.
    #[error("total end-use energy is zero; factors are undefined")]
    ZeroEnergy,

    /// An end use reports emissions without energy, so its emission factor
    /// cannot be formed.
    #[error("end use `{end_use}` has zero energy but positive emissions; emission factor undefined")]
    UndefinedEmissionFactor { end_use: String },

    /// A record violates a cross-field rule (positivity, expenditure share,
    /// emissions-without-energy).
    #[error("invariant violation on `{field}`: {message}")]
    InvariantViolation { field: String, message: String },

    /// Wraps any error with the year it occurred in.
    #[error("year {year}: {source}")]
    AtYear {
        year: i32,
        #[source]
        source: Box<Error>,
    },

    /// Gaussian elimination met a pivot below threshold; the system has no
    /// usable solution.
    #[error("singular system: pivot {pivot:e} below threshold at column {column}")]
    SingularMatrix { column: usize, pivot: f64 },

    /// The two states being decomposed do not declare the same end uses.
    #[error("mismatched end uses: {left} vs {right}")]
    MismatchedEndUses { left: String, right: String },

    /// Segment count must be at least one.
    #[error("segment count must be >= 1, got {0}")]
    InvalidSegments(usize),

    /// A requested year is not part of the series.
    #[error("year {0} is not in the series")]
    UnknownYear(i32),

    /// Contribution rates need a positive base intensity.
    #[error("contribution-rate base must be positive, got {0}")]
    NonpositiveBase(f64),

    /// Logarithmic mean is only defined for positive arguments.
    #[error("logarithmic mean requires positive arguments, got ({0}, {1})")]
    NonpositiveInput(f64, f64),

    /// A factor required by the log-mean decomposition is not positive
    /// (after the small-value substitution).
    #[error("factor `{factor}` is not positive at both endpoints")]
    NonpositiveFactor { factor: String },

    /// Regression needs at least two points.
    #[error("regression needs at least {needed} points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    /// Regression abscissa has no variance.
    #[error("regression input is degenerate: all abscissa values are equal")]
    DegenerateVariance,

    /// Decarbonization efficiency needs nonzero window emissions.
    #[error("window emissions are zero; efficiency undefined")]
    ZeroEmissions,

    /// Per-floor-area scale was requested but floor area is absent.
    #[error("floor area missing for year {0}; per-floor-area scale unavailable")]
    MissingFloorArea(i32),

    /// Scenario parameters out of range.
    #[error("invalid scenario parameters: {0}")]
    InvalidRates(String),

    /// The scenario base year is not covered by the input series.
    #[error("base year {0} is not in the input series")]
    MissingBaseYear(i32),

    /// Malformed cell in an input file.
    #[error("parse error at row {row}, column `{column}`: {message}")]
    ParseError {
        row: usize,
        column: String,
        message: String,
    },

    /// Structural problem with an input file (header, manifest, units).
    #[error("schema error: {0}")]
    SchemaError(String),

    /// The year column skips a year.
    #[error("missing year {0}: series years must be contiguous")]
    GapInYears(i32),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Attach a year to any error.
    pub fn at_year(self, year: i32) -> Error {
        Error::AtYear {
            year,
            source: Box::new(self),
        }
    }

    /// True for failures of the numerical core (as opposed to input
    /// validation). CLI maps these to a distinct exit code.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::SingularMatrix { .. } => true,
            Error::AtYear { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numerical_classification_follows_wrapping() {
        let singular = Error::SingularMatrix {
            column: 0,
            pivot: 0.0,
        };
        assert!(singular.is_numerical());
        assert!(singular.at_year(2005).is_numerical());
        assert!(!Error::ZeroEnergy.is_numerical());
        assert!(!Error::ZeroEnergy.at_year(2005).is_numerical());
    }

    #[test]
    fn at_year_prefixes_message() {
        let err = Error::ZeroEnergy.at_year(2003);
        assert!(err.to_string().starts_with("year 2003:"));
    }
}
