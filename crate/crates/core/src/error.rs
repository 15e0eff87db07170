use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A table or problem dimension was zero.
    Dimension { what: &'static str },
    /// An argument was negative, NaN, or outside its allowed range.
    Domain { what: &'static str, value: f64 },
    /// The brute-force enumeration would exceed its evaluation cap.
    Budget { evaluations: u64, cap: u64 },
    /// Unknown sweep parameter or policy name.
    UnknownName { kind: &'static str, name: alloc::string::String },
    /// Structurally invalid input (mismatched lengths and similar).
    Invalid(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Dimension { what } => write!(f, "invalid dimension: {what} must be at least 1"),
            Error::Domain { what, value } => write!(f, "{what} out of range: {value}"),
            Error::Budget { evaluations, cap } => write!(
                f,
                "enumeration budget exceeded: {evaluations} evaluations requested, cap is {cap}"
            ),
            Error::UnknownName { kind, name } => write!(f, "unknown {kind} `{name}`"),
            Error::Invalid(msg) => f.write_str(msg),
        }
    }
}

impl core::error::Error for Error {}

/// Rejects NaN and negative values.
pub(crate) fn non_negative(what: &'static str, value: f64) -> Result<f64> {
    if value >= 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Domain { what, value })
    }
}

pub(crate) fn unit_interval(what: &'static str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::Domain { what, value })
    }
}
