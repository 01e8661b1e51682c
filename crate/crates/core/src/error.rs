use core::fmt;

/// Errors raised by the solver library.
///
/// Iteration caps and `+inf` objective values are *not* errors; they are
/// reported through status fields and `f64::INFINITY` respectively.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A sample or grid point lies outside the support of the basis.
    Domain { value: f64, reason: &'static str },
    /// An argument violates a documented precondition.
    Argument(&'static str),
    /// Vector or matrix dimensions disagree.
    DimensionMismatch { expected: usize, found: usize },
    /// A column of the evaluation matrix is numerically zero; the objective
    /// would be `+inf` for every feasible weight vector.
    DegenerateColumn { sample: usize },
    /// All samples coincide, so no range can be formed.
    DegenerateRange,
    /// The objective is `+inf` at the requested point.
    InfeasiblePoint,
    /// The starting point does not satisfy the shape constraint.
    InfeasibleStart,
    /// Operation is only defined for the unit-variance Gaussian location basis.
    UnsupportedBasis,
    /// The atom grid does not bracket the samples.
    NotBracketing { min_atom: f64, max_atom: f64, min_sample: f64, max_sample: f64 },
    /// The certificate quantity is invalid (e.g. Γ below N).
    InvalidCertificate(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain { value, reason } => write!(f, "domain error: {value} ({reason})"),
            Error::Argument(msg) => write!(f, "invalid argument: {msg}"),
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::DegenerateColumn { sample } => {
                write!(f, "sample {sample} has every basis value below 1e-300; the likelihood is zero for all weights")
            }
            Error::DegenerateRange => write!(f, "all samples are identical; cannot form a grid"),
            Error::InfeasiblePoint => write!(f, "objective is +inf at the given point"),
            Error::InfeasibleStart => write!(f, "starting point violates the shape constraint"),
            Error::UnsupportedBasis => {
                write!(f, "operation requires a Gaussian location basis with sigma = 1")
            }
            Error::NotBracketing { min_atom, max_atom, min_sample, max_sample } => write!(
                f,
                "atom grid [{min_atom}, {max_atom}] does not bracket the samples [{min_sample}, {max_sample}]; \
                 the bounds require min atom <= min sample and max sample <= max atom"
            ),
            Error::InvalidCertificate(msg) => write!(f, "invalid certificate: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
